"""Tests for the training loop and its stopping rule.

The stopping rule is exercised on scripted losses and then against an
independent vectorized reference over a thousand random sequences; the
loop itself is checked for determinism, best-epoch restoration,
checkpoint pruning, and a clean divergence abort.
"""

import math
from datetime import datetime

import numpy as np
import pytest

from flowcast.dataset import Normalizer, make_windows
from flowcast.models import ModelConfig, build_model, load_checkpoint
from flowcast.series import FlowSeries, StationId
from flowcast.training import (
    EarlyStopper,
    TrainConfig,
    TrainReport,
    train,
    train_repeated,
    validation_rmse,
)

MONDAY = datetime(2024, 3, 4)


def _toy_data(n_days=3, seed=0):
    """Two stations tracing a noisy daily sinusoid, easy to learn."""
    rng = np.random.default_rng(seed)
    t = np.arange(480 * n_days)
    out = {}
    for i in range(2):
        values = 100 + 30 * np.sin(2 * np.pi * t / 480 + i) + rng.normal(0, 2, t.size)
        sid = f"{i + 1:02d}A"
        out[sid] = FlowSeries(StationId.parse(sid), MONDAY, np.round(values), None)
    return out


@pytest.fixture(scope="module")
def toy_split():
    data = _toy_data()
    train_w = make_windows(data, past_horizon=4, lead=1, ti_range=(0, 960))
    val_w = make_windows(data, past_horizon=4, lead=1, ti_range=(960, 1440))
    norm = Normalizer.fit(train_w)
    return norm.transform(train_w), norm.transform(val_w), norm


def _bpnn(seed=2):
    return build_model(ModelConfig(arch="bpnn", past_horizon=4, lead=1, hidden=8, seed=seed), 2)


class TestEarlyStopper:
    def test_scripted_losses_stop_on_third_miss(self):
        """Losses 5,4,6,7,8 with patience 3: stop after five epochs, best at 4."""
        stopper = EarlyStopper(patience=3)
        flags = [stopper.update(loss, epoch) for epoch, loss in enumerate([5, 4, 6, 7, 8])]
        assert flags == [False, False, False, False, True]
        assert stopper.best_epoch == 1

    def test_plateau_counts_as_no_improvement(self):
        stopper = EarlyStopper(patience=2)
        assert not stopper.update(3.0, 0)
        assert not stopper.update(3.0, 1)
        assert stopper.update(3.0, 2)
        assert stopper.best_epoch == 0

    def test_improvement_resets_the_streak(self):
        stopper = EarlyStopper(patience=2)
        for epoch, loss in enumerate([5, 6, 4, 7]):
            assert not stopper.update(loss, epoch)
        assert stopper.update(8, 4)
        assert stopper.best_epoch == 2

    def test_patience_must_be_positive(self):
        with pytest.raises(ValueError):
            EarlyStopper(patience=0)

    def test_agrees_with_prefix_minimum_reference(self):
        """1000 random loss sequences against an independent formulation.

        The reference derives improvements from the running prefix
        minimum instead of tracking state: epoch j improves iff
        losses[j] < min(losses[:j]), training stops at the first run of
        `patience` non-improvements, and the best epoch is the first
        attainment of the prefix minimum.
        """

        def reference(losses, patience):
            losses = np.asarray(losses, float)
            prev_best = np.concatenate(([np.inf], np.minimum.accumulate(losses)[:-1]))
            improved = losses < prev_best
            streak = 0
            for i, ok in enumerate(improved):
                streak = 0 if ok else streak + 1
                if streak >= patience:
                    return i, int(np.argmin(losses[: i + 1]))
            return None, int(np.argmin(losses)) if losses.size else -1

        rng = np.random.default_rng(99)
        for trial in range(1000):
            n = int(rng.integers(1, 40))
            patience = int(rng.integers(1, 6))
            if trial % 2 == 0:
                losses = rng.integers(0, 10, size=n).astype(float)  # heavy ties
            else:
                losses = rng.uniform(0.0, 5.0, size=n)
            stopper = EarlyStopper(patience)
            stopped_at = None
            for epoch, loss in enumerate(losses):
                if stopper.update(float(loss), epoch):
                    stopped_at = epoch
                    break
            expect_stop, expect_best = reference(losses, patience)
            assert stopped_at == expect_stop, (trial, losses, patience)
            assert stopper.best_epoch == expect_best, (trial, losses, patience)


class TestValidationRmse:
    def test_zero_model_scores_target_magnitude(self, toy_split):
        _, val_w, _ = toy_split
        model = _bpnn()
        for p in model.params():
            p.values[:] = 0.0
        expect = math.sqrt(float((val_w.targets**2).mean()))
        assert validation_rmse(model, val_w, None) == pytest.approx(expect, rel=1e-12)

    def test_normalizer_restores_vehicle_units(self, toy_split):
        _, val_w, norm = toy_split
        model = _bpnn()
        raw = validation_rmse(model, val_w, None)
        vehicles = validation_rmse(model, val_w, norm)
        assert vehicles != pytest.approx(raw)  # scales differ by construction
        preds = norm.inverse(model.forward(val_w.inputs))
        targets = norm.inverse(val_w.targets)
        expect = math.sqrt(float(((preds - targets) ** 2).mean()))
        assert vehicles == pytest.approx(expect, rel=1e-12)

    def test_empty_set_rejected(self, toy_split):
        data = _toy_data(n_days=1)
        with pytest.warns(UserWarning):
            empty = make_windows(data, past_horizon=479, lead=2)
        model = _bpnn()
        with pytest.raises(ValueError):
            validation_rmse(model, empty, None)


class TestTrain:
    def test_learns_the_sinusoid(self, toy_split):
        train_w, val_w, norm = toy_split
        model, report = train(
            _bpnn(), train_w, val_w,
            TrainConfig(learning_rate=3e-3, max_epochs=25, seed=2),
            normalizer=norm,
        )
        assert report.stop_reason in ("early-stop", "max-epochs")
        assert report.best_val_loss < 0.5 * report.val_losses[0]

    def test_restores_the_best_epoch_exactly(self, toy_split):
        train_w, val_w, norm = toy_split
        model, report = train(
            _bpnn(), train_w, val_w,
            TrainConfig(learning_rate=3e-3, max_epochs=10, seed=2),
            normalizer=norm,
        )
        assert report.best_epoch == int(np.argmin(report.val_losses))
        assert validation_rmse(model, val_w, norm) == report.best_val_loss

    def test_same_seed_is_bit_reproducible(self, toy_split):
        train_w, val_w, norm = toy_split
        cfg = TrainConfig(learning_rate=3e-3, max_epochs=5, seed=7)
        m1, r1 = train(_bpnn(seed=7), train_w, val_w, cfg, normalizer=norm)
        m2, r2 = train(_bpnn(seed=7), train_w, val_w, cfg, normalizer=norm)
        assert r1.val_losses == r2.val_losses
        assert r1.train_losses == r2.train_losses
        for a, b in zip(m1.params(), m2.params()):
            np.testing.assert_array_equal(a.values, b.values)

    def test_lstm_converges_within_forty_epochs(self, toy_split):
        train_w, val_w, norm = toy_split
        model = build_model(
            ModelConfig(arch="lstm", past_horizon=4, lead=1, lstm_hidden=8, seed=2), 2
        )
        model, report = train(
            model, train_w, val_w,
            TrainConfig(learning_rate=3e-3, max_epochs=40, seed=2),
            normalizer=norm,
        )
        assert report.epochs_run <= 40
        assert report.best_val_loss < 0.5 * report.val_losses[0]

    @pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
    def test_divergence_aborts_with_reason(self, toy_split):
        train_w, val_w, norm = toy_split
        model, report = train(
            _bpnn(), train_w, val_w,
            TrainConfig(learning_rate=1e200, max_epochs=10, seed=2),
            normalizer=norm,
        )
        assert report.stop_reason == "diverged"
        assert report.diverged
        assert report.best_epoch == -1
        assert report.best_val_loss == math.inf

    def test_prunes_all_but_the_best_checkpoint(self, toy_split, tmp_path):
        train_w, val_w, norm = toy_split
        model, report = train(
            _bpnn(), train_w, val_w,
            TrainConfig(learning_rate=3e-3, max_epochs=6, seed=2),
            normalizer=norm, checkpoint_dir=tmp_path,
        )
        left = sorted(p.name for p in tmp_path.glob("*.fcp"))
        assert left == [f"epoch-{report.best_epoch:03d}.fcp"]
        best = load_checkpoint(tmp_path / left[0])
        np.testing.assert_array_equal(
            best.forward(val_w.inputs[:8]), model.forward(val_w.inputs[:8])
        )

    def test_empty_sets_rejected(self, toy_split):
        train_w, val_w, _ = toy_split
        with pytest.warns(UserWarning):
            empty = make_windows(_toy_data(n_days=1), past_horizon=479, lead=2)
        with pytest.raises(ValueError):
            train(_bpnn(), empty, val_w, TrainConfig())
        with pytest.raises(ValueError):
            train(_bpnn(), train_w, empty, TrainConfig())


class TestTrainConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [{"batch_size": 0}, {"patience": 0}, {"max_epochs": 0}],
    )
    def test_bounds(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestTrainReport:
    def test_empty_report_defaults(self):
        report = TrainReport()
        assert report.epochs_run == 0
        assert report.best_val_loss == math.inf
        assert not report.diverged

    def test_json_mirrors_fields(self):
        report = TrainReport(
            train_losses=[2.0, 1.0], val_losses=[3.0, 2.5],
            best_epoch=1, stop_reason="max-epochs",
            epoch_seconds=[0.1, 0.1], total_seconds=0.2,
        )
        js = report.to_json()
        assert js["best_val_loss"] == 2.5
        assert js["epochs_run"] == 2
        assert js["stop_reason"] == "max-epochs"


class TestTrainRepeated:
    def test_aggregates_k_runs_deterministically(self, toy_split):
        train_w, val_w, norm = toy_split
        cfg = TrainConfig(learning_rate=3e-3, max_epochs=3, seed=10)

        def build(seed):
            return _bpnn(seed=seed)

        first = train_repeated(build, train_w, val_w, cfg, normalizer=norm, k=2)
        assert first.seeds == [10, 11]
        assert len(first.reports) == len(first.models) == 2
        again = train_repeated(build, train_w, val_w, cfg, normalizer=norm, k=2)
        np.testing.assert_array_equal(first.val_losses, again.val_losses)

        js = first.to_json()
        assert js["seeds"] == [10, 11]
        assert js["val_mean"] == pytest.approx(first.val_losses.mean())
        assert len(js["runs"]) == 2

    def test_explicit_seed_list(self, toy_split):
        train_w, val_w, norm = toy_split
        cfg = TrainConfig(learning_rate=3e-3, max_epochs=2)
        result = train_repeated(
            lambda seed: _bpnn(seed=seed), train_w, val_w, cfg,
            normalizer=norm, k=2, seeds=[31, 44],
        )
        assert result.seeds == [31, 44]
        # distinct seeds must give distinct runs
        assert result.val_losses[0] != result.val_losses[1]

    def test_bad_arguments(self, toy_split):
        train_w, val_w, _ = toy_split
        with pytest.raises(ValueError):
            train_repeated(lambda s: _bpnn(), train_w, val_w, TrainConfig(), k=0)
        with pytest.raises(ValueError):
            train_repeated(
                lambda s: _bpnn(), train_w, val_w, TrainConfig(), k=3, seeds=[1, 2]
            )
