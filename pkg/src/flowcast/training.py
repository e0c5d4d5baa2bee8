"""Early-stopped mini-batch training.

Each epoch shuffles the training windows with a seeded permutation,
steps Adam over MSE on normalized flows, then scores validation RMSE in
vehicle units (so early stopping tracks the reported metric).  Training
stops once validation RMSE has not strictly improved for ``patience``
consecutive epochs, or at the epoch cap, and the model is restored to
the best epoch's snapshot.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import Normalizer, WindowSet, iter_batches
from .models import NeuralModel
from .numcore import Adam, mse_loss

_EVAL_BATCH = 1024


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 50
    learning_rate: float = 3e-4
    l2: float = 1e-8
    patience: int = 3
    max_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")


@dataclass
class TrainReport:
    """Loss trajectory and timing of one training run.

    Epoch indices are 0-based positions into the loss lists;
    ``best_epoch`` always points at the minimum validation loss among
    completed epochs.
    """

    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stop_reason: str = ""
    epoch_seconds: list[float] = field(default_factory=list)
    total_seconds: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.val_losses)

    @property
    def best_val_loss(self) -> float:
        return self.val_losses[self.best_epoch] if self.best_epoch >= 0 else math.inf

    @property
    def diverged(self) -> bool:
        return self.stop_reason == "diverged"

    def to_json(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "best_epoch": self.best_epoch,
            "best_val_loss": self.best_val_loss,
            "stop_reason": self.stop_reason,
            "epoch_seconds": self.epoch_seconds,
            "total_seconds": self.total_seconds,
            "epochs_run": self.epochs_run,
        }


class EarlyStopper:
    """The stopping rule, isolated so it can be tested on scripted losses.

    ``update`` returns True when training should stop: the loss has now
    failed to strictly improve on the best seen for ``patience``
    consecutive epochs.
    """

    def __init__(self, patience: int):
        if patience < 1:
            raise ValueError("patience must be at least 1")
        self.patience = patience
        self.best = math.inf
        self.best_epoch = -1
        self.streak = 0

    def update(self, loss: float, epoch: int) -> bool:
        if loss < self.best:
            self.best = loss
            self.best_epoch = epoch
            self.streak = 0
            return False
        self.streak += 1
        return self.streak >= self.patience


def validation_rmse(model: NeuralModel, windows: WindowSet, normalizer: Normalizer | None) -> float:
    """RMSE over all (sample, station) cells, in vehicle units when denormalized."""
    if len(windows) == 0:
        raise ValueError("validation set is empty")
    total = 0.0
    count = 0
    for at in range(0, len(windows), _EVAL_BATCH):
        sel = slice(at, at + _EVAL_BATCH)
        preds = model.forward(windows.inputs[sel])
        targets = windows.targets[sel]
        if normalizer is not None:
            preds = normalizer.inverse(preds)
            targets = normalizer.inverse(targets)
        diff = preds - targets
        total += float((diff * diff).sum())
        count += diff.size
    return math.sqrt(total / count)


def train(
    model: NeuralModel,
    train_windows: WindowSet,
    val_windows: WindowSet,
    config: TrainConfig,
    normalizer: Normalizer | None = None,
    checkpoint_dir: str | Path | None = None,
) -> tuple[NeuralModel, TrainReport]:
    """Train ``model`` in place and restore it to its best epoch.

    ``train_windows`` and ``val_windows`` are expected in the scale the
    model should learn on (normalized, usually); ``normalizer`` is only
    used to express validation RMSE in vehicle units.  When
    ``checkpoint_dir`` is given, every epoch is checkpointed and all but
    the best are removed at the end.
    """
    if len(train_windows) == 0 or len(val_windows) == 0:
        raise ValueError("training and validation sets must be non-empty")
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.params(), lr=config.learning_rate, l2=config.l2)
    stopper = EarlyStopper(config.patience)
    report = TrainReport()
    best_state = None
    ckpt_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if ckpt_dir is not None:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    for epoch in range(config.max_epochs):
        epoch_started = time.perf_counter()
        sq_sum = 0.0
        seen = 0
        for inputs, targets in iter_batches(train_windows, config.batch_size, rng):
            preds = model.forward(inputs)
            loss, grad = mse_loss(preds, targets)
            optimizer.zero_grad()
            model.backward(grad)
            optimizer.step()
            sq_sum += loss * targets.size
            seen += targets.size
        train_loss = sq_sum / seen
        val_loss = validation_rmse(model, val_windows, normalizer)
        report.train_losses.append(train_loss)
        report.val_losses.append(val_loss)
        report.epoch_seconds.append(time.perf_counter() - epoch_started)

        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            report.stop_reason = "diverged"
            break
        improved = val_loss < stopper.best
        stop = stopper.update(val_loss, epoch)
        if improved:
            best_state = model.state()
        if ckpt_dir is not None:
            model.save(ckpt_dir / f"epoch-{epoch:03d}.fcp")
        if stop:
            report.stop_reason = "early-stop"
            break
    else:
        report.stop_reason = "max-epochs"

    report.best_epoch = stopper.best_epoch
    report.total_seconds = time.perf_counter() - started
    if best_state is not None:
        model.load_state(best_state)
    if ckpt_dir is not None:
        for f in sorted(ckpt_dir.glob("epoch-*.fcp")):
            if f.name != f"epoch-{report.best_epoch:03d}.fcp":
                f.unlink()
    return model, report


@dataclass
class RepeatedResult:
    """Aggregate of k independent trainings with distinct seeds."""

    seeds: list[int]
    reports: list[TrainReport]
    models: list[NeuralModel]

    @property
    def val_losses(self) -> np.ndarray:
        return np.array([r.best_val_loss for r in self.reports])

    @property
    def val_mean(self) -> float:
        return float(self.val_losses.mean())

    @property
    def val_std(self) -> float:
        return float(self.val_losses.std())

    @property
    def seconds(self) -> np.ndarray:
        return np.array([r.total_seconds for r in self.reports])

    @property
    def seconds_mean(self) -> float:
        return float(self.seconds.mean())

    @property
    def seconds_std(self) -> float:
        return float(self.seconds.std())

    def to_json(self) -> dict:
        return {
            "seeds": self.seeds,
            "val_mean": self.val_mean,
            "val_std": self.val_std,
            "seconds_mean": self.seconds_mean,
            "seconds_std": self.seconds_std,
            "runs": [r.to_json() for r in self.reports],
        }


def train_repeated(
    build,
    train_windows: WindowSet,
    val_windows: WindowSet,
    config: TrainConfig,
    normalizer: Normalizer | None = None,
    k: int = 5,
    seeds: list[int] | None = None,
) -> RepeatedResult:
    """Run ``k`` independent trainings and aggregate their outcomes.

    ``build`` maps a seed to a fresh model; the same seed also drives
    that run's batch shuffling, so a fixed seed list makes the whole
    aggregate bit-reproducible.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if seeds is None:
        seeds = [config.seed + i for i in range(k)]
    if len(seeds) != k:
        raise ValueError(f"expected {k} seeds, got {len(seeds)}")
    reports = []
    models = []
    for seed in seeds:
        model = build(seed)
        model, report = train(
            model,
            train_windows,
            val_windows,
            replace(config, seed=seed),
            normalizer=normalizer,
        )
        reports.append(report)
        models.append(model)
    return RepeatedResult(seeds=list(seeds), reports=reports, models=models)
