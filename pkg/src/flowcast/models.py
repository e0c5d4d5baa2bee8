"""The predictor zoo.

All predictors answer the same question: given the network's recent
past (an N x R window ending at TI t), what are the N station flows at
TI t+P?  Five are neural and trained by backpropagation:

* bpnn      two fully-connected layers over the flattened window
* sep-bpnn  one tiny per-station network each seeing only its own row
* cnn       two 3x3 convolutions over the window image, then a dense map
* lstm      the window columns fed in time order through a chain of
            LSTM units sharing parameters; last output -> dense map
* cnn-lstm  each time step passed through a width-3 convolution over
            the station axis before entering its LSTM unit

Two are classical baselines: ``dpp`` replays the daily profile for the
target's (day-of-week, TI) cell, and ``arima`` fits AR(2) on the
once-differenced per-station series and rolls predictions forward.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .numcore import LSTM, Conv1d, Conv2d, Dense, ReLU, Tensor, load_params, save_params, uniform_init
from .profiling import DailyProfile

NEURAL_ARCHITECTURES = ("bpnn", "sep-bpnn", "cnn", "lstm", "cnn-lstm")
ARCHITECTURES = NEURAL_ARCHITECTURES + ("dpp", "arima")

MAX_PAST_HORIZON = 30
MAX_LEAD = 10


@dataclass(frozen=True)
class ModelConfig:
    """Architecture selection and sizes.

    ``past_horizon`` is the number of historical TIs fed to the model
    (R) and ``lead`` the future offset being predicted (P); defaults
    bound them to the ranges the sweep explores.
    """

    arch: str
    past_horizon: int = 12
    lead: int = 1
    hidden: int = 256
    station_hidden: int = 10
    conv_channels: tuple[int, int] = (16, 32)
    conv1d_channels: int = 8
    kernel: int = 3
    lstm_hidden: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}; pick one of {ARCHITECTURES}")
        if not 1 <= self.past_horizon <= MAX_PAST_HORIZON:
            raise ValueError(f"past_horizon must be in [1, {MAX_PAST_HORIZON}]")
        if not 1 <= self.lead <= MAX_LEAD:
            raise ValueError(f"lead must be in [1, {MAX_LEAD}]")

    def to_json(self) -> dict:
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        obj = dict(obj)
        if "conv_channels" in obj:
            obj["conv_channels"] = tuple(obj["conv_channels"])
        return cls(**obj)


class NeuralModel:
    """Shared plumbing: parameter collection, snapshots, checkpoints.

    ``forward`` consumes a (B, N, R) window batch and returns (B, N)
    predictions in whatever scale the inputs are in (training runs on
    normalized data).  ``backward`` accumulates parameter gradients.
    """

    arch = ""

    def __init__(self, config: ModelConfig, n_stations: int):
        self.config = config
        self.n_stations = n_stations

    def params(self) -> list[Tensor]:
        raise NotImplementedError

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, x: np.ndarray) -> None:
        r = self.config.past_horizon
        if x.ndim != 3 or x.shape[1] != self.n_stations or x.shape[2] != r:
            raise ValueError(
                f"expected (B, {self.n_stations}, {r}) window batch, got {x.shape}"
            )

    def state(self) -> dict[str, np.ndarray]:
        return {p.name: p.values.copy() for p in self.params()}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        for p in self.params():
            if p.name not in arrays:
                raise KeyError(f"checkpoint lacks parameter {p.name!r}")
            if arrays[p.name].shape != p.values.shape:
                raise ValueError(
                    f"parameter {p.name!r}: checkpoint shape {arrays[p.name].shape} "
                    f"!= model shape {p.values.shape}"
                )
            p.values[...] = arrays[p.name]

    def save(self, path) -> None:
        meta = {
            "kind": "neural",
            "arch": self.arch,
            "config": self.config.to_json(),
            "n_stations": self.n_stations,
        }
        save_params(path, self.state(), meta)


class BPNN(NeuralModel):
    """FC(R*N -> hidden) -> ReLU -> FC(hidden -> N) on the flattened window."""

    arch = "bpnn"

    def __init__(self, config: ModelConfig, n_stations: int):
        super().__init__(config, n_stations)
        rng = np.random.default_rng(config.seed)
        d_in = n_stations * config.past_horizon
        self.fc1 = Dense(d_in, config.hidden, rng, "fc1")
        self.act = ReLU()
        self.fc2 = Dense(config.hidden, n_stations, rng, "fc2")

    def params(self) -> list[Tensor]:
        return self.fc1.params() + self.fc2.params()

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check_input(x)
        flat = x.reshape(x.shape[0], -1)
        return self.fc2.forward(self.act.forward(self.fc1.forward(flat)))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dflat = self.fc1.backward(self.act.backward(self.fc2.backward(dout)))
        return dflat.reshape(-1, self.n_stations, self.config.past_horizon)


class SepBPNN(NeuralModel):
    """N independent per-station networks, evaluated as stacked matmuls.

    Station j's scalar prediction sees only station j's R-value history,
    through one hidden layer of ``station_hidden`` neurons.
    """

    arch = "sep-bpnn"

    def __init__(self, config: ModelConfig, n_stations: int):
        super().__init__(config, n_stations)
        rng = np.random.default_rng(config.seed)
        r, h = config.past_horizon, config.station_hidden
        self.w1 = Tensor(uniform_init(rng, (n_stations, r, h), r), "w1")
        self.b1 = Tensor(uniform_init(rng, (n_stations, h), r), "b1")
        self.w2 = Tensor(uniform_init(rng, (n_stations, h), h), "w2")
        self.b2 = Tensor(uniform_init(rng, (n_stations,), h), "b2")
        self._x = None
        self._h = None

    def params(self) -> list[Tensor]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check_input(x)
        self._x = x
        pre = np.einsum("bnr,nrh->bnh", x, self.w1.values) + self.b1.values
        self._h = np.where(pre > 0, pre, 0.0)
        return np.einsum("bnh,nh->bn", self._h, self.w2.values) + self.b2.values

    def backward(self, dout: np.ndarray) -> np.ndarray:
        self.w2.add_grad(np.einsum("bnh,bn->nh", self._h, dout))
        self.b2.add_grad(dout.sum(axis=0))
        dh = dout[:, :, None] * self.w2.values[None]
        dpre = np.where(self._h > 0, dh, 0.0)
        self.w1.add_grad(np.einsum("bnr,bnh->nrh", self._x, dpre))
        self.b1.add_grad(dpre.sum(axis=0))
        return np.einsum("bnh,nrh->bnr", dpre, self.w1.values)


class CNN(NeuralModel):
    """conv 3x3 -> ReLU -> conv 3x3 -> ReLU -> flatten -> FC, no pooling.

    The window is treated as a one-channel R x N image (rows = TIs in
    time order, columns = stations); "same" padding keeps the flattened
    size stable across R.
    """

    arch = "cnn"

    def __init__(self, config: ModelConfig, n_stations: int):
        super().__init__(config, n_stations)
        rng = np.random.default_rng(config.seed)
        c1, c2 = config.conv_channels
        self.conv1 = Conv2d(1, c1, rng, config.kernel, "conv1")
        self.act1 = ReLU()
        self.conv2 = Conv2d(c1, c2, rng, config.kernel, "conv2")
        self.act2 = ReLU()
        self.fc = Dense(c2 * config.past_horizon * n_stations, n_stations, rng, "fc")

    def params(self) -> list[Tensor]:
        return self.conv1.params() + self.conv2.params() + self.fc.params()

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check_input(x)
        image = x.transpose(0, 2, 1)[:, None, :, :]
        feat = self.act2.forward(self.conv2.forward(self.act1.forward(self.conv1.forward(image))))
        return self.fc.forward(feat.reshape(x.shape[0], -1))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        batch = dout.shape[0]
        r, n = self.config.past_horizon, self.n_stations
        dfeat = self.fc.backward(dout).reshape(batch, self.config.conv_channels[1], r, n)
        dimage = self.conv1.backward(self.act1.backward(self.conv2.backward(self.act2.backward(dfeat))))
        return dimage[:, 0, :, :].transpose(0, 2, 1)


class LSTMModel(NeuralModel):
    """Window columns in time order through shared-parameter LSTM units.

    The last unit's output vector goes through one dense layer to give
    the N-station prediction.
    """

    arch = "lstm"

    def __init__(self, config: ModelConfig, n_stations: int):
        super().__init__(config, n_stations)
        rng = np.random.default_rng(config.seed)
        self.lstm = LSTM(n_stations, config.lstm_hidden, rng, "lstm")
        self.fc = Dense(config.lstm_hidden, n_stations, rng, "fc")

    def params(self) -> list[Tensor]:
        return self.lstm.params() + self.fc.params()

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check_input(x)
        return self.fc.forward(self.lstm.forward(x.transpose(0, 2, 1)))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dseq = self.lstm.backward(self.fc.backward(dout))
        return dseq.transpose(0, 2, 1)


class CNNLSTM(NeuralModel):
    """LSTM chain whose per-step input is first convolved over stations.

    Each time step's S-vector passes through a shared width-3
    convolution (no activation in between, so a delta kernel reduces
    this to the plain LSTM); the channel outputs are flattened into the
    unit input.
    """

    arch = "cnn-lstm"

    def __init__(self, config: ModelConfig, n_stations: int):
        super().__init__(config, n_stations)
        rng = np.random.default_rng(config.seed)
        c = config.conv1d_channels
        self.conv = Conv1d(1, c, rng, config.kernel, "conv")
        self.lstm = LSTM(c * n_stations, config.lstm_hidden, rng, "lstm")
        self.fc = Dense(config.lstm_hidden, n_stations, rng, "fc")

    def params(self) -> list[Tensor]:
        return self.conv.params() + self.lstm.params() + self.fc.params()

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check_input(x)
        batch, n, r = x.shape
        steps = x.transpose(0, 2, 1).reshape(batch * r, 1, n)
        feat = self.conv.forward(steps).reshape(batch, r, -1)
        return self.fc.forward(self.lstm.forward(feat))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        batch = dout.shape[0]
        r, n = self.config.past_horizon, self.n_stations
        dfeat = self.lstm.backward(self.fc.backward(dout))
        dsteps = self.conv.backward(dfeat.reshape(batch * r, -1, n))
        return dsteps.reshape(batch, r, n).transpose(0, 2, 1)


_NEURAL_CLASSES = {cls.arch: cls for cls in (BPNN, SepBPNN, CNN, LSTMModel, CNNLSTM)}


def build_model(config: ModelConfig, n_stations: int) -> NeuralModel:
    """Instantiate a neural predictor with seeded initialization."""
    if config.arch not in _NEURAL_CLASSES:
        raise ValueError(
            f"{config.arch!r} is not a neural architecture; "
            "build it from a profile (dpp) or per-station fits (arima)"
        )
    return _NEURAL_CLASSES[config.arch](config, n_stations)


# ---------------------------------------------------------------------------
# Daily-profile predictor
# ---------------------------------------------------------------------------


class DailyProfilePredictor:
    """Replays the training-period profile cell for the target's (day, TI).

    By construction the prediction depends only on the target timestamp,
    never on R or P.
    """

    arch = "dpp"

    def __init__(self, profiles: dict[str, DailyProfile]):
        self.stations = sorted(profiles)
        self._table = np.stack([profiles[k].mean for k in self.stations])  # (N, 7, 480)

    def predict(self, weekday: np.ndarray, ti: np.ndarray) -> np.ndarray:
        """Flow predictions of shape (len(weekday), N)."""
        return self._table[:, np.asarray(weekday), np.asarray(ti)].T

    def save(self, path) -> None:
        arrays = {f"profile.{k}": self._table[i] for i, k in enumerate(self.stations)}
        save_params(path, arrays, {"kind": "dpp", "arch": "dpp", "stations": self.stations})

    @classmethod
    def _from_arrays(cls, meta: dict, arrays: dict[str, np.ndarray]) -> "DailyProfilePredictor":
        obj = cls.__new__(cls)
        obj.stations = list(meta["stations"])
        obj._table = np.stack([arrays[f"profile.{k}"] for k in obj.stations])
        return obj


# ---------------------------------------------------------------------------
# ARIMA baseline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArimaParams:
    """AR coefficients fitted on the (once-)differenced series.

    q > 0 is deliberately not implemented: the reference configuration
    is (p=2, d=1, q=0), where conditional least squares is exact.
    """

    phi: tuple[float, ...]
    intercept: float
    p: int = 2
    d: int = 1
    q: int = 0
    max_history: int = 100

    def to_json(self) -> dict:
        return {
            "phi": list(self.phi),
            "intercept": self.intercept,
            "p": self.p,
            "d": self.d,
            "q": self.q,
            "max_history": self.max_history,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ArimaParams":
        return cls(
            phi=tuple(obj["phi"]),
            intercept=float(obj["intercept"]),
            p=int(obj["p"]),
            d=int(obj["d"]),
            q=int(obj["q"]),
            max_history=int(obj["max_history"]),
        )


def arima_fit(
    values: np.ndarray, p: int = 2, d: int = 1, q: int = 0, max_history: int = 100
) -> ArimaParams:
    """Fit AR(p) with intercept on the d-times differenced tail of ``values``.

    Only the trailing ``max_history`` points are used.  Fitting is by
    conditional least squares on the normal equations, with a tiny ridge
    retry if they come out singular (e.g. a constant series).
    """
    if q != 0:
        raise NotImplementedError("moving-average terms (q > 0) are not supported")
    if d not in (0, 1):
        raise ValueError("only d in {0, 1} is supported")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("values must be one-dimensional")
    if len(values) < p + d + 1:
        raise ValueError(f"need at least {p + d + 1} points to fit, got {len(values)}")
    tail = values[-max_history:]
    y = np.diff(tail) if d else tail

    design = np.ones((len(y) - p, p + 1))
    for k in range(1, p + 1):
        design[:, k] = y[p - k : len(y) - k]
    target = y[p:]
    a = design.T @ design
    rhs = design.T @ target
    try:
        coef = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        coef = np.linalg.solve(a + 1e-8 * np.eye(p + 1), rhs)
    return ArimaParams(
        phi=tuple(float(c) for c in coef[1:]),
        intercept=float(coef[0]),
        p=p,
        d=d,
        q=q,
        max_history=max_history,
    )


def arima_predict(params: ArimaParams, values: np.ndarray, lead: int) -> float:
    """Roll the fitted recurrence ``lead`` steps past the end of ``values``.

    Each step predicts the next difference, appends it, and repeats; the
    returned value is the un-differenced level at t + lead.
    """
    if lead < 1:
        raise ValueError("lead must be at least 1")
    values = np.asarray(values, dtype=np.float64)[-params.max_history :]
    p = params.p
    if len(values) < p + params.d:
        raise ValueError("not enough history to start the recursion")
    if params.d:
        level = float(values[-1])
        hist = list(np.diff(values)[-p:])
    else:
        level = 0.0
        hist = list(values[-p:])
    for _ in range(lead):
        nxt = params.intercept + sum(f * h for f, h in zip(params.phi, hist[::-1]))
        hist = hist[1:] + [nxt]
        level += nxt
    return level if params.d else hist[-1]


def arima_rolling_forecast(
    values: np.ndarray,
    anchors: np.ndarray,
    lead: int,
    p: int = 2,
    d: int = 1,
    q: int = 0,
    max_history: int = 100,
) -> np.ndarray:
    """Refit at every anchor on its trailing window, then roll ``lead`` steps.

    ``anchors`` index the last observed TI of each forecast; the result
    holds the prediction for anchor + lead, one per anchor.
    """
    values = np.asarray(values, dtype=np.float64)
    out = np.empty(len(anchors))
    for i, t in enumerate(np.asarray(anchors)):
        history = values[: t + 1]
        fitted = arima_fit(history, p=p, d=d, q=q, max_history=max_history)
        out[i] = arima_predict(fitted, history, lead)
    return out


class ArimaPredictor:
    """Per-station ARIMA parameters behind one save/load interface."""

    arch = "arima"

    def __init__(self, station_params: dict[str, ArimaParams]):
        self.stations = sorted(station_params)
        self.station_params = dict(station_params)

    def save(self, path) -> None:
        payload = {
            "kind": "arima",
            "arch": "arima",
            "stations": self.stations,
            "params": {k: v.to_json() for k, v in self.station_params.items()},
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ArimaPredictor":
        with open(path) as fh:
            payload = json.load(fh)
        return cls({k: ArimaParams.from_json(v) for k, v in payload["params"].items()})


def load_checkpoint(path):
    """Load any saved predictor; the file declares what it is."""
    with open(path, "rb") as fh:
        head = fh.read(5)
    if head == b"FCP1\n":
        meta, arrays = load_params(path)
        if meta.get("kind") == "dpp":
            return DailyProfilePredictor._from_arrays(meta, arrays)
        config = ModelConfig.from_json(meta["config"])
        model = build_model(config, int(meta["n_stations"]))
        model.load_state(arrays)
        return model
    return ArimaPredictor.load(path)
