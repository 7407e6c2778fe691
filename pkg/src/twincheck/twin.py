"""Black-box twin surrogates, fault injection, and side-by-side rollout.

A surrogate maps the plant observables of one row (plus the burner
characteristics alpha, beta, delta) to predictions for the next row.  The
rest of the package only ever sees the ``pred_*`` columns a surrogate
writes into a :class:`~twincheck.trace.Trace`.

Surrogate file format (JSON, ``twincheck-surrogate/1``)::

    {"format": "twincheck-surrogate/1",
     "inputs": [...], "outputs": [...], "features": "linear" | "interaction",
     "mean": [...], "std": [...],          # per feature, for standardization
     "weights": [...], "shape": [F, O],    # row-major F x O
     "bias": [...]}                        # O values

Inputs and outputs are in physical units (scaled columns divided by 100).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import plant
from .trace import BOOLEAN, PREDICTED, SCALE, Trace, is_boolean

FORMAT = "twincheck-surrogate/1"
OBSERVED = ("B_T", "Bo_T", "W_M", "Wo_M", "W_A", "Wo_A", "Wo_R", "Wo_D",
            "burner_on", "critical_alarm", "turn_off", "T_env")
INPUTS = OBSERVED + ("alpha", "beta", "delta")
OUTPUTS = PREDICTED
# Clamp ranges for analog outputs, physical units.
OUTPUT_RANGES = {"B_T": (-50.0, 500.0), "Bo_T": (-50.0, 500.0),
                 "W_M": (0.0, 1000.0), "Wo_M": (0.0, 1000.0)}
PARAMS = ("alpha", "beta", "delta")


class TwinError(ValueError):
    pass


def _base(signal: str) -> str:
    name = signal[5:] if signal.startswith("pred_") else signal
    if name not in OUTPUTS:
        raise TwinError(f"unknown output signal {signal!r}; expected one of "
                        f"{', '.join('pred_' + o for o in OUTPUTS)}")
    return name


def input_row(row: dict, params: dict) -> dict[str, float]:
    """Physical-unit input dict from a scaled trace row plus burner characteristics."""
    missing = [c for c in OBSERVED if c not in row]
    if missing:
        raise TwinError(f"row is missing input columns {missing}")
    out = {c: (row[c] if c in BOOLEAN else row[c] / SCALE)
           for c in OBSERVED}
    for k in PARAMS:
        out[k] = float(params[k])
    return out


def finalize(values: dict[str, float]) -> dict[str, int]:
    """Clamp, threshold booleans at 0.5, and scale to trace integers."""
    out = {}
    for name, x in values.items():
        if is_boolean(name):
            out[name] = int(min(1.0, max(0.0, x)) >= 0.5)
        else:
            lo, hi = OUTPUT_RANGES[name]
            out[name] = int(np.floor(min(hi, max(lo, x)) * SCALE + 0.5))
    return out


class Surrogate:
    """Next-step predictor interface.

    ``predict(inputs, t)`` receives the physical-unit inputs of row ``t-1``
    (row 0 for ``t == 0``) and returns physical-unit outputs for row ``t``.
    ``attach(truth)`` is called once before a rollout; stateful wrappers
    reset their buffers there.
    """

    outputs: tuple[str, ...] = OUTPUTS

    def attach(self, truth: Trace) -> None:
        pass

    def predict(self, inputs: dict[str, float], t: int) -> dict[str, float]:
        raise NotImplementedError

    def predict_row(self, row: dict, params: dict, t: int = 0) -> dict[str, int]:
        """Scaled, clamped predictions from a scaled trace row."""
        return finalize(self.predict(input_row(row, params), t))


class PerfectTwin(Surrogate):
    """Identity on ground truth: replays the attached plant trace."""

    def __init__(self):
        self._truth: Trace | None = None

    def attach(self, truth: Trace) -> None:
        self._truth = truth

    def predict(self, inputs, t):
        if self._truth is None:
            raise TwinError("perfect twin used without an attached ground-truth trace")
        return {o: (self._truth[o][t] if is_boolean(o) else self._truth[o][t] / SCALE)
                for o in self.outputs}


def identity_stub() -> PerfectTwin:
    return PerfectTwin()


class ConstantSurrogate(Surrogate):
    def __init__(self, values: dict[str, float]):
        self.values = {o: float(values[o]) for o in OUTPUTS}

    def predict(self, inputs, t):
        return dict(self.values)


def _features(x: np.ndarray, kind: str) -> np.ndarray:
    """Feature matrix from an ``(n, len(INPUTS))`` input matrix."""
    if kind == "linear":
        return x
    if kind != "interaction":
        raise TwinError(f"unknown feature set {kind!r}")
    col = {n: x[:, i] for i, n in enumerate(INPUTS)}
    on = col["burner_on"]
    extra = [
        col["alpha"] * col["B_T"], col["alpha"] * on, col["alpha"] * col["T_env"] * on,
        col["alpha"] * col["delta"] * on, col["alpha"] * col["B_T"] * on,
        on * col["B_T"], on * col["T_env"],
        col["beta"] * col["B_T"], col["beta"] * col["Bo_T"],
    ]
    return np.column_stack([x] + extra)


@dataclass
class LinearSurrogate(Surrogate):
    """Affine map of (optionally expanded, standardized) inputs."""

    weights: np.ndarray          # (F, O)
    bias: np.ndarray             # (O,)
    features: str = "linear"
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    outputs: tuple[str, ...] = field(default=OUTPUTS)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        nf = self.weights.shape[0]
        self.mean = np.zeros(nf) if self.mean is None else np.asarray(self.mean, dtype=float)
        self.std = np.ones(nf) if self.std is None else np.asarray(self.std, dtype=float)
        if self.weights.shape != (nf, len(self.outputs)) or self.bias.shape != (len(self.outputs),):
            raise TwinError("weight shapes do not match the output schema")

    def predict_matrix(self, x: np.ndarray) -> np.ndarray:
        f = (_features(np.atleast_2d(x), self.features) - self.mean) / self.std
        return f @ self.weights + self.bias

    def predict(self, inputs, t):
        x = np.array([[inputs[n] for n in INPUTS]], dtype=float)
        y = self.predict_matrix(x)[0]
        return {o: float(v) for o, v in zip(self.outputs, y)}

    # -- persistence --------------------------------------------------------
    def to_dict(self) -> dict:
        return {"format": FORMAT, "inputs": list(INPUTS), "outputs": list(self.outputs),
                "features": self.features, "mean": self.mean.tolist(),
                "std": self.std.tolist(), "weights": self.weights.ravel().tolist(),
                "shape": list(self.weights.shape), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSurrogate":
        if d.get("format") != FORMAT:
            raise TwinError(f"not a {FORMAT} file")
        if tuple(d["inputs"]) != INPUTS:
            raise TwinError(f"input schema mismatch: {d['inputs']}")
        w = np.asarray(d["weights"], dtype=float).reshape(d["shape"])
        return cls(w, d["bias"], d["features"], d["mean"], d["std"], tuple(d["outputs"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "LinearSurrogate":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise TwinError(f"cannot load surrogate from {path}: {exc}") from None


def trace_params(trace: Trace) -> dict[str, float]:
    try:
        return {k: float(trace.meta[k]) for k in PARAMS}
    except KeyError as exc:
        raise TwinError(f"trace metadata lacks burner characteristic {exc.args[0]!r}") from None


def training_pairs(traces) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for tr in traces:
        tr.require(*OBSERVED, context="twin training")
        prm = trace_params(tr)
        rows = list(tr.rows())
        for a, b in zip(rows, rows[1:]):
            xi = input_row(a, prm)
            xs.append([xi[n] for n in INPUTS])
            yb = input_row(b, prm)
            ys.append([yb[o] for o in OUTPUTS])
    return np.array(xs, dtype=float), np.array(ys, dtype=float)


def fit(traces, features: str = "interaction", seed: int = 0) -> LinearSurrogate:
    """Least-squares next-step regressor.

    Deterministic: the solution is the minimum-norm least-squares fit, so
    ``seed`` only tags the result for provenance.  Constant inputs get unit
    scale, so a constant training trace yields a constant predictor.
    """
    traces = list(traces)
    if not traces:
        raise TwinError("empty training set")
    x, y = training_pairs(traces)
    if len(x) == 0:
        raise TwinError("training traces need at least two rows")
    f = _features(x, features)
    mean = f.mean(axis=0)
    std = f.std(axis=0)
    std[std < 1e-12] = 1.0
    z = (f - mean) / std
    a = np.column_stack([z, np.ones(len(z))])
    sol, *_ = np.linalg.lstsq(a, y, rcond=None)
    return LinearSurrogate(sol[:-1], sol[-1], features, mean, std)


def _diagonal(sign: float, offset: dict[str, float]) -> LinearSurrogate:
    w = np.zeros((len(INPUTS), len(OUTPUTS)))
    for j, o in enumerate(OUTPUTS):
        w[INPUTS.index(o), j] = sign
    bias = np.array([offset.get(o, 0.0) for o in OUTPUTS])
    return LinearSurrogate(w, bias, "linear")


def monotone_surrogate() -> LinearSurrogate:
    """Persistence model: every output copies its own input (weights in {0, 1})."""
    return _diagonal(1.0, {})


def anti_monotone_surrogate(pivot: float = 200.0) -> LinearSurrogate:
    """Mirror model: analog outputs are ``pivot - input``, booleans ``1 - input``."""
    return _diagonal(-1.0, {o: (1.0 if o in BOOLEAN else pivot) for o in OUTPUTS})


# -- faults -------------------------------------------------------------------------

FAULT_KINDS = ("stuck_output", "additive_noise", "bias", "lag")


@dataclass(frozen=True)
class FaultSpec:
    kind: str
    signal: str
    t_from: int
    t_to: int
    amplitude: float = 0.0   # additive_noise, physical units
    seed: int = 0            # additive_noise
    offset: float = 0.0      # bias, physical units
    steps: int = 1           # lag
    value: float | None = None  # stuck_output: hold this instead of the first in-window value

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise TwinError(f"unknown fault kind {self.kind!r}")
        _base(self.signal)
        if self.t_from > self.t_to or self.t_from < 0:
            raise TwinError(f"bad activation window [{self.t_from}, {self.t_to}]")
        if self.kind == "lag" and self.steps < 1:
            raise TwinError("lag steps must be at least 1")

    @property
    def output(self) -> str:
        return _base(self.signal)

    def active(self, t: int) -> bool:
        return self.t_from <= t <= self.t_to

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FaultSpec":
        return cls(**d)


class FaultySurrogate(Surrogate):
    """Applies one fault to one output of an inner surrogate, inside its window only."""

    def __init__(self, inner: Surrogate, fault: FaultSpec):
        self.inner = inner
        self.fault = fault
        self.outputs = inner.outputs
        self._held: float | None = None
        self._history: dict[int, float] = {}

    def attach(self, truth: Trace) -> None:
        self.inner.attach(truth)
        self._held = None
        self._history = {}

    def predict(self, inputs, t):
        out = self.inner.predict(inputs, t)
        f = self.fault
        name = f.output
        clean = out[name]
        self._history[t] = clean
        if not f.active(t):
            return out
        if f.kind == "stuck_output":
            if self._held is None:
                self._held = clean if f.value is None else f.value
            out[name] = self._held
        elif f.kind == "additive_noise":
            rng = np.random.default_rng([f.seed, t])
            out[name] = clean + f.amplitude * rng.uniform(-1.0, 1.0)
        elif f.kind == "bias":
            out[name] = clean + f.offset
        elif f.kind == "lag":
            out[name] = self._history.get(t - f.steps, clean)
        return out


# Fault scenarios for the default plant over a 400-row horizon.  Each window
# sits where the matching contract's assumption holds in the ground truth.
PRESETS: dict[str, FaultSpec] = {
    # boiler cooling through the boiling point while its prediction freezes
    "mc1-stuck": FaultSpec("stuck_output", "pred_Bo_T", 252, 292),
    # spurious wood requests while the store is still above its minimum
    "fc3-noise": FaultSpec("additive_noise", "pred_Wo_R", 50, 120, amplitude=1.0, seed=7),
    # spurious water alarms while the tank is well filled
    "fc9-noise": FaultSpec("additive_noise", "pred_W_A", 50, 150, amplitude=1.0, seed=7),
}


def preset(name: str) -> FaultSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise TwinError(f"unknown fault preset {name!r}; expected one of "
                        f"{', '.join(PRESETS)}") from None


def inject_fault(s: Surrogate, f: FaultSpec) -> Surrogate:
    """Wrap ``s`` so that ``f`` distorts its output inside the activation window."""
    if not isinstance(f, FaultSpec):
        raise TwinError("expected a FaultSpec")
    return FaultySurrogate(s, f)


def predict_trace(s: Surrogate, truth: Trace, params: dict | None = None) -> Trace:
    """Add ``pred_*`` columns to ``truth``; row ``t`` is predicted from row ``t-1``."""
    params = params if params is not None else trace_params(truth)
    truth.require(*OBSERVED, context="twin rollout")
    s.attach(truth)
    n = len(truth)
    preds = {o: np.zeros(n, dtype=np.int64) for o in OUTPUTS}
    prev = None
    for t in range(n):
        row = truth.row(t)
        src = prev if prev is not None else row
        out = finalize(s.predict(input_row(src, params), t))
        for o in OUTPUTS:
            preds[o][t] = out[o]
        prev = row
    return truth.with_columns(**{f"pred_{o}": v for o, v in preds.items()})


def rollout(s: Surrogate, p: "plant.PlantParams", horizon: int, seed: int | None = None,
            faults: tuple[FaultSpec, ...] = ()) -> Trace:
    """Run the plant and the surrogate side by side.

    ``faults`` are injected on top of ``s`` in order; each must fit in the
    horizon.
    """
    for f in faults:
        if f.t_to >= horizon:
            raise TwinError(f"fault window [{f.t_from}, {f.t_to}] exceeds horizon {horizon}")
        s = inject_fault(s, f)
    truth = plant.run(p, horizon, seed)
    return predict_trace(s, truth, {k: getattr(p, k) for k in PARAMS})


def mean_abs_error(s: Surrogate, traces, signals=("B_T", "Bo_T")) -> float:
    """Mean absolute next-step error over ``signals``, physical units."""
    errs = []
    for tr in traces:
        pt = predict_trace(s, tr)
        for sig in signals:
            errs.append(np.abs(pt[f"pred_{sig}"][1:] - tr[sig][1:]) / SCALE)
    return float(np.mean(np.concatenate(errs)))


# Sampling box for monotonicity probes, physical units.
INPUT_BOX = {"B_T": (20.0, 200.0), "Bo_T": (20.0, 120.0), "W_M": (0.0, 60.0),
             "Wo_M": (0.0, 60.0), "T_env": (10.0, 30.0), "alpha": (0.02, 0.05),
             "beta": (0.4, 0.7), "delta": (300.0, 3000.0)}


def monotonicity_counterexamples(s: Surrogate, n: int = 10_000, seed: int = 0,
                                 limit: int = 10) -> list[tuple[dict, dict]]:
    """Brute-force check of ``x <= x'  =>  N(x) <= N(x')`` on random input pairs.

    ``x`` is drawn from ``INPUT_BOX`` (booleans uniform in {0, 1}); ``x'``
    raises every component by a random nonnegative amount.  Returns up to
    ``limit`` offending ``(x, x')`` pairs; empty means the check passed.
    """
    from .contracts.stabilize import componentwise_leq

    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(n):
        x, y = {}, {}
        for name in INPUTS:
            if name in BOOLEAN:
                x[name] = float(rng.integers(0, 2))
                y[name] = max(x[name], float(rng.integers(0, 2)))
            else:
                lo, hi = INPUT_BOX[name]
                x[name] = float(rng.uniform(lo, hi))
                y[name] = x[name] + float(rng.uniform(0, 0.2 * (hi - lo)))
        assert componentwise_leq([x[k] for k in INPUTS], [y[k] for k in INPUTS])
        fx, fy = s.predict(x, 1), s.predict(y, 1)
        if not componentwise_leq([fx[o] for o in OUTPUTS], [fy[o] for o in OUTPUTS]):
            bad.append((x, y))
            if len(bad) >= limit:
                break
    return bad
