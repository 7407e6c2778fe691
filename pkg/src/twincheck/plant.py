"""Reference simulator of the warehouse / burner / boiler plant.

A qualitative difference-equation model, one row per period ``P``.  All
state is held in scaled integers (see :mod:`twincheck.trace`) so traces are
byte-reproducible.  The plant's controller reads its sensors through the
same ``m``-step moving average the contracts use, which makes ground-truth
traces contract-compliant by construction.

Dynamics per step, with ``B_eq = T_env + delta * burn_rate``:

* burning (burner on, wood left): ``Wo_M -= burn_rate * P`` and
  ``B_T += alpha * P * (B_eq - B_T)``;
* burner off: ``B_T`` decays toward ``T_env`` at ``cooling_rate`` and never
  goes below it;
* ``Bo_T`` relaxes toward ``B_T`` with coefficient ``beta``; while water is
  left it cannot rise more than ``BOIL_OVERSHOOT`` above ``T_Boil``;
* while ``Bo_T > T_Boil`` water evaporates, at most ``MAX_EVAPORATION`` per
  step;
* a delivery of ``delivery_size`` arrives ``delivery_latency`` seconds after
  each wood request (never, if deliveries are suppressed).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .contracts.stabilize import mean_round_half_up
from .trace import PLANT_COLUMNS, SCALE, Trace

IDEAL_LO = 130 * SCALE
IDEAL_HI = 160 * SCALE
BOIL_OVERSHOOT = 30       # 0.30 C
MAX_EVAPORATION = 40      # 0.40 kg per step
MIN_EVAPORATION = 1       # 0.01 kg per step

# Documented sampling ranges for random_scenario, physical units.
RANGES = {
    "T_env": (10.0, 30.0),
    "T_Boil": (90.0, 115.0),
    "burn_rate": (0.05, 0.30),
    "B_eq": (140.0, 155.0),
    "alpha": (0.02, 0.05),
    "beta": (0.40, 0.70),
    "liquid_heat_rate": (0.002, 0.006),
    "cooling_rate": (0.02, 0.05),
    "W_M0": (20.0, 60.0),
    "W_M_min": (5.0, 12.0),
    "Wo_M0": (25.0, 50.0),
    "Wo_M_min": (12.0, 20.0),
    "delivery_size": (15.0, 30.0),
}


@dataclass(frozen=True)
class PlantParams:
    burn_rate: float = 0.15          # kg/s
    alpha: float = 0.03              # burner heating coefficient, 1/s
    beta: float = 0.5                # burner -> boiler coupling, 1/s
    delta: float = 850.0             # C of equilibrium rise per kg/s burnt
    liquid_heat_rate: float = 0.004  # kg evaporated per C of burner excess per s
    T_Boil: float = 100.0
    T_env: float = 20.0
    W_M0: float = 40.0
    Wo_M0: float = 35.0
    delivery_size: float = 20.0
    Wo_M_min: float = 15.0
    W_M_min: float = 8.0
    cooling_rate: float = 0.03       # 1/s with the burner off
    delivery_latency: int = 30       # s
    wood_wait: int = 60              # s before an unanswered request raises alarms
    alarm_hold: int = 300            # s of critical alarm before forced shutdown
    period: int = 1                  # s
    sensor_window: int = 3           # moving-average window of the controller
    suppress_delivery: bool = False

    def __post_init__(self):
        for name in ("burn_rate", "alpha", "beta", "delta", "liquid_heat_rate",
                     "cooling_rate", "delivery_size", "period", "sensor_window"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.T_Boil <= self.T_env:
            raise ValueError("T_Boil must exceed T_env")
        if self.W_M0 <= 0 or self.Wo_M0 <= 0:
            raise ValueError("initial masses must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "PlantParams":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown plant parameters: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_meta(cls, meta: dict[str, str]) -> "PlantParams":
        """Parameters recorded in a trace's metadata by :func:`run`."""
        out = {}
        for f in fields(cls):
            if f.name in meta:
                raw = meta[f.name]
                default = f.default
                if isinstance(default, bool):
                    out[f.name] = raw in ("True", "1", "true")
                elif isinstance(default, int):
                    out[f.name] = int(raw)
                else:
                    out[f.name] = float(raw)
        return cls(**out)

    @property
    def B_eq(self) -> float:
        return self.T_env + self.delta * self.burn_rate

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PlantState:
    """Observables at one instant plus the controller's memory."""

    t: int
    B_T: int
    Bo_T: int
    W_M: int
    Wo_M: int
    T_env: int
    burner_on: int = 1
    W_A: int = 0
    Wo_A: int = 0
    Wo_R: int = 0
    Wo_D: int = 0
    critical_alarm: int = 0
    turn_off: int = 0
    reached_ideal: int = 0
    reached_boiling: int = 0
    shutdown: int = 0
    request_t0: int = -1     # step of the outstanding wood request, -1 if none
    alarm_t0: int = -1       # step at which the current critical alarm began
    history: tuple = field(default=(), repr=False)  # ((B_T, Bo_T, W_M, Wo_M), ...) newest first

    def observables(self) -> dict[str, int]:
        return {c: getattr(self, c) for c in PLANT_COLUMNS}


def _filtered(history, k: int) -> int:
    return int(mean_round_half_up(sum(h[k] for h in history), len(history)))


def _signals(s: PlantState, p: PlantParams, prev: PlantState | None) -> PlantState:
    """Controller outputs at ``s.t`` from the filtered sensor history."""
    f_bt = _filtered(s.history, 0)
    f_bo = _filtered(s.history, 1)
    f_wm = _filtered(s.history, 2)
    f_wo = _filtered(s.history, 3)
    t = s.t
    P = p.period

    wo_d = 0
    request_t0 = s.request_t0
    if request_t0 >= 0 and not p.suppress_delivery and (t - request_t0) * P >= p.delivery_latency:
        wo_d = 1
        request_t0 = -1
    wo_r = int(f_wo < round(p.Wo_M_min * SCALE))
    prev_r = prev.Wo_R if prev is not None else 0
    if wo_r and not prev_r and request_t0 < 0 and not wo_d:
        request_t0 = t
    overdue = int(request_t0 >= 0 and (t - request_t0) * P >= p.wood_wait)

    water_low = int(f_wm < round(p.W_M_min * SCALE))
    reached_ideal = int(s.reached_ideal or IDEAL_LO <= f_bt <= IDEAL_HI)
    critical = int(reached_ideal and not IDEAL_LO <= f_bt <= IDEAL_HI)
    alarm_t0 = s.alarm_t0
    shutdown = s.shutdown
    if critical:
        if alarm_t0 < 0:
            alarm_t0 = t
        if (t - alarm_t0) * P >= p.alarm_hold:
            shutdown = 1
    else:
        alarm_t0 = -1
    was_on = prev.burner_on if prev is not None else 1
    burner_on = int(was_on and not water_low and not shutdown)
    return replace(
        s, W_A=int(water_low or overdue), Wo_A=overdue, Wo_R=wo_r, Wo_D=wo_d,
        critical_alarm=critical, turn_off=water_low, reached_ideal=reached_ideal,
        reached_boiling=int(s.reached_boiling or f_bo >= round(p.T_Boil * SCALE)),
        shutdown=shutdown, request_t0=request_t0, alarm_t0=alarm_t0, burner_on=burner_on)


def initial_state(p: PlantParams) -> PlantState:
    t_env = round(p.T_env * SCALE)
    phys = (t_env, t_env, round(p.W_M0 * SCALE), round(p.Wo_M0 * SCALE))
    s = PlantState(0, phys[0], phys[1], phys[2], phys[3], t_env,
                   history=(phys,) * p.sensor_window)
    return _signals(s, p, None)


def _physics(s: PlantState, p: PlantParams) -> tuple[int, int, int, int]:
    P = p.period
    t_env = s.T_env
    t_boil = round(p.T_Boil * SCALE)
    burning = s.burner_on and s.Wo_M > 0

    wo = s.Wo_M
    if burning:
        wo = max(0, wo - round(p.burn_rate * P * SCALE))
    if s.Wo_D:
        wo += round(p.delivery_size * SCALE)

    bt = s.B_T
    if burning:
        b_eq = p.B_eq * SCALE
        bt = round(bt + min(1.0, p.alpha * P) * (b_eq - bt))
    elif bt > t_env:
        drop = max(1, round(min(1.0, p.cooling_rate * P) * (bt - t_env)))
        bt = max(t_env, bt - drop)

    cand = s.Bo_T + min(1.0, p.beta * P) * (s.B_T - s.Bo_T)
    bo = round(cand)
    if s.W_M > 0 and bo > t_boil:
        bo = t_boil + min(bo - t_boil, BOIL_OVERSHOOT)
    bo = max(t_env, bo)

    wm = s.W_M
    if s.Bo_T > t_boil and wm > 0:
        evap = round(p.liquid_heat_rate * P * max(0, s.B_T - t_boil))
        evap = min(MAX_EVAPORATION, max(MIN_EVAPORATION, evap))
        wm = max(0, wm - evap)
    return bt, bo, wm, wo


def step(s: PlantState, p: PlantParams) -> PlantState:
    """Advance one period."""
    bt, bo, wm, wo = _physics(s, p)
    hist = ((s.B_T, s.Bo_T, s.W_M, s.Wo_M),) + s.history[:-1]
    nxt = replace(s, t=s.t + 1, B_T=bt, Bo_T=bo, W_M=wm, Wo_M=wo, history=hist)
    return _signals(nxt, p, s)


def random_scenario(seed: int) -> PlantParams:
    """Parameters drawn uniformly from ``RANGES``; same seed, same parameters."""
    rng = np.random.default_rng(seed)

    def draw(name: str) -> float:
        lo, hi = RANGES[name]
        return float(round(rng.uniform(lo, hi), 4))

    t_env = draw("T_env")
    t_boil = draw("T_Boil")
    burn = draw("burn_rate")
    b_eq = draw("B_eq")
    return PlantParams(
        burn_rate=burn,
        alpha=draw("alpha"),
        beta=draw("beta"),
        delta=round((b_eq - t_env) / burn, 4),
        liquid_heat_rate=draw("liquid_heat_rate"),
        T_Boil=t_boil,
        T_env=t_env,
        W_M0=draw("W_M0"),
        Wo_M0=draw("Wo_M0"),
        delivery_size=draw("delivery_size"),
        Wo_M_min=draw("Wo_M_min"),
        W_M_min=draw("W_M_min"),
        cooling_rate=draw("cooling_rate"),
    )


def run(p: PlantParams, horizon: int, seed: int | None = None) -> Trace:
    """Simulate ``horizon`` rows starting from the initial state.

    The dynamics are deterministic; ``seed`` is recorded in the trace
    metadata for provenance.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    rows = []
    s = initial_state(p)
    for _ in range(horizon):
        rows.append(s.observables())
        s = step(s, p)
    cols = {c: np.array([r[c] for r in rows], dtype=np.int64) for c in PLANT_COLUMNS}
    cols["t"] = cols["t"] * p.period
    meta = {k: repr(v) for k, v in p.to_dict().items() if k not in ("period",)}
    if seed is not None:
        meta["seed"] = str(seed)
    return Trace(cols, p.period, meta)


def default_horizon(p: PlantParams) -> int:
    """Enough steps to boil the water down and cool off afterwards."""
    warm = math.log(max(2.0, (p.B_eq - p.T_env) / max(1.0, p.B_eq - p.T_Boil))) / p.alpha
    boil = (p.W_M0 - p.W_M_min) * SCALE / MAX_EVAPORATION
    return int(warm + boil + 400)
