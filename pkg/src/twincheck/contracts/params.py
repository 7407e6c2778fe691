"""Contract parameters, all in scaled integer units."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

from ..trace import scale


@dataclass(frozen=True)
class ContractParams:
    m: int = 3                 # stabilization window, steps
    epsilon: int = 50          # tolerance for "approximately equal" and trend bands
    lag: int = 2               # steps a monotonicity guarantee may trail its assumption
    T_Boil: int = 10000
    Wo_M_min: int = 1500
    W_M_min: int = 800
    ideal_lo: int = 13000
    ideal_hi: int = 16000
    wood_wait: int = 60        # s
    alarm_hold: int = 300      # s
    period: int = 1            # s

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.lag < 0:
            raise ValueError("lag must be nonnegative")
        if self.ideal_lo >= self.ideal_hi:
            raise ValueError("ideal range must have lo < hi")
        if self.period < 1 or self.wood_wait < 1 or self.alarm_hold < 1:
            raise ValueError("period, wood_wait and alarm_hold must be positive")

    @classmethod
    def from_plant(cls, p, **overrides) -> "ContractParams":
        """Thresholds taken from a :class:`~twincheck.plant.PlantParams`."""
        base = cls(T_Boil=scale(p.T_Boil), Wo_M_min=scale(p.Wo_M_min),
                   W_M_min=scale(p.W_M_min), wood_wait=p.wood_wait,
                   alarm_hold=p.alarm_hold, period=p.period)
        return replace(base, **overrides)

    @classmethod
    def from_meta(cls, meta: dict[str, str], **overrides) -> "ContractParams":
        """Thresholds from plant parameters recorded in trace metadata, if any."""
        base = cls()
        kw = {}
        for k in ("T_Boil", "Wo_M_min", "W_M_min"):
            if k in meta:
                kw[k] = scale(float(meta[k]))
        for k in ("wood_wait", "alarm_hold"):
            if k in meta:
                kw[k] = int(meta[k])
        if "period" in meta:
            kw["period"] = int(meta["period"])
        return replace(base, **{**kw, **overrides})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ContractParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown contract parameters: {sorted(unknown)}")
        return cls(**{k: int(v) for k, v in d.items()})
