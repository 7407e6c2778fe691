"""End-to-end runs: simulate, predict, stabilize, verify, report.

Run configuration (JSON)::

    {
      "seed": 7,                      # root seed; picks the plant scenario
      "params": {...},                # optional explicit PlantParams fields (overrides seed)
      "horizon": 500,                 # rows; default derived from the scenario
      "twin": {"source": "identity"}, # identity | monotone | anti-monotone |
                                      # fit (train_scenarios, train_horizon) | weights (path)
      "trace": "external.csv",        # optional: verify this CSV, no plant or twin
      "faults": [{"kind": "stuck_output", "signal": "pred_Bo_T",
                  "t_from": 250, "t_to": 290}],
      "contracts": ["MC1", "FC9"],    # or "all"
      "contract_params": {"lag": 2},  # ContractParams overrides, scaled units
      "output_dir": "out",            # default: $TWINCHECK_OUT or ./twincheck-out
      "formats": ["json", "csv", "plotdata"],
      "max_states": 2000000
    }

A contract-suite file is the same format restricted to ``trace``,
``contracts`` and ``contract_params``.

Exit codes: 0 all satisfied, 1 violations found, 2 inconclusive (and no
violations), 3 error.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, plant, twin
from .contracts import (
    CONTRACT_IDS,
    INCONCLUSIVE,
    VIOLATED,
    ContractParams,
    ContractResult,
    contract_signals,
    verify_suite,
)
from .contracts.model import check_id
from .trace import Trace, ingest_trace
from .verifier import DEFAULT_MAX_STATES

ENV_OUT = "TWINCHECK_OUT"
DEFAULT_OUT = "twincheck-out"
FORMATS = ("json", "csv", "plotdata")
TWIN_SOURCES = ("identity", "monotone", "anti-monotone", "fit", "weights")

EXIT_OK, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_ERROR = 0, 1, 2, 3


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


def default_output_dir() -> Path:
    return Path(os.environ.get(ENV_OUT) or DEFAULT_OUT)


@dataclass
class RunConfig:
    seed: int = 0
    params: dict | None = None
    horizon: int | None = None
    twin: dict = field(default_factory=lambda: {"source": "identity"})
    trace: str | None = None
    faults: list[dict] = field(default_factory=list)
    contracts: list[str] = field(default_factory=lambda: list(CONTRACT_IDS))
    contract_params: dict = field(default_factory=dict)
    output_dir: str | None = None
    formats: list[str] = field(default_factory=lambda: ["json"])
    max_states: int = DEFAULT_MAX_STATES

    def __post_init__(self):
        if self.contracts == "all":
            self.contracts = list(CONTRACT_IDS)
        if not self.contracts:
            raise PipelineError("config", "at least one contract must be selected")
        for cid in self.contracts:
            try:
                check_id(cid)
            except ValueError as exc:
                raise PipelineError("config", str(exc)) from None
        src = self.twin.get("source")
        if self.trace is None and src not in TWIN_SOURCES:
            raise PipelineError("config", f"unknown twin source {src!r}; expected one of "
                                          f"{', '.join(TWIN_SOURCES)}")
        if src == "weights" and not self.twin.get("path"):
            raise PipelineError("config", "twin source 'weights' needs a 'path'")
        bad = set(self.formats) - set(FORMATS)
        if bad:
            raise PipelineError("config", f"unknown report formats {sorted(bad)}")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise PipelineError("config", f"unknown configuration keys {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PipelineError("config", f"cannot read {path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def out_dir(self) -> Path:
        return Path(self.output_dir) if self.output_dir else default_output_dir()


@dataclass
class Report:
    config: dict
    scenario: dict
    trace: Trace
    results: list[ContractResult]
    wall_seconds: float
    timestamp: str
    contract_params: dict

    @property
    def violations(self):
        return [r for res in self.results for r in res.violations]

    @property
    def exit_code(self) -> int:
        statuses = {r.status for r in self.results}
        if VIOLATED in statuses:
            return EXIT_VIOLATED
        if INCONCLUSIVE in statuses:
            return EXIT_INCONCLUSIVE
        return EXIT_OK

    def to_dict(self) -> dict:
        counts = {s: sum(r.status == s for r in self.results)
                  for s in ("satisfied", "violated", "inconclusive")}
        return {
            "tool": "twincheck",
            "version": __version__,
            "timestamp": self.timestamp,
            "config": self.config,
            "scenario": self.scenario,
            "contract_params": self.contract_params,
            "trace": {"rows": len(self.trace), "period": self.trace.period,
                      "columns": list(self.trace.schema)},
            "summary": {**counts, "exit_code": self.exit_code},
            "contracts": [r.to_dict() for r in self.results],
        }


# -- stages ---------------------------------------------------------------------

def scenario_params(cfg: RunConfig) -> plant.PlantParams:
    if cfg.params is not None:
        return plant.PlantParams.from_dict(cfg.params)
    return plant.random_scenario(cfg.seed)


def make_surrogate(spec: dict, root_seed: int) -> twin.Surrogate:
    src = spec.get("source", "identity")
    if src == "identity":
        return twin.identity_stub()
    if src == "monotone":
        return twin.monotone_surrogate()
    if src == "anti-monotone":
        return twin.anti_monotone_surrogate()
    if src == "weights":
        return twin.LinearSurrogate.load(spec["path"])
    if src == "fit":
        n = int(spec.get("train_scenarios", 10))
        horizon = int(spec.get("train_horizon", 400))
        seeds = np.random.SeedSequence(root_seed).generate_state(n)
        traces = [plant.run(plant.random_scenario(int(s)), horizon, int(s)) for s in seeds]
        return twin.fit(traces, spec.get("features", "interaction"), seed=root_seed)
    raise PipelineError("twin", f"unknown twin source {src!r}")


def produce_trace(cfg: RunConfig) -> tuple[Trace, dict]:
    """Plant run plus twin rollout, or an ingested external trace."""
    if cfg.trace is not None:
        try:
            tr = ingest_trace(cfg.trace)
        except (OSError, ValueError) as exc:
            raise PipelineError("ingest", str(exc)) from None
        return tr, {"source": "external", "path": str(cfg.trace)}
    try:
        p = scenario_params(cfg)
        horizon = cfg.horizon or plant.default_horizon(p)
    except (ValueError, TypeError) as exc:
        raise PipelineError("simulate", str(exc)) from None
    try:
        s = make_surrogate(cfg.twin, cfg.seed)
        faults = tuple(twin.FaultSpec.from_dict(f) for f in cfg.faults)
        tr = twin.rollout(s, p, horizon, cfg.seed, faults)
    except (ValueError, TypeError, KeyError) as exc:
        raise PipelineError("twin", str(exc)) from None
    return tr, {"source": "plant", "seed": cfg.seed, "horizon": horizon, "params": p.to_dict()}


def contract_params_for(trace: Trace, overrides: dict) -> ContractParams:
    try:
        return ContractParams.from_meta(trace.meta, period=trace.period,
                                        **{k: int(v) for k, v in overrides.items()})
    except (TypeError, ValueError) as exc:
        raise PipelineError("config", f"contract parameters: {exc}") from None


def verify_trace(trace: Trace, ids, params: ContractParams,
                 max_states: int = DEFAULT_MAX_STATES) -> list[ContractResult]:
    for cid in ids:
        for s in contract_signals(cid):
            if s.column not in trace:
                raise PipelineError("verify", f"{cid}: trace is missing column {s.column!r}")
    try:
        return verify_suite(trace, ids, params, max_states)
    except ValueError as exc:
        raise PipelineError("verify", str(exc)) from None


def run_pipeline(cfg: RunConfig) -> Report:
    t0 = time.perf_counter()
    trace, scenario = produce_trace(cfg)
    cp = contract_params_for(trace, cfg.contract_params)
    results = verify_trace(trace, cfg.contracts, cp, cfg.max_states)
    return Report(cfg.to_dict(), scenario, trace, results, time.perf_counter() - t0,
                  datetime.now(timezone.utc).isoformat(timespec="seconds"), cp.to_dict())


# -- reports ----------------------------------------------------------------------

VIOLATION_COLUMNS = ("contract", "query", "row", "t", "signals")


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise PipelineError("report", f"cannot write {path}: {exc}") from None


def report_json(r: Report) -> str:
    return json.dumps(r.to_dict(), indent=1, sort_keys=False) + "\n"


def violations_csv(r: Report) -> str:
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VIOLATION_COLUMNS)
    t = r.trace["t"]
    for v in r.violations:
        sig = ";".join(f"{k}={val}" for k, val in sorted(v.signals.items()))
        w.writerow([v.contract, v.query, v.row, int(t[v.row]), sig])
    return buf.getvalue()


def plot_series(r: Report) -> dict[str, list[tuple[int, int]]]:
    """Every trace column plus the contract thresholds as (t, value) series."""
    t = [int(x) for x in r.trace["t"]]
    out = {name: list(zip(t, (int(x) for x in r.trace[name])))
           for name in r.trace.schema if name != "t"}
    for k in ("T_Boil", "W_M_min", "Wo_M_min", "ideal_lo", "ideal_hi"):
        out[k] = [(ti, int(r.contract_params[k])) for ti in t]
    return out


def emit_report(r: Report, formats=("json",), out_dir=None) -> list[Path]:
    """Write the requested formats; return the files written.

    ``json``: report.json (deterministic except ``timestamp``), plus
    timing.json with wall times.  ``csv``: violations.csv, one row per
    violation.  ``plotdata``: plotdata/<signal>.csv with ``t,value`` rows
    and plotdata/violations.csv marking violation times.
    """
    out = Path(out_dir) if out_dir is not None else default_output_dir()
    written = []
    for fmt in formats:
        if fmt not in FORMATS:
            raise PipelineError("report", f"unknown format {fmt!r}")
    if "json" in formats:
        _write(out / "report.json", report_json(r))
        timing = {"wall_seconds": round(r.wall_seconds, 6),
                  "contracts": {res.contract: round(res.seconds, 6) for res in r.results}}
        _write(out / "timing.json", json.dumps(timing, indent=1) + "\n")
        _write(out / "trace.csv", r.trace.to_csv())
        written += [out / "report.json", out / "timing.json", out / "trace.csv"]
    if "csv" in formats:
        _write(out / "violations.csv", violations_csv(r))
        written.append(out / "violations.csv")
    if "plotdata" in formats:
        pd = out / "plotdata"
        for name, series in plot_series(r).items():
            _write(pd / f"{name}.csv", "t,value\n" + "".join(f"{a},{b}\n" for a, b in series))
            written.append(pd / f"{name}.csv")
        marks = "t,row,contract\n" + "".join(
            f"{int(r.trace['t'][v.row])},{v.row},{v.contract}\n" for v in r.violations)
        _write(pd / "violations.csv", marks)
        written.append(pd / "violations.csv")
    return written


def summarize(report: dict) -> str:
    """Human-readable table from a report dict (as stored in report.json)."""
    lines = [f"{'contract':<8} {'status':<13} {'states':>8}  first violation"]
    for c in report["contracts"]:
        first = c["violations"][0]["row"] if c["violations"] else "-"
        lines.append(f"{c['contract']:<8} {c['status']:<13} {c['states_explored']:>8}  {first}")
    s = report["summary"]
    lines.append(f"satisfied {s['satisfied']}, violated {s['violated']}, "
                 f"inconclusive {s['inconclusive']}; exit code {s['exit_code']}")
    return "\n".join(lines)
