"""Command line interface.

    twincheck simulate --seed 3 --horizon 400 -o plant.csv
    twincheck rollout  --seed 3 --twin identity --fault stuck_output:pred_Bo_T:250:290 -o twin.csv
    twincheck verify   twin.csv --contracts MC1,FC9
    twincheck pipeline --config run.json
    twincheck report   out/report.json

Output files go to ``--out-dir``, else ``$TWINCHECK_OUT``, else ./twincheck-out.
Exit codes: 0 all satisfied, 1 violations, 2 inconclusive, 3 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, plant, twin
from .pipeline import (
    ENV_OUT,
    EXIT_ERROR,
    EXIT_OK,
    FORMATS,
    TWIN_SOURCES,
    PipelineError,
    RunConfig,
    default_output_dir,
    emit_report,
    make_surrogate,
    run_pipeline,
    scenario_params,
    summarize,
)
from .trace import TraceError


def _fault(text: str) -> dict:
    """``kind:signal:from:to[:key=value,...]``"""
    parts = text.split(":")
    if len(parts) < 4:
        raise argparse.ArgumentTypeError(
            f"fault {text!r} must look like kind:signal:from:to[:key=value,...]")
    d = {"kind": parts[0], "signal": parts[1], "t_from": int(parts[2]), "t_to": int(parts[3])}
    if len(parts) > 4:
        for kv in parts[4].split(","):
            k, _, v = kv.partition("=")
            d[k] = int(v) if k in ("seed", "steps") else float(v)
    return d


def _preset(text: str) -> dict:
    try:
        return twin.preset(text).to_dict()
    except twin.TwinError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _kv(text: str) -> tuple[str, int]:
    k, sep, v = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return k, int(v)


def _contracts(text: str) -> list[str]:
    return "all" if text == "all" else [c.strip() for c in text.split(",") if c.strip()]


def _scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="root seed (default 0)")
    p.add_argument("--params", type=Path, help="JSON file with explicit plant parameters")
    p.add_argument("--horizon", type=int, help="rows to simulate (default: scenario-derived)")


def _twin_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--twin", default="identity", choices=TWIN_SOURCES)
    p.add_argument("--weights", type=Path, help="surrogate weights file (--twin weights)")
    p.add_argument("--train-scenarios", type=int, default=10)
    p.add_argument("--fault", type=_fault, action="append", default=[],
                   help="kind:signal:from:to[:key=value,...], repeatable")
    p.add_argument("--preset", type=_preset, action="append", dest="fault",
                   help=f"named fault scenario ({', '.join(twin.PRESETS)}), repeatable")


def _verify_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--contracts", type=_contracts,
                   help="comma-separated contract ids or 'all' (default all)")
    p.add_argument("--param", type=_kv, action="append", default=[],
                   help="contract parameter override key=value (scaled units)")
    p.add_argument("--out-dir", type=Path, help=f"output directory (default ${ENV_OUT})")
    p.add_argument("--format", dest="formats",
                   help=f"comma-separated subset of {','.join(FORMATS)} (default json)")
    p.add_argument("--max-states", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twincheck", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"twincheck {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the plant and write a trace")
    _scenario_args(p)
    p.add_argument("-o", "--output", type=Path)

    p = sub.add_parser("rollout", help="run plant and twin side by side")
    _scenario_args(p)
    _twin_args(p)
    p.add_argument("-o", "--output", type=Path)
    p.add_argument("--save-weights", type=Path, help="write the surrogate's weights here")

    p = sub.add_parser("verify", help="check contracts on a trace file")
    p.add_argument("trace", type=Path)
    _verify_args(p)

    p = sub.add_parser("pipeline", help="simulate, predict, verify and report")
    p.add_argument("--config", type=Path, help="JSON run configuration")
    _scenario_args(p)
    _twin_args(p)
    _verify_args(p)

    p = sub.add_parser("report", help="summarize a stored report.json")
    p.add_argument("report", type=Path)
    p.add_argument("--json", action="store_true", help="print the raw summary as JSON")
    return ap


def _config_from_args(a, trace: Path | None = None) -> RunConfig:
    """A config file when given, with any explicit flags layered on top."""
    if getattr(a, "config", None):
        try:
            base = json.loads(a.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise PipelineError("config", f"cannot read {a.config}: {exc}") from None
    elif trace is not None:
        base = {"trace": str(trace)}
    else:
        base = {"seed": a.seed, "horizon": a.horizon, "faults": a.fault,
                "twin": _twin_spec(a)}
        if a.params:
            base["params"] = json.loads(a.params.read_text())
    if a.contracts is not None:
        base["contracts"] = a.contracts
    if a.param:
        base["contract_params"] = {**base.get("contract_params", {}), **dict(a.param)}
    if a.out_dir:
        base["output_dir"] = str(a.out_dir)
    if a.formats:
        base["formats"] = [f for f in a.formats.split(",") if f]
    if a.max_states:
        base["max_states"] = a.max_states
    return RunConfig.from_dict(base)


def _twin_spec(a) -> dict:
    spec = {"source": a.twin, "train_scenarios": a.train_scenarios}
    if a.weights:
        spec["path"] = str(a.weights)
    return spec


def _write_trace(tr, output: Path | None, name: str) -> Path:
    path = output or default_output_dir() / name
    path.parent.mkdir(parents=True, exist_ok=True)
    tr.write_csv(path)
    return path


def _run(a) -> int:
    if a.command == "simulate":
        cfg = RunConfig(seed=a.seed, horizon=a.horizon,
                        params=json.loads(a.params.read_text()) if a.params else None)
        p = scenario_params(cfg)
        tr = plant.run(p, a.horizon or plant.default_horizon(p), a.seed)
        print(_write_trace(tr, a.output, "plant.csv"))
        return EXIT_OK
    if a.command == "rollout":
        cfg = RunConfig(seed=a.seed, horizon=a.horizon,
                        params=json.loads(a.params.read_text()) if a.params else None,
                        twin=_twin_spec(a),
                        faults=a.fault)
        p = scenario_params(cfg)
        s = make_surrogate(cfg.twin, a.seed)
        if a.save_weights:
            if not isinstance(s, twin.LinearSurrogate):
                raise PipelineError("twin", f"twin {a.twin!r} has no weights to save")
            s.save(a.save_weights)
        faults = tuple(twin.FaultSpec.from_dict(f) for f in a.fault)
        tr = twin.rollout(s, p, a.horizon or plant.default_horizon(p), a.seed, faults)
        print(_write_trace(tr, a.output, "twin.csv"))
        return EXIT_OK
    if a.command in ("verify", "pipeline"):
        cfg = _config_from_args(a, a.trace if a.command == "verify" else None)
        report = run_pipeline(cfg)
        emit_report(report, cfg.formats, cfg.out_dir())
        print(summarize(report.to_dict()))
        print(f"report written to {cfg.out_dir()}")
        return report.exit_code
    if a.command == "report":
        data = json.loads(a.report.read_text())
        if a.json:
            print(json.dumps(data["summary"]))
        else:
            print(summarize(data))
        return int(data["summary"]["exit_code"])
    raise PipelineError("cli", f"unknown command {a.command}")  # pragma: no cover


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return _run(a)
    except PipelineError as exc:
        print(f"twincheck: error {exc}", file=sys.stderr)
    except (TraceError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"twincheck: error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
