"""Time-indexed traces of plant observables and twin predictions.

Analog signals (temperatures in degrees C, masses in kg) are stored as
integers scaled by ``SCALE`` = 100, so 150.00 C is 15000.  Boolean signals
are 0/1 and the time column ``t`` is in whole seconds.

CSV layout, byte for byte::

    # twincheck-trace/1
    # period=1
    # alpha=0.0312
    t,B_T,Bo_T,...
    0,2000,2000,...

Lines starting with ``#`` before the header carry ``key=value`` metadata
(``period`` is mandatory on write, defaulted to 1 on read).  Then one header
row naming the columns, then one row per step, comma-separated, ``\\n`` line
endings, no trailing spaces.  Column order is preserved on round trips.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCALE = 100
MAGIC = "twincheck-trace/1"

# Plant observables in canonical column order.
ANALOG = ("B_T", "Bo_T", "W_M", "Wo_M", "T_env")
BOOLEAN = ("W_A", "Wo_A", "Wo_R", "Wo_D", "burner_on", "critical_alarm", "turn_off")
PLANT_COLUMNS = ("t", "B_T", "Bo_T", "W_M", "Wo_M", "W_A", "Wo_A", "Wo_R", "Wo_D",
                 "burner_on", "critical_alarm", "turn_off", "T_env")
# Signals the twin predicts (the pred_* columns).
PREDICTED = ("B_T", "Bo_T", "W_M", "Wo_M", "W_A", "Wo_A", "Wo_R", "Wo_D")
PRED_COLUMNS = tuple("pred_" + s for s in PREDICTED)


class TraceError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def scale(x) -> int:
    """Physical value to scaled integer, rounding half away from zero."""
    v = float(x) * SCALE
    return int(np.floor(v + 0.5)) if v >= 0 else -int(np.floor(-v + 0.5))


def unscale(v) -> float:
    return v / SCALE


def is_boolean(column: str) -> bool:
    base = column[5:] if column.startswith("pred_") else column
    return base in BOOLEAN


@dataclass
class Trace:
    """Columns of equal length keyed by name, plus metadata."""

    columns: dict[str, np.ndarray]
    period: int = 1
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v, dtype=np.int64) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise TraceError(f"columns have different lengths {sorted(lengths)}")
        if "t" not in self.columns:
            self.columns = {"t": np.arange(len(self)) * self.period, **self.columns}

    def __len__(self) -> int:
        for v in self.columns.values():
            return len(v)
        return 0

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"trace has no column {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    @property
    def schema(self) -> tuple[str, ...]:
        return tuple(self.columns)

    def row(self, i: int) -> dict[str, int]:
        return {k: int(v[i]) for k, v in self.columns.items()}

    def rows(self):
        for i in range(len(self)):
            yield self.row(i)

    def with_columns(self, **cols) -> "Trace":
        merged = dict(self.columns)
        merged.update(cols)
        return Trace(merged, self.period, dict(self.meta))

    def slice(self, start: int, stop: int) -> "Trace":
        return Trace({k: v[start:stop] for k, v in self.columns.items()}, self.period,
                     dict(self.meta))

    def require(self, *names: str, context: str = "") -> None:
        for n in names:
            if n not in self.columns:
                where = f" (required by {context})" if context else ""
                raise TraceError(f"missing column {n!r}{where}")

    def equals(self, other: "Trace") -> bool:
        return (self.schema == other.schema and self.period == other.period
                and all(np.array_equal(self[c], other[c]) for c in self.schema))

    # -- CSV ----------------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {MAGIC}\n")
        buf.write(f"# period={self.period}\n")
        for k, v in self.meta.items():
            if k != "period":
                buf.write(f"# {k}={v}\n")
        names = list(self.columns)
        buf.write(",".join(names) + "\n")
        data = np.column_stack([self.columns[n] for n in names]) if names else np.zeros((0, 0))
        for r in data:
            buf.write(",".join(str(int(x)) for x in r) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())


def read_csv(text: str, required: tuple[str, ...] = ()) -> Trace:
    """Parse the CSV layout above, validating schema and time monotonicity."""
    meta: dict[str, str] = {}
    header = None
    rows: list[list[int]] = []
    row_lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if header is None and line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            if len(set(header)) != len(header):
                raise TraceError("duplicate column names in header", lineno)
            if "t" not in header:
                raise TraceError("missing column 't'", lineno)
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise TraceError(f"expected {len(header)} fields, found {len(cells)}", lineno)
        try:
            vals = [int(c) for c in cells]
        except ValueError:
            raise TraceError(f"malformed row {line!r}", lineno) from None
        if rows and vals[header.index("t")] <= rows[-1][header.index("t")]:
            raise TraceError("time column is not strictly increasing", lineno)
        rows.append(vals)
        row_lines.append(lineno)
    if header is None:
        raise TraceError("missing header row")
    if not rows:
        raise TraceError("empty trace")
    for name in required:
        if name not in header:
            raise TraceError(f"missing column {name!r}")
    period = int(meta.pop("period", "1"))
    arr = np.array(rows, dtype=np.int64)
    t = arr[:, header.index("t")]
    if len(t) > 1 and not np.all(np.diff(t) == period):
        bad = int(np.argmax(np.diff(t) != period))
        raise TraceError(f"time step differs from period {period}", row_lines[bad + 1])
    trace = Trace({n: arr[:, i] for i, n in enumerate(header)}, period, meta)
    return trace


def ingest_trace(path, required: tuple[str, ...] = ()) -> Trace:
    """Read a trace file written by :meth:`Trace.write_csv` or by an external tool."""
    p = Path(path)
    if not p.exists():
        raise TraceError(f"no such trace file: {p}")
    return read_csv(p.read_text(), required)
