"""Networks of timed automata: declarations, builder API and text format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import dbm
from .expr import (
    Binary,
    Const,
    Expr,
    ExprError,
    Name,
    Scope,
    COMPARISONS,
    compile_pred,
    conjuncts,
    const_eval,
    flip,
    mentions_clock,
    parse_expr,
    parse_updates,
    to_python,
    to_text,
)

FORMAT = "twincheck-network/1"


class ModelError(ValueError):
    """A malformed network: unknown names, bad guards, missing locations."""


class RangeViolation(RuntimeError):
    """An assignment drove a bounded variable outside its declared range."""

    def __init__(self, template: str, edge: str, variable: str, value: int, lo: int, hi: int):
        self.template = template
        self.edge = edge
        self.variable = variable
        self.value = value
        super().__init__(
            f"edge {template}:{edge} assigns {variable} = {value}, outside [{lo}, {hi}]"
        )


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int = 0
    hi: int = 1
    init: int = 0
    kind: str = "int"  # "int" | "bool"

    def __post_init__(self):
        if self.kind == "bool" and (self.lo, self.hi) != (0, 1):
            raise ModelError(f"boolean {self.name} must range over {{0, 1}}")
        if self.lo > self.hi:
            raise ModelError(f"variable {self.name}: lo {self.lo} > hi {self.hi}")
        if not self.lo <= self.init <= self.hi:
            raise ModelError(f"variable {self.name}: initial value {self.init} out of range")

    def to_dict(self) -> dict:
        return {"name": self.name, "type": self.kind, "lo": self.lo, "hi": self.hi,
                "init": self.init}

    @classmethod
    def from_dict(cls, d: dict) -> "VarDecl":
        return cls(d["name"], d.get("lo", 0), d.get("hi", 1), d.get("init", 0),
                   d.get("type", "int"))


@dataclass(frozen=True)
class Location:
    name: str
    invariant: str = ""
    committed: bool = False


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    guard: str = ""
    sync: str | None = None  # "ch!" or "ch?"
    update: str = ""

    @property
    def channel(self) -> str | None:
        return self.sync[:-1] if self.sync else None

    @property
    def direction(self) -> str | None:
        if not self.sync:
            return None
        return "send" if self.sync.endswith("!") else "receive"

    def label(self) -> str:
        parts = [f"{self.source}->{self.target}"]
        if self.guard:
            parts.append(f"[{self.guard}]")
        if self.sync:
            parts.append(self.sync)
        if self.update:
            parts.append(f"{{{self.update}}}")
        return " ".join(parts)


@dataclass
class UtaTemplate:
    name: str
    locations: list[Location] = field(default_factory=list)
    initial: str | None = None
    edges: list[Edge] = field(default_factory=list)
    variables: list[VarDecl] = field(default_factory=list)
    clocks: list[str] = field(default_factory=list)

    # builder conveniences
    def location(self, name: str, invariant: str = "", committed: bool = False,
                 initial: bool = False) -> "UtaTemplate":
        self.locations.append(Location(name, invariant, committed))
        if initial or self.initial is None:
            self.initial = name
        return self

    def edge(self, source: str, target: str, guard: str = "", sync: str | None = None,
             update: str = "") -> "UtaTemplate":
        self.edges.append(Edge(source, target, guard, sync, update))
        return self

    def int_var(self, name: str, lo: int, hi: int, init: int = 0) -> "UtaTemplate":
        self.variables.append(VarDecl(name, lo, hi, init))
        return self

    def clock(self, name: str) -> "UtaTemplate":
        self.clocks.append(name)
        return self

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "initial": self.initial,
            "clocks": list(self.clocks),
            "variables": [v.to_dict() for v in self.variables],
            "locations": [{"name": l.name, "invariant": l.invariant,
                           "committed": l.committed} for l in self.locations],
            "edges": [{"source": e.source, "target": e.target, "guard": e.guard,
                       "sync": e.sync, "update": e.update} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UtaTemplate":
        return cls(
            name=d["name"],
            locations=[Location(l["name"], l.get("invariant", ""), l.get("committed", False))
                       for l in d["locations"]],
            initial=d["initial"],
            edges=[Edge(e["source"], e["target"], e.get("guard", ""), e.get("sync"),
                        e.get("update", "")) for e in d["edges"]],
            variables=[VarDecl.from_dict(v) for v in d.get("variables", [])],
            clocks=list(d.get("clocks", [])),
        )


@dataclass(frozen=True)
class CompiledEdge:
    template: int
    index: int
    source: int
    target: int
    guard: Callable | None
    clock_guard: tuple
    update: Callable | None
    assigned: tuple
    resets: tuple
    label: str


@dataclass
class _CompiledTemplate:
    name: str
    loc_names: list[str]
    loc_index: dict[str, int]
    initial: int
    invariants: list[tuple]
    committed: list[bool]
    internal: list[list[CompiledEdge]]
    send: list[dict[str, list[CompiledEdge]]]
    receive: list[dict[str, list[CompiledEdge]]]


class Network:
    """An immutable, compiled network of timed automata.

    Variables of all templates share one valuation tuple; template-local
    variables and clocks are stored under ``Template.name``.  Clock ids are
    dense, starting at 1 (0 is the reference clock).
    """

    def __init__(self, templates: list[UtaTemplate], variables: list[VarDecl] = (),
                 clocks: list[str] = (), channels: list[str] = (),
                 constants: dict[str, int] | None = None,
                 arrays: dict[str, list[int]] | None = None,
                 meta: dict[str, Any] | None = None):
        self.templates = [UtaTemplate.from_dict(t.to_dict()) for t in templates]
        self.variables = list(variables)
        self.global_clocks = list(clocks)
        self.channels = list(channels)
        self.constants = dict(constants or {})
        self.arrays = {k: tuple(int(x) for x in v) for k, v in (arrays or {}).items()}
        self.meta = dict(meta or {})
        self._compile()

    # -- compilation ------------------------------------------------------
    def _compile(self) -> None:
        seen_t = set()
        for t in self.templates:
            if t.name in seen_t:
                raise ModelError(f"duplicate template {t.name}")
            seen_t.add(t.name)

        decls: list[VarDecl] = []
        var_slot: dict[str, int] = {}
        for v in self.variables:
            if v.name in var_slot:
                raise ModelError(f"duplicate variable {v.name}")
            var_slot[v.name] = len(decls)
            decls.append(v)
        clock_id: dict[str, int] = {}
        for c in self.global_clocks:
            if c in clock_id or c in var_slot:
                raise ModelError(f"duplicate name {c}")
            clock_id[c] = len(clock_id) + 1
        local_vars: dict[str, dict[str, int]] = {}
        local_clocks: dict[str, dict[str, int]] = {}
        for t in self.templates:
            lv, lc = {}, {}
            for v in t.variables:
                full = f"{t.name}.{v.name}"
                if full in var_slot:
                    raise ModelError(f"duplicate variable {full}")
                var_slot[full] = len(decls)
                lv[v.name] = var_slot[full]
                decls.append(VarDecl(full, v.lo, v.hi, v.init, v.kind))
            for c in t.clocks:
                full = f"{t.name}.{c}"
                clock_id[full] = len(clock_id) + 1
                lc[c] = clock_id[full]
            local_vars[t.name] = lv
            local_clocks[t.name] = lc

        self.decls = decls
        self.var_names = [d.name for d in decls]
        self.var_slot = var_slot
        self.lo = tuple(d.lo for d in decls)
        self.hi = tuple(d.hi for d in decls)
        self.init_vals = tuple(d.init for d in decls)
        self.clock_names = ["0"] + sorted(clock_id, key=clock_id.get)
        self.clock_id = clock_id
        self.nclocks = len(clock_id)
        self.dim = self.nclocks + 1

        locations = {}
        for ti, t in enumerate(self.templates):
            for li, loc in enumerate(t.locations):
                locations[(t.name, loc.name)] = (ti, li)
        base = Scope({k: v for k, v in var_slot.items() if "." not in k},
                     self.constants, self.arrays,
                     {k: v for k, v in clock_id.items() if "." not in k}, locations)
        self.scope = base

        maxc = [0] * self.dim
        self.has_diagonal = False
        channels = set(self.channels)
        compiled: list[_CompiledTemplate] = []
        for ti, t in enumerate(self.templates):
            scope = base.child(local_vars[t.name], local_clocks[t.name])
            names = [l.name for l in t.locations]
            if len(set(names)) != len(names):
                raise ModelError(f"{t.name}: duplicate location names")
            index = {n: i for i, n in enumerate(names)}
            if t.initial not in index:
                raise ModelError(f"{t.name}: initial location {t.initial!r} does not exist")
            invariants = []
            for loc in t.locations:
                cons = []
                if loc.invariant.strip():
                    inv = parse_expr(loc.invariant)
                    for c in conjuncts(inv):
                        i, j, b = _single_constraint(c, scope, f"{t.name}.{loc.name}")
                        if j != 0 or i == 0:
                            raise ModelError(
                                f"{t.name}.{loc.name}: invariant must be an upper bound "
                                f"on a clock, got {to_text(c)!r}")
                        cons.append((i, j, b))
                        maxc[i] = max(maxc[i], abs(dbm.bound_value(b)))
                invariants.append(tuple(cons))
            internal = [[] for _ in names]
            send = [{} for _ in names]
            receive = [{} for _ in names]
            for ei, e in enumerate(t.edges):
                if e.source not in index or e.target not in index:
                    raise ModelError(f"{t.name}: edge {e.label()} has an unknown endpoint")
                ce = self._compile_edge(ti, ei, t, e, index, scope, maxc)
                if e.sync:
                    if e.sync[-1] not in "!?":
                        raise ModelError(f"{t.name}: bad sync {e.sync!r}")
                    ch = e.channel
                    if ch not in channels:
                        raise ModelError(f"{t.name}: undeclared channel {ch!r}")
                    table = send if e.direction == "send" else receive
                    table[index[e.source]].setdefault(ch, []).append(ce)
                else:
                    internal[index[e.source]].append(ce)
            compiled.append(_CompiledTemplate(
                t.name, names, index, index[t.initial], invariants,
                [l.committed for l in t.locations], internal, send, receive))
        self.compiled = compiled
        self.maxc = tuple(maxc)
        self.initial_locs = tuple(ct.initial for ct in compiled)

    def _compile_edge(self, ti, ei, t, e, index, scope, maxc) -> CompiledEdge:
        where = f"{t.name}:{e.label()}"
        data_parts: list[Expr] = []
        clock_guard = []
        if e.guard.strip():
            try:
                g = parse_expr(e.guard)
            except ExprError as exc:
                raise ModelError(f"{where}: {exc}") from None
            for c in conjuncts(g):
                if mentions_clock(c, scope):
                    for (i, j, b) in _clock_constraints(c, scope, where):
                        if i != 0 and j != 0:
                            self.has_diagonal = True
                        clock_guard.append((i, j, b))
                        for k in (i, j):
                            if k:
                                maxc[k] = max(maxc[k], abs(dbm.bound_value(b)))
                else:
                    data_parts.append(c)
        guard = None
        if data_parts:
            expr = data_parts[0]
            for p in data_parts[1:]:
                expr = Binary("&&", expr, p)
            try:
                guard = compile_pred(expr, scope)
            except ExprError as exc:
                raise ModelError(f"{where}: {exc}") from None
        try:
            assigns = parse_updates(e.update)
        except ExprError as exc:
            raise ModelError(f"{where}: {exc}") from None
        resets = []
        lines = []
        env: dict = {}
        assigned = []
        for name, rhs in assigns:
            if name in scope.clocks:
                if not (isinstance(rhs, Const) and rhs.value == 0):
                    raise ModelError(f"{where}: clocks may only be reset to 0")
                resets.append(scope.clocks[name])
                continue
            if name not in scope.variables:
                raise ModelError(f"{where}: assignment to undeclared variable {name!r}")
            if mentions_clock(rhs, scope):
                raise ModelError(f"{where}: clock value assigned to data variable {name!r}")
            try:
                src = to_python(rhs, scope, env)
            except ExprError as exc:
                raise ModelError(f"{where}: {exc}") from None
            slot = scope.variables[name]
            lines.append(f"    v[{slot}] = int({src})")
            assigned.append(slot)
        update = None
        if lines:
            exec("def _upd(v):\n" + "\n".join(lines), env)
            update = env["_upd"]
        return CompiledEdge(ti, ei, index[e.source], index[e.target], guard,
                            tuple(clock_guard), update, tuple(dict.fromkeys(assigned)),
                            tuple(resets), e.label())

    # -- queries ----------------------------------------------------------
    def template_index(self, name: str) -> int:
        for i, t in enumerate(self.templates):
            if t.name == name:
                return i
        raise KeyError(name)

    def location_names(self, locs) -> tuple[str, ...]:
        return tuple(f"{ct.name}.{ct.loc_names[l]}" for ct, l in zip(self.compiled, locs))

    def valuation(self, vals) -> dict[str, int]:
        return dict(zip(self.var_names, vals))

    def check_range(self, vals, edge: CompiledEdge) -> None:
        lo, hi = self.lo, self.hi
        for s in edge.assigned:
            x = vals[s]
            if x < lo[s] or x > hi[s]:
                raise RangeViolation(self.templates[edge.template].name, edge.label,
                                     self.var_names[s], x, lo[s], hi[s])

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "clocks": list(self.global_clocks),
            "channels": list(self.channels),
            "constants": dict(self.constants),
            "arrays": {k: list(v) for k, v in self.arrays.items()},
            "variables": [v.to_dict() for v in self.variables],
            "templates": [t.to_dict() for t in self.templates],
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        if d.get("format") != FORMAT:
            raise ModelError(f"unsupported network format {d.get('format')!r}")
        return cls(
            templates=[UtaTemplate.from_dict(t) for t in d["templates"]],
            variables=[VarDecl.from_dict(v) for v in d.get("variables", [])],
            clocks=d.get("clocks", []),
            channels=d.get("channels", []),
            constants=d.get("constants", {}),
            arrays=d.get("arrays", {}),
            meta=d.get("meta", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "Network":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Network":
        return cls.loads(Path(path).read_text())


class NetworkBuilder:
    """Incremental construction of a :class:`Network`.

    >>> nb = NetworkBuilder()
    >>> nb.clock("x").channel("go")
    >>> t = nb.template("P")
    >>> t.location("idle").location("busy", invariant="x <= 3")
    >>> t.edge("idle", "busy", sync="go!", update="x = 0")
    """

    def __init__(self):
        self.templates: list[UtaTemplate] = []
        self.variables: list[VarDecl] = []
        self.clocks: list[str] = []
        self.channels: list[str] = []
        self.constants: dict[str, int] = {}
        self.arrays: dict[str, list[int]] = {}
        self.meta: dict[str, Any] = {}

    def clock(self, *names: str) -> "NetworkBuilder":
        self.clocks.extend(names)
        return self

    def channel(self, *names: str) -> "NetworkBuilder":
        self.channels.extend(names)
        return self

    def int_var(self, name: str, lo: int, hi: int, init: int = 0) -> "NetworkBuilder":
        self.variables.append(VarDecl(name, lo, hi, init))
        return self

    def bool_var(self, name: str, init: int = 0) -> "NetworkBuilder":
        self.variables.append(VarDecl(name, 0, 1, int(init), "bool"))
        return self

    def const(self, name: str, value: int) -> "NetworkBuilder":
        self.constants[name] = int(value)
        return self

    def array(self, name: str, values) -> "NetworkBuilder":
        self.arrays[name] = [int(x) for x in values]
        return self

    def template(self, name: str) -> UtaTemplate:
        t = UtaTemplate(name)
        self.templates.append(t)
        return t

    def add(self, template: UtaTemplate) -> "NetworkBuilder":
        self.templates.append(template)
        return self

    def build(self) -> Network:
        return Network(self.templates, self.variables, self.clocks, self.channels,
                       self.constants, self.arrays, self.meta)


# -- clock constraint extraction ---------------------------------------------

def _clock_term(e: Expr, scope: Scope):
    """Return (i, j) for ``x_i`` or ``x_i - x_j`` terms, else None."""
    if isinstance(e, Name) and e.name in scope.clocks:
        return scope.clocks[e.name], 0
    if (isinstance(e, Binary) and e.op == "-" and isinstance(e.left, Name)
            and isinstance(e.right, Name) and e.left.name in scope.clocks
            and e.right.name in scope.clocks):
        return scope.clocks[e.left.name], scope.clocks[e.right.name]
    return None


def _clock_constraints(e: Expr, scope: Scope, where: str) -> list[tuple[int, int, int]]:
    """Translate ``term op k`` into packed DBM constraints."""
    if not (isinstance(e, Binary) and e.op in COMPARISONS and e.op != "!="):
        raise ModelError(f"{where}: unsupported clock constraint {to_text(e)!r}")
    op, lhs, rhs = e.op, e.left, e.right
    term = _clock_term(lhs, scope)
    if term is None:
        term = _clock_term(rhs, scope)
        op, lhs, rhs = flip(op), rhs, lhs
    if term is None or mentions_clock(rhs, scope):
        raise ModelError(f"{where}: unsupported clock constraint {to_text(e)!r}")
    try:
        k = const_eval(rhs, scope)
    except ExprError:
        raise ModelError(f"{where}: clock bound must be a constant in {to_text(e)!r}") from None
    i, j = term
    out = []
    if op in ("<", "<=", "=="):
        out.append((i, j, dbm.bound(k, strict=(op == "<"))))
    if op in (">", ">=", "=="):
        out.append((j, i, dbm.bound(-k, strict=(op == ">"))))
    return out


def _single_constraint(e: Expr, scope: Scope, where: str) -> tuple[int, int, int]:
    cons = _clock_constraints(e, scope, where)
    if len(cons) != 1:
        raise ModelError(f"{where}: invariant must be an upper bound, got {to_text(e)!r}")
    return cons[0]
