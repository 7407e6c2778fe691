"""Invariance and reachability queries over networks of timed automata.

Queries are written ``A[] p`` (every reachable state satisfies ``p``) or
``E<> p`` (some reachable state satisfies ``p``), where ``p`` is a boolean
combination of ``Template.Location`` atoms and integer comparisons over data
variables.

Predicates are evaluated in *settled* states only, i.e. states where no
template sits in a committed location.  Committed locations model atomic
multi-step updates (the trace driver uses them to notify the contract
automata one after another), so the half-updated intermediate states are
not observable.  Both the zone-based checker and the explicit oracle use
this convention.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .automata import dbm
from .automata.dbm import Zone
from .automata.expr import Binary, Expr, ExprError, LocAtom, Name, negate, parse_expr, to_text, walk
from .automata.network import Network
from .automata.semantics import Explorer, SymState, VacuousModel, compile_state_pred

INVARIANCE = "A[]"
REACHABILITY = "E<>"

DEFAULT_MAX_STATES = 2_000_000


class QueryError(ValueError):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        super().__init__(message if pos is None else f"{message} (at position {pos})")


class Inconclusive(RuntimeError):
    """Exploration hit a resource limit before the query was decided."""

    def __init__(self, explored: int, frontier: int, limit: int):
        self.explored = explored
        self.frontier = frontier
        self.limit = limit
        super().__init__(
            f"inconclusive: state limit {limit} reached after {explored} states "
            f"({frontier} still on the frontier)"
        )


@dataclass(frozen=True)
class Query:
    kind: str  # INVARIANCE | REACHABILITY
    predicate: Expr
    text: str = ""

    def __str__(self) -> str:
        return self.text or f"{self.kind} {to_text(self.predicate)}"

    @property
    def is_invariance(self) -> bool:
        return self.kind == INVARIANCE

    def dual(self) -> "Query":
        """``A[] p`` <-> ``E<> not p``."""
        kind = REACHABILITY if self.is_invariance else INVARIANCE
        p = self.predicate
        if isinstance(p, Binary) and p.op == "imply":
            pred = Binary("&&", p.left, negate(p.right))
        else:
            pred = negate(p)
        return Query(kind, pred, f"{kind} {to_text(pred)}")


def parse_query(text: str, net: Network | None = None) -> Query:
    """Parse ``A[] p`` / ``E<> p``; when ``net`` is given, bind and type-check."""
    stripped = text.lstrip()
    offset = len(text) - len(stripped)
    for kind in (INVARIANCE, REACHABILITY):
        if stripped.startswith(kind):
            body = stripped[len(kind):]
            offset += len(kind)
            break
    else:
        raise QueryError("query must start with 'A[]' or 'E<>'", offset)
    try:
        pred = parse_expr(body)
    except ExprError as exc:
        pos = None if exc.pos is None else exc.pos + offset
        raise QueryError(str(exc).split(" (at position")[0], pos) from None
    q = Query(kind, pred, text.strip())
    if net is not None:
        bind(q, net, offset)
    return q


def bind(q: Query, net: Network, offset: int = 0) -> None:
    """Check that every atom of the predicate names something in ``net``."""
    locs = {(ct.name, n) for ct in net.compiled for n in ct.loc_names}
    for node in walk(q.predicate):
        pos = None if getattr(node, "pos", -1) < 0 else node.pos + offset
        if isinstance(node, LocAtom):
            if f"{node.template}.{node.location}" in net.var_slot:
                continue
            if (node.template, node.location) not in locs:
                raise QueryError(f"unknown location {node.template}.{node.location}", pos)
        elif isinstance(node, Name):
            if node.name in net.clock_id:
                raise QueryError("clock predicates unsupported in queries", pos)
            if node.name not in net.var_slot and node.name not in net.constants:
                raise QueryError(f"unknown variable {node.name!r}", pos)


@dataclass
class TraceStep:
    locations: tuple[str, ...]
    valuation: dict[str, int]
    action: str
    zone: Zone | None = None
    trace_row: int | None = None
    state: SymState | None = field(default=None, repr=False)
    clocks: tuple | None = None  # integer clock values (explicit oracle only)


@dataclass
class DiagnosticTrace:
    steps: list[TraceStep]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final(self) -> TraceStep:
        return self.steps[-1]

    def to_dict(self) -> dict:
        return {"steps": [
            {"locations": list(s.locations), "valuation": s.valuation, "action": s.action,
             "zone": None if s.zone is None else str(s.zone), "trace_row": s.trace_row}
            for s in self.steps]}


@dataclass
class Verdict:
    query: Query
    satisfied: bool
    evidence: DiagnosticTrace | None
    states_explored: int
    seconds: float = 0.0

    def to_dict(self, with_evidence: bool = True) -> dict:
        d = {
            "query": str(self.query),
            "kind": self.query.kind,
            "satisfied": self.satisfied,
            "states_explored": self.states_explored,
            "evidence_steps": 0 if self.evidence is None else len(self.evidence),
        }
        if with_evidence:
            d["evidence"] = None if self.evidence is None else self.evidence.to_dict()
        return d


# -- zone-based exploration ---------------------------------------------------------

def _trace_row(net: Network, vals) -> int | None:
    rv = net.meta.get("row_var")
    if rv is None:
        return None
    return net.meta.get("row_offset", 0) + vals[net.var_slot[rv]]


def _rebuild(net: Network, ex: Explorer, nodes, idx: int) -> DiagnosticTrace:
    chain = []
    while idx is not None:
        state, parent, action = nodes[idx]
        chain.append((state, action if isinstance(action, str) else action.describe(net)))
        idx = parent
    steps = []
    for state, action in reversed(chain):
        steps.append(TraceStep(net.location_names(state.locs), net.valuation(state.vals),
                               action, Zone(ex.dim, state.zone), _trace_row(net, state.vals),
                               state))
    return DiagnosticTrace(steps)


def _settled(net: Network, locs) -> bool:
    for ct, l in zip(net.compiled, locs):
        if ct.committed[l]:
            return False
    return True


def check_all(net: Network, queries: list[Query], max_states: int = DEFAULT_MAX_STATES,
              horizon: int | None = None, subsumption: bool = True) -> list[Verdict]:
    """Decide several queries with one breadth-first exploration.

    Exploration stops as soon as every query is decided (an invariance query
    is decided by its first violating state, a reachability query by its
    first witness).  Evidence is reconstructed through parent links, so
    counterexamples are shortest in number of transitions.
    """
    t0 = time.perf_counter()
    ex = Explorer(net, horizon=horizon)
    preds = [compile_state_pred(net, q.predicate) for q in queries]
    found: list[int | None] = [None] * len(queries)
    open_q = list(range(len(queries)))
    nodes: list[tuple] = []
    passed: dict[tuple, list] = {}
    queue: deque[int] = deque()

    def visit(state: SymState) -> None:
        idx = len(nodes) - 1
        if not open_q or not _settled(net, state.locs):
            return
        for qi in list(open_q):
            holds = preds[qi](state.vals, state.locs)
            if holds != queries[qi].is_invariance:
                found[qi] = idx
                open_q.remove(qi)

    def add(state: SymState, parent, action) -> None:
        key = (state.locs, state.vals)
        zones = passed.get(key)
        if zones is not None:
            if subsumption:
                for z in zones:
                    if dbm.includes(z, state.zone):
                        return
            elif state.zone in zones:
                return
            zones.append(state.zone)
        else:
            passed[key] = [state.zone]
        nodes.append((state, parent, action))
        queue.append(len(nodes) - 1)
        visit(state)

    add(ex.initial(), None, "initial")
    while queue and open_q:
        if len(nodes) > max_states:
            raise Inconclusive(len(nodes), len(queue), max_states)
        idx = queue.popleft()
        state = nodes[idx][0]
        for succ, tr in ex.successors(state):
            add(succ, idx, tr)
            if not open_q:
                break
    elapsed = time.perf_counter() - t0
    out = []
    for qi, q in enumerate(queries):
        hit = found[qi]
        satisfied = (hit is None) if q.is_invariance else (hit is not None)
        evidence = None if hit is None else _rebuild(net, ex, nodes, hit)
        out.append(Verdict(q, satisfied, evidence, len(nodes), elapsed))
    return out


def check(net: Network, q: Query | str, max_states: int = DEFAULT_MAX_STATES,
          horizon: int | None = None, subsumption: bool = True) -> Verdict:
    """Model-check one query by exhaustive forward exploration."""
    if isinstance(q, str):
        q = parse_query(q, net)
    return check_all(net, [q], max_states, horizon, subsumption)[0]


def check_duality(net: Network, p: Expr | str, **limits) -> bool:
    """``A[] p`` holds exactly when ``E<> not p`` fails."""
    if isinstance(p, str):
        p = parse_expr(p)
    inv = Query(INVARIANCE, p)
    reach = Query(REACHABILITY, negate(p))
    a = check(net, inv, **limits).satisfied
    e = check(net, reach, **limits).satisfied
    return a == (not e)


def replay(net: Network, trace: DiagnosticTrace, horizon: int | None = None) -> bool:
    """Re-derive every step of a zone-based trace from its predecessor."""
    ex = Explorer(net, horizon=horizon)
    first = trace.steps[0].state
    if first != ex.initial():
        return False
    prev = first
    for step in trace.steps[1:]:
        if step.state not in [s for s, _ in ex.successors(prev)]:
            return False
        prev = step.state
    return True


# -- explicit integer-time oracle ------------------------------------------------------

def _clock_ok(cons, clocks) -> bool:
    for (i, j, b) in cons:
        diff = clocks[i] - clocks[j]
        lim = b >> 1
        if diff > lim or (diff == lim and not (b & 1)):
            return False
    return True


def explicit_oracle(net: Network, q: Query | str, horizon: int,
                    max_states: int = 500_000) -> Verdict:
    """Brute-force verdict with integer clock values advancing in unit ticks.

    Total elapsed time is bounded by ``horizon``.  For networks whose clock
    constraints are all non-strict (closed timed automata) integer time
    visits the same discrete states as dense time, so the verdict must agree
    with :func:`check` run under the same horizon.
    """
    t0 = time.perf_counter()
    if isinstance(q, str):
        q = parse_query(q, net)
    pred = compile_state_pred(net, q.predicate)
    templates = net.compiled
    nclk = net.nclocks

    def inv_ok(locs, clocks) -> bool:
        for ct, l in zip(templates, locs):
            if not _clock_ok(ct.invariants[l], clocks):
                return False
        return True

    def committed(locs) -> bool:
        return any(ct.committed[l] for ct, l in zip(templates, locs))

    init_clocks = (0,) * (nclk + 1)
    if not inv_ok(net.initial_locs, init_clocks):
        raise VacuousModel("vacuous model: initial invariants are unsatisfiable")
    start = (net.initial_locs, net.init_vals, init_clocks, 0)
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    hit = None

    def judge(st) -> bool:
        locs, vals = st[0], st[1]
        if committed(locs):
            return False
        return pred(vals, locs) != q.is_invariance

    if judge(start):
        hit = start

    def fire(st, edges):
        locs, vals, clocks, el = st
        for e in edges:
            if e.guard is not None and not e.guard(vals, None):
                return None
            if not _clock_ok(e.clock_guard, clocks):
                return None
        nl = list(locs)
        nv = list(vals)
        nc = list(clocks)
        for e in edges:
            nl[e.template] = e.target
            if e.update is not None:
                e.update(nv)
                net.check_range(nv, e)
            for x in e.resets:
                nc[x] = 0
        nl, nc = tuple(nl), tuple(nc)
        if not inv_ok(nl, nc):
            return None
        return (nl, tuple(nv), nc, el)

    while queue and hit is None:
        if len(parent) > max_states:
            raise Inconclusive(len(parent), len(queue), max_states)
        st = queue.popleft()
        locs, vals, clocks, el = st
        succ = []
        comm = committed(locs)
        for ti, ct in enumerate(templates):
            l = locs[ti]
            if not comm or ct.committed[l]:
                for e in ct.internal[l]:
                    r = fire(st, (e,))
                    if r is not None:
                        succ.append((r, f"{ct.name}: {e.label}"))
            for ch, sends in ct.send[l].items():
                for tj, ct2 in enumerate(templates):
                    if tj == ti:
                        continue
                    recvs = ct2.receive[locs[tj]].get(ch, ())
                    if comm and not (ct.committed[l] or ct2.committed[locs[tj]]):
                        continue
                    for e in sends:
                        for e2 in recvs:
                            r = fire(st, (e, e2))
                            if r is not None:
                                succ.append((r, f"{ct.name}: {e.label} || {ct2.name}: {e2.label}"))
        if not comm and el < horizon:
            nc = (0,) + tuple(c + 1 for c in clocks[1:])
            if inv_ok(locs, nc):
                succ.append(((locs, vals, nc, el + 1), "delay 1"))
        for nxt, label in succ:
            if nxt in parent:
                continue
            parent[nxt] = (st, label)
            queue.append(nxt)
            if judge(nxt):
                hit = nxt
                break

    evidence = None
    if hit is not None:
        chain = []
        cur = hit
        while cur is not None:
            link = parent[cur]
            chain.append((cur, "initial" if link is None else link[1]))
            cur = None if link is None else link[0]
        steps = [TraceStep(net.location_names(s[0]), net.valuation(s[1]), action,
                           trace_row=_trace_row(net, s[1]), clocks=s[2])
                 for s, action in reversed(chain)]
        evidence = DiagnosticTrace(steps)
    satisfied = (hit is None) if q.is_invariance else (hit is not None)
    return Verdict(q, satisfied, evidence, len(parent), time.perf_counter() - t0)
