"""Symbolic (zone-based) transition semantics of a network."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import dbm
from .dbm import Zone
from .expr import Expr, ExprError, LocAtom, Name, compile_pred, parse_expr, walk
from .network import CompiledEdge, ModelError, Network


class VacuousModel(ModelError):
    """The initial state violates its own invariants."""


@dataclass(frozen=True)
class SymState:
    locs: tuple
    vals: tuple
    zone: tuple  # packed DBM bounds, canonical and non-empty

    def zone_obj(self, dim: int) -> Zone:
        return Zone(dim, self.zone)


@dataclass(frozen=True)
class Transition:
    """How a successor was produced: one internal edge or a send/receive pair."""

    edges: tuple  # CompiledEdge, or (sender, receiver)
    channel: str | None = None

    def describe(self, net: Network) -> str:
        parts = []
        for e in self.edges:
            parts.append(f"{net.templates[e.template].name}: {e.label}")
        return " || ".join(parts)


class Explorer:
    """Successor generator bound to a network.

    ``horizon`` adds a never-reset global clock whose value is capped at the
    horizon, bounding total elapsed time.  ``extrapolate`` applies max-constant
    abstraction (disabled automatically when guards compare two clocks).
    """

    def __init__(self, net: Network, horizon: int | None = None, extrapolate: bool = True):
        self.net = net
        self.horizon = horizon
        self.dim = net.dim + (1 if horizon is not None else 0)
        self.gclock = net.dim if horizon is not None else None
        maxc = list(net.maxc)
        if horizon is not None:
            maxc.append(horizon)
        self.maxc = tuple(maxc)
        self.extrapolate = extrapolate and not net.has_diagonal
        self.templates = net.compiled
        self.ntemplates = len(net.compiled)

    # -- helpers ----------------------------------------------------------
    def _invariants(self, d, locs):
        dim = self.dim
        for ct, l in zip(self.templates, locs):
            for (i, j, b) in ct.invariants[l]:
                d = dbm.constrain(d, dim, i, j, b)
                if d is None:
                    return None
        if self.gclock is not None:
            d = dbm.constrain(d, dim, self.gclock, 0, dbm.bound(self.horizon))
        return d

    def _committed(self, locs) -> bool:
        for ct, l in zip(self.templates, locs):
            if ct.committed[l]:
                return True
        return False

    def _finish(self, d, locs):
        """Target invariants, delay (unless committed), invariants again."""
        d = self._invariants(d, locs)
        if d is None:
            return None
        if not self._committed(locs):
            d = dbm.up(d, self.dim)
            d = self._invariants(d, locs)
            if d is None:
                return None
        if self.extrapolate:
            d = dbm.extrapolate(d, self.dim, self.maxc)
        return d

    def initial(self) -> SymState:
        net = self.net
        locs = net.initial_locs
        d = self._finish(dbm.zero(self.dim), locs)
        if d is None:
            raise VacuousModel("vacuous model: initial invariants are unsatisfiable")
        return SymState(locs, net.init_vals, d)

    # -- successors -------------------------------------------------------
    def successors(self, s: SymState) -> list[tuple[SymState, Transition]]:
        out = []
        locs, vals, zone = s.locs, s.vals, s.zone
        templates = self.templates
        committed_any = self._committed(locs)
        for ti, ct in enumerate(templates):
            l = locs[ti]
            t_committed = ct.committed[l]
            if not committed_any or t_committed:
                for e in ct.internal[l]:
                    r = self._fire(locs, vals, zone, (e,))
                    if r is not None:
                        out.append((r, Transition((e,))))
            for ch, sends in ct.send[l].items():
                for e in sends:
                    if e.guard is not None and not e.guard(vals, None):
                        continue
                    for tj, ct2 in enumerate(templates):
                        if tj == ti:
                            continue
                        recvs = ct2.receive[locs[tj]].get(ch)
                        if not recvs:
                            continue
                        if committed_any and not (t_committed or ct2.committed[locs[tj]]):
                            continue
                        for e2 in recvs:
                            r = self._fire(locs, vals, zone, (e, e2))
                            if r is not None:
                                out.append((r, Transition((e, e2), ch)))
        return out

    def _fire(self, locs, vals, zone, edges):
        dim = self.dim
        d = zone
        for e in edges:
            if e.guard is not None and not e.guard(vals, None):
                return None
            for (i, j, b) in e.clock_guard:
                d = dbm.constrain(d, dim, i, j, b)
                if d is None:
                    return None
        nl = list(locs)
        nv = None
        for e in edges:
            nl[e.template] = e.target
            if e.update is not None:
                if nv is None:
                    nv = list(vals)
                e.update(nv)
                self.net.check_range(nv, e)
            for x in e.resets:
                d = dbm.reset(d, dim, x)
        nl = tuple(nl)
        d = self._finish(d, nl)
        if d is None:
            return None
        return SymState(nl, vals if nv is None else tuple(nv), d)


def initial_state(n: Network) -> SymState:
    """Initial locations and valuation, delay-closed under the invariants."""
    return Explorer(n).initial()


def successors(n: Network, s: SymState) -> list[SymState]:
    """One discrete step (internal edge or synchronised pair) followed by delay."""
    return [t for t, _ in Explorer(n).successors(s)]


# -- state predicates -----------------------------------------------------------

def compile_state_pred(net: Network, p: Expr | str) -> Callable:
    """Compile a clock-free predicate over locations and variables to ``f(v, l)``."""
    if isinstance(p, str):
        p = parse_expr(p)
    for node in walk(p):
        if isinstance(node, Name) and node.name in net.clock_id:
            raise ExprError("clock predicates unsupported in queries", node.pos)
    scope = net.scope.child({k: v for k, v in net.var_slot.items()})
    return compile_pred(p, scope, allow_locations=True)


def eval_pred(net: Network, s: SymState, p: Expr | str) -> bool:
    return compile_state_pred(net, p)(s.vals, s.locs)


def pred_locations(p: Expr) -> set[tuple[str, str]]:
    return {(n.template, n.location) for n in walk(p) if isinstance(n, LocAtom)}
