"""Trace-driven assume/guarantee networks for the boiler contracts.

Every contract network has the same shape:

* ``UpdateV`` replays the stabilized trace.  It waits exactly one period in
  ``Wait`` (invariant ``c <= P``, guard ``c == P``), copies the current
  values into their shadows, loads the next row, and then walks a chain of
  committed locations that sends ``tick_<T>!`` to each contract template in
  declaration order (assumptions first).  The first row is announced the
  same way before any time passes, with shadows equal to the current values.
* Each assumption/guarantee template moves, on its tick, from wherever it
  is to the location whose guard classifies the current row.  Classifiers
  with memory (latches, timers) restrict which edges exist.
* ``row`` indexes the loaded data; the trace row of a settled state is
  ``m + row`` (recorded in the network metadata).

Monotonicity contracts track a mismatch counter ``mis``: it grows while the
guarantee's class disagrees with the assumption's class and resets when
they agree.  Their queries tolerate up to ``lag`` consecutive mismatches.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..automata.network import NetworkBuilder, UtaTemplate
from ..trace import Trace
from ..verifier import parse_query
from .model import (
    CONTRACT_IDS,
    DECREASING,
    INCREASING,
    OTHER,
    STABLE,
    Contract,
    ContractError,
    Signal,
    check_id,
    require_signals,
    signal_series,
)
from .params import ContractParams

DRIVER = "UpdateV"


# -- driver ---------------------------------------------------------------------

def _declare(nb: NetworkBuilder, trace: Trace, signals, params: ContractParams) -> int:
    """Declare data arrays and variables; return the number of loaded rows."""
    n = len(trace) - params.m
    if n < 1:
        raise ContractError(f"window exceeds series: m={params.m} needs more than "
                            f"{params.m} rows, trace has {len(trace)}")
    nb.int_var("row", 0, n - 1, 0)
    for s in signals:
        data = signal_series(trace, s, params.m)
        lo, hi = int(data.min()), int(data.max())
        nb.array(f"{s.var}_data", data)
        nb.int_var(s.var, lo, hi, int(data[0]))
        if s.shadow:
            nb.int_var(s.shadow_var, lo, hi, int(data[0]))
    return n


def build_update_driver(trace: Trace, signals, params: ContractParams,
                        notify: tuple[str, ...] = ()) -> UtaTemplate:
    """The ``UpdateV`` template replaying ``signals`` of ``trace``.

    Expects the network to declare clock ``c``, the constants ``P`` and
    ``last`` (index of the final row), and for each signal the variable, its
    shadow if requested, and the array ``<var>_data``.
    """
    for s in signals:
        if s.column not in trace:
            raise ContractError(f"{DRIVER}: unknown signal {s.column!r}")
    t = UtaTemplate(DRIVER)
    chain = [f"N{i}" for i in range(len(notify))]
    for name in chain:
        t.location(name, committed=True)
    t.location("Wait", invariant="c <= P", initial=not chain)
    t.location("Done")
    for i, ch in enumerate(notify):
        nxt = chain[i + 1] if i + 1 < len(chain) else "Wait"
        t.edge(chain[i], nxt, sync=ch + "!")
    loads = [f"{s.shadow_var} = {s.var}" for s in signals if s.shadow]
    loads += [f"{s.var} = {s.var}_data[row + 1]" for s in signals]
    loads += ["row = row + 1", "c = 0"]
    t.edge("Wait", chain[0] if chain else "Wait", guard="c == P && row < last",
           update=", ".join(loads))
    t.edge("Wait", "Done", guard="c == P && row == last")
    return t


# -- template helpers -----------------------------------------------------------

def _classifier(name: str, classes, update: Callable[[str], str] | None = None) -> UtaTemplate:
    """Template jumping on each tick to the location whose guard holds.

    ``classes`` is a list of ``(location, guard)`` with exclusive and
    exhaustive guards; the first location is initial.
    """
    t = UtaTemplate(name)
    locs = [loc for loc, _ in classes]
    for loc in locs:
        t.location(loc)
    for dst, guard in classes:
        for src in locs:
            t.edge(src, dst, guard=guard, sync=f"tick_{name}?",
                   update=update(dst) if update else "")
    return t


def _trend(x: str, gate: str = "") -> list[tuple[str, str]]:
    g = f"{gate} && " if gate else ""
    return [
        ("Stable", f"{g}{x} - {x}1 <= eps && {x}1 - {x} <= eps"),
        ("Increasing", f"{g}{x} - {x}1 > eps"),
        ("Decreasing", f"{g}{x}1 - {x} > eps"),
    ]


def _level(x: str, above: str, below: str, threshold: str, strict_above: bool = True):
    """Two-way split of ``x`` around ``threshold``."""
    if strict_above:
        return [(above, f"{x} > {threshold}"), (below, f"{x} <= {threshold}")]
    return [(above, f"{x} >= {threshold}"), (below, f"{x} < {threshold}")]


def _flag(x: str, off: str, on: str):
    return [(off, f"{x} == 0"), (on, f"{x} != 0")]


_CODES = {"Stable": STABLE, "Increasing": INCREASING, "Decreasing": DECREASING}


def _mis_update(bad: dict[int, set[int]]) -> Callable[[str], str]:
    """Counter update for a guarantee landing in class ``dst``.

    ``bad[g]`` is the set of assumption classes that disagree with guarantee
    class ``g``.
    """
    def upd(dst: str) -> str:
        codes = sorted(bad.get(_CODES[dst], ()))
        if not codes:
            return "mis = 0"
        cond = " || ".join(f"A_cls == {a}" for a in codes)
        return f"mis = ({cond}) ? mis + 1 : 0"
    return upd


def _cls_update(codes: dict[str, int]) -> Callable[[str], str]:
    return lambda dst: f"A_cls = {codes[dst]}"


# -- contract definitions ---------------------------------------------------------
# Each returns (signals, assumptions, guarantees, invariance query texts).

def _mc1():
    sig = (Signal("B_T", shadow=True), Signal("pred_Bo_T", shadow=True))
    a_cls = [("Boiling", "B_T >= T_Boil")] + _trend("B_T", gate="B_T < T_Boil")
    a = _classifier("A_MC1", a_cls, _cls_update({**_CODES, "Boiling": OTHER}))
    bad = {STABLE: {INCREASING, DECREASING}, INCREASING: {DECREASING},
           DECREASING: {INCREASING}}
    g = _classifier("G_MC1", _trend("pred_Bo_T"), _mis_update(bad))
    q = ["A_MC1.Increasing imply (G_MC1.Increasing || mis <= lag)",
         "A_MC1.Decreasing imply (G_MC1.Decreasing || mis <= lag)"]
    return sig, [a], [g], q


def _mc2():
    sig = (Signal("Bo_T"), Signal("pred_W_M", shadow=True))
    a = _classifier("A_MC2", _level("Bo_T", "AboveBoil", "AtOrBelowBoil", "T_Boil"),
                    _cls_update({"AboveBoil": OTHER, "AtOrBelowBoil": STABLE}))
    bad = {INCREASING: {OTHER, STABLE}, DECREASING: {STABLE}}
    g = _classifier("G_MC2", _trend("pred_W_M"), _mis_update(bad))
    q = ["A_MC2.AboveBoil imply (!G_MC2.Increasing || mis <= lag)",
         "A_MC2.AtOrBelowBoil imply (G_MC2.Stable || mis <= lag)"]
    return sig, [a], [g], q


def _mc3():
    sig = (Signal("burner_on", stabilized=False), Signal("Wo_M", shadow=True),
           Signal("pred_B_T", shadow=True))
    a_cls = [("BurnerOff", "burner_on == 0")] + _trend("Wo_M", gate="burner_on != 0")
    a = _classifier("A_MC3", a_cls, _cls_update({**_CODES, "BurnerOff": OTHER}))
    bad = {INCREASING: {DECREASING}, DECREASING: {INCREASING}}
    g = _classifier("G_MC3", _trend("pred_B_T"), _mis_update(bad))
    q = ["A_MC3.Increasing imply (!G_MC3.Decreasing || mis <= lag)",
         "A_MC3.Decreasing imply (!G_MC3.Increasing || mis <= lag)"]
    return sig, [a], [g], q


def _fc1():
    sig = (Signal("Wo_M"), Signal("pred_Wo_R", stabilized=False))
    a = _classifier("A_FC1", _level("Wo_M", "AboveWo_min", "BelowWo_min", "Wo_M_min",
                                    strict_above=False))
    g = _classifier("G_FC1", _flag("pred_Wo_R", "NoRequest", "Request"))
    return sig, [a], [g], ["A_FC1.BelowWo_min imply G_FC1.Request"]


def _wood_timer(name: str) -> UtaTemplate:
    """Idle -> Waiting on a request edge; Overdue after wood_wait without delivery."""
    t = UtaTemplate(name)
    t.clock("w")
    for loc in ("Idle", "Waiting", "Overdue"):
        t.location(loc)
    tick = f"tick_{name}?"
    rise = "Wo_R != 0 && Wo_R1 == 0 && Wo_D == 0"
    t.edge("Idle", "Waiting", guard=rise, sync=tick, update="w = 0")
    t.edge("Idle", "Idle", guard=f"!({rise})", sync=tick)
    t.edge("Waiting", "Idle", guard="Wo_D != 0", sync=tick)
    t.edge("Waiting", "Waiting", guard="Wo_D == 0 && w < wood_wait", sync=tick)
    t.edge("Waiting", "Overdue", guard="Wo_D == 0 && w >= wood_wait", sync=tick)
    t.edge("Overdue", "Idle", guard="Wo_D != 0", sync=tick)
    t.edge("Overdue", "Overdue", guard="Wo_D == 0", sync=tick)
    return t


def _fc2():
    sig = (Signal("Wo_R", stabilized=False, shadow=True), Signal("Wo_D", stabilized=False),
           Signal("Wo_M"), Signal("pred_W_A", stabilized=False))
    a1 = _wood_timer("A1_FC2")
    a2 = _classifier("A2_FC2", _level("Wo_M", "AboveWo_min", "BelowWo_min", "Wo_M_min",
                                      strict_above=False))
    g = _classifier("G_FC2", _flag("pred_W_A", "NotAlarm", "Alarm"))
    return sig, [a1, a2], [g], ["(A1_FC2.Overdue && A2_FC2.BelowWo_min) imply G_FC2.Alarm"]


def _fc3():
    sig = (Signal("Wo_M"), Signal("pred_Wo_R", stabilized=False),
           Signal("pred_Wo_D", stabilized=False))
    a = _classifier("A_FC3", _level("Wo_M", "AboveWo_min", "NotAboveWo_min", "Wo_M_min"))
    g1 = _classifier("G1_FC3", _flag("pred_Wo_R", "NoRequest", "Request"))
    g2 = _classifier("G2_FC3", _flag("pred_Wo_D", "NoDelivery", "Delivery"))
    return sig, [a], [g1, g2], [
        "A_FC3.AboveWo_min imply !(G1_FC3.Request || G2_FC3.Delivery)"]


def _latch(name: str, low: str, high: str, cond: str) -> UtaTemplate:
    """Two-location latch: moves to ``high`` the first time ``cond`` holds, then stays."""
    t = UtaTemplate(name)
    t.location(low).location(high)
    tick = f"tick_{name}?"
    t.edge(low, low, guard=f"!({cond})", sync=tick)
    t.edge(low, high, guard=cond, sync=tick)
    t.edge(high, high, sync=tick)
    return t


def _fc4():
    sig = (Signal("B_T"), Signal("critical_alarm", stabilized=False))
    a1 = _latch("A1_FC4", "NotReached", "ReachedIdealRange",
                "B_T >= ideal_lo && B_T <= ideal_hi")
    a2 = _classifier("A2_FC4", [("InRange", "B_T >= ideal_lo && B_T <= ideal_hi"),
                                ("OutOfRange", "B_T < ideal_lo || B_T > ideal_hi")])
    g = _classifier("G_FC4", _flag("critical_alarm", "NoAlarm", "Alarm"))
    return sig, [a1, a2], [g], [
        "(A1_FC4.ReachedIdealRange && A2_FC4.OutOfRange) imply G_FC4.Alarm"]


def _fc5():
    sig = (Signal("turn_off", stabilized=False), Signal("burner_on", stabilized=False))
    a = _classifier("A_FC5", _flag("turn_off", "NoTurnOff", "TurnOff"))
    g = _classifier("G_FC5", [("BurnerOn", "burner_on != 0"), ("BurnerOff", "burner_on == 0")])
    return sig, [a], [g], ["A_FC5.TurnOff imply G_FC5.BurnerOff"]


def _fc6():
    sig = (Signal("W_M"), Signal("pred_Wo_M"))
    a = _classifier("A_FC6", _level("W_M", "AboveW_min", "NotAboveW_min", "W_M_min"))
    g = _classifier("G_FC6", [("WoodLeft", "pred_Wo_M > 0"), ("NoWood", "pred_Wo_M <= 0")])
    return sig, [a], [g], ["A_FC6.AboveW_min imply G_FC6.WoodLeft"]


def _fc7():
    sig = (Signal("Bo_T"), Signal("W_M"), Signal("pred_Bo_T"))
    a1 = _latch("A1_FC7", "NotBoiling", "ReachedBoilingState", "Bo_T >= T_Boil")
    a2 = _classifier("A2_FC7", _level("W_M", "AboveW_min", "NotAboveW_min", "W_M_min"))
    near = "pred_Bo_T - T_Boil <= eps && T_Boil - pred_Bo_T <= eps"
    g = _classifier("G_FC7", [("AroundBoil", near), ("AwayFromBoil", f"!({near})")])
    return sig, [a1, a2], [g], [
        "(A1_FC7.ReachedBoilingState && A2_FC7.AboveW_min) imply G_FC7.AroundBoil"]


def _water_guarantees(suffix: str):
    g1 = _classifier(f"G1_{suffix}", _flag("pred_W_A", "NotAlarm", "Alarm"))
    g2 = _classifier(f"G2_{suffix}", _flag("turn_off", "B_off_false", "B_off_true"))
    return g1, g2


def _fc8():
    sig = (Signal("W_M"), Signal("pred_W_A", stabilized=False),
           Signal("turn_off", stabilized=False))
    a = _classifier("A_FC8", _level("W_M", "AtOrAboveW_min", "BelowW_min", "W_M_min",
                                    strict_above=False))
    g1, g2 = _water_guarantees("FC8")
    return sig, [a], [g1, g2], ["A_FC8.BelowW_min imply (G1_FC8.Alarm && G2_FC8.B_off_true)"]


def _fc9():
    sig = (Signal("W_M"), Signal("pred_W_A", stabilized=False),
           Signal("turn_off", stabilized=False))
    a = _classifier("A_FC9", _level("W_M", "AboveW_min", "BelowW_min", "W_M_min"))
    g1, g2 = _water_guarantees("FC9")
    return sig, [a], [g1, g2], [
        "A_FC9.AboveW_min imply (not (G1_FC9.Alarm || G2_FC9.B_off_true))"]


def _fc10():
    sig = (Signal("burner_on", stabilized=False), Signal("T_env", stabilized=False),
           Signal("pred_B_T"), Signal("pred_Bo_T"))
    a = _classifier("A_FC10", [("BurnerOn", "burner_on != 0"), ("BurnerOff", "burner_on == 0")])
    g1 = _classifier("G1_FC10", [("AboveEnv", "pred_B_T >= T_env"),
                                 ("BelowEnv", "pred_B_T < T_env")])
    g2 = _classifier("G2_FC10", [("AboveEnv", "pred_Bo_T >= T_env"),
                                 ("BelowEnv", "pred_Bo_T < T_env")])
    return sig, [a], [g1, g2], [
        "A_FC10.BurnerOff imply (G1_FC10.AboveEnv && G2_FC10.AboveEnv)"]


def _alarm_timer(name: str) -> UtaTemplate:
    """Quiet -> Active on alarm onset (clock reset); Expired after alarm_hold."""
    t = UtaTemplate(name)
    t.clock("a")
    for loc in ("Quiet", "Active", "Expired"):
        t.location(loc)
    tick = f"tick_{name}?"
    t.edge("Quiet", "Active", guard="critical_alarm != 0", sync=tick, update="a = 0")
    t.edge("Quiet", "Quiet", guard="critical_alarm == 0", sync=tick)
    for src in ("Active", "Expired"):
        t.edge(src, "Quiet", guard="critical_alarm == 0", sync=tick)
    t.edge("Active", "Active", guard="critical_alarm != 0 && a < alarm_hold", sync=tick)
    t.edge("Active", "Expired", guard="critical_alarm != 0 && a >= alarm_hold", sync=tick)
    t.edge("Expired", "Expired", guard="critical_alarm != 0", sync=tick)
    return t


def _ic1():
    sig = (Signal("critical_alarm", stabilized=False), Signal("burner_on", stabilized=False))
    a = _alarm_timer("A_IC1")
    g = _classifier("G_IC1", [("BurnerOn", "burner_on != 0"), ("BurnerOff", "burner_on == 0")])
    return sig, [a], [g], ["A_IC1.Expired imply G_IC1.BurnerOff"]


DEFINITIONS = {
    "MC1": _mc1, "MC2": _mc2, "MC3": _mc3,
    "FC1": _fc1, "FC2": _fc2, "FC3": _fc3, "FC4": _fc4, "FC5": _fc5,
    "FC6": _fc6, "FC7": _fc7, "FC8": _fc8, "FC9": _fc9, "FC10": _fc10,
    "IC1": _ic1,
}
assert tuple(DEFINITIONS) == CONTRACT_IDS


def contract_signals(cid: str) -> tuple[Signal, ...]:
    """Columns a contract reads."""
    return DEFINITIONS[check_id(cid)]()[0]


def build_contract(cid: str, trace: Trace, params: ContractParams | None = None) -> Contract:
    """Assemble the trace-driven network of contract ``cid`` and its queries."""
    params = params or ContractParams()
    signals, assumptions, guarantees, texts = DEFINITIONS[check_id(cid)]()
    require_signals(cid, trace, signals)
    nb = NetworkBuilder()
    nb.clock("c")
    n = _declare(nb, trace, signals, params)
    for k in ("T_Boil", "Wo_M_min", "W_M_min", "ideal_lo", "ideal_hi",
              "wood_wait", "alarm_hold", "lag"):
        nb.const(k, getattr(params, k))
    nb.const("eps", params.epsilon)
    nb.const("P", params.period)
    nb.const("last", n - 1)
    templates = assumptions + guarantees
    if cid in ("MC1", "MC2", "MC3"):
        nb.int_var("A_cls", 0, OTHER, STABLE)
        nb.int_var("mis", 0, n, 0)
    notify = tuple(f"tick_{t.name}" for t in templates)
    nb.channel(*notify)
    driver = build_update_driver(trace, signals, params, notify)
    nb.add(driver)
    for t in templates:
        nb.add(t)
    nb.meta.update({"contract": cid, "row_var": "row", "row_offset": params.m})
    net = nb.build()
    inv = [parse_query(f"A[] {q}", net) for q in texts]
    queries = inv + [q.dual() for q in inv]
    return Contract(cid, driver, assumptions, guarantees, queries, net, signals, params)


def build_monotonicity(cid: str, trace: Trace, params: ContractParams | None = None) -> Contract:
    if cid not in ("MC1", "MC2", "MC3"):
        raise ContractError(f"{cid!r} is not a monotonicity contract")
    return build_contract(cid, trace, params)


def build_functional(cid: str, trace: Trace, params: ContractParams | None = None) -> Contract:
    if cid not in DEFINITIONS or not cid.startswith("FC"):
        raise ContractError(f"{cid!r} is not a functional contract")
    return build_contract(cid, trace, params)


def build_infrastructure(trace: Trace, params: ContractParams | None = None) -> Contract:
    return build_contract("IC1", trace, params)


def stabilized_view(trace: Trace, cid: str, params: ContractParams) -> dict[str, np.ndarray]:
    """The per-row values a contract sees, keyed by variable name."""
    signals = contract_signals(cid)
    require_signals(cid, trace, signals)
    return {s.var: signal_series(trace, s, params.m) for s in signals}
