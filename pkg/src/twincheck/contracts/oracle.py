"""Direct evaluation of contract predicates on the stabilized trace.

No automata involved: each contract's A => G condition is computed row by
row with numpy (plus a short loop for the stateful parts: latches, timers
and the lag counter).  Used to cross-check the model checker.
"""

from __future__ import annotations

import numpy as np

from ..trace import Trace
from .model import (
    DECREASING,
    INCREASING,
    OTHER,
    STABLE,
    ContractError,
    Signal,
    ViolationRecord,
    check_id,
    require_signals,
    signal_series,
)
from .params import ContractParams


def _prev(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    out[0] = x[0]
    out[1:] = x[:-1]
    return out


def _trend(x: np.ndarray, eps: int) -> np.ndarray:
    d = x - _prev(x)
    return np.where(d > eps, INCREASING, np.where(-d > eps, DECREASING, STABLE))


def _run_lengths(bad: np.ndarray) -> np.ndarray:
    """Length of the run of consecutive ``True`` ending at each index."""
    out = np.zeros(len(bad), dtype=np.int64)
    run = 0
    for i, b in enumerate(bad):
        run = run + 1 if b else 0
        out[i] = run
    return out


def _latch(cond: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(cond.astype(np.int64)).astype(bool)


def _wood_overdue(wo_r, wo_d, wait_steps_ok) -> np.ndarray:
    """Rows where an unanswered wood request has been pending long enough."""
    n = len(wo_r)
    prev_r = _prev(wo_r)
    state = "idle"
    t0 = 0
    out = np.zeros(n, dtype=bool)
    for i in range(n):
        if state == "idle":
            if wo_r[i] and not prev_r[i] and not wo_d[i]:
                state, t0 = "waiting", i
        elif wo_d[i]:
            state = "idle"
        elif state == "waiting" and wait_steps_ok(i - t0):
            state = "overdue"
        out[i] = state == "overdue"
    return out


def _alarm_expired(alarm, hold_ok) -> np.ndarray:
    n = len(alarm)
    out = np.zeros(n, dtype=bool)
    t0 = None
    for i in range(n):
        if not alarm[i]:
            t0 = None
            continue
        if t0 is None:
            t0 = i
        out[i] = hold_ok(i - t0)
    return out


def _violations(cid: str, v: dict[str, np.ndarray], p: ContractParams):
    """Return ``(violated, query_index)`` arrays over the loaded rows."""
    eps = p.epsilon
    zero = np.zeros(len(next(iter(v.values()))), dtype=np.int64)
    if cid in ("MC1", "MC2", "MC3"):
        if cid == "MC1":
            a = np.where(v["B_T"] >= p.T_Boil, OTHER, _trend(v["B_T"], eps))
            g = _trend(v["pred_Bo_T"], eps)
            bad = ((a == INCREASING) & (g != INCREASING)) | ((a == DECREASING) & (g != DECREASING))
            which = np.where(a == INCREASING, 0, 1)
        elif cid == "MC2":
            above = v["Bo_T"] > p.T_Boil
            g = _trend(v["pred_W_M"], eps)
            bad = (above & (g == INCREASING)) | (~above & (g != STABLE))
            which = np.where(above, 0, 1)
        else:
            a = np.where(v["burner_on"] == 0, OTHER, _trend(v["Wo_M"], eps))
            g = _trend(v["pred_B_T"], eps)
            bad = ((a == INCREASING) & (g == DECREASING)) | ((a == DECREASING) & (g == INCREASING))
            which = np.where(a == INCREASING, 0, 1)
        return _run_lengths(bad) > p.lag, which
    if cid == "FC1":
        bad = (v["Wo_M"] < p.Wo_M_min) & (v["pred_Wo_R"] == 0)
    elif cid == "FC2":
        overdue = _wood_overdue(v["Wo_R"] != 0, v["Wo_D"] != 0,
                                lambda k: k * p.period >= p.wood_wait)
        bad = overdue & (v["Wo_M"] < p.Wo_M_min) & (v["pred_W_A"] == 0)
    elif cid == "FC3":
        bad = (v["Wo_M"] > p.Wo_M_min) & ((v["pred_Wo_R"] != 0) | (v["pred_Wo_D"] != 0))
    elif cid == "FC4":
        inside = (v["B_T"] >= p.ideal_lo) & (v["B_T"] <= p.ideal_hi)
        bad = _latch(inside) & ~inside & (v["critical_alarm"] == 0)
    elif cid == "FC5":
        bad = (v["turn_off"] != 0) & (v["burner_on"] != 0)
    elif cid == "FC6":
        bad = (v["W_M"] > p.W_M_min) & (v["pred_Wo_M"] <= 0)
    elif cid == "FC7":
        boiling = _latch(v["Bo_T"] >= p.T_Boil)
        bad = boiling & (v["W_M"] > p.W_M_min) & (np.abs(v["pred_Bo_T"] - p.T_Boil) > eps)
    elif cid == "FC8":
        bad = (v["W_M"] < p.W_M_min) & ((v["pred_W_A"] == 0) | (v["turn_off"] == 0))
    elif cid == "FC9":
        bad = (v["W_M"] > p.W_M_min) & ((v["pred_W_A"] != 0) | (v["turn_off"] != 0))
    elif cid == "FC10":
        bad = (v["burner_on"] == 0) & ((v["pred_B_T"] < v["T_env"]) | (v["pred_Bo_T"] < v["T_env"]))
    elif cid == "IC1":
        expired = _alarm_expired(v["critical_alarm"] != 0,
                                 lambda k: k * p.period >= p.alarm_hold)
        bad = expired & (v["burner_on"] != 0)
    else:  # pragma: no cover - guarded by check_id
        raise ContractError(cid)
    return bad, zero


def direct_oracle(cid: str, trace: Trace, params: ContractParams | None = None,
                  queries: list[str] | None = None) -> list[ViolationRecord]:
    """All rows where contract ``cid`` is violated, in row order.

    ``queries`` optionally names the invariance query text reported for
    each query index (the model-checked contract's ``invariants``).
    """
    from .builders import contract_signals

    params = params or ContractParams()
    signals: tuple[Signal, ...] = contract_signals(check_id(cid))
    require_signals(cid, trace, signals)
    v = {s.var: signal_series(trace, s, params.m) for s in signals}
    shadows = {s.shadow_var: _prev(v[s.var]) for s in signals if s.shadow}
    bad, which = _violations(cid, v, params)
    out = []
    for i in np.flatnonzero(bad):
        vals = {k: int(x[i]) for k, x in v.items()}
        vals.update({k: int(x[i]) for k, x in shadows.items()})
        q = queries[int(which[i])] if queries else f"{cid}[{int(which[i])}]"
        out.append(ViolationRecord(cid, q, params.m + int(i), vals))
    return out
