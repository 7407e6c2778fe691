"""Stabilization, the trace driver, contract builders and the direct oracle."""

import numpy as np
import pytest
from helpers import random_params, random_trace
from hypothesis import given, settings
from hypothesis import strategies as st

from twincheck.automata import NetworkBuilder, initial_state, successors
from twincheck.automata.semantics import Explorer
from twincheck.contracts import (
    CONTRACT_IDS,
    ContractError,
    ContractParams,
    Signal,
    build_contract,
    build_functional,
    build_infrastructure,
    build_monotonicity,
    build_update_driver,
    componentwise_leq,
    direct_oracle,
    stabilize,
    verify_contract,
)
from twincheck.contracts.model import DECREASING, INCREASING, OTHER, STABLE
from twincheck.trace import PLANT_COLUMNS, PRED_COLUMNS, Trace
from twincheck.verifier import check

P = ContractParams()


def make_trace(n, **cols):
    """A quiet trace: every signal flat and well inside its contracts."""
    base = {"B_T": 9000, "Bo_T": 9000, "W_M": 3000, "Wo_M": 3000, "T_env": 2000,
            "burner_on": 1}
    out = {}
    for c in PLANT_COLUMNS[1:] + PRED_COLUMNS:
        src = c[5:] if c.startswith("pred_") else c
        v = cols.get(c, cols.get(src, base.get(src, 0))) if c.startswith("pred_") \
            else cols.get(c, base.get(c, 0))
        out[c] = np.broadcast_to(np.asarray(v, dtype=np.int64), (n,)).copy()
    return Trace(out)


# -- stabilize ----------------------------------------------------------------------

def test_stabilize_constant_series():
    s = stabilize([700] * 4, 2)
    assert list(s.values) == [700, 700]


def test_stabilize_m1_is_shift():
    x = [5, 9, 2, 7]
    assert list(stabilize(x, 1).values) == x[:-1]


def test_stabilize_hand_values():
    s = stabilize([10, 20, 30, 40], 2)
    assert s[2] == 15 and s[3] == 25
    with pytest.raises(IndexError):
        s[1]


def test_stabilize_rounds_half_up():
    assert list(stabilize([1, 2, 0], 2).values) == [2]       # 1.5 -> 2
    assert list(stabilize([-1, -2, 0], 2).values) == [-1]    # -1.5 -> -1


def test_stabilize_window_exceeds_series():
    with pytest.raises(ValueError, match="window exceeds series"):
        stabilize([1, 2, 3], 3)


series = st.lists(st.integers(-20000, 20000), min_size=2, max_size=40)


@settings(max_examples=300)
@given(series, st.integers(1, 8))
def test_stabilize_within_window_bounds(x, m):
    if m >= len(x):
        return
    s = stabilize(x, m)
    for t in range(m, len(x)):
        w = x[t - m:t]
        assert min(w) <= s[t] <= max(w)


@settings(max_examples=200)
@given(series, st.integers(1, 6))
def test_stabilize_preserves_nondecreasing(x, m):
    x = sorted(x)
    if m >= len(x):
        return
    assert np.all(np.diff(stabilize(x, m).values) >= 0)


def test_componentwise_leq():
    assert componentwise_leq([1, 2], [1, 3])
    assert not componentwise_leq([1, 4], [2, 3])
    assert componentwise_leq([3, 3], [3, 3])
    with pytest.raises(ValueError, match="length mismatch"):
        componentwise_leq([1], [1, 2])


vectors = st.lists(st.integers(-5, 5), min_size=3, max_size=3)


@given(vectors, vectors, vectors)
def test_componentwise_leq_is_partial_order(a, b, c):
    assert componentwise_leq(a, a)
    if componentwise_leq(a, b) and componentwise_leq(b, a):
        assert a == b
    if componentwise_leq(a, b) and componentwise_leq(b, c):
        assert componentwise_leq(a, c)


# -- driver -------------------------------------------------------------------------

def driver_network(trace, signals, params):
    nb = NetworkBuilder().clock("c")
    n = len(trace) - params.m
    nb.int_var("row", 0, n - 1, 0)
    for s in signals:
        data = stabilize(trace[s.column], params.m).values
        nb.array(f"{s.var}_data", data)
        nb.int_var(s.var, 0, 100000, int(data[0]))
        if s.shadow:
            nb.int_var(s.shadow_var, 0, 100000, int(data[0]))
    nb.const("P", params.period).const("last", n - 1)
    nb.add(build_update_driver(trace, signals, params))
    return nb.build()


def test_driver_loads_next_row_and_shadow():
    tr = Trace({"B_T": [100, 200, 300]})
    p = ContractParams(m=1)
    net = driver_network(tr, [Signal("B_T", shadow=True)], p)
    s0 = initial_state(net)
    assert net.valuation(s0.vals) == {"row": 0, "B_T": 100, "B_T1": 100}
    (s1,) = successors(net, s0)
    assert net.valuation(s1.vals) == {"row": 1, "B_T": 200, "B_T1": 100}


def test_driver_without_signals_only_advances():
    tr = Trace({"B_T": [1, 2, 3, 4]})
    net = driver_network(tr, [], ContractParams(m=1))
    s = initial_state(net)
    rows = []
    while True:
        nxt = successors(net, s)
        if not nxt:
            break
        (s,) = nxt
        rows.append(net.valuation(s.vals)["row"])
    assert rows == [1, 2, 2]  # two loads, then the move to Done


def test_driver_parks_when_exhausted():
    tr = Trace({"B_T": [1, 2]})
    net = driver_network(tr, [Signal("B_T")], ContractParams(m=1))
    (done,) = successors(net, initial_state(net))
    assert net.location_names(done.locs) == ("UpdateV.Done",)
    assert successors(net, done) == []


def test_driver_unknown_signal():
    with pytest.raises(ContractError, match="unknown signal"):
        build_update_driver(Trace({"B_T": [1, 2]}), [Signal("nope")], P)


# -- monotonicity contracts ----------------------------------------------------------

def ramp(n, start, step):
    return start + step * np.arange(n)


def test_mc1_both_rising_is_satisfied():
    tr = make_trace(30, B_T=ramp(30, 6000, 100), pred_Bo_T=ramp(30, 5000, 100))
    assert verify_contract("MC1", tr).status == "satisfied"


@pytest.mark.parametrize("lag", [0, 2])
def test_mc1_frozen_boiler_violates_after_lag(lag):
    p = ContractParams(lag=lag)
    tr = make_trace(30, B_T=ramp(30, 9900, -100), pred_Bo_T=9500)
    r = verify_contract("MC1", tr, p)
    assert r.status == "violated"
    # the first stabilized step is the first decreasing one (row m + 1)
    assert r.first_violation_row == p.m + 1 + lag
    assert direct_oracle("MC1", tr, p)[0].row == r.first_violation_row
    v = r.violations[0]
    assert v.signals["B_T"] < v.signals["B_T1"]
    assert v.signals["pred_Bo_T"] == v.signals["pred_Bo_T1"]


def test_mc1_ignores_boiling_burner():
    tr = make_trace(30, B_T=ramp(30, 12000, -10), pred_Bo_T=9500)
    assert verify_contract("MC1", tr, ContractParams(epsilon=0)).status == "satisfied"


def test_mc2_quiet_water_below_boil():
    w = 3000 + np.array([0, 20, -20, 30, 0, -40, 10, 0, 0, 5] * 3)
    tr = make_trace(30, Bo_T=9000, pred_W_M=w)
    assert verify_contract("MC2", tr).status == "satisfied"


def test_mc2_water_rising_while_boiling():
    tr = make_trace(30, Bo_T=10500, pred_W_M=ramp(30, 2000, 100))
    assert verify_contract("MC2", tr, ContractParams(lag=0)).status == "violated"


def test_mc3_gated_on_burner():
    wo = ramp(30, 3000, -100)
    bt = ramp(30, 5000, -100)  # falling wood mass with falling temperature is required
    bad = make_trace(30, Wo_M=wo, pred_B_T=ramp(30, 5000, 100))
    off = make_trace(30, Wo_M=wo, pred_B_T=ramp(30, 5000, 100), burner_on=0)
    ok = make_trace(30, Wo_M=wo, pred_B_T=bt)
    p = ContractParams(lag=0)
    assert verify_contract("MC3", bad, p).status == "violated"
    assert verify_contract("MC3", off, p).status == "satisfied"
    assert verify_contract("MC3", ok, p).status == "satisfied"


def test_assumption_classification_is_exclusive_and_matches_trend():
    rng = np.random.default_rng(2)
    tr = make_trace(40, B_T=rng.integers(9000, 11000, 40))
    c = build_contract("MC1", tr, P)
    net = c.network
    b = stabilize(tr["B_T"], P.m).values
    prev = np.concatenate(([b[0]], b[:-1]))
    want = np.where(b >= P.T_Boil, OTHER,
                    np.where(b - prev > P.epsilon, INCREASING,
                             np.where(prev - b > P.epsilon, DECREASING, STABLE)))
    name = {OTHER: "Boiling", INCREASING: "Increasing", DECREASING: "Decreasing",
            STABLE: "Stable"}
    ex = Explorer(net)
    s = ex.initial()
    seen = 0
    while True:
        nxt = ex.successors(s)
        if not nxt:
            break
        assert len(nxt) == 1  # deterministic replay
        s = nxt[0][0]
        locs = net.location_names(s.locs)
        if locs[0] == "UpdateV.Wait":
            row = net.valuation(s.vals)["row"]
            assert locs[1] == f"A_MC1.{name[int(want[row])]}"
            seen += 1
    assert seen == len(b)


# -- functional contracts --------------------------------------------------------------

def test_fc1_low_wood_needs_request():
    wo = np.full(20, 1000)
    ok = make_trace(20, Wo_M=wo, pred_Wo_R=1)
    bad = make_trace(20, Wo_M=wo, pred_Wo_R=np.r_[np.ones(10), np.zeros(10)])
    assert verify_contract("FC1", ok).status == "satisfied"
    assert verify_contract("FC1", bad).first_violation_row == 10


def test_fc2_overdue_delivery_needs_alarm():
    n = 100
    req = np.r_[np.zeros(10), np.ones(90)]
    quiet = make_trace(n, Wo_M=1000, Wo_R=req, pred_W_A=0)
    alarm = make_trace(n, Wo_M=1000, Wo_R=req, pred_W_A=np.r_[np.zeros(70), np.ones(30)])
    delivered = make_trace(n, Wo_M=1000, Wo_R=req, Wo_D=np.r_[np.zeros(40), np.ones(60)])
    assert verify_contract("FC2", quiet).first_violation_row == 70  # request at 10, wait 60
    assert verify_contract("FC2", alarm).status == "satisfied"
    assert verify_contract("FC2", delivered).status == "satisfied"


def test_fc3_spurious_request():
    pulse = np.zeros(20)
    pulse[12] = 1
    assert verify_contract("FC3", make_trace(20, pred_Wo_R=0)).status == "satisfied"
    r = verify_contract("FC3", make_trace(20, pred_Wo_R=pulse))
    assert r.status == "violated" and r.first_violation_row == 12


def test_fc4_latch():
    never = make_trace(30, B_T=9000)
    left = np.r_[np.full(10, 14000), np.full(20, 17000)]
    bad = make_trace(30, B_T=left)
    good = make_trace(30, B_T=left, critical_alarm=np.r_[np.zeros(12), np.ones(18)])
    assert verify_contract("FC4", never).status == "satisfied"
    r = verify_contract("FC4", bad)
    # row 12 averages 14000, 17000, 17000 = 16000, still in range
    assert r.status == "violated" and r.first_violation_row == 13
    assert verify_contract("FC4", good).status == "satisfied"


def test_fc5_turn_off():
    off = np.r_[np.zeros(10), np.ones(10)]
    assert verify_contract("FC5", make_trace(20, turn_off=off, burner_on=1 - off)).status \
        == "satisfied"
    assert verify_contract("FC5", make_trace(20, turn_off=off)).first_violation_row == 10


def test_fc6_wood_mass_positive():
    wo = np.r_[np.full(10, 3000), np.zeros(10)]
    assert verify_contract("FC6", make_trace(20, pred_Wo_M=wo)).first_violation_row == 13


def test_fc7_around_boiling_after_latch():
    bo = np.r_[ramp(10, 9100, 100), np.full(10, 10000)]
    ok = make_trace(20, Bo_T=bo, pred_Bo_T=np.r_[ramp(10, 9100, 100), np.full(10, 10020)])
    bad = make_trace(20, Bo_T=bo, pred_Bo_T=np.r_[ramp(10, 9100, 100), np.full(10, 10300)])
    # stabilized Bo_T first reaches boiling at row 12
    assert verify_contract("FC7", ok).status == "satisfied"
    r = verify_contract("FC7", bad)
    assert r.status == "violated" and r.first_violation_row == 12


def test_fc8_low_water_alarm_and_turn_off():
    w = np.full(20, 500)
    assert verify_contract("FC8", make_trace(20, W_M=w, pred_W_A=1, turn_off=1)).status \
        == "satisfied"
    assert verify_contract("FC8", make_trace(20, W_M=w, pred_W_A=1)).status == "violated"


def test_fc9_clean_and_spurious_alarm():
    assert verify_contract("FC9", make_trace(20)).status == "satisfied"
    blip = np.zeros(20)
    blip[9] = 1
    tr = make_trace(20, pred_W_A=blip)
    r = verify_contract("FC9", tr)
    assert r.status == "violated" and r.first_violation_row == 9
    inv, dual = r.verdicts
    assert not inv.satisfied and dual.satisfied
    assert dual.evidence.final.trace_row == 9
    assert "G1_FC9.Alarm" in dual.evidence.final.locations


def test_fc10_predictions_above_ambient_when_off():
    off = np.r_[np.ones(10), np.zeros(10)]
    ok = make_trace(20, burner_on=off, pred_B_T=2500, pred_Bo_T=2100)
    bad = make_trace(20, burner_on=off, pred_B_T=2500, pred_Bo_T=1500)
    assert verify_contract("FC10", ok).status == "satisfied"
    assert verify_contract("FC10", bad).first_violation_row == 10


# -- infrastructure contract -------------------------------------------------------------

def alarm_trace(minutes, burner_off_at=None):
    n = 60 + minutes * 60 + 60
    alarm = np.zeros(n)
    alarm[60:60 + minutes * 60] = 1
    burner = np.ones(n)
    if burner_off_at is not None:
        burner[burner_off_at:] = 0
    return make_trace(n, critical_alarm=alarm, burner_on=burner)


def test_ic1_four_minutes_is_vacuous():
    assert verify_contract("IC1", alarm_trace(4)).status == "satisfied"


def test_ic1_six_minutes_burner_on_violates_at_five():
    r = verify_contract("IC1", alarm_trace(6))
    assert r.status == "violated" and r.first_violation_row == 60 + 300


def test_ic1_six_minutes_burner_off_at_five():
    assert verify_contract("IC1", alarm_trace(6, burner_off_at=360)).status == "satisfied"


# -- builders: errors and kinds -------------------------------------------------------------

def test_missing_column_named():
    tr = make_trace(10)
    del tr.columns["pred_Bo_T"]
    with pytest.raises(ContractError, match="MC1: trace is missing column 'pred_Bo_T'"):
        build_contract("MC1", tr)
    with pytest.raises(ContractError, match="pred_Bo_T"):
        direct_oracle("MC1", tr)


def test_short_trace_rejected():
    with pytest.raises(ContractError, match="window exceeds series"):
        build_contract("FC9", make_trace(3))


def test_builder_kinds():
    tr = make_trace(10)
    assert build_monotonicity("MC2", tr).id == "MC2"
    assert build_functional("FC9", tr).id == "FC9"
    assert build_infrastructure(tr).id == "IC1"
    with pytest.raises(ContractError):
        build_monotonicity("FC1", tr)
    with pytest.raises(ContractError):
        build_functional("IC1", tr)
    with pytest.raises(ContractError, match="unknown contract"):
        build_contract("FC11", tr)


def test_queries_are_invariances_then_duals():
    c = build_contract("FC9", make_trace(10))
    assert str(c.queries[0]) == ("A[] A_FC9.AboveW_min imply "
                                 "(not (G1_FC9.Alarm || G2_FC9.B_off_true))")
    assert [q.is_invariance for q in c.queries] == [True, False]


def test_clean_trace_has_no_oracle_violations():
    tr = make_trace(20)
    for cid in CONTRACT_IDS:
        assert direct_oracle(cid, tr) == []


def test_mc_on_two_rows_with_m1():
    tr = make_trace(2, B_T=[5000, 5000], pred_Bo_T=[5000, 5000])
    assert direct_oracle("MC1", tr, ContractParams(m=1)) == []
    assert verify_contract("MC1", tr, ContractParams(m=1)).status == "satisfied"


# -- oracle agreement ------------------------------------------------------------------------

@pytest.mark.parametrize("cid", CONTRACT_IDS)
def test_builder_agrees_with_oracle(cid):
    rng = np.random.default_rng(CONTRACT_IDS.index(cid))
    for _ in range(40):
        tr = random_trace(rng, int(rng.integers(6, 80)))
        p = random_params(rng)
        r = verify_contract(cid, tr, p)
        o = direct_oracle(cid, tr, p)
        assert (r.status == "violated") == bool(o)
        assert r.first_violation_row == (o[0].row if o else None)


def test_counterexample_is_replayable():
    tr = make_trace(30, B_T=ramp(30, 9900, -100), pred_Bo_T=9500)
    c = build_contract("MC1", tr)
    v = check(c.network, c.invariants[1])
    from twincheck.verifier import replay
    assert not v.satisfied and replay(c.network, v.evidence)
