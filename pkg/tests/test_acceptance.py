"""Acceptance criteria 1-10.

Each test is one criterion.  ``conftest.py`` prints a PASS/FAIL line per
criterion at the end of the session; running this file directly does the
same without pytest.
"""

import time

import numpy as np
import pytest
from helpers import random_params, random_trace

from twincheck import plant, twin
from twincheck.automata import VacuousModel
from twincheck.automata.library import lamp_network, random_network, random_predicate
from twincheck.contracts import (
    CONTRACT_IDS,
    ContractParams,
    direct_oracle,
    stabilize,
    verify_contract,
    verify_suite,
)
from twincheck.verifier import check, check_duality, explicit_oracle, parse_query

DEFAULT = plant.PlantParams()
HORIZON = 400


def rollout(*faults):
    return twin.rollout(twin.identity_stub(), DEFAULT, HORIZON, faults=faults)


def status(cid, tr):
    return verify_contract(cid, tr, ContractParams.from_meta(tr.meta))


def test_criterion_01_lamp():
    v = check(lamp_network(), "E<> Lamp.bright")
    assert v.satisfied
    actions = [s.action for s in v.evidence.steps[1:]]
    assert len(actions) == 2 and all("press!" in a and "press?" in a for a in actions)
    assert "[y < 5]" in actions[1]
    assert not check(lamp_network(slow_user=True), "E<> Lamp.bright").satisfied


def test_criterion_02_mc1_stuck_boiler_prediction():
    f = twin.preset("mc1-stuck")
    tr = rollout(f)
    # the burner is off and the boiler is cooling through the boiling point
    assert tr["B_T"][252] > tr["B_T"][292] and tr["B_T"][292] < DEFAULT.T_Boil * 100
    r = status("MC1", tr)
    assert r.status == "violated"
    assert f.t_from <= r.first_violation_row <= f.t_to
    assert status("MC1", rollout()).status == "satisfied"


def test_criterion_03_fc3_noisy_wood_request():
    # wood drops below its minimum near row 134, so the window stops short of it
    f = twin.preset("fc3-noise")
    assert f.kind == "additive_noise" and f.signal == "pred_Wo_R"
    tr = rollout(f)
    assert tr["Wo_M"][f.t_from:f.t_to + 1].min() > DEFAULT.Wo_M_min * 100
    assert status("FC3", tr).status == "violated"
    assert status("FC3", rollout()).status == "satisfied"


def test_criterion_04_fc9_noisy_water_alarm():
    f = twin.preset("fc9-noise")
    assert f.kind == "additive_noise" and f.signal == "pred_W_A"
    tr = rollout(f)
    assert tr["W_M"][f.t_from:f.t_to + 1].min() > DEFAULT.W_M_min * 100
    r = status("FC9", tr)
    inv, dual = r.verdicts
    assert inv.query.is_invariance and not inv.satisfied
    assert not dual.query.is_invariance and dual.satisfied and dual.evidence is not None
    assert status("FC9", rollout()).status == "satisfied"


def test_criterion_05_duality():
    rng = np.random.default_rng(2024)
    done = 0
    while done < 120:
        net = random_network(rng)
        try:
            assert check_duality(net, random_predicate(rng, net), horizon=20)
        except VacuousModel:
            continue
        done += 1


def test_criterion_06_oracle_agreement():
    rng = np.random.default_rng(606)
    done = 0
    while done < 220:
        net = random_network(rng, max_templates=3, max_locations=4, max_const=5)
        p = random_predicate(rng, net)
        h = int(rng.integers(0, 21))
        try:
            for kind in ("A[]", "E<>"):
                q = parse_query(f"{kind} {p}", net)
                assert check(net, q, horizon=h).satisfied == \
                       explicit_oracle(net, q, horizon=h).satisfied, (kind, p, h)
        except VacuousModel:
            continue
        done += 1


def _length(rng):
    # mostly short traces, with a tail reaching the 200-row bound
    return int(rng.integers(6, 61)) if rng.random() < 0.9 else int(rng.integers(61, 201))


@pytest.mark.parametrize("cid", CONTRACT_IDS)
def test_criterion_07_contract_oracle_agreement(cid):
    rng = np.random.default_rng(7000 + CONTRACT_IDS.index(cid))
    outcomes = set()
    for _ in range(1000):
        tr = random_trace(rng, _length(rng))
        p = random_params(rng)
        r = verify_contract(cid, tr, p)
        o = direct_oracle(cid, tr, p)
        assert (r.status == "violated") == bool(o)
        assert r.first_violation_row == (o[0].row if o else None)
        outcomes.add(r.status)
    assert outcomes == {"satisfied", "violated"}


def test_criterion_08_plant_compliance():
    for seed in range(100):
        p = plant.random_scenario(seed)
        tr = twin.rollout(twin.identity_stub(), p, plant.default_horizon(p), seed)
        res = verify_suite(tr, CONTRACT_IDS, ContractParams.from_meta(tr.meta))
        bad = [(r.contract, r.first_violation_row) for r in res if r.status != "satisfied"]
        assert not bad, (seed, bad)


def test_criterion_09_stabilization():
    rng = np.random.default_rng(9)
    for _ in range(10_000):
        n = int(rng.integers(2, 60))
        m = int(rng.integers(1, n))
        x = rng.integers(-20000, 20001, size=n)
        s = stabilize(x, m)
        c = int(rng.integers(-20000, 20001))
        assert np.all(stabilize(np.full(n, c), m).values == c)
        assert np.array_equal(stabilize(x, 1).values, x[:-1])
        win = np.lib.stride_tricks.sliding_window_view(x, m)[:n - m]
        assert np.all(win.min(axis=1) <= s.values) and np.all(s.values <= win.max(axis=1))


def test_criterion_10_monotonicity_brute_force():
    assert twin.monotonicity_counterexamples(twin.monotone_surrogate(), n=10_000) == []
    assert twin.monotonicity_counterexamples(twin.anti_monotone_surrogate(), n=10_000)


if __name__ == "__main__":
    t0 = time.perf_counter()
    for name, fn in sorted(globals().items()):
        if not name.startswith("test_criterion_"):
            continue
        cases = [(c,) for c in CONTRACT_IDS] if name.startswith("test_criterion_07") else [()]
        try:
            for args in cases:
                fn(*args)
            print(f"criterion {int(name[15:17])}: PASS")
        except AssertionError as exc:
            print(f"criterion {int(name[15:17])}: FAIL {exc}")
    print(f"total {time.perf_counter() - t0:.1f} s")
