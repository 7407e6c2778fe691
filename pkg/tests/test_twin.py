"""Surrogates, training, fault injection and rollout."""

import numpy as np
import pytest

from twincheck import plant, twin
from twincheck.contracts import ContractParams, verify_contract
from twincheck.trace import PRED_COLUMNS, PREDICTED, Trace
from twincheck.twin import FaultSpec, TwinError


@pytest.fixture(scope="module")
def training():
    return [plant.run(plant.random_scenario(s), 400, s) for s in range(6)]


@pytest.fixture(scope="module")
def held_out():
    return [plant.run(plant.random_scenario(s), 400, s) for s in (100, 101, 102)]


def test_fit_beats_two_degrees_on_held_out(training, held_out):
    s = twin.fit(training)
    assert twin.mean_abs_error(s, held_out) < 2.0


def test_fit_is_deterministic(training):
    a, b = twin.fit(training, seed=3), twin.fit(training, seed=3)
    probe = training[0].row(50)
    prm = twin.trace_params(training[0])
    assert a.predict_row(probe, prm) == b.predict_row(probe, prm)
    assert np.array_equal(a.weights, b.weights)


def test_fit_on_constant_trace_returns_constants():
    n = 20
    row = {"B_T": 5000, "Bo_T": 4000, "W_M": 3000, "Wo_M": 2000, "T_env": 2000,
           "W_A": 0, "Wo_A": 0, "Wo_R": 1, "Wo_D": 0, "burner_on": 1,
           "critical_alarm": 0, "turn_off": 0}
    tr = Trace({k: np.full(n, v) for k, v in row.items()},
               meta={"alpha": "0.03", "beta": "0.5", "delta": "850"})
    s = twin.fit([tr])
    out = s.predict_row(row, twin.trace_params(tr))
    assert out == {o: row[o] for o in PREDICTED}


def test_fit_empty_training_set():
    with pytest.raises(TwinError, match="empty training set"):
        twin.fit([])


def test_outputs_within_ranges(training):
    s = twin.fit(training)
    for tr in training[:2]:
        pt = twin.predict_trace(s, tr)
        for o in PREDICTED:
            col = pt["pred_" + o]
            if o in ("W_A", "Wo_A", "Wo_R", "Wo_D"):
                assert set(np.unique(col)) <= {0, 1}
            else:
                lo, hi = twin.OUTPUT_RANGES[o]
                assert col.min() >= lo * 100 and col.max() <= hi * 100


def test_constant_predictor_ignores_inputs(training):
    s = twin.ConstantSurrogate({o: 1.0 for o in PREDICTED})
    prm = twin.trace_params(training[0])
    assert s.predict_row(training[0].row(0), prm) == s.predict_row(training[0].row(99), prm)


def test_predict_schema_mismatch():
    with pytest.raises(TwinError, match="missing input columns"):
        twin.monotone_surrogate().predict_row({"B_T": 1}, {"alpha": 1, "beta": 1, "delta": 1})


def test_monotone_surrogate_bigger_input_bigger_output():
    s = twin.monotone_surrogate()
    x = {n: 1.0 for n in twin.INPUTS}
    y = dict(x, B_T=2.0, W_A=1.0)
    fx, fy = s.predict(x, 0), s.predict(y, 0)
    assert all(fx[o] <= fy[o] for o in PREDICTED)


def test_monotonicity_brute_force():
    assert twin.monotonicity_counterexamples(twin.monotone_surrogate(), n=2000) == []
    assert twin.monotonicity_counterexamples(twin.anti_monotone_surrogate(), n=2000)


def test_save_load_round_trip(training, tmp_path):
    s = twin.fit(training)
    s.save(tmp_path / "w.json")
    t = twin.LinearSurrogate.load(tmp_path / "w.json")
    prm = twin.trace_params(training[0])
    for i in (0, 100, 300):
        row = training[0].row(i)
        assert s.predict_row(row, prm) == t.predict_row(row, prm)


def test_load_rejects_foreign_file(tmp_path):
    (tmp_path / "w.json").write_text('{"format": "other"}')
    with pytest.raises(TwinError):
        twin.LinearSurrogate.load(tmp_path / "w.json")


# -- rollout and faults ------------------------------------------------------------------

def test_identity_rollout_copies_truth():
    p = plant.random_scenario(0)
    tr = twin.rollout(twin.identity_stub(), p, 200)
    for c in PRED_COLUMNS:
        assert np.array_equal(tr[c], tr[c[5:]])


def test_rollout_horizon_one():
    assert len(twin.rollout(twin.identity_stub(), plant.PlantParams(), 1)) == 1


def test_stuck_window_is_constant_exactly_there():
    p = plant.PlantParams()
    f = FaultSpec("stuck_output", "pred_B_T", 50, 100)
    tr = twin.rollout(twin.identity_stub(), p, 200, faults=(f,))
    col = tr["pred_B_T"]
    assert np.all(col[50:101] == col[50])
    assert np.array_equal(col[:50], tr["B_T"][:50])
    assert np.array_equal(col[101:], tr["B_T"][101:])
    assert col[101] != col[50]


@pytest.mark.parametrize("fault", [
    FaultSpec("additive_noise", "pred_B_T", 30, 60, amplitude=3.0, seed=1),
    FaultSpec("bias", "pred_W_M", 30, 60, offset=-2.0),
    FaultSpec("lag", "pred_Wo_M", 30, 60, steps=5),
    FaultSpec("stuck_output", "pred_Bo_T", 30, 60, value=20.0),
])
def test_fault_locality(fault, training):
    p = plant.random_scenario(100)
    s = twin.fit(training)
    clean = twin.rollout(s, p, 150)
    dirty = twin.rollout(s, p, 150, faults=(fault,))
    col = fault.signal
    outside = np.r_[0:30, 61:150]
    assert np.array_equal(clean[col][outside], dirty[col][outside])
    assert not np.array_equal(clean[col][30:61], dirty[col][30:61])
    others = [c for c in PRED_COLUMNS if c != col]
    assert all(np.array_equal(clean[c], dirty[c]) for c in others)


def test_noise_is_seeded():
    p = plant.PlantParams()
    f = FaultSpec("additive_noise", "pred_Bo_T", 10, 90, amplitude=2.0, seed=4)
    a = twin.rollout(twin.identity_stub(), p, 100, faults=(f,))
    b = twin.rollout(twin.identity_stub(), p, 100, faults=(f,))
    assert a.equals(b)


def test_faults_compose():
    p = plant.PlantParams()
    fs = (FaultSpec("bias", "pred_B_T", 10, 20, offset=5.0),
          FaultSpec("bias", "pred_B_T", 15, 20, offset=5.0))
    tr = twin.rollout(twin.identity_stub(), p, 40, faults=fs)
    d = tr["pred_B_T"] - tr["B_T"]
    assert list(d[10:15]) == [500] * 5 and list(d[15:21]) == [1000] * 6


def test_fault_validation():
    with pytest.raises(TwinError, match="unknown output"):
        FaultSpec("bias", "pred_nope", 0, 1)
    with pytest.raises(TwinError, match="unknown fault kind"):
        FaultSpec("melt", "pred_B_T", 0, 1)
    with pytest.raises(TwinError, match="exceeds horizon"):
        twin.rollout(twin.identity_stub(), plant.PlantParams(), 10,
                     faults=(FaultSpec("bias", "pred_B_T", 5, 20),))


def test_monotone_surrogates_against_mc_contracts():
    for seed in range(3):
        p = plant.random_scenario(seed)
        h = plant.default_horizon(p)
        mono = twin.rollout(twin.monotone_surrogate(), p, h, seed)
        anti = twin.rollout(twin.anti_monotone_surrogate(), p, h, seed)
        cp = ContractParams.from_meta(mono.meta)
        assert all(verify_contract(c, mono, cp).status == "satisfied"
                   for c in ("MC1", "MC2", "MC3"))
        assert any(verify_contract(c, anti, cp).status == "violated"
                   for c in ("MC1", "MC2", "MC3"))


def test_presets():
    assert set(twin.PRESETS) == {"mc1-stuck", "fc3-noise", "fc9-noise"}
    assert twin.preset("mc1-stuck").signal == "pred_Bo_T"
    with pytest.raises(TwinError, match="unknown fault preset"):
        twin.preset("nope")
