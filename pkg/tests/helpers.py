"""Shared generators for the test suite."""

from __future__ import annotations

import numpy as np

from twincheck.contracts import ContractParams
from twincheck.trace import PLANT_COLUMNS, PRED_COLUMNS, Trace


def _walk(rng, n, start, step, lo, hi):
    """Random walk with sticky stretches, so every trend class shows up."""
    out = np.empty(n, dtype=np.int64)
    x = start
    drift = 0
    for i in range(n):
        if rng.random() < 0.2:
            drift = int(rng.integers(-step, step + 1))
        if rng.random() < 0.25:
            drift = 0
        x = int(np.clip(x + drift + rng.integers(-step // 4, step // 4 + 1), lo, hi))
        out[i] = x
    return out


def _bits(rng, n, p_on=0.1, p_off=0.3):
    out = np.zeros(n, dtype=np.int64)
    b = int(rng.random() < 0.3)
    for i in range(n):
        if rng.random() < (p_off if b else p_on):
            b = 1 - b
        out[i] = b
    return out


def random_params(rng) -> ContractParams:
    return ContractParams(
        m=int(rng.integers(1, 5)), epsilon=int(rng.integers(0, 80)), lag=int(rng.integers(0, 4)),
        wood_wait=int(rng.integers(1, 15)), alarm_hold=int(rng.integers(1, 15)),
    )


def random_trace(rng, length: int) -> Trace:
    """A trace whose signals hover around the default contract thresholds."""
    p = ContractParams()
    n = length
    cols = {}
    cols["B_T"] = _walk(rng, n, int(rng.integers(9000, 17000)), 300, 1500, 20000)
    cols["Bo_T"] = _walk(rng, n, int(rng.integers(9500, 10500)), 200, 1500, 12000)
    cols["W_M"] = _walk(rng, n, p.W_M_min + int(rng.integers(-300, 300)), 120, 0, 5000)
    cols["Wo_M"] = _walk(rng, n, p.Wo_M_min + int(rng.integers(-300, 300)), 120, 0, 5000)
    cols["T_env"] = np.full(n, int(rng.integers(1500, 2500)))
    for b in ("W_A", "Wo_A", "Wo_R", "Wo_D", "burner_on", "critical_alarm", "turn_off"):
        cols[b] = _bits(rng, n)
    out = {c: cols[c] for c in PLANT_COLUMNS if c != "t"}
    for pc in PRED_COLUMNS:
        base = cols[pc[5:]].copy()
        mode = rng.integers(5)
        if mode == 1:  # occasional glitches
            k = rng.random(n) < 0.05
            base[k] = _bits(rng, n)[k] if pc[5:] in ("W_A", "Wo_A", "Wo_R", "Wo_D") \
                else base[k] + rng.integers(-400, 400, size=int(k.sum()))
        elif mode == 2:  # frozen stretch
            a = int(rng.integers(0, n))
            base[a:a + int(rng.integers(1, 30))] = base[a]
        elif mode == 3:  # independent signal
            base = _bits(rng, n) if pc[5:] in ("W_A", "Wo_A", "Wo_R", "Wo_D") \
                else _walk(rng, n, int(base[0]), 200, 0, 20000)
        elif mode == 4:  # dropout to zero
            a = int(rng.integers(0, n))
            base[a:a + int(rng.integers(1, 10))] = 0
        out[pc] = np.maximum(base, 0)
    return Trace(out)
