"""Fitting a surrogate, then probing it for monotonicity.

A least-squares surrogate is trained on a handful of random scenarios and
scored on scenarios it has not seen.  Two hand-built surrogates then go
through the brute-force monotonicity probe and the monotonicity
contracts: one is monotone by construction, the other is its mirror
image.

    python3 demos/03_surrogates.py
"""

from twincheck import plant, twin
from twincheck.contracts import ContractParams, verify_contract

train = [plant.run(plant.random_scenario(s), 400, s) for s in range(8)]
held_out = [plant.run(plant.random_scenario(s), 400, s) for s in (50, 51, 52)]
s = twin.fit(train)
print(f"fitted surrogate, held-out mean absolute error "
      f"{twin.mean_abs_error(s, held_out):.3f} degC on B_T and Bo_T")

for label, sur in (("monotone", twin.monotone_surrogate()),
                   ("anti-monotone", twin.anti_monotone_surrogate())):
    bad = twin.monotonicity_counterexamples(sur, n=10_000)
    found = f"at least {len(bad)}" if bad else "no"
    print(f"\n{label}: {found} counterexample pairs in 10000 samples")
    if bad:
        x, y = bad[0]
        grew = [k for k in x if x[k] != y[k]]
        print(f"  e.g. raising {', '.join(grew[:4])}... lowered an output")
    p = plant.random_scenario(0)
    tr = twin.rollout(sur, p, plant.default_horizon(p), 0)
    cp = ContractParams.from_meta(tr.meta)
    for cid in ("MC1", "MC2", "MC3"):
        r = verify_contract(cid, tr, cp)
        print(f"  {cid}: {r.status}" + (f" at row {r.first_violation_row}"
                                        if r.first_violation_row is not None else ""))
