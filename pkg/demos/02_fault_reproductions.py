"""Three injected twin faults and the contracts that catch them.

The default plant runs for 400 rows.  The perfect twin (which simply
replays the truth) satisfies every contract.  Then each fault preset
distorts one prediction inside its window, and we look at which contract
fails, where, and with what signal values.

    python3 demos/02_fault_reproductions.py
"""

from twincheck import plant, twin
from twincheck.contracts import CONTRACT_IDS, ContractParams, verify_contract, verify_suite

p = plant.PlantParams()
clean = twin.rollout(twin.identity_stub(), p, 400)
cp = ContractParams.from_meta(clean.meta)
results = verify_suite(clean, CONTRACT_IDS, cp)
print("perfect twin:", ", ".join(f"{r.contract}={r.status}" for r in results))

for name, contract in (("mc1-stuck", "MC1"), ("fc3-noise", "FC3"), ("fc9-noise", "FC9")):
    f = twin.preset(name)
    tr = twin.rollout(twin.identity_stub(), p, 400, faults=(f,))
    r = verify_contract(contract, tr, cp)
    print(f"\n{name}: {f.kind} on {f.signal} over rows [{f.t_from}, {f.t_to}]")
    print(f"  {contract} {r.status}, first violation at row {r.first_violation_row}")
    v = r.violations[0]
    print(f"  failing query: {v.query}")
    print(f"  signals at that row: {v.signals}")
    for verdict in r.verdicts:
        if not verdict.query.is_invariance and verdict.satisfied:
            row = verdict.evidence.final.trace_row
            print(f"  dual {verdict.query} has a witness at row {row}")
            break
