"""Model-check contracts against a trace and collect violation records."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..trace import Trace
from ..verifier import DEFAULT_MAX_STATES, Inconclusive, Verdict, check_all
from .builders import build_contract
from .model import CONTRACT_IDS, Contract, ContractError, ViolationRecord
from .params import ContractParams

SATISFIED = "satisfied"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


@dataclass
class ContractResult:
    contract: str
    status: str
    verdicts: list[Verdict] = field(default_factory=list)
    violations: list[ViolationRecord] = field(default_factory=list)
    states_explored: int = 0
    seconds: float = 0.0
    detail: str = ""

    @property
    def first_violation_row(self) -> int | None:
        return self.violations[0].row if self.violations else None

    def to_dict(self) -> dict:
        return {
            "contract": self.contract,
            "status": self.status,
            "states_explored": self.states_explored,
            "detail": self.detail,
            "verdicts": [v.to_dict(with_evidence=False) for v in self.verdicts],
            "violations": [r.to_dict() for r in self.violations],
        }


def _record(c: Contract, v: Verdict) -> ViolationRecord:
    final = v.evidence.final
    names = {s.var for s in c.signals} | {s.shadow_var for s in c.signals if s.shadow}
    signals = {k: val for k, val in final.valuation.items() if k in names}
    return ViolationRecord(c.id, str(v.query), final.trace_row, signals, v.evidence)


def _check_complete(c: Contract, verdicts: list[Verdict]) -> None:
    """A fully explored trace-driven network has exactly one state per driver step."""
    rows = c.network.constants["last"] + 1
    expected = rows * (len(c.assumptions) + len(c.guarantees) + 1) + 1
    if verdicts[0].states_explored != expected:
        raise ContractError(f"{c.id}: replay stalled after {verdicts[0].states_explored} "
                            f"of {expected} states (a template has no enabled edge)")


def verify_contract(cid: str, trace: Trace, params: ContractParams | None = None,
                    max_states: int = DEFAULT_MAX_STATES) -> ContractResult:
    """Build contract ``cid`` over ``trace`` and decide all of its queries at once.

    The contract is violated when any invariance query fails; each failing
    query contributes one record located at its counterexample's last row.
    """
    params = params or ContractParams()
    t0 = time.perf_counter()
    c = build_contract(cid, trace, params)
    try:
        verdicts = check_all(c.network, c.queries, max_states=max_states)
    except Inconclusive as exc:
        return ContractResult(cid, INCONCLUSIVE, states_explored=exc.explored,
                              seconds=time.perf_counter() - t0, detail=str(exc))
    if all(v.satisfied for v in verdicts if v.query.is_invariance):
        _check_complete(c, verdicts)
    records = [_record(c, v) for v in verdicts if v.query.is_invariance and not v.satisfied]
    records.sort(key=lambda r: r.row)
    status = VIOLATED if records else SATISFIED
    explored = max(v.states_explored for v in verdicts)
    return ContractResult(cid, status, verdicts, records, explored,
                          time.perf_counter() - t0)


def verify_suite(trace: Trace, ids=CONTRACT_IDS, params: ContractParams | None = None,
                 max_states: int = DEFAULT_MAX_STATES) -> list[ContractResult]:
    """Verify several contracts over one trace, sorted by contract id order."""
    order = {cid: i for i, cid in enumerate(CONTRACT_IDS)}
    return [verify_contract(cid, trace, params, max_states)
            for cid in sorted(ids, key=lambda c: order.get(c, len(order)))]
