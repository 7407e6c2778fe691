"""Shared contract types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..automata.network import Network, UtaTemplate
from ..trace import Trace
from ..verifier import DiagnosticTrace, Query
from .params import ContractParams
from .stabilize import stabilize

MONOTONICITY = ("MC1", "MC2", "MC3")
FUNCTIONAL = ("FC1", "FC2", "FC3", "FC4", "FC5", "FC6", "FC7", "FC8", "FC9", "FC10")
INFRASTRUCTURE = ("IC1",)
CONTRACT_IDS = MONOTONICITY + FUNCTIONAL + INFRASTRUCTURE

# Trend / class codes shared by the monotonicity templates and the oracle.
STABLE, INCREASING, DECREASING, OTHER = 0, 1, 2, 3


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class Signal:
    """A trace column fed to a contract network.

    Analog columns are stabilized (moving average over ``m`` steps); boolean
    and ambient columns are used as recorded.  ``shadow`` additionally keeps
    the previous row's value in ``<column>1``.
    """

    column: str
    stabilized: bool = True
    shadow: bool = False

    @property
    def var(self) -> str:
        return self.column

    @property
    def shadow_var(self) -> str:
        return self.column + "1"


def check_id(cid: str) -> str:
    if cid not in CONTRACT_IDS:
        raise ContractError(f"unknown contract {cid!r}; expected one of {', '.join(CONTRACT_IDS)}")
    return cid


def require_signals(cid: str, trace: Trace, signals) -> None:
    for s in signals:
        if s.column not in trace:
            raise ContractError(f"{cid}: trace is missing column {s.column!r}")


def signal_series(trace: Trace, sig: Signal, m: int) -> np.ndarray:
    """Values of ``sig`` at trace rows ``m .. len-1``."""
    col = trace[sig.column]
    if m >= len(col):
        raise ContractError(f"window exceeds series: m={m} needs more than {m} rows, "
                            f"trace has {len(col)}")
    if sig.stabilized:
        return stabilize(col, m).values
    return np.asarray(col[m:], dtype=np.int64)


@dataclass
class Contract:
    """Trace driver, assumption and guarantee templates, and queries.

    ``network`` is the composition driver || assumptions || guarantees.
    The first ``len(queries) // 2`` queries are invariances, the rest their
    reachability duals in the same order.
    """

    id: str
    driver: UtaTemplate
    assumptions: list[UtaTemplate]
    guarantees: list[UtaTemplate]
    queries: list[Query]
    network: Network
    signals: tuple[Signal, ...]
    params: ContractParams

    @property
    def invariants(self) -> list[Query]:
        return [q for q in self.queries if q.is_invariance]

    @property
    def duals(self) -> list[Query]:
        return [q for q in self.queries if not q.is_invariance]


@dataclass
class ViolationRecord:
    contract: str
    query: str
    row: int                       # trace row index of the violation
    signals: dict[str, int]        # contract signal values at that row
    evidence: DiagnosticTrace | None = field(default=None, repr=False)

    def to_dict(self, with_evidence: bool = True) -> dict:
        d = {"contract": self.contract, "query": self.query, "row": self.row,
             "signals": dict(self.signals)}
        if with_evidence:
            d["evidence"] = None if self.evidence is None else self.evidence.to_dict()
        return d
