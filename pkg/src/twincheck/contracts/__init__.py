"""Stabilization, contract networks, and the direct-on-trace oracle."""

from .builders import (
    build_contract,
    build_functional,
    build_infrastructure,
    build_monotonicity,
    build_update_driver,
    contract_signals,
    stabilized_view,
)
from .model import CONTRACT_IDS, Contract, ContractError, Signal, ViolationRecord
from .oracle import direct_oracle
from .params import ContractParams
from .stabilize import StabilizedSeries, componentwise_leq, mean_round_half_up, stabilize
from .suite import INCONCLUSIVE, SATISFIED, VIOLATED, ContractResult, verify_contract, verify_suite
