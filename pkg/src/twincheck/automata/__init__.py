"""Timed-automata networks with zone-based symbolic semantics."""

from .dbm import Zone, zone_canonical, zone_constrain, zone_delay, zone_reset
from .expr import ExprError, parse_expr, parse_updates, to_text
from .network import (
    Edge,
    Location,
    ModelError,
    Network,
    NetworkBuilder,
    RangeViolation,
    UtaTemplate,
    VarDecl,
)
from .semantics import (
    Explorer,
    SymState,
    Transition,
    VacuousModel,
    compile_state_pred,
    eval_pred,
    initial_state,
    successors,
)
