"""Argumentative exchange engine: quantitative bipolar argumentation under
gradual semantics, a turn-based conflict-resolution protocol, agent
behaviours, property checkers, metrics and a seeded simulator."""

from .graphs import (
    ATTACK,
    SUPPORT,
    ArgumentId,
    Baf,
    Qbaf,
    graph_from_dict,
    graph_to_dict,
    paths,
    pro_con,
    sub_and_diff,
    validate_for_explanandum,
)
from .kernels import backend_name
from .semantics import (
    UNIT_RANGE,
    EvaluationRange,
    SemanticsKind,
    Stance,
    dfquad_aggregate,
    dfquad_combine,
    evaluate,
    stance_of,
)
from .exchange import (
    AgentSide,
    BehaviourConfig,
    Caps,
    Contribution,
    ExchangeState,
    ExplicitSchedule,
    PrivateTriple,
    RoundRobin,
    Transcript,
    agent_state,
    new_exchange,
    perceived_effect,
    private_view,
    resolution_status,
    run,
    submit,
)
from .behaviours import (
    ConstantBias,
    Counterfactual,
    Greedy,
    RandomBias,
    Shallow,
    Unresponsive,
    assign_bias,
    select_counterfactual,
    select_greedy,
    select_shallow,
)

__version__ = "0.1.0"

__all__ = [
    "ATTACK",
    "SUPPORT",
    "AgentSide",
    "ArgumentId",
    "Baf",
    "BehaviourConfig",
    "Caps",
    "ConstantBias",
    "Contribution",
    "Counterfactual",
    "EvaluationRange",
    "ExchangeState",
    "ExplicitSchedule",
    "Greedy",
    "PrivateTriple",
    "Qbaf",
    "RandomBias",
    "RoundRobin",
    "SemanticsKind",
    "Shallow",
    "Stance",
    "Transcript",
    "UNIT_RANGE",
    "Unresponsive",
    "agent_state",
    "assign_bias",
    "backend_name",
    "dfquad_aggregate",
    "dfquad_combine",
    "evaluate",
    "graph_from_dict",
    "graph_to_dict",
    "new_exchange",
    "paths",
    "perceived_effect",
    "private_view",
    "pro_con",
    "resolution_status",
    "run",
    "select_counterfactual",
    "select_greedy",
    "select_shallow",
    "stance_of",
    "sub_and_diff",
    "submit",
    "validate_for_explanandum",
]
