"""Agent behaviours: bias assignment and contribution selection.

Bias policies decide the base score an agent gives a newly learnt
argument.  Machines use a constant; humans draw a keyed uniform and, to
model confirmation bias, subtract a constant offset when the learnt
argument cuts against their current position (an argument in the con set
while they argue for the explanandum, or in the pro set while they argue
against).  Results are clamped to [0, 1].

Contribution policies decide what an agent puts on the table when
scheduled:

* unresponsive - never contributes;
* shallow      - one bounded batch of its strongest direct edges onto the
                 explanandum, delivered at its first turn (the one-shot
                 static-explanation style);
* greedy       - each turn, the single strongest admissible edge, where
                 admissible means supporting a pro argument or the
                 explanandum / attacking a con argument when arguing for
                 (mirrored when arguing against);
* counterfactual - each turn, the edge whose addition to the agent's
                 private view of the exchange moves the explanandum's
                 strength the furthest in the agent's direction.

All ties break on the lexicographically smallest (source, target) pair so
runs are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import SemanticsError
from .exchange import (
    AgentId,
    AgentSide,
    BehaviourConfig,
    EdgeSpec,
    ExchangeState,
    agent_state,
)
from .graphs import ATTACK, SUPPORT, ArgumentId, parity_classes
from .kernels import eval_plan_masked
from .rng import DrawContext
from .semantics import clamp_unit


@dataclass(frozen=True)
class ConstantBias:
    """Fixed bias for every learnt argument (0 = cannot learn, 1 = credulous)."""

    value: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 1.0):
            raise SemanticsError(f"constant bias must lie in [0, 1], got {self.value!r}")

    def bias_for(self, agent, argument, counter_aligned, draw) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"kind": "constant", "c": self.value}


@dataclass(frozen=True)
class RandomBias:
    """Keyed uniform draw, reduced by `offset` on counter-aligned arguments.

    With offset_all the reduction applies to every learnt argument, which
    is useful for sensitivity analysis but is not the default model.
    """

    offset: float = 0.0
    offset_all: bool = False

    def __post_init__(self) -> None:
        if self.offset > 0.0:
            raise SemanticsError(f"confirmation offset must be <= 0, got {self.offset!r}")

    def bias_for(self, agent, argument, counter_aligned, draw) -> float:
        value = draw(agent, argument)
        if self.offset_all or counter_aligned:
            value += self.offset
        return clamp_unit(value)

    def to_dict(self) -> dict:
        data: dict = {"kind": "random", "offset": self.offset}
        if self.offset_all:
            data["offset_all"] = True
        return data


def assign_bias(
    policy,
    agent: AgentId,
    state: ExchangeState,
    learnt_arg: ArgumentId,
    draw: Callable[[AgentId, ArgumentId], float] | None = None,
) -> float:
    """Bias the agent's policy gives one argument being learnt right now.

    Alignment is judged on the exchange graph including any contributions
    pending in the open timestep.
    """
    draw = draw or DrawContext().uniform
    counter = False
    if len(state.agents) == 2:
        try:
            side = agent_state(state, agent)
        except Exception:
            side = None
        if side is not None:
            classes = parity_classes(state.pending_graph())
            parities = classes.get(learnt_arg, frozenset())
            counter = (side is AgentSide.FOR and 1 in parities) or (
                side is AgentSide.AGAINST and 0 in parities
            )
    return policy.bias_for(agent, learnt_arg, counter, draw)


def _unexchanged_private_edges(state: ExchangeState, agent: AgentId) -> list[EdgeSpec]:
    qbaf = state.triples[agent].qbaf
    exchanged = state.exchange.edges
    out: list[EdgeSpec] = []
    for u, v in qbaf.attacks:
        if (u, v) not in exchanged:
            out.append((u, v, ATTACK))
    for u, v in qbaf.supports:
        if (u, v) not in exchanged:
            out.append((u, v, SUPPORT))
    return out


def _args_introduced(state: ExchangeState, agent: AgentId) -> int:
    return sum(1 for who, _ in state.introduced.values() if who == agent)


def select_shallow(state: ExchangeState, agent: AgentId, max_edges: int) -> tuple[EdgeSpec, ...]:
    """Up to max_edges strongest not-yet-exchanged direct edges onto e.

    Supports when arguing for the explanandum, attacks when arguing
    against; ranked by the agent's own current evaluation of the source,
    ties to the smaller argument id.  Empty when nothing qualifies.
    """
    if max_edges < 1:
        return ()
    side = agent_state(state, agent)
    wanted = SUPPORT if side is AgentSide.FOR else ATTACK
    e = state.explanandum
    strengths = state.strengths_of(agent)
    candidates = [
        (u, v, pol)
        for (u, v, pol) in _unexchanged_private_edges(state, agent)
        if v == e and pol == wanted
    ]
    candidates.sort(key=lambda edge: (-strengths[edge[0]], edge[0]))
    return tuple(candidates[:max_edges])


def select_greedy(
    state: ExchangeState,
    agent: AgentId,
    allow_new_argument: bool = True,
) -> tuple[EdgeSpec, ...]:
    """At most one edge: strongest admissible source, closest to e on ties."""
    side = agent_state(state, agent)
    e = state.explanandum
    pro, con = _exchange_pro_con(state)
    if side is AgentSide.FOR:
        support_targets = pro | {e}
        attack_targets = con
    else:
        support_targets = con
        attack_targets = pro | {e}

    candidates = []
    for u, v, pol in _unexchanged_private_edges(state, agent):
        if pol == SUPPORT and v not in support_targets:
            continue
        if pol == ATTACK and v not in attack_targets:
            continue
        if not allow_new_argument and u not in state.exchange.arguments:
            continue
        candidates.append((u, v, pol))
    if not candidates:
        return ()
    strengths = state.strengths_of(agent)
    distance = _distance_to_explanandum(state, agent)
    candidates.sort(key=lambda edge: (-strengths[edge[0]], distance[edge[0]], edge[0], edge[1]))
    return (candidates[0],)


def select_counterfactual(
    state: ExchangeState,
    agent: AgentId,
    allow_new_argument: bool = True,
) -> tuple[EdgeSpec, ...]:
    """At most one edge: the largest strictly-helpful perceived effect on e.

    Candidates are the agent's not-yet-exchanged private edges whose source
    lies outside the exchange and whose target lies inside.  Arguing for e
    takes the maximum among strictly positive effects, arguing against the
    minimum among strictly negative ones; no qualifying candidate means
    pass.
    """
    if not allow_new_argument:
        # Every candidate introduces its source, so a spent budget means pass.
        return ()
    side = agent_state(state, agent)
    triple = state.triples[agent]
    exchange_args = state.exchange.arguments
    exchanged = state.exchange.edges
    candidates = [
        (u, v, pol)
        for (u, v, pol) in _unexchanged_private_edges(state, agent)
        if u not in exchange_args and v in exchange_args
    ]
    del exchanged
    if not candidates:
        return ()

    plan = triple.plan
    kind_code = triple.semantics.code
    e_idx = plan.index[state.explanandum]
    mask = np.zeros(plan.n, dtype=np.uint8)
    for a in exchange_args:
        mask[plan.index[a]] = 1
    base = float(eval_plan_masked(plan, mask, kind_code)[e_idx])

    # The extended view brings in every private edge of the new source, so
    # the effect depends only on the source argument.
    effects: dict[ArgumentId, float] = {}
    for u, _, _ in candidates:
        if u in effects:
            continue
        i = plan.index[u]
        mask[i] = 1
        effects[u] = float(eval_plan_masked(plan, mask, kind_code)[e_idx]) - base
        mask[i] = 0

    if side is AgentSide.FOR:
        qualifying = [c for c in candidates if effects[c[0]] > 0.0]
        qualifying.sort(key=lambda edge: (-effects[edge[0]], edge[0], edge[1]))
    else:
        qualifying = [c for c in candidates if effects[c[0]] < 0.0]
        qualifying.sort(key=lambda edge: (effects[edge[0]], edge[0], edge[1]))
    if not qualifying:
        return ()
    return (qualifying[0],)


def _exchange_pro_con(state: ExchangeState):
    classes = parity_classes(state.exchange)
    e = state.explanandum
    pro = {a for a in state.exchange.arguments if a != e and 0 in classes[a]}
    con = {a for a in state.exchange.arguments if a != e and 1 in classes[a]}
    return pro, con


def _distance_to_explanandum(state: ExchangeState, agent: AgentId) -> dict[ArgumentId, float]:
    """Shortest path length from each private argument to e, in edges."""
    plan = state.triples[agent].plan
    e_idx = plan.index[state.explanandum]
    dist = [float("inf")] * plan.n
    dist[e_idx] = 0.0
    for i in reversed(plan.order.tolist()):
        if i == e_idx:
            continue
        best = dist[i]
        for j, _ in plan.out_edges[i]:
            if dist[j] + 1.0 < best:
                best = dist[j] + 1.0
        dist[i] = best
    return {a: dist[plan.index[a]] for a in plan.ids}


def _had_turn(state: ExchangeState, agent: AgentId) -> bool:
    return any(
        contribution.agent == agent
        for record in state.history
        for contribution in record.contributions
    )


@dataclass(frozen=True)
class Unresponsive:
    def select(self, state: ExchangeState, agent: AgentId) -> tuple[EdgeSpec, ...]:
        return ()

    def to_dict(self) -> dict:
        return {"kind": "unresponsive"}


@dataclass(frozen=True)
class Shallow:
    """One-shot batch of up to max_edges strongest direct edges onto e."""

    max_edges: int = 1

    def __post_init__(self) -> None:
        if self.max_edges < 1:
            raise SemanticsError("shallow needs max >= 1")

    def select(self, state: ExchangeState, agent: AgentId) -> tuple[EdgeSpec, ...]:
        if _had_turn(state, agent):
            return ()
        return select_shallow(state, agent, self.max_edges)

    def to_dict(self) -> dict:
        return {"kind": "shallow", "max": self.max_edges}


@dataclass(frozen=True)
class Greedy:
    """One edge per turn; budget caps the arguments this agent introduces."""

    budget: int | None = None

    def select(self, state: ExchangeState, agent: AgentId) -> tuple[EdgeSpec, ...]:
        allow_new = self.budget is None or _args_introduced(state, agent) < self.budget
        return select_greedy(state, agent, allow_new_argument=allow_new)

    def to_dict(self) -> dict:
        data: dict = {"kind": "greedy"}
        if self.budget is not None:
            data["budget"] = self.budget
        return data


@dataclass(frozen=True)
class Counterfactual:
    """One edge per turn by perceived effect; budget as for greedy."""

    budget: int | None = None

    def select(self, state: ExchangeState, agent: AgentId) -> tuple[EdgeSpec, ...]:
        allow_new = self.budget is None or _args_introduced(state, agent) < self.budget
        return select_counterfactual(state, agent, allow_new_argument=allow_new)

    def to_dict(self) -> dict:
        data: dict = {"kind": "counterfactual"}
        if self.budget is not None:
            data["budget"] = self.budget
        return data


def contribution_policy_from_dict(data: Mapping):
    kind = data.get("kind")
    if kind == "unresponsive":
        return Unresponsive()
    if kind == "shallow":
        return Shallow(int(data.get("max", 1)))
    if kind == "greedy":
        budget = data.get("budget")
        return Greedy(None if budget is None else int(budget))
    if kind == "counterfactual":
        budget = data.get("budget")
        return Counterfactual(None if budget is None else int(budget))
    raise SemanticsError(f"unknown behaviour kind {kind!r}")


def bias_policy_from_dict(data: Mapping):
    kind = data.get("kind")
    if kind == "constant":
        return ConstantBias(float(data["c"]))
    if kind == "random":
        return RandomBias(float(data.get("offset", 0.0)), bool(data.get("offset_all", False)))
    raise SemanticsError(f"unknown bias kind {kind!r}")


def behaviour_config_from_dict(data: Mapping) -> BehaviourConfig:
    return BehaviourConfig(
        contribution=contribution_policy_from_dict(data["behaviour"]),
        bias=bias_policy_from_dict(data["bias"]),
    )
