"""The exchange protocol state machine.

An exchange starts from a conflict: at least two agents hold different
stances on the explanandum.  Agents take turns contributing attack/support
edges drawn truthfully from their private graphs; every contributed edge
is rote-learnt by the other agents, who choose a bias for each newly seen
argument at the moment of learning.  The shared exchange graph only ever
grows, stays valid for the explanandum, and each edge is attributed to
exactly one contributor.  The exchange ends resolved as soon as all
stances on the explanandum coincide (checked after each timestep's
scheduled agents have all acted), or unresolved after a full round of
passes or at the timestep cap.

States are immutable; submit() returns the successor state.  One exchange
is strictly sequential, distinct exchanges share nothing.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .errors import (
    BiasOutOfRange,
    DuplicateEdge,
    ExchangeOver,
    GraphError,
    InvalidContribution,
    MissingBias,
    NoConflict,
    OutOfTurn,
    StateUndefined,
    UnknownArgument,
    UntruthfulEdge,
)
from .graphs import (
    ATTACK,
    SUPPORT,
    ArgumentId,
    Baf,
    Edge,
    Qbaf,
    parity_classes,
    validate_for_explanandum,
)
from .kernels import EvalPlan, build_plan, eval_plan_masked
from .rng import DrawContext
from .semantics import EvaluationRange, SemanticsKind, Stance, evaluate

AgentId = str
EdgeSpec = tuple[ArgumentId, ArgumentId, str]

STATUS_RUNNING = "running"
STATUS_RESOLVED = "resolved"
STATUS_UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class PrivateTriple:
    """An agent's evaluation range, private QBAF and evaluation method."""

    evaluation_range: EvaluationRange
    qbaf: Qbaf
    semantics: SemanticsKind

    def __post_init__(self) -> None:
        report = validate_for_explanandum(self.qbaf)
        if not report.ok:
            raise GraphError(f"private graph invalid: {report.violations[0].message}")
        rng = self.evaluation_range
        for a, score in self.qbaf.base_scores.items():
            if not rng.contains(score):
                raise BiasOutOfRange(f"base score of {a!r} outside the evaluation range: {score!r}")

    @cached_property
    def plan(self) -> EvalPlan:
        return build_plan(self.qbaf.baf, self.qbaf.base_scores)

    @cached_property
    def strengths(self) -> dict[ArgumentId, float]:
        return evaluate(self.qbaf, self.semantics)

    def stance_on(self, a: ArgumentId) -> Stance:
        return self.evaluation_range.stance_of(self.strengths[a])

    def extended(self, new_scores: Mapping[ArgumentId, float], new_edges: Sequence[EdgeSpec]) -> "PrivateTriple":
        baf = self.qbaf.baf.with_edges(new_edges)
        scores = dict(self.qbaf.base_scores)
        scores.update(new_scores)
        return PrivateTriple(self.evaluation_range, Qbaf(baf, scores), self.semantics)


@dataclass(frozen=True)
class Contribution:
    """Edges one agent puts on the table in one turn; empty means pass."""

    agent: AgentId
    edges: tuple[EdgeSpec, ...] = ()

    @property
    def is_pass(self) -> bool:
        return not self.edges


class TurnPolicy(Protocol):
    def schedule(self, t: int) -> tuple[AgentId, ...]: ...

    def to_dict(self) -> dict: ...


@dataclass(frozen=True)
class RoundRobin:
    """One agent per timestep, cycling in the given order starting at t=1."""

    agents: tuple[AgentId, ...]

    def schedule(self, t: int) -> tuple[AgentId, ...]:
        if t < 1:
            return ()
        return (self.agents[(t - 1) % len(self.agents)],)

    def to_dict(self) -> dict:
        return {"kind": "round-robin", "agents": list(self.agents)}


@dataclass(frozen=True)
class ExplicitSchedule:
    """Fixed schedule; timesteps beyond the last entry have nobody to act."""

    steps: tuple[tuple[AgentId, ...], ...]

    def schedule(self, t: int) -> tuple[AgentId, ...]:
        if 1 <= t <= len(self.steps):
            return self.steps[t - 1]
        return ()

    def to_dict(self) -> dict:
        return {"kind": "explicit", "steps": [list(step) for step in self.steps]}


def turn_policy_from_dict(data: Mapping) -> TurnPolicy:
    kind = data.get("kind")
    if kind == "round-robin":
        return RoundRobin(tuple(data["agents"]))
    if kind == "explicit":
        return ExplicitSchedule(tuple(tuple(step) for step in data["steps"]))
    raise InvalidContribution(f"unknown turn policy {kind!r}")


@dataclass(frozen=True)
class Caps:
    max_timesteps: int = 50

    def to_dict(self) -> dict:
        return {"max_timesteps": self.max_timesteps}


class AgentSide(enum.Enum):
    FOR = "for"
    AGAINST = "against"


@dataclass(frozen=True)
class StepRecord:
    """Everything that happened in one committed timestep."""

    t: int
    contributions: tuple[Contribution, ...]
    learnt: Mapping[AgentId, Mapping[ArgumentId, float]]
    strengths: Mapping[AgentId, Mapping[ArgumentId, float]]
    stances: Mapping[AgentId, Stance]
    status: str
    resolved_at: int | None


@dataclass(frozen=True)
class _Pending:
    contribution: Contribution
    biases: Mapping[AgentId, Mapping[ArgumentId, float]]


@dataclass(frozen=True)
class ResolutionStatus:
    resolved: bool
    t: int


@dataclass(frozen=True)
class ExchangeState:
    explanandum: ArgumentId
    agents: tuple[AgentId, ...]
    turn_policy: TurnPolicy
    triples: Mapping[AgentId, PrivateTriple]
    initial_triples: Mapping[AgentId, PrivateTriple]
    exchange: Baf
    contributors: Mapping[Edge, tuple[AgentId, int]]
    introduced: Mapping[ArgumentId, tuple[AgentId, int]]
    timestep: int
    status: str
    resolved_at: int | None
    history: tuple[StepRecord, ...]
    pending: tuple[_Pending, ...] = ()
    last_passed: Mapping[AgentId, bool] = field(default_factory=dict)

    def stance(self, agent: AgentId, t: int | None = None) -> Stance:
        record = self.history[-1] if t is None else self.history[t]
        return record.stances[agent]

    def strengths_of(self, agent: AgentId) -> Mapping[ArgumentId, float]:
        return self.history[-1].strengths[agent]

    def scheduled_now(self) -> tuple[AgentId, ...]:
        return self.turn_policy.schedule(self.timestep + 1)

    def pending_graph(self) -> Baf:
        edges = [e for entry in self.pending for e in entry.contribution.edges]
        return self.exchange.with_edges(edges) if edges else self.exchange


def _initial_record(agents: Sequence[AgentId], triples: Mapping[AgentId, PrivateTriple]) -> StepRecord:
    strengths = {a: dict(triples[a].strengths) for a in agents}
    stances = {a: triples[a].stance_on(triples[a].qbaf.explanandum) for a in agents}
    return StepRecord(0, (), {}, strengths, stances, STATUS_RUNNING, None)


def _check_shared_vocabulary(agents: Sequence[AgentId], triples: Mapping[AgentId, PrivateTriple]) -> None:
    # Agents aware of the same pair must agree on its polarity.
    polarity: dict[Edge, tuple[str, AgentId]] = {}
    for agent in agents:
        qbaf = triples[agent].qbaf
        for pol, edges in ((ATTACK, qbaf.attacks), (SUPPORT, qbaf.supports)):
            for edge in edges:
                earlier = polarity.get(edge)
                if earlier is not None and earlier[0] != pol:
                    raise GraphError(
                        f"agents {earlier[1]!r} and {agent!r} disagree on the polarity of {edge}"
                    )
                polarity.setdefault(edge, (pol, agent))


def new_exchange(
    explanandum: ArgumentId,
    triples: Mapping[AgentId, PrivateTriple],
    turn_policy: TurnPolicy | None = None,
) -> ExchangeState:
    """Timestep-0 state: a singleton exchange graph plus the initial conflict."""
    agents = tuple(triples)
    if len(agents) < 2:
        raise NoConflict("an exchange needs at least two agents")
    for agent in agents:
        if triples[agent].qbaf.explanandum != explanandum:
            raise GraphError(f"agent {agent!r} holds a graph for a different explanandum")
    _check_shared_vocabulary(agents, triples)
    record = _initial_record(agents, triples)
    if len(set(record.stances.values())) == 1:
        raise NoConflict("all agents already share a stance on the explanandum")
    policy = turn_policy if turn_policy is not None else RoundRobin(agents)
    return ExchangeState(
        explanandum=explanandum,
        agents=agents,
        turn_policy=policy,
        triples=dict(triples),
        initial_triples=dict(triples),
        exchange=Baf.singleton(explanandum),
        contributors={},
        introduced={},
        timestep=0,
        status=STATUS_RUNNING,
        resolved_at=None,
        history=(record,),
    )


def learning_preview(state: ExchangeState, contribution: Contribution) -> dict[AgentId, list[ArgumentId]]:
    """Arguments each other agent would newly learn from this contribution.

    Takes contributions already pending in the open timestep into account:
    an argument introduced earlier in the same timestep is learnt (and
    biased) once, by the contribution that first mentions it.
    """
    already: dict[AgentId, set[ArgumentId]] = {}
    for agent in state.agents:
        known = set(state.triples[agent].qbaf.arguments)
        for entry in state.pending:
            if entry.contribution.agent == agent:
                continue
            for u, v, _ in entry.contribution.edges:
                known.add(u)
                known.add(v)
        already[agent] = known
    preview: dict[AgentId, list[ArgumentId]] = {}
    for agent in state.agents:
        if agent == contribution.agent:
            continue
        fresh: list[ArgumentId] = []
        for u, v, _ in contribution.edges:
            for endpoint in (u, v):
                if endpoint not in already[agent] and endpoint not in fresh:
                    fresh.append(endpoint)
        if fresh:
            preview[agent] = fresh
    return preview


def _validate_contribution(state: ExchangeState, contribution: Contribution) -> None:
    t = state.timestep + 1
    scheduled = state.turn_policy.schedule(t)
    if contribution.agent not in scheduled:
        raise OutOfTurn(f"agent {contribution.agent!r} is not scheduled at timestep {t}")
    if any(entry.contribution.agent == contribution.agent for entry in state.pending):
        raise OutOfTurn(f"agent {contribution.agent!r} already acted at timestep {t}")
    qbaf = state.triples[contribution.agent].qbaf
    on_table = set(state.pending_graph().edges)
    for u, v, pol in contribution.edges:
        true_pol = qbaf.baf.polarity((u, v))
        if true_pol is None:
            raise UntruthfulEdge(f"({u!r}, {v!r}) is not in {contribution.agent!r}'s private relations")
        if pol != true_pol:
            raise UntruthfulEdge(f"({u!r}, {v!r}) is a private {true_pol}, not a {pol}")
        if (u, v) in on_table:
            raise DuplicateEdge(f"({u!r}, {v!r}) is already in the exchange")
        on_table.add((u, v))
    if contribution.edges:
        extended = state.pending_graph().with_edges(contribution.edges)
        report = validate_for_explanandum(extended)
        if not report.ok:
            raise InvalidContribution(
                f"contribution breaks exchange validity: {report.violations[0].message}"
            )


def _validate_biases(
    state: ExchangeState,
    contribution: Contribution,
    biases: Mapping[AgentId, Mapping[ArgumentId, float]],
) -> None:
    preview = learning_preview(state, contribution)
    for agent, fresh in preview.items():
        provided = biases.get(agent, {})
        for arg in fresh:
            if arg not in provided:
                raise MissingBias(f"agent {agent!r} needs a bias for newly learnt argument {arg!r}")
            if not state.triples[agent].evaluation_range.contains(provided[arg]):
                raise BiasOutOfRange(
                    f"bias {provided[arg]!r} for {arg!r} outside {agent!r}'s evaluation range"
                )


def submit(
    state: ExchangeState,
    contribution: Contribution,
    biases: Mapping[AgentId, Mapping[ArgumentId, float]] | None = None,
) -> ExchangeState:
    """Record one agent's turn; commits the timestep once all scheduled agents acted."""
    if state.status != STATUS_RUNNING:
        raise ExchangeOver(f"exchange already {state.status}")
    _validate_contribution(state, contribution)
    _validate_biases(state, contribution, biases or {})
    pending = state.pending + (_Pending(contribution, biases or {}),)
    state = replace(state, pending=pending)
    if len(pending) == len(state.turn_policy.schedule(state.timestep + 1)):
        return _commit(state)
    return state


def _commit(state: ExchangeState) -> ExchangeState:
    t = state.timestep + 1
    exchange = state.exchange
    contributors = dict(state.contributors)
    introduced = dict(state.introduced)
    learnt: dict[AgentId, dict[ArgumentId, float]] = {}

    # Mutable copies of every agent's private components.
    args: dict[AgentId, set[ArgumentId]] = {}
    attacks: dict[AgentId, set[Edge]] = {}
    supports: dict[AgentId, set[Edge]] = {}
    scores: dict[AgentId, dict[ArgumentId, float]] = {}
    for agent in state.agents:
        qbaf = state.triples[agent].qbaf
        args[agent] = set(qbaf.arguments)
        attacks[agent] = set(qbaf.attacks)
        supports[agent] = set(qbaf.supports)
        scores[agent] = dict(qbaf.base_scores)

    for entry in state.pending:
        contributor = entry.contribution.agent
        for u, v, pol in entry.contribution.edges:
            known_args = set(exchange.arguments)
            exchange = exchange.with_edges([(u, v, pol)])
            contributors[(u, v)] = (contributor, t)
            for endpoint in (u, v):
                if endpoint not in known_args and endpoint not in introduced:
                    introduced[endpoint] = (contributor, t)
            for agent in state.agents:
                if agent == contributor:
                    continue
                relation = attacks[agent] if pol == ATTACK else supports[agent]
                other = supports[agent] if pol == ATTACK else attacks[agent]
                if (u, v) in other:
                    raise GraphError(f"polarity conflict while {agent!r} learns {(u, v)}")
                if (u, v) not in relation:
                    relation.add((u, v))
                for endpoint in (u, v):
                    if endpoint not in args[agent]:
                        args[agent].add(endpoint)
                        bias = entry.biases[agent][endpoint]
                        scores[agent][endpoint] = bias
                        learnt.setdefault(agent, {})[endpoint] = bias

    triples: dict[AgentId, PrivateTriple] = {}
    for agent in state.agents:
        old = state.triples[agent]
        if agent in learnt or len(args[agent]) != len(old.qbaf.arguments) or (
            len(attacks[agent]) != len(old.qbaf.attacks) or len(supports[agent]) != len(old.qbaf.supports)
        ):
            baf = Baf(state.explanandum, frozenset(args[agent]), frozenset(attacks[agent]), frozenset(supports[agent]))
            triples[agent] = PrivateTriple(old.evaluation_range, Qbaf(baf, scores[agent]), old.semantics)
        else:
            triples[agent] = old

    strengths = {agent: dict(triples[agent].strengths) for agent in state.agents}
    stances = {agent: triples[agent].stance_on(state.explanandum) for agent in state.agents}

    status = STATUS_RUNNING
    resolved_at = None
    if len(set(stances.values())) == 1:
        status = STATUS_RESOLVED
        resolved_at = t

    last_passed = dict(state.last_passed)
    for entry in state.pending:
        last_passed[entry.contribution.agent] = entry.contribution.is_pass
    if status == STATUS_RUNNING and len(last_passed) == len(state.agents) and all(last_passed.values()):
        status = STATUS_UNRESOLVED

    record = StepRecord(
        t=t,
        contributions=tuple(entry.contribution for entry in state.pending),
        learnt={agent: dict(biases) for agent, biases in learnt.items()},
        strengths=strengths,
        stances=stances,
        status=status,
        resolved_at=resolved_at,
    )
    return replace(
        state,
        triples=triples,
        exchange=exchange,
        contributors=contributors,
        introduced=introduced,
        timestep=t,
        status=status,
        resolved_at=resolved_at,
        history=state.history + (record,),
        pending=(),
        last_passed=last_passed,
    )


def finish(state: ExchangeState) -> ExchangeState:
    """Mark a still-running exchange as terminally unresolved (cap or schedule end)."""
    if state.status != STATUS_RUNNING:
        return state
    return replace(state, status=STATUS_UNRESOLVED)


def resolution_status(state: ExchangeState) -> ResolutionStatus:
    if state.resolved_at is not None:
        return ResolutionStatus(True, state.resolved_at)
    return ResolutionStatus(False, state.timestep)


def agent_state(state: ExchangeState, agent: AgentId) -> AgentSide:
    """Whether the agent is arguing for or against the explanandum.

    Defined for two-agent exchanges whose current stances differ: the agent
    with the strictly greater stance argues for, the other against.
    """
    if len(state.agents) != 2:
        raise StateUndefined("arguing-for/against is defined for two-agent exchanges")
    if agent not in state.agents:
        raise UnknownArgument(f"unknown agent {agent!r}")
    other = state.agents[0] if state.agents[1] == agent else state.agents[1]
    mine = state.stance(agent)
    theirs = state.stance(other)
    if mine == theirs:
        raise StateUndefined("stances coincide; no window for persuasion")
    return AgentSide.FOR if mine > theirs else AgentSide.AGAINST


def private_view(state: ExchangeState, agent: AgentId, extra_args: Sequence[ArgumentId] = ()) -> Qbaf:
    """The exchange graph seen through the agent's private edges and biases."""
    triple = state.triples[agent]
    private = triple.qbaf
    for a in extra_args:
        if a not in private.arguments:
            raise UnknownArgument(f"{a!r} is not among {agent!r}'s private arguments")
    members = set(state.exchange.arguments) | set(extra_args)
    attacks = frozenset((u, v) for (u, v) in private.attacks if u in members and v in members)
    supports = frozenset((u, v) for (u, v) in private.supports if u in members and v in members)
    baf = Baf(state.explanandum, frozenset(members), attacks, supports)
    return Qbaf(baf, {a: private.base_scores[a] for a in members})


def _view_mask(plan: EvalPlan, members: set[ArgumentId]) -> np.ndarray:
    mask = np.zeros(plan.n, dtype=np.uint8)
    for a in members:
        mask[plan.index[a]] = 1
    return mask


def perceived_effect(state: ExchangeState, agent: AgentId, edge: Edge) -> float:
    """Change in the explanandum's strength, in the agent's private view,
    caused by adding one not-yet-exchanged private edge whose source is
    outside the exchange and whose target is inside."""
    triple = state.triples[agent]
    u, v = edge
    pol = triple.qbaf.baf.polarity((u, v))
    if pol is None:
        raise UntruthfulEdge(f"({u!r}, {v!r}) is not a private edge of {agent!r}")
    if (u, v) in state.exchange.edges:
        raise InvalidContribution(f"({u!r}, {v!r}) is already in the exchange")
    if u in state.exchange.arguments:
        raise InvalidContribution(f"source {u!r} must be outside the exchange")
    if v not in state.exchange.arguments:
        raise InvalidContribution(f"target {v!r} must be inside the exchange")
    plan = triple.plan
    e_idx = plan.index[state.explanandum]
    members = set(state.exchange.arguments)
    base_mask = _view_mask(plan, members)
    base = float(eval_plan_masked(plan, base_mask, triple.semantics.code)[e_idx])
    members.add(u)
    ext_mask = _view_mask(plan, members)
    ext = float(eval_plan_masked(plan, ext_mask, triple.semantics.code)[e_idx])
    return ext - base


class BiasPolicyLike(Protocol):
    def bias_for(
        self,
        agent: AgentId,
        argument: ArgumentId,
        counter_aligned: bool,
        draw: Callable[[AgentId, ArgumentId], float],
    ) -> float: ...

    def to_dict(self) -> dict: ...


class ContributionPolicyLike(Protocol):
    def select(self, state: ExchangeState, agent: AgentId) -> tuple[EdgeSpec, ...]: ...

    def to_dict(self) -> dict: ...


@dataclass(frozen=True)
class BehaviourConfig:
    contribution: ContributionPolicyLike
    bias: BiasPolicyLike

    def to_dict(self) -> dict:
        return {"behaviour": self.contribution.to_dict(), "bias": self.bias.to_dict()}


def behaviour_biases(
    state: ExchangeState,
    contribution: Contribution,
    behaviours: Mapping[AgentId, BehaviourConfig],
    draw: Callable[[AgentId, ArgumentId], float],
) -> dict[AgentId, dict[ArgumentId, float]]:
    """Bias assignments the learning agents' policies choose for a contribution.

    Counter-alignment is judged on the exchange graph as it will stand once
    this contribution lands (pending edges included), from each learner's
    current arguing state.
    """
    preview = learning_preview(state, contribution)
    if not preview:
        return {}
    graph_after = state.pending_graph().with_edges(contribution.edges)
    classes = parity_classes(graph_after)
    biases: dict[AgentId, dict[ArgumentId, float]] = {}
    for agent, fresh in preview.items():
        side = None
        if len(state.agents) == 2:
            try:
                side = agent_state(state, agent)
            except StateUndefined:
                side = None
        assigned: dict[ArgumentId, float] = {}
        for arg in fresh:
            parities = classes.get(arg, frozenset())
            if side is AgentSide.FOR:
                counter = 1 in parities
            elif side is AgentSide.AGAINST:
                counter = 0 in parities
            else:
                counter = False
            assigned[arg] = behaviours[agent].bias.bias_for(agent, arg, counter, draw)
        biases[agent] = assigned
    return biases


@dataclass(frozen=True)
class TranscriptHeader:
    explanandum: ArgumentId
    agents: tuple[AgentId, ...]
    turn_policy: dict
    caps: Caps
    triples: Mapping[AgentId, PrivateTriple]
    behaviours: Mapping[AgentId, dict] | None
    seed: tuple[int, ...] | None
    final_status: str
    resolved_at: int | None
    end_reason: str


@dataclass(frozen=True)
class Transcript:
    header: TranscriptHeader
    records: tuple[StepRecord, ...]

    @property
    def resolved(self) -> bool:
        return self.header.final_status == STATUS_RESOLVED

    @property
    def final_exchange_edge_count(self) -> int:
        return sum(len(c.edges) for record in self.records for c in record.contributions)


def run(
    state: ExchangeState,
    behaviours: Mapping[AgentId, BehaviourConfig],
    caps: Caps = Caps(),
    seed: tuple[int, ...] | None = None,
) -> Transcript:
    """Drive an exchange with the given behaviours until it terminates.

    Terminates on resolution, on a full round of passes, when the schedule
    runs out, or at the timestep cap; the last three all end unresolved.
    Identical (state, behaviours, seed) produce identical transcripts.
    """
    missing = [a for a in state.agents if a not in behaviours]
    if missing:
        raise InvalidContribution(f"no behaviour configured for agents {missing}")
    draw = DrawContext(seed or ()).uniform
    end_reason = "incomplete"
    while state.status == STATUS_RUNNING:
        t = state.timestep + 1
        if t > caps.max_timesteps:
            state = finish(state)
            end_reason = "cap"
            break
        scheduled = state.turn_policy.schedule(t)
        if not scheduled:
            state = finish(state)
            end_reason = "schedule-end"
            break
        for agent in scheduled:
            edges = behaviours[agent].contribution.select(state, agent)
            on_table = set(state.pending_graph().edges)
            edges = tuple(e for e in edges if (e[0], e[1]) not in on_table)
            contribution = Contribution(agent, edges)
            biases = behaviour_biases(state, contribution, behaviours, draw)
            state = submit(state, contribution, biases)
        if state.status == STATUS_RESOLVED:
            end_reason = "resolved"
        elif state.status == STATUS_UNRESOLVED:
            end_reason = "pass-round"
    header = TranscriptHeader(
        explanandum=state.explanandum,
        agents=state.agents,
        turn_policy=state.turn_policy.to_dict(),
        caps=caps,
        triples=dict(state.initial_triples),
        behaviours={a: behaviours[a].to_dict() for a in state.agents},
        seed=tuple(seed) if seed else None,
        final_status=state.status,
        resolved_at=state.resolved_at,
        end_reason=end_reason,
    )
    return Transcript(header, state.history)
