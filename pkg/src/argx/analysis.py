"""Formal-property checkers, batch metrics, and significance tests.

The checkers consume transcripts.  Connectedness, acyclicity and
contributor irrelevance should hold for every engine-produced transcript;
resolution/conflict representation and strength-growth tracking are
conditional properties whose reports say whether they applied.

Metrics over a batch of transcripts:

* rr - fraction of resolved exchanges;
* cr - mean number of exchange edges among resolved exchanges;
* pr(agent) - fraction of resolved exchanges in which every agent ends at
  that agent's initial stance;
* ca(agent) - mean, over all exchanges, of the fraction of the agent's
  contributions that maximised (minimised, when arguing against) the
  explanandum's strength in the other agent's private graph among all
  edges the agent could legally have contributed at that moment.

Zero denominators yield 0.  Contribution accuracy needs oracle access to
the other agent's private graph and bias policy, so it is only computable
for transcripts whose header embeds behaviours and a seed (simulation
output does).

The significance tests are self-contained: the two-proportion chi-squared
(1 dof, no continuity correction) gets its p-value from erfc, and Welch's
unequal-variance t-test from an in-repo regularized incomplete beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

from .behaviours import bias_policy_from_dict
from .errors import ArgxError
from .exchange import AgentId, PrivateTriple, Transcript
from .graphs import (
    ATTACK,
    SUPPORT,
    ArgumentId,
    Baf,
    Edge,
    Qbaf,
    parity_classes,
    pro_con,
    validate_for_explanandum,
)
from .rng import DrawContext, seeded_generator, stable_hash64
from .semantics import SemanticsKind, Stance, evaluate
from .transcripts import exchange_graphs, qbafs_at


@dataclass(frozen=True)
class PropertyReport:
    property: str
    holds: bool
    applicable: bool = True
    witness: Any = None


@dataclass(frozen=True)
class MetricsRow:
    rr: float
    cr: float
    pr_machine: float
    ca_machine: float
    n_runs: int
    n_resolved: int


@dataclass(frozen=True)
class RunSamples:
    """Per-transcript raw values backing a MetricsRow, for significance tests."""

    resolved: list[bool]
    edge_counts: list[int]
    pr_flags: list[bool]
    ca_values: dict[AgentId, list[float]]
    pr_by_agent: dict[AgentId, float]
    ca_by_agent: dict[AgentId, float]


def check_connectedness(transcript: Transcript) -> PropertyReport:
    """No floating arguments in any exchange graph along the way."""
    for t, graph in enumerate(exchange_graphs(transcript)):
        if len(graph.arguments) <= 1:
            continue
        touched = {a for edge in graph.edges for a in edge}
        floating = sorted(graph.arguments - touched)
        if floating:
            return PropertyReport("connectedness", False, True, (t, floating[0]))
    return PropertyReport("connectedness", True)


def check_acyclicity(transcript: Transcript) -> PropertyReport:
    for t, graph in enumerate(exchange_graphs(transcript)):
        report = validate_for_explanandum(graph)
        cycles = [v for v in report.violations if v.code == "iii"]
        if cycles:
            return PropertyReport("acyclicity", False, True, (t, cycles[0].subject))
    return PropertyReport("acyclicity", True)


def _recorded_biases(transcript: Transcript) -> dict[AgentId, dict[ArgumentId, float]]:
    biases: dict[AgentId, dict[ArgumentId, float]] = {agent: {} for agent in transcript.header.agents}
    for record in transcript.records:
        for agent, learnt in record.learnt.items():
            biases[agent].update(learnt)
    return biases


def check_contributor_irrelevance(
    transcript: Transcript, permutations: int = 5, seed: int = 0
) -> PropertyReport:
    """Same final exchange graph, same biases => same final stances.

    Re-applies the learning rule along `permutations` random valid
    contribution orders with random truthful attributions and compares the
    resulting stance profile with the recorded one.  Orders are valid when
    every prefix is a graph for the explanandum.
    """
    header = transcript.header
    final = exchange_graphs(transcript)[-1]
    edges = [(u, v, pol) for (u, v, pol) in _edges_with_polarity(final)]
    recorded = transcript.records[-1].stances
    learnt_biases = _recorded_biases(transcript)
    holders: dict[Edge, list[AgentId]] = {}
    for u, v, _ in edges:
        holders[(u, v)] = [
            agent
            for agent in header.agents
            if header.triples[agent].qbaf.baf.polarity((u, v)) is not None
        ]
        if not holders[(u, v)]:
            return PropertyReport("contributor-irrelevance", False, True, ("untruthful-origin", (u, v)))

    for k in range(permutations):
        rng = seeded_generator(stable_hash64("contributor-irrelevance"), seed, k)
        remaining = sorted(edges)
        placed: set[ArgumentId] = {header.explanandum}
        graphs: dict[AgentId, tuple[set[Edge], set[Edge], dict[ArgumentId, float]]] = {}
        for agent in header.agents:
            qbaf = header.triples[agent].qbaf
            graphs[agent] = (set(qbaf.attacks), set(qbaf.supports), dict(qbaf.base_scores))
        while remaining:
            candidates = [i for i, (u, v, _) in enumerate(remaining) if v in placed]
            if not candidates:
                return PropertyReport("contributor-irrelevance", False, True, ("stuck-order", remaining[0]))
            u, v, pol = remaining.pop(candidates[int(rng.integers(len(candidates)))])
            contributor = holders[(u, v)][int(rng.integers(len(holders[(u, v)])))]
            del contributor  # attribution is irrelevant to learning by construction
            placed.add(u)
            placed.add(v)
            for agent in header.agents:
                attacks, supports, scores = graphs[agent]
                (attacks if pol == ATTACK else supports).add((u, v))
                for endpoint in (u, v):
                    if endpoint not in scores:
                        scores[endpoint] = learnt_biases[agent][endpoint]
        for agent in header.agents:
            attacks, supports, scores = graphs[agent]
            qbaf = Qbaf(
                Baf(header.explanandum, frozenset(scores), frozenset(attacks), frozenset(supports)),
                scores,
            )
            triple = header.triples[agent]
            strength = evaluate(qbaf, triple.semantics)[header.explanandum]
            stance = triple.evaluation_range.stance_of(strength)
            if stance != recorded[agent]:
                return PropertyReport(
                    "contributor-irrelevance", False, True, (k, agent, stance.symbol, recorded[agent].symbol)
                )
    return PropertyReport("contributor-irrelevance", True)


def check_resolution_representation(transcript: Transcript) -> PropertyReport:
    """A raised stance needs a nonempty pro set, a lowered one a nonempty con set."""
    if not transcript.resolved:
        return PropertyReport("resolution-representation", True, applicable=False)
    final = exchange_graphs(transcript)[-1]
    pro, con = pro_con(final)
    first = transcript.records[0].stances
    last = transcript.records[-1].stances
    for agent in transcript.header.agents:
        if last[agent] > first[agent] and not pro:
            return PropertyReport("resolution-representation", False, True, (agent, "pro-empty"))
        if last[agent] < first[agent] and not con:
            return PropertyReport("resolution-representation", False, True, (agent, "con-empty"))
    return PropertyReport("resolution-representation", True)


def check_conflict_representation(transcript: Transcript) -> PropertyReport:
    """A terminally unresolved exchange must show both pro and con arguments."""
    if transcript.header.final_status != "unresolved":
        return PropertyReport("conflict-representation", True, applicable=False)
    final = exchange_graphs(transcript)[-1]
    pro, con = pro_con(final)
    if not pro:
        return PropertyReport("conflict-representation", False, True, "pro-empty")
    if not con:
        return PropertyReport("conflict-representation", False, True, "con-empty")
    return PropertyReport("conflict-representation", True)


def check_strength_growth(transcript: Transcript) -> PropertyReport:
    """Rising (falling) explanandum strength must strictly grow pro (con).

    Only meaningful for agents evaluating with df-quad; other agents are
    skipped.
    """
    header = transcript.header
    graphs = exchange_graphs(transcript)
    applicable = False
    pro_by_t: list[tuple[frozenset, frozenset]] = [pro_con(g) for g in graphs]
    e = header.explanandum
    for agent in header.agents:
        if header.triples[agent].semantics is not SemanticsKind.DF_QUAD:
            continue
        applicable = True
        for t in range(1, len(transcript.records)):
            before = transcript.records[t - 1].strengths[agent][e]
            after = transcript.records[t].strengths[agent][e]
            pro_prev, con_prev = pro_by_t[t - 1]
            pro_now, con_now = pro_by_t[t]
            if after > before and not (pro_now > pro_prev):
                return PropertyReport("strength-growth", False, True, (agent, t, "pro"))
            if after < before and not (con_now > con_prev):
                return PropertyReport("strength-growth", False, True, (agent, t, "con"))
    return PropertyReport("strength-growth", True, applicable=applicable)


ALL_PROPERTIES = {
    "connectedness": check_connectedness,
    "acyclicity": check_acyclicity,
    "contributor-irrelevance": check_contributor_irrelevance,
    "resolution-representation": check_resolution_representation,
    "conflict-representation": check_conflict_representation,
    "strength-growth": check_strength_growth,
}


def check_all(transcript: Transcript) -> dict[str, PropertyReport]:
    return {name: check(transcript) for name, check in ALL_PROPERTIES.items()}


def _edges_with_polarity(baf: Baf):
    for u, v in sorted(baf.attacks):
        yield u, v, ATTACK
    for u, v in sorted(baf.supports):
        yield u, v, SUPPORT


# ---------------------------------------------------------------------------
# Metrics


def _extend_qbaf(qbaf: Qbaf, edge: tuple[ArgumentId, ArgumentId, str], bias: float | None) -> Qbaf:
    u, v, pol = edge
    if qbaf.baf.polarity((u, v)) is not None:
        return qbaf
    baf = qbaf.baf.with_edges([(u, v, pol)])
    scores = dict(qbaf.base_scores)
    if u not in qbaf.base_scores:
        if bias is None:
            raise ArgxError(f"no bias available for hypothetical learning of {u!r}")
        scores[u] = bias
    return Qbaf(baf, scores)


class _HypotheticalBias:
    """Bias the other agent would give a candidate source, per its policy."""

    def __init__(self, transcript: Transcript):
        header = transcript.header
        self.ok = header.behaviours is not None and header.seed is not None
        self.policies = {}
        if self.ok:
            try:
                self.policies = {
                    agent: bias_policy_from_dict(config["bias"])
                    for agent, config in header.behaviours.items()
                }
            except (ArgxError, KeyError, TypeError, ValueError):
                self.ok = False
        self.draw = DrawContext(header.seed or ()).uniform

    def value(self, learner: AgentId, argument: ArgumentId, counter_aligned: bool) -> float:
        if not self.ok:
            raise ArgxError(
                "contribution accuracy needs behaviours and a seed in the transcript header"
            )
        return self.policies[learner].bias_for(learner, argument, counter_aligned, self.draw)


def contribution_accuracy(transcript: Transcript, agent: AgentId) -> float:
    """Fraction of the agent's contributions that best moved the other
    agent's view of the explanandum.

    Each contribution is judged at the moment it was made (earlier edges of
    the same timestep already on the table) against the candidate set the
    agent's behaviour draws from: direct edges onto the explanandum for
    shallow agents, the side-consistent admissible set for greedy ones, and
    new-source edges into the exchange for counterfactual ones.  Ties all
    count as accurate.
    """
    header = transcript.header
    if len(header.agents) != 2:
        raise ArgxError("contribution accuracy is defined for two-agent exchanges")
    other = header.agents[0] if header.agents[1] == agent else header.agents[1]
    e = header.explanandum
    hyp = _HypotheticalBias(transcript)
    behaviour_kind = ""
    if header.behaviours and agent in header.behaviours:
        behaviour_kind = header.behaviours[agent].get("behaviour", {}).get("kind", "")
    own_qbafs = qbafs_at(transcript, agent)
    other_qbafs = qbafs_at(transcript, other)

    events = 0
    hits = 0
    graph = Baf.singleton(e)
    for t in range(1, len(transcript.records)):
        record = transcript.records[t]
        stances = transcript.records[t - 1].stances
        own_graph = own_qbafs[t - 1]
        other_graph = other_qbafs[t - 1]
        for contribution in record.contributions:
            for u, v, pol in contribution.edges:
                if contribution.agent == agent:
                    arguing_for = stances[agent] > stances[other]
                    hit = _is_best_contribution(
                        (u, v, pol), own_graph, other_graph, graph, header, other,
                        arguing_for, hyp, stances, behaviour_kind,
                    )
                    events += 1
                    hits += 1 if hit else 0
                graph = graph.with_edges([(u, v, pol)])
                bias = record.learnt.get(other, {}).get(u) if u not in other_graph.arguments else None
                if contribution.agent != other:
                    other_graph = _extend_qbaf(other_graph, (u, v, pol), bias)
                own_bias = record.learnt.get(agent, {}).get(u) if u not in own_graph.arguments else None
                if contribution.agent != agent:
                    own_graph = _extend_qbaf(own_graph, (u, v, pol), own_bias)
    if events == 0:
        return 0.0
    return hits / events


def _is_best_contribution(
    edge: tuple[ArgumentId, ArgumentId, str],
    own_graph: Qbaf,
    other_graph: Qbaf,
    exchange: Baf,
    header,
    other: AgentId,
    arguing_for: bool,
    hyp: _HypotheticalBias,
    stances: Mapping[AgentId, Stance],
    behaviour_kind: str = "",
) -> bool:
    """Whether `edge` ties the best hypothetical effect over the candidate pool."""
    other_triple: PrivateTriple = header.triples[other]
    kind = other_triple.semantics
    classes = parity_classes(exchange)
    e = exchange.explanandum
    other_for = None
    if len(header.agents) == 2:
        them = stances[other]
        us = stances[header.agents[0] if header.agents[1] == other else header.agents[1]]
        if them != us:
            other_for = them > us

    pool = _candidate_pool(own_graph, exchange, classes, arguing_for, behaviour_kind)
    if edge not in pool:
        return False

    values: dict[tuple[ArgumentId, ArgumentId], float] = {}
    for x, y, pol in pool:
        if other_graph.baf.polarity((x, y)) is not None:
            hypothetical = other_graph
        else:
            bias = None
            if x not in other_graph.arguments:
                counter = False
                if other_for is not None:
                    w = 1 if pol == ATTACK else 0
                    parities = {w ^ q for q in classes.get(y, frozenset())}
                    counter = (other_for and 1 in parities) or (not other_for and 0 in parities)
                bias = hyp.value(other, x, counter)
            hypothetical = _extend_qbaf(other_graph, (x, y, pol), bias)
        values[(x, y)] = evaluate(hypothetical, kind)[header.explanandum]

    target = max(values.values()) if arguing_for else min(values.values())
    return values[(edge[0], edge[1])] == target


def _candidate_pool(
    own_graph: Qbaf,
    exchange: Baf,
    classes: Mapping[ArgumentId, frozenset[int]],
    arguing_for: bool,
    behaviour_kind: str,
) -> list[tuple[ArgumentId, ArgumentId, str]]:
    """What the agent could have contributed instead, per its behaviour."""
    e = exchange.explanandum
    pool: list[tuple[ArgumentId, ArgumentId, str]] = []
    if behaviour_kind == "shallow":
        wanted = SUPPORT if arguing_for else ATTACK
        for x, y in sorted(own_graph.supports if arguing_for else own_graph.attacks):
            if y == e and (x, y) not in exchange.edges:
                pool.append((x, y, wanted))
        return pool
    if behaviour_kind == "counterfactual":
        for x, y in sorted(own_graph.attacks | own_graph.supports):
            if (x, y) in exchange.edges or x in exchange.arguments or y not in exchange.arguments:
                continue
            pool.append((x, y, own_graph.baf.polarity((x, y))))
        return pool
    # Greedy and unknown behaviours: the side-consistent admissible set.
    pro = {a for a in exchange.arguments if a != e and 0 in classes[a]}
    con = {a for a in exchange.arguments if a != e and 1 in classes[a]}
    if arguing_for:
        support_targets = pro | {e}
        attack_targets = con
    else:
        support_targets = con
        attack_targets = pro | {e}
    for x, y in sorted(own_graph.attacks | own_graph.supports):
        if (x, y) in exchange.edges or y not in exchange.arguments:
            continue
        pol = own_graph.baf.polarity((x, y))
        if pol == SUPPORT and y not in support_targets:
            continue
        if pol == ATTACK and y not in attack_targets:
            continue
        pool.append((x, y, pol))
    return pool


def metrics_detailed(
    batch: Sequence[Transcript], machine: AgentId | None = None
) -> tuple[MetricsRow, RunSamples]:
    if not batch:
        raise ArgxError("metrics need a nonempty batch of transcripts")
    agents = batch[0].header.agents
    machine = machine or agents[0]

    resolved_flags: list[bool] = []
    edge_counts: list[int] = []
    pr_flags: list[bool] = []
    ca_values: dict[AgentId, list[float]] = {agent: [] for agent in agents}
    pr_counts: dict[AgentId, int] = {agent: 0 for agent in agents}

    for transcript in batch:
        resolved = transcript.resolved
        resolved_flags.append(resolved)
        for agent in agents:
            ca_values[agent].append(contribution_accuracy(transcript, agent))
        if not resolved:
            continue
        edge_counts.append(transcript.final_exchange_edge_count)
        first = transcript.records[0].stances
        last = transcript.records[-1].stances
        for agent in agents:
            if all(last[beta] == first[agent] for beta in agents):
                pr_counts[agent] += 1
        pr_flags.append(all(last[beta] == first[machine] for beta in agents))

    n_runs = len(batch)
    n_resolved = sum(resolved_flags)
    rr = n_resolved / n_runs
    cr = (sum(edge_counts) / n_resolved) if n_resolved else 0.0
    pr_by_agent = {
        agent: (pr_counts[agent] / n_resolved) if n_resolved else 0.0 for agent in agents
    }
    ca_by_agent = {agent: sum(vals) / n_runs for agent, vals in ca_values.items()}
    row = MetricsRow(
        rr=rr,
        cr=cr,
        pr_machine=pr_by_agent[machine],
        ca_machine=ca_by_agent[machine],
        n_runs=n_runs,
        n_resolved=n_resolved,
    )
    samples = RunSamples(resolved_flags, edge_counts, pr_flags, ca_values, pr_by_agent, ca_by_agent)
    return row, samples


def metrics(batch: Sequence[Transcript], machine: AgentId | None = None) -> MetricsRow:
    row, _ = metrics_detailed(batch, machine)
    return row


# ---------------------------------------------------------------------------
# Significance tests


def chi_squared_2x2(a: int, b: int, c: int, d: int) -> tuple[float, float]:
    """Two-proportion Pearson chi-squared, 1 dof, no continuity correction.

    Rows are (successes, failures) per group; returns (statistic, p).
    """
    for count in (a, b, c, d):
        if count < 0:
            raise ArgxError("chi-squared needs nonnegative counts")
    n = a + b + c + d
    margins = ((a + b), (c + d), (a + c), (b + d))
    if n == 0 or 0 in margins:
        raise ArgxError("degenerate 2x2 table (zero margin)")
    stat = n * (a * d - b * c) ** 2 / (margins[0] * margins[1] * margins[2] * margins[3])
    p = math.erfc(math.sqrt(stat / 2.0))
    return stat, p


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta (modified Lentz).
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            break
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def welch_t(sample1: Sequence[float], sample2: Sequence[float]) -> tuple[float, float]:
    """Unequal-variance t-test; returns (statistic, two-sided p)."""
    n1, n2 = len(sample1), len(sample2)
    if n1 < 2 or n2 < 2:
        raise ArgxError("welch t needs at least two observations per sample")
    m1 = sum(sample1) / n1
    m2 = sum(sample2) / n2
    v1 = sum((x - m1) ** 2 for x in sample1) / (n1 - 1)
    v2 = sum((x - m2) ** 2 for x in sample2) / (n2 - 1)
    se2 = v1 / n1 + v2 / n2
    if se2 == 0.0:
        if m1 == m2:
            return 0.0, 1.0
        return math.copysign(math.inf, m1 - m2), 0.0
    t = (m1 - m2) / math.sqrt(se2)
    df = se2 * se2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    if t == 0.0:
        return 0.0, 1.0
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return t, p
