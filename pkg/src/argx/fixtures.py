"""Canonical two-agent demo scenario used by tests, the CLI and the service.

The machine holds one attack chain against the explanandum with a support
behind it; the human holds a counter-attack and a support chain for the
explanandum.  Their initial stances conflict (machine negative, human
positive), which makes the scenario a convenient end-to-end fixture.
"""

from __future__ import annotations

from .exchange import AgentId, ExplicitSchedule, PrivateTriple
from .graphs import Baf, Qbaf
from .semantics import UNIT_RANGE, SemanticsKind
from .simulation import HUMAN, MACHINE, Scenario


def machine_triple() -> PrivateTriple:
    baf = Baf.of("e", ["e", "a", "b", "c"], attacks=[("a", "e")], supports=[("b", "e"), ("c", "a")])
    scores = {"e": 0.7, "a": 0.8, "b": 0.4, "c": 0.6}
    return PrivateTriple(UNIT_RANGE, Qbaf(baf, scores), SemanticsKind.DF_QUAD)


def human_triple() -> PrivateTriple:
    baf = Baf.of(
        "e",
        ["e", "a", "b", "d", "f"],
        attacks=[("a", "e"), ("d", "a")],
        supports=[("b", "e"), ("f", "b")],
    )
    scores = {"e": 0.6, "a": 0.8, "b": 0.2, "d": 0.6, "f": 0.5}
    return PrivateTriple(UNIT_RANGE, Qbaf(baf, scores), SemanticsKind.DF_QUAD)


def demo_triples() -> dict[AgentId, PrivateTriple]:
    return {MACHINE: machine_triple(), HUMAN: human_triple()}


def demo_scenario() -> Scenario:
    triples = demo_triples()
    args: set[str] = set()
    attacks: set = set()
    supports: set = set()
    for triple in triples.values():
        args |= triple.qbaf.arguments
        attacks |= triple.qbaf.attacks
        supports |= triple.qbaf.supports
    universal = Baf("e", frozenset(args), frozenset(attacks), frozenset(supports))
    return Scenario(universal, triples, seed=())


def demo_schedule() -> ExplicitSchedule:
    """Both agents open at once, then one turn each - the walkthrough timeline."""
    return ExplicitSchedule(((MACHINE, HUMAN), (MACHINE,), (HUMAN,)))
