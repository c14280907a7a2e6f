"""Bipolar argumentation graphs rooted at an explanandum.

A BAF is a set of arguments plus disjoint attack and support relations.
A QBAF additionally carries per-argument base scores.  All graphs used by
the exchange engine are "for" a distinguished explanandum: the explanandum
has no outgoing edge, every other argument has a directed path to it, and
the graph is acyclic (a multi-tree rooted at the explanandum).

Argument ids are plain strings; their lexicographic order is the fixed
total order used for deterministic tie-breaking everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping

from .errors import GraphError, UnknownArgument

ArgumentId = str
Edge = tuple[ArgumentId, ArgumentId]
Path = tuple[Edge, ...]

ATTACK = "attack"
SUPPORT = "support"


@dataclass(frozen=True)
class Violation:
    """One failed explanandum-validity condition.

    code is "i" (explanandum has an outgoing edge), "ii" (argument cannot
    reach the explanandum) or "iii" (cycle through an argument).
    """

    code: str
    subject: ArgumentId
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]


@dataclass(frozen=True)
class Baf:
    """Bipolar argumentation framework with a designated explanandum."""

    explanandum: ArgumentId
    arguments: frozenset[ArgumentId]
    attacks: frozenset[Edge]
    supports: frozenset[Edge]

    def __post_init__(self) -> None:
        if self.explanandum not in self.arguments:
            raise GraphError(f"explanandum {self.explanandum!r} not among arguments")
        overlap = self.attacks & self.supports
        if overlap:
            raise GraphError(f"attack and support relations overlap: {sorted(overlap)}")
        for u, v in self.attacks | self.supports:
            if u not in self.arguments or v not in self.arguments:
                raise GraphError(f"edge ({u!r}, {v!r}) has an endpoint outside the graph")

    @staticmethod
    def singleton(explanandum: ArgumentId) -> "Baf":
        return Baf(explanandum, frozenset({explanandum}), frozenset(), frozenset())

    @staticmethod
    def of(
        explanandum: ArgumentId,
        arguments: Iterable[ArgumentId],
        attacks: Iterable[Edge] = (),
        supports: Iterable[Edge] = (),
    ) -> "Baf":
        return Baf(
            explanandum,
            frozenset(arguments),
            frozenset((u, v) for u, v in attacks),
            frozenset((u, v) for u, v in supports),
        )

    @property
    def edges(self) -> frozenset[Edge]:
        return self.attacks | self.supports

    def polarity(self, edge: Edge) -> str | None:
        if edge in self.attacks:
            return ATTACK
        if edge in self.supports:
            return SUPPORT
        return None

    @cached_property
    def _in_adjacency(self) -> dict[ArgumentId, tuple[tuple[ArgumentId, ...], tuple[ArgumentId, ...]]]:
        att: dict[ArgumentId, list[ArgumentId]] = {a: [] for a in self.arguments}
        sup: dict[ArgumentId, list[ArgumentId]] = {a: [] for a in self.arguments}
        for u, v in self.attacks:
            att[v].append(u)
        for u, v in self.supports:
            sup[v].append(u)
        return {a: (tuple(sorted(att[a])), tuple(sorted(sup[a]))) for a in self.arguments}

    @cached_property
    def _out_adjacency(self) -> dict[ArgumentId, tuple[Edge, ...]]:
        out: dict[ArgumentId, list[Edge]] = {a: [] for a in self.arguments}
        for u, v in self.edges:
            out[u].append((u, v))
        return {a: tuple(sorted(out[a])) for a in self.arguments}

    def attackers(self, a: ArgumentId) -> tuple[ArgumentId, ...]:
        self._require(a)
        return self._in_adjacency[a][0]

    def supporters(self, a: ArgumentId) -> tuple[ArgumentId, ...]:
        self._require(a)
        return self._in_adjacency[a][1]

    def in_neighbours(self, a: ArgumentId) -> tuple[ArgumentId, ...]:
        self._require(a)
        att, sup = self._in_adjacency[a]
        return tuple(sorted(att + sup))

    def out_edges(self, a: ArgumentId) -> tuple[Edge, ...]:
        self._require(a)
        return self._out_adjacency[a]

    def with_edges(self, new_edges: Iterable[tuple[ArgumentId, ArgumentId, str]]) -> "Baf":
        """Extended graph including the endpoints of the added edges."""
        args = set(self.arguments)
        attacks = set(self.attacks)
        supports = set(self.supports)
        for u, v, pol in new_edges:
            args.add(u)
            args.add(v)
            if pol == ATTACK:
                attacks.add((u, v))
            elif pol == SUPPORT:
                supports.add((u, v))
            else:
                raise GraphError(f"unknown edge polarity {pol!r}")
        return Baf(self.explanandum, frozenset(args), frozenset(attacks), frozenset(supports))

    def _require(self, a: ArgumentId) -> None:
        if a not in self.arguments:
            raise UnknownArgument(f"unknown argument {a!r}")


@dataclass(frozen=True)
class Qbaf:
    """BAF plus base scores (one per argument)."""

    baf: Baf
    base_scores: Mapping[ArgumentId, float]

    def __post_init__(self) -> None:
        scored = set(self.base_scores)
        if scored != set(self.baf.arguments):
            missing = sorted(self.baf.arguments - scored)
            extra = sorted(scored - self.baf.arguments)
            raise GraphError(f"base scores mismatch (missing={missing}, extra={extra})")

    @property
    def explanandum(self) -> ArgumentId:
        return self.baf.explanandum

    @property
    def arguments(self) -> frozenset[ArgumentId]:
        return self.baf.arguments

    @property
    def attacks(self) -> frozenset[Edge]:
        return self.baf.attacks

    @property
    def supports(self) -> frozenset[Edge]:
        return self.baf.supports

    def score(self, a: ArgumentId) -> float:
        if a not in self.base_scores:
            raise UnknownArgument(f"unknown argument {a!r}")
        return self.base_scores[a]


GraphLike = Baf | Qbaf


def _as_baf(g: GraphLike) -> Baf:
    return g.baf if isinstance(g, Qbaf) else g


def validate_for_explanandum(g: GraphLike) -> ValidationReport:
    """Check the three explanandum-validity conditions; never raises."""
    baf = _as_baf(g)
    e = baf.explanandum
    violations: list[Violation] = []

    if baf.out_edges(e):
        violations.append(Violation("i", e, f"explanandum {e!r} has outgoing edges"))

    # Reachability of e, following edges forward from every argument.
    reaches: set[ArgumentId] = {e}
    frontier = [e]
    incoming: dict[ArgumentId, list[ArgumentId]] = {a: [] for a in baf.arguments}
    for u, v in baf.edges:
        incoming[v].append(u)
    while frontier:
        v = frontier.pop()
        for u in incoming[v]:
            if u not in reaches:
                reaches.add(u)
                frontier.append(u)
    for a in sorted(baf.arguments - reaches):
        violations.append(Violation("ii", a, f"argument {a!r} has no path to {e!r}"))

    # Cycle detection via Kahn's algorithm.
    indegree = {a: 0 for a in baf.arguments}
    for _, v in baf.edges:
        indegree[v] += 1
    queue = [a for a in baf.arguments if indegree[a] == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for _, v in baf.out_edges(u):
            indegree[v] -= 1
            if indegree[v] == 0:
                queue.append(v)
    if seen != len(baf.arguments):
        cyclic = sorted(a for a in baf.arguments if indegree[a] > 0)
        for a in cyclic:
            violations.append(Violation("iii", a, f"argument {a!r} lies on a cycle"))

    return ValidationReport(not violations, tuple(violations))


def paths(g: GraphLike, a: ArgumentId, b: ArgumentId) -> tuple[Path, ...]:
    """All simple directed paths from a to b, sorted canonically."""
    baf = _as_baf(g)
    baf._require(a)
    baf._require(b)
    found: list[Path] = []
    stack: list[Edge] = []
    visited: set[ArgumentId] = {a}

    def walk(node: ArgumentId) -> None:
        for edge in baf.out_edges(node):
            nxt = edge[1]
            if nxt in visited:
                continue
            stack.append(edge)
            if nxt == b:
                found.append(tuple(stack))
            else:
                visited.add(nxt)
                walk(nxt)
                visited.discard(nxt)
            stack.pop()

    walk(a)
    return tuple(sorted(found))


def parity_classes(baf: Baf) -> dict[ArgumentId, frozenset[int]]:
    """Attack-count parities reachable on paths to the explanandum.

    The explanandum itself is assigned {0} (empty path) so classes compose
    across edges; callers deciding pro/con must exclude it.
    """
    e = baf.explanandum
    order = _topological(baf)
    classes: dict[ArgumentId, set[int]] = {a: set() for a in baf.arguments}
    classes[e] = {0}
    # Process targets before sources: iterate reverse topological order.
    for a in reversed(order):
        if a == e:
            continue
        acc = classes[a]
        for u, v in baf.out_edges(a):
            w = 1 if (u, v) in baf.attacks else 0
            for q in classes[v]:
                acc.add(w ^ q)
    return {a: frozenset(c) for a, c in classes.items()}


def pro_con(b: GraphLike) -> tuple[frozenset[ArgumentId], frozenset[ArgumentId]]:
    """Arguments with an even-attack (pro) or odd-attack (con) path to e."""
    baf = _as_baf(b)
    report = validate_for_explanandum(baf)
    if not report.ok:
        raise GraphError(f"pro/con requires a valid graph: {report.violations[0].message}")
    classes = parity_classes(baf)
    e = baf.explanandum
    pro = frozenset(a for a in baf.arguments if a != e and 0 in classes[a])
    con = frozenset(a for a in baf.arguments if a != e and 1 in classes[a])
    return pro, con


def _topological(baf: Baf) -> list[ArgumentId]:
    """Deterministic topological order (edge sources before targets)."""
    indegree = {a: 0 for a in baf.arguments}
    for _, v in baf.edges:
        indegree[v] += 1
    import heapq

    ready = [a for a in baf.arguments if indegree[a] == 0]
    heapq.heapify(ready)
    order: list[ArgumentId] = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for _, v in baf.out_edges(u):
            indegree[v] -= 1
            if indegree[v] == 0:
                heapq.heappush(ready, v)
    if len(order) != len(baf.arguments):
        raise GraphError("graph contains a cycle")
    return order


@dataclass(frozen=True)
class GraphDelta:
    """Componentwise difference of two graphs; not itself a valid graph."""

    arguments: frozenset[ArgumentId]
    attacks: frozenset[Edge]
    supports: frozenset[Edge]
    base_scores: Mapping[ArgumentId, float] | None = None

    @property
    def empty(self) -> bool:
        return not (self.arguments or self.attacks or self.supports)


@dataclass(frozen=True)
class SubDiff:
    is_sub: bool
    diff: GraphDelta


def is_sub(inner: GraphLike, outer: GraphLike) -> bool:
    """Componentwise inclusion; QBAF pairs must also agree on shared scores."""
    bi, bo = _as_baf(inner), _as_baf(outer)
    if not (bi.arguments <= bo.arguments and bi.attacks <= bo.attacks and bi.supports <= bo.supports):
        return False
    if isinstance(inner, Qbaf) and isinstance(outer, Qbaf):
        return all(outer.base_scores[a] == inner.base_scores[a] for a in bi.arguments)
    return True


def graph_diff(outer: GraphLike, inner: GraphLike) -> GraphDelta:
    bo, bi = _as_baf(outer), _as_baf(inner)
    args = bo.arguments - bi.arguments
    scores = None
    if isinstance(outer, Qbaf):
        scores = {a: outer.base_scores[a] for a in sorted(args)}
    return GraphDelta(args, bo.attacks - bi.attacks, bo.supports - bi.supports, scores)


def sub_and_diff(f: GraphLike, f2: GraphLike) -> SubDiff:
    """Is f a subgraph of f2, plus the raw component difference f2 minus f."""
    return SubDiff(is_sub(f, f2), graph_diff(f2, f))


def graph_to_dict(g: GraphLike) -> dict:
    """Canonical JSON form, sorted by argument id for reproducible hashing."""
    baf = _as_baf(g)
    scores = g.base_scores if isinstance(g, Qbaf) else None
    arguments = []
    for a in sorted(baf.arguments):
        entry: dict = {"id": a}
        if scores is not None:
            entry["base_score"] = scores[a]
        arguments.append(entry)
    return {
        "explanandum": baf.explanandum,
        "arguments": arguments,
        "attacks": [list(edge) for edge in sorted(baf.attacks)],
        "supports": [list(edge) for edge in sorted(baf.supports)],
    }


def graph_from_dict(data: Mapping) -> GraphLike:
    """Inverse of graph_to_dict; returns a Qbaf when base scores are present."""
    try:
        explanandum = data["explanandum"]
        raw_args = data["arguments"]
        attacks = [tuple(edge) for edge in data.get("attacks", [])]
        supports = [tuple(edge) for edge in data.get("supports", [])]
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph document: {exc}") from exc
    ids = []
    scores: dict[ArgumentId, float] = {}
    scored = False
    for entry in raw_args:
        if isinstance(entry, str):
            ids.append(entry)
            continue
        ids.append(entry["id"])
        if "base_score" in entry:
            scored = True
            scores[entry["id"]] = float(entry["base_score"])
    baf = Baf.of(explanandum, ids, attacks, supports)
    if not scored:
        return baf
    if set(scores) != set(ids):
        raise GraphError("base scores must cover all arguments or none")
    return Qbaf(baf, scores)


def iter_edges(baf: Baf) -> Iterator[tuple[ArgumentId, ArgumentId, str]]:
    for u, v in sorted(baf.attacks):
        yield u, v, ATTACK
    for u, v in sorted(baf.supports):
        yield u, v, SUPPORT
