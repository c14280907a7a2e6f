"""Gradual semantics over QBAFs and stance discretisation.

The reference semantics (df-quad) follows the product-style aggregation
with a combination step that moves the base score toward 0 or 1 by the
gap between the aggregated attack and support strengths.  quad, reb and
qem are alternative evaluation methods used to randomise agent internals;
all four map base scores in [0, 1] to strengths in [0, 1] and leave an
unattacked, unsupported argument at its base score.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import SemanticsError
from .graphs import ArgumentId, Baf, Qbaf, validate_for_explanandum
from .kernels import build_plan, eval_plan


class Stance(enum.IntEnum):
    """Discretised evaluation band, ordered negative < neutral < positive."""

    NEGATIVE = -1
    NEUTRAL = 0
    POSITIVE = 1

    @property
    def symbol(self) -> str:
        return {-1: "-", 0: "0", 1: "+"}[int(self)]

    @staticmethod
    def from_symbol(symbol: str) -> "Stance":
        try:
            return {"-": Stance.NEGATIVE, "0": Stance.NEUTRAL, "+": Stance.POSITIVE}[symbol]
        except KeyError:
            raise SemanticsError(f"unknown stance symbol {symbol!r}") from None


class SemanticsKind(enum.Enum):
    DF_QUAD = "df-quad"
    QUAD = "quad"
    REB = "reb"
    QEM = "qem"

    @property
    def label(self) -> str:
        return self.value

    @property
    def code(self) -> int:
        return {"df-quad": 0, "quad": 1, "reb": 2, "qem": 3}[self.value]

    @staticmethod
    def parse(name: str) -> "SemanticsKind":
        normalised = name.strip().lower().replace("_", "-")
        aliases = {"dfquad": "df-quad"}
        normalised = aliases.get(normalised, normalised)
        for kind in SemanticsKind:
            if kind.value == normalised:
                return kind
        raise SemanticsError(f"unknown semantics kind {name!r}")


@dataclass(frozen=True)
class EvaluationRange:
    """Split of [low, high] into negative [low, neutral), the neutral point,
    and positive (neutral, high]."""

    low: float = 0.0
    neutral: float = 0.5
    high: float = 1.0

    def __post_init__(self) -> None:
        if not (self.low < self.neutral < self.high):
            raise SemanticsError(
                f"evaluation range needs low < neutral < high, got {self.low}, {self.neutral}, {self.high}"
            )

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high

    def stance_of(self, value: float) -> Stance:
        if not self.contains(value):
            raise SemanticsError(f"value {value!r} outside evaluation range [{self.low}, {self.high}]")
        if value < self.neutral:
            return Stance.NEGATIVE
        if value == self.neutral:
            return Stance.NEUTRAL
        return Stance.POSITIVE

    def to_dict(self) -> dict:
        return {"low": self.low, "neutral": self.neutral, "high": self.high}

    @staticmethod
    def from_dict(data: Mapping) -> "EvaluationRange":
        return EvaluationRange(
            float(data.get("low", 0.0)),
            float(data.get("neutral", 0.5)),
            float(data.get("high", 1.0)),
        )


#: The standard machine/human instantiation: [0, 0.5) / {0.5} / (0.5, 1].
UNIT_RANGE = EvaluationRange()


def _check_unit(value: float, what: str) -> float:
    if not (0.0 <= value <= 1.0):
        raise SemanticsError(f"{what} must lie in [0, 1], got {value!r}")
    return float(value)


def dfquad_aggregate(values: Iterable[float]) -> float:
    """Left fold of v1 + v2 - v1*v2 over the sequence; empty sequence is 0."""
    acc = 0.0
    for value in values:
        v = _check_unit(value, "aggregated strength")
        acc = acc + v - acc * v
    return acc


def dfquad_combine(v0: float, v_att: float, v_sup: float) -> float:
    """Move the base score by the gap between attack and support aggregates."""
    t = _check_unit(v0, "base score")
    va = _check_unit(v_att, "attack aggregate")
    vs = _check_unit(v_sup, "support aggregate")
    if va >= vs:
        return t - t * (va - vs)
    return t + (1.0 - t) * (vs - va)


def evaluate(qbaf: Qbaf, kind: SemanticsKind = SemanticsKind.DF_QUAD) -> dict[ArgumentId, float]:
    """Strength of every argument, computed leaves-first in topological order."""
    report = validate_for_explanandum(qbaf)
    if not report.ok:
        raise SemanticsError(f"cannot evaluate invalid graph: {report.violations[0].message}")
    for a, score in qbaf.base_scores.items():
        if not (0.0 <= score <= 1.0):
            raise SemanticsError(f"base score of {a!r} outside [0, 1]: {score!r}")
    plan = build_plan(qbaf.baf, qbaf.base_scores)
    strengths = eval_plan(plan, kind.code)
    return {a: float(strengths[i]) for i, a in enumerate(plan.ids)}


def evaluate_baf(baf: Baf, scores: Mapping[ArgumentId, float], kind: SemanticsKind) -> dict[ArgumentId, float]:
    return evaluate(Qbaf(baf, dict(scores)), kind)


def stance_of(range_: EvaluationRange, strength: float) -> Stance:
    return range_.stance_of(strength)


def clamp_unit(value: float) -> float:
    return min(1.0, max(0.0, value))


def dfquad_strength(tau: float, att: Iterable[float], sup: Iterable[float]) -> float:
    """One-node df-quad evaluation; handy for hand checks and oracles."""
    return dfquad_combine(tau, dfquad_aggregate(att), dfquad_aggregate(sup))


def _reference_strength(kind: SemanticsKind, tau: float, att: list[float], sup: list[float]) -> float:
    """Direct per-node formulas, used by tests as an independent oracle."""
    if kind is SemanticsKind.DF_QUAD:
        return dfquad_strength(tau, att, sup)
    if kind is SemanticsKind.QUAD:
        if not att and not sup:
            return tau
        pa = tau
        for v in att:
            pa -= pa * v
        ps = tau
        for v in sup:
            ps += (1.0 - ps) * v
        if not sup:
            return pa
        if not att:
            return ps
        return (pa + ps) / 2.0
    energy = sum(sup) - sum(att)
    if kind is SemanticsKind.REB:
        return 1.0 - (1.0 - tau * tau) / (1.0 + tau * math.exp(energy))
    if kind is SemanticsKind.QEM:
        h = (energy * energy) / (1.0 + energy * energy)
        return tau + (1.0 - tau) * h if energy >= 0.0 else tau - tau * h
    raise SemanticsError(f"unknown semantics kind {kind!r}")
