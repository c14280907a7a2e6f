"""Random scenario generation and the batch experiment runner.

A scenario is a 30-argument universal graph (ground truth for edge
polarity), one 15-argument private QBAF per agent sampled from it, and a
random evaluation method per agent; the bundle is rejection-sampled until
the two agents disagree on the explanandum.

Experiments run many seeded exchanges per configuration.  The scenario for
run i depends only on (base seed, i), never on the behaviour configuration,
so different configurations sharing a base seed face identical scenarios
run for run and their metrics are directly comparable.  Runs are
independent and may execute in a process pool; results are merged in run
order, so serial and parallel execution produce identical output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .analysis import MetricsRow, RunSamples, metrics_detailed
from .behaviours import behaviour_config_from_dict
from .errors import ArgxError
from .exchange import (
    AgentId,
    BehaviourConfig,
    Caps,
    PrivateTriple,
    Transcript,
    new_exchange,
    run,
)
from .graphs import ATTACK, SUPPORT, ArgumentId, Baf, Qbaf, graph_from_dict, graph_to_dict
from .rng import open_unit, seeded_generator, stable_hash64
from .semantics import UNIT_RANGE, SemanticsKind
from .transcripts import from_jsonl, to_jsonl, triple_from_dict, triple_to_dict

MACHINE: AgentId = "mu"
HUMAN: AgentId = "eta"

UNIVERSAL_SIZE = 30
PRIVATE_SIZE = 15
TREE_ARITY = 6
EXTRA_EDGE_PROBABILITY = 0.5
REJECTION_CAP = 10_000

ALL_KINDS = (SemanticsKind.DF_QUAD, SemanticsKind.QUAD, SemanticsKind.REB, SemanticsKind.QEM)


@dataclass(frozen=True)
class Scenario:
    universal: Baf
    triples: Mapping[AgentId, PrivateTriple]
    seed: tuple[int, ...]
    rejections: int = 0

    def to_dict(self) -> dict:
        return {
            "format": "argx-scenario-v1",
            "explanandum": self.universal.explanandum,
            "seed": list(self.seed),
            "rejections": self.rejections,
            "universal": graph_to_dict(self.universal),
            "agents": {agent: triple_to_dict(triple) for agent, triple in sorted(self.triples.items())},
        }

    @staticmethod
    def from_dict(data: Mapping) -> "Scenario":
        universal_data = data.get("universal")
        agents = {agent: triple_from_dict(t) for agent, t in data["agents"].items()}
        if universal_data is not None:
            universal = graph_from_dict(universal_data)
            if isinstance(universal, Qbaf):
                universal = universal.baf
        else:
            # Scenario files may omit the universal graph; use the union of
            # the private graphs, which is consistent by shared vocabulary.
            explanandum = data["explanandum"]
            args: set[ArgumentId] = set()
            attacks: set = set()
            supports: set = set()
            for triple in agents.values():
                args |= triple.qbaf.arguments
                attacks |= triple.qbaf.attacks
                supports |= triple.qbaf.supports
            universal = Baf(explanandum, frozenset(args), frozenset(attacks), frozenset(supports))
        return Scenario(
            universal=universal,
            triples=agents,
            seed=tuple(data.get("seed", ())),
            rejections=int(data.get("rejections", 0)),
        )


def _argument_name(i: int) -> ArgumentId:
    return f"a{i:02d}"


def gen_universal_baf(rng: np.random.Generator, explanandum: ArgumentId = "e") -> Baf:
    """30-argument graph: a level-filled 6-ary tree rooted at the
    explanandum, one optional extra edge per non-root argument toward an
    earlier one, then exactly half of the edges (rounding up) relabelled
    attacks."""
    created = [explanandum]
    edges: list[tuple[ArgumentId, ArgumentId]] = []
    for i in range(1, UNIVERSAL_SIZE):
        name = _argument_name(i)
        edges.append((name, created[(i - 1) // TREE_ARITY]))
        created.append(name)
    existing = set(edges)
    for i in range(1, UNIVERSAL_SIZE):
        name = created[i]
        if rng.random() < EXTRA_EDGE_PROBABILITY:
            target = created[int(rng.integers(i))]
            if (name, target) not in existing:
                edges.append((name, target))
                existing.add((name, target))
    n_attacks = math.ceil(len(edges) / 2)
    order = sorted(edges)
    picks = rng.choice(len(order), size=n_attacks, replace=False)
    attack_set = {order[int(i)] for i in picks}
    attacks = frozenset(attack_set)
    supports = frozenset(e for e in order if e not in attack_set)
    return Baf(explanandum, frozenset(created), attacks, supports)


def sample_private_qbaf(universal: Baf, rng: np.random.Generator) -> Qbaf:
    """Grow from the explanandum by repeatedly pulling in one unseen
    in-neighbour of a random included argument, stop at 15 arguments, keep
    every universal edge between included arguments, and draw biases
    uniformly from the open unit interval."""
    if len(universal.arguments) < PRIVATE_SIZE:
        raise ArgxError("universal graph smaller than the private sample size")
    included: list[ArgumentId] = [universal.explanandum]
    member = {universal.explanandum}
    while len(included) < PRIVATE_SIZE:
        expandable = [
            a for a in included if any(b not in member for b in universal.in_neighbours(a))
        ]
        host = expandable[int(rng.integers(len(expandable)))]
        fresh = [b for b in universal.in_neighbours(host) if b not in member]
        pick = fresh[int(rng.integers(len(fresh)))]
        included.append(pick)
        member.add(pick)
    attacks = frozenset((u, v) for (u, v) in universal.attacks if u in member and v in member)
    supports = frozenset((u, v) for (u, v) in universal.supports if u in member and v in member)
    baf = Baf(universal.explanandum, frozenset(member), attacks, supports)
    scores = {}
    for a in sorted(member):
        scores[a] = open_unit(rng)
    return Qbaf(baf, scores)


def sample_scenario(
    seed: Sequence[int],
    kinds: Sequence[SemanticsKind] = ALL_KINDS,
    explanandum: ArgumentId = "e",
) -> Scenario:
    """Sample universal graph, private triples and methods until the two
    agents' stances on the explanandum differ."""
    rng = seeded_generator(*seed)
    for rejections in range(REJECTION_CAP):
        universal = gen_universal_baf(rng, explanandum)
        triples: dict[AgentId, PrivateTriple] = {}
        for agent in (MACHINE, HUMAN):
            qbaf = sample_private_qbaf(universal, rng)
            kind = kinds[int(rng.integers(len(kinds)))]
            triples[agent] = PrivateTriple(UNIT_RANGE, qbaf, kind)
        stances = {
            agent: triples[agent].stance_on(explanandum) for agent in (MACHINE, HUMAN)
        }
        if stances[MACHINE] != stances[HUMAN]:
            return Scenario(universal, triples, tuple(seed), rejections)
    raise ArgxError(f"no conflicting scenario found after {REJECTION_CAP} attempts")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    behaviours: Mapping[AgentId, dict]  # JSON behaviour configs per agent
    runs: int = 1000
    base_seed: int = 0
    caps: Caps = field(default_factory=Caps)
    kinds: tuple[SemanticsKind, ...] = ALL_KINDS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "behaviours": {agent: dict(config) for agent, config in self.behaviours.items()},
            "runs": self.runs,
            "seed": self.base_seed,
            "caps": self.caps.to_dict(),
            "kinds": [kind.label for kind in self.kinds],
        }

    @staticmethod
    def from_dict(data: Mapping) -> "ExperimentConfig":
        kinds = tuple(SemanticsKind.parse(k) for k in data.get("kinds", [k.label for k in ALL_KINDS]))
        return ExperimentConfig(
            name=data["name"],
            behaviours={agent: dict(cfg) for agent, cfg in data["behaviours"].items()},
            runs=int(data.get("runs", 1000)),
            base_seed=int(data.get("seed", 0)),
            caps=Caps(int(data.get("caps", {}).get("max_timesteps", Caps().max_timesteps))),
            kinds=kinds,
        )


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    row: MetricsRow
    samples: RunSamples
    transcripts: tuple[Transcript, ...]


def run_single(config: ExperimentConfig, index: int) -> Transcript:
    """One seeded exchange for run `index` of an experiment."""
    seed = (config.base_seed, index)
    scenario = sample_scenario(seed, config.kinds)
    behaviours: dict[AgentId, BehaviourConfig] = {
        agent: behaviour_config_from_dict(config.behaviours[agent])
        for agent in scenario.triples
    }
    state = new_exchange(scenario.universal.explanandum, scenario.triples)
    return run(state, behaviours, config.caps, seed)


def _run_single_jsonl(payload: tuple[dict, int]) -> str:
    config_data, index = payload
    return to_jsonl(run_single(ExperimentConfig.from_dict(config_data), index))


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    transcripts_dir: str | None = None,
) -> ExperimentResult:
    """Run all exchanges for one configuration and aggregate metrics."""
    if config.runs < 1:
        raise ArgxError("an experiment needs at least one run")
    if workers > 1:
        payloads = [(config.to_dict(), i) for i in range(config.runs)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            texts = list(pool.map(_run_single_jsonl, payloads, chunksize=16))
        transcripts = tuple(from_jsonl(text) for text in texts)
    else:
        transcripts = tuple(run_single(config, i) for i in range(config.runs))
    if transcripts_dir is not None:
        import pathlib

        directory = pathlib.Path(transcripts_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for i, transcript in enumerate(transcripts):
            (directory / f"{config.name}-{i:04d}.jsonl").write_text(to_jsonl(transcript))
    row, samples = metrics_detailed(transcripts, MACHINE)
    return ExperimentResult(config, row, samples, transcripts)


def _cell(
    name: str,
    machine_behaviour: dict,
    human_behaviour: dict,
    machine_bias: dict,
    human_bias: dict,
    runs: int,
    base_seed: int,
) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        behaviours={
            MACHINE: {"behaviour": machine_behaviour, "bias": machine_bias},
            HUMAN: {"behaviour": human_behaviour, "bias": human_bias},
        },
        runs=runs,
        base_seed=base_seed,
    )


def hypothesis_cells(hypothesis: str, runs: int = 1000, base_seed: int = 0) -> list[ExperimentConfig]:
    """The experiment grid for one hypothesis, mirroring the evaluation table."""
    h = hypothesis.lower()
    constant0 = {"kind": "constant", "c": 0.0}
    if h == "h1":
        return [
            _cell(
                f"h1-shallow{k}",
                {"kind": "shallow", "max": k},
                {"kind": "unresponsive"},
                constant0,
                {"kind": "random", "offset": 0.0},
                runs,
                base_seed,
            )
            for k in range(1, 6)
        ]
    if h == "h2":
        return [
            _cell(
                f"h2-offset{offset:+.1f}",
                {"kind": "shallow", "max": 4},
                {"kind": "unresponsive"},
                constant0,
                {"kind": "random", "offset": offset},
                runs,
                base_seed,
            )
            for offset in (-0.1, -0.2, -0.3, -0.4)
        ]
    if h == "h3":
        cells = []
        for budget, label in ((3, "h3-greedy-le3"), (4, "h3-greedy-le4"), (None, "h3-greedy")):
            behaviour: dict = {"kind": "greedy"}
            if budget is not None:
                behaviour["budget"] = budget
            cells.append(
                _cell(
                    label,
                    behaviour,
                    {"kind": "counterfactual"},
                    constant0,
                    {"kind": "random", "offset": -0.2},
                    runs,
                    base_seed,
                )
            )
        return cells
    if h == "h4":
        return [
            _cell(
                f"h4-learn{c:.1f}",
                {"kind": "greedy"},
                {"kind": "counterfactual"},
                {"kind": "constant", "c": c},
                {"kind": "random", "offset": -0.2},
                runs,
                base_seed,
            )
            for c in (0.5, 1.0)
        ]
    if h == "h5":
        return [
            _cell(
                "h5-counterfactual",
                {"kind": "counterfactual"},
                {"kind": "counterfactual"},
                {"kind": "constant", "c": 0.5},
                {"kind": "random", "offset": -0.2},
                runs,
                base_seed,
            )
        ]
    raise ArgxError(f"unknown hypothesis {hypothesis!r} (expected h1..h5)")


def _behaviour_label(config: dict) -> str:
    kind = config["kind"]
    if kind == "shallow":
        return f"S({config.get('max', 1)})"
    if kind == "greedy":
        return f"G(<={config['budget']})" if config.get("budget") else "G"
    if kind == "counterfactual":
        return f"C(<={config['budget']})" if config.get("budget") else "C"
    return "-"


def _learning_label(config: dict) -> str:
    if config["kind"] == "constant":
        return f"{config['c']:g}"
    return f"{config.get('offset', 0.0):g}"


CSV_COLUMNS = [
    "behaviour_mu",
    "behaviour_eta",
    "learning_mu",
    "learning_eta",
    "rr",
    "cr",
    "pr_mu",
    "ca_mu",
    "n_runs",
    "n_resolved",
]


def results_csv(results: Sequence[ExperimentResult]) -> str:
    """One table row per experiment cell, in the evaluation table's column order."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for result in results:
        mu = result.config.behaviours[MACHINE]
        eta = result.config.behaviours[HUMAN]
        writer.writerow(
            [
                _behaviour_label(mu["behaviour"]),
                _behaviour_label(eta["behaviour"]),
                _learning_label(mu["bias"]),
                _learning_label(eta["bias"]),
                f"{result.row.rr:.4f}",
                f"{result.row.cr:.4f}",
                f"{result.row.pr_machine:.4f}",
                f"{result.row.ca_machine:.4f}",
                result.row.n_runs,
                result.row.n_resolved,
            ]
        )
    return buffer.getvalue()


def load_experiment_file(text: str) -> list[ExperimentConfig]:
    data = json.loads(text)
    cells = data["cells"] if isinstance(data, Mapping) else data
    return [ExperimentConfig.from_dict(cell) for cell in cells]


def scenario_hash(scenario: Scenario) -> int:
    """Stable digest of a scenario, for paired-run assertions."""
    return stable_hash64(json.dumps(scenario.to_dict(), sort_keys=True))
