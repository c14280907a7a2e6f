"""Transcript serialization (JSON Lines) and replay verification.

A transcript is one header line followed by one record per timestep
(including timestep 0).  Records carry the contributed edges in order,
the biases chosen for newly learnt arguments, every agent's private
strengths and stance, and the exchange status.  The header embeds the
initial private triples, turn policy, caps, behaviour configuration and
seed, which makes a transcript fully replayable.

Replay re-executes the protocol from the recorded moves and diffs every
record; when the header carries machine-reconstructible behaviours and a
seed, the behaviours themselves are re-run instead, which also verifies
that the recorded moves are the ones the policies would pick.
"""

from __future__ import annotations

import json
from typing import Iterator, Mapping

from .behaviours import behaviour_config_from_dict
from .errors import ArgxError, ReplayMismatch
from .exchange import (
    STATUS_RUNNING,
    AgentId,
    Caps,
    Contribution,
    ExchangeState,
    PrivateTriple,
    StepRecord,
    Transcript,
    TranscriptHeader,
    finish,
    learning_preview,
    new_exchange,
    run,
    submit,
    turn_policy_from_dict,
)
from .graphs import ArgumentId, Baf, Qbaf, graph_from_dict, graph_to_dict
from .semantics import EvaluationRange, SemanticsKind, Stance

FORMAT = "argx-transcript-v1"


def triple_to_dict(triple: PrivateTriple) -> dict:
    return {
        "range": triple.evaluation_range.to_dict(),
        "semantics": triple.semantics.label,
        "qbaf": graph_to_dict(triple.qbaf),
    }


def triple_from_dict(data: Mapping) -> PrivateTriple:
    qbaf = graph_from_dict(data["qbaf"])
    if not isinstance(qbaf, Qbaf):
        raise ArgxError("private triple requires base scores on every argument")
    return PrivateTriple(
        EvaluationRange.from_dict(data.get("range", {})),
        qbaf,
        SemanticsKind.parse(data["semantics"]),
    )


def header_to_dict(header: TranscriptHeader) -> dict:
    return {
        "format": FORMAT,
        "explanandum": header.explanandum,
        "agents": list(header.agents),
        "turn_policy": header.turn_policy,
        "caps": header.caps.to_dict(),
        "triples": {agent: triple_to_dict(header.triples[agent]) for agent in header.agents},
        "behaviours": header.behaviours,
        "seed": list(header.seed) if header.seed is not None else None,
        "final_status": header.final_status,
        "resolved_at": header.resolved_at,
        "end_reason": header.end_reason,
    }


def header_from_dict(data: Mapping) -> TranscriptHeader:
    if data.get("format") != FORMAT:
        raise ArgxError(f"unsupported transcript format {data.get('format')!r}")
    agents = tuple(data["agents"])
    return TranscriptHeader(
        explanandum=data["explanandum"],
        agents=agents,
        turn_policy=dict(data["turn_policy"]),
        caps=Caps(int(data["caps"]["max_timesteps"])),
        triples={agent: triple_from_dict(data["triples"][agent]) for agent in agents},
        behaviours=data.get("behaviours"),
        seed=tuple(data["seed"]) if data.get("seed") is not None else None,
        final_status=data["final_status"],
        resolved_at=data.get("resolved_at"),
        end_reason=data.get("end_reason", ""),
    )


def record_to_dict(record: StepRecord) -> dict:
    contributions = [
        {"agent": c.agent, "from": u, "to": v, "polarity": pol}
        for c in record.contributions
        for (u, v, pol) in c.edges
    ]
    learnt = {
        agent: [{"arg": arg, "bias": bias} for arg, bias in sorted(args.items())]
        for agent, args in sorted(record.learnt.items())
    }
    return {
        "t": record.t,
        "contributions": contributions,
        "learnt": learnt,
        "strengths": {agent: dict(sorted(vals.items())) for agent, vals in sorted(record.strengths.items())},
        "stances": {agent: stance.symbol for agent, stance in sorted(record.stances.items())},
        "status": record.status,
    }


def to_jsonl(transcript: Transcript) -> str:
    lines = [json.dumps({"header": header_to_dict(transcript.header)}, sort_keys=True)]
    for record in transcript.records:
        lines.append(json.dumps(record_to_dict(record), sort_keys=True))
    return "\n".join(lines) + "\n"


def _parse_lines(text: str) -> tuple[dict, list[dict]]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ArgxError("empty transcript")
    first = json.loads(lines[0])
    if "header" not in first:
        raise ArgxError("transcript must start with a header line")
    return first["header"], [json.loads(line) for line in lines[1:]]


def from_jsonl(text: str) -> Transcript:
    header_data, record_dicts = _parse_lines(text)
    header = header_from_dict(header_data)
    records = []
    for data in record_dicts:
        contributions: list[Contribution] = []
        by_agent: dict[str, list] = {}
        agent_order: list[str] = []
        for entry in data.get("contributions", []):
            agent = entry["agent"]
            if agent not in by_agent:
                by_agent[agent] = []
                agent_order.append(agent)
            by_agent[agent].append((entry["from"], entry["to"], entry["polarity"]))
        for agent in agent_order:
            contributions.append(Contribution(agent, tuple(by_agent[agent])))
        records.append(
            StepRecord(
                t=int(data["t"]),
                contributions=tuple(contributions),
                learnt={
                    agent: {item["arg"]: float(item["bias"]) for item in items}
                    for agent, items in data.get("learnt", {}).items()
                },
                strengths={
                    agent: {arg: float(v) for arg, v in vals.items()}
                    for agent, vals in data["strengths"].items()
                },
                stances={agent: Stance.from_symbol(sym) for agent, sym in data["stances"].items()},
                status=data["status"],
                resolved_at=int(data["t"]) if data["status"] == "resolved" else None,
            )
        )
    return Transcript(header, tuple(records))


def exchange_graphs(transcript: Transcript) -> list[Baf]:
    """Cumulative exchange graph per timestep, index = timestep."""
    graphs = [Baf.singleton(transcript.header.explanandum)]
    for record in transcript.records[1:]:
        edges = [(u, v, pol) for c in record.contributions for (u, v, pol) in c.edges]
        graphs.append(graphs[-1].with_edges(edges))
    return graphs


def qbafs_at(transcript: Transcript, agent: AgentId) -> list[Qbaf]:
    """The agent's private QBAF per timestep, rebuilt from learnt records."""
    current = transcript.header.triples[agent].qbaf
    out = [current]
    for record in transcript.records[1:]:
        new_edges = []
        for contribution in record.contributions:
            for u, v, pol in contribution.edges:
                if current.baf.polarity((u, v)) is None:
                    new_edges.append((u, v, pol))
        new_scores = record.learnt.get(agent, {})
        if new_edges or new_scores:
            baf = current.baf.with_edges(new_edges)
            scores = dict(current.base_scores)
            scores.update(new_scores)
            current = Qbaf(baf, scores)
        out.append(current)
    return out


def contributor_map(transcript: Transcript) -> dict[tuple[ArgumentId, ArgumentId], tuple[AgentId, int]]:
    mapping: dict[tuple[ArgumentId, ArgumentId], tuple[AgentId, int]] = {}
    for record in transcript.records[1:]:
        for contribution in record.contributions:
            for u, v, _ in contribution.edges:
                mapping[(u, v)] = (contribution.agent, record.t)
    return mapping


def _initial_state(header: TranscriptHeader) -> ExchangeState:
    return new_exchange(
        header.explanandum,
        {agent: header.triples[agent] for agent in header.agents},
        turn_policy_from_dict(header.turn_policy),
    )


def _behaviours_replayable(header: TranscriptHeader) -> bool:
    if header.behaviours is None or header.seed is None:
        return False
    kinds = {"unresponsive", "shallow", "greedy", "counterfactual"}
    for config in header.behaviours.values():
        if config.get("behaviour", {}).get("kind") not in kinds:
            return False
        if config.get("bias", {}).get("kind") not in {"constant", "random"}:
            return False
    return True


def replay(transcript: Transcript, mode: str = "auto") -> list[str]:
    """Re-execute a transcript and return human-readable divergences."""
    if mode not in {"auto", "protocol", "behaviours"}:
        raise ArgxError(f"unknown replay mode {mode!r}")
    if mode == "auto":
        mode = "behaviours" if _behaviours_replayable(transcript.header) else "protocol"
    if mode == "behaviours":
        return _replay_behaviours(transcript)
    return _replay_protocol(transcript)


def _diff_records(expected: StepRecord, actual: StepRecord) -> list[str]:
    problems = []
    left = record_to_dict(expected)
    right = record_to_dict(actual)
    for key in left:
        if left[key] != right[key]:
            problems.append(f"t={expected.t} field {key!r}: recorded {left[key]!r} != replayed {right[key]!r}")
    return problems


def _replay_behaviours(transcript: Transcript) -> list[str]:
    header = transcript.header
    behaviours = {agent: behaviour_config_from_dict(config) for agent, config in header.behaviours.items()}
    state = _initial_state(header)
    rerun = run(state, behaviours, header.caps, header.seed)
    problems: list[str] = []
    if len(rerun.records) != len(transcript.records):
        problems.append(
            f"timestep count mismatch: recorded {len(transcript.records) - 1}, replayed {len(rerun.records) - 1}"
        )
    for expected, actual in zip(transcript.records, rerun.records):
        problems.extend(_diff_records(expected, actual))
    if rerun.header.final_status != header.final_status:
        problems.append(
            f"final status mismatch: recorded {header.final_status!r}, replayed {rerun.header.final_status!r}"
        )
    if rerun.header.resolved_at != header.resolved_at:
        problems.append(
            f"resolution timestep mismatch: recorded {header.resolved_at!r}, replayed {rerun.header.resolved_at!r}"
        )
    return problems


def _replay_protocol(transcript: Transcript) -> list[str]:
    header = transcript.header
    state = _initial_state(header)
    problems: list[str] = []
    problems.extend(_diff_records(transcript.records[0], state.history[0]))
    policy = turn_policy_from_dict(header.turn_policy)
    for record in transcript.records[1:]:
        scheduled = policy.schedule(record.t)
        by_agent = {c.agent: c for c in record.contributions}
        for agent in scheduled:
            contribution = by_agent.get(agent, Contribution(agent))
            preview = learning_preview(state, contribution)
            biases = {
                learner: {arg: record.learnt[learner][arg] for arg in args}
                for learner, args in preview.items()
            }
            try:
                state = submit(state, contribution, biases)
            except ArgxError as exc:
                return problems + [f"t={record.t}: replay rejected by protocol: {exc}"]
        problems.extend(_diff_records(record, state.history[-1]))
    if state.status == STATUS_RUNNING:
        state = finish(state)
    if state.status != header.final_status:
        problems.append(
            f"final status mismatch: recorded {header.final_status!r}, replayed {state.status!r}"
        )
    return problems


def verify(transcript: Transcript, mode: str = "auto") -> None:
    problems = replay(transcript, mode)
    if problems:
        raise ReplayMismatch("; ".join(problems[:5]))


def iter_transcripts(text: str) -> Iterator[Transcript]:
    """Split a file holding several concatenated transcripts on header lines."""
    block: list[str] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.lstrip().startswith('{"header"') and block:
            yield from_jsonl("\n".join(block))
            block = []
        block.append(line)
    if block:
        yield from_jsonl("\n".join(block))
