"""Live exchange sessions over a JSON API.

A session pits a configured machine agent against a human played by the
client.  The machine moves first; whenever its contribution teaches the
human new arguments, the session blocks in a pending-bias gate until the
client assigns a bias to each of them, then the timestep commits and the
turn passes to the human.  Human contributions are validated by the
protocol (turn order, truthfulness, graph validity); the machine learns
from them with its configured bias policy automatically.

Views sent to the client never contain the machine's base scores or its
unexchanged private edges.  The transcript endpoint, in contrast, is an
oracle export for offline verification and embeds both private triples so
the CLI verifier can replay it.

Endpoints:
  POST /sessions                  create (scenario + machine behaviour)
  POST /sessions/{id}/actions     contribute | pass | assign_bias
  GET  /sessions/{id}             current view
  GET  /sessions/{id}/transcript  replayable JSONL
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from typing import Any, Mapping

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .behaviours import Unresponsive, behaviour_config_from_dict
from .errors import ArgxError, BiasOutOfRange, MissingBias, OutOfTurn
from .exchange import (
    STATUS_RUNNING,
    BehaviourConfig,
    Caps,
    Contribution,
    ExchangeState,
    RoundRobin,
    Transcript,
    TranscriptHeader,
    behaviour_biases,
    finish,
    learning_preview,
    new_exchange,
    submit,
)
from .fixtures import demo_scenario
from .graphs import graph_to_dict, pro_con
from .rng import DrawContext
from .simulation import HUMAN, MACHINE, Scenario, sample_scenario
from .transcripts import to_jsonl

DEFAULT_MACHINE = {"behaviour": {"kind": "greedy"}, "bias": {"kind": "constant", "c": 0.5}}


class _InteractiveBias:
    """Placeholder for the human: their biases come from the client, never here."""

    def bias_for(self, agent, argument, counter_aligned, draw):
        raise AssertionError("interactive agent biases must be supplied by the client")

    def to_dict(self) -> dict:
        return {"kind": "interactive"}


_INTERACTIVE_HUMAN = BehaviourConfig(contribution=Unresponsive(), bias=_InteractiveBias())


class CreateSessionBody(BaseModel):
    scenario: str | dict | None = None
    seed: int | None = None
    machine: dict = Field(default_factory=lambda: dict(DEFAULT_MACHINE))
    show_pro_con: bool = True
    max_timesteps: int = Caps().max_timesteps


class ActionBody(BaseModel):
    action: str
    edges: list[dict] | None = None
    biases: dict[str, float] | None = None


@dataclass
class Session:
    id: str
    state: ExchangeState
    machine_config: BehaviourConfig
    machine_config_dict: dict
    caps: Caps
    show_pro_con: bool
    pending_contribution: Contribution | None = None
    end_reason: str = "incomplete"
    lock: threading.Lock = field(default_factory=threading.Lock)
    draws: DrawContext = field(default_factory=DrawContext)

    @property
    def turn(self) -> str:
        if self.state.status != STATUS_RUNNING:
            return "over"
        if self.pending_contribution is not None:
            return "bias"
        scheduled = self.state.scheduled_now()
        if MACHINE in scheduled:
            return "machine"
        return "human"


def _error(status: int, code: str, message: str, detail: Any = None) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, "detail": detail})


def _advance_machine(session: Session) -> None:
    """Let the machine act until the human must do something (or the end)."""
    state = session.state
    while state.status == STATUS_RUNNING and session.pending_contribution is None:
        t = state.timestep + 1
        if t > session.caps.max_timesteps:
            state = finish(state)
            session.end_reason = "cap"
            break
        scheduled = state.turn_policy.schedule(t)
        if MACHINE not in scheduled:
            break
        edges = session.machine_config.contribution.select(state, MACHINE)
        contribution = Contribution(MACHINE, edges)
        preview = learning_preview(state, contribution)
        if preview.get(HUMAN):
            # The human must pick biases before this timestep can commit.
            session.pending_contribution = contribution
            break
        biases = behaviour_biases(
            state, contribution, {MACHINE: session.machine_config, HUMAN: _INTERACTIVE_HUMAN},
            session.draws.uniform,
        )
        state = submit(state, contribution, biases)
        if state.status != STATUS_RUNNING:
            session.end_reason = "resolved" if state.status == "resolved" else "pass-round"
    session.state = state


def _session_view(session: Session) -> dict:
    state = session.state
    exchange = graph_to_dict(state.exchange)
    exchange["contributors"] = {
        f"{u}->{v}": {"agent": agent, "t": t} for (u, v), (agent, t) in sorted(state.contributors.items())
    }
    human = state.triples[HUMAN]
    last = state.history[-1]
    view: dict = {
        "id": session.id,
        "t": state.timestep,
        "status": state.status,
        "resolved_at": state.resolved_at,
        "turn": session.turn,
        "explanandum": state.explanandum,
        "exchange": exchange,
        "you": {
            "agent": HUMAN,
            "qbaf": graph_to_dict(human.qbaf),
            "semantics": human.semantics.label,
            "stance": last.stances[HUMAN].symbol,
            "strengths": dict(sorted(last.strengths[HUMAN].items())),
        },
        "machine": {"agent": MACHINE, "stance": last.stances[MACHINE].symbol},
        "pending_contribution": None,
        "pending_bias": [],
        "history": [
            {
                "t": record.t,
                "contributions": [
                    {"agent": c.agent, "from": u, "to": v, "polarity": pol}
                    for c in record.contributions
                    for (u, v, pol) in c.edges
                ],
                "stances": {agent: stance.symbol for agent, stance in sorted(record.stances.items())},
                "status": record.status,
            }
            for record in state.history
        ],
    }
    if session.pending_contribution is not None:
        contribution = session.pending_contribution
        view["pending_contribution"] = [
            {"agent": contribution.agent, "from": u, "to": v, "polarity": pol}
            for (u, v, pol) in contribution.edges
        ]
        view["pending_bias"] = learning_preview(state, contribution).get(HUMAN, [])
    if session.show_pro_con and len(state.exchange.arguments) > 0:
        pro, con = pro_con(state.exchange)
        view["pro_con"] = {"pro": sorted(pro), "con": sorted(con)}
    return view


def _session_transcript(session: Session) -> Transcript:
    state = session.state
    header = TranscriptHeader(
        explanandum=state.explanandum,
        agents=state.agents,
        turn_policy=state.turn_policy.to_dict(),
        caps=session.caps,
        triples=dict(state.initial_triples),
        behaviours={
            MACHINE: session.machine_config_dict,
            HUMAN: {"behaviour": {"kind": "interactive"}, "bias": {"kind": "interactive"}},
        },
        seed=None,
        final_status=state.status,
        resolved_at=state.resolved_at,
        end_reason=session.end_reason if state.status != STATUS_RUNNING else "in-progress",
    )
    return Transcript(header, state.history)


def _build_scenario(body: CreateSessionBody) -> Scenario:
    if isinstance(body.scenario, dict):
        return Scenario.from_dict(body.scenario)
    if body.scenario in (None, "demo"):
        if body.seed is not None:
            return sample_scenario((body.seed,))
        return demo_scenario()
    raise ArgxError(f"unknown scenario {body.scenario!r}")


def create_app() -> FastAPI:
    app = FastAPI(title="argx sessions")
    sessions: dict[str, Session] = {}

    @app.exception_handler(ArgxError)
    async def _argx_error(request: Request, exc: ArgxError):
        status = 400
        return _error(status, type(exc).__name__.lower(), str(exc))

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        try:
            scenario = _build_scenario(body)
            machine_config = behaviour_config_from_dict(body.machine)
        except (ArgxError, KeyError, ValueError) as exc:
            return _error(400, "bad-config", f"invalid session configuration: {exc}")
        state = new_exchange(
            scenario.universal.explanandum,
            dict(scenario.triples),
            RoundRobin((MACHINE, HUMAN)),
        )
        session = Session(
            id=uuid.uuid4().hex,
            state=state,
            machine_config=machine_config,
            machine_config_dict=dict(body.machine),
            caps=Caps(body.max_timesteps),
            show_pro_con=body.show_pro_con,
            draws=DrawContext((body.seed or 0,)),
        )
        with session.lock:
            _advance_machine(session)
        sessions[session.id] = session
        return _session_view(session)

    def _get(session_id: str) -> Session | None:
        return sessions.get(session_id)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = _get(session_id)
        if session is None:
            return _error(404, "not-found", f"no session {session_id!r}")
        return _session_view(session)

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        session = _get(session_id)
        if session is None:
            return _error(404, "not-found", f"no session {session_id!r}")
        return PlainTextResponse(to_jsonl(_session_transcript(session)))

    @app.post("/sessions/{session_id}/actions")
    def post_action(session_id: str, body: ActionBody):
        session = _get(session_id)
        if session is None:
            return _error(404, "not-found", f"no session {session_id!r}")
        with session.lock:
            try:
                if body.action == "assign_bias":
                    _apply_bias(session, body.biases or {})
                elif body.action in ("contribute", "pass"):
                    _apply_human_turn(session, body)
                else:
                    return _error(400, "bad-action", f"unknown action {body.action!r}")
            except ArgxError as exc:
                return _error(400, type(exc).__name__.lower(), str(exc))
            _advance_machine(session)
            return _session_view(session)

    def _apply_bias(session: Session, biases: Mapping[str, float]) -> None:
        if session.pending_contribution is None:
            raise OutOfTurn("no learnt arguments are awaiting a bias")
        contribution = session.pending_contribution
        needed = learning_preview(session.state, contribution).get(HUMAN, [])
        missing = [arg for arg in needed if arg not in biases]
        if missing:
            raise MissingBias(f"missing biases for {missing}")
        extra = [arg for arg in biases if arg not in needed]
        if extra:
            raise BiasOutOfRange(f"arguments {extra} are not awaiting a bias")
        session.pending_contribution = None
        session.state = submit(session.state, contribution, {HUMAN: dict(biases)})
        if session.state.status != STATUS_RUNNING:
            session.end_reason = "resolved" if session.state.status == "resolved" else "pass-round"

    def _apply_human_turn(session: Session, body: ActionBody) -> None:
        if session.pending_contribution is not None:
            raise OutOfTurn("assign biases to the learnt arguments first")
        if session.turn != "human":
            raise OutOfTurn("it is not your turn")
        edges = tuple(
            (entry["from"], entry["to"], entry["polarity"]) for entry in (body.edges or [])
        )
        contribution = Contribution(HUMAN, edges if body.action == "contribute" else ())
        biases = behaviour_biases(
            session.state,
            contribution,
            {MACHINE: session.machine_config, HUMAN: _INTERACTIVE_HUMAN},
            session.draws.uniform,
        )
        session.state = submit(session.state, contribution, biases)
        if session.state.status != STATUS_RUNNING:
            session.end_reason = "resolved" if session.state.status == "resolved" else "pass-round"

    return app
