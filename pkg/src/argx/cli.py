"""Command-line front door.

Subcommands: gen (sample a scenario), run (one exchange with configured
behaviours), simulate (hypothesis grids or custom experiment files),
check (property checkers over a transcript), replay (re-execute and diff),
export-dot (render one timestep's exchange graph) and serve (the session
API).  Exit codes: 0 success, 1 engine/check failure, 2 usage error.
Every command is deterministic given --seed; ARGX_SEED supplies the
default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, simulation, transcripts
from .behaviours import behaviour_config_from_dict
from .errors import ArgxError
from .exchange import Caps, new_exchange, run as run_exchange
from .fixtures import demo_scenario
from .graphs import graph_to_dict
from .simulation import HUMAN, MACHINE, ExperimentConfig, Scenario


def _default_seed() -> int:
    return int(os.environ.get("ARGX_SEED", "0"))


def _behaviour_flag(value: str) -> dict:
    """Parse "greedy", "shallow:3", "counterfactual:5" or "unresponsive"."""
    name, _, arg = value.partition(":")
    name = name.strip().lower()
    if name == "shallow":
        return {"kind": "shallow", "max": int(arg) if arg else 1}
    if name in ("greedy", "counterfactual"):
        out: dict = {"kind": name}
        if arg:
            out["budget"] = int(arg)
        return out
    if name == "unresponsive":
        return {"kind": "unresponsive"}
    raise argparse.ArgumentTypeError(f"unknown behaviour {value!r}")


def _bias_flag(value: str) -> dict:
    """Parse "constant:0.5" or "random:-0.2" (optionally "random:-0.2:all")."""
    parts = value.split(":")
    kind = parts[0].strip().lower()
    if kind == "constant":
        return {"kind": "constant", "c": float(parts[1]) if len(parts) > 1 else 0.0}
    if kind == "random":
        out: dict = {"kind": "random", "offset": float(parts[1]) if len(parts) > 1 else 0.0}
        if len(parts) > 2 and parts[2] == "all":
            out["offset_all"] = True
        return out
    raise argparse.ArgumentTypeError(f"unknown bias policy {value!r}")


def _load_scenario(path: str) -> Scenario:
    if path == "demo":
        return demo_scenario()
    return Scenario.from_dict(json.loads(Path(path).read_text()))


def _cmd_gen(args: argparse.Namespace) -> int:
    scenario = simulation.sample_scenario((args.seed,))
    text = json.dumps(scenario.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.universal_out:
        Path(args.universal_out).write_text(
            json.dumps(graph_to_dict(scenario.universal), indent=2, sort_keys=True) + "\n"
        )
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_scenario(args.scenario)
    behaviours = {
        MACHINE: behaviour_config_from_dict({"behaviour": args.mu, "bias": args.mu_bias}),
        HUMAN: behaviour_config_from_dict({"behaviour": args.eta, "bias": args.eta_bias}),
    }
    state = new_exchange(scenario.universal.explanandum, scenario.triples)
    transcript = run_exchange(state, behaviours, Caps(args.max_timesteps), (args.seed,))
    text = transcripts.to_jsonl(transcript)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    status = transcript.header.final_status
    at = transcript.header.resolved_at
    print(f"status: {status}" + (f" at t={at}" if at is not None else ""), file=sys.stderr)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.config:
        cells = simulation.load_experiment_file(Path(args.config).read_text())
    elif args.hypothesis and args.hypothesis != "custom":
        cells = simulation.hypothesis_cells(args.hypothesis, args.runs, args.seed)
    else:
        raise ArgxError("simulate needs --hypothesis h1..h5 or --config FILE")
    results = []
    for cell in cells:
        result = simulation.run_experiment(cell, workers=args.workers, transcripts_dir=args.transcripts)
        results.append(result)
        print(
            f"{cell.name}: rr={result.row.rr:.3f} cr={result.row.cr:.2f} "
            f"pr_mu={result.row.pr_machine:.3f} ca_mu={result.row.ca_machine:.3f}",
            file=sys.stderr,
        )
    table = simulation.results_csv(results)
    if args.out:
        Path(args.out).write_text(table)
    else:
        sys.stdout.write(table)
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    transcript = transcripts.from_jsonl(Path(args.transcript).read_text())
    if args.property == "all":
        reports = analysis.check_all(transcript)
    else:
        if args.property not in analysis.ALL_PROPERTIES:
            raise ArgxError(f"unknown property {args.property!r}")
        reports = {args.property: analysis.ALL_PROPERTIES[args.property](transcript)}
    failed = False
    for name, report in reports.items():
        if not report.applicable:
            verdict = "n/a"
        elif report.holds:
            verdict = "ok"
        else:
            verdict = f"FAIL ({report.witness})"
            failed = True
        print(f"{name}: {verdict}")
    return 1 if failed else 0


def _cmd_replay(args: argparse.Namespace) -> int:
    transcript = transcripts.from_jsonl(Path(args.transcript).read_text())
    problems = transcripts.replay(transcript, args.mode)
    if problems:
        for problem in problems:
            print(problem, file=sys.stderr)
        return 1
    print("replay ok")
    return 0


def _cmd_export_dot(args: argparse.Namespace) -> int:
    transcript = transcripts.from_jsonl(Path(args.transcript).read_text())
    t = args.t if args.t is not None else len(transcript.records) - 1
    graphs = transcripts.exchange_graphs(transcript)
    if not (0 <= t < len(graphs)):
        raise ArgxError(f"timestep {t} outside 0..{len(graphs) - 1}")
    graph = graphs[t]
    contributors = transcripts.contributor_map(transcript)
    lines = ["digraph exchange {", "  rankdir=BT;"]
    for a in sorted(graph.arguments):
        shape = "doublecircle" if a == graph.explanandum else "ellipse"
        lines.append(f'  "{a}" [shape={shape}];')
    for u, v in sorted(graph.attacks):
        who, when = contributors.get((u, v), ("?", 0))
        lines.append(
            f'  "{u}" -> "{v}" [color=firebrick, style=solid, arrowhead=normal, '
            f'label="attack {who}@{when}"];'
        )
    for u, v in sorted(graph.supports):
        who, when = contributors.get((u, v), ("?", 0))
        lines.append(
            f'  "{u}" -> "{v}" [color=forestgreen, style=dashed, arrowhead=vee, '
            f'label="support {who}@{when}"];'
        )
    lines.append("}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .session import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argx", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a random scenario")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out")
    p.add_argument("--universal-out")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("run", help="run one exchange with configured behaviours")
    p.add_argument("--scenario", required=True, help="scenario JSON file, or 'demo'")
    p.add_argument("--mu", type=_behaviour_flag, default={"kind": "greedy"})
    p.add_argument("--eta", type=_behaviour_flag, default={"kind": "counterfactual"})
    p.add_argument("--mu-bias", type=_bias_flag, default={"kind": "constant", "c": 0.5})
    p.add_argument("--eta-bias", type=_bias_flag, default={"kind": "random", "offset": 0.0})
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--max-timesteps", type=int, default=Caps().max_timesteps)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("simulate", help="run an experiment grid")
    p.add_argument("--hypothesis", choices=["h1", "h2", "h3", "h4", "h5", "custom"])
    p.add_argument("--runs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--config", help="JSON file with custom experiment cells")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--transcripts", help="directory for per-run transcripts")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("check", help="run property checkers over a transcript")
    p.add_argument("--transcript", required=True)
    p.add_argument("--property", default="all")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("replay", help="re-execute a transcript and diff")
    p.add_argument("--transcript", required=True)
    p.add_argument("--mode", choices=["auto", "protocol", "behaviours"], default="auto")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("export-dot", help="render one timestep's exchange graph")
    p.add_argument("--transcript", required=True)
    p.add_argument("--t", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_export_dot)

    p = sub.add_parser("serve", help="serve the live session API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8808)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ArgxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
