"""Command-line front end: a thin HTTP client for the planning service.

Subcommands `gen`, `plan`, `bench`, and `dump` talk to the service API; by
default an in-process ASGI transport is used so no server needs to be
running, and `--server URL` targets a remote instance instead. `serve`
starts the service under uvicorn.

Exit codes: 0 all runs executed, 2 configuration error, 3 generation
failure. The output directory defaults to `.`, overridable with `--out-dir`
or the REACHTAMP_OUT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3

OUT_DIR_ENV = "REACHTAMP_OUT"


def _client(args):
    if getattr(args, "server", None):
        return httpx.Client(base_url=args.server, timeout=None)
    # in-process ASGI transport: the CLI stays a pure HTTP client but needs
    # no running server
    from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


def _out_dir(args) -> Path:
    out = getattr(args, "out_dir", None) or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _post(client: httpx.Client, route: str, payload: dict):
    resp = client.post(route, json=payload)
    body = resp.json()
    if resp.status_code != 200:
        error = body.get("error", "ConfigError")
        code = EXIT_GENERATION if error == "GenerationFailure" else EXIT_CONFIG
        return None, _fail(code, f"{error}: {body.get('detail', resp.text)}")
    return body, EXIT_OK


def _load_scenario_arg(args) -> dict | None:
    path = Path(args.scenario)
    if not path.exists():
        return None
    return json.loads(path.read_text())


def cmd_gen(args) -> int:
    with _client(args) as client:
        body, code = _post(client, "/scenario/generate", {"kind": args.scenario, "seed": args.seed})
        if body is None:
            return code
    out = Path(args.out) if args.out else _out_dir(args) / f"{args.scenario}_{args.seed:04d}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(body["scenario"], indent=2) + "\n")
    print(f"scenario written to {out}")
    return EXIT_OK


def _dump_requests(args) -> list[tuple[str, Path]]:
    pairs = []
    for kind, flag in (("graph", args.dump_graph), ("library", args.dump_library), ("traj", args.dump_traj)):
        if flag:
            pairs.append((kind, Path(flag)))
    return pairs


def cmd_plan(args) -> int:
    scenario = _load_scenario_arg(args)
    if scenario is None:
        return _fail(EXIT_CONFIG, f"scenario file not found: {args.scenario}")
    dumps = _dump_requests(args)
    payload = {
        "scenario": scenario,
        "mode": args.mode,
        "graph_seed": args.seed,
        "instance_seed": args.seed,
        "timeout": args.timeout,
        "dumps": [kind for kind, _ in dumps],
    }
    if args.nodes:
        payload["nodes"] = args.nodes
    if args.knn:
        payload["knn"] = args.knn
    with _client(args) as client:
        body, code = _post(client, "/plan", payload)
        if body is None:
            return code
    for kind, path in dumps:
        content = body["dumps"].get(kind)
        if content is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content)
            print(f"{kind} dump written to {path}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps({k: v for k, v in body.items() if k != "dumps"}, indent=2) + "\n")
    status = "success" if body["success"] else f"failure ({body['failure_reason']})"
    print(
        f"plan {status}: {body['steps']} steps, base path {body['base_path_length']:.2f} m, "
        f"{body['planning_time']:.1f} s"
    )
    if body["actions"]:
        print("actions: " + ", ".join(body["actions"]))
    return EXIT_OK


def cmd_bench(args) -> int:
    payload = {
        "kind": args.scenario,
        "runs": args.runs,
        "seed_base": args.seed,
        "modes": args.mode,
        "timeout": args.timeout,
        "dump_graph": bool(args.dump_graph),
        "dump_library": bool(args.dump_library),
        "dump_traj": bool(args.dump_traj),
    }
    if args.nodes:
        payload["nodes"] = args.nodes
    if args.knn:
        payload["knn"] = args.knn
    with _client(args) as client:
        body, code = _post(client, "/bench", payload)
        if body is None:
            return code
    out = Path(args.out) if args.out else _out_dir(args) / f"bench_{args.scenario}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(body["csv"])
    print(f"results written to {out}")
    for kind, flag in (("graph", args.dump_graph), ("library", args.dump_library), ("traj", args.dump_traj)):
        if flag:
            for name, content in body["dumps"].items():
                if name.startswith(kind):
                    path = Path(flag) if len(body["dumps"]) == 1 else Path(flag).with_suffix(f".{name}.txt")
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(content)
                    print(f"{name} dump written to {path}")
    for agg in body["aggregates"]:
        print(
            f"{agg['mode']}: {agg['success_pct']:.1f}% success over {agg['runs']} runs, "
            f"mean time {agg['mean_planning_time']:.1f} s, mean length {agg['mean_path_length']:.2f} m, "
            f"mean steps {agg['mean_steps']:.1f}"
        )
    return EXIT_OK


def cmd_dump(args) -> int:
    scenario = _load_scenario_arg(args)
    if scenario is None:
        return _fail(EXIT_CONFIG, f"scenario file not found: {args.scenario}")
    payload = {
        "kind": args.kind,
        "scenario": scenario,
        "mode": args.mode,
        "graph_seed": args.seed,
        "timeout": args.timeout,
    }
    if args.nodes:
        payload["nodes"] = args.nodes
    if args.knn:
        payload["knn"] = args.knn
    with _client(args) as client:
        body, code = _post(client, "/dump", payload)
        if body is None:
            return code
    out = Path(args.out) if args.out else _out_dir(args) / f"{args.kind}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(body["content"])
    print(f"{args.kind} dump written to {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, scenario_help: str):
    p.add_argument("--scenario", required=True, help=scenario_help)
    p.add_argument("--seed", type=int, default=0, help="random seed (graph and instance)")
    p.add_argument("--nodes", type=int, default=0, help="graph node count override")
    p.add_argument("--knn", type=int, default=0, help="graph neighbour count override")
    p.add_argument("--timeout", type=float, default=120.0, help="per-instance budget in seconds")
    p.add_argument("--out", help="output file path")
    p.add_argument("--out-dir", help=f"output directory (or ${OUT_DIR_ENV})")
    p.add_argument("--server", help="remote service URL (default: in-process)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reachtamp", description="reachability-guided TAMP benchmark CLI")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a benchmark scenario file")
    _add_common(p_gen, "scenario kind (pick_place | sorting | sorting_far | table_clearing)")

    p_plan = sub.add_parser("plan", help="plan one scenario instance")
    _add_common(p_plan, "path to a scenario JSON file")
    p_plan.add_argument("--mode", default="reachability", choices=("reachability", "euclidean"))
    p_plan.add_argument("--dump-graph", help="write the post-planning graph dump to this path")
    p_plan.add_argument("--dump-library", help="write the solution-library dump to this path")
    p_plan.add_argument("--dump-traj", help="write the trajectory dump to this path")

    p_bench = sub.add_parser("bench", help="run a seeded benchmark batch")
    _add_common(p_bench, "scenario kind (pick_place | sorting | sorting_far | table_clearing)")
    p_bench.add_argument("--runs", type=int, default=1)
    p_bench.add_argument(
        "--mode", action="append", default=None, choices=("reachability", "euclidean"),
        help="mode(s) to run; repeat for both",
    )
    p_bench.add_argument("--dump-graph", help="dump path for the first run's graph")
    p_bench.add_argument("--dump-library", help="dump path for the first run's library")
    p_bench.add_argument("--dump-traj", help="dump path for the first run's trajectory")

    p_dump = sub.add_parser("dump", help="produce a single dump file for a scenario")
    p_dump.add_argument("kind", choices=("graph", "library", "traj"))
    _add_common(p_dump, "path to a scenario JSON file")
    p_dump.add_argument("--mode", default="reachability", choices=("reachability", "euclidean"))

    p_serve = sub.add_parser("serve", help="run the planning service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if args.command == "bench" and args.mode is None:
        args.mode = ["reachability"]
    handlers = {
        "gen": cmd_gen,
        "plan": cmd_plan,
        "bench": cmd_bench,
        "dump": cmd_dump,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
