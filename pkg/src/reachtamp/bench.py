"""Seeded benchmark batches: per-run rows, aggregate stats, CSV tables, dumps.

Each run generates its scenario deterministically from the seed, plans in
the requested modes with fully isolated planner state, and never aborts the
batch on per-run failures. Result tables are byte-stable across repeats
except for the planning-time column.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

from .errors import GenerationFailure
from .graph import GraphParams, dump_graph
from .ik import IKParams
from .library import dump_library
from .pipeline import MODES, PlanRequest, PlanResult, plan
from .scenarios import generate_scenario, normalize_kind
from .trajopt import OptParams, dump_trajectory

CSV_COLUMNS = ("seed", "mode", "success", "planning_time", "path_length", "steps", "failure_reason")

# desk-scale defaults: small graphs keep full batches fast while every
# instance still solves; override with --nodes for larger graphs
BENCH_NODES = 60
BENCH_KNN = 6
BENCH_STEPS_PER_PHASE = 16


@dataclass
class BenchConfig:
    kind: str
    runs: int = 1
    seed_base: int = 0
    modes: tuple[str, ...] = ("reachability",)
    nodes: int = BENCH_NODES
    knn: int = BENCH_KNN
    steps_per_phase: int = BENCH_STEPS_PER_PHASE
    timeout: float = 120.0
    dump_graph: bool = False
    dump_library: bool = False
    dump_traj: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        self.kind = normalize_kind(self.kind)
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}")


@dataclass
class BenchResult:
    rows: list[dict]
    aggregates: list[dict]
    csv_text: str
    dumps: dict = field(default_factory=dict)


def bench_graph_params(nodes: int = BENCH_NODES, knn: int = BENCH_KNN, rng_seed: int = 0) -> GraphParams:
    return GraphParams(
        n_nodes=nodes, k=knn, rng_seed=rng_seed, ik=IKParams(restart_count=6, max_iterations=100)
    )


def bench_opt_params(steps_per_phase: int = BENCH_STEPS_PER_PHASE) -> OptParams:
    return OptParams(steps_per_phase=steps_per_phase, max_iterations=120)


def run_single(
    scenario: dict,
    mode: str,
    seed: int,
    nodes: int = BENCH_NODES,
    knn: int = BENCH_KNN,
    steps_per_phase: int = BENCH_STEPS_PER_PHASE,
    timeout: float = 120.0,
) -> PlanResult:
    request = PlanRequest(
        scenario=scenario,
        mode=mode,
        graph_seed=seed,
        instance_seed=seed,
        graph_params=bench_graph_params(nodes, knn, seed),
        opt_params=bench_opt_params(steps_per_phase),
        timeout=timeout,
    )
    return plan(request)


def _row(seed: int, mode: str, result: PlanResult | None, failure: str | None = None) -> dict:
    if result is None:
        return {
            "seed": seed,
            "mode": mode,
            "success": False,
            "planning_time": 0.0,
            "path_length": 0.0,
            "steps": 0,
            "failure_reason": failure or "GenerationFailure",
        }
    return {
        "seed": seed,
        "mode": mode,
        "success": bool(result.success),
        "planning_time": result.planning_time,
        "path_length": result.base_path_length,
        "steps": result.step_count,
        "failure_reason": result.failure_reason or "",
    }


def _aggregate(rows: list[dict], mode: str) -> dict:
    mine = [r for r in rows if r["mode"] == mode]
    wins = [r for r in mine if r["success"]]
    n = len(mine)
    return {
        "mode": mode,
        "runs": n,
        "success_pct": 100.0 * len(wins) / n if n else 0.0,
        "mean_planning_time": sum(r["planning_time"] for r in wins) / len(wins) if wins else 0.0,
        "mean_path_length": sum(r["path_length"] for r in wins) / len(wins) if wins else 0.0,
        "mean_steps": sum(r["steps"] for r in wins) / len(wins) if wins else 0.0,
    }


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def render_csv(rows: list[dict], aggregates: list[dict]) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in rows:
        out.write(",".join(_fmt(r[c]) for c in CSV_COLUMNS) + "\n")
    for a in aggregates:
        out.write(
            ",".join(
                [
                    "aggregate",
                    a["mode"],
                    _fmt(a["success_pct"]),
                    _fmt(a["mean_planning_time"]),
                    _fmt(a["mean_path_length"]),
                    _fmt(a["mean_steps"]),
                    f"runs={a['runs']}",
                ]
            )
            + "\n"
        )
    return out.getvalue()


def run_batch(config: BenchConfig) -> BenchResult:
    """Run the configured suite; failures are recorded, never fatal."""
    rows: list[dict] = []
    dumps: dict = {}
    for seed in range(config.seed_base, config.seed_base + config.runs):
        try:
            scenario = generate_scenario(config.kind, seed)
        except GenerationFailure as exc:
            for mode in config.modes:
                rows.append(_row(seed, mode, None, failure=str(exc)))
            continue
        for mode in config.modes:
            result = run_single(
                scenario,
                mode,
                seed,
                nodes=config.nodes,
                knn=config.knn,
                steps_per_phase=config.steps_per_phase,
                timeout=config.timeout,
            )
            rows.append(_row(seed, mode, result))
            if seed == config.seed_base:
                _collect_dumps(config, mode, result, dumps)
    aggregates = [_aggregate(rows, mode) for mode in config.modes]
    return BenchResult(rows=rows, aggregates=aggregates, csv_text=render_csv(rows, aggregates), dumps=dumps)


def _collect_dumps(config: BenchConfig, mode: str, result: PlanResult, dumps: dict) -> None:
    if config.dump_graph and result.graph is not None:
        dumps[f"graph_{mode}"] = dump_graph(result.graph)
    if config.dump_library and result.library is not None:
        dumps[f"library_{mode}"] = dump_library(result.library)
    if config.dump_traj and result.trajectory is not None:
        dumps[f"traj_{mode}"] = dump_trajectory(result.trajectory)
