"""FastAPI service exposing scenario generation, planning, benchmarks, dumps.

The planner core is stateless per request; clients (including the bundled
CLI) talk to these endpoints only.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..bench import BENCH_KNN, BENCH_NODES, BENCH_STEPS_PER_PHASE, BenchConfig, run_batch, run_single
from ..errors import GenerationFailure, ScenarioFormatError
from ..graph import dump_graph
from ..library import dump_library
from ..pipeline import MODES, PlanResult
from ..scenario import load_scenario
from ..scenarios import generate_scenario, scenario_kinds
from ..trajopt import dump_trajectory
from .schemas import (
    BenchRequestModel,
    BenchResponseModel,
    DumpRequestModel,
    DumpResponseModel,
    GenerateRequest,
    GenerateResponse,
    PlanRequestModel,
    PlanResponseModel,
)

DUMP_KINDS = ("graph", "library", "traj")


def _error(status: int, error: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail})


def _result_dumps(result: PlanResult, kinds: list[str]) -> dict[str, str]:
    out = {}
    for kind in kinds:
        if kind == "graph" and result.graph is not None:
            out["graph"] = dump_graph(result.graph)
        elif kind == "library" and result.library is not None:
            out["library"] = dump_library(result.library)
        elif kind == "traj" and result.trajectory is not None:
            out["traj"] = dump_trajectory(result.trajectory)
    return out


def create_app() -> FastAPI:
    app = FastAPI(title="reachtamp planning service", version=__version__)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__, "kinds": list(scenario_kinds())}

    @app.post("/scenario/generate", response_model=GenerateResponse)
    def scenario_generate(req: GenerateRequest):
        try:
            raw = generate_scenario(req.kind, req.seed)
        except ScenarioFormatError as exc:
            return _error(400, "ConfigError", str(exc))
        except GenerationFailure as exc:
            return _error(422, "GenerationFailure", str(exc))
        return {"scenario": raw}

    @app.post("/plan", response_model=PlanResponseModel)
    def plan_endpoint(req: PlanRequestModel):
        if req.mode not in MODES:
            return _error(400, "ConfigError", f"unknown mode {req.mode!r}")
        for kind in req.dumps:
            if kind not in DUMP_KINDS:
                return _error(400, "ConfigError", f"unknown dump kind {kind!r}")
        try:
            scenario = load_scenario(req.scenario)
        except ScenarioFormatError as exc:
            return _error(400, "ConfigError", str(exc))
        result = run_single(
            req.scenario,
            req.mode,
            seed=req.graph_seed,
            nodes=req.nodes or BENCH_NODES,
            knn=req.knn or BENCH_KNN,
            steps_per_phase=req.steps_per_phase or BENCH_STEPS_PER_PHASE,
            timeout=req.timeout,
        )
        return PlanResponseModel(
            success=result.success,
            actions=result.actions,
            planning_time=result.planning_time,
            base_path_length=result.base_path_length,
            steps=result.step_count,
            failure_reason=result.failure_reason,
            stats={k: v for k, v in result.stats.items() if k != "first_candidate"}
            | {"first_candidate": result.stats.get("first_candidate")},
            dumps=_result_dumps(result, req.dumps),
        )

    @app.post("/bench", response_model=BenchResponseModel)
    def bench_endpoint(req: BenchRequestModel):
        try:
            config = BenchConfig(
                kind=req.kind,
                runs=req.runs,
                seed_base=req.seed_base,
                modes=tuple(req.modes),
                nodes=req.nodes or BENCH_NODES,
                knn=req.knn or BENCH_KNN,
                steps_per_phase=req.steps_per_phase or BENCH_STEPS_PER_PHASE,
                timeout=req.timeout,
                dump_graph=req.dump_graph,
                dump_library=req.dump_library,
                dump_traj=req.dump_traj,
            )
        except (ValueError, ScenarioFormatError) as exc:
            return _error(400, "ConfigError", str(exc))
        result = run_batch(config)
        return BenchResponseModel(
            rows=result.rows, aggregates=result.aggregates, csv=result.csv_text, dumps=result.dumps
        )

    @app.post("/dump", response_model=DumpResponseModel)
    def dump_endpoint(req: DumpRequestModel):
        if req.kind not in DUMP_KINDS:
            return _error(400, "ConfigError", f"unknown dump kind {req.kind!r}")
        if req.mode not in MODES:
            return _error(400, "ConfigError", f"unknown mode {req.mode!r}")
        if req.kind in ("graph", "library") and req.mode == "euclidean":
            return _error(400, "ConfigError", "euclidean mode never builds a graph or library")
        try:
            load_scenario(req.scenario)
        except ScenarioFormatError as exc:
            return _error(400, "ConfigError", str(exc))
        result = run_single(
            req.scenario,
            req.mode,
            seed=req.graph_seed,
            nodes=req.nodes or BENCH_NODES,
            knn=req.knn or BENCH_KNN,
            timeout=req.timeout,
        )
        content = _result_dumps(result, [req.kind]).get(req.kind)
        if content is None:
            return _error(422, "DumpUnavailable", f"no {req.kind} produced (failure: {result.failure_reason})")
        return DumpResponseModel(kind=req.kind, content=content)

    return app


app = create_app()
