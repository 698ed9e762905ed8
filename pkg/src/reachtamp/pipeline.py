"""End-to-end planning: symbolic best-first search steered by the
reachability graph, keyframe optimization, and guided full-path
optimization, with world-state bookkeeping between kinematic switches.

The graph is constructed once per scenario and shared by every heuristic
query and guidance lookup of that planning run; candidate action sequences
whose keyframes or trajectories fail are pruned and the search continues.
The euclidean baseline mode replaces the heuristic with straight-line
distance and the guidance with straight-line interpolation, never building
a graph.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import EmptyFrontier, Infeasible, IntegrityViolation, NoPath
from .graph import GraphParams, ReachabilityGraph, construct_graph
from .library import SolutionLibrary, get_waypoints, heuristic_cost
from .model import Configuration, forward_kinematics
from .scenario import Scenario, load_scenario
from .symbolic import Domain, Frontier, GeomState, SearchNode, best_first_step, build_domain, expand, goal_test, replay_plan
from .trajopt import (
    OptParams,
    PhaseContext,
    Switch,
    Trajectory,
    base_path_length,
    path_optimization,
    switch_optimization,
    verify_trajectory,
)
from .world import AttachmentState, World

MODES = ("reachability", "euclidean")


@dataclass
class PlanRequest:
    scenario: Scenario | dict | str | Path
    mode: str = "reachability"
    graph_seed: int = 0
    instance_seed: int = 0
    graph_params: GraphParams | None = None
    opt_params: OptParams | None = None
    timeout: float = 120.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class PlanResult:
    success: bool
    actions: list[str]
    trajectory: Trajectory | None
    planning_time: float
    base_path_length: float
    step_count: int
    failure_reason: str | None = None
    stats: dict = field(default_factory=dict)
    # verification context, kept for independent rechecks
    contexts: list[PhaseContext] = field(default_factory=list)
    domain: Domain | None = None
    goal: frozenset = frozenset()
    operators: tuple = ()
    graph: ReachabilityGraph | None = None
    library: SolutionLibrary | None = None
    model: object = None


def _world_from(world0: World, gs: GeomState) -> tuple[World, AttachmentState | None]:
    """World snapshot for a geometric state; the held object becomes an attachment."""
    w = world0.copy()
    for m in w.movables:
        if m.id in gs.object_centers:
            m.center = gs.object_centers[m.id].copy()
    if w.drawer is not None:
        w.drawer.extension = gs.drawer_extension
    attach = None
    if gs.held is not None:
        rec = w.remove_movable(gs.held)
        attach = AttachmentState(held=rec, grasp_offset=np.eye(4))
    return w, attach


def _build_switches(world0: World, domain: Domain, node: SearchNode) -> list[Switch]:
    gs = GeomState.from_world(world0)
    atoms = domain.initial_atoms
    switches = []
    for op, target in zip(node.actions, node.switch_points[1:]):
        phase_world, phase_attach = _world_from(world0, gs)
        ignore: tuple[str, ...] = ()
        if op.attachment and op.attachment[0] == "drawer":
            contained = tuple(a[1] for a in atoms if a[0] == "in" and len(a) == 3 and a[2] == "drawer")
            ignore = ("drawer",) + contained
        atoms_next = op.apply(atoms)
        gs_next = op.advance_geometry(gs, atoms_next)
        if op.attachment and op.attachment[0] == "drawer":
            kf_world, kf_attach = _world_from(world0, gs_next)
        else:
            kf_world, kf_attach = phase_world, phase_attach
        switches.append(
            Switch(
                name=op.signature,
                target=np.asarray(target, dtype=float),
                constraint=op.mode_constraint,
                keyframe_world=kf_world,
                keyframe_attach=kf_attach,
                phase=PhaseContext(phase_world, phase_attach, ignore),
                attachment=op.attachment,
            )
        )
        atoms, gs = atoms_next, gs_next
    return switches


def plan(request: PlanRequest) -> PlanResult:
    """Run the full planning pipeline for one scenario instance."""
    t0 = time.monotonic()
    scenario = request.scenario
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    model = scenario.model
    world0 = scenario.world.copy()
    domain = build_domain(scenario.domain, world0)
    goal = scenario.goal
    gp = replace(request.graph_params or GraphParams(), rng_seed=request.graph_seed)
    op_params = request.opt_params or OptParams()
    q_start = scenario.start
    ee_start, _ = forward_kinematics(model, q_start)
    rng = np.random.default_rng(request.instance_seed)

    stats = {"graph_builds": 0, "candidates_tried": 0, "expansions": 0, "first_candidate": None}

    def fail(reason: str) -> PlanResult:
        return PlanResult(
            success=False,
            actions=[],
            trajectory=None,
            planning_time=time.monotonic() - t0,
            base_path_length=0.0,
            step_count=0,
            failure_reason=reason,
            stats=stats,
            domain=domain,
            goal=goal,
        )

    graph = None
    lib = None
    # graphs are cached per static-geometry state: opening the drawer changes
    # the world, and a phase that manipulates the drawer sees it as attached
    # (absent), so each combination gets its own graph and library
    graph_cache: dict[tuple, tuple] = {}

    def graph_for_phase(ext: float, drawer_ignored: bool):
        key = (round(ext, 6), drawer_ignored)
        if key not in graph_cache:
            w = world0.copy()
            if w.drawer is not None:
                w.drawer.extension = ext
                if drawer_ignored:
                    w.drawer = None
            seed_offset = int(round(ext * 1000)) + (500000 if drawer_ignored else 0)
            g = construct_graph(w, model, replace(gp, rng_seed=gp.rng_seed + seed_offset))
            stats["graph_builds"] += 1
            graph_cache[key] = (g, SolutionLibrary(), w)
        return graph_cache[key]

    if request.mode == "reachability":
        graph, lib, _ = graph_for_phase(world0.drawer.extension if world0.drawer else 0.0, False)

        def heuristic(a, b):
            return heuristic_cost(lib, graph, a, b, model, world0, gp)

    else:

        def heuristic(a, b):
            return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))

    frontier = Frontier()
    frontier.push(SearchNode(domain.initial_atoms, (), 0.0, [ee_start], GeomState.from_world(world0)))
    # tree search without a closed set: a sequence pruned for trajectory
    # infeasibility must not take alternative orderings down with it
    max_expansions = 5000

    while True:
        if time.monotonic() - t0 > request.timeout:
            return fail("Timeout")
        try:
            node = best_first_step(frontier)
        except EmptyFrontier:
            return fail("NoPlan")
        if goal_test(node.state, goal):
            stats["candidates_tried"] += 1
            sigs = [o.signature for o in node.actions]
            if stats["first_candidate"] is None:
                stats["first_candidate"] = sigs
            switches = _build_switches(world0, domain, node)
            contexts = [sw.phase for sw in switches]
            try:
                keyframes = switch_optimization(
                    switches,
                    graph,
                    model,
                    gp.ik,
                    restart_seeds=[int(rng.integers(2**31)) for _ in switches],
                )
            except Infeasible:
                continue
            if request.mode == "reachability":
                boundary = [q_start] + list(keyframes)
                try:
                    guidance = []
                    for i, (a, b) in enumerate(zip(node.switch_points, node.switch_points[1:])):
                        ctx = contexts[i]
                        ext = ctx.world.drawer.extension if ctx.world.drawer else 0.0
                        g_i, lib_i, w_i = graph_for_phase(ext, "drawer" in ctx.ignore_ids)
                        guidance.append(
                            get_waypoints(
                                lib_i, g_i, a, b, model, w_i, gp,
                                anchors=(boundary[i], boundary[i + 1]),
                            )
                        )
                except NoPath:
                    continue
            else:
                guidance = [None] * len(switches)
            if time.monotonic() - t0 > request.timeout:
                return fail("Timeout")
            try:
                traj = path_optimization(keyframes, guidance, contexts, model, op_params, q_start)
            except Infeasible:
                continue
            return PlanResult(
                success=True,
                actions=sigs,
                trajectory=traj,
                planning_time=time.monotonic() - t0,
                base_path_length=base_path_length(traj),
                step_count=len(sigs),
                failure_reason=None,
                stats=stats,
                contexts=contexts,
                domain=domain,
                goal=goal,
                operators=node.actions,
                graph=graph,
                library=lib,
                model=model,
            )
        stats["expansions"] += 1
        if stats["expansions"] > max_expansions:
            return fail("NoPlan")
        for succ in expand(node, domain.operators, heuristic):
            frontier.push(succ)


def compute_metrics(result: PlanResult, oracle_recheck: bool = True) -> dict:
    """Recompute result metrics; raises IntegrityViolation on any mismatch."""
    if not result.success:
        return {
            "success": False,
            "planning_time": result.planning_time,
            "base_path_length": result.base_path_length,
            "steps": result.step_count,
            "failure_reason": result.failure_reason,
        }
    if result.trajectory is None:
        raise IntegrityViolation("success-flagged result carries no trajectory")
    recomputed_length = base_path_length(result.trajectory)
    if abs(recomputed_length - result.base_path_length) > 1e-9:
        raise IntegrityViolation(
            f"stored path length {result.base_path_length} != recomputed {recomputed_length}"
        )
    if result.step_count != len(result.actions):
        raise IntegrityViolation("step count disagrees with the action sequence")
    if oracle_recheck:
        if result.domain is not None and result.operators:
            if not replay_plan(result.domain, result.operators, result.goal):
                raise IntegrityViolation("action sequence does not reach the goal on replay")
        if result.contexts and result.model is not None:
            if not verify_trajectory(result.trajectory.phases, result.contexts, result.model, 10):
                raise IntegrityViolation("trajectory failed independent feasibility re-verification")
    return {
        "success": True,
        "planning_time": result.planning_time,
        "base_path_length": recomputed_length,
        "steps": result.step_count,
        "failure_reason": None,
    }
