"""Keyframe and full-path trajectory optimization.

Keyframes solve each kinematic switch with constrained IK, warm-started
from the nearest reachability-graph node. The full path is a direct
transcription over stacked phase trajectories: penalty-method gradient
descent with backtracking line search on smoothness, guidance-tracking and
collision terms, with phase boundaries pinned to the keyframes. A returned
trajectory always passed post-hoc verification: every consecutive pair is
re-checked collision- and limit-free at the configured resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, NoSolution, PreconditionRejected
from .geometry import ang_diff
from .ik import IKParams, OrientationConstraint, solve_constrained_ik
from .model import Configuration, RobotModel
from .symbolic import GraspSpec
from .world import AttachmentState, World, edge_collision_free, penetration_batch

# step-limit cap for a returned trajectory (meters of base travel per
# discrete step); interpolated collision checks still cover each step
MAX_BASE_STEP = 0.9
_FD_STEP = 1e-4


@dataclass
class OptParams:
    steps_per_phase: int = 20
    smoothness_weight: float = 1.0
    guidance_weight: float = 0.5
    collision_penalty_weight: float = 50.0
    max_iterations: int = 150
    verify_L: int = 10
    collision_margin: float = 0.02

    def __post_init__(self):
        if self.steps_per_phase < 2:
            raise ValueError("steps_per_phase must be at least 2")
        if min(self.smoothness_weight, self.guidance_weight, self.collision_penalty_weight) < 0:
            raise ValueError("objective weights must be non-negative")


@dataclass
class PhaseContext:
    """Collision context while the robot moves toward one kinematic switch."""

    world: World
    attach: AttachmentState | None = None
    ignore_ids: tuple[str, ...] = ()


@dataclass
class Switch:
    """One kinematic switch: target point, grasp constraint, and contexts."""

    name: str
    target: np.ndarray
    constraint: GraspSpec | None
    keyframe_world: World
    keyframe_attach: AttachmentState | None
    phase: PhaseContext
    keyframe_ignore_ids: tuple[str, ...] = ()
    attachment: tuple | None = None  # symbolic tag: ("grab", o) | ("release", o) | ...


@dataclass
class Trajectory:
    phases: list[list[Configuration]]
    phase_attachments: list[AttachmentState | None]
    objective: float

    def all_configs(self) -> list[Configuration]:
        out: list[Configuration] = []
        for phase in self.phases:
            out.extend(phase)
        return out


def _constraint_of(spec: GraspSpec | None) -> OrientationConstraint | None:
    if spec is None:
        return None
    return OrientationConstraint(np.asarray(spec.axis, dtype=float), spec.tolerance)


# keyframes stay within this base box around their warm-start seed when possible,
# so guidance paths and keyframes agree on which side of the furniture to stand
KEYFRAME_BASE_TRUST = 0.3


def switch_optimization(
    switches: list[Switch],
    graph,
    model: RobotModel,
    ik_params: IKParams,
    restart_seeds: list[int] | None = None,
) -> list[Configuration]:
    """Solve every switch keyframe in sequence; Infeasible names the first failure."""
    keyframes: list[Configuration] = []
    for i, sw in enumerate(switches):
        seed_q = None
        if graph is not None and graph.nodes:
            seed_q = graph.nodes[graph.nearest(sw.target, 1)[0]].q
        elif keyframes:
            seed_q = keyframes[-1]
        seed_int = restart_seeds[i] if restart_seeds is not None else i
        attempts = []
        if seed_q is not None:
            r = KEYFRAME_BASE_TRUST
            attempts.append(((seed_q.base_x - r, seed_q.base_y - r), (seed_q.base_x + r, seed_q.base_y + r)))
        attempts.append(None)
        q = None
        last_exc = None
        for base_bounds in attempts:
            try:
                q = solve_constrained_ik(
                    sw.target,
                    _constraint_of(sw.constraint),
                    model,
                    sw.keyframe_world,
                    sw.keyframe_attach,
                    ik_params,
                    seed=seed_q,
                    restart_seed=seed_int,
                    base_bounds=base_bounds,
                    ignore_ids=sw.keyframe_ignore_ids,
                )
                break
            except (NoSolution, PreconditionRejected) as exc:
                last_exc = exc
        if q is None:
            raise Infeasible(f"switch {i} ({sw.name}) unsolvable: {last_exc}", switch_index=i) from last_exc
        keyframes.append(q)
        if sw.attachment is not None and sw.attachment[0] == "grab":
            _bind_grasp_offset(switches[i + 1 :], sw.attachment[1], sw.target, q, model)
    return keyframes


def _bind_grasp_offset(later: list[Switch], obj_id: str, rest_center, kf: Configuration, model) -> None:
    """Anchor the held object exactly at its grasp-time pose relative to the ee.

    Without this, the IK position tolerance would let carried objects sink
    a millimetre into their support at the grasp keyframe. The offset is a
    rigid ee-frame transform, so the world-frame residual is rotated into
    the ee frame before being stored.
    """
    from .geometry import make_transform
    from .model import forward_kinematics

    ee, frames = forward_kinematics(model, kf)
    local = frames[-1][:3, :3].T @ (np.asarray(rest_center, dtype=float) - ee)
    offset = make_transform(translation=local)
    for sw in later:
        for att in (sw.phase.attach, sw.keyframe_attach):
            if att is not None and att.held is not None and att.held.id == obj_id:
                att.grasp_offset = offset


def _unwrap_path(arrays: list[np.ndarray]) -> np.ndarray:
    """Stack configs with the yaw column lifted to a continuous branch."""
    out = np.stack(arrays).astype(float)
    for t in range(1, out.shape[0]):
        out[t, 2] = out[t - 1, 2] + ang_diff(out[t, 2], out[t - 1, 2])
    return out


def _resample(path: np.ndarray, count: int) -> np.ndarray:
    """Arc-length resampling of an unwrapped config polyline to `count` points.

    The metric weights the planar base fully and the remaining coordinates
    lightly, so base travel (which dominates collision risk) ends up evenly
    spaced.
    """
    if path.shape[0] == 1:
        return np.repeat(path, count, axis=0)
    w = np.full(path.shape[1], 0.3)
    w[0] = w[1] = 1.0
    seg = np.linalg.norm(np.diff(path, axis=0) * w, axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total < 1e-12:
        return np.repeat(path[:1], count, axis=0)
    targets = np.linspace(0.0, total, count)
    out = np.empty((count, path.shape[1]))
    for k, tv in enumerate(targets):
        i = int(np.searchsorted(s, tv, side="right") - 1)
        i = min(i, path.shape[0] - 2)
        denom = max(s[i + 1] - s[i], 1e-12)
        alpha = (tv - s[i]) / denom
        out[k] = path[i] + alpha * (path[i + 1] - path[i])
    return out


def _init_phase(start: np.ndarray, end: np.ndarray, guidance, steps: int) -> np.ndarray:
    """Initial phase trajectory: resampled guidance warped onto the keyframes.

    The endpoint correction is blended in over a short window so the
    collision-free interior of the guidance path is left undisturbed.
    """
    if guidance is None or len(guidance) < 2:
        return _resample(_unwrap_path([start, end]), steps + 1)
    g = _resample(
        _unwrap_path([np.asarray(q.as_array() if isinstance(q, Configuration) else q) for q in guidance]),
        steps + 1,
    )
    window = max(3, steps // 3)
    d0, d1 = start - g[0], end - g[-1]
    for t in range(steps + 1):
        a = max(0.0, 1.0 - t / window)
        b = max(0.0, 1.0 - (steps - t) / window)
        g[t] = g[t] + a * d0 + b * d1
    # re-resample so the endpoint corrections do not compress into fast arcs
    return _resample(g, steps + 1)


def _margin_penetrations(model, Q, ctx: PhaseContext, margin: float) -> np.ndarray:
    from .ik import _inflated_penetration_batch

    if margin == 0.0:
        return penetration_batch(model, Q, ctx.world, ctx.attach, ctx.ignore_ids)
    return _inflated_penetration_batch(model, Q, ctx.world, ctx.attach, ctx.ignore_ids, margin)


_SUBSAMPLE = (0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875)


def _with_midpoints(Q: np.ndarray) -> np.ndarray:
    """Rows of Q followed by interior subsamples of each consecutive pair.

    The collision penalty sees these extra rows so that sweeps between
    discrete steps cannot dip through thin obstacles unnoticed.
    """
    if Q.shape[0] < 2:
        return Q
    parts = [Q]
    for s in _SUBSAMPLE:
        parts.append((1.0 - s) * Q[:-1] + s * Q[1:])
    return np.concatenate(parts)


def _objective(model, phases, guides, contexts, params: OptParams, margin: float) -> float:
    w_s, w_g, w_c = params.smoothness_weight, params.guidance_weight, params.collision_penalty_weight
    total = 0.0
    for Q, G, ctx in zip(phases, guides, contexts):
        d = np.diff(Q, axis=0)
        total += w_s * float(np.sum(d * d))
        if w_g > 0.0:
            dev = Q - G
            total += w_g * float(np.sum(dev * dev))
        if w_c > 0.0:
            pen = _margin_penetrations(model, _with_midpoints(Q), ctx, margin)
            total += w_c * float(np.sum(pen * pen))
    return total


def _gradient(model, phases, guides, contexts, params: OptParams, margin: float):
    w_s, w_g, w_c = params.smoothness_weight, params.guidance_weight, params.collision_penalty_weight
    grads = []
    for Q, G, ctx in zip(phases, guides, contexts):
        grad = np.zeros_like(Q)
        # smoothness: d/dq_t of sum ||q_{t+1}-q_t||^2
        grad[1:] += 2.0 * w_s * (Q[1:] - Q[:-1])
        grad[:-1] -= 2.0 * w_s * (Q[1:] - Q[:-1])
        if w_g > 0.0:
            grad += 2.0 * w_g * (Q - G)
        if w_c > 0.0:
            n = Q.shape[0]
            ext = _with_midpoints(Q)
            pen = _margin_penetrations(model, ext, ctx, margin)
            active = np.nonzero(pen > 0.0)[0]
            if active.size:
                dim = Q.shape[1]
                probes = []
                for t in active:
                    block = np.repeat(ext[t][None, :], 2 * dim, axis=0)
                    for i in range(dim):
                        block[2 * i, i] += _FD_STEP
                        block[2 * i + 1, i] -= _FD_STEP
                    probes.append(block)
                vals = _margin_penetrations(model, np.concatenate(probes), ctx, margin)
                vals = vals.reshape(active.size, 2 * dim)
                dpen = (vals[:, 0::2] - vals[:, 1::2]) / (2.0 * _FD_STEP)
                contrib = 2.0 * w_c * pen[active, None] * dpen
                for row, t in enumerate(active):
                    if t < n:
                        grad[t] += contrib[row]
                    else:
                        # subsample between k and k+1 at parameter s: chain rule
                        block, idx = divmod(t - n, n - 1)
                        s = _SUBSAMPLE[block]
                        grad[idx] += (1.0 - s) * contrib[row]
                        grad[idx + 1] += s * contrib[row]
        # boundaries are pinned
        grad[0] = 0.0
        grad[-1] = 0.0
        grads.append(grad)
    return grads


def verify_trajectory(traj_phases, contexts, model: RobotModel, L: int) -> bool:
    """Independent feasibility re-check of a phased trajectory."""
    for phase, ctx in zip(traj_phases, contexts):
        for q1, q2 in zip(phase, phase[1:]):
            a1, a2 = q1.as_array(), q2.as_array()
            if float(np.hypot(*(a2[:2] - a1[:2]))) > MAX_BASE_STEP:
                return False
            if not edge_collision_free(model, q1, q2, ctx.world, ctx.attach, L, ignore_ids=ctx.ignore_ids):
                return False
    return True


def path_optimization(
    keyframes: list[Configuration],
    guidance: list,
    contexts: list[PhaseContext],
    model: RobotModel,
    params: OptParams,
    q_start: Configuration,
) -> Trajectory:
    """Optimize the stacked phase trajectories between consecutive keyframes.

    `guidance` holds one waypoint sequence (or None for straight-line
    initialization) per phase. Raises Infeasible when no verified
    trajectory emerges within the iteration budget.
    """
    T = len(keyframes)
    if not (len(guidance) == len(contexts) == T):
        raise ValueError("need one guidance sequence and context per phase")
    steps = params.steps_per_phase

    boundary = [q_start] + list(keyframes)
    bounds_arr = _unwrap_path([q.as_array() for q in boundary])
    lo, hi = model.arm_lower, model.arm_upper

    def clamp(Q: np.ndarray) -> np.ndarray:
        Q[:, 3:] = np.clip(Q[:, 3:], lo, hi)
        return Q

    phases = []
    for i in range(T):
        phases.append(clamp(_init_phase(bounds_arr[i], bounds_arr[i + 1], guidance[i], steps)))
    guides = [p.copy() for p in phases]

    # the reported objective uses the same margin-buffered penetration the
    # descent minimizes, so the returned value is monotone w.r.t. the
    # initial guess by construction
    init_reported = _objective(model, phases, guides, contexts, params, params.collision_margin)

    def descend(current, margin, iterations):
        f = _objective(model, current, guides, contexts, params, margin)
        alpha = 1e-2
        stall = 0
        for it in range(iterations):
            grads = _gradient(model, current, guides, contexts, params, margin)
            gnorm2 = sum(float(np.sum(g * g)) for g in grads)
            if gnorm2 < 1e-16:
                break
            accepted = False
            for _ in range(12):
                trial = [clamp(p - alpha * g) for p, g in zip(current, grads)]
                step2 = sum(float(np.sum((t - p) ** 2)) for t, p in zip(trial, current))
                if step2 < 1e-18:
                    break
                f_new = _objective(model, trial, guides, contexts, params, margin)
                if f_new <= f - 1e-4 * step2 / alpha:
                    current, f = trial, f_new
                    alpha = min(alpha * 1.3, 0.1)
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            if it >= 10 and it % 5 == 0:
                clear = all(
                    not np.any(_margin_penetrations(model, Q, ctx, margin) > 0.0)
                    for Q, ctx in zip(current, contexts)
                )
                if clear and stall >= 1:
                    break
                stall = stall + 1 if clear else 0
        return current

    phases = descend(phases, params.collision_margin, params.max_iterations)
    traj = _verified_trajectory(phases, guides, contexts, model, params, init_reported)
    if traj is not None:
        return traj
    # escalation ladder: residual swept-volume dips usually clear when the
    # penalty margin widens
    for factor in (1.5, 2.5):
        phases = descend(phases, factor * params.collision_margin, max(params.max_iterations // 2, 30))
        traj = _verified_trajectory(phases, guides, contexts, model, params, init_reported)
        if traj is not None:
            return traj
    traj = _verified_trajectory(guides, guides, contexts, model, params, init_reported)
    if traj is not None:
        return traj
    raise Infeasible("full-path optimization failed post-hoc verification")


def _verified_trajectory(arrs, guides, contexts, model, params, init_reported) -> Trajectory | None:
    reported = _objective(model, arrs, guides, contexts, params, params.collision_margin)
    if reported > init_reported + 1e-9:
        return None
    traj_phases = [[Configuration(row) for row in Q] for Q in arrs]
    if not verify_trajectory(traj_phases, contexts, model, params.verify_L):
        return None
    return Trajectory(
        phases=traj_phases,
        phase_attachments=[ctx.attach for ctx in contexts],
        objective=float(reported),
    )


def base_path_length(traj: Trajectory) -> float:
    """Total planar base travel along the trajectory, in meters."""
    configs = traj.all_configs()
    total = 0.0
    for q1, q2 in zip(configs, configs[1:]):
        a1, a2 = q1.as_array(), q2.as_array()
        total += float(np.hypot(a2[0] - a1[0], a2[1] - a1[1]))
    return total


def dump_trajectory(traj: Trajectory) -> str:
    """Line-oriented dump: one row per (phase, step) with the full configuration."""
    lines = ["# trajectory format 1", f"# phases {len(traj.phases)} objective {traj.objective:.9g}"]
    for p, phase in enumerate(traj.phases):
        for s, q in enumerate(phase):
            vals = " ".join(f"{v:.9g}" for v in q.as_array())
            lines.append(f"{p} {s} {vals}")
    return "\n".join(lines) + "\n"
