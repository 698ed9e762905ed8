"""Whole-body IK for node validation and keyframe solving.

Node validation rejects points inside static obstacles outright (the
large-penalty precondition is equivalent to a fast-path rejection), then
runs damped-least-squares descent on the position residual with random
restarts of the base pose around the target. Joint limits are enforced by
clamping; collisions by margin-buffered escape steps along the numerical
penetration gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoSolution, PreconditionRejected
from .geometry import wrap_angle
from .model import Configuration, RobotModel, fk_details
from .world import AttachmentState, World, penetration_batch, point_clearance

# Escape steps aim for this much clearance so accepted poses are not grazing.
COLLISION_MARGIN = 0.01
# Scale for orientation-error rows relative to meters of position error.
ORI_WEIGHT = 0.3
_FD_STEP = 1e-4


@dataclass(frozen=True)
class OrientationConstraint:
    """Require the tool axis (ee frame x-axis) within `tolerance` of `axis`."""

    axis: np.ndarray
    tolerance: float

    @staticmethod
    def vertical_down(tolerance: float = 0.15) -> "OrientationConstraint":
        return OrientationConstraint(np.array([0.0, 0.0, -1.0]), tolerance)


@dataclass
class IKParams:
    M: float = 1e9
    position_tolerance: float = 1e-3
    max_iterations: int = 120
    restart_count: int = 8
    damping_init: float = 0.08
    orientation: OrientationConstraint | None = None

    def __post_init__(self):
        if self.M < 1e6:
            raise ValueError("penalty constant M must be at least 1e6")
        if self.position_tolerance <= 0:
            raise ValueError("position tolerance must be positive")
        if self.restart_count < 1:
            raise ValueError("restart count must be at least 1")


@dataclass(frozen=True)
class ValidatedNode:
    """End-effector point x with a validated configuration q and IK cost c."""

    x: np.ndarray
    q: Configuration
    c: float


def tool_axis(frames) -> np.ndarray:
    """World direction of the end-effector tool axis (ee frame x-axis)."""
    return frames[-1][:3, 0].copy()


def _position_jacobian(model: RobotModel, arr, ee, axes, origins) -> np.ndarray:
    J = np.zeros((3, model.dim))
    J[0, 0] = 1.0
    J[1, 1] = 1.0
    base = np.array([arr[0], arr[1], 0.0])
    J[:, 2] = np.cross(np.array([0.0, 0.0, 1.0]), ee - base)
    for i, joint in enumerate(model.joints):
        if joint.kind == "prismatic":
            J[:, 3 + i] = axes[i]
        else:
            J[:, 3 + i] = np.cross(axes[i], ee - origins[i])
    return J


def _axis_jacobian(model: RobotModel, axes, a_cur) -> np.ndarray:
    J = np.zeros((3, model.dim))
    J[:, 2] = np.cross(np.array([0.0, 0.0, 1.0]), a_cur)
    for i, joint in enumerate(model.joints):
        if joint.kind == "revolute":
            J[:, 3 + i] = np.cross(axes[i], a_cur)
    return J


def _clamp(model: RobotModel, arr, base_bounds) -> np.ndarray:
    arr = arr.copy()
    arr[2] = wrap_angle(arr[2])
    arr[3:] = np.clip(arr[3:], model.arm_lower, model.arm_upper)
    if base_bounds is not None:
        lo, hi = base_bounds
        arr[0] = min(max(arr[0], lo[0]), hi[0])
        arr[1] = min(max(arr[1], lo[1]), hi[1])
    return arr


def _penetration(model, arr, world, attach, ignore_ids, margin=0.0):
    if margin == 0.0:
        return float(penetration_batch(model, arr[None, :], world, attach, ignore_ids)[0])
    return float(_inflated_penetration_batch(model, arr[None, :], world, attach, ignore_ids, margin)[0])


def _inflated_penetration_batch(model, Q, world, attach, ignore_ids, margin):
    """Penetration with all robot spheres and the held box inflated by margin."""
    grown = _grow_model(model, margin)
    grown_attach = attach
    if attach is not None and attach.held is not None:
        import dataclasses

        held = dataclasses.replace(attach.held)
        if held.kind == "box":
            held.half = held.half + margin
        else:
            held.radius = held.radius + margin
        grown_attach = AttachmentState(held=held, grasp_offset=attach.grasp_offset)
    return penetration_batch(grown, Q, world, grown_attach, ignore_ids)


_GROWN_CACHE: dict[tuple[int, float], RobotModel] = {}


def _grow_model(model: RobotModel, margin: float) -> RobotModel:
    key = (id(model), margin)
    cached = _GROWN_CACHE.get(key)
    if cached is not None:
        return cached
    import dataclasses

    spheres = tuple(dataclasses.replace(s, radius=s.radius + margin) for s in model.spheres)
    grown = dataclasses.replace(model, spheres=spheres)
    _GROWN_CACHE[key] = grown
    return grown


def _escape_collision(model, arr, world, attach, ignore_ids, base_bounds, max_tries=10):
    """Push a configuration out of (margin-inflated) collision via FD gradient."""
    for _ in range(max_tries):
        p = _penetration(model, arr, world, attach, ignore_ids, COLLISION_MARGIN)
        if p <= 0.0:
            return arr
        dim = arr.shape[0]
        probes = np.repeat(arr[None, :], 2 * dim, axis=0)
        for i in range(dim):
            probes[2 * i, i] += _FD_STEP
            probes[2 * i + 1, i] -= _FD_STEP
        vals = _inflated_penetration_batch(model, probes, world, attach, ignore_ids, COLLISION_MARGIN)
        grad = (vals[0::2] - vals[1::2]) / (2.0 * _FD_STEP)
        norm2 = float(grad @ grad)
        if norm2 < 1e-14:
            return arr
        arr = _clamp(model, arr - (p / norm2) * grad * 1.2, base_bounds)
    return arr


def _seed_list(model, x0, seed, restart_count, rng):
    """Restart seeds: optional caller seed, then base poses ringed around x0."""
    seeds = []
    if seed is not None:
        seeds.append(seed.as_array() if isinstance(seed, Configuration) else np.asarray(seed, dtype=float))
    ee_home_z = 0.55  # approximate home shoulder height; lift seeding refines per target
    while len(seeds) < restart_count:
        phi = rng.uniform(0.0, 2.0 * math.pi)
        dist = rng.uniform(0.35, 0.65)
        arm = np.clip(model.home_arm + rng.normal(0.0, 0.25, model.num_arm_joints), model.arm_lower, model.arm_upper)
        if model.joints[0].kind == "prismatic":
            arm[0] = np.clip(x0[2] - ee_home_z + 0.1, model.joints[0].lower, model.joints[0].upper)
        base = np.array([x0[0] - dist * math.cos(phi), x0[1] - dist * math.sin(phi), phi])
        seeds.append(np.concatenate([base, arm]))
    return seeds


def _solve(
    model: RobotModel,
    world: World,
    target: np.ndarray,
    params: IKParams,
    orientation: OrientationConstraint | None,
    attach: AttachmentState | None,
    seed,
    restart_seed: int,
    base_bounds=None,
    ignore_ids=(),
) -> Configuration | None:
    rng = np.random.default_rng(restart_seed)
    tol = params.position_tolerance
    for start in _seed_list(model, target, seed, params.restart_count, rng):
        arr = _clamp(model, start, base_bounds)
        lam2 = params.damping_init**2
        for _ in range(params.max_iterations):
            ee, frames, axes, origins = fk_details(model, arr)
            pos_err = target - ee
            ori_ok = True
            rows = [pos_err]
            jacs = [_position_jacobian(model, arr, ee, axes, origins)]
            if orientation is not None:
                a_cur = tool_axis(frames)
                a_des = orientation.axis / np.linalg.norm(orientation.axis)
                angle = math.atan2(float(np.linalg.norm(np.cross(a_cur, a_des))), float(a_cur @ a_des))
                ori_ok = angle <= orientation.tolerance
                rows.append(ORI_WEIGHT * (a_des - a_cur))
                jacs.append(ORI_WEIGHT * _axis_jacobian(model, axes, a_cur))
            if float(np.linalg.norm(pos_err)) <= tol and ori_ok:
                if _penetration(model, arr, world, attach, ignore_ids) == 0.0:
                    return Configuration(arr)
                escaped = _escape_collision(model, arr, world, attach, ignore_ids, base_bounds)
                if (
                    _penetration(model, escaped, world, attach, ignore_ids) == 0.0
                    and float(np.linalg.norm(target - fk_details(model, escaped)[0])) <= tol
                ):
                    if orientation is None:
                        return Configuration(escaped)
                    _, frames2, _, _ = fk_details(model, escaped)
                    a2 = tool_axis(frames2)
                    ang2 = math.atan2(float(np.linalg.norm(np.cross(a2, a_des))), float(a2 @ a_des))
                    if ang2 <= orientation.tolerance:
                        return Configuration(escaped)
                # fall through: keep iterating from the escaped pose
                arr = escaped
            err = np.concatenate(rows)
            J = np.vstack(jacs)
            dq = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(J.shape[0]), err)
            step = float(np.linalg.norm(dq))
            if step > 0.5:
                dq *= 0.5 / step
            arr = _clamp(model, arr + dq, base_bounds)
            arr = _escape_collision(model, arr, world, attach, ignore_ids, base_bounds, max_tries=3)
    return None


def validate_node(
    x0: np.ndarray,
    model: RobotModel,
    world: World,
    params: IKParams,
    seed: Configuration | None = None,
    restart_seed: int = 0,
) -> ValidatedNode:
    """Validate a task-space point: reject occluded points, else solve IK.

    Returns a node carrying the solved configuration and the final squared
    position residual as its cost.
    """
    x0 = np.asarray(x0, dtype=float)
    if not world.in_bounds(x0):
        raise PreconditionRejected(f"point {x0} outside workspace bounds")
    if point_clearance(x0, world) > 0.0:
        raise PreconditionRejected(f"point {x0} lies inside a static obstacle")
    q = _solve(model, world, x0, params, None, None, seed, restart_seed)
    if q is None:
        raise NoSolution(f"no feasible configuration reaches {x0}")
    ee, _, _, _ = fk_details(model, q.as_array())
    c = float(np.dot(x0 - ee, x0 - ee))
    return ValidatedNode(x=x0.copy(), q=q, c=c)


def solve_constrained_ik(
    target: np.ndarray,
    constraint: OrientationConstraint | None,
    model: RobotModel,
    world: World,
    attach: AttachmentState | None,
    params: IKParams,
    seed: Configuration | None = None,
    restart_seed: int = 0,
    base_bounds=None,
    ignore_ids=(),
) -> Configuration:
    """Keyframe IK: position plus optional tool-axis constraint, collision-free."""
    target = np.asarray(target, dtype=float)
    if not world.in_bounds(target):
        raise PreconditionRejected(f"target {target} outside workspace bounds")
    q = _solve(
        model, world, target, params, constraint, attach, seed, restart_seed, base_bounds, ignore_ids
    )
    if q is None:
        raise NoSolution(f"no feasible configuration for keyframe at {target}")
    return q
