"""Mobile-manipulator kinematic model: configurations, FK, limits, interpolation.

The robot is a planar holonomic base (x, y, yaw at height zero) carrying a
serial chain of prismatic/revolute joints. Models are loaded from JSON files
so the chain is data, not code; ``hsr_like`` is the bundled default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidResolution, ModelMismatch
from .geometry import ang_diff, make_transform, planar_transform, rot_axis_angle, rpy_matrix, wrap_angle

REVOLUTE = "revolute"
PRISMATIC = "prismatic"


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str
    axis: np.ndarray          # unit 3-vector in the joint's local frame
    offset: np.ndarray        # 4x4 rigid transform from parent frame
    lower: float
    upper: float


@dataclass(frozen=True)
class CollisionSphere:
    link: int                 # frame index: 0 = base, i = after joint i
    center: np.ndarray        # local 3-vector
    radius: float


@dataclass(frozen=True)
class RobotModel:
    name: str
    joints: tuple[Joint, ...]
    ee_offset: np.ndarray     # 4x4 from last joint frame to end-effector
    spheres: tuple[CollisionSphere, ...]
    base_footprint_radius: float
    home_arm: np.ndarray

    @property
    def num_arm_joints(self) -> int:
        return len(self.joints)

    @property
    def dim(self) -> int:
        return 3 + len(self.joints)

    @property
    def arm_lower(self) -> np.ndarray:
        return np.array([j.lower for j in self.joints])

    @property
    def arm_upper(self) -> np.ndarray:
        return np.array([j.upper for j in self.joints])

    def home_configuration(self, base=(0.0, 0.0, 0.0)) -> "Configuration":
        return Configuration.from_parts(base, self.home_arm)


class Configuration:
    """Whole-body configuration [x_base, y_base, yaw_base, q_1..q_m].

    The yaw is stored wrapped to (-pi, pi]. Instances are immutable; use
    ``as_array`` for a writable copy.
    """

    __slots__ = ("_q",)

    def __init__(self, values: Sequence[float]):
        q = np.array(values, dtype=float)
        if q.ndim != 1 or q.shape[0] < 3:
            raise ModelMismatch(f"configuration needs at least 3 values, got shape {q.shape}")
        q[2] = wrap_angle(q[2])
        q.flags.writeable = False
        self._q = q

    @classmethod
    def from_parts(cls, base: Sequence[float], arm: Sequence[float]) -> "Configuration":
        return cls(np.concatenate([np.asarray(base, dtype=float), np.asarray(arm, dtype=float)]))

    @property
    def base_x(self) -> float:
        return float(self._q[0])

    @property
    def base_y(self) -> float:
        return float(self._q[1])

    @property
    def base_yaw(self) -> float:
        return float(self._q[2])

    @property
    def arm(self) -> np.ndarray:
        return self._q[3:]

    def as_array(self) -> np.ndarray:
        return self._q.copy()

    @property
    def dim(self) -> int:
        return self._q.shape[0]

    def __len__(self) -> int:
        return self._q.shape[0]

    def __repr__(self) -> str:
        return f"Configuration({np.array2string(self._q, precision=4)})"

    def allclose(self, other: "Configuration", atol: float = 1e-12) -> bool:
        return self._q.shape == other._q.shape and bool(np.allclose(self._q, other._q, atol=atol))


def _check_dim(model: RobotModel, q: Configuration | np.ndarray) -> np.ndarray:
    arr = q.as_array() if isinstance(q, Configuration) else np.asarray(q, dtype=float)
    if arr.shape[-1] != model.dim:
        raise ModelMismatch(f"model {model.name} expects dim {model.dim}, got {arr.shape[-1]}")
    return arr


def load_robot_model(source: str | Path = "hsr_like") -> RobotModel:
    """Load a robot model from a bundled name or a JSON file path."""
    if isinstance(source, Path) or str(source).endswith(".json"):
        raw = json.loads(Path(source).read_text())
    else:
        raw = json.loads(resources.files("reachtamp.data").joinpath(f"{source}.json").read_text())
    if raw.get("format") != 1:
        raise ModelMismatch(f"unsupported robot model format: {raw.get('format')!r}")
    joints = []
    for j in raw["joints"]:
        axis = np.asarray(j["axis"], dtype=float)
        n = np.linalg.norm(axis)
        if abs(n - 1.0) > 1e-9:
            raise ModelMismatch(f"joint {j['name']} axis is not unit-norm")
        lo, hi = j["limits"]
        if not lo < hi:
            raise ModelMismatch(f"joint {j['name']} limits must satisfy lo < hi")
        offset = make_transform(rpy_matrix(*j["offset_rpy"]), np.asarray(j["offset_xyz"], dtype=float))
        joints.append(Joint(j["name"], j["kind"], axis, offset, float(lo), float(hi)))
    spheres = tuple(
        CollisionSphere(s["link"], np.asarray(s["center"], dtype=float), float(s["radius"]))
        for s in raw["collision_spheres"]
    )
    if any(s.radius <= 0 for s in spheres):
        raise ModelMismatch("collision sphere radii must be positive")
    ee_offset = make_transform(rpy_matrix(*raw["ee_offset_rpy"]), np.asarray(raw["ee_offset_xyz"], dtype=float))
    return RobotModel(
        name=raw["name"],
        joints=tuple(joints),
        ee_offset=ee_offset,
        spheres=spheres,
        base_footprint_radius=float(raw["base"]["footprint_radius"]),
        home_arm=np.asarray(raw["home_arm"], dtype=float),
    )


def _joint_motion(joint: Joint, value: float) -> np.ndarray:
    if joint.kind == PRISMATIC:
        return make_transform(translation=joint.axis * value)
    return make_transform(rotation=rot_axis_angle(joint.axis, value))


def forward_kinematics(model: RobotModel, q: Configuration) -> tuple[np.ndarray, list[np.ndarray]]:
    """End-effector position and world frames [base, joint_1.., ee] for q."""
    arr = _check_dim(model, q)
    frames = [planar_transform(arr[0], arr[1], arr[2])]
    for i, joint in enumerate(model.joints):
        frames.append(frames[-1] @ joint.offset @ _joint_motion(joint, arr[3 + i]))
    frames.append(frames[-1] @ model.ee_offset)
    return frames[-1][:3, 3].copy(), frames


def fk_details(model: RobotModel, arr: np.ndarray):
    """FK plus per-joint world axes and origins (used by the IK Jacobian).

    Returns (ee_position, frames, joint_axes, joint_origins) where axes and
    origins are taken at each joint's pre-motion frame.
    """
    frames = [planar_transform(arr[0], arr[1], arr[2])]
    axes, origins = [], []
    for i, joint in enumerate(model.joints):
        pre = frames[-1] @ joint.offset
        axes.append(pre[:3, :3] @ joint.axis)
        origins.append(pre[:3, 3].copy())
        frames.append(pre @ _joint_motion(joint, arr[3 + i]))
    frames.append(frames[-1] @ model.ee_offset)
    return frames[-1][:3, 3].copy(), frames, axes, origins


def _batch_axis_rotation(axis: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """(N,3,3) rotation matrices about one fixed axis."""
    x, y, z = axis
    c, s = np.cos(angles), np.sin(angles)
    t = 1.0 - c
    r = np.empty((angles.shape[0], 3, 3))
    r[:, 0, 0] = t * x * x + c
    r[:, 0, 1] = t * x * y - s * z
    r[:, 0, 2] = t * x * z + s * y
    r[:, 1, 0] = t * x * y + s * z
    r[:, 1, 1] = t * y * y + c
    r[:, 1, 2] = t * y * z - s * x
    r[:, 2, 0] = t * x * z - s * y
    r[:, 2, 1] = t * y * z + s * x
    r[:, 2, 2] = t * z * z + c
    return r


def fk_batch(model: RobotModel, Q: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Batch FK over configurations Q (N, dim).

    Returns (ee (N,3), rotations per frame [(N,3,3)..], translations per
    frame [(N,3)..]); frame order matches ``forward_kinematics``.
    """
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[1] != model.dim:
        raise ModelMismatch(f"batch shape {Q.shape} does not match model dim {model.dim}")
    n = Q.shape[0]
    c, s = np.cos(Q[:, 2]), np.sin(Q[:, 2])
    r = np.zeros((n, 3, 3))
    r[:, 0, 0], r[:, 0, 1] = c, -s
    r[:, 1, 0], r[:, 1, 1] = s, c
    r[:, 2, 2] = 1.0
    t = np.zeros((n, 3))
    t[:, 0], t[:, 1] = Q[:, 0], Q[:, 1]
    rots, trans = [r], [t]
    for i, joint in enumerate(model.joints):
        r = rots[-1] @ joint.offset[:3, :3]
        t = trans[-1] + np.einsum("nij,j->ni", rots[-1], joint.offset[:3, 3])
        vals = Q[:, 3 + i]
        if joint.kind == PRISMATIC:
            t = t + np.einsum("nij,j->ni", r, joint.axis) * vals[:, None]
        else:
            r = r @ _batch_axis_rotation(joint.axis, vals)
        rots.append(r)
        trans.append(t)
    r = rots[-1] @ model.ee_offset[:3, :3]
    t = trans[-1] + np.einsum("nij,j->ni", rots[-1], model.ee_offset[:3, 3])
    rots.append(r)
    trans.append(t)
    return trans[-1].copy(), rots, trans


def sphere_positions_batch(model: RobotModel, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """World positions of the model's collision spheres for each config.

    Returns (ee (N,3), centers (N,S,3), radii (S,)).
    """
    ee, rots, trans = fk_batch(model, Q)
    n = trans[0].shape[0]
    centers = np.empty((n, len(model.spheres), 3))
    for k, sph in enumerate(model.spheres):
        centers[:, k, :] = trans[sph.link] + np.einsum("nij,j->ni", rots[sph.link], sph.center)
    radii = np.array([sph.radius for sph in model.spheres])
    return ee, centers, radii


def joint_limit_violation(model: RobotModel, q: Configuration) -> float:
    """Max distance outside joint limits; 0 when all arm joints are in range.

    The base is holonomic and unconstrained, so it never contributes.
    """
    arr = _check_dim(model, q)
    arm = arr[3:]
    excess = np.maximum(arm - model.arm_upper, 0.0) + np.maximum(model.arm_lower - arm, 0.0)
    return float(excess.max()) if excess.size else 0.0


def interpolate(q1: Configuration, q2: Configuration, L: int) -> list[Configuration]:
    """L+1 evenly spaced configurations from q1 to q2.

    Every coordinate is linear except base yaw, which follows the shortest
    angular arc.
    """
    if not isinstance(L, int) or L < 1:
        raise InvalidResolution(f"interpolation steps must be a positive integer, got {L}")
    a1, a2 = q1.as_array(), q2.as_array()
    if a1.shape != a2.shape:
        raise ModelMismatch("configurations have different dimensions")
    dyaw = ang_diff(a2[2], a1[2])
    out = []
    for i in range(L + 1):
        t = i / L
        v = a1 + t * (a2 - a1)
        v[2] = a1[2] + t * dyaw
        out.append(Configuration(v))
    return out


def config_distance(q1: Configuration, q2: Configuration) -> float:
    """Euclidean distance in configuration space with shortest-arc yaw."""
    a1, a2 = q1.as_array(), q2.as_array()
    if a1.shape != a2.shape:
        raise ModelMismatch("configurations have different dimensions")
    d = a1 - a2
    d[2] = ang_diff(a1[2], a2[2])
    return float(np.linalg.norm(d))


def max_vertical_reach(model: RobotModel) -> float:
    """Upper bound on reachable end-effector height, from the chain geometry.

    Vertical offsets and prismatic travel accumulate until the first joint
    that can pitch the chain; every later segment counts with its full
    length, as if pointable straight up.
    """
    pivot = next(
        (i for i, j in enumerate(model.joints) if j.kind == REVOLUTE and abs(j.axis[2]) < 1.0 - 1e-9),
        len(model.joints),
    )
    z = 0.0
    for joint in model.joints[: pivot + 1] if pivot < len(model.joints) else model.joints:
        z += joint.offset[2, 3]
        if joint.kind == PRISMATIC:
            z += max(joint.lower * joint.axis[2], joint.upper * joint.axis[2])
    offsets = [j.offset[:3, 3] for j in model.joints[pivot + 1 :]] + [model.ee_offset[:3, 3]]
    if pivot == len(model.joints):
        return z + model.ee_offset[2, 3]
    return z + sum(float(np.linalg.norm(o)) for o in offsets)
