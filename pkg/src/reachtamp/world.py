"""World representation: obstacles, movable objects, regions, drawer, collision.

Collision bodies are spheres (robot links) against axis-aligned boxes and
spheres (environment). A held object moves with the gripper through the
attachment's grasp offset; its box is kept axis-aligned at the transformed
center, which is exact for the cube-scale objects used here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ModelMismatch, ScenarioFormatError
from .geometry import points_box_signed_distance
from .model import Configuration, RobotModel, fk_batch, interpolate

# Penetrations below this are boundary contact and count as collision-free.
CONTACT_EPS = 1e-9

# Returned by point_clearance when the world has no static obstacles.
NO_OBSTACLE_CLEARANCE = -1e9


@dataclass(frozen=True)
class BoxObstacle:
    center: np.ndarray
    half: np.ndarray


@dataclass(frozen=True)
class SphereObstacle:
    center: np.ndarray
    radius: float


@dataclass
class MovableObject:
    id: str
    kind: str                      # "box" | "sphere"
    center: np.ndarray
    half: np.ndarray | None = None
    radius: float | None = None
    color: str | None = None

    def half_extents(self) -> np.ndarray:
        if self.kind == "box":
            return self.half
        return np.full(3, self.radius)


@dataclass(frozen=True)
class Region:
    """Named placement volume (not a collision body)."""

    name: str
    center: np.ndarray
    half: np.ndarray
    color: str | None = None

    def top_center(self) -> np.ndarray:
        return self.center + np.array([0.0, 0.0, self.half[2]])


@dataclass
class Drawer:
    """Prismatic tray drawer: a solid body box sliding along a unit axis."""

    body_center_closed: np.ndarray
    body_half: np.ndarray
    axis: np.ndarray
    travel: tuple[float, float]
    knob_closed: np.ndarray
    extension: float = 0.0

    def body_center(self) -> np.ndarray:
        return self.body_center_closed + self.axis * self.extension

    def knob(self) -> np.ndarray:
        return self.knob_closed + self.axis * self.extension

    def knob_at(self, extension: float) -> np.ndarray:
        return self.knob_closed + self.axis * extension

    def body_center_at(self, extension: float) -> np.ndarray:
        return self.body_center_closed + self.axis * extension


@dataclass
class AttachmentState:
    """Grasp bookkeeping: at most one held object, rigid to the end-effector."""

    held: MovableObject | None = None
    grasp_offset: np.ndarray = field(default_factory=lambda: np.eye(4))


class World:
    """Static obstacles, movables, regions, optional drawer, workspace bounds."""

    def __init__(
        self,
        static_boxes: Sequence[BoxObstacle] = (),
        static_spheres: Sequence[SphereObstacle] = (),
        movables: Sequence[MovableObject] = (),
        regions: Sequence[Region] = (),
        drawer: Drawer | None = None,
        p_min: Sequence[float] = (-3.0, -3.0, 0.0),
        p_max: Sequence[float] = (3.0, 3.0, 1.5),
    ):
        self.static_boxes = list(static_boxes)
        self.static_spheres = list(static_spheres)
        self.movables = list(movables)
        self.regions = list(regions)
        self.drawer = drawer
        self.p_min = np.asarray(p_min, dtype=float)
        self.p_max = np.asarray(p_max, dtype=float)
        if not np.all(self.p_min < self.p_max):
            raise ScenarioFormatError("workspace bounds require p_min < p_max componentwise")
        ids = [m.id for m in self.movables]
        if len(ids) != len(set(ids)):
            raise ScenarioFormatError("movable object ids must be unique")
        if drawer is not None and not (drawer.travel[0] - 1e-12 <= drawer.extension <= drawer.travel[1] + 1e-12):
            raise ScenarioFormatError("drawer extension outside its travel range")

    def movable(self, obj_id: str) -> MovableObject:
        for m in self.movables:
            if m.id == obj_id:
                return m
        raise KeyError(obj_id)

    def region(self, name: str) -> Region:
        for r in self.regions:
            if r.name == name:
                return r
        raise KeyError(name)

    def remove_movable(self, obj_id: str) -> MovableObject:
        m = self.movable(obj_id)
        self.movables = [x for x in self.movables if x.id != obj_id]
        return m

    def in_bounds(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.p_min - 1e-12) and np.all(x <= self.p_max + 1e-12))

    def copy(self) -> "World":
        drawer = None
        if self.drawer is not None:
            drawer = Drawer(
                self.drawer.body_center_closed.copy(),
                self.drawer.body_half.copy(),
                self.drawer.axis.copy(),
                self.drawer.travel,
                self.drawer.knob_closed.copy(),
                self.drawer.extension,
            )
        return World(
            static_boxes=list(self.static_boxes),
            static_spheres=list(self.static_spheres),
            movables=[replace(m, center=m.center.copy()) for m in self.movables],
            regions=list(self.regions),
            drawer=drawer,
            p_min=self.p_min.copy(),
            p_max=self.p_max.copy(),
        )

    def obstacle_boxes(self, ignore_ids: Iterable[str] = ()) -> tuple[np.ndarray, np.ndarray]:
        """Box obstacle (centers, halves): statics + box movables + drawer body."""
        skip = set(ignore_ids)
        centers, halves = [], []
        for b in self.static_boxes:
            centers.append(b.center)
            halves.append(b.half)
        for m in self.movables:
            if m.kind == "box" and m.id not in skip:
                centers.append(m.center)
                halves.append(m.half)
        if self.drawer is not None and "drawer" not in skip:
            centers.append(self.drawer.body_center())
            halves.append(self.drawer.body_half)
        if not centers:
            return np.zeros((0, 3)), np.zeros((0, 3))
        return np.asarray(centers), np.asarray(halves)

    def obstacle_spheres(self, ignore_ids: Iterable[str] = ()) -> tuple[np.ndarray, np.ndarray]:
        skip = set(ignore_ids)
        centers, radii = [], []
        for s in self.static_spheres:
            centers.append(s.center)
            radii.append(s.radius)
        for m in self.movables:
            if m.kind == "sphere" and m.id not in skip:
                centers.append(m.center)
                radii.append(m.radius)
        if not centers:
            return np.zeros((0, 3)), np.zeros(0)
        return np.asarray(centers), np.asarray(radii)


def _held_centers(model: RobotModel, rots, trans, attach: AttachmentState) -> np.ndarray | None:
    """World centers of the held object for each batched config, or None."""
    if attach is None or attach.held is None:
        return None
    ee_r, ee_t = rots[-1], trans[-1]
    local = attach.grasp_offset[:3, 3]
    return ee_t + np.einsum("nij,j->ni", ee_r, local)


def penetration_batch(
    model: RobotModel,
    Q: np.ndarray,
    world: World,
    attach: AttachmentState | None = None,
    ignore_ids: Iterable[str] = (),
) -> np.ndarray:
    """Max penetration depth per configuration for a batch Q (N, dim)."""
    skip = list(ignore_ids)
    if attach is not None and attach.held is not None:
        skip = skip + [attach.held.id]
    ee, rots, trans = fk_batch(model, Q)
    n = Q.shape[0]
    centers = np.empty((n, len(model.spheres), 3))
    for k, sph in enumerate(model.spheres):
        centers[:, k, :] = trans[sph.link] + np.einsum("nij,j->ni", rots[sph.link], sph.center)
    radii = np.array([s.radius for s in model.spheres])

    box_c, box_h = world.obstacle_boxes(skip)
    sph_c, sph_r = world.obstacle_spheres(skip)
    pen = np.zeros(n)

    if box_c.shape[0]:
        d = np.abs(centers[:, :, None, :] - box_c[None, None, :, :]) - box_h[None, None, :, :]
        outside = np.linalg.norm(np.maximum(d, 0.0), axis=-1)
        inside = np.minimum(d.max(axis=-1), 0.0)
        sd = outside + inside
        pen = np.maximum(pen, (radii[None, :, None] - sd).max(axis=(1, 2)))
    if sph_c.shape[0]:
        dist = np.linalg.norm(centers[:, :, None, :] - sph_c[None, None, :, :], axis=-1)
        pen = np.maximum(pen, ((radii[None, :, None] + sph_r[None, None, :]) - dist).max(axis=(1, 2)))

    held = _held_centers(model, rots, trans, attach) if attach is not None else None
    if held is not None:
        hh = attach.held.half_extents()
        if box_c.shape[0]:
            gap = np.abs(held[:, None, :] - box_c[None, :, :]) - (hh[None, None, :] + box_h[None, :, :])
            overlap = np.where(np.all(gap < 0.0, axis=-1), -gap.max(axis=-1), 0.0)
            pen = np.maximum(pen, overlap.max(axis=1))
        if sph_c.shape[0]:
            # sphere-vs-box via the box's signed distance to the sphere center
            d = np.abs(sph_c[None, :, :] - held[:, None, :]) - hh[None, None, :]
            sd = np.linalg.norm(np.maximum(d, 0.0), axis=-1) + np.minimum(d.max(axis=-1), 0.0)
            pen = np.maximum(pen, (sph_r[None, :] - sd).max(axis=1))

    pen = np.maximum(pen, 0.0)
    pen[pen <= CONTACT_EPS] = 0.0
    return pen


def collision_penetration(
    model: RobotModel,
    q: Configuration,
    world: World,
    attach: AttachmentState | None = None,
    *,
    ignore_ids: Iterable[str] = (),
) -> float:
    """Maximum penetration depth of the robot (plus held object) into the world."""
    arr = q.as_array() if isinstance(q, Configuration) else np.asarray(q, dtype=float)
    if arr.shape[0] != model.dim:
        raise ModelMismatch(f"model {model.name} expects dim {model.dim}, got {arr.shape[0]}")
    return float(penetration_batch(model, arr[None, :], world, attach, ignore_ids)[0])


def point_clearance(x: np.ndarray, world: World) -> float:
    """Signed point-vs-static-obstacle depth: positive inside, negative outside.

    With no static obstacles at all, returns a large negative sentinel.
    """
    x = np.asarray(x, dtype=float)
    best = None
    if world.static_boxes:
        c = np.asarray([b.center for b in world.static_boxes])
        h = np.asarray([b.half for b in world.static_boxes])
        sd = points_box_signed_distance(np.broadcast_to(x, (c.shape[0], 3)), c, h)
        best = float(sd.min())
    if world.drawer is not None:
        d = points_box_signed_distance(x[None, :], world.drawer.body_center()[None, :], world.drawer.body_half[None, :])
        best = float(d[0]) if best is None else min(best, float(d[0]))
    for s in world.static_spheres:
        sd = float(np.linalg.norm(x - s.center)) - s.radius
        best = sd if best is None else min(best, sd)
    if best is None:
        return NO_OBSTACLE_CLEARANCE
    return -best


def edge_collision_free(
    model: RobotModel,
    q1: Configuration,
    q2: Configuration,
    world: World,
    attach: AttachmentState | None = None,
    L: int = 10,
    *,
    ignore_ids: Iterable[str] = (),
) -> bool:
    """True iff all L+1 interpolated samples are penetration- and limit-free."""
    samples = interpolate(q1, q2, L)
    Q = np.stack([s.as_array() for s in samples])
    if np.any(penetration_batch(model, Q, world, attach, ignore_ids) > 0.0):
        return False
    lo, hi = model.arm_lower, model.arm_upper
    arm = Q[:, 3:]
    excess = np.maximum(arm - hi, 0.0) + np.maximum(lo - arm, 0.0)
    return not np.any(excess > 0.0)
