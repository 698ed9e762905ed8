"""Rigid transforms and closed-form signed-distance primitives.

All collision geometry is spheres plus axis-aligned boxes, so every
distance here has an exact closed form and is continuous in the inputs.
"""

from __future__ import annotations

import math

import numpy as np


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def ang_diff(a: float, b: float) -> float:
    """Shortest signed angular difference a - b, in (-pi, pi]."""
    return wrap_angle(a - b)


def rot_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    t = 1.0 - c
    return np.array(
        [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ]
    )


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Rotation from roll-pitch-yaw (extrinsic x-y-z convention)."""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def make_transform(rotation=None, translation=None) -> np.ndarray:
    """Homogeneous 4x4 transform from optional rotation and translation."""
    t = np.eye(4)
    if rotation is not None:
        t[:3, :3] = rotation
    if translation is not None:
        t[:3, 3] = translation
    return t


def planar_transform(x: float, y: float, yaw: float) -> np.ndarray:
    """Planar base pose as a 4x4 world transform at height zero."""
    c, s = math.cos(yaw), math.sin(yaw)
    t = np.eye(4)
    t[0, 0], t[0, 1] = c, -s
    t[1, 0], t[1, 1] = s, c
    t[0, 3], t[1, 3] = x, y
    return t


def point_box_signed_distance(p: np.ndarray, center: np.ndarray, half: np.ndarray) -> float:
    """Signed distance from a point to an axis-aligned box (negative inside)."""
    d = np.abs(np.asarray(p) - center) - half
    outside = np.maximum(d, 0.0)
    return float(np.linalg.norm(outside) + min(d.max(), 0.0))


def points_box_signed_distance(points: np.ndarray, center: np.ndarray, half: np.ndarray) -> np.ndarray:
    """Vectorized point-box signed distances for an (N, 3) array of points."""
    d = np.abs(points - center) - half
    outside = np.linalg.norm(np.maximum(d, 0.0), axis=-1)
    inside = np.minimum(d.max(axis=-1), 0.0)
    return outside + inside


def sphere_box_penetration(p: np.ndarray, r: float, center: np.ndarray, half: np.ndarray) -> float:
    """Penetration depth of a sphere into an axis-aligned box (0 if clear)."""
    return max(0.0, r - point_box_signed_distance(p, center, half))


def sphere_sphere_penetration(p1, r1, p2, r2) -> float:
    """Penetration depth between two spheres (0 if clear)."""
    return max(0.0, (r1 + r2) - float(np.linalg.norm(np.asarray(p1) - np.asarray(p2))))


def box_box_penetration(c1, h1, c2, h2) -> float:
    """Penetration depth between two axis-aligned boxes (0 if clear).

    Inside overlap this is the minimal translation depth along an axis,
    which is continuous through the contact boundary.
    """
    gap = np.abs(np.asarray(c1) - np.asarray(c2)) - (np.asarray(h1) + np.asarray(h2))
    if np.all(gap < 0.0):
        return float(-gap.max())
    return 0.0


def box_box_distance(c1, h1, c2, h2) -> float:
    """Separation distance between two axis-aligned boxes (0 if touching/overlapping)."""
    gap = np.abs(np.asarray(c1) - np.asarray(c2)) - (np.asarray(h1) + np.asarray(h2))
    return float(np.linalg.norm(np.maximum(gap, 0.0)))


def sphere_boxes_penetration(p: np.ndarray, r: float, centers: np.ndarray, halves: np.ndarray) -> float:
    """Max penetration of one sphere against a stack of boxes (centers (K,3))."""
    if centers.shape[0] == 0:
        return 0.0
    diff = np.abs(p - centers) - halves
    outside = np.linalg.norm(np.maximum(diff, 0.0), axis=-1)
    inside = np.minimum(diff.max(axis=-1), 0.0)
    sd = outside + inside
    return float(max(0.0, (r - sd.min())))
