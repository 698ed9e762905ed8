"""Seeded benchmark scenario generators.

Every generated instance is checked feasible before being emitted: each
pick and place target must admit a collision-free vertical-grasp IK
solution, with the base restricted to the relevant side of the table where
the task demands side-awareness. Offending objects are resampled under a
bounded rejection budget.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import GenerationFailure, NoSolution, PreconditionRejected, ScenarioFormatError
from .ik import IKParams, OrientationConstraint, solve_constrained_ik
from .model import load_robot_model
from .scenario import load_scenario

OBJECT_HALF = 0.03
GRASP_TOLERANCE = 0.15
HALF_PI = math.pi / 2.0

_ALIASES = {
    "pickplace": "pick_place",
    "pick-place": "pick_place",
    "pick_place": "pick_place",
    "sorting": "sorting",
    "sorting_far": "sorting_far",
    "sorting-far": "sorting_far",
    "tableclearing": "table_clearing",
    "table-clearing": "table_clearing",
    "table_clearing": "table_clearing",
}


def scenario_kinds() -> tuple[str, ...]:
    return ("pick_place", "sorting", "sorting_far", "table_clearing")


def normalize_kind(kind: str) -> str:
    key = kind.strip().lower()
    if key not in _ALIASES:
        raise ScenarioFormatError(f"unknown scenario kind {kind!r}; expected one of {scenario_kinds()}")
    return _ALIASES[key]


def _reachable(model, world, target, rng, base_bounds=None) -> bool:
    """Vertical-grasp feasibility oracle used by generator rejection sampling."""
    try:
        solve_constrained_ik(
            np.asarray(target, dtype=float),
            OrientationConstraint.vertical_down(GRASP_TOLERANCE),
            model,
            world,
            None,
            IKParams(restart_count=6, max_iterations=100),
            restart_seed=int(rng.integers(2**31)),
            base_bounds=base_bounds,
        )
        return True
    except (NoSolution, PreconditionRejected):
        return False


def _box(center, half):
    return {"kind": "box", "center": list(map(float, center)), "half_extents": list(map(float, half))}


def _movable(oid, center, color=None):
    entry = {
        "id": oid,
        "kind": "box",
        "center": list(map(float, center)),
        "half_extents": [OBJECT_HALF] * 3,
    }
    if color:
        entry["color"] = color
    return entry


def _region(name, center, half, color=None):
    entry = {"name": name, "center": list(map(float, center)), "half_extents": list(map(float, half))}
    if color:
        entry["color"] = color
    return entry


def _separated(xy, placed, min_dist):
    return all(np.hypot(xy[0] - p[0], xy[1] - p[1]) >= min_dist for p in placed)


def generate_scenario(kind: str, seed: int) -> dict:
    """Deterministic scenario dict for a benchmark kind and seed."""
    kind = normalize_kind(kind)
    if kind == "pick_place":
        return _gen_pick_place(seed)
    if kind == "sorting":
        return _gen_sorting(seed, far_side=False)
    if kind == "sorting_far":
        return _gen_sorting(seed, far_side=True)
    return _gen_table_clearing(seed)


def _gen_pick_place(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    model = load_robot_model()
    table_c, table_h = [0.0, 1.1, 0.2], [0.8, 0.3, 0.2]
    tray_c, tray_h = [0.55, 1.0, 0.41], [0.15, 0.12, 0.01]
    near_strip = ((-2.0, -0.8), (2.0, 0.55))  # base must stay on this side

    raw = {
        "format": 1,
        "name": f"pick_place_{seed:04d}",
        "robot": "hsr_like",
        "domain": "pick_place",
        "workspace": {"min": [-1.8, -0.8, 0.25], "max": [1.8, 1.9, 1.4]},
        "robot_start": {"base": [0.0, 0.1, HALF_PI]},
        "obstacles": [_box(table_c, table_h)],
        "regions": [_region("tray", tray_c, tray_h)],
        "drawer": None,
        "goal": [f"in(b{i},tray)" for i in range(3)],
    }

    placed: list[tuple[float, float]] = []
    centers = []
    for i in range(3):
        for attempt in range(200):
            x = float(rng.uniform(-0.65, 0.25))
            y = float(rng.uniform(0.87, 1.03))
            if not _separated((x, y), placed, 0.12):
                continue
            if np.hypot(x - tray_c[0], y - tray_c[1]) < 0.30:
                continue
            candidate = [x, y, 0.43]
            raw["movables"] = [_movable(f"b{j}", c) for j, c in enumerate(centers + [candidate])]
            world = load_scenario(raw).world
            if _reachable(model, world, candidate, rng, base_bounds=near_strip):
                placed.append((x, y))
                centers.append(candidate)
                break
        else:
            raise GenerationFailure(f"pick_place seed {seed}: could not place object {i}")
    raw["movables"] = [_movable(f"b{j}", c) for j, c in enumerate(centers)]

    world = load_scenario(raw).world
    place_target = [tray_c[0], tray_c[1], tray_c[2] + tray_h[2] + OBJECT_HALF + 0.01]
    if not _reachable(model, world, place_target, rng, base_bounds=near_strip):
        raise GenerationFailure(f"pick_place seed {seed}: tray placement unreachable")
    return raw


def _gen_sorting(seed: int, far_side: bool) -> dict:
    rng = np.random.default_rng(seed)
    model = load_robot_model()
    table_c, table_h = [0.0, 0.9, 0.2], [1.1, 0.45, 0.2]
    near_strip = ((-2.2, -1.0), (2.2, 0.20))
    far_strip = ((-2.2, 1.60), (2.2, 2.2))
    near_band = (0.52, 0.68)
    far_band = (1.12, 1.28)

    raw = {
        "format": 1,
        "name": f"{'sorting_far' if far_side else 'sorting'}_{seed:04d}",
        "robot": "hsr_like",
        "domain": "sorting",
        "workspace": {"min": [-2.2, -1.0, 0.25], "max": [2.2, 2.2, 1.4]},
        "robot_start": {"base": [0.0, -0.5, HALF_PI]},
        "obstacles": [
            _box(table_c, table_h),
            _box([-1.55, 0.9, 0.19], [0.15, 0.15, 0.19]),
            _box([1.55, 0.9, 0.19], [0.15, 0.15, 0.19]),
        ],
        "regions": [
            _region("tray_blue", [-1.55, 0.9, 0.39], [0.12, 0.12, 0.01], color="blue"),
            _region("tray_green", [1.55, 0.9, 0.39], [0.12, 0.12, 0.01], color="green"),
        ],
        "drawer": None,
        "goal": ["in(blue_block,tray_blue)", "in(green_block,tray_green)"],
    }

    specs = [("blue_block", "blue"), ("green_block", "green")]
    far_index = int(rng.integers(0, 2)) if far_side else -1
    placed: list[tuple[float, float]] = []
    centers: list[list[float]] = []
    sides: list[str] = []
    for i, (oid, color) in enumerate(specs):
        if far_side:
            side = "far" if i == far_index else ("near" if rng.random() < 0.5 else "far")
        else:
            side = "near" if rng.random() < 0.5 else "far"
        band = far_band if side == "far" else near_band
        for attempt in range(200):
            x = float(rng.uniform(-0.85, 0.85))
            y = float(rng.uniform(*band))
            if not _separated((x, y), placed, 0.15):
                continue
            candidate = [x, y, 0.43]
            raw["movables"] = [
                _movable(o, c, col) for (o, col), c in zip(specs[: len(centers) + 1], centers + [candidate])
            ]
            world = load_scenario(raw).world
            own_strip = far_strip if side == "far" else near_strip
            if not _reachable(model, world, candidate, rng, base_bounds=own_strip):
                continue
            if side == "far" and _reachable(model, world, candidate, rng, base_bounds=near_strip):
                continue  # forced far-side objects must be out of near reach
            placed.append((x, y))
            centers.append(candidate)
            sides.append(side)
            break
        else:
            raise GenerationFailure(f"sorting seed {seed}: could not place {oid}")
    raw["movables"] = [_movable(o, c, col) for (o, col), c in zip(specs, centers)]

    world = load_scenario(raw).world
    for region in raw["regions"]:
        target = [region["center"][0], region["center"][1], region["center"][2] + 0.01 + OBJECT_HALF + 0.01]
        if not _reachable(model, world, target, rng):
            raise GenerationFailure(f"sorting seed {seed}: region {region['name']} unreachable")
    return raw


def _gen_table_clearing(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    model = load_robot_model()
    raw = {
        "format": 1,
        "name": f"table_clearing_{seed:04d}",
        "robot": "hsr_like",
        "domain": "table_clearing",
        "workspace": {"min": [-1.8, -1.2, 0.25], "max": [1.8, 2.0, 1.4]},
        "robot_start": {"base": [0.0, 0.0, HALF_PI]},
        "obstacles": [
            _box([0.0, 1.3, 0.20], [0.25, 0.20, 0.20]),     # cabinet body
            _box([0.0, 1.425, 0.55], [0.25, 0.075, 0.15]),  # stair-like upper step
            _box([0.85, 1.1, 0.19], [0.20, 0.20, 0.19]),    # side surface for the object
        ],
        "regions": [],
        "drawer": {
            "body_center": [0.0, 1.275, 0.33],
            "body_half_extents": [0.20, 0.175, 0.05],
            "axis": [0.0, -1.0, 0.0],
            "travel": [0.0, 0.30],
            "knob": [0.0, 1.02, 0.33],
            "extension": 0.0,
        },
        "goal": ["in(cup,drawer)", "drawerclosed"],
    }

    for attempt in range(200):
        x = float(rng.uniform(0.72, 0.95))
        y = float(rng.uniform(1.00, 1.18))
        candidate = [x, y, 0.41]
        raw["movables"] = [_movable("cup", candidate)]
        scen = load_scenario(raw)
        if not _reachable(model, scen.world, candidate, rng):
            continue
        # knob must be graspable closed, and the drop point with the drawer out
        if not _reachable(model, scen.world, raw["drawer"]["knob"], rng):
            continue
        open_world = scen.world.copy()
        open_world.drawer.extension = raw["drawer"]["travel"][1]
        drop = open_world.drawer.body_center() + np.array(
            [0.0, 0.0, open_world.drawer.body_half[2] + OBJECT_HALF + 0.01]
        )
        if not _reachable(model, open_world, drop, rng, base_bounds=None):
            continue
        return raw
    raise GenerationFailure(f"table_clearing seed {seed}: no feasible object placement")
