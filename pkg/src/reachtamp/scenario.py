"""Scenario file format (JSON, `format: 1`) and loading into world objects.

A scenario bundles the robot model reference, world geometry, workspace
bounds, the robot start pose, the planning domain name, and the goal atoms.
See README for the documented schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ScenarioFormatError
from .model import Configuration, RobotModel, load_robot_model
from .symbolic import parse_atom
from .world import BoxObstacle, Drawer, MovableObject, Region, SphereObstacle, World

SCENARIO_FORMAT = 1


@dataclass
class Scenario:
    name: str
    robot_name: str
    model: RobotModel
    domain: str
    world: World
    start: Configuration
    goal: frozenset
    raw: dict


def _vec(data, n, where) -> np.ndarray:
    try:
        v = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"{where}: expected {n} numbers, got {data!r}") from exc
    if v.shape != (n,):
        raise ScenarioFormatError(f"{where}: expected {n} numbers, got {data!r}")
    return v


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioFormatError(f"{where}: missing field {key!r}")
    return data[key]


def _load_shape(entry: dict, where: str):
    kind = _require(entry, "kind", where)
    center = _vec(_require(entry, "center", where), 3, where)
    if kind == "box":
        return kind, center, _vec(_require(entry, "half_extents", where), 3, where), None
    if kind == "sphere":
        return kind, center, None, float(_require(entry, "radius", where))
    raise ScenarioFormatError(f"{where}: unknown shape kind {kind!r}")


def load_scenario(source: dict | str | Path) -> Scenario:
    """Parse and validate a scenario dict or JSON file."""
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text())
    else:
        raw = source
    if raw.get("format") != SCENARIO_FORMAT:
        raise ScenarioFormatError(f"unsupported scenario format: {raw.get('format')!r}")
    name = raw.get("name", "unnamed")
    robot_name = raw.get("robot", "hsr_like")
    model = load_robot_model(robot_name)
    domain = _require(raw, "domain", name)

    ws = _require(raw, "workspace", name)
    p_min = _vec(_require(ws, "min", "workspace"), 3, "workspace.min")
    p_max = _vec(_require(ws, "max", "workspace"), 3, "workspace.max")

    boxes, spheres = [], []
    for i, entry in enumerate(raw.get("obstacles", [])):
        kind, center, half, radius = _load_shape(entry, f"obstacles[{i}]")
        if kind == "box":
            boxes.append(BoxObstacle(center, half))
        else:
            spheres.append(SphereObstacle(center, radius))

    movables = []
    for i, entry in enumerate(raw.get("movables", [])):
        where = f"movables[{i}]"
        kind, center, half, radius = _load_shape(entry, where)
        movables.append(
            MovableObject(
                id=str(_require(entry, "id", where)),
                kind=kind,
                center=center,
                half=half,
                radius=radius,
                color=entry.get("color"),
            )
        )

    regions = []
    for i, entry in enumerate(raw.get("regions", [])):
        where = f"regions[{i}]"
        regions.append(
            Region(
                name=str(_require(entry, "name", where)),
                center=_vec(_require(entry, "center", where), 3, where),
                half=_vec(_require(entry, "half_extents", where), 3, where),
                color=entry.get("color"),
            )
        )

    drawer = None
    if raw.get("drawer") is not None:
        d = raw["drawer"]
        axis = _vec(_require(d, "axis", "drawer"), 3, "drawer.axis")
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > 1e-6:
            raise ScenarioFormatError("drawer.axis must be unit norm")
        travel = _require(d, "travel", "drawer")
        drawer = Drawer(
            body_center_closed=_vec(_require(d, "body_center", "drawer"), 3, "drawer.body_center"),
            body_half=_vec(_require(d, "body_half_extents", "drawer"), 3, "drawer.body_half_extents"),
            axis=axis,
            travel=(float(travel[0]), float(travel[1])),
            knob_closed=_vec(_require(d, "knob", "drawer"), 3, "drawer.knob"),
            extension=float(d.get("extension", 0.0)),
        )

    world = World(
        static_boxes=boxes,
        static_spheres=spheres,
        movables=movables,
        regions=regions,
        drawer=drawer,
        p_min=p_min,
        p_max=p_max,
    )

    start_raw = _require(raw, "robot_start", name)
    base = _vec(_require(start_raw, "base", "robot_start"), 3, "robot_start.base")
    arm = start_raw.get("arm")
    if arm is None:
        arm_vals = model.home_arm
    else:
        arm_vals = _vec(arm, model.num_arm_joints, "robot_start.arm")
    start = Configuration.from_parts(base, arm_vals)

    goal = frozenset(parse_atom(a) for a in raw.get("goal", []))
    return Scenario(
        name=name,
        robot_name=robot_name,
        model=model,
        domain=domain,
        world=world,
        start=start,
        goal=goal,
        raw=raw,
    )


def save_scenario(raw: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(raw, indent=2) + "\n")
    return path


def bundled_scenario(name: str) -> dict:
    """Load a scenario bundled with the package by bare name."""
    from importlib import resources

    return json.loads(resources.files("reachtamp.data.scenarios").joinpath(f"{name}.json").read_text())
