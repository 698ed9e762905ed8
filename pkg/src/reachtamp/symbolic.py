"""Grounded STRIPS-style domains and best-first symbolic search.

Search nodes accumulate the reachability heuristic cost between consecutive
kinematic-switch targets; infinite-cost successors (unreachable switches)
are pruned on expansion. Three built-in domains cover the benchmark tasks:
pick-and-place, colour sorting, and drawer table-clearing.
"""

from __future__ import annotations

import heapq
import itertools
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import EmptyFrontier, NoPlan, ScenarioFormatError
from .world import World

Atom = tuple[str, ...]

# standoff added above a region's top face when computing placement poses
PLACE_CLEARANCE = 0.02
# drops into the drawer release from higher up: the final descent sweeps
# the carried object over the drawer walls and needs the extra headroom
DROP_CLEARANCE = 0.04

_ATOM_RE = re.compile(r"^\s*(\w+)\s*(?:\(\s*([\w\s,.-]*)\s*\))?\s*$")


def parse_atom(text: str) -> Atom:
    m = _ATOM_RE.match(text)
    if not m:
        raise ScenarioFormatError(f"malformed atom: {text!r}")
    name, args = m.group(1), m.group(2)
    if args is None or args.strip() == "":
        return (name,)
    return (name, *[a.strip() for a in args.split(",")])


def format_atom(atom: Atom) -> str:
    if len(atom) == 1:
        return atom[0]
    return f"{atom[0]}({','.join(atom[1:])})"


@dataclass(frozen=True)
class GraspSpec:
    """Tool-axis alignment requirement for a keyframe."""

    axis: tuple[float, float, float] = (0.0, 0.0, -1.0)
    tolerance: float = 0.15


@dataclass
class GeomState:
    """Geometric snapshot tracked alongside symbolic search."""

    object_centers: dict[str, np.ndarray]
    drawer_extension: float = 0.0
    held: str | None = None

    @classmethod
    def from_world(cls, world: World) -> "GeomState":
        centers = {m.id: m.center.copy() for m in world.movables}
        ext = world.drawer.extension if world.drawer is not None else 0.0
        return cls(centers, ext, None)

    def copy(self) -> "GeomState":
        return GeomState({k: v.copy() for k, v in self.object_centers.items()}, self.drawer_extension, self.held)

    def digest(self) -> tuple:
        items = tuple(
            (k, round(v[0], 6), round(v[1], 6), round(v[2], 6)) for k, v in sorted(self.object_centers.items())
        )
        return (items, round(self.drawer_extension, 6), self.held)


@dataclass(eq=False)
class GroundOperator:
    name: str
    args: tuple[str, ...]
    preconditions: frozenset
    add_effects: frozenset
    del_effects: frozenset
    switch_target: Callable[[GeomState], np.ndarray]
    mode_constraint: GraspSpec | None = None
    attachment: tuple | None = None  # ("grab", o) | ("release", o) | ("knob",) | ("drawer", ext)
    advance: Callable[[GeomState, frozenset], GeomState] | None = None

    @property
    def signature(self) -> str:
        return format_atom((self.name, *self.args))

    def applicable(self, atoms: frozenset) -> bool:
        return self.preconditions <= atoms

    def apply(self, atoms: frozenset) -> frozenset:
        if not self.applicable(atoms):
            raise ValueError(f"operator {self.signature} not applicable")
        return (atoms - self.del_effects) | self.add_effects

    def advance_geometry(self, geom: GeomState, atoms_after: frozenset) -> GeomState:
        if self.advance is None:
            return geom.copy()
        return self.advance(geom, atoms_after)


@dataclass
class SearchNode:
    state: frozenset
    actions: tuple[GroundOperator, ...]
    g_cost: float
    switch_points: list[np.ndarray]
    geom: GeomState


def goal_test(state: frozenset, goal: frozenset) -> bool:
    return goal <= state


def expand(node: SearchNode, operators: list[GroundOperator], heuristic) -> list[SearchNode]:
    """One successor per applicable operator; infinite-cost switches are pruned."""
    out = []
    for op in operators:
        if not op.applicable(node.state):
            continue
        target = np.asarray(op.switch_target(node.geom), dtype=float)
        h = heuristic(node.switch_points[-1], target)
        if not np.isfinite(h):
            continue
        new_state = op.apply(node.state)
        out.append(
            SearchNode(
                state=new_state,
                actions=node.actions + (op,),
                g_cost=node.g_cost + float(h),
                switch_points=node.switch_points + [target],
                geom=op.advance_geometry(node.geom, new_state),
            )
        )
    return out


class Frontier:
    """Min-heap on (g cost, action count, insertion order)."""

    def __init__(self):
        self._heap = []
        self._counter = itertools.count()

    def push(self, node: SearchNode) -> None:
        heapq.heappush(self._heap, (node.g_cost, len(node.actions), next(self._counter), node))

    def __len__(self) -> int:
        return len(self._heap)


def best_first_step(frontier: Frontier) -> SearchNode:
    if not len(frontier):
        raise EmptyFrontier("symbolic frontier is empty")
    return heapq.heappop(frontier._heap)[3]


@dataclass
class Domain:
    name: str
    operators: list[GroundOperator]
    initial_atoms: frozenset


def _grab(o):
    def advance(gs: GeomState, atoms_after: frozenset) -> GeomState:
        new = gs.copy()
        new.held = o
        return new

    return advance


def _release_at(o, point_fn):
    def advance(gs: GeomState, atoms_after: frozenset) -> GeomState:
        new = gs.copy()
        new.object_centers[o] = np.asarray(point_fn(gs), dtype=float)
        new.held = None
        return new

    return advance


def _placement_slots(world: World) -> dict[str, int]:
    """Deterministic per-object slot index, so placements never coincide."""
    return {m.id: i for i, m in enumerate(sorted(world.movables, key=lambda m: m.id))}


def _slot_offset(slot: int, count: int, region_half: np.ndarray, obj_half: float) -> np.ndarray:
    """Spread placement points along the region's longer horizontal axis."""
    if count <= 1:
        return np.zeros(3)
    axis = 0 if region_half[0] >= region_half[1] else 1
    usable = max(float(region_half[axis]) - obj_half - 0.01, 0.0)
    spacing = min(0.10, 2.0 * usable / max(count - 1, 1))
    offset = np.zeros(3)
    offset[axis] = (slot - (count - 1) / 2.0) * spacing
    return offset


def _pick_place_ops(world: World, support: str = "table") -> list[GroundOperator]:
    ops = []
    slots = _placement_slots(world)
    n_obj = len(world.movables)
    for m in world.movables:
        o = m.id
        ops.append(
            GroundOperator(
                name="pick",
                args=(o,),
                preconditions=frozenset({("on", o, support), ("handempty",)}),
                add_effects=frozenset({("holding", o)}),
                del_effects=frozenset({("on", o, support), ("handempty",)}),
                switch_target=lambda gs, o=o: gs.object_centers[o],
                mode_constraint=GraspSpec(),
                attachment=("grab", o),
                advance=_grab(o),
            )
        )
    for m in world.movables:
        o = m.id
        half_h = float(m.half_extents()[2])
        for r in world.regions:
            point = (
                r.top_center()
                + np.array([0.0, 0.0, half_h + PLACE_CLEARANCE])
                + _slot_offset(slots[o], n_obj, r.half, float(m.half_extents()[0]))
            )
            ops.append(
                GroundOperator(
                    name="place",
                    args=(o, r.name),
                    preconditions=frozenset({("holding", o)}),
                    add_effects=frozenset({("in", o, r.name), ("handempty",)}),
                    del_effects=frozenset({("holding", o)}),
                    switch_target=lambda gs, p=point: p,
                    mode_constraint=GraspSpec(),
                    attachment=("release", o),
                    advance=_release_at(o, lambda gs, p=point: p),
                )
            )
    return ops


def _table_clearing_ops(world: World) -> list[GroundOperator]:
    if world.drawer is None:
        raise ScenarioFormatError("table_clearing domain needs a drawer in the scenario")
    drawer = world.drawer
    open_ext = drawer.travel[1]
    closed_ext = drawer.travel[0]
    ops = [
        GroundOperator(
            name="take_knob",
            args=(),
            preconditions=frozenset({("handempty",)}),
            add_effects=frozenset({("holdingknob",)}),
            del_effects=frozenset({("handempty",)}),
            switch_target=lambda gs: drawer.knob_at(gs.drawer_extension),
            mode_constraint=GraspSpec(),
            attachment=("knob",),
            advance=None,
        ),
        GroundOperator(
            name="open_drawer",
            args=(),
            preconditions=frozenset({("holdingknob",), ("drawerclosed",)}),
            add_effects=frozenset({("draweropen",), ("handempty",)}),
            del_effects=frozenset({("drawerclosed",), ("holdingknob",)}),
            switch_target=lambda gs: drawer.knob_at(open_ext),
            mode_constraint=GraspSpec(),
            attachment=("drawer", open_ext),
            advance=_slide_drawer(drawer, open_ext),
        ),
        GroundOperator(
            name="close_drawer",
            args=(),
            preconditions=frozenset({("holdingknob",), ("draweropen",)}),
            add_effects=frozenset({("drawerclosed",), ("handempty",)}),
            del_effects=frozenset({("draweropen",), ("holdingknob",)}),
            switch_target=lambda gs: drawer.knob_at(closed_ext),
            mode_constraint=GraspSpec(),
            attachment=("drawer", closed_ext),
            advance=_slide_drawer(drawer, closed_ext),
        ),
    ]
    drop_base = drawer.body_center_at(open_ext) + np.array([0.0, 0.0, drawer.body_half[2]])
    slots = _placement_slots(world)
    n_obj = len(world.movables)
    for m in world.movables:
        o = m.id
        half_h = float(m.half_extents()[2])
        drop_point = (
            drop_base
            + np.array([0.0, 0.0, half_h + DROP_CLEARANCE])
            + _slot_offset(slots[o], n_obj, drawer.body_half, float(m.half_extents()[0]))
        )
        ops.append(
            GroundOperator(
                name="pick_object",
                args=(o,),
                preconditions=frozenset({("on", o, "surface"), ("handempty",)}),
                add_effects=frozenset({("holding", o)}),
                del_effects=frozenset({("on", o, "surface"), ("handempty",)}),
                switch_target=lambda gs, o=o: gs.object_centers[o],
                mode_constraint=GraspSpec(),
                attachment=("grab", o),
                advance=_grab(o),
            )
        )
        ops.append(
            GroundOperator(
                name="drop_object",
                args=(o,),
                preconditions=frozenset({("holding", o), ("draweropen",)}),
                add_effects=frozenset({("in", o, "drawer"), ("handempty",)}),
                del_effects=frozenset({("holding", o)}),
                switch_target=lambda gs, p=drop_point: p,
                mode_constraint=GraspSpec(),
                attachment=("release", o),
                advance=_release_at(o, lambda gs, p=drop_point: p),
            )
        )
    return ops


def _slide_drawer(drawer, target_ext):
    def advance(gs: GeomState, atoms_after: frozenset) -> GeomState:
        new = gs.copy()
        delta = (target_ext - gs.drawer_extension) * drawer.axis
        for atom in atoms_after:
            if atom[0] == "in" and len(atom) == 3 and atom[2] == "drawer":
                o = atom[1]
                if o in new.object_centers:
                    new.object_centers[o] = new.object_centers[o] + delta
        new.drawer_extension = target_ext
        return new

    return advance


def _initial_atoms(name: str, world: World) -> frozenset:
    atoms = {("handempty",)}
    if name in ("pick_place", "sorting"):
        for m in world.movables:
            atoms.add(("on", m.id, "table"))
    elif name == "table_clearing":
        for m in world.movables:
            atoms.add(("on", m.id, "surface"))
        atoms.add(("drawerclosed",))
    return frozenset(atoms)


def build_domain(name: str, world: World) -> Domain:
    if name in ("pick_place", "sorting"):
        ops = _pick_place_ops(world)
    elif name == "table_clearing":
        ops = _table_clearing_ops(world)
    else:
        raise ScenarioFormatError(f"unknown domain: {name!r}")
    return Domain(name, ops, _initial_atoms(name, world))


def builtin_domains() -> tuple[str, ...]:
    return ("pick_place", "sorting", "table_clearing")


def replay_plan(domain: Domain, actions, goal: frozenset) -> bool:
    """Replay a plan through operator semantics; True iff it reaches the goal."""
    atoms = domain.initial_atoms
    for op in actions:
        if not op.applicable(atoms):
            return False
        atoms = op.apply(atoms)
    return goal_test(atoms, goal)


def best_first_plan(
    domain: Domain,
    goal: frozenset,
    start_ee: np.ndarray,
    start_geom: GeomState,
    heuristic,
    max_expansions: int = 20000,
) -> SearchNode:
    """Plain best-first search to the first goal node (no optimization stages)."""
    frontier = Frontier()
    frontier.push(SearchNode(domain.initial_atoms, (), 0.0, [np.asarray(start_ee, dtype=float)], start_geom))
    best_seen: dict = {}
    expansions = 0
    while len(frontier):
        node = best_first_step(frontier)
        if goal_test(node.state, goal):
            return node
        key = (node.state, node.geom.digest())
        prev = best_seen.get(key)
        if prev is not None and prev <= node.g_cost + 1e-12:
            continue
        best_seen[key] = node.g_cost
        expansions += 1
        if expansions > max_expansions:
            break
        for succ in expand(node, domain.operators, heuristic):
            frontier.push(succ)
    raise NoPlan(f"no symbolic plan reaches the goal {sorted(goal)}")
