"""Cache of answered graph path queries, keyed by quantized endpoint pairs.

Keys are canonicalized by sorting the two quantized endpoints, so a query
and its reverse share one entry and the stored path is flipped on demand.
Failed queries are cached with infinite cost to prune repeats, and such
entries lapse when later enhancement adds nodes near a failed endpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedQuery, NoPath, UnreachableQuery
from .graph import GraphParams, PathAnswer, ReachabilityGraph, insert_config_node, query_path, query_path_between_nodes
from .model import Configuration, RobotModel
from .world import World, edge_collision_free

KEY_QUANTUM = 0.001  # 1 mm key grid

# a cached path whose endpoint bases sit this far from the requested anchor
# configurations is from a different approach basin and gets recomputed
ANCHOR_BASE_TOL = 0.35

QuantPoint = tuple[int, int, int]


def quantize(x) -> QuantPoint:
    return tuple(int(round(float(v) / KEY_QUANTUM)) for v in np.asarray(x, dtype=float))


def canonical_key(x1, x2) -> tuple[tuple[QuantPoint, QuantPoint], bool]:
    """Sorted key plus whether the query direction is reversed in storage."""
    a, b = quantize(x1), quantize(x2)
    if a <= b:
        return (a, b), False
    return (b, a), True


@dataclass
class SolutionEntry:
    key: tuple[QuantPoint, QuantPoint]
    path: list[Configuration]       # stored in key order: key[0] -> key[1]
    cost: float
    nodes_at_insert: int = 0        # graph size when a failure was cached
    world_epoch: int = 0


class SolutionLibrary:
    def __init__(self):
        self.entries: dict[tuple[QuantPoint, QuantPoint], SolutionEntry] = {}
        self.stats = {"hits": 0, "misses": 0}
        self.world_epoch = 0

    def note_world_changed(self) -> None:
        """Mark all cached paths as needing re-validation on next lookup."""
        self.world_epoch += 1

    def lookup(self, key) -> SolutionEntry | None:
        return self.entries.get(tuple(key))

    def insert(self, entry: SolutionEntry) -> None:
        """Keep the cheaper of two entries for the same key."""
        old = self.entries.get(entry.key)
        if old is not None and old.cost <= entry.cost:
            return
        self.entries[entry.key] = entry


def _near_point(graph: ReachabilityGraph, point: QuantPoint, since: int, radius: float) -> bool:
    target = np.array(point, dtype=float) * KEY_QUANTUM
    for node in graph.nodes[since:]:
        if float(np.linalg.norm(node.x - target)) <= radius:
            return True
    return False


def _entry_still_valid(
    lib: SolutionLibrary,
    entry: SolutionEntry,
    graph: ReachabilityGraph,
    model: RobotModel,
    world: World,
    params: GraphParams,
) -> bool:
    if math.isinf(entry.cost):
        # enhancement near a failed endpoint may have unlocked it
        radius = 2.0 * math.sqrt(max(params.enhance_cov_init))
        if _near_point(graph, entry.key[0], entry.nodes_at_insert, radius) or _near_point(
            graph, entry.key[1], entry.nodes_at_insert, radius
        ):
            return False
        return True
    if entry.world_epoch != lib.world_epoch:
        for q1, q2 in zip(entry.path, entry.path[1:]):
            if not edge_collision_free(model, q1, q2, world, None, params.L):
                return False
        entry.world_epoch = lib.world_epoch
    return True


def _compute_and_store(
    lib: SolutionLibrary,
    key,
    reverse: bool,
    graph: ReachabilityGraph,
    x1,
    x2,
    model: RobotModel,
    world: World,
    params: GraphParams,
) -> SolutionEntry:
    lib.stats["misses"] += 1
    try:
        answer: PathAnswer = query_path(graph, x1, x2, model, world, params)
    except (UnreachableQuery, DisconnectedQuery, NoPath):
        entry = SolutionEntry(key, [], math.inf, nodes_at_insert=len(graph.nodes), world_epoch=lib.world_epoch)
        lib.insert(entry)
        return entry
    stored = list(reversed(answer.config_path)) if reverse else list(answer.config_path)
    entry = SolutionEntry(key, stored, answer.cost, nodes_at_insert=len(graph.nodes), world_epoch=lib.world_epoch)
    lib.insert(entry)
    return lib.entries[key]


def _resolve(lib, graph, x1, x2, model, world, params) -> tuple[SolutionEntry, bool]:
    key, reverse = canonical_key(x1, x2)
    entry = lib.lookup(key)
    if entry is not None and _entry_still_valid(lib, entry, graph, model, world, params):
        lib.stats["hits"] += 1
        return entry, reverse
    if entry is not None:
        del lib.entries[key]
    return _compute_and_store(lib, key, reverse, graph, x1, x2, model, world, params), reverse


def heuristic_cost(
    lib: SolutionLibrary,
    graph: ReachabilityGraph,
    x1,
    x2,
    model: RobotModel,
    world: World,
    params: GraphParams,
) -> float:
    """Cached graph-path cost between two task-space points (inf if unreachable)."""
    entry, _ = _resolve(lib, graph, x1, x2, model, world, params)
    return entry.cost


def _anchors_match(path: list[Configuration], reverse: bool, anchors) -> bool:
    first, last = (path[-1], path[0]) if reverse else (path[0], path[-1])
    for have, want in ((first, anchors[0]), (last, anchors[1])):
        da = have.as_array()[:2] - want.as_array()[:2]
        if float(np.hypot(da[0], da[1])) > ANCHOR_BASE_TOL:
            return False
    return True


def _recompute_anchored(lib, key, reverse, graph, anchors, model, world, params) -> SolutionEntry | None:
    """Anchor a path at two given configurations (e.g. solved keyframes).

    The configurations are inserted as graph nodes and the path is searched
    between them, so guidance starts and ends exactly at the keyframes.
    Returns None when no anchored path exists (the stale entry stays).
    """
    lib.stats["misses"] += 1
    try:
        i1 = insert_config_node(graph, anchors[0], model, world, params)
        i2 = insert_config_node(graph, anchors[1], model, world, params)
        answer = query_path_between_nodes(graph, i1, i2, model, world, params)
    except (UnreachableQuery, DisconnectedQuery, NoPath):
        return None
    stored = list(reversed(answer.config_path)) if reverse else list(answer.config_path)
    entry = SolutionEntry(key, stored, answer.cost, nodes_at_insert=len(graph.nodes), world_epoch=lib.world_epoch)
    lib.entries[key] = entry
    return entry


def get_waypoints(
    lib: SolutionLibrary,
    graph: ReachabilityGraph,
    x1,
    x2,
    model: RobotModel,
    world: World,
    params: GraphParams,
    anchors: tuple[Configuration, Configuration] | None = None,
) -> list[Configuration]:
    """Cached configuration path from x1 to x2, in query direction.

    When anchor configurations are supplied, a cached path whose endpoints
    stand in a different base region is discarded and re-searched between
    the anchors themselves.
    """
    entry, reverse = _resolve(lib, graph, x1, x2, model, world, params)
    if math.isinf(entry.cost):
        raise NoPath(f"no cached or computable path between {x1} and {x2}")
    if anchors is not None and not _anchors_match(entry.path, reverse, anchors):
        key, reverse = canonical_key(x1, x2)
        anchored = _recompute_anchored(lib, key, reverse, graph, anchors, model, world, params)
        if anchored is not None:
            entry = anchored
        # otherwise keep the stale-basin path as best-effort guidance
    return list(reversed(entry.path)) if reverse else list(entry.path)


def dump_library(lib: SolutionLibrary) -> str:
    """Line-oriented dump: one entry header per key plus its path rows."""
    lines = ["# solution-library format 1", f"# entries {len(lib.entries)}"]
    for key in sorted(lib.entries):
        e = lib.entries[key]
        a = " ".join(f"{v * KEY_QUANTUM:.9g}" for v in key[0])
        b = " ".join(f"{v * KEY_QUANTUM:.9g}" for v in key[1])
        cost = "inf" if math.isinf(e.cost) else f"{e.cost:.9g}"
        lines.append(f"entry ({a}) ({b}) cost {cost} n {len(e.path)}")
        for q in e.path:
            lines.append("  q " + " ".join(f"{v:.9g}" for v in q.as_array()))
    return "\n".join(lines) + "\n"
