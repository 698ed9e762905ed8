"""Lazy sampled reachability graph over validated end-effector points.

Nodes are task-space samples that passed IK validation; edges connect
k-nearest neighbours without collision checking and are verified lazily
when a shortest path wants to use them. Colliding edges are removed and
search repeats; orphaned nodes are repaired by Gaussian enhancement
sampling with per-round shrinking covariance. All mutation funnels through
the public operations so the graph stays one connected component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedQuery, NoPath, NoSolution, PreconditionRejected, UnreachableQuery, WorkspaceInfeasible
from .ik import IKParams, ValidatedNode, validate_node
from .model import Configuration, RobotModel, config_distance, interpolate
from .world import World, edge_collision_free

import heapq

UNCHECKED = "unchecked"
VERIFIED = "verified"
REMOVED = "removed"

ENHANCE_SAMPLES_PER_ROUND = 8
MAX_REPLANS = 500


@dataclass
class GraphParams:
    n_nodes: int = 200
    k: int = 6
    w_x: float = 1.0
    w_q: float = 0.5
    w_c: float = 0.1
    L: int = 10
    enhance_max_rounds: int = 5
    enhance_cov_init: tuple[float, float, float] = (0.04, 0.04, 0.01)
    enhance_cov_decay: float = 0.5
    rng_seed: int = 0
    ik: IKParams = field(default_factory=IKParams)

    def __post_init__(self):
        if self.n_nodes < 2:
            raise ValueError("need at least two graph nodes")
        if self.k < 1:
            raise ValueError("neighbour count k must be at least 1")
        if min(self.w_x, self.w_q, self.w_c) < 0 or (self.w_x == self.w_q == self.w_c == 0.0):
            raise ValueError("edge-cost weights must be non-negative and not all zero")
        if self.L < 1:
            raise ValueError("edge interpolation steps L must be at least 1")
        if not 0.0 < self.enhance_cov_decay < 1.0:
            raise ValueError("covariance decay must lie in (0, 1)")


@dataclass
class GraphNode:
    x: np.ndarray
    q: Configuration
    c: float
    enhanced: bool = False


@dataclass
class Edge:
    cost: float
    status: str = UNCHECKED


@dataclass
class PathAnswer:
    config_path: list[Configuration]
    cost: float
    node_path: list[int] = field(default_factory=list)


class ReachabilityGraph:
    def __init__(self, params: GraphParams):
        self.params = params
        self.nodes: list[GraphNode] = []
        self.edges: dict[tuple[int, int], Edge] = {}
        self.adj: list[set[int]] = []
        self.stats = {
            "searches": 0,
            "edge_checks": 0,
            "edges_removed": 0,
            "nodes_enhanced": 0,
            "node_validations": 0,
        }
        self._rng = np.random.default_rng(params.rng_seed)

    # -- plumbing -----------------------------------------------------------

    def _key(self, i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def edge(self, i: int, j: int) -> Edge | None:
        return self.edges.get(self._key(i, j))

    def add_node(self, node: ValidatedNode, enhanced: bool = False) -> int:
        self.nodes.append(GraphNode(node.x.copy(), node.q, node.c, enhanced))
        self.adj.append(set())
        if enhanced:
            self.stats["nodes_enhanced"] += 1
        return len(self.nodes) - 1

    def add_edge(self, i: int, j: int, cost: float, status: str = UNCHECKED) -> None:
        key = self._key(i, j)
        existing = self.edges.get(key)
        if existing is not None:
            if existing.status == REMOVED:
                return  # removed knowledge is never resurrected
            if status == VERIFIED:
                existing.status = VERIFIED
            return
        self.edges[key] = Edge(cost, status)
        if status != REMOVED:
            self.adj[i].add(j)
            self.adj[j].add(i)

    def remove_edge(self, i: int, j: int) -> None:
        key = self._key(i, j)
        edge = self.edges.get(key)
        if edge is None or edge.status == REMOVED:
            return
        edge.status = REMOVED
        self.adj[i].discard(j)
        self.adj[j].discard(i)
        self.stats["edges_removed"] += 1

    def degree(self, i: int) -> int:
        return len(self.adj[i])

    def positions(self) -> np.ndarray:
        return np.asarray([n.x for n in self.nodes])

    def components(self) -> list[list[int]]:
        seen = [False] * len(self.nodes)
        comps = []
        for start in range(len(self.nodes)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v in self.adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def _validate(self, x: np.ndarray, model: RobotModel, world: World, ik: IKParams, seed=None) -> ValidatedNode:
        self.stats["node_validations"] += 1
        return validate_node(x, model, world, ik, seed=seed, restart_seed=int(self._rng.integers(2**31)))

    def nearest(self, x: np.ndarray, count: int, exclude: set[int] = frozenset()) -> list[int]:
        pos = self.positions()
        if pos.shape[0] == 0:
            return []
        d = np.linalg.norm(pos - np.asarray(x), axis=1)
        order = [int(i) for i in np.argsort(d, kind="stable") if int(i) not in exclude]
        return order[:count]


def edge_cost(n1, n2, params: GraphParams) -> float:
    """Weighted Cartesian + configuration distance plus both nodes' IK costs."""
    dx = float(np.linalg.norm(np.asarray(n1.x) - np.asarray(n2.x)))
    dq = config_distance(n1.q, n2.q)
    return params.w_x * dx + params.w_q * dq + params.w_c * (n1.c + n2.c)


def construct_graph(world: World, model: RobotModel, params: GraphParams) -> ReachabilityGraph:
    """Sample and validate nodes, then wire k-nearest-neighbour lazy edges."""
    graph = ReachabilityGraph(params)
    budget = 100 * params.n_nodes
    attempts = 0
    while len(graph.nodes) < params.n_nodes and attempts < budget:
        attempts += 1
        x = graph._rng.uniform(world.p_min, world.p_max)
        try:
            node = graph._validate(x, model, world, params.ik)
        except (PreconditionRejected, NoSolution):
            continue
        graph.add_node(node)
    if len(graph.nodes) < params.n_nodes:
        raise WorkspaceInfeasible(
            f"validated only {len(graph.nodes)}/{params.n_nodes} nodes in {budget} attempts"
        )
    pos = graph.positions()
    for i in range(len(graph.nodes)):
        d = np.linalg.norm(pos - pos[i], axis=1)
        order = np.argsort(d, kind="stable")
        picked = 0
        for j in order:
            j = int(j)
            if j == i:
                continue
            graph.add_edge(i, j, edge_cost(graph.nodes[i], graph.nodes[j], params))
            picked += 1
            if picked >= params.k:
                break
    _ensure_connected(graph, model, world, params)
    return graph


def _bridge_components(graph: ReachabilityGraph) -> bool:
    """Join the two closest components with a lazy edge; False if impossible."""
    comps = graph.components()
    if len(comps) <= 1:
        return True
    pos = graph.positions()
    best = None
    base = comps[0]
    rest = [i for comp in comps[1:] for i in comp]
    for i in base:
        d = np.linalg.norm(pos[rest] - pos[i], axis=1)
        for idx in np.argsort(d, kind="stable"):
            j = rest[int(idx)]
            if graph.edge(i, j) is None:
                cand = (float(d[int(idx)]), i, j)
                if best is None or cand < best:
                    best = cand
                break
    if best is None:
        return False
    _, i, j = best
    graph.add_edge(i, j, edge_cost(graph.nodes[i], graph.nodes[j], graph.params))
    return True


def _ensure_connected(graph: ReachabilityGraph, model: RobotModel, world: World, params: GraphParams) -> bool:
    guard = 0
    while not graph.is_connected() and guard < 4 * len(graph.nodes) + 8:
        guard += 1
        if _bridge_components(graph):
            continue
        # every cross pair already has a removed record: enhance near the gap
        comps = graph.components()
        pos = graph.positions()
        a = comps[0]
        b = [i for comp in comps[1:] for i in comp]
        d = np.linalg.norm(pos[a][:, None, :] - pos[b][None, :, :], axis=-1)
        ai, bi = np.unravel_index(int(np.argmin(d)), d.shape)
        center = 0.5 * (pos[a[ai]] + pos[b[bi]])
        if not enhance_around(graph, center, model, world, params):
            return False
    return graph.is_connected()


def _commit_connected_node(
    graph: ReachabilityGraph,
    node: ValidatedNode,
    model: RobotModel,
    world: World,
    params: GraphParams,
    enhanced: bool = False,
) -> int:
    """Insert a validated node once at least one eager edge check survives.

    Edges to the k nearest nodes are collision-checked before the node is
    committed; when none survives, enhancement sampling around the point
    runs until one does or the rounds are exhausted.
    """
    x = node.x
    checked: dict[int, bool] = {}

    def try_connect() -> list[int]:
        survivors = []
        for j in graph.nearest(x, params.k):
            if j not in checked:
                graph.stats["edge_checks"] += 1
                checked[j] = edge_collision_free(model, node.q, graph.nodes[j].q, world, None, params.L)
            if checked[j]:
                survivors.append(j)
        return survivors

    survivors = try_connect()
    if not survivors:
        enhance_around(graph, x, model, world, params, until=lambda: bool(try_connect()), seed=node.q)
        survivors = try_connect()
        if not survivors:
            raise DisconnectedQuery(f"could not connect query point {x} to the graph")
    idx = graph.add_node(node, enhanced=enhanced)
    for j in sorted(checked):
        cost = edge_cost(graph.nodes[idx], graph.nodes[j], params)
        if checked[j]:
            graph.add_edge(idx, j, cost, VERIFIED)
        else:
            graph.add_edge(idx, j, cost, UNCHECKED)
            graph.remove_edge(idx, j)
    return idx


def connect_query_point(
    graph: ReachabilityGraph, x: np.ndarray, model: RobotModel, world: World, params: GraphParams
) -> int:
    """Validate a task-space query point and insert it with checked edges.

    Validation retries with fresh restart draws before the point is
    declared unreachable, since a pruned query poisons the whole branch.
    """
    x = np.asarray(x, dtype=float)
    seed_q = None
    near = graph.nearest(x, 1)
    if near:
        seed_q = graph.nodes[near[0]].q
    node = None
    last_exc: Exception | None = None
    for attempt in range(3):
        try:
            node = graph._validate(x, model, world, params.ik, seed=seed_q if attempt == 0 else None)
            break
        except PreconditionRejected as exc:
            raise UnreachableQuery(str(exc)) from exc
        except NoSolution as exc:
            last_exc = exc
    if node is None:
        raise UnreachableQuery(str(last_exc)) from last_exc
    return _commit_connected_node(graph, node, model, world, params)


def insert_config_node(
    graph: ReachabilityGraph, q, model: RobotModel, world: World, params: GraphParams
) -> int:
    """Insert an externally solved configuration (e.g. a keyframe) as a node.

    The node's point is the configuration's own end-effector position, so
    guidance paths can start and end exactly at keyframe configurations.
    """
    from .model import forward_kinematics

    ee, _ = forward_kinematics(model, q)
    node = ValidatedNode(x=ee, q=q, c=0.0)
    return _commit_connected_node(graph, node, model, world, params)


def enhance_around(
    graph: ReachabilityGraph,
    center: np.ndarray,
    model: RobotModel,
    world: World,
    params: GraphParams,
    _trace: list | None = None,
    until=None,
    seed=None,
) -> list[int]:
    """Gaussian waypoint sampling around a point, shrinking covariance per round.

    Candidates must validate and hold at least one collision-checked edge.
    Stops after any round that achieves connectivity (the `until` predicate,
    defaulting to whole-graph connectedness). A seed configuration biases
    candidate IK into the same approach basin. Returns added node indices.
    """
    center = np.asarray(center, dtype=float)
    cov = np.asarray(params.enhance_cov_init, dtype=float)
    if until is None:
        until = graph.is_connected
    added: list[int] = []
    for r in range(params.enhance_max_rounds):
        std = np.sqrt(cov * (params.enhance_cov_decay**r))
        for _ in range(ENHANCE_SAMPLES_PER_ROUND):
            cand = graph._rng.normal(center, std)
            cand = np.clip(cand, world.p_min, world.p_max)
            if _trace is not None:
                _trace.append((r, cand.copy()))
            try:
                node = graph._validate(cand, model, world, params.ik, seed=seed)
            except (PreconditionRejected, NoSolution):
                continue
            neighbours = graph.nearest(cand, params.k)
            survivors = []
            for j in neighbours:
                graph.stats["edge_checks"] += 1
                if edge_collision_free(model, node.q, graph.nodes[j].q, world, None, params.L):
                    survivors.append(j)
            if not survivors:
                continue
            idx = graph.add_node(node, enhanced=True)
            for j in survivors:
                graph.add_edge(idx, j, edge_cost(graph.nodes[idx], graph.nodes[j], params), VERIFIED)
            added.append(idx)
        if until():
            break
    return added


def _repair_orphan(graph: ReachabilityGraph, v: int, model: RobotModel, world: World, params: GraphParams) -> bool:
    """Replace a fully disconnected node in place with the best nearby sample.

    The replacement is the lowest-IK-cost candidate that can hold at least
    one verified edge; node indices of all other nodes are preserved.
    """
    center = graph.nodes[v].x
    cov = np.asarray(params.enhance_cov_init, dtype=float)
    best = None  # (c, node, survivor edge list)
    for r in range(params.enhance_max_rounds):
        std = np.sqrt(cov * (params.enhance_cov_decay**r))
        for _ in range(ENHANCE_SAMPLES_PER_ROUND):
            cand = np.clip(graph._rng.normal(center, std), world.p_min, world.p_max)
            try:
                node = graph._validate(cand, model, world, params.ik)
            except (PreconditionRejected, NoSolution):
                continue
            neighbours = graph.nearest(cand, params.k, exclude={v})
            survivors = []
            for j in neighbours:
                graph.stats["edge_checks"] += 1
                if edge_collision_free(model, node.q, graph.nodes[j].q, world, None, params.L):
                    survivors.append(j)
            if survivors and (best is None or node.c < best[0]):
                best = (node.c, node, survivors)
        if best is not None:
            break
    if best is None:
        return False
    _, node, survivors = best
    graph.nodes[v] = GraphNode(node.x.copy(), node.q, node.c, enhanced=True)
    graph.stats["nodes_enhanced"] += 1
    for key in [k for k in graph.edges if v in k]:
        del graph.edges[key]
    for u in list(graph.adj[v]):
        graph.adj[u].discard(v)
    graph.adj[v] = set()
    for j in survivors:
        graph.add_edge(v, j, edge_cost(graph.nodes[v], graph.nodes[j], params), VERIFIED)
    return True


def dijkstra(graph: ReachabilityGraph, src: int, dst: int) -> tuple[list[int], float]:
    """Shortest path over non-removed edges; ties break on smaller node index."""
    n = len(graph.nodes)
    if not (0 <= src < n and 0 <= dst < n):
        raise NoPath(f"invalid node indices {src}, {dst}")
    graph.stats["searches"] += 1
    if src == dst:
        return [src], 0.0
    dist = {src: 0.0}
    parent: dict[int, int] = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            path = [u]
            while path[-1] != src:
                path.append(parent[path[-1]])
            return path[::-1], d
        for v in sorted(graph.adj[u]):
            edge = graph.edge(u, v)
            nd = d + edge.cost
            if v not in dist or nd < dist[v] - 1e-15:
                dist[v] = nd
                parent[v] = u
                heapq.heappush(heap, (nd, v))
    raise NoPath(f"nodes {src} and {dst} are not connected")


def query_path_between_nodes(
    graph: ReachabilityGraph,
    i_s: int,
    i_g: int,
    model: RobotModel,
    world: World,
    params: GraphParams,
) -> PathAnswer:
    """Lazily verify shortest paths between two existing nodes until one holds.

    Colliding edges are removed permanently; orphaned nodes are repaired in
    place; the verified path is linearly interpolated at resolution L.
    """
    for _ in range(MAX_REPLANS):
        try:
            node_seq, cost = dijkstra(graph, i_s, i_g)
        except NoPath:
            if not _ensure_connected(graph, model, world, params):
                raise
            continue
        pending = [
            (a, b)
            for a, b in zip(node_seq, node_seq[1:])
            if graph.edge(a, b).status == UNCHECKED
        ]
        if not pending:
            configs: list[Configuration] = [graph.nodes[node_seq[0]].q]
            for a, b in zip(node_seq, node_seq[1:]):
                configs.extend(interpolate(graph.nodes[a].q, graph.nodes[b].q, params.L)[1:])
            return PathAnswer(configs, cost, node_seq)
        for a, b in pending:
            graph.stats["edge_checks"] += 1
            if edge_collision_free(model, graph.nodes[a].q, graph.nodes[b].q, world, None, params.L):
                graph.edge(a, b).status = VERIFIED
            else:
                graph.remove_edge(a, b)
                for v in (a, b):
                    if graph.degree(v) == 0:
                        _repair_orphan(graph, v, model, world, params)
    _ensure_connected(graph, model, world, params)
    raise NoPath(f"exhausted replanning between nodes {i_s} and {i_g}")


def query_path(
    graph: ReachabilityGraph,
    x_start: np.ndarray,
    x_goal: np.ndarray,
    model: RobotModel,
    world: World,
    params: GraphParams,
) -> PathAnswer:
    """Connect both endpoints, then lazily verify shortest paths until one holds."""
    x_start = np.asarray(x_start, dtype=float)
    x_goal = np.asarray(x_goal, dtype=float)
    if np.linalg.norm(x_start - x_goal) < 1e-9:
        idx = connect_query_point(graph, x_start, model, world, params)
        return PathAnswer([graph.nodes[idx].q], 0.0, [idx])
    i_s = connect_query_point(graph, x_start, model, world, params)
    i_g = connect_query_point(graph, x_goal, model, world, params)
    return query_path_between_nodes(graph, i_s, i_g, model, world, params)


def dump_graph(graph: ReachabilityGraph) -> str:
    """Line-oriented text dump of nodes and edges for plotting."""
    lines = [
        "# reachability-graph format 1",
        f"# nodes {len(graph.nodes)} edges {len(graph.edges)}",
    ]
    for i, n in enumerate(graph.nodes):
        q = " ".join(f"{v:.9g}" for v in n.q.as_array())
        lines.append(
            f"node {i} {n.x[0]:.9g} {n.x[1]:.9g} {n.x[2]:.9g} {n.c:.9g} {1 if n.enhanced else 0} {q}"
        )
    for (i, j), e in sorted(graph.edges.items()):
        lines.append(f"edge {i} {j} {e.cost:.9g} {e.status}")
    return "\n".join(lines) + "\n"
