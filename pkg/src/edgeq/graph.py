"""Device collaboration graph and neighbor-conditioned joint states."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .sim import home_node

TOPOLOGIES = ("ring", "star", "complete", "edge-cluster")


@dataclass(frozen=True)
class CollabGraph:
    n_devices: int
    edges: frozenset[tuple[int, int]]  # stored as (lo, hi)

    def __post_init__(self):
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on device {a}")
            if not (0 <= a < self.n_devices and 0 <= b < self.n_devices):
                raise ValueError(f"edge ({a}, {b}) references a device outside [0, {self.n_devices})")
        # Precomputed adjacency lists, sorted for deterministic iteration.
        adj: list[list[int]] = [[] for _ in range(self.n_devices)]
        for a, b in sorted(self.edges):
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(x)) for x in adj))

    def neighbors(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.n_devices:
            raise IndexError(f"device index {i} out of range [0, {self.n_devices})")
        return self._adj[i]

    def adjacency(self) -> np.ndarray:
        m = np.zeros((self.n_devices, self.n_devices))
        for a, b in self.edges:
            m[a, b] = m[b, a] = 1.0
        return m


def _norm(edges) -> frozenset[tuple[int, int]]:
    return frozenset((min(a, b), max(a, b)) for a, b in edges)


def build_graph(n_devices: int, topology="edge-cluster", n_clusters: int = 2) -> CollabGraph:
    """Build a graph. ``topology`` is a name from TOPOLOGIES or an explicit edge list.

    ``edge-cluster`` links every pair of devices attached to the same edge node,
    using the same contiguous device-to-node assignment as the simulator.
    """
    if n_devices < 1:
        raise ValueError("n_devices must be >= 1")
    if not isinstance(topology, str):
        edges = [tuple(int(v) for v in e) for e in topology]
        for e in edges:
            if len(e) != 2:
                raise ValueError(f"edge {e} must have exactly two endpoints")
        return CollabGraph(n_devices, _norm(edges))
    if n_devices == 1:
        return CollabGraph(1, frozenset())
    if topology == "ring":
        if n_devices == 2:
            return CollabGraph(2, _norm([(0, 1)]))
        return CollabGraph(n_devices, _norm((i, (i + 1) % n_devices) for i in range(n_devices)))
    if topology == "star":
        return CollabGraph(n_devices, _norm((0, i) for i in range(1, n_devices)))
    if topology == "complete":
        return CollabGraph(n_devices, _norm(combinations(range(n_devices), 2)))
    if topology == "edge-cluster":
        if n_clusters < 1:
            raise ValueError("edge-cluster needs at least one cluster")
        groups: dict[int, list[int]] = {}
        for i in range(n_devices):
            groups.setdefault(home_node(i, n_devices, n_clusters), []).append(i)
        return CollabGraph(
            n_devices, _norm(p for g in groups.values() for p in combinations(g, 2))
        )
    raise ValueError(f"unknown topology {topology!r}; expected one of {TOPOLOGIES} or an edge list")


def aggregate_neighbors(graph: CollabGraph, states, i: int, how: str = "mean") -> np.ndarray:
    """Element-wise mean (or max) of neighbor state vectors; zeros if isolated."""
    states = np.asarray(states, dtype=float)
    if len(states) != graph.n_devices:
        raise ValueError(f"expected {graph.n_devices} states, got {len(states)}")
    nbrs = graph.neighbors(i)
    if not nbrs:
        return np.zeros(states.shape[1])
    block = states[list(nbrs)]
    if how == "mean":
        return block.mean(axis=0)
    if how == "max":
        return block.max(axis=0)
    raise ValueError(f"unknown aggregation {how!r}")


@dataclass(frozen=True)
class JointState:
    local: np.ndarray
    neighbor_agg: np.ndarray
    combined: np.ndarray


def joint_state(local, agg) -> JointState:
    local = np.asarray(local, dtype=float)
    agg = np.asarray(agg, dtype=float)
    if local.shape != agg.shape or local.ndim != 1:
        raise ValueError(f"arity mismatch: local {local.shape} vs aggregate {agg.shape}")
    combined = np.concatenate([local, agg])
    if not np.all(np.isfinite(combined)):
        raise ValueError("joint state has non-finite entries")
    return JointState(local, agg, combined)


class NeighborConditioner:
    """Turns per-device feature rows into joint-state rows for the Q-network.

    With ``stride`` > 1 the neighbor aggregate is refreshed only every
    ``stride`` calls and reused in between.
    """

    def __init__(self, graph: CollabGraph, how: str = "mean", stride: int = 1):
        if stride < 1:
            raise ValueError("stride must be >= 1")
        if how not in ("mean", "max"):
            raise ValueError(f"unknown aggregation {how!r}")
        self.graph = graph
        self.how = how
        self.stride = stride
        n = graph.n_devices
        adj = graph.adjacency()
        deg = adj.sum(axis=1, keepdims=True)
        self._mean_op = np.divide(adj, deg, out=np.zeros_like(adj), where=deg > 0)
        self.reset()

    def reset(self) -> None:
        self._calls = 0
        self._agg: np.ndarray | None = None

    def _aggregate(self, feats: np.ndarray) -> np.ndarray:
        if self.how == "mean":
            return self._mean_op @ feats
        return np.stack(
            [aggregate_neighbors(self.graph, feats, i, "max") for i in range(self.graph.n_devices)]
        )

    def __call__(self, feats: np.ndarray) -> np.ndarray:
        feats = np.asarray(feats, dtype=float)
        if self._agg is None or self._calls % self.stride == 0:
            self._agg = self._aggregate(feats)
        self._calls += 1
        return np.concatenate([feats, self._agg], axis=1)
