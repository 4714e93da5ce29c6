"""Per-step network graph built from node positions and radio state."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .radio import FailureParams, RadioParams, capacity_matrix, revival_probability


@dataclass(frozen=True)
class TopologySnapshot:
    n: int
    adjacency: np.ndarray  # (n, n) bool, symmetric, zero diagonal
    capacity: np.ndarray  # (n, n) bit/s, zero where there is no edge
    operational: np.ndarray  # (n,) bool
    cluster_id: np.ndarray  # (n,) int
    step: int = 0
    # transient up/down memory for in-range pairs; out-of-range pairs reset to up
    link_state: np.ndarray | None = None
    nbrs: tuple[tuple[int, ...], ...] = ()

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def members(self, cluster: int) -> list[int]:
        return np.flatnonzero(self.cluster_id == cluster).tolist()


def neighbor_lists(adjacency: np.ndarray) -> tuple[tuple[int, ...], ...]:
    rows, cols = np.nonzero(adjacency)
    bounds = np.searchsorted(rows, np.arange(adjacency.shape[0] + 1)).tolist()
    cols = cols.tolist()
    return tuple(tuple(cols[bounds[i]:bounds[i + 1]]) for i in range(adjacency.shape[0]))


def cluster_members(s: TopologySnapshot) -> list[frozenset[int]]:
    """Node sets indexed by cluster id."""
    groups: list[set[int]] = [set() for _ in range(int(s.cluster_id.max()) + 1)]
    for v, c in enumerate(s.cluster_id.tolist()):
        groups[c].add(v)
    return [frozenset(g) for g in groups]


def _bfs_labels(n: int, nbrs: Sequence[Sequence[int]]) -> np.ndarray:
    labels = np.full(n, -1, dtype=np.int64)
    cid = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = cid
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in nbrs[u]:
                if labels[w] < 0:
                    labels[w] = cid
                    queue.append(w)
        cid += 1
    return labels


def assign_clusters(s: TopologySnapshot) -> TopologySnapshot:
    """Label connected components by BFS, numbered by their lowest node id.

    Isolated nodes get a cluster of their own.
    """
    nbrs = s.nbrs or neighbor_lists(s.adjacency)
    labels = _bfs_labels(s.n, nbrs)
    return TopologySnapshot(s.n, s.adjacency, s.capacity, s.operational, labels,
                            s.step, s.link_state, tuple(nbrs))


def from_adjacency(adjacency: np.ndarray, operational: np.ndarray | None = None,
                   step: int = 0) -> TopologySnapshot:
    """Snapshot from a raw adjacency matrix (unit capacity on every edge)."""
    adj = np.asarray(adjacency, dtype=bool).copy()
    np.fill_diagonal(adj, False)
    adj |= adj.T
    n = adj.shape[0]
    op = np.ones(n, dtype=bool) if operational is None else np.asarray(operational, dtype=bool)
    adj &= op[:, None] & op[None, :]
    snap = TopologySnapshot(n, adj, adj.astype(float), op, np.zeros(n, dtype=np.int64), step)
    return assign_clusters(snap)


def from_edges(n: int, edges: Iterable[tuple[int, int]], **kw) -> TopologySnapshot:
    adj = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        if i == j:
            raise ValueError(f"self-loop on node {i}")
        adj[i, j] = adj[j, i] = True
    return from_adjacency(adj, **kw)


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt((diff**2).sum(axis=-1))


def build_snapshot(positions: np.ndarray, rp: RadioParams, fp: FailureParams,
                   prev: TopologySnapshot | None, rng: np.random.Generator, *,
                   operational: np.ndarray | None = None, step: int = 0,
                   dt: float = 1.0, fixed_edges: np.ndarray | None = None) -> TopologySnapshot:
    """Rebuild the graph for one step.

    ``positions`` is an (n, 2) array. A pair is linked when it is within radio
    range (or listed in ``fixed_edges``), both nodes are operational, and the
    pair's transient process is up. One uniform draw is consumed per unordered
    pair every step, whether or not the pair is in range.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    op = np.ones(n, dtype=bool) if operational is None else np.asarray(operational, dtype=bool)

    dist = pairwise_distances(positions)
    cap = capacity_matrix(dist, rp)
    if fixed_edges is not None:
        in_range = np.asarray(fixed_edges, dtype=bool).copy()
        cap = np.where(in_range, np.where(np.isfinite(cap), cap, rp.capacity_threshold_bps), 0.0)
    else:
        in_range = cap >= rp.capacity_threshold_bps
    np.fill_diagonal(in_range, False)

    iu = np.triu_indices(n, 1)
    u = rng.random(len(iu[0]))
    prev_up = (prev.link_state[iu] if prev is not None and prev.link_state is not None
               else np.ones(len(u), dtype=bool))
    # a revived link must also survive this step's failure draw
    revive = revival_probability(fp, dt) * (1.0 - fp.lfp)
    up = np.where(prev_up, u >= fp.lfp, u < revive) & in_range[iu]

    state = np.ones((n, n), dtype=bool)
    state[iu] = np.where(in_range[iu], up, True)
    state.T[iu] = state[iu]

    adj = np.zeros((n, n), dtype=bool)
    adj[iu] = up
    adj |= adj.T
    adj &= op[:, None] & op[None, :]
    capacity = np.where(adj, cap, 0.0)

    nbrs = neighbor_lists(adj)
    labels = _bfs_labels(n, nbrs)
    return TopologySnapshot(n, adj, capacity, op, labels, step, state, nbrs)


def neighbors(s: TopologySnapshot, v: int) -> set[int]:
    if not 0 <= v < s.n:
        raise KeyError(f"unknown node id {v}")
    if s.nbrs:
        return set(s.nbrs[v])
    return set(np.flatnonzero(s.adjacency[v]).tolist())


def dump_edges(s: TopologySnapshot, out: TextIO) -> None:
    """Write one ``step i j capacity_bps`` line per edge (i < j)."""
    for i, j in s.edges():
        out.write(f"{s.step} {i} {j} {s.capacity[i, j]:.6g}\n")
