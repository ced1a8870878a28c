"""Louvain modularity maximization on symmetrized retweet networks."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import AnalysisError
from .graph import RetweetGraph

MAX_BRUTE_FORCE_NODES = 12


@dataclass(frozen=True)
class LouvainParams:
    resolution: float = 1.0
    seed: int = 0
    max_passes: int = 100
    min_gain: float = 1e-9
    restarts: int = 8

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if self.min_gain < 0:
            raise ValueError("min_gain must be non-negative")


@dataclass(frozen=True)
class Partition:
    assignment: dict  # node -> community id
    modularity: float
    community_sizes: dict = field(default_factory=dict)

    def members(self, community: int) -> list:
        return sorted(n for n, c in self.assignment.items() if c == community)

    @property
    def n_communities(self) -> int:
        return len(self.community_sizes)


class Move(NamedTuple):
    """One accepted local move, as recorded in the audit trace."""

    level: int
    node: int
    source: int
    target: int
    gain: float


def modularity(graph: RetweetGraph, assignment, resolution: float = 1.0) -> float:
    """Newman-Girvan modularity of ``assignment`` on the symmetrized graph.

    Sums per community: intra weight over m minus resolution times the squared
    share of degree. Returns 0 for a graph without edges.
    """
    for n in graph.nodes:
        if n not in assignment:
            raise KeyError(f"node {n!r} missing from assignment")
    m = float(graph.total_weight)
    if m == 0:
        return 0.0
    intra: Counter = Counter()
    degree: Counter = Counter()
    for (u, v), w in graph.edges.items():
        cu, cv = assignment[u], assignment[v]
        degree[cu] += w
        degree[cv] += w
        if cu == cv:
            intra[cu] += w
    return sum(intra[c] / m - resolution * (degree[c] / (2 * m)) ** 2 for c in degree)


def canonical_partition(graph: RetweetGraph, labels, resolution: float = 1.0) -> Partition:
    """Renumber communities by decreasing size, ties by smallest member account."""
    groups: dict = {}
    for node in graph.nodes:
        groups.setdefault(labels[node], []).append(node)
    ordered = sorted(groups.values(), key=lambda ms: (-len(ms), min(ms)))
    assignment = {}
    for cid, members in enumerate(ordered):
        for node in members:
            assignment[node] = cid
    assignment = {n: assignment[n] for n in graph.nodes}
    return Partition(assignment, modularity(graph, assignment, resolution),
                     {cid: len(ms) for cid, ms in enumerate(ordered)})


@njit(cache=True)
def _move_nodes(indptr, indices, weights, k, m2, gamma, min_gain, order, max_sweeps, record):
    """Phase one: greedy node moves until no move gains more than ``min_gain``.

    Returns the community array, whether anything moved, and (if ``record``)
    the accepted moves as (node, source, target, gain) tuples.
    """
    n = k.shape[0]
    comm = np.arange(n)
    tot = k.copy()
    m = m2 / 2.0
    link = np.zeros(n)
    stamp = np.full(n, -1)
    touched = np.empty(n, dtype=np.int64)
    moves = [(0, 0, 0, 0.0)]
    moves.pop()
    moved_any = False
    visit = 0
    for _ in range(max_sweeps):
        moved = False
        for idx in range(n):
            i = order[idx]
            visit += 1
            a = comm[i]
            ki = k[i]
            n_touched = 0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if j == i:
                    continue
                c = comm[j]
                if stamp[c] != visit:
                    stamp[c] = visit
                    link[c] = 0.0
                    touched[n_touched] = c
                    n_touched += 1
                link[c] += weights[p]
            tot[a] -= ki
            stay = -gamma * tot[a] * ki / m2
            if stamp[a] == visit:
                stay += link[a]
            best = a
            best_gain = 0.0
            found = False
            for t in range(n_touched):
                c = touched[t]
                if c == a:
                    continue
                g = link[c] - gamma * tot[c] * ki / m2
                if not found or g > best_gain or (g == best_gain and c < best):
                    best = c
                    best_gain = g
                    found = True
            if found and (best_gain - stay) / m > min_gain:
                if record:
                    moves.append((i, a, best, (best_gain - stay) / m))
                comm[i] = best
                moved = True
            tot[comm[i]] += ki
        if not moved:
            break
        moved_any = True
    return comm, moved_any, moves


def _csr(n, rows, cols, vals):
    """Sum duplicate (row, col) entries and return CSR arrays."""
    key = rows * n + cols
    uniq, inverse = np.unique(key, return_inverse=True)
    data = np.bincount(inverse, weights=vals)
    r = uniq // n
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n), out=indptr[1:])
    return indptr, (uniq % n).astype(np.int64), data


def _expand(indptr):
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def _louvain_run(indptr, indices, weights, m2, params, rng, audit):
    n = len(indptr) - 1
    membership = np.arange(n)
    k = np.bincount(_expand(indptr), weights=weights, minlength=n)
    for level in range(params.max_passes):
        order = rng.permutation(len(k))
        comm, moved, moves = _move_nodes(indptr, indices, weights, k, m2, params.resolution,
                                         params.min_gain, order, params.max_passes,
                                         audit is not None)
        if audit is not None:
            audit.extend(Move(level, *mv) for mv in moves)
        if not moved:
            break
        _, relabel = np.unique(comm, return_inverse=True)
        membership = relabel[membership]
        n_new = int(relabel.max()) + 1
        rows = relabel[_expand(indptr)]
        cols = relabel[indices]
        indptr, indices, weights = _csr(n_new, rows, cols, weights)
        k = np.bincount(_expand(indptr), weights=weights, minlength=n_new)
    return membership


def louvain(graph: RetweetGraph, params: LouvainParams = LouvainParams(), audit=None) -> Partition:
    """Two-phase Louvain: local moves, then community aggregation, repeated.

    Node visit order at each level is a shuffle drawn from the seeded
    generator; among equal-gain target communities the smallest id wins. The
    whole procedure runs ``params.restarts`` times on one seeded stream and
    the highest-modularity result is kept (earliest on ties). Pass a list as
    ``audit`` to collect the accepted :class:`Move` records of the kept run.
    """
    nodes = graph.nodes
    if not nodes:
        return Partition({}, 0.0, {})
    n = len(nodes)
    index = graph.node_index
    src = np.fromiter((index[u] for u, _ in graph.edges), dtype=np.int64, count=len(graph.edges))
    dst = np.fromiter((index[v] for _, v in graph.edges), dtype=np.int64, count=len(graph.edges))
    w = np.fromiter(graph.edges.values(), dtype=float, count=len(graph.edges))
    indptr, indices, weights = _csr(n, np.concatenate([src, dst]), np.concatenate([dst, src]),
                                    np.concatenate([w, w]))
    m2 = float(weights.sum())
    best = None
    if m2 > 0:
        rng = np.random.default_rng(params.seed)
        for _ in range(params.restarts):
            trace = [] if audit is not None else None
            membership = _louvain_run(indptr, indices, weights, m2, params, rng, trace)
            labels = {node: int(membership[i]) for i, node in enumerate(nodes)}
            part = canonical_partition(graph, labels, params.resolution)
            if best is None or part.modularity > best[0].modularity + 1e-12:
                best = (part, trace)
    if best is None:
        return canonical_partition(graph, {node: i for i, node in enumerate(nodes)},
                                   params.resolution)
    if audit is not None:
        audit.extend(best[1])
    return best[0]


def brute_force_partition(graph: RetweetGraph, resolution: float = 1.0) -> Partition:
    """Globally optimal partition by enumerating every set partition (≤ 12 nodes).

    Enumeration walks restricted-growth strings over the sorted nodes and
    keeps the first partition reaching the maximum.
    """
    n = len(graph.nodes)
    if n > MAX_BRUTE_FORCE_NODES:
        raise ValueError(f"brute force refuses {n} nodes (limit {MAX_BRUTE_FORCE_NODES})")
    if n == 0:
        return Partition({}, 0.0, {})
    a = np.zeros((n, n))
    for (u, v), w in graph.edges.items():
        i, j = graph.node_index[u], graph.node_index[v]
        a[i, j] += w
        a[j, i] += w
    k = a.sum(axis=1)
    m2 = k.sum()
    if m2 == 0:
        labels = dict.fromkeys(graph.nodes, 0)
        return canonical_partition(graph, labels, resolution)
    b = ((a - resolution * np.outer(k, k) / m2) / m2).tolist()

    best_q = -np.inf
    best_rgs: list = []
    rgs = [0] * n
    # block_rows[c][t] = sum of b[j][t] over nodes j already placed in block c
    block_rows: list = []

    def place(t: int, q: float):
        nonlocal best_q, best_rgs
        if t == n:
            if q > best_q + 1e-12:
                best_q, best_rgs = q, rgs.copy()
            return
        bt = b[t]
        n_blocks = len(block_rows)
        for c in range(n_blocks + 1):
            if c == n_blocks:
                block_rows.append([0.0] * n)
            row = block_rows[c]
            gain = 2 * row[t] + bt[t]
            for s in range(t + 1, n):
                row[s] += bt[s]
            rgs[t] = c
            place(t + 1, q + gain)
            for s in range(t + 1, n):
                row[s] -= bt[s]
            if c == n_blocks:
                block_rows.pop()

    place(0, 0.0)
    labels = {node: best_rgs[i] for i, node in enumerate(graph.nodes)}
    return canonical_partition(graph, labels, resolution)


# -- exports ---------------------------------------------------------------

COMMUNITY_HEADER = ("account", "community_id")


def communities_csv(partition: Partition) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMMUNITY_HEADER)
    for node in sorted(partition.assignment):
        writer.writerow((node, partition.assignment[node]))
    return buf.getvalue()


def read_communities_csv(text: str, graph: RetweetGraph, resolution: float = 1.0) -> Partition:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is not None and tuple(header) != COMMUNITY_HEADER:
        raise ValueError(f"unexpected communities header {header}")
    assignment = {acc: int(cid) for acc, cid in reader}
    missing = [n for n in graph.nodes if n not in assignment]
    if missing:
        raise AnalysisError(f"communities file lacks {len(missing)} graph nodes, e.g. {missing[0]!r}")
    assignment = {n: assignment[n] for n in graph.nodes}
    sizes = dict(sorted(Counter(assignment.values()).items()))
    return Partition(assignment, modularity(graph, assignment, resolution), sizes)


def isolated_nodes(graph: RetweetGraph) -> list:
    linked = {n for pair in graph.edges for n in pair}
    return [n for n in graph.nodes if n not in linked]


def summary_line(graph: RetweetGraph, partition: Partition) -> str:
    sizes = ",".join(str(partition.community_sizes[c]) for c in sorted(partition.community_sizes))
    return (f"hashtag={graph.hashtag} nodes={len(graph)} modularity={partition.modularity:.12f} "
            f"communities={partition.n_communities} sizes={sizes} "
            f"isolated={len(isolated_nodes(graph))}\n")
