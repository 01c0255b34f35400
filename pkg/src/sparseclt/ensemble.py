"""Binomial random graphs with edge probability p/n and their cavity variants."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .rng import STREAM_ADJACENCY, replica_generator


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    p: float
    base_seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if self.p < 0:
            raise ValueError(f"p must be nonnegative, got {self.p}")
        if self.p / self.n > 1:
            raise ValueError(f"edge probability p/n = {self.p / self.n:g} exceeds 1")

    @property
    def edge_prob(self) -> float:
        return self.p / self.n


def _normalize_edges(edges, n: int) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if (e < 0).any() or (e >= n).any():
        raise ValueError("edge index out of range")
    if (e[:, 0] == e[:, 1]).any():
        raise ValueError("self-loops are not allowed")
    e = np.sort(e, axis=1)
    e = np.unique(e, axis=0)
    return e


@dataclass(frozen=True, eq=False)
class AdjacencySample:
    """One realization of the 0/1 adjacency matrix, stored as unordered pairs i < j."""

    n: int
    edges: np.ndarray = field(repr=False)
    replica_id: int = -1

    def __post_init__(self):
        e = _normalize_edges(self.edges, self.n)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @classmethod
    def from_edges(cls, n: int, edges, replica_id: int = -1) -> "AdjacencySample":
        return cls(n, np.asarray(list(edges), dtype=np.int64), replica_id)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> frozenset:
        return frozenset((int(i), int(j)) for i, j in self.edges)

    @cached_property
    def neighbors(self) -> list[list[int]]:
        nb: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges.tolist():
            nb[i].append(j)
            nb[j].append(i)
        return nb

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        if self.n_edges:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def sparse(self) -> sp.csr_matrix:
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * len(i))
        return sp.csr_matrix((data, (np.r_[i, j], np.r_[j, i])), shape=(self.n, self.n))

    def same_edges(self, other: "AdjacencySample") -> bool:
        return self.n == other.n and np.array_equal(self.edges, other.edges)


def _unrank_pairs(idx: np.ndarray) -> np.ndarray:
    # index k enumerates pairs (i, j), j < i, as k = i(i-1)/2 + j
    i = np.floor((1.0 + np.sqrt(1.0 + 8.0 * idx)) / 2.0).astype(np.int64)
    i = np.where(i * (i - 1) // 2 > idx, i - 1, i)
    i = np.where((i + 1) * i // 2 <= idx, i + 1, i)
    j = idx - i * (i - 1) // 2
    return np.stack([j, i], axis=1)


def sample_adjacency(params: EnsembleParams, replica_id: int) -> AdjacencySample:
    """Draw each of the n(n-1)/2 pairs independently with probability p/n.

    The edge count is drawn from its binomial law and the edge set is then a
    uniform subset of that size, which is the same distribution as independent
    Bernoulli trials but costs O(#edges).
    """
    n, q = params.n, params.edge_prob
    rng = replica_generator(params.base_seed, replica_id, STREAM_ADJACENCY)
    m = n * (n - 1) // 2
    if m == 0 or q == 0.0:
        return AdjacencySample(n, np.empty((0, 2), dtype=np.int64), replica_id)
    k = int(rng.binomial(m, q))
    idx = np.sort(rng.choice(m, size=k, replace=False)) if k < m else np.arange(m)
    return AdjacencySample(n, _unrank_pairs(idx.astype(np.int64)), replica_id)


def cavity_delete(sample: AdjacencySample, i: int) -> AdjacencySample:
    """Zero row and column i; the dimension is unchanged."""
    if not 0 <= i < sample.n:
        raise IndexError(f"vertex {i} out of range for n={sample.n}")
    e = sample.edges
    keep = (e[:, 0] != i) & (e[:, 1] != i)
    return AdjacencySample(sample.n, e[keep], sample.replica_id)


def first_row_vector(sample: AdjacencySample) -> np.ndarray:
    a = np.zeros(sample.n)
    a[sample.neighbors[0]] = 1.0
    return a


def with_first_row(cavity: AdjacencySample, row: np.ndarray) -> AdjacencySample:
    """Attach vertex 0 to the indices where ``row`` is nonzero."""
    if cavity.degree(0):
        raise ValueError("vertex 0 is not isolated in the cavity sample")
    nbrs = np.flatnonzero(row)
    nbrs = nbrs[nbrs != 0]
    extra = np.stack([np.zeros_like(nbrs), nbrs], axis=1)
    return AdjacencySample(cavity.n, np.concatenate([cavity.edges, extra]), cavity.replica_id)


def write_edge_list(sample: AdjacencySample, path) -> Path:
    path = Path(path)
    lines = [f"n {sample.n}"] + [f"{i} {j}" for i, j in sample.edges.tolist()]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_edge_list(path, replica_id: int = -1) -> AdjacencySample:
    path = Path(path)
    rows = path.read_text().split("\n")
    head = rows[0].split()
    if len(head) != 2 or head[0] != "n":
        raise ValueError(f"{path}: first line must be 'n <n>'")
    n = int(head[1])
    edges = [tuple(int(t) for t in r.split()) for r in rows[1:] if r.strip()]
    return AdjacencySample(n, np.array(edges, dtype=np.int64).reshape(-1, 2), replica_id)
