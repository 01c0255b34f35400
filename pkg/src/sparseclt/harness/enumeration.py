"""Exact expectations for tiny n by summing over all 2^{C(n,2)} graphs."""

from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from ..ensemble import AdjacencySample, EnsembleParams
from ..observables import f_n_eval
from ..resolvent import resolvent

MAX_N = 5


def all_graphs(params: EnsembleParams):
    """Yield (sample, probability) for every graph on n vertices."""
    n = params.n
    if n > MAX_N:
        raise ValueError(f"exhaustive enumeration is limited to n <= {MAX_N}")
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    q = params.edge_prob
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        k = sum(bits)
        prob = q**k * (1 - q) ** (len(pairs) - k)
        if prob == 0:
            continue
        yield AdjacencySample.from_edges(n, [e for e, b in zip(pairs, bits) if b]), prob


def exact_expectation(params: EnsembleParams, fn: Callable[[AdjacencySample], np.ndarray]):
    total = None
    for s, prob in all_graphs(params):
        v = prob * np.asarray(fn(s), dtype=complex)
        total = v if total is None else total + v
    return total


def _table(params, fn):
    vals, probs = [], []
    for s, prob in all_graphs(params):
        vals.append(np.asarray(fn(s), dtype=complex))
        probs.append(prob)
    return np.array(vals), np.array(probs)


def _centered_moment(vals, probs, scale):
    c = vals - probs @ vals
    return complex(scale * (probs @ np.prod(c, axis=1)))


def exact_mean_f(params: EnsembleParams, z, u) -> complex:
    return complex(exact_expectation(params, lambda s: f_n_eval(resolvent(s, z, method="dense"), u)))


def exact_moment_f(params: EnsembleParams, m: int, args) -> complex:
    """n^{m/2} E prod_j (f_n(z_j,u_j) - E f_n(z_j,u_j)) with the true mean."""
    args = list(args)
    vals, probs = _table(params, lambda s: [f_n_eval(resolvent(s, z, method="dense"), u) for z, u in args])
    return _centered_moment(vals, probs, params.n ** (m / 2))


def exact_moment_trace(params: EnsembleParams, m: int, zs) -> complex:
    zs = list(zs)
    vals, probs = _table(params, lambda s: [resolvent(s, z, method="dense").trace for z in zs])
    return _centered_moment(vals, probs, params.n ** (-m / 2))


def exact_linear_statistic_moments(params: EnsembleParams, phi) -> tuple[float, float]:
    """Mean and variance of N_n[phi] (exact over all graphs)."""
    vals, probs = _table(params, lambda s: [np.sum(phi(np.linalg.eigvalsh(s.dense())))])
    mean = complex(probs @ vals[:, 0])
    var = complex(probs @ np.abs(vals[:, 0] - mean) ** 2)
    return mean.real, var.real


def exact_mean_edges(params: EnsembleParams) -> float:
    return float(exact_expectation(params, lambda s: s.n_edges).real)
