"""Composite Gauss-Legendre rules on (0, V_max], graded geometrically toward 0."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq


@lru_cache(maxsize=None)
def _gl(order: int):
    return np.polynomial.legendre.leggauss(order)


def composite_gauss_legendre(edges, order: int):
    edges = np.asarray(edges, dtype=float)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("panel edges must increase strictly")
    x, w = _gl(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


def tail_cutoff(re_z: float, tol: float = 1e-14) -> float:
    """Smallest V with exp(-Re z V) sqrt(1+V) <= tol."""
    if re_z <= 0:
        raise ValueError("tail cutoff needs Re z > 0")
    g = lambda v: -re_z * v + 0.5 * np.log1p(v) - np.log(tol)
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    return float(brentq(g, 0.0, hi)) if g(0.0) > 0 else 0.0


@dataclass(frozen=True)
class GridConfig:
    panels: int = 12
    order: int = 16
    ratio: float = 0.5
    vmax: float | None = None
    tail_tol: float = 1e-14
    subdivide: int = 1

    def __post_init__(self):
        if self.panels < 1 or self.order < 2 or self.subdivide < 1:
            raise ValueError("grid needs panels >= 1, order >= 2, subdivide >= 1")
        if not 0 < self.ratio < 1:
            raise ValueError("grading ratio must lie in (0, 1)")
        if self.vmax is not None and self.vmax <= 0:
            raise ValueError("vmax must be positive")

    @classmethod
    def from_points(cls, points: int, vmax: float | None = None, order: int = 16) -> "GridConfig":
        return cls(panels=max(1, -(-points // order)), order=order, vmax=vmax)

    def refined(self) -> "GridConfig":
        """Same panels, each split in two: twice the node density."""
        return replace(self, subdivide=2 * self.subdivide)

    def resolve_vmax(self, z: complex) -> float:
        return self.vmax if self.vmax is not None else tail_cutoff(complex(z).real, self.tail_tol)

    def edges(self, z: complex) -> np.ndarray:
        vmax = self.resolve_vmax(z)
        e = np.r_[0.0, vmax * self.ratio ** np.arange(self.panels - 1, -1, -1)]
        if self.subdivide > 1:
            t = np.linspace(0.0, 1.0, self.subdivide + 1)[:-1]
            e = np.r_[(e[:-1, None] + np.diff(e)[:, None] * t).ravel(), e[-1]]
        return e

    def build(self, z: complex):
        return composite_gauss_legendre(self.edges(z), self.order)
