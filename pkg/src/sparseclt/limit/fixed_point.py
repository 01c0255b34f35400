"""The limit f(z, u) of E f_n as the fixed point of

    f(z,u) = 1 - sqrt(u) e^{-p} int_0^inf J1(2 sqrt(uv)) / sqrt(v) exp(-z v + p f(z,v)) dv

discretized on a Gauss-Legendre grid (u-grid = v-grid) and solved by damped
Picard iteration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bessel import bessel_J1_real
from .quadrature import GridConfig

PROVEN_RE_Z = 2.0


class FixedPointError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _transfer_rows(u: np.ndarray, nodes: np.ndarray, weights: np.ndarray, z: complex) -> np.ndarray:
    """Rows sqrt(u) w_r J1(2 sqrt(u v_r)) / sqrt(v_r) e^{-z v_r}; the map is 1 - e^{-p} B exp(p f)."""
    u = np.asarray(u, dtype=float)
    arg = 2.0 * np.sqrt(np.outer(u, nodes))
    return np.sqrt(u)[:, None] * bessel_J1_real(arg) * (weights * np.exp(-z * nodes) / np.sqrt(nodes))[None, :]


@dataclass(frozen=True, eq=False)
class GridFunction:
    z: complex
    p: float
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    value_at_zero: complex = 1.0
    residual: float = float("nan")
    iterations: int = 0
    residual_history: tuple = field(default=(), repr=False)
    config: GridConfig = field(default_factory=GridConfig)

    def evaluate(self, u) -> np.ndarray:
        """Nystrom extension: apply the map once at arbitrary u >= 0."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if np.any(u < 0):
            raise ValueError("u must be nonnegative")
        rows = _transfer_rows(u, self.nodes, self.weights, self.z)
        return 1.0 - np.exp(-self.p) * rows @ np.exp(self.p * self.values)

    def weighted_norm(self) -> float:
        return float(np.max(np.abs(self.values) / np.sqrt(1.0 + self.nodes)))

    def to_json(self) -> dict:
        return {
            "kind": "GridFunction",
            "z": [self.z.real, self.z.imag],
            "p": self.p,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "values": [[v.real, v.imag] for v in self.values.tolist()],
            "value_at_zero": [complex(self.value_at_zero).real, complex(self.value_at_zero).imag],
            "residual": self.residual,
            "iterations": self.iterations,
            "grid": {
                "panels": self.config.panels,
                "order": self.config.order,
                "ratio": self.config.ratio,
                "vmax": self.config.vmax,
                "tail_tol": self.config.tail_tol,
                "subdivide": self.config.subdivide,
            },
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GridFunction":
        if doc.get("kind") != "GridFunction":
            raise ValueError("not a GridFunction document")
        vals = np.array([complex(a, b) for a, b in doc["values"]])
        return cls(
            z=complex(*doc["z"]),
            p=float(doc["p"]),
            nodes=np.array(doc["nodes"], dtype=float),
            weights=np.array(doc["weights"], dtype=float),
            values=vals,
            value_at_zero=complex(*doc["value_at_zero"]),
            residual=float(doc["residual"]),
            iterations=int(doc["iterations"]),
            config=GridConfig(**doc["grid"]),
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=1))
        return path

    @classmethod
    def load(cls, path) -> "GridFunction":
        return cls.from_json(json.loads(Path(path).read_text()))


def solve_fixed_point(
    z,
    p: float,
    config: GridConfig | None = None,
    init=None,
    tol: float = 1e-10,
    max_iter: int = 500,
    allow_unproven: bool = False,
) -> GridFunction:
    """Solve for f(z, .) on the grid.

    ``init`` may be None (f = 1), a scalar, or an array of grid values.
    Re z <= 2 lies outside the regime where the map is known to contract and
    is refused unless ``allow_unproven`` is set.
    """
    z = complex(z)
    if z.real <= 0:
        raise ValueError("Re z must be positive")
    if z.real <= PROVEN_RE_Z and not allow_unproven:
        raise ValueError(f"Re z = {z.real:g} <= {PROVEN_RE_Z:g}: pass allow_unproven=True to proceed")
    if p < 0:
        raise ValueError("p must be nonnegative")
    config = config or GridConfig()
    nodes, weights = config.build(z)
    rows = _transfer_rows(nodes, nodes, weights, z)
    scale = np.exp(-p)

    def apply(f):
        return 1.0 - scale * rows @ np.exp(p * f)

    if init is None:
        f = np.ones(len(nodes), dtype=complex)
    else:
        f = np.broadcast_to(np.asarray(init, dtype=complex), nodes.shape).copy()

    alpha = 1.0
    history = []
    for it in range(max_iter + 1):
        tf = apply(f)
        res = float(np.max(np.abs(tf - f)))
        history.append(res)
        if res <= tol:
            return GridFunction(z, float(p), nodes, weights, f, 1.0, res, it, tuple(history), config)
        if len(history) > 1 and res > history[-2]:
            alpha *= 0.5
        f = (1.0 - alpha) * f + alpha * tf
    raise FixedPointError(f"no convergence in {max_iter} iterations (residual {history[-1]:.3e})", history[-1])


def stieltjes_limit(f: GridFunction) -> complex:
    """g = -d/du f(z,u) at u = 0 = e^{-p} int exp(-z v + p f(z,v)) dv: the limit of n^{-1} E Tr G(z)."""
    return complex(np.exp(-f.p) * np.sum(f.weights * np.exp(-f.z * f.nodes + f.p * f.values)))


def matched_node_change(coarse: GridFunction, fine: GridFunction) -> float:
    """Sup difference at the coarse nodes, with the fine solution extended by Nystrom."""
    return float(np.max(np.abs(fine.evaluate(coarse.nodes) - coarse.values)))
