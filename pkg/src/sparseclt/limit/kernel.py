"""Integral kernel of the second-moment equation and its Fredholm solve.

K(u,v;z) = -sqrt(u) J1(2 sqrt(uv)) / sqrt(v) * exp(-z v - p + p f(z,v)).

The fluctuation M2(z1,.;z2,u2) solves M = coupling * K M + V, where the
coupling is p: differentiating exp(p f_n) about its mean brings down one
factor of p. ``operator_norm_estimate`` and ``fredholm_solve`` act on the
coupled operator unless told otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bessel import bessel_J1_real
from .fixed_point import GridFunction, solve_fixed_point
from .quadrature import GridConfig

_BOUND_SLACK = 1e-12


class KernelBoundError(ArithmeticError):
    pass


class ContractionError(ValueError):
    pass


def kernel_values(u, f: GridFunction, nodes=None, f_at_nodes=None) -> np.ndarray:
    """K(u_q, v_r; z) for the given u values against v nodes (default: f's own grid)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = f.nodes if nodes is None else np.asarray(nodes, dtype=float)
    fv = f.values if f_at_nodes is None else f_at_nodes
    arg = 2.0 * np.sqrt(np.outer(u, v))
    col = np.exp(-f.z * v - f.p + f.p * fv) / np.sqrt(v)
    return -np.sqrt(u)[:, None] * bessel_J1_real(arg) * col[None, :]


def kernel_bound(u, v, re_z: float) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    return np.sqrt(u)[:, None] / np.sqrt(v)[None, :] * np.exp(-re_z * v)[None, :]


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    z: complex
    p: float
    coupling: float
    nodes: np.ndarray
    weights: np.ndarray
    entries: np.ndarray  # K(u_q, v_r) * w_r
    f: GridFunction = field(repr=False)
    bound_ratio: float = 0.0

    @property
    def operator(self) -> np.ndarray:
        return self.coupling * self.entries

    def rows(self, u) -> np.ndarray:
        """Weighted kernel rows at off-grid u (for Nystrom extension)."""
        return kernel_values(u, self.f) * self.weights[None, :]


def build_kernel(z, f: GridFunction, coupling: float | None = None) -> KernelMatrix:
    z = complex(z)
    if abs(z - f.z) > 1e-14 * max(1.0, abs(z)):
        raise ValueError(f"kernel z={z} does not match the grid function's z={f.z}")
    k = kernel_values(f.nodes, f)
    ratio = float(np.max(np.abs(k) / kernel_bound(f.nodes, f.nodes, z.real)))
    if ratio > 1.0 + _BOUND_SLACK:
        raise KernelBoundError(f"|K| exceeds sqrt(u/v) exp(-Re z v) by factor {ratio:.6g}")
    c = f.p if coupling is None else float(coupling)
    return KernelMatrix(z, f.p, c, f.nodes, f.weights, k * f.weights[None, :], f, ratio)


def _weighted_row_sums(abs_rows_w: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (abs_rows_w * np.sqrt(1.0 + v)[None, :]).sum(axis=1) / np.sqrt(1.0 + u)


def operator_norm_estimate(
    kernel: KernelMatrix,
    coupled: bool = True,
    probe: bool = True,
    probe_max: float = 200.0,
    probe_points: int = 120,
    probe_refine: int = 8,
) -> float:
    """Norm of the kernel operator on functions with sup_u |g(u)|/sqrt(1+u) finite.

    Row-sum bound sup_u (1+u)^{-1/2} sum_r w_r |K(u,v_r)| sqrt(1+v_r). The sup is
    taken over the grid and, with ``probe``, over extra u in (0, probe_max] on a
    finer v-quadrature (f extended by Nystrom), since the sup typically sits
    near or beyond the end of the v-grid.
    """
    u = v = kernel.nodes
    est = float(np.max(_weighted_row_sums(np.abs(kernel.entries), u, v)))
    if probe:
        cfg = kernel.f.config
        for _ in range(int(np.log2(probe_refine))):
            cfg = cfg.refined()
        vf, wf = cfg.build(kernel.z)
        ff = kernel.f.evaluate(vf)
        up = np.geomspace(min(1e-3, u[0]), probe_max, probe_points)
        rows = np.abs(kernel_values(up, kernel.f, vf, ff)) * wf[None, :]
        est = max(est, float(np.max(_weighted_row_sums(rows, up, vf))))
    return abs(kernel.coupling) * est if coupled else est


def fredholm_solve(kernel: KernelMatrix, rhs, method: str = "direct", tol: float = 1e-13,
                   max_iter: int = 2000, norm: float | None = None) -> np.ndarray:
    """Solve (I - coupling K) M = rhs on the grid. Refuses when the norm estimate is >= 1."""
    rhs = np.asarray(rhs, dtype=complex)
    if rhs.shape[0] != len(kernel.nodes):
        raise ValueError("right-hand side must be sampled on the kernel grid")
    norm = operator_norm_estimate(kernel) if norm is None else norm
    if norm >= 1.0:
        raise ContractionError(f"operator norm estimate {norm:.4f} >= 1: no contraction guarantee")
    op = kernel.operator
    if method == "direct":
        m = np.linalg.solve(np.eye(len(op)) - op, rhs)
    elif method == "neumann":
        m = rhs.copy()
        for _ in range(max_iter):
            nxt = rhs + op @ m
            step = np.max(np.abs(nxt - m))
            m = nxt
            if step <= tol * max(1.0, float(np.max(np.abs(rhs)))):
                break
        else:
            raise RuntimeError("Neumann series did not converge")
    else:
        raise ValueError(f"unknown method {method!r}")
    resid = np.max(np.abs(m - op @ m - rhs))
    if resid > 1e-10 * max(1.0, float(np.max(np.abs(rhs)))):
        raise ArithmeticError(f"Fredholm residual {resid:.3e} too large")
    return m


def nystrom_extend(kernel: KernelMatrix, m_grid, rhs_at_u, u) -> np.ndarray:
    """M(u) = rhs(u) + coupling * sum_r K(u, v_r) w_r M(v_r) at arbitrary u.

    ``m_grid`` has the grid along axis 0 (extra axes are independent right-hand
    sides); ``rhs_at_u`` has the u points along axis 0.
    """
    rows = kernel.rows(u)
    return np.asarray(rhs_at_u) + kernel.coupling * (rows @ np.asarray(m_grid))


@dataclass(frozen=True)
class ContractionSweep:
    threshold: float
    m0: float | None
    table: tuple  # (Re z, coupled norm estimate)


def locate_contraction_threshold(p: float, sweep=None, config: GridConfig | None = None,
                                 target: float = 0.5) -> ContractionSweep:
    """Smallest real z on the sweep whose coupled kernel-norm estimate is below ``target``."""
    sweep = np.arange(2.5, 20.0 + 1e-9, 0.5) if sweep is None else np.asarray(sweep, dtype=float)
    rows = []
    m0 = None
    for x in sweep:
        f = solve_fixed_point(x, p, config=config)
        est = operator_norm_estimate(build_kernel(x, f))
        rows.append((float(x), est))
        if est < target:
            m0 = float(x)
            break
    return ContractionSweep(target, m0, tuple(rows))
