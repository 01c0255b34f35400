"""Two independent routes to the second fluctuation moment M_2(z1,u1;z2,u2).

Fredholm route: estimate V_n(z1,.;z2,u2) = E Cov_1{exp(-u G_00(z1)), D1(z2,u2)}
on the kernel grid by averaging conditional covariances over cavity samples,
then solve (I - pK) M = V and extend to the requested u1 by Nystrom.

Direct route: n Cov(f_n(z1,u1), f_n(z2,u2)) over fresh replicas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ensemble import EnsembleParams, cavity_delete, sample_adjacency
from ..limit.fixed_point import solve_fixed_point
from ..limit.kernel import ContractionError, build_kernel, fredholm_solve, nystrom_extend, operator_norm_estimate
from ..limit.quadrature import GridConfig
from ..observables import conditional_cov_profile
from .moments import estimate_moment_f
from .replicas import run_replicas

OUTER_ID_OFFSET = 1 << 40
CROSSVAL_SIGMAS = 3.0


@dataclass(frozen=True)
class CrossvalRow:
    u1: float
    fredholm: complex
    fredholm_stderr: float
    direct: complex
    direct_stderr: float
    v_term: complex

    @property
    def combined_stderr(self) -> float:
        return float(np.hypot(self.fredholm_stderr, self.direct_stderr))

    @property
    def discrepancy(self) -> float:
        return abs(self.fredholm - self.direct)

    @property
    def passed(self) -> bool:
        return self.discrepancy <= CROSSVAL_SIGMAS * self.combined_stderr


@dataclass(frozen=True)
class CrossvalReport:
    z1: complex
    z2: complex
    u2: float
    norm_estimate: float
    rows: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def fredholm_pathway(params: EnsembleParams, z1, z2, u1_list, u2: float, R_outer: int, R_inner: int,
                     config: GridConfig | None = None, m0: float | None = None, outer_offset: int = OUTER_ID_OFFSET):
    """Per-u1 (mean, stderr, mean V) of the Fredholm route, plus the coupled norm estimate."""
    z1, z2 = complex(z1), complex(z2)
    if m0 is not None and (z1.real < m0 or z2.real < m0):
        raise ContractionError(f"Re z1, Re z2 must be >= M0 = {m0:g}")
    if R_outer < 2:
        raise ValueError("need at least 2 outer cavity samples")
    u1 = np.atleast_1d(np.asarray(u1_list, dtype=float))
    f = solve_fixed_point(z1, params.p, config=config)
    kern = build_kernel(z1, f)
    norm = operator_norm_estimate(kern)
    if norm >= 1.0:
        raise ContractionError(f"kernel norm estimate {norm:.4f} >= 1 at z1={z1}")
    q = len(kern.nodes)
    pts = np.r_[kern.nodes, u1]
    prof = np.empty((len(pts), R_outer), dtype=complex)
    for o in range(R_outer):
        rid = outer_offset + o
        cav = cavity_delete(sample_adjacency(params, rid), 0)
        prof[:, o], _ = conditional_cov_profile(cav, params, z1, pts, z2, u2, R_inner, replica_id=rid)
    m_grid = fredholm_solve(kern, prof[:q], norm=norm)
    m_u = nystrom_extend(kern, m_grid, prof[q:], u1)
    mean = m_u.mean(axis=1)
    se = np.sqrt(np.sum(np.abs(m_u - mean[:, None]) ** 2, axis=1) / (R_outer - 1) / R_outer)
    return mean, se, prof[q:].mean(axis=1), norm


def covariance_crossval(params: EnsembleParams, z1, z2, u1_list, u2: float, R_outer: int, R_inner: int,
                        R_direct: int, config: GridConfig | None = None, m0: float | None = None,
                        workers: int = 1) -> CrossvalReport:
    z1, z2 = complex(z1), complex(z2)
    u1 = [float(u) for u in np.atleast_1d(u1_list)]
    fm, fse, vmean, norm = fredholm_pathway(params, z1, z2, u1, u2, R_outer, R_inner, config, m0)
    us = sorted(set(u1) | {float(u2)})
    zs = [z1] if z1 == z2 else [z1, z2]
    table = run_replicas(params, zs, us, R=R_direct, workers=workers)
    rows = []
    for k, u in enumerate(u1):
        d = estimate_moment_f(table, 2, [(z1, u), (z2, u2)])
        rows.append(CrossvalRow(u, complex(fm[k]), float(fse[k]), complex(d.value), d.stderr, complex(vmean[k])))
    return CrossvalReport(z1, z2, float(u2), norm, tuple(rows))
