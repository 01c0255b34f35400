"""Fluctuation moments and the Wick (Gaussian pairing) checks.

f family:     M_{m,n} = n^{m/2} E prod_j (f_n(z_j,u_j) - E f_n(z_j,u_j))
trace family: M*_{m,n} = n^{-m/2} E prod_j (Tr G(z_j) - E Tr G(z_j))

The expectation inside each factor is replaced by the sample mean, which
biases the estimate by O(1/R); errors come from the grouped jackknife, with
the centering redone inside every jackknife subset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..estimates import DEFAULT_GROUPS, InsufficientReplicasError, MomentEstimate, grouped_jackknife, jackknife_stderr
from .replicas import ReplicaTable

MIN_R_HIGH_MOMENTS = 100
WICK_SIGMAS = {3: 4.0, 4: 3.0, 5: 5.0, 6: 5.0}


def _centered_product_moment(cols: np.ndarray, scale: float) -> complex:
    c = cols - cols.mean(axis=0)
    return complex(scale * np.mean(np.prod(c, axis=1)))


def _moment(cols: np.ndarray, m: int, scale: float, descriptor: tuple, groups: int) -> MomentEstimate:
    R = len(cols)
    if m < 1:
        raise ValueError("moment order must be >= 1")
    if m >= 4 and R < MIN_R_HIGH_MOMENTS:
        raise InsufficientReplicasError(f"insufficient replicas: R={R} < {MIN_R_HIGH_MOMENTS} for m={m}")
    if R < 2:
        raise InsufficientReplicasError("insufficient replicas: need R >= 2")
    if m == 1:
        # centering makes the first moment vanish identically
        g = len(grouped_jackknife(cols[:, 0], lambda x: 0.0, groups)[2])
        return MomentEstimate(0.0, 0.0, R, descriptor, np.zeros(g, dtype=complex))
    full, se, reps = grouped_jackknife(cols, lambda x: _centered_product_moment(x, scale), groups)
    return MomentEstimate(full, float(se), R, descriptor, reps)


def estimate_moment_f(table: ReplicaTable, m: int, args, groups: int = DEFAULT_GROUPS) -> MomentEstimate:
    """``args`` is a list of m pairs (z_j, u_j), or a single pair repeated m times."""
    args = _expand(args, m)
    cols = np.stack([table.f_column(z, u) for z, u in args], axis=1)
    desc = ("M", m, tuple((complex(z), float(u)) for z, u in args), table.request.params, table.R, table.request.id_offset)
    return _moment(cols, m, table.n ** (m / 2), desc, groups)


def estimate_moment_trace(table: ReplicaTable, m: int, zs, groups: int = DEFAULT_GROUPS) -> MomentEstimate:
    zs = _expand(zs, m, pair=False)
    cols = np.stack([table.trace_column(z) for z in zs], axis=1)
    desc = ("M*", m, tuple(complex(z) for z in zs), table.request.params, table.R, table.request.id_offset)
    return _moment(cols, m, table.n ** (-m / 2), desc, groups)


def estimate_moment_dfdu(table: ReplicaTable, z1, z2, groups: int = DEFAULT_GROUPS) -> MomentEstimate:
    """d^2/du1 du2 of M_2(z1,u1;z2,u2) at 0, from per-replica u-derivatives of f_n."""
    if table.dfdu is None:
        raise ValueError("table has no u-derivative column (set derivative_step)")
    cols = np.stack([table.dfdu[:, table.z_index(z1)], table.dfdu[:, table.z_index(z2)]], axis=1)
    desc = ("dM/du", 2, (complex(z1), complex(z2)), table.request.params, table.R, table.request.id_offset)
    return _moment(cols, 2, float(table.n), desc, groups)


def _expand(args, m, pair=True):
    if pair and isinstance(args, tuple) and len(args) == 2 and np.isscalar(args[1]):
        return [args] * m
    if not pair and np.isscalar(args):
        return [args] * m
    args = list(args)
    if len(args) != m:
        raise ValueError(f"need {m} arguments, got {len(args)}")
    return args


@dataclass(frozen=True)
class WickReport:
    m: int
    family: str
    moment: complex
    prediction: complex
    residual: complex
    stderr: float
    n_sigma: float
    passed: bool

    @property
    def z_score(self) -> float:
        return abs(self.residual) / self.stderr if self.stderr > 0 else (0.0 if self.residual == 0 else float("inf"))


def wick_check(moment: MomentEstimate, pairings, n_sigma: float | None = None, family: str = "M") -> WickReport:
    """Residual M_m - sum_j M_2(1,j) M_{m-2}(rest), with jackknife error of the combination.

    ``pairings`` is a list of (M_2 estimate, M_{m-2} estimate) pairs. All
    estimates must come from the same table with the same grouping so the
    replicate-wise combination is valid.
    """
    m = moment.descriptor[1] if moment.descriptor else None
    key = moment.descriptor[3:] if moment.descriptor else None
    for a, b in pairings:
        for e in (a, b):
            if e.descriptor[3:] != key or e.groups != moment.groups or e.replicas != moment.replicas:
                raise ValueError("mismatched parameter sets: Wick pairing estimates come from different tables")
    pred = sum(complex(a.value) * complex(b.value) for a, b in pairings)
    resid = complex(moment.value) - pred
    reps = moment.replicates.astype(complex).copy()
    for a, b in pairings:
        reps -= a.replicates * b.replicates
    se = jackknife_stderr(resid, reps)
    k = WICK_SIGMAS.get(m, 3.0) if n_sigma is None else n_sigma
    return WickReport(int(m), family, complex(moment.value), pred, resid, float(se), k, bool(abs(resid) <= k * se))


def wick_check_common(table: ReplicaTable, m: int, z, u: float | None = None, family: str = "M",
                      groups: int = DEFAULT_GROUPS, n_sigma: float | None = None) -> WickReport:
    """Wick check at common arguments: M_m vs (m-1) M_2 M_{m-2}."""
    if family == "M":
        est = lambda k: estimate_moment_f(table, k, (z, u), groups)
    elif family == "M*":
        est = lambda k: estimate_moment_trace(table, k, z, groups)
    else:
        raise ValueError("family must be 'M' or 'M*'")
    mm = est(m)
    m2 = est(2)
    rest = est(m - 2) if m > 2 else None
    pairings = [(m2, rest)] * (m - 1) if rest is not None else []
    return wick_check(mm, pairings, n_sigma, family)
