"""Normality checks for linear eigenvalue statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..ensemble import EnsembleParams
from ..estimates import MomentEstimate
from ..observables import TestFunction
from .replicas import run_replicas
from .scaling import variance_estimate

MIN_R = 1000


@dataclass(frozen=True)
class CLTReport:
    phi: str
    n: int
    R: int
    degenerate: bool
    skewness: float = float("nan")
    excess_kurtosis: float = float("nan")
    ks_distance: float = float("nan")
    ks_pvalue: float = float("nan")
    variance: MomentEstimate | None = None
    alpha: float = 0.01

    @property
    def ks_passed(self) -> bool:
        return not self.degenerate and self.ks_pvalue >= self.alpha

    @property
    def skew_ok(self) -> bool:
        return abs(self.skewness) <= 5 * np.sqrt(6.0 / self.R)


def binomial_variance_lambda2(n: int, p: float) -> float:
    """Var of n^{-1/2} Tr A^2 = n^{-1/2} 2|E| with |E| ~ Binomial(C(n,2), p/n)."""
    q = p / n
    return 4.0 * (n * (n - 1) / 2) * q * (1 - q) / n


def clt_from_values(values, phi: TestFunction, n: int, alpha: float = 0.01) -> CLTReport:
    x = np.asarray(values, dtype=float) / np.sqrt(n)
    R = len(x)
    sd = x.std(ddof=1) if R > 1 else 0.0
    if phi.degenerate() or sd <= 1e-12 * max(1.0, np.abs(x).max()):
        return CLTReport(phi.label, n, R, True, alpha=alpha)
    zs = (x - x.mean()) / sd
    ks = stats.kstest(zs, "norm")
    return CLTReport(
        phi.label, n, R, False,
        skewness=float(stats.skew(x)),
        excess_kurtosis=float(stats.kurtosis(x)),
        ks_distance=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        variance=variance_estimate(x),
        alpha=alpha,
    )


def clt_test(phi: TestFunction, params: EnsembleParams, R: int, workers: int = 1,
             alpha: float = 0.01, id_offset: int = 0) -> CLTReport:
    """Standardized n^{-1/2}(N_n[phi] - mean) over R replicas: skew, kurtosis, KS, variance."""
    if not phi.admissible():
        raise ValueError(f"test function {phi.label} is outside the admissible class")
    if R < MIN_R:
        raise ValueError(f"CLT test needs R >= {MIN_R}")
    if phi.degenerate():
        return CLTReport(phi.label, params.n, R, True, alpha=alpha)
    table = run_replicas(params, phi_list=[phi], R=R, workers=workers, id_offset=id_offset)
    return clt_from_values(table.linstat[:, 0], phi, params.n, alpha)
