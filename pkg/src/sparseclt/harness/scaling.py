"""Log-log rate fits for variance decay and mean convergence across n."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..estimates import MomentEstimate, grouped_jackknife, mean_estimate


@dataclass(frozen=True)
class ScalingFit:
    observable: str
    ns: tuple
    stats: tuple
    stderrs: tuple
    slope: float
    slope_stderr: float
    intercept: float
    verdict: str  # "ok", "degenerate: ...", or "noisy: ..."

    @property
    def degenerate(self) -> bool:
        return self.verdict.startswith("degenerate")

    def within(self, target: float, tol: float) -> bool:
        return not self.degenerate and abs(self.slope - target) <= tol


def variance_estimate(values, groups: int = 100) -> MomentEstimate:
    """Sample variance E|X - EX|^2 (unbiased) with jackknife error."""
    v = np.asarray(values)

    def var(x):
        return float(np.sum(np.abs(x - x.mean()) ** 2) / (len(x) - 1))

    full, se, reps = grouped_jackknife(v, var, groups)
    return MomentEstimate(full, float(se), len(v), ("var",), reps)


def mean_gap_estimate(values, target: complex, groups: int = 100) -> MomentEstimate:
    m = mean_estimate(values, ("mean",), groups)
    return MomentEstimate(abs(complex(m.value) - complex(target)), m.stderr, m.replicas, ("gap", complex(target)))


def scaling_fit(observable: str, ns, estimates: list[MomentEstimate]) -> ScalingFit:
    """Weighted least squares of log(stat) on log(n); weights from the delta-method log errors.

    Needs at least four n values spanning a factor of eight. A statistic that is
    zero (or negative) at some n cannot be logged: the fit is not attempted and
    the verdict says so.
    """
    ns = np.asarray(ns, dtype=float)
    stats = np.array([float(np.real(e.value)) for e in estimates])
    ses = np.array([e.stderr for e in estimates])
    base = (observable, tuple(int(n) for n in ns), tuple(stats), tuple(ses))
    if len(ns) < 4 or ns.max() / ns.min() < 8:
        raise ValueError("scaling fit needs >= 4 values of n spanning >= 8x")
    if np.any(stats <= 0):
        what = "zero variance" if observable.startswith("var") else "zero statistic"
        return ScalingFit(*base, float("nan"), float("nan"), float("nan"), f"degenerate: {what}")
    x = np.log(ns)
    y = np.log(stats)
    sig = np.where(ses > 0, ses / stats, np.nan)
    if np.all(np.isfinite(sig)):
        w = 1.0 / sig**2
    else:
        w = np.ones_like(x)
    xm = np.sum(w * x) / np.sum(w)
    ym = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    slope_se = float(np.sqrt(1.0 / sxx)) if np.all(np.isfinite(sig)) else float("nan")
    noisy = [int(n) for n, s, e in zip(ns, stats, ses) if s < 2 * e]
    verdict = f"noisy: statistic within 2 stderr of 0 at n={noisy}" if noisy else "ok"
    return ScalingFit(*base, slope, slope_se, intercept, verdict)
