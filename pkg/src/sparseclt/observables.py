"""Per-realization statistics: f_n, D1, linear eigenvalue statistics, V_J and
the conditional covariance over a resampled first row."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .ensemble import AdjacencySample, EnsembleParams, cavity_delete
from .estimates import InsufficientReplicasError, MomentEstimate
from .limit.bessel import TILDE_RADIUS, DomainError
from .resolvent import ResolventSlice, SpectralData, resolvent
from .rng import STREAM_ROW_RESAMPLE, replica_generator

COND_COV_MIN_RE_Z = 2.0


# ---------------------------------------------------------------- test functions

@dataclass(frozen=True, eq=False)
class TestFunction:
    """Test function phi for linear statistics sum_i phi(lambda_i).

    Admissibility means phi, phi', phi'' are square integrable against
    cosh^{-2}(c lambda); ``growth_constant`` is that c.
    """

    __test__ = False  # not a pytest class

    kind: str
    params: tuple = ()
    growth_constant: float = 1.0
    _fn: Callable | None = field(default=None, repr=False)
    _d2: Callable | None = field(default=None, repr=False)

    def __call__(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        if self.kind == "monomial":
            return lam ** self.params[0]
        if self.kind == "exponential":
            return np.exp(self.params[0] * lam)
        if self.kind == "gaussian":
            center, width = self.params
            return np.exp(-0.5 * ((lam - center) / width) ** 2)
        return self._fn(lam)

    @property
    def label(self) -> str:
        if self.kind == "monomial":
            return f"lambda^{self.params[0]}"
        if self.kind == "exponential":
            return f"exp({self.params[0]:g}*lambda)"
        if self.kind == "gaussian":
            return f"gauss({self.params[0]:g},{self.params[1]:g})"
        return "grid"

    def admissible(self) -> bool:
        c = self.growth_constant
        if not c > 0:
            return False
        if self.kind in ("monomial", "gaussian", "grid"):
            # polynomial or bounded growth is integrable against any cosh^{-2}(c x)
            return True
        if self.kind == "exponential":
            return abs(self.params[0]) < c
        return False

    def degenerate(self) -> bool:
        """Affine phi gives a constant statistic: n*phi(0) + slope*Tr A = n*phi(0)."""
        if self.kind == "monomial":
            return self.params[0] <= 1
        if self.kind == "exponential":
            return self.params[0] == 0
        if self.kind == "grid":
            return bool(np.allclose(self._d2(self._grid), 0.0))
        return False

    @property
    def monomial_power(self) -> int | None:
        return int(self.params[0]) if self.kind == "monomial" else None


def monomial(k: int, c: float = 1.0) -> TestFunction:
    if int(k) != k or k < 0:
        raise ValueError("monomial power must be a nonnegative integer")
    return TestFunction("monomial", (int(k),), c)


def exponential(a: float, c: float | None = None) -> TestFunction:
    return TestFunction("exponential", (float(a),), float(c) if c is not None else abs(a) + 1.0)


def gaussian_window(center: float = 0.0, width: float = 1.0, c: float = 1.0) -> TestFunction:
    if width <= 0:
        raise ValueError("width must be positive")
    return TestFunction("gaussian", (float(center), float(width)), c)


def grid_function(x, y, c: float = 1.0) -> TestFunction:
    """Not-a-knot cubic spline through user samples, extrapolated as its end cubics."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 4 or np.any(np.diff(x) <= 0):
        raise ValueError("grid test function needs >= 4 strictly increasing nodes")
    spl = CubicSpline(x, y)
    tf = TestFunction("grid", (), c, spl, lambda t: spl(t, 2))
    object.__setattr__(tf, "_grid", x)
    return tf


def parse_test_function(text: str) -> TestFunction:
    """'lambda^k' / 'monomial:k', 'exp:a', 'gauss:center:width'."""
    t = text.strip().replace(" ", "")
    if t.startswith("lambda^"):
        return monomial(int(t[len("lambda^"):]))
    if t == "lambda":
        return monomial(1)
    kind, _, rest = t.partition(":")
    if kind == "monomial":
        return monomial(int(rest))
    if kind == "exp":
        return exponential(float(rest))
    if kind == "gauss":
        c, w = rest.split(":")
        return gaussian_window(float(c), float(w))
    raise ValueError(f"cannot parse test function {text!r}")


# ---------------------------------------------------------------- resolvent statistics

def _check_u(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise ValueError("u must be finite and nonnegative")
    return u


def f_n_eval(slice: ResolventSlice, u):
    """n^{-1} sum_k exp(-u G_kk); vectorized over u."""
    u = _check_u(u)
    out = np.exp(-np.multiply.outer(u, slice.diag)).mean(axis=-1)
    return complex(out) if out.ndim == 0 else out


def f_n_u_derivative(slice: ResolventSlice, h: float = 1e-3) -> complex:
    """d/du f_n at u = 0: central differences at h and h/2, one Richardson step.

    Uses the exponential at u = +-h directly (it is entire in u); the exact
    value is -n^{-1} Tr G.
    """
    d = slice.diag

    def central(s):
        return (np.exp(-s * d).mean() - np.exp(s * d).mean()) / (2 * s)

    return complex((4 * central(h / 2) - central(h)) / 3)


def D1_from_slices(full: ResolventSlice, cavity: ResolventSlice, u):
    """e^{-u G_00} + sum_{k>=1} (e^{-u G_kk} - e^{-u G^{(0)}_kk})."""
    u = _check_u(u)
    e = np.exp(-np.multiply.outer(u, full.diag))
    e0 = np.exp(-np.multiply.outer(u, cavity.diag))
    out = e[..., 0] + (e[..., 1:] - e0[..., 1:]).sum(axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def D1_eval(sample: AdjacencySample, z, u, method: str = "auto"):
    full = resolvent(sample, z, method=method)
    cav = resolvent(cavity_delete(sample, 0), z, method=method)
    return D1_from_slices(full, cav, u)


def linear_statistic(spec: SpectralData, phi: TestFunction) -> float:
    return float(np.sum(phi(spec.eigenvalues)))


def trace_power(sample: AdjacencySample, k: int) -> int:
    """Tr A^k = sum of the entrywise product A^a o A^b with a + b = k (A symmetric)."""
    if k < 0:
        raise ValueError("power must be nonnegative")
    if k == 0:
        return sample.n
    if k == 1:
        return 0
    a = sample.sparse().astype(np.int64)
    lo, hi = k // 2, k - k // 2
    p_lo = a
    for _ in range(lo - 1):
        p_lo = p_lo @ a
    p_hi = p_lo if hi == lo else p_lo @ a
    return int(p_lo.multiply(p_hi).sum())


def linear_statistic_exact(sample: AdjacencySample, phi: TestFunction) -> float:
    """Closed form for monomials (no eigensolve); Tr A^2 = 2|E| in particular."""
    k = phi.monomial_power
    if k is None:
        raise ValueError("exact path only covers monomials")
    return float(2 * sample.n_edges if k == 2 else trace_power(sample, k))


def v_J_eval(slice: ResolventSlice, u: float, v: complex) -> complex:
    """n^{-1} sum_{j,k} exp(-u G_kk) tilde-J1(v G_kj^2).

    Summed as power sums: tilde-J1(x) = sum_m x^{m+1}/(m!(m+1)!), so the
    inner sum over j becomes sum_m v^{m+1}/(m!(m+1)!) sum_j G_kj^{2(m+1)}.
    """
    if slice.full is None:
        raise ValueError("v_J_eval needs the full resolvent matrix")
    u = float(_check_u(u))
    v = complex(v)
    x = slice.z.real
    if abs(v) / x**2 > TILDE_RADIUS:
        raise DomainError(f"|v|/(Re z)^2 = {abs(v) / x**2:.3g} exceeds the tilde-J1 domain {TILDE_RADIUS:g}")
    if v == 0:
        return 0j
    sq = slice.full * slice.full
    smax = float(np.max(np.abs(sq)))
    row_abs = float(np.max(np.abs(sq).sum(axis=1)))
    power = sq.copy()
    rowsum = np.zeros(slice.n, dtype=complex)
    coef = v
    for m in range(200):
        rowsum += coef * power.sum(axis=1)
        coef *= v / ((m + 1) * (m + 2))
        # |sum_j G_kj^{2(m+2)}| <= smax^{m+1} * sum_j |G_kj|^2
        if abs(coef) * smax ** (m + 1) * row_abs <= 1e-17 * max(1e-300, float(np.max(np.abs(rowsum)))):
            break
        power = power * sq
    w = np.exp(-u * slice.diag)
    return complex(np.dot(w, rowsum) / slice.n)


# ---------------------------------------------------------------- conditional covariance

def _check_cavity(cavity_sample: AdjacencySample):
    if cavity_sample.degree(0) != 0:
        raise ValueError("conditional covariance needs a sample with row 0 deleted")


def _row_draws(n: int, q: float, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    ks = rng.binomial(n - 1, q, size=count)
    return [np.sort(rng.choice(n - 1, size=k, replace=False)) + 1 if k else np.empty(0, dtype=np.int64)
            for k in ks]


@dataclass(frozen=True)
class _CavityData:
    g0: np.ndarray
    diag: np.ndarray
    z: complex


def _cav(cavity_sample: AdjacencySample, z: complex) -> _CavityData:
    s = resolvent(cavity_sample, z, want_full=True)
    return _CavityData(s.full, s.diag, s.z)


def _row_response(c1: _CavityData, c2: _CavityData, rows, u1: np.ndarray, u2: float):
    """Per resampled row: X(u1) = exp(-u1 G_00(z1)) (shape rows x len(u1)) and Y = D1(z2, u2)."""
    x = np.empty((len(rows), len(u1)), dtype=complex)
    y = np.empty(len(rows), dtype=complex)
    w2 = np.exp(-u2 * c2.diag)
    for r, idx in enumerate(rows):
        if len(idx) == 0:
            x[r] = np.exp(-u1 / c1.z)
            y[r] = np.exp(-u2 / c2.z)
            continue
        ga1 = c1.g0[idx].sum(axis=0) if c1 is not c2 else None
        ga2 = c2.g0[idx].sum(axis=0)
        zf2 = c2.z + ga2[idx].sum()
        zf1 = zf2 if ga1 is None else c1.z + ga1[idx].sum()
        x[r] = np.exp(-u1 / zf1)
        # G_kk = G0_kk - (G0 a)_k^2 / Z for k >= 1; vertex 0 diag entry of G0 is 1/z
        y[r] = np.exp(-u2 / zf2) + np.dot(w2[1:], np.expm1(u2 * ga2[1:] ** 2 / zf2))
    return x, y


def _cov_with_jackknife(x: np.ndarray, y: np.ndarray):
    """Unbiased covariance (bilinear, no conjugation) per column of x, with leave-one-out stderr."""
    r = len(y)
    xc = x - x.mean(axis=0)
    yc = y - y.mean()
    prod = xc * yc[:, None]
    s_xy = prod.sum(axis=0)
    cov = s_xy / (r - 1)
    # leave-one-out via centered sums: S_xy^{(-i)} = S_xy - prod_i * r/(r-1)
    loo = (s_xy[None, :] - prod * r / (r - 1)) / (r - 2) if r > 2 else np.repeat(cov[None, :], r, axis=0)
    dev = loo - loo.mean(axis=0)
    se = np.sqrt((r - 1) / r * np.sum(np.abs(dev) ** 2, axis=0))
    return cov, se


def conditional_cov_profile(cavity_sample: AdjacencySample, params: EnsembleParams, z1, u1, z2, u2: float,
                            resamples: int, replica_id: int = 0, allow_unproven: bool = False):
    """Cov_1{exp(-u1 G_00(z1)), D1(z2,u2)} over resampled first rows, for a vector of u1.

    Returns (cov array, jackknife stderr array).
    """
    z1, z2 = complex(z1), complex(z2)
    if not allow_unproven and (z1.real <= COND_COV_MIN_RE_Z or z2.real <= COND_COV_MIN_RE_Z):
        raise ValueError("conditional covariance is only estimated for Re z1, Re z2 > 2")
    if resamples < 2:
        raise InsufficientReplicasError("conditional covariance needs at least 2 resamples")
    _check_cavity(cavity_sample)
    u1 = np.atleast_1d(_check_u(u1)).astype(float)
    u2 = float(_check_u(u2))
    n = cavity_sample.n
    if params.p == 0 or n == 1:
        zero = np.zeros(len(u1), dtype=complex)
        return zero, np.zeros(len(u1))
    rng = replica_generator(params.base_seed, replica_id, STREAM_ROW_RESAMPLE)
    rows = _row_draws(n, params.edge_prob, resamples, rng)
    c2 = _cav(cavity_sample, z2)
    c1 = c2 if z1 == z2 else _cav(cavity_sample, z1)
    x, y = _row_response(c1, c2, rows, u1, u2)
    return _cov_with_jackknife(x, y)


def conditional_cov_estimate(cavity_sample: AdjacencySample, params: EnsembleParams, z1, u1: float, z2, u2: float,
                             resamples: int, replica_id: int = 0, allow_unproven: bool = False) -> MomentEstimate:
    cov, se = conditional_cov_profile(cavity_sample, params, z1, [u1], z2, u2, resamples, replica_id, allow_unproven)
    return MomentEstimate(complex(cov[0]), float(se[0]), resamples, ("cond_cov", complex(z1), u1, complex(z2), u2))


def conditional_cov_exact(cavity_sample: AdjacencySample, params: EnsembleParams, z1, u1, z2, u2: float):
    """Exhaustive average over all 2^{n-1} first rows (small n only)."""
    _check_cavity(cavity_sample)
    n = cavity_sample.n
    if n > 16:
        raise ValueError("exhaustive enumeration is limited to n <= 16")
    u1 = np.atleast_1d(_check_u(u1)).astype(float)
    q = params.edge_prob
    c2 = _cav(cavity_sample, complex(z2))
    c1 = _cav(cavity_sample, complex(z1))
    rows, probs = [], []
    for bits in itertools.product((0, 1), repeat=n - 1):
        b = np.array(bits)
        k = int(b.sum())
        rows.append(np.flatnonzero(b) + 1)
        probs.append(q**k * (1 - q) ** (n - 1 - k))
    probs = np.array(probs)
    x, y = _row_response(c1, c2, rows, u1, float(u2))
    ex = probs @ x
    ey = probs @ y
    return (probs[:, None] * x * y[:, None]).sum(axis=0) - ex * ey
