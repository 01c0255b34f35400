"""Bessel J1 and the modified series tilde-J1, vectorized over complex arguments.

Both are summed as power series with term-ratio stopping where the series is
well conditioned. For |zeta| > SERIES_RADIUS the J1 series cancels
catastrophically, so larger arguments go to the Amos routines in scipy.
"""

from __future__ import annotations

import numpy as np
from scipy import special

SERIES_RADIUS = 8.0  # cancellation costs ~1e-12 relative by |zeta| = 11
TILDE_RADIUS = 36.0
MAX_DOMAIN = 1.0e4
_RTOL = 1e-16
_MAX_TERMS = 200


class DomainError(ValueError):
    pass


def _series(x2: np.ndarray) -> np.ndarray:
    """sum_k x2^k / (k! (k+1)!) with per-element stopping."""
    total = np.ones_like(x2)
    term = np.ones_like(x2)
    active = np.ones(x2.shape, dtype=bool)
    for k in range(_MAX_TERMS):
        if not active.any():
            break
        term = np.where(active, term * x2 / ((k + 1) * (k + 2)), 0)
        total = total + term
        active &= np.abs(term) > _RTOL * np.abs(total)
    return total


def bessel_J1(zeta):
    """J1(zeta) = (zeta/2) sum_k (-zeta^2/4)^k / (k!(k+1)!)."""
    z = np.asarray(zeta, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if not np.all(np.isfinite(z)) or np.any(np.abs(z) > MAX_DOMAIN):
        raise DomainError(f"bessel_J1 argument outside |zeta| <= {MAX_DOMAIN:g}")
    out = np.empty_like(z)
    small = np.abs(z) <= SERIES_RADIUS
    if small.any():
        zs = z[small]
        out[small] = 0.5 * zs * _series(-(zs * zs) / 4.0)
    if (~small).any():
        out[~small] = special.jv(1, z[~small])
    return out[0] if scalar else out


def bessel_J1_real(x):
    """J1 on real arguments, returned as float; used by the quadrature kernels."""
    x = np.asarray(x, dtype=float)
    return bessel_J1(x).real


def bessel_J1_tilde(zeta):
    """tilde-J1(zeta) = sum_k zeta^{k+1} / (k!(k+1)!) = sqrt(zeta) I1(2 sqrt(zeta))."""
    z = np.asarray(zeta, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if not np.all(np.isfinite(z)) or np.any(np.abs(z) > TILDE_RADIUS):
        raise DomainError(f"bessel_J1_tilde argument outside |zeta| <= {TILDE_RADIUS:g}")
    out = z * _series(z)
    return out[0] if scalar else out
