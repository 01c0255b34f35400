"""Quadrature checks of the two integral identities behind the cavity expansion.

Laplace:  int_0^inf v^{m-1}/(m-1)! e^{-R v} dv = R^{-m}          (Re R > 0)
Bessel:   e^{-u R} = 1 - sqrt(u) int_0^inf J1(2 sqrt(uv)) v^{-1/2} e^{-v/R} dv   (Re 1/R > 0)

In the Bessel form R plays the role of a resolvent entry, so the decay rate
of the integrand is Re(1/R), not Re R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_J1
from .quadrature import composite_gauss_legendre

_ORDER = 24
_TAIL_LOG = 40.0  # integrate until the envelope has decayed by e^{-40}


@dataclass(frozen=True)
class IdentityResidual:
    laplace: float
    bessel: float
    laplace_value: complex
    bessel_value: complex


def _panels(length: float, freq: float) -> np.ndarray:
    # about one radian of oscillation per panel, never fewer than 8 panels
    count = max(8, int(math.ceil(length * freq)) + 8)
    return np.linspace(0.0, length, count + 1)


def laplace_integral(R: complex, m: int) -> complex:
    R = complex(R)
    if R.real <= 0:
        raise ValueError("Laplace identity needs Re R > 0")
    if m < 1:
        raise ValueError("m must be a positive integer")
    # v^{m-1} e^{-Re R v} peaks at (m-1)/Re R; go far enough past it
    vmax = (_TAIL_LOG + (m - 1) * (1.0 + math.log1p((m - 1) / R.real))) / R.real + (m - 1) / R.real
    v, w = composite_gauss_legendre(_panels(vmax, abs(R.imag) + 1.0 / max(vmax, 1e-300) + 0.5 * R.real), _ORDER)
    vals = np.exp((m - 1) * np.log(v) - R * v - math.lgamma(m))
    return complex(np.sum(w * vals))


def bessel_integral(R: complex, u: float) -> complex:
    """1 - sqrt(u) int J1(2 sqrt(uv)) v^{-1/2} e^{-v/R} dv, with v = t^2 to remove the endpoint singularity."""
    R = complex(R)
    s = 1.0 / R
    if s.real <= 0:
        raise ValueError("Bessel identity needs Re(1/R) > 0")
    if u < 0:
        raise ValueError("u must be nonnegative")
    if u == 0:
        return 1.0 + 0j
    tmax = math.sqrt(_TAIL_LOG / s.real)
    freq = 2.0 * math.sqrt(u) + 2.0 * tmax * abs(s.imag) + 2.0 * tmax * s.real
    t, w = composite_gauss_legendre(_panels(tmax, freq), _ORDER)
    vals = 2.0 * bessel_J1(2.0 * math.sqrt(u) * t) * np.exp(-s * t * t)
    return complex(1.0 - math.sqrt(u) * np.sum(w * vals))


def laplace_identity_residual(R: complex, u: float, m: int) -> IdentityResidual:
    """Residuals of both identities, relative to max(1, |exact value|)."""
    R = complex(R)
    lap = laplace_integral(R, m)
    lap_exact = R ** (-m)
    bes = bessel_integral(R, u)
    bes_exact = np.exp(-u * R)
    return IdentityResidual(
        laplace=float(abs(lap - lap_exact) / max(1.0, abs(lap_exact))),
        bessel=float(abs(bes - bes_exact) / max(1.0, abs(bes_exact))),
        laplace_value=lap,
        bessel_value=bes,
    )
