import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from sparseclt.limit.bessel import DomainError, bessel_J1, bessel_J1_real, bessel_J1_tilde
from sparseclt.limit.quadrature import GridConfig, composite_gauss_legendre, tail_cutoff


def test_J1_values():
    assert bessel_J1(0) == 0
    assert abs(bessel_J1(2.0) - 0.576724807756873) < 1e-13
    assert abs(bessel_J1(2.0) - complex(mpmath.besselj(1, 2))) < 1e-15


@settings(max_examples=100, deadline=None)
@given(re=st.floats(-30, 30), im=st.floats(-8, 8))
def test_J1_against_mpmath(re, im):
    z = complex(re, im)
    ref = complex(mpmath.besselj(1, mpmath.mpc(re, im)))
    # relative accuracy, floored near the zeros of J1 where it is undefined
    assert abs(bessel_J1(z) - ref) <= 1e-12 * max(abs(ref), 0.05)


def test_J1_real_bounded():
    x = np.linspace(0, 40, 4001)
    assert np.max(np.abs(bessel_J1_real(x))) <= 1
    assert np.allclose(bessel_J1_real(x), special.j1(x), atol=1e-14)


def test_J1_domain():
    with pytest.raises(DomainError):
        bessel_J1(2e4)
    with pytest.raises(DomainError):
        bessel_J1(np.nan)


def test_tilde_values():
    assert bessel_J1_tilde(0) == 0
    assert abs(bessel_J1_tilde(1.0) - 1.5906368546373291) < 1e-13
    assert abs(bessel_J1_tilde(1.0) - special.iv(1, 2.0)) < 1e-14
    with pytest.raises(DomainError):
        bessel_J1_tilde(40.0)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(0, 4), theta=st.floats(-np.pi, np.pi))
def test_tilde_relation_and_bounds(r, theta):
    zeta = r * np.exp(1j * theta)
    t = bessel_J1_tilde(zeta)
    s = np.sqrt(zeta)
    # -i sqrt(zeta) J1(2i sqrt(zeta)) reproduces the series; the printed form with -2i is twice that
    assert abs(t - (-1j * s * bessel_J1(2j * s))) <= 1e-10 * max(1, abs(t))
    if r > 1e-6:
        assert abs((-2j * s * bessel_J1(2j * s)) / t - 2) < 1e-10
    # |tilde-J1(z)| <= |z| e^{|z|}-type bound: the series is dominated by its |z| counterpart
    assert abs(t) <= bessel_J1_tilde(abs(zeta)).real + 1e-15
    assert abs(t) <= abs(zeta) * np.exp(abs(zeta))


def test_gauss_legendre_exactness():
    nodes, w = composite_gauss_legendre([0, 0.5, 2.0], 8)
    assert abs(np.sum(w * nodes**7) - 2.0**8 / 8) < 1e-12
    with pytest.raises(ValueError):
        composite_gauss_legendre([0, 1, 1], 4)


def test_tail_cutoff():
    v = tail_cutoff(3.0)
    assert abs(np.exp(-3 * v) * np.sqrt(1 + v) - 1e-14) < 1e-20
    with pytest.raises(ValueError):
        tail_cutoff(0.0)


def test_grid_config():
    g = GridConfig()
    nodes, w = g.build(3.0)
    assert len(nodes) == 192 and np.all(np.diff(nodes) > 0) and nodes[0] > 0
    assert nodes[-1] < g.resolve_vmax(3.0)
    assert abs(np.sum(w * np.exp(-3 * nodes)) - 1 / 3) < 1e-13
    # geometric grading keeps a sqrt(v) endpoint tolerable
    ref = 0.5 * np.sqrt(np.pi) / 3**1.5
    assert abs(np.sum(w * np.sqrt(nodes) * np.exp(-3 * nodes)) - ref) < 1e-6 * ref
    nf, wf = g.refined().build(3.0)
    assert len(nf) == 384 and abs(wf.sum() - w.sum()) < 1e-12
    assert GridConfig.from_points(100, 5.0).panels == 7
    with pytest.raises(ValueError):
        GridConfig(ratio=1.5)
