import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from sparseclt.limit.bessel import bessel_J1
from sparseclt.limit.fixed_point import (
    FixedPointError,
    GridFunction,
    matched_node_change,
    solve_fixed_point,
    stieltjes_limit,
)
from sparseclt.limit.identities import bessel_integral, laplace_identity_residual, laplace_integral
from sparseclt.limit.kernel import (
    ContractionError,
    build_kernel,
    fredholm_solve,
    kernel_bound,
    kernel_values,
    locate_contraction_threshold,
    nystrom_extend,
    operator_norm_estimate,
)
from sparseclt.limit.quadrature import GridConfig


@pytest.fixture(scope="module")
def f32():
    return solve_fixed_point(3.0, 2.0)


# ---------------------------------------------------------------- fixed point

@pytest.mark.parametrize("z", [3.0, 2.5 + 1.0j, 6.0 - 2.0j])
def test_p0_closed_form(z):
    f = solve_fixed_point(z, 0.0)
    assert np.max(np.abs(f.values - np.exp(-f.nodes / z))) < 1e-8
    assert abs(stieltjes_limit(f) - 1 / z) < 1e-12


def test_fixed_point_residual_and_bounds(f32):
    assert f32.residual <= 1e-10
    assert f32.value_at_zero == 1
    assert np.all(np.abs(f32.values) <= 1 + 1e-12)
    assert np.all(f32.values.real <= 1)
    assert np.isfinite(f32.weighted_norm())
    assert abs(f32.evaluate([0.0])[0] - 1) < 1e-15


def test_contraction_factor_roughly_constant(f32):
    h = np.array(f32.residual_history)
    ratios = h[1:-1] / h[:-2]
    assert np.all(ratios < 1)
    assert ratios[2:].max() - ratios[2:].min() < 0.1


def test_initialization_independence(f32):
    f0 = solve_fixed_point(3.0, 2.0, init=0.0)
    assert np.max(np.abs(f0.values - f32.values)) < 1e-8
    rng = np.random.default_rng(1)
    init = rng.uniform(-1, 1, len(f32.nodes)) + 1j * rng.uniform(-1, 1, len(f32.nodes))
    assert np.max(np.abs(solve_fixed_point(3.0, 2.0, init=init).values - f32.values)) < 1e-8


def test_grid_doubling(f32):
    fine = solve_fixed_point(3.0, 2.0, config=GridConfig().refined())
    assert matched_node_change(f32, fine) <= 1e-7


def test_stieltjes_limit_positive(f32):
    g = stieltjes_limit(f32)
    assert g.real > 0
    # derivative of f at u = 0 by the Nystrom extension
    h = 1e-5
    d = (f32.evaluate([2 * h])[0] - f32.evaluate([h])[0]) / h
    assert abs(-d - g) < 1e-4


def test_regime_guard_and_nonconvergence():
    with pytest.raises(ValueError):
        solve_fixed_point(1.5, 2.0)
    with pytest.raises(ValueError):
        solve_fixed_point(-1.0, 2.0, allow_unproven=True)
    f = solve_fixed_point(1.5, 2.0, allow_unproven=True)
    assert f.residual <= 1e-10
    with pytest.raises(FixedPointError) as info:
        solve_fixed_point(3.0, 2.0, max_iter=2)
    assert info.value.residual > 1e-10


def test_gridfunction_json_roundtrip(tmp_path, f32):
    path = f32.save(tmp_path / "f.json")
    g = GridFunction.load(path)
    assert g.z == f32.z and g.p == f32.p and g.config == f32.config
    assert np.array_equal(g.values, f32.values) and np.array_equal(g.nodes, f32.nodes)
    with pytest.raises(ValueError):
        GridFunction.from_json({"kind": "other"})


# ---------------------------------------------------------------- kernel

def test_kernel_examples():
    f = solve_fixed_point(3.0, 0.0)
    k = kernel_values([1.0], f, nodes=np.array([1.0]), f_at_nodes=np.exp(-np.array([1.0]) / 3))
    assert abs(abs(k[0, 0]) - abs(bessel_J1(2.0)) * np.exp(-3)) < 1e-12
    assert abs(abs(k[0, 0]) - 0.0287) < 1e-4
    small = kernel_values([1e-12], f)
    assert np.max(np.abs(small)) < 1e-10


def test_kernel_bound_everywhere(f32):
    kern = build_kernel(3.0, f32)
    assert kern.bound_ratio <= 1
    u = np.geomspace(1e-3, 50, 60)
    assert np.all(np.abs(kernel_values(u, f32)) <= kernel_bound(u, f32.nodes, 3.0) * (1 + 1e-12))
    with pytest.raises(ValueError):
        build_kernel(4.0, f32)


def test_norm_p0_z10_below_half():
    f = solve_fixed_point(10.0, 0.0)
    bare = operator_norm_estimate(build_kernel(10.0, f), coupled=False)
    assert bare < 0.5
    # explicit bound: sup_u (1+u)^{-1/2} u^{1/2} int v^{-1/2} e^{-10 v} sqrt(1+v) dv
    bound = quad(lambda v: v**-0.5 * np.exp(-10 * v) * np.sqrt(1 + v), 0, np.inf)[0]
    assert bare <= bound


def test_norm_monotone_in_z():
    est = [operator_norm_estimate(build_kernel(z, solve_fixed_point(z, 2.0))) for z in (3, 5, 8, 12)]
    assert all(a >= b for a, b in zip(est, est[1:]))


def test_norm_dominates_single_entry():
    f = solve_fixed_point(3.0, 0.0)
    kern = build_kernel(3.0, f)
    bare = operator_norm_estimate(kern, coupled=False)
    q = np.argmin(np.abs(kern.nodes - 1.0))
    row = np.abs(kern.entries[q]) * np.sqrt(1 + kern.nodes) / np.sqrt(1 + kern.nodes[q])
    assert bare >= row.max()


def test_fredholm_trivial_cases(f32):
    kern = build_kernel(5.0, solve_fixed_point(5.0, 2.0))
    assert np.all(fredholm_solve(kern, np.zeros(len(kern.nodes))) == 0)
    k0 = build_kernel(5.0, solve_fixed_point(5.0, 0.0))
    v = np.exp(-k0.nodes) + 0j
    assert np.allclose(fredholm_solve(k0, v), v)


def test_fredholm_two_methods_agree():
    kern = build_kernel(5.0, solve_fixed_point(5.0, 2.0))
    v = np.exp(-kern.nodes)
    a = fredholm_solve(kern, v)
    b = fredholm_solve(kern, v, method="neumann")
    assert np.max(np.abs(a - b)) < 1e-9
    assert np.max(np.abs(a - kern.operator @ a - v)) < 1e-10
    ext = nystrom_extend(kern, a, np.exp(-kern.nodes), kern.nodes)
    assert np.max(np.abs(ext - a)) < 1e-10


def test_fredholm_refuses_without_contraction():
    kern = build_kernel(3.0, solve_fixed_point(3.0, 2.0), coupling=3.0)
    assert operator_norm_estimate(kern) >= 1
    with pytest.raises(ContractionError):
        fredholm_solve(kern, np.ones(len(kern.nodes)))


def test_locate_threshold():
    sw = locate_contraction_threshold(2.0, sweep=[3.0, 5.0, 8.0, 12.0])
    assert sw.m0 == 8.0
    assert sw.table[-1][1] < 0.5 <= sw.table[-2][1]


# ---------------------------------------------------------------- identities

def test_identity_examples():
    assert abs(laplace_integral(2.0, 1) - 0.5) < 1e-8
    assert abs(bessel_integral(1.0, 1.0) - np.exp(-1)) < 1e-8
    r = laplace_identity_residual(2 + 1j, 3.0, 2)
    assert r.bessel <= 1e-7 and r.laplace <= 1e-8


@settings(max_examples=50, deadline=None)
@given(re=st.floats(0.2, 5), im=st.floats(-5, 5), u=st.floats(0, 10), m=st.integers(1, 6))
def test_identities_random(re, im, u, m):
    r = laplace_identity_residual(complex(re, im), u, m)
    assert r.laplace <= 1e-8 and r.bessel <= 1e-8


def test_identity_domain():
    with pytest.raises(ValueError):
        laplace_integral(-1.0, 1)
    with pytest.raises(ValueError):
        bessel_integral(-1.0, 1.0)
