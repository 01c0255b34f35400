import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparseclt.ensemble import EnsembleParams, cavity_delete, sample_adjacency
from sparseclt.estimates import InsufficientReplicasError
from sparseclt.harness.enumeration import exact_mean_f
from sparseclt.limit.bessel import DomainError, bessel_J1_tilde
from sparseclt.observables import (
    D1_eval,
    D1_from_slices,
    conditional_cov_estimate,
    conditional_cov_exact,
    conditional_cov_profile,
    exponential,
    f_n_eval,
    f_n_u_derivative,
    gaussian_window,
    grid_function,
    linear_statistic,
    linear_statistic_exact,
    monomial,
    parse_test_function,
    trace_power,
    v_J_eval,
)
from sparseclt.resolvent import eigendecompose, resolvent


def test_f_n_examples(path3, empty3):
    z = 2.0 + 0.5j
    assert f_n_eval(resolvent(path3, z), 0.0) == 1
    assert np.isclose(f_n_eval(resolvent(empty3, z), 1.3), np.exp(-1.3 / z))
    with pytest.raises(ValueError):
        f_n_eval(resolvent(path3, z), -0.1)
    vec = f_n_eval(resolvent(path3, z), [0.0, 1.0, 2.0])
    assert vec.shape == (3,) and vec[0] == 1


def test_f_n_two_vertex_enumeration():
    exact = 0.5 * np.exp(-0.5) + 0.5 * np.exp(-0.4)
    assert abs(exact_mean_f(EnsembleParams(2, 1.0), 2.0, 1.0) - exact) < 1e-15


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31), re=st.floats(0.01, 5), im=st.floats(-5, 5), u=st.floats(0, 50))
def test_f_n_modulus_bounded(seed, re, im, u):
    s = sample_adjacency(EnsembleParams(40, 3.0, seed), 0)
    assert abs(f_n_eval(resolvent(s, complex(re, im)), u)) <= 1 + 1e-12


def test_u_derivative_matches_trace():
    s = sample_adjacency(EnsembleParams(100, 2.0, 3), 0)
    sl = resolvent(s, 3.0)
    assert abs(f_n_u_derivative(sl) + sl.trace / s.n) < 1e-10


def test_D1_examples(path3, empty3):
    z = 2.0
    assert D1_eval(path3, z, 0.0) == 1
    assert np.isclose(D1_eval(empty3, z, 1.0), np.exp(-1.0 / z))
    g = np.linalg.inv(z * np.eye(3) - 1j * path3.dense())
    c = cavity_delete(path3, 0)
    g0 = np.linalg.inv(z * np.eye(3) - 1j * c.dense())
    brute = np.exp(-g[0, 0]) + sum(np.exp(-g[k, k]) - np.exp(-g0[k, k]) for k in (1, 2))
    assert abs(D1_eval(path3, z, 1.0) - brute) < 1e-14


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**31), re=st.floats(0.1, 5), im=st.floats(-3, 3), u=st.floats(0, 10))
def test_D1_consistency_and_bound(n, seed, re, im, u):
    s = sample_adjacency(EnsembleParams(n, 2.0, seed), 0)
    z = complex(re, im)
    full, cav = resolvent(s, z), resolvent(cavity_delete(s, 0), z)
    d1 = D1_from_slices(full, cav, u)
    alt = n * (f_n_eval(full, u) - f_n_eval(cav, u)) + np.exp(-u / z)
    assert abs(d1 - alt) < 1e-10 * max(1, n)
    assert abs(d1) <= 1 + u / z.real + 1e-12


def test_linear_statistic_examples():
    s = sample_adjacency(EnsembleParams(60, 3.0, 1), 0)
    spec = eigendecompose(s, keep_vectors=False)
    assert np.isclose(linear_statistic(spec, monomial(0)), 60)
    assert abs(linear_statistic(spec, monomial(1))) < 1e-10
    assert np.isclose(linear_statistic(spec, monomial(2)), 2 * s.n_edges)


def test_trace_powers_match_eigenvalues():
    s = sample_adjacency(EnsembleParams(150, 3.0, 9), 2)
    lam = eigendecompose(s, keep_vectors=False).eigenvalues
    for k in range(7):
        assert abs(trace_power(s, k) - np.sum(lam**k)) <= 1e-8 * s.n
        if k >= 2:
            assert linear_statistic_exact(s, monomial(k)) == trace_power(s, k)


def test_v_J_examples(empty3):
    s = sample_adjacency(EnsembleParams(4, 2.0, 7), 3)
    sl = resolvent(s, 3.0, want_full=True)
    assert v_J_eval(sl, 1.0, 0.0) == 0
    ref = sum(np.exp(-sl.full[k, k]) * bessel_J1_tilde(sl.full[k, j] ** 2) for j in range(4) for k in range(4)) / 4
    assert abs(v_J_eval(sl, 1.0, 1.0) - ref) < 1e-14
    z, u, v = 2.0 + 0.5j, 0.7, 1.5 - 0.5j
    e = resolvent(empty3, z, want_full=True)
    assert abs(v_J_eval(e, u, v) - np.exp(-u / z) * bessel_J1_tilde(v / z**2)) < 1e-14
    with pytest.raises(DomainError):
        v_J_eval(sl, 1.0, 400.0)
    with pytest.raises(ValueError):
        v_J_eval(resolvent(s, 3.0), 1.0, 1.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), v_re=st.floats(-20, 20), v_im=st.floats(-20, 20))
def test_v_J_matches_direct_series(seed, v_re, v_im):
    s = sample_adjacency(EnsembleParams(12, 3.0, seed), 0)
    sl = resolvent(s, 2.0 + 0.3j, want_full=True)
    v = complex(v_re, v_im)
    ref = np.sum(np.exp(-sl.diag)[:, None] * bessel_J1_tilde(v * sl.full**2)) / 12
    assert abs(v_J_eval(sl, 1.0, v) - ref) <= 1e-12 * max(1, abs(ref))


def test_test_functions():
    assert exponential(0.5, c=1.0).admissible()
    assert not exponential(2.0, c=1.0).admissible()
    assert monomial(3).admissible() and gaussian_window(0, 1).admissible()
    assert monomial(1).degenerate() and monomial(0).degenerate() and not monomial(2).degenerate()
    assert parse_test_function("lambda^2").monomial_power == 2
    assert parse_test_function("exp:0.5").label == "exp(0.5*lambda)"
    assert parse_test_function("gauss:0:2").kind == "gaussian"
    with pytest.raises(ValueError):
        parse_test_function("sin")
    x = np.linspace(-3, 3, 25)
    g = grid_function(x, x**2)
    assert np.allclose(g(np.array([0.5, 1.0])), [0.25, 1.0], atol=1e-10)
    assert grid_function(x, 2 * x + 1).degenerate()


def test_conditional_cov_trivial_cases():
    params = EnsembleParams(20, 2.0, 4)
    cav = cavity_delete(sample_adjacency(params, 1), 0)
    zero = conditional_cov_estimate(cav, EnsembleParams(20, 0.0, 4), 3.0, 1.0, 3.0, 1.0, 50)
    assert zero.value == 0 and zero.stderr == 0
    assert conditional_cov_estimate(cav, params, 3.0, 0.0, 3.0, 1.0, 50).value == 0
    with pytest.raises(InsufficientReplicasError):
        conditional_cov_estimate(cav, params, 3.0, 1.0, 3.0, 1.0, 1)
    with pytest.raises(ValueError):
        conditional_cov_estimate(cav, params, 2.0, 1.0, 3.0, 1.0, 50)
    with pytest.raises(ValueError):
        conditional_cov_estimate(sample_adjacency(EnsembleParams(20, 20.0, 1), 0), params, 3.0, 1.0, 3.0, 1.0, 50)


def test_conditional_cov_matches_enumeration():
    params = EnsembleParams(6, 2.0, 1)
    cav = cavity_delete(sample_adjacency(params, 5), 0)
    exact = conditional_cov_exact(cav, params, 3.0, 1.0, 3.0, 1.0)[0]
    est = conditional_cov_estimate(cav, params, 3.0, 1.0, 3.0, 1.0, 100_000, replica_id=11)
    assert abs(est.value - exact) <= 3 * est.stderr


def test_conditional_cov_profile_distinct_z():
    params = EnsembleParams(6, 2.0, 1)
    cav = cavity_delete(sample_adjacency(params, 2), 0)
    u = [0.5, 1.0, 2.0]
    exact = conditional_cov_exact(cav, params, 3.0 + 1j, u, 4.0, 0.5)
    cov, se = conditional_cov_profile(cav, params, 3.0 + 1j, u, 4.0, 0.5, 100_000, replica_id=3)
    assert np.all(np.abs(cov - exact) <= 3 * se)
