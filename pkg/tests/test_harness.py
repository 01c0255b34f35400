import numpy as np
import pytest

from sparseclt.ensemble import EnsembleParams
from sparseclt.estimates import InsufficientReplicasError, MomentEstimate, grouped_jackknife, mean_estimate
from sparseclt.harness.clt import binomial_variance_lambda2, clt_from_values, clt_test
from sparseclt.harness.crossval import covariance_crossval, fredholm_pathway
from sparseclt.harness.enumeration import (
    exact_linear_statistic_moments,
    exact_mean_edges,
    exact_mean_f,
    exact_moment_f,
    exact_moment_trace,
)
from sparseclt.harness.manifest import RunManifest
from sparseclt.harness.moments import (
    estimate_moment_dfdu,
    estimate_moment_f,
    estimate_moment_trace,
    wick_check,
    wick_check_common,
)
from sparseclt.harness.replicas import run_replicas
from sparseclt.harness.scaling import scaling_fit, variance_estimate
from sparseclt.limit.kernel import ContractionError
from sparseclt.observables import monomial


@pytest.fixture(scope="module")
def table_n50():
    return run_replicas(EnsembleParams(50, 2.0, 99), [3.0, 4.0 + 1j], [0.5, 1.0], [monomial(2), monomial(3)],
                        R=2000, derivative_step=1e-3)


def test_single_replica_empty_ensemble():
    t = run_replicas(EnsembleParams(30, 0.0, 1), [3.0], [1.0], [monomial(2)], R=1)
    assert np.isclose(t.f[0, 0, 0], np.exp(-1 / 3))
    assert np.isclose(t.trace[0, 0], 30 / 3)
    assert t.linstat[0, 0] == 0


def test_worker_count_invariance():
    args = (EnsembleParams(80, 2.0, 5), [3.0], [1.0], [monomial(2), monomial(4)])
    a = run_replicas(*args, R=40, workers=1, chunk=8)
    b = run_replicas(*args, R=40, workers=3, chunk=8)
    assert np.array_equal(a.f, b.f) and np.array_equal(a.trace, b.trace)
    assert np.array_equal(a.linstat, b.linstat) and np.array_equal(a.replica_ids, b.replica_ids)


def test_general_phi_uses_eigenvalues():
    from sparseclt.observables import gaussian_window

    t = run_replicas(EnsembleParams(20, 2.0, 5), phi_list=[gaussian_window(0, 1), monomial(2)], R=3)
    assert np.all(t.linstat[:, 1] == 2 * t.edges)
    assert np.all((t.linstat[:, 0] > 0) & (t.linstat[:, 0] <= 20))


def test_two_vertex_mean_f():
    t = run_replicas(EnsembleParams(2, 1.0, 3), [2.0], [1.0], R=20_000)
    est = mean_estimate(t.f_column(2.0, 1.0))
    exact = 0.5 * np.exp(-0.5) + 0.5 * np.exp(-0.4)
    assert abs(est.value - exact) <= 3 * est.stderr


def test_moments_deterministic_observable():
    t = run_replicas(EnsembleParams(20, 0.0, 1), [3.0], [1.0], R=200)
    m2 = estimate_moment_f(t, 2, (3.0, 1.0))
    assert abs(m2.value) < 1e-25 and m2.stderr < 1e-25
    assert abs(estimate_moment_trace(t, 2, 3.0).value) < 1e-25


def test_first_moment_is_exactly_zero(table_n50):
    m1 = estimate_moment_f(table_n50, 1, (3.0, 1.0))
    assert m1.value == 0 and m1.stderr == 0


def test_odd_moment_vanishes(table_n50):
    m3 = estimate_moment_f(table_n50, 3, (3.0, 1.0))
    assert abs(m3.value) <= 4 * m3.stderr


def test_high_moments_need_replicas():
    t = run_replicas(EnsembleParams(20, 2.0, 1), [3.0], [1.0], R=50)
    with pytest.raises(InsufficientReplicasError):
        estimate_moment_f(t, 4, (3.0, 1.0))
    with pytest.raises(InsufficientReplicasError):
        estimate_moment_trace(t, 4, 3.0)
    estimate_moment_f(t, 3, (3.0, 1.0))


def test_two_vertex_moments_match_enumeration():
    params = EnsembleParams(2, 1.0, 17)
    t = run_replicas(params, [2.0], [1.0], R=20_000)
    m2 = estimate_moment_f(t, 2, (2.0, 1.0))
    assert abs(m2.value - exact_moment_f(params, 2, [(2.0, 1.0)] * 2)) <= 3 * m2.stderr
    s2 = estimate_moment_trace(t, 2, 2.0)
    assert abs(s2.value - exact_moment_trace(params, 2, [2.0] * 2)) <= 3 * s2.stderr


def test_wick_check_mechanics(table_n50):
    r3 = wick_check_common(table_n50, 3, 3.0, 1.0)
    assert r3.prediction == 0 and r3.n_sigma == 4
    r4 = wick_check_common(table_n50, 4, 3.0, 1.0)
    m2 = estimate_moment_f(table_n50, 2, (3.0, 1.0))
    assert np.isclose(r4.prediction, 3 * m2.value**2)
    other = run_replicas(EnsembleParams(50, 2.0, 100), [3.0], [1.0], R=2000)
    with pytest.raises(ValueError):
        wick_check(estimate_moment_f(table_n50, 4, (3.0, 1.0)), [(estimate_moment_f(other, 2, (3.0, 1.0)), m2)])


def test_mixed_arguments_and_dfdu(table_n50):
    args = [(3.0, 0.5), (4.0 + 1j, 1.0)]
    m = estimate_moment_f(table_n50, 2, args)
    c = table_n50.f_column(3.0, 0.5), table_n50.f_column(4.0 + 1j, 1.0)
    direct = 50 * np.mean((c[0] - c[0].mean()) * (c[1] - c[1].mean()))
    assert np.isclose(m.value, direct)
    # d^2 M_2 / du1 du2 at 0 equals the trace-family second moment
    d = estimate_moment_dfdu(table_n50, 3.0, 4.0 + 1j)
    s = estimate_moment_trace(table_n50, 2, [3.0, 4.0 + 1j])
    assert abs(d.value - s.value) <= 1e-6 * abs(s.value) + 3 * np.hypot(d.stderr, s.stderr) * 1e-3


def test_stderr_shrinks_with_R():
    p = EnsembleParams(40, 2.0, 8)
    a = run_replicas(p, [3.0], [1.0], R=2000)
    b = run_replicas(p, [3.0], [1.0], R=4000, id_offset=10_000)
    ra = estimate_moment_f(a, 2, (3.0, 1.0)).stderr
    rb = estimate_moment_f(b, 2, (3.0, 1.0)).stderr
    assert abs(ra / rb / np.sqrt(2) - 1) < 0.2


def test_grouped_jackknife_mean_matches_classical():
    x = np.random.default_rng(0).normal(size=1000)
    full, se, reps = grouped_jackknife(x, np.mean, groups=1000)
    assert np.isclose(se, x.std(ddof=1) / np.sqrt(1000))
    assert len(reps) == 1000
    with pytest.raises(ValueError):
        MomentEstimate(1.0, 0.5, 1)


def test_scaling_fit():
    ns = [250, 500, 1000, 2000]
    ests = [MomentEstimate(3.0 / n, 0.01 / n, 100) for n in ns]
    fit = scaling_fit("var_f", ns, ests)
    assert abs(fit.slope + 1) < 1e-12 and fit.verdict == "ok" and fit.within(-1, 0.15)
    zero = scaling_fit("var_f", ns, [MomentEstimate(0.0, 0.0, 100)] * 4)
    assert zero.degenerate and "zero variance" in zero.verdict and not zero.within(-1, 0.15)
    with pytest.raises(ValueError):
        scaling_fit("var_f", [250, 500, 1000], ests[:3])
    noisy = scaling_fit("gap", ns, [MomentEstimate(1.0 / n, 1.0 / n, 100) for n in ns])
    assert noisy.verdict.startswith("noisy")


def test_variance_estimate():
    x = np.random.default_rng(2).normal(size=5000)
    v = variance_estimate(x)
    assert abs(v.value - 1) <= 4 * v.stderr


def test_clt_mechanics():
    params = EnsembleParams(100, 2.0, 3)
    assert clt_test(monomial(1), params, 1000).degenerate
    with pytest.raises(ValueError):
        clt_test(monomial(2), params, 10)
    assert binomial_variance_lambda2(2000, 2.0) == pytest.approx(4 * 1999000 * 0.001 * 0.999 / 2000)
    gauss = np.random.default_rng(4).normal(size=5000) * np.sqrt(100)
    rep = clt_from_values(gauss, monomial(2), 100)
    assert rep.ks_passed and rep.skew_ok


def test_clt_lambda2_variance_oracle():
    params = EnsembleParams(200, 2.0, 1)
    rep = clt_test(monomial(2), params, 4000)
    oracle = binomial_variance_lambda2(200, 2.0)
    assert abs(rep.variance.value - oracle) <= 3 * rep.variance.stderr


def test_enumeration_consistency():
    params = EnsembleParams(3, 1.5)
    assert np.isclose(exact_mean_edges(params), 3 * 0.5)
    mean, var = exact_linear_statistic_moments(params, monomial(2))
    assert np.isclose(mean, 2 * 1.5) and np.isclose(var, 4 * 3 * 0.25)
    assert abs(exact_mean_f(EnsembleParams(3, 0.0), 3.0, 1.0) - np.exp(-1 / 3)) < 1e-15


def test_crossval_trivial_cases():
    zero = EnsembleParams(60, 0.0, 1)
    rep = covariance_crossval(zero, 6.5, 6.5, [0.0, 1.0], 1.0, 4, 20, 20)
    for r in rep.rows:
        assert r.fredholm == 0 and r.direct == 0 and r.passed
    params = EnsembleParams(60, 2.0, 1)
    mean, se, v, norm = fredholm_pathway(params, 6.5, 6.5, [0.0], 1.0, 4, 50)
    assert abs(mean[0]) < 1e-15 and norm < 0.5
    with pytest.raises(ContractionError):
        fredholm_pathway(params, 6.5, 6.5, [1.0], 1.0, 4, 50, m0=7.0)


def test_manifest(tmp_path):
    m = RunManifest("identities", {"text": "x"}, 3)
    m.add_check("a", True)
    m.add_check("b", False, "why")
    path = m.write(tmp_path / "m.json")
    import json

    doc = json.loads(path.read_text())
    assert doc["all_passed"] is False and doc["base_seed"] == 3 and doc["finished"]
