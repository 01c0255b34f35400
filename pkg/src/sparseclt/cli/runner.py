"""Mode dispatch: run an experiment, write CSV results, cache and manifest."""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from ..ensemble import EnsembleParams
from ..estimates import InsufficientReplicasError
from ..harness.clt import binomial_variance_lambda2, clt_test
from ..harness.crossval import covariance_crossval
from ..harness.manifest import RunManifest
from ..harness.moments import estimate_moment_f, estimate_moment_trace, wick_check_common
from ..harness.replicas import run_replicas
from ..harness.scaling import mean_gap_estimate, scaling_fit, variance_estimate
from ..harness.suite import run_identity_suite
from ..limit.fixed_point import GridFunction, matched_node_change, solve_fixed_point, stieltjes_limit
from ..limit.kernel import locate_contraction_threshold
from ..limit.quadrature import GridConfig
from ..observables import parse_test_function
from .config import ExperimentConfig, emit_config, format_complex

LLN_TARGET = (-0.5, 0.2)
VAR_TARGET = (-1.0, 0.15)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


class Writer:
    """Writes RFC-4180 CSV files into the output directory and registers them in the manifest."""

    def __init__(self, out: Path, manifest: RunManifest):
        self.out = out
        self.manifest = manifest

    def csv(self, name: str, columns: list[tuple[str, str, str]], rows, description: str) -> Path:
        path = self.out / name
        try:
            with path.open("w", newline="") as fh:
                for col, unit, est in columns:
                    fh.write(f"# {col}: {unit}; {est}\n")
                w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
                w.writerow([c[0] for c in columns])
                for r in rows:
                    w.writerow([_fmt(v) for v in r])
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        self.manifest.add_output(name, description)
        return path


def grid_config(cfg: ExperimentConfig) -> GridConfig:
    return GridConfig.from_points(cfg.grid_points, cfg.vmax)


def cached_fixed_point(z: complex, cfg: ExperimentConfig, writer: Writer) -> GridFunction:
    gc = grid_config(cfg)
    key = json.dumps([z.real, z.imag, cfg.p, gc.panels, gc.order, gc.vmax, cfg.allow_unproven])
    name = f"cache/f_{hashlib.sha1(key.encode()).hexdigest()[:12]}.json"
    path = writer.out / name
    f = None
    if path.exists():
        try:
            cand = GridFunction.load(path)
            if cand.z == z and cand.p == cfg.p and cand.config == gc:
                f = cand
        except (ValueError, KeyError, OSError):
            f = None
    if f is None:
        f = solve_fixed_point(z, cfg.p, config=gc, allow_unproven=cfg.allow_unproven)
        path.parent.mkdir(parents=True, exist_ok=True)
        f.save(path)
    if name not in [o["path"] for o in writer.manifest.outputs]:
        writer.manifest.add_output(name, f"cached fixed point f(z,.) at z={format_complex(z)}, p={cfg.p!r}")
    return f


# ---------------------------------------------------------------- modes

def _solve_limit(cfg, w: Writer, m: RunManifest):
    gc = grid_config(cfg)
    grid_rows, summary = [], []
    for z in cfg.z:
        f = cached_fixed_point(z, cfg, w)
        tag = format_complex(z)
        f0 = solve_fixed_point(z, cfg.p, config=gc, init=0.0, allow_unproven=cfg.allow_unproven)
        fine = solve_fixed_point(z, cfg.p, config=gc.refined(), allow_unproven=cfg.allow_unproven)
        change = matched_node_change(f, fine)
        m.add_check(f"residual z={tag}", f.residual <= 1e-10, f"{f.residual:.3e}")
        m.add_check(f"init independence z={tag}", np.max(np.abs(f.values - f0.values)) <= 1e-8)
        m.add_check(f"grid doubling z={tag}", change <= 1e-7, f"{change:.3e}")
        m.add_check(f"|f| <= 1 z={tag}", np.max(np.abs(f.values)) <= 1 + 1e-12)
        if cfg.p == 0:
            err = float(np.max(np.abs(f.values - np.exp(-f.nodes / z))))
            m.add_check(f"p=0 closed form z={tag}", err <= 1e-8, f"{err:.3e}")
        for v, wt, fv in zip(f.nodes, f.weights, f.values):
            grid_rows.append((z.real, z.imag, v, wt, fv.real, fv.imag))
        g = stieltjes_limit(f)
        fu = f.evaluate(cfg.u) if cfg.u else []
        for u, val in zip(cfg.u, fu):
            summary.append((z.real, z.imag, cfg.p, u, val.real, val.imag, g.real, g.imag, f.residual, f.iterations, change))
    w.csv("limit_grid.csv", [
        ("z_re", "1", "input"), ("z_im", "1", "input"), ("v", "1", "quadrature node"),
        ("weight", "1", "quadrature weight"), ("f_re", "1", "fixed point"), ("f_im", "1", "fixed point")],
        grid_rows, "fixed point on the quadrature grid")
    w.csv("limit_summary.csv", [
        ("z_re", "1", "input"), ("z_im", "1", "input"), ("p", "1", "input"), ("u", "1", "input"),
        ("f_re", "1", "Nystrom extension of the fixed point"), ("f_im", "1", "Nystrom extension of the fixed point"),
        ("g_re", "1", "Stieltjes limit by quadrature"), ("g_im", "1", "Stieltjes limit by quadrature"),
        ("residual", "1", "sup-grid fixed-point residual"), ("iterations", "count", "Picard iterations"),
        ("refinement_change", "1", "sup change at matched nodes under grid doubling")],
        summary, "fixed point at requested u and Stieltjes limit")


def _identities(cfg, w, m):
    checks = run_identity_suite(cfg.seed)
    for c in checks:
        m.add_check(c.name, c.passed, f"worst {c.worst:.3e} tol {c.tol:.0e}")
    w.csv("identities.csv", [
        ("check", "-", "identity or bound"), ("worst", "1", "max violation over instances"),
        ("tol", "1", "tolerance"), ("count", "count", "instances"), ("passed", "bool", "worst <= tol")],
        [(c.name, c.worst, c.tol, c.count, c.passed) for c in checks], "exact-identity suite")


def sweep_tables(cfg, with_vj: bool):
    z, u = cfg.z[0], cfg.u[0]
    tables = {}
    for n in cfg.ns:
        tables[n] = run_replicas(EnsembleParams(n, cfg.p, cfg.seed), [z], [u], R=cfg.replicas,
                                 workers=cfg.threads, vj=(u, cfg.vj_v) if with_vj else None)
    return tables


def _lln(cfg, w, m):
    z, u = cfg.z[0], cfg.u[0]
    f = cached_fixed_point(z, cfg, w)
    limit = complex(f.evaluate([u])[0])
    g = stieltjes_limit(f)
    tables = sweep_tables(cfg, False)
    gaps, rows = [], []
    for n, t in tables.items():
        col = t.f_column(z, u)
        gap = mean_gap_estimate(col, limit)
        gg = mean_gap_estimate(t.trace_column(z) / n, g)
        gaps.append(gap)
        mean = col.mean()
        rows.append((n, t.R, mean.real, mean.imag, gap.stderr, limit.real, limit.imag, gap.value.real, gg.value.real, gg.stderr))
    fit = scaling_fit("mean_gap", list(tables), gaps)
    m.add_check("LLN slope of |mean f_n - f|", fit.within(*LLN_TARGET),
                f"slope {fit.slope:.3f} +- {fit.slope_stderr:.3f}, target {LLN_TARGET[0]} +- {LLN_TARGET[1]}; {fit.verdict}")
    w.csv("lln.csv", [
        ("n", "1", "input"), ("R", "count", "replicas"), ("mean_f_re", "1", "sample mean of f_n"),
        ("mean_f_im", "1", "sample mean of f_n"), ("stderr", "1", "grouped jackknife"),
        ("limit_re", "1", "fixed point"), ("limit_im", "1", "fixed point"), ("gap", "1", "|mean f_n - f|"),
        ("trace_gap", "1", "|mean Tr G/n - g|"), ("trace_gap_stderr", "1", "grouped jackknife")],
        rows, "mean convergence sweep")
    _fit_csv(w, "lln_fit.csv", [fit])


def _variance(cfg, w, m):
    z, u = cfg.z[0], cfg.u[0]
    tables = sweep_tables(cfg, True)
    vf, vj, rows = [], [], []
    for n, t in tables.items():
        a = variance_estimate(t.f_column(z, u))
        b = variance_estimate(t.vj[:, 0])
        vf.append(a)
        vj.append(b)
        rows.append((n, t.R, a.value.real, a.stderr, b.value.real, b.stderr))
    fits = [scaling_fit("var_f", list(tables), vf), scaling_fit("var_vJ", list(tables), vj)]
    for fit in fits:
        m.add_check(f"slope of {fit.observable}", fit.within(*VAR_TARGET),
                    f"slope {fit.slope:.3f} +- {fit.slope_stderr:.3f}, target {VAR_TARGET[0]} +- {VAR_TARGET[1]}; {fit.verdict}")
    w.csv("variance.csv", [
        ("n", "1", "input"), ("R", "count", "replicas"), ("var_f", "1", "unbiased sample variance of f_n"),
        ("var_f_stderr", "1", "grouped jackknife"), ("var_vJ", "1", "unbiased sample variance of V_J,n"),
        ("var_vJ_stderr", "1", "grouped jackknife")], rows, "variance decay sweep")
    _fit_csv(w, "variance_fit.csv", fits)


def _fit_csv(w, name, fits):
    w.csv(name, [("observable", "-", "statistic"), ("slope", "1", "weighted least squares on logs"),
                 ("slope_stderr", "1", "from per-point stderr"), ("intercept", "1", "log scale"),
                 ("verdict", "-", "fit status")],
          [(f.observable, f.slope, f.slope_stderr, f.intercept, f.verdict) for f in fits], "log-log rate fits")


def _wick(cfg, w, m):
    z, u = cfg.z[0], cfg.u[0]
    params = EnsembleParams(cfg.n, cfg.p, cfg.seed)
    t = run_replicas(params, [z], [u], R=cfg.replicas, workers=cfg.threads)
    w.csv("replicas.csv", [
        ("replica_id", "-", "counter-based stream id"), ("f_re", "1", "f_n(z,u)"), ("f_im", "1", "f_n(z,u)"),
        ("trace_re", "1", "Tr G(z)"), ("trace_im", "1", "Tr G(z)"), ("edges", "count", "|E|")],
        [(rid, t.f[k, 0, 0].real, t.f[k, 0, 0].imag, t.trace[k, 0].real, t.trace[k, 0].imag, t.edges[k])
         for k, rid in enumerate(t.replica_ids)], "per-replica observables")
    rows = []
    for fam in ("M", "M*"):
        for order in cfg.wick_orders:
            try:
                r = wick_check_common(t, order, z, u if fam == "M" else None, family=fam)
            except InsufficientReplicasError as exc:
                m.add_check(f"Wick {fam} m={order}", False, str(exc))
                rows.append((fam, order, "", "", "", "", "", "", "insufficient replicas"))
                continue
            m.add_check(f"Wick {fam} m={order}", r.passed,
                        f"residual {abs(r.residual):.3e} vs {r.n_sigma:g} x {r.stderr:.3e}")
            rows.append((fam, order, r.moment.real, r.moment.imag, r.prediction.real, r.prediction.imag,
                         abs(r.residual), r.stderr, "pass" if r.passed else "fail"))
        try:
            m2 = estimate_moment_f(t, 2, (z, u)) if fam == "M" else estimate_moment_trace(t, 2, z)
            rows.append((fam, 2, m2.value.real, m2.value.imag, "", "", "", m2.stderr, "estimate"))
        except InsufficientReplicasError:
            pass
    m.notes.append("moments are centered with the sample mean; the plug-in bias is O(1/R)")
    w.csv("wick.csv", [
        ("family", "-", "M (f_n) or M* (Tr G)"), ("m", "1", "moment order"),
        ("moment_re", "1", "sample-mean centered moment"), ("moment_im", "1", "sample-mean centered moment"),
        ("pairing_re", "1", "sum of M_2 x M_{m-2}"), ("pairing_im", "1", "sum of M_2 x M_{m-2}"),
        ("residual", "1", "|moment - pairing|"), ("stderr", "1", "grouped jackknife of the residual"),
        ("verdict", "-", "pass/fail/estimate")], rows, "Wick relation checks")


def _clt(cfg, w, m):
    params = EnsembleParams(cfg.n, cfg.p, cfg.seed)
    rows = []
    for text in cfg.phi:
        phi = parse_test_function(text)
        try:
            r = clt_test(phi, params, cfg.replicas, workers=cfg.threads)
        except ValueError as exc:
            m.add_check(f"CLT {text}", False, str(exc))
            continue
        if r.degenerate:
            m.add_check(f"CLT {text}", True, "degenerate: statistic is constant")
            rows.append((text, r.n, r.R, "true", "", "", "", "", "", "", ""))
            continue
        m.add_check(f"CLT KS {text}", r.ks_passed, f"D={r.ks_distance:.4f} p={r.ks_pvalue:.3g}")
        m.add_check(f"CLT skew {text}", r.skew_ok, f"skew={r.skewness:.4f}")
        oracle = ""
        if phi.monomial_power == 2:
            oracle = binomial_variance_lambda2(cfg.n, cfg.p)
            m.add_check(f"CLT variance oracle {text}", abs(r.variance.value.real - oracle) <= 3 * r.variance.stderr,
                        f"{r.variance.value.real:.5f} +- {r.variance.stderr:.5f} vs {oracle:.5f}")
        rows.append((text, r.n, r.R, "false", r.skewness, r.excess_kurtosis, r.ks_distance, r.ks_pvalue,
                     r.variance.value.real, r.variance.stderr, oracle))
    w.csv("clt.csv", [
        ("phi", "-", "test function"), ("n", "1", "input"), ("R", "count", "replicas"),
        ("degenerate", "bool", "constant statistic"), ("skewness", "1", "sample"), ("excess_kurtosis", "1", "sample"),
        ("ks_distance", "1", "KS vs N(0,1) after standardization"), ("ks_pvalue", "1", "KS"),
        ("variance", "1", "sample variance of n^{-1/2} N_n[phi]"), ("variance_stderr", "1", "grouped jackknife"),
        ("variance_oracle", "1", "exact binomial variance (lambda^2 only)")], rows, "linear-statistic CLT")


def _covariance(cfg, w, m):
    gc = grid_config(cfg)
    sweep = locate_contraction_threshold(cfg.p, config=gc, target=cfg.m0_target)
    w.csv("contraction_sweep.csv", [("z", "1", "real sweep point"), ("norm", "1", "coupled kernel-norm estimate")],
          list(sweep.table), "kernel-norm sweep locating M0")
    if sweep.m0 is None:
        m.add_check("locate M0", False, "no sweep point reached the target norm")
        return
    m.add_check("locate M0", True, f"M0 = {sweep.m0:g}")
    params = EnsembleParams(cfg.n, cfg.p, cfg.seed)
    rep = covariance_crossval(params, sweep.m0, sweep.m0, cfg.u, cfg.u2, cfg.outer_replicas, cfg.inner_replicas,
                              cfg.replicas, config=gc, m0=sweep.m0, workers=cfg.threads)
    rows = []
    for r in rep.rows:
        m.add_check(f"covariance crossval u1={r.u1:g}", r.passed,
                    f"|diff| {r.discrepancy:.3e} vs 3 x {r.combined_stderr:.3e}")
        rows.append((r.u1, cfg.u2, sweep.m0, r.fredholm.real, r.fredholm.imag, r.fredholm_stderr,
                     r.direct.real, r.direct.imag, r.direct_stderr, r.v_term.real, r.discrepancy, r.passed))
    w.csv("covariance.csv", [
        ("u1", "1", "input"), ("u2", "1", "input"), ("z", "1", "z1 = z2 = M0"),
        ("fredholm_re", "1", "(I - pK)^{-1} V_n, Nystrom at u1"), ("fredholm_im", "1", "same"),
        ("fredholm_stderr", "1", "spread over outer cavity samples"),
        ("direct_re", "1", "n Cov(f_n(z,u1), f_n(z,u2))"), ("direct_im", "1", "same"),
        ("direct_stderr", "1", "grouped jackknife"), ("v_re", "1", "mean conditional covariance V_n"),
        ("discrepancy", "1", "|fredholm - direct|"), ("passed", "bool", "within 3 combined stderr")],
        rows, "Fredholm vs direct second moment")


MODES = {
    "solve-limit": _solve_limit, "identities": _identities, "lln": _lln, "variance": _variance,
    "wick": _wick, "clt": _clt, "covariance": _covariance,
}


def run_experiment(cfg: ExperimentConfig) -> tuple[int, RunManifest]:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    m = RunManifest(cfg.mode, {"text": emit_config(cfg)}, cfg.seed,
                    replicas={"replicas": cfg.replicas, "outer": cfg.outer_replicas, "inner": cfg.inner_replicas})
    w = Writer(out, m)
    (out / "config.ini").write_text(emit_config(cfg))
    m.add_output("config.ini", "effective configuration")
    MODES[cfg.mode](cfg, w, m)
    m.add_output("manifest.json", "this manifest")
    m.write(out / "manifest.json")
    return (EXIT_OK if m.all_passed and m.checks else EXIT_FAIL), m
