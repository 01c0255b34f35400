"""Exact-identity suite: algebraic identities and bounds that hold per realization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..ensemble import EnsembleParams, sample_adjacency
from ..limit.bessel import bessel_J1, bessel_J1_tilde
from ..limit.fixed_point import solve_fixed_point
from ..limit.identities import laplace_identity_residual
from ..limit.kernel import build_kernel
from ..observables import f_n_eval
from ..resolvent import (
    bound_report,
    cavity_inequality_ratio,
    cavity_pair,
    cavity_reconstruct,
    eigendecompose,
    resolvent,
    stieltjes_empirical,
)

BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    worst: float
    tol: float
    count: int

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)


def _random_instances(rng: np.random.Generator, count: int, n_max: int = 64):
    for k in range(count):
        n = int(rng.integers(2, n_max + 1))
        p = float(rng.uniform(0.5, min(4.0, n)))
        z = complex(rng.uniform(0.2, 5.0), rng.uniform(-3.0, 3.0))
        s = sample_adjacency(EnsembleParams(n, p, int(rng.integers(2**63))), k)
        yield s, z


def tilde_relation(zeta) -> complex:
    """-i sqrt(zeta) J1(2i sqrt(zeta)); equals tilde-J1(zeta) by the series."""
    r = np.sqrt(complex(zeta))
    return complex(-1j * r * bessel_J1(2j * r))


def run_identity_suite(seed: int = 0, instances: int = 100, laplace_cases: int = 50) -> list[IdentityCheck]:
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(
        ["stieltjes", "cavity_reconstruct", "resolvent_residual", "diag_bound", "row_bound",
         "re_diag_nonneg", "f_n_modulus", "cavity_inequality", "re_Z_ge_re_z"], 0.0)
    for s, z in _random_instances(rng, instances):
        spec = eigendecompose(s, keep_vectors=False)
        sl = resolvent(s, z, want_full=True, method="dense")
        worst["stieltjes"] = max(worst["stieltjes"], abs(sl.trace / s.n - 1j * stieltjes_empirical(spec, -1j * z)))
        h = z * np.eye(s.n) - 1j * s.dense()
        worst["resolvent_residual"] = max(worst["resolvent_residual"], float(np.max(np.abs(h @ sl.full - np.eye(s.n)))))
        rep = bound_report(sl)
        worst["diag_bound"] = max(worst["diag_bound"], rep["diag_ratio"] - 1.0)
        worst["row_bound"] = max(worst["row_bound"], rep["row_ratio"] - 1.0)
        worst["re_diag_nonneg"] = max(worst["re_diag_nonneg"], -rep["min_re_diag"])
        fu = f_n_eval(sl, rng.uniform(0, 10, size=8))
        worst["f_n_modulus"] = max(worst["f_n_modulus"], float(np.max(np.abs(fu))) - 1.0)
        pair = cavity_pair(s, z, method="dense")
        rec = cavity_reconstruct(pair)
        worst["cavity_reconstruct"] = max(worst["cavity_reconstruct"], float(np.max(np.abs(rec.full - pair.slice.full))))
        worst["cavity_inequality"] = max(worst["cavity_inequality"], cavity_inequality_ratio(pair) - 1.0)
        worst["re_Z_ge_re_z"] = max(worst["re_Z_ge_re_z"], z.real - pair.Z_form.real)
    tols = {"stieltjes": 1e-12, "cavity_reconstruct": 1e-9, "resolvent_residual": 1e-10}
    checks = [IdentityCheck(k, float(v), tols.get(k, BOUND_SLACK), instances) for k, v in worst.items()]

    lap = bes = 0.0
    for _ in range(laplace_cases):
        R = complex(rng.uniform(0.2, 5.0), rng.uniform(-5.0, 5.0))
        r = laplace_identity_residual(R, float(rng.uniform(0, 10)), int(rng.integers(1, 7)))
        lap, bes = max(lap, r.laplace), max(bes, r.bessel)
    checks += [IdentityCheck("laplace_identity", lap, 1e-8, laplace_cases),
               IdentityCheck("bessel_identity", bes, 1e-8, laplace_cases)]

    zetas = [complex(*xy) for xy in rng.uniform(-4, 4, size=(200, 2)) if abs(complex(*xy)) <= 4]
    rel = max(abs(bessel_J1_tilde(t) - tilde_relation(t)) / max(1.0, abs(bessel_J1_tilde(t))) for t in zetas)
    checks.append(IdentityCheck("tilde_J1_relation", float(rel), 1e-10, len(zetas)))

    kb = 0.0
    for z, p in [(3.0, 0.0), (3.0, 2.0), (4.0 + 1.0j, 2.0), (6.5, 2.0)]:
        kb = max(kb, build_kernel(z, solve_fixed_point(z, p)).bound_ratio - 1.0)
    checks.append(IdentityCheck("kernel_bound", kb, BOUND_SLACK, 4))
    return checks
