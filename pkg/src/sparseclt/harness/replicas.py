"""Replica orchestration: per-replica observables, computed in a worker pool and
reduced in replica-id order so the table does not depend on the worker count."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..ensemble import EnsembleParams, sample_adjacency
from ..observables import (
    TestFunction,
    f_n_eval,
    f_n_u_derivative,
    linear_statistic,
    linear_statistic_exact,
    v_J_eval,
)
from ..resolvent import EigensolverError, eigendecompose, resolvent


class ReplicaError(RuntimeError):
    def __init__(self, replica_id: int, cause: BaseException):
        super().__init__(f"replica {replica_id} failed: {cause}")
        self.replica_id = replica_id


@dataclass(frozen=True)
class ReplicaRequest:
    params: EnsembleParams
    z_list: tuple = ()
    u_list: tuple = ()
    phi_list: tuple = ()
    vj: tuple | None = None  # (u, v) for V_J at every z
    derivative_step: float | None = None
    method: str = "auto"
    id_offset: int = 0


@dataclass(frozen=True, eq=False)
class ReplicaTable:
    """Rows are replicas in id order.

    f: (R, nz, nu) f_n(z_i, u_j); trace: (R, nz) Tr G(z_i); linstat: (R, nphi) N_n[phi];
    vj: (R, nz) V_{J,n}; dfdu: (R, nz) d f_n / du at u = 0; edges: (R,) edge counts.
    """

    request: ReplicaRequest
    replica_ids: np.ndarray
    f: np.ndarray
    trace: np.ndarray
    linstat: np.ndarray
    edges: np.ndarray
    vj: np.ndarray | None = None
    dfdu: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def R(self) -> int:
        return len(self.replica_ids)

    @property
    def n(self) -> int:
        return self.request.params.n

    def z_index(self, z) -> int:
        return _index(self.request.z_list, complex(z), "z")

    def u_index(self, u) -> int:
        return _index(self.request.u_list, float(u), "u")

    def f_column(self, z, u) -> np.ndarray:
        return self.f[:, self.z_index(z), self.u_index(u)]

    def trace_column(self, z) -> np.ndarray:
        return self.trace[:, self.z_index(z)]


def _index(values, x, name):
    for k, v in enumerate(values):
        if abs(v - x) <= 1e-12 * max(1.0, abs(x)):
            return k
    raise KeyError(f"{name}={x} is not in the replica table")


def _one_replica(req: ReplicaRequest, rid: int):
    sample = sample_adjacency(req.params, rid)
    nz, nu = len(req.z_list), len(req.u_list)
    f = np.empty((nz, nu), dtype=complex)
    tr = np.empty(nz, dtype=complex)
    vj = np.empty(nz, dtype=complex) if req.vj else None
    dfdu = np.empty(nz, dtype=complex) if req.derivative_step else None
    u = np.asarray(req.u_list, dtype=float)
    for i, z in enumerate(req.z_list):
        sl = resolvent(sample, z, want_full=bool(req.vj), method=req.method)
        f[i] = f_n_eval(sl, u) if nu else f[i]
        tr[i] = sl.trace
        if vj is not None:
            vj[i] = v_J_eval(sl, *req.vj)
        if dfdu is not None:
            dfdu[i] = f_n_u_derivative(sl, req.derivative_step)
    lin = np.empty(len(req.phi_list))
    general = [k for k, phi in enumerate(req.phi_list) if phi.monomial_power is None]
    spec = eigendecompose(sample, keep_vectors=False) if general else None
    for k, phi in enumerate(req.phi_list):
        lin[k] = linear_statistic(spec, phi) if k in general else linear_statistic_exact(sample, phi)
    return f, tr, lin, sample.n_edges, vj, dfdu


def _chunk(args):
    req, ids = args
    out = []
    for rid in ids:
        try:
            out.append(_one_replica(req, rid))
        except (EigensolverError, np.linalg.LinAlgError) as exc:
            raise ReplicaError(rid, exc) from exc
    return out


def run_replicas(params: EnsembleParams, z_list=(), u_list=(), phi_list=(), R: int = 1, workers: int = 1,
                 method: str = "auto", vj: tuple | None = None, derivative_step: float | None = None,
                 id_offset: int = 0, chunk: int = 64) -> ReplicaTable:
    """Evaluate every requested observable on replicas id_offset .. id_offset + R - 1."""
    if R < 1:
        raise ValueError("R must be at least 1")
    for phi in phi_list:
        if not isinstance(phi, TestFunction):
            raise TypeError("phi_list entries must be TestFunction instances")
    req = ReplicaRequest(params, tuple(complex(z) for z in z_list), tuple(float(u) for u in u_list),
                         tuple(phi_list), tuple(vj) if vj else None, derivative_step, method, id_offset)
    ids = np.arange(id_offset, id_offset + R, dtype=np.int64)
    jobs = [(req, ids[a:a + chunk].tolist()) for a in range(0, R, chunk)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk, jobs))  # map preserves submission order
    rows = [r for part in parts for r in part]
    f = np.stack([r[0] for r in rows])
    tr = np.stack([r[1] for r in rows])
    lin = np.stack([r[2] for r in rows])
    edges = np.array([r[3] for r in rows], dtype=np.int64)
    vjs = np.stack([r[4] for r in rows]) if vj else None
    dd = np.stack([r[5] for r in rows]) if derivative_step else None
    return ReplicaTable(req, ids, f, tr, lin, edges, vjs, dd)
