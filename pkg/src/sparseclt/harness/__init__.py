"""Replica orchestration and statistical verification."""

from .clt import CLTReport, binomial_variance_lambda2, clt_from_values, clt_test
from .crossval import CrossvalReport, CrossvalRow, covariance_crossval, fredholm_pathway
from .manifest import RunManifest
from .moments import (
    WickReport,
    estimate_moment_dfdu,
    estimate_moment_f,
    estimate_moment_trace,
    wick_check,
    wick_check_common,
)
from .replicas import ReplicaError, ReplicaTable, run_replicas
from .scaling import ScalingFit, mean_gap_estimate, scaling_fit, variance_estimate
