"""Simulation and numerical limits for resolvent statistics of sparse random graphs."""

from .ensemble import (
    AdjacencySample,
    EnsembleParams,
    cavity_delete,
    first_row_vector,
    read_edge_list,
    sample_adjacency,
    write_edge_list,
)
from .estimates import InsufficientReplicasError, MomentEstimate
from .resolvent import (
    CavityPair,
    EigensolverError,
    ResolventSlice,
    SpectralData,
    cavity_pair,
    cavity_reconstruct,
    eigendecompose,
    quadratic_form,
    resolvent,
)
