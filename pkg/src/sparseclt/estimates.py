"""Monte Carlo estimates with grouped (delete-a-group) jackknife errors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_GROUPS = 100


class InsufficientReplicasError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    """value +- stderr from ``replicas`` samples.

    ``replicates`` holds the delete-one-group estimates; estimates built from
    the same table with the same grouping can be combined replicate by
    replicate, which propagates their correlation.
    """

    value: complex
    stderr: float
    replicas: int
    descriptor: tuple = ()
    replicates: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.stderr >= 0:
            raise ValueError("stderr must be nonnegative")
        if self.stderr > 0 and self.replicas < 2:
            raise ValueError("a positive stderr needs at least two replicas")

    @property
    def groups(self) -> int:
        return 0 if self.replicates is None else len(self.replicates)

    def z_score(self, target: complex = 0.0) -> float:
        d = abs(complex(self.value) - complex(target))
        if self.stderr == 0:
            return 0.0 if d == 0 else float("inf")
        return d / self.stderr


def group_slices(count: int, groups: int = DEFAULT_GROUPS) -> list[slice]:
    """Contiguous near-equal blocks in replica order."""
    g = max(1, min(groups, count))
    bounds = np.linspace(0, count, g + 1).round().astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def jackknife_stderr(full, replicates) -> float:
    reps = np.asarray(replicates)
    g = len(reps)
    if g < 2:
        return 0.0
    dev = reps - reps.mean(axis=0)
    se = np.sqrt((g - 1) / g * np.sum(np.abs(dev) ** 2, axis=0))
    return float(se) if np.ndim(se) == 0 else se


def grouped_jackknife(data: np.ndarray, stat: Callable[[np.ndarray], complex],
                      groups: int = DEFAULT_GROUPS):
    """Apply ``stat`` to all rows of ``data`` and to each delete-one-group subset.

    Returns (full estimate, stderr, replicate array). Uses R groups (plain
    leave-one-out) when R <= ``groups``.
    """
    data = np.asarray(data)
    rows = len(data)
    full = stat(data)
    sl = group_slices(rows, groups)
    if len(sl) < 2:
        return full, 0.0, np.asarray([full])
    mask = np.ones(rows, dtype=bool)
    reps = []
    for s in sl:
        mask[s] = False
        reps.append(stat(data[mask]))
        mask[s] = True
    reps = np.asarray(reps)
    return full, jackknife_stderr(full, reps), reps


def mean_estimate(values, descriptor: tuple = ("mean",), groups: int = DEFAULT_GROUPS) -> MomentEstimate:
    v = np.asarray(values)
    if len(v) < 1:
        raise InsufficientReplicasError("no replicas")
    full, se, reps = grouped_jackknife(v, lambda x: complex(np.mean(x)), groups)
    return MomentEstimate(full, float(se), len(v), descriptor, reps)
