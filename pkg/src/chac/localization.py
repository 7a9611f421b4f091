"""Localization by sup-norm level: classification, cutoff consistency, and
coverage estimation.

A realization belongs to level n when its whole path stays below n in sup
norm; on such realizations the cutoff never activates, so solving with any
higher cutoff must reproduce the path bit for bit.  Membership uses the
computed path as a grid-resolved proxy for the true solution.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import solver
from .model import CutoffSpec, ModelParams
from .noise import NoiseRealization
from .solver import FieldPath
from .spectral import SpectralBasis


@dataclass
class LocalizationRecord:
    """Sup-norm level membership of one realization."""

    replicate_id: int
    sup_norm: float
    levels: dict


@dataclass
class ConsistencyResult:
    """Outcome of one cutoff-consistency comparison."""

    skipped: bool
    identical: bool
    max_deviation: float
    sup_norms: tuple


def classify(path: FieldPath, levels) -> LocalizationRecord:
    """Membership flags sup|u| < n for each tested level n."""
    sup = path.sup_norm
    if not np.isfinite(sup):
        raise ValueError("path must be finite")
    return LocalizationRecord(
        replicate_id=path.noise.replicate_id,
        sup_norm=sup,
        levels={float(n): bool(sup < n) for n in levels},
    )


def consistency_check(u0_field, noise: NoiseRealization, params: ModelParams,
                      basis: SpectralBasis, n: float, n_prime: float) -> ConsistencyResult:
    """Solve the same noise with cutoffs n and n' > n and compare.

    When both paths stay below n the cutoff never activates and the paths
    must be bit-identical; otherwise the comparison is vacuous for this
    realization and is reported as skipped.
    """
    if n_prime <= n:
        raise ValueError("n_prime must exceed n")
    path_lo = solver.solve_path(u0_field, noise, replace(params, cutoff=CutoffSpec(n)), basis)
    path_hi = solver.solve_path(u0_field, noise, replace(params, cutoff=CutoffSpec(n_prime)), basis)
    sups = (path_lo.sup_norm, path_hi.sup_norm)
    if max(sups) >= n:
        return ConsistencyResult(skipped=True, identical=False,
                                 max_deviation=float("nan"), sup_norms=sups)
    dev = float(np.max(np.abs(path_lo.u - path_hi.u)))
    return ConsistencyResult(skipped=False, identical=bool(dev == 0.0),
                             max_deviation=dev, sup_norms=sups)


def coverage_estimate(records, levels) -> dict:
    """Empirical fraction of realizations inside each level."""
    records = list(records)
    if not records:
        raise ValueError("ensemble is empty")
    out = {}
    for n in levels:
        out[float(n)] = float(np.mean([rec.sup_norm < n for rec in records]))
    return out
