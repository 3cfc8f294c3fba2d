#!/usr/bin/env python3
"""
Gaussian random-field simulation and the deterministic test function f.

Random streams are derived from a master seed plus integer keys through
numpy's SeedSequence, so replicate (experiment, size, r) gets the same draws
no matter which worker runs it or in which order.
"""

import logging
from typing import Iterable

import numpy as np

from covariance import CorrelationSystem, CovarianceSpec
from dataset import SeedLike, SpatialDataset, make_rng

logger = logging.getLogger(__name__)


def derive_seed(master_seed: int, *keys: int) -> np.random.SeedSequence:
    """Independent stream for (master_seed, key1, key2, ...)."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))


def derive_rng(master_seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *keys))


def simulate_gp(spec: CovarianceSpec, beta: float, positions, seed: SeedLike) -> SpatialDataset:
    """
    One exact draw of the field at `positions`.

    z = beta + L eps with L L' = sigma2 * R (nugget included) and eps ~ N(0, I).

    Args:
        spec: covariance model
        beta: field mean
        positions: (n, 2) pairwise-distinct positions
        seed: int, SeedSequence or Generator

    Raises:
        SingularSystemError: covariance not positive definite
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    rng = make_rng(seed)
    if n > 2000:
        logger.info("factorizing a %d x %d covariance for simulation", n, n)
    system = CorrelationSystem(spec, positions, keep_matrix=False)
    eps = rng.standard_normal(n)
    values = beta + np.sqrt(spec.sigma2) * (system.lower @ eps)
    return SpatialDataset(positions, values)


def simulate_replicates(spec: CovarianceSpec, beta: float, positions, seeds: Iterable[SeedLike]) -> np.ndarray:
    """
    Several independent draws sharing one factorization.

    Returns:
        np.ndarray: values of shape (len(seeds), n)
    """
    positions = np.asarray(positions, dtype=float)
    system = CorrelationSystem(spec, positions, keep_matrix=False)
    scale = np.sqrt(spec.sigma2)
    rows = [beta + scale * (system.lower @ make_rng(s).standard_normal(positions.shape[0])) for s in seeds]
    return np.array(rows)


def eval_f(x, y):
    """
    Smooth two-dimensional test function, studied on [-1, 1]^2.

    f(0, 0) = 3.2
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = (
        np.exp(x) / 5.0
        - y / 5.0
        + y**6 / 3.0
        + 4.0 * y**4
        - 4.0 * y**2
        + 7.0 * x**2 / 10.0
        + x**4
        + 3.0 / (4.0 * x**2 + 4.0 * y**2 + 1.0)
    )
    return float(out) if out.ndim == 0 else out


def function_dataset(positions) -> SpatialDataset:
    positions = np.asarray(positions, dtype=float)
    return SpatialDataset(positions, eval_f(positions[:, 0], positions[:, 1]))
