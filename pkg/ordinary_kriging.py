#!/usr/bin/env python3
"""
Maximum-likelihood fitting and the ordinary-kriging predictor.

For a fixed range phi the mean and variance have closed-form optima
(generalized least squares for beta, divisor-n residual variance for sigma2),
so the likelihood is maximized by a one-dimensional bounded search over phi
on the profile likelihood. A single start is used.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, stats

from covariance import (
    CorrelationSystem,
    CovarianceSpec,
    correlation_spec,
    cross_correlation,
    distance_range,
)
from dataset import SpatialDataset
from errors import DegenerateDataError, FitError, KrigingError, NumericalError, SingularSystemError

logger = logging.getLogger(__name__)

NEGATIVE_VARIANCE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class ParameterTriple:
    """Mean, variance and range of the stationary field."""

    beta: float
    sigma2: float
    phi: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.beta, self.sigma2, self.phi)):
            raise NumericalError(f"non-finite parameters {self}")
        if self.sigma2 <= 0 or self.phi <= 0:
            raise NumericalError(f"sigma2 and phi must be > 0, got {self}")

    def as_dict(self) -> dict:
        return {"beta": self.beta, "sigma2": self.sigma2, "phi": self.phi}


@dataclass(frozen=True)
class GlsSolution:
    """Generalized least squares pieces for one correlation system."""

    system: CorrelationSystem
    rinv_one: np.ndarray
    rinv_z: np.ndarray
    one_rinv_one: float
    beta: float
    residual_ss: float


def gls(system: CorrelationSystem, values: np.ndarray) -> GlsSolution:
    """beta = (1'R^-1 1)^-1 1'R^-1 z and S2 = (z - beta 1)' R^-1 (z - beta 1)."""
    values = np.asarray(values, dtype=float)
    rinv_one = system.solve(np.ones(system.n))
    rinv_z = system.solve(values)
    a = float(rinv_one.sum())
    beta = float(rinv_z.sum()) / a
    residual_ss = float(values @ rinv_z - beta * beta * a)
    return GlsSolution(system, rinv_one, rinv_z, a, beta, max(residual_ss, 0.0))


def profile_log_likelihood(
    ds: SpatialDataset, family: str, nu: float, nugget_ratio: float, phi: float
) -> Tuple[float, GlsSolution]:
    """
    Gaussian log-likelihood with beta and sigma2 at their optima for this phi.

    Returns:
        (loglik, gls solution); sigma2_hat = residual_ss / n
    """
    system = CorrelationSystem(correlation_spec(family, nu, phi, nugget_ratio), ds.positions)
    sol = gls(system, ds.values)
    n = ds.n
    if sol.residual_ss <= 0:
        raise DegenerateDataError("zero generalized least squares residual")
    sigma2 = sol.residual_ss / n
    loglik = -0.5 * (n * np.log(2.0 * np.pi) + n * np.log(sigma2) + system.log_det() + n)
    return float(loglik), sol


@dataclass(frozen=True)
class OkModel:
    """
    Fitted ordinary-kriging model.

    `spec` carries the fitted phi and sigma2 and the nugget tau2 = ratio * sigma2;
    `system` is the correlation system of `spec` over the training positions.
    """

    spec: CovarianceSpec
    beta: float
    system: CorrelationSystem
    dataset: SpatialDataset
    log_likelihood: Optional[float]
    gls: GlsSolution

    @property
    def parameters(self) -> ParameterTriple:
        return ParameterTriple(self.beta, self.spec.sigma2, self.spec.phi)

    def to_dict(self) -> dict:
        return {
            "method": "ok",
            "family": self.spec.family,
            "nu": self.spec.nu if self.spec.family == "matern" else None,
            "covariance": self.spec.tag,
            "beta": self.beta,
            "sigma2": self.spec.sigma2,
            "phi": self.spec.phi,
            "tau2": self.spec.tau2,
            "log_likelihood": self.log_likelihood,
            "n": self.dataset.n,
        }


def mle_bracket(positions, low_factor: float = 0.5, high_factor: float = 2.0) -> Tuple[float, float]:
    """Range search interval [low_factor * d_min, high_factor * d_max]."""
    d_min, d_max = distance_range(positions)
    return low_factor * d_min, high_factor * d_max


def fit_mle(
    ds: SpatialDataset,
    family: str = "matern",
    nu: float = 0.5,
    nugget_ratio: float = 0.0,
    bracket: Optional[Tuple[float, float]] = None,
    xtol_factor: float = 1e-6,
) -> OkModel:
    """
    Maximum-likelihood estimate of (beta, sigma2, phi).

    Args:
        ds: training data, n >= 3
        family, nu: covariance family and Matérn smoothness (never estimated)
        nugget_ratio: fixed tau2 / sigma2
        bracket: phi search interval; defaults to [d_min / 2, 2 d_max]
        xtol_factor: optimizer tolerance relative to the bracket width

    Raises:
        DegenerateDataError: constant data
        FitError: likelihood non-finite over the whole bracket
    """
    if ds.n < 3:
        raise FitError(f"maximum likelihood needs n >= 3 observations, got {ds.n}")
    if np.ptp(ds.values) == 0:
        raise DegenerateDataError("all observed values are equal")
    low, high = bracket if bracket is not None else mle_bracket(ds.positions)

    def objective(log_phi: float) -> float:
        try:
            loglik, _ = profile_log_likelihood(ds, family, nu, nugget_ratio, float(np.exp(log_phi)))
        except (SingularSystemError, DegenerateDataError):
            return np.inf
        return -loglik if np.isfinite(loglik) else np.inf

    # search in log(phi)
    log_low, log_high = np.log(low), np.log(high)
    result = optimize.minimize_scalar(
        objective,
        bounds=(log_low, log_high),
        method="bounded",
        options={"xatol": xtol_factor * (log_high - log_low)},
    )
    if not np.isfinite(result.fun):
        # every trial range was singular; scan the bracket
        grid = np.linspace(log_low, log_high, 25)
        values = np.array([objective(g) for g in grid])
        if not np.any(np.isfinite(values)):
            raise FitError(f"log-likelihood is not finite anywhere on phi in [{low:.4g}, {high:.4g}]")
        result = optimize.minimize_scalar(
            objective,
            bounds=(grid[max(np.argmin(values) - 1, 0)], grid[min(np.argmin(values) + 1, 24)]),
            method="bounded",
            options={"xatol": xtol_factor * (log_high - log_low)},
        )

    phi = float(np.exp(result.x))
    loglik, sol = profile_log_likelihood(ds, family, nu, nugget_ratio, phi)
    sigma2 = sol.residual_ss / ds.n
    spec = correlation_spec(family, nu, phi).with_parameters(phi, sigma2, nugget_ratio)
    logger.debug("MLE %s n=%d: beta=%.6g sigma2=%.6g phi=%.6g loglik=%.6g", spec.tag, ds.n, sol.beta, sigma2, phi, loglik)
    return OkModel(spec=spec, beta=sol.beta, system=sol.system, dataset=ds, log_likelihood=loglik, gls=sol)


def fit_fixed(ds: SpatialDataset, spec: CovarianceSpec, beta: Optional[float] = None) -> OkModel:
    """
    Model with known covariance parameters; beta by GLS unless given.
    """
    system = CorrelationSystem(spec, ds.positions)
    sol = gls(system, ds.values)
    return OkModel(
        spec=spec,
        beta=sol.beta if beta is None else float(beta),
        system=system,
        dataset=ds,
        log_likelihood=None,
        gls=sol,
    )


def _clamp_variance(normalized: np.ndarray) -> np.ndarray:
    if np.any(normalized < -NEGATIVE_VARIANCE_TOLERANCE):
        raise NumericalError(f"negative prediction variance {normalized.min():.3e} (relative to sigma2)")
    return np.maximum(normalized, 0.0)


def predict_many(model: OkModel, targets) -> Tuple[np.ndarray, np.ndarray]:
    """
    Ordinary-kriging mean and variance at each target.

    mean = (r + 1 (1 - 1'R^-1 r) / (1'R^-1 1))' R^-1 z
    var  = sigma2 (1 - r'R^-1 r + (1 - 1'R^-1 r)^2 / (1'R^-1 1))
    """
    r = model.system.cross(targets)
    rinv_r = model.system.solve(r)
    sol = model.gls
    u = 1.0 - rinv_r.sum(axis=0)
    means = r.T @ sol.rinv_z + u * (sol.rinv_z.sum() / sol.one_rinv_one)
    normalized = 1.0 - np.einsum("ij,ij->j", r, rinv_r) + u * u / sol.one_rinv_one
    return means, model.spec.sigma2 * _clamp_variance(normalized)


def predict(model: OkModel, target) -> Tuple[float, float]:
    """Mean and variance at one target."""
    means, variances = predict_many(model, np.asarray(target, dtype=float).reshape(1, 2))
    return float(means[0]), float(variances[0])


def simple_kriging_terms(system: CorrelationSystem, values, targets) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Pieces of the known-mean predictor at each target.

    Returns (r'R^-1 z, r'R^-1 1, r'R^-1 r), so that for a known beta and sigma2
    mean = beta + rz - beta * r1 and var = sigma2 (1 - rr).
    """
    r = system.cross(targets)
    rinv_r = system.solve(r)
    return rinv_r.T @ np.asarray(values, dtype=float), rinv_r.sum(axis=0), np.einsum("ij,ij->j", r, rinv_r)


def predict_simple(model: OkModel, targets) -> Tuple[np.ndarray, np.ndarray]:
    """Kriging with the model's beta treated as known (simple kriging)."""
    rz, r1, rr = simple_kriging_terms(model.system, model.dataset.values, targets)
    return model.beta + rz - model.beta * r1, model.spec.sigma2 * _clamp_variance(1.0 - rr)


def kriging_weights(model: OkModel, target) -> np.ndarray:
    """Weights lambda with mean = lambda' z; they sum to one."""
    r = cross_correlation(model.spec, model.dataset.positions, target)
    sol = model.gls
    u = 1.0 - float(sol.rinv_one @ r)
    return model.system.solve(r + u / sol.one_rinv_one)


def predict_gaussian_interval(model: OkModel, target, alpha: float) -> Tuple[float, float]:
    """Symmetric Gaussian predictive interval of level alpha."""
    if not 0 < alpha < 1:
        raise KrigingError(f"interval level must lie in (0, 1), got {alpha}")
    mean, variance = predict(model, target)
    half = np.sqrt(variance) * stats.norm.ppf(0.5 * (1.0 + alpha))
    return mean - half, mean + half


def loo_predictions(model: OkModel) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form leave-one-out means and variances with the model's parameters.

    With Q the ordinary-kriging precision R^-1 - R^-1 1 1' R^-1 / (1'R^-1 1):
    mean_i = z_i - (Q z)_i / Q_ii and var_i = sigma2 (1 / Q_ii - tau2 / sigma2).
    Equal to predicting x_i from a model assembled on the other n - 1 points.
    """
    sol = model.gls
    rinv = model.system.inverse()
    q = rinv - np.outer(sol.rinv_one, sol.rinv_one) / sol.one_rinv_one
    diag = np.diag(q)
    if np.any(diag <= 0):
        raise NumericalError("non-positive leave-one-out precision")
    z = model.dataset.values
    means = z - (q @ z) / diag
    normalized = 1.0 / diag - model.spec.nugget_ratio
    return means, model.spec.sigma2 * _clamp_variance(normalized)
