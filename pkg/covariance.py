#!/usr/bin/env python3
"""
Correlation kernels and the symmetric positive-definite systems built from them.

Matérn kernels use the sqrt(2*nu) * h / phi scaling and are evaluated through
their closed forms for nu in {1/2, 3/2, 5/2}. The nugget enters only the
diagonal of the correlation matrix, as tau2 / sigma2.
"""

import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist, pdist

from errors import CovarianceDomainError, SingularSystemError

logger = logging.getLogger(__name__)

FAMILIES = ("matern", "gaussian")
MATERN_NUS = (0.5, 1.5, 2.5)
NU_LABELS = {0.5: "1/2", 1.5: "3/2", 2.5: "5/2"}

# Relative pivot threshold below which a factorization counts as singular.
PIVOT_TOLERANCE = 64 * np.finfo(float).eps


def parse_nu(value) -> float:
    """Accept 0.5, '0.5' or '1/2' style smoothness values."""
    if isinstance(value, str) and "/" in value:
        num, den = value.split("/", 1)
        try:
            value = float(num) / float(den)
        except (ValueError, ZeroDivisionError) as e:
            raise CovarianceDomainError(f"cannot parse smoothness '{value}'") from e
    try:
        return float(value)
    except (TypeError, ValueError) as e:
        raise CovarianceDomainError(f"cannot parse smoothness '{value}'") from e


@dataclass(frozen=True)
class CovarianceSpec:
    """
    Stationary isotropic covariance model.

    Args:
        family: "matern" or "gaussian"
        phi: range, > 0
        sigma2: variance, > 0
        tau2: nugget variance, >= 0
        nu: Matérn smoothness in {0.5, 1.5, 2.5}; ignored for the Gaussian family
    """

    family: str = "matern"
    phi: float = 1.0
    sigma2: float = 1.0
    tau2: float = 0.0
    nu: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise CovarianceDomainError(f"unknown covariance family '{self.family}'")
        if self.family == "matern" and self.nu not in MATERN_NUS:
            raise CovarianceDomainError(f"Matérn smoothness must be one of {MATERN_NUS}, got {self.nu}")
        if not (np.isfinite(self.phi) and self.phi > 0):
            raise CovarianceDomainError(f"range phi must be > 0, got {self.phi}")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise CovarianceDomainError(f"variance sigma2 must be > 0, got {self.sigma2}")
        if not (np.isfinite(self.tau2) and self.tau2 >= 0):
            raise CovarianceDomainError(f"nugget tau2 must be >= 0, got {self.tau2}")

    @property
    def nugget_ratio(self) -> float:
        return self.tau2 / self.sigma2

    @property
    def tag(self) -> str:
        if self.family == "gaussian":
            return "gaussian"
        return f"matern_{NU_LABELS[self.nu]}"

    def with_parameters(self, phi: float, sigma2: float, nugget_ratio: float) -> "CovarianceSpec":
        """Same family and smoothness, new range/variance, nugget tied to sigma2."""
        return replace(self, phi=float(phi), sigma2=float(sigma2), tau2=float(nugget_ratio) * float(sigma2))


def correlation_spec(family: str, nu: float, phi: float, nugget_ratio: float = 0.0) -> CovarianceSpec:
    """Unit-variance spec, the form used while the variance is profiled out."""
    return CovarianceSpec(family=family, phi=phi, sigma2=1.0, tau2=nugget_ratio, nu=nu if family == "matern" else 0.5)


def family_tag(family: str, nu: float) -> str:
    return correlation_spec(family, nu, 1.0).tag


def correlation(spec: CovarianceSpec, h) -> np.ndarray:
    """
    Correlation C_phi(h) without nugget, C_phi(0) = 1.

    Args:
        spec: covariance model
        h: scalar or array of nonnegative distances

    Returns:
        Correlations with the shape of `h` (a float for scalar input).
    """
    h = np.array(h, dtype=float)
    if np.any(~np.isfinite(h)) or np.any(h < 0):
        raise CovarianceDomainError("distances must be finite and nonnegative")
    out = _correlation_inplace(spec, h)
    return float(out) if out.ndim == 0 else out


def _correlation_inplace(spec: CovarianceSpec, h: np.ndarray) -> np.ndarray:
    """Overwrite the distance array `h` with correlations."""
    if spec.family == "gaussian":
        h /= spec.phi
        np.square(h, out=h)
        np.negative(h, out=h)
        return np.exp(h, out=h)
    h *= np.sqrt(2.0 * spec.nu) / spec.phi
    if spec.nu == 0.5:
        np.negative(h, out=h)
        return np.exp(h, out=h)
    poly = 1.0 + h if spec.nu == 1.5 else 1.0 + h + h * h / 3.0
    np.negative(h, out=h)
    np.exp(h, out=h)
    h *= poly
    return h


def pairwise_distances(positions) -> np.ndarray:
    """Full symmetric distance matrix."""
    positions = np.asarray(positions, dtype=float)
    return cdist(positions, positions)


def distance_range(positions) -> Tuple[float, float]:
    """Smallest and largest pairwise distance (n >= 2)."""
    d = pdist(np.asarray(positions, dtype=float))
    if d.size == 0:
        raise CovarianceDomainError("distance range needs at least two positions")
    return float(d.min()), float(d.max())


class CorrelationSystem:
    """
    Correlation matrix R and its lower Cholesky factor.

    R[i, j] = C_phi(|x_i - x_j|) off the diagonal and 1 + tau2/sigma2 on it.
    The object is read-only after construction, so concurrent solves are safe.
    """

    def __init__(self, spec: CovarianceSpec, positions, keep_matrix: bool = True):
        self.spec = spec
        self.positions = np.asarray(positions, dtype=float)
        self.n = self.positions.shape[0]
        # (a-b)^2 == (b-a)^2 in IEEE arithmetic, so cdist is bitwise symmetric
        matrix = _correlation_inplace(spec, pairwise_distances(self.positions))
        np.fill_diagonal(matrix, 1.0 + spec.nugget_ratio)
        if keep_matrix:
            matrix.setflags(write=False)
            self.matrix = matrix
            self._lower = self._factorize(matrix, overwrite=False)
        else:
            self.matrix = None
            self._lower = self._factorize(matrix, overwrite=True)

    def _factorize(self, matrix: np.ndarray, overwrite: bool) -> np.ndarray:
        diagonal = float(matrix[0, 0])
        try:
            # matrix.T is the Fortran-ordered view of the same symmetric matrix
            lower = linalg.cholesky(matrix.T, lower=True, overwrite_a=overwrite, check_finite=False)
        except linalg.LinAlgError as e:
            detail = ""
            if not overwrite and self.n <= 2000:
                smallest = float(np.linalg.eigvalsh(matrix)[0])
                detail = f"; smallest eigenvalue {smallest:.3e}"
            raise SingularSystemError(
                f"correlation matrix is not positive definite ({self.spec.tag}, phi={self.spec.phi:.6g}){detail}: {e}",
                pivot=0.0,
            ) from e
        diag = np.diag(lower)
        pivot_index = int(np.argmin(diag))
        pivot = float(diag[pivot_index] ** 2)
        if not np.isfinite(pivot) or pivot <= PIVOT_TOLERANCE * self.n * diagonal:
            raise SingularSystemError(
                f"correlation matrix is numerically singular ({self.spec.tag}, phi={self.spec.phi:.6g}); "
                f"smallest pivot {pivot:.3e} at row {pivot_index}",
                pivot=pivot,
                index=pivot_index,
            )
        lower.setflags(write=False)
        return lower

    @property
    def lower(self) -> np.ndarray:
        return self._lower

    def solve(self, b) -> np.ndarray:
        """R^{-1} b for a vector or a matrix of column vectors."""
        return linalg.cho_solve((self._lower, True), np.asarray(b, dtype=float), check_finite=False)

    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self._lower))))

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.n))

    def cross(self, targets) -> np.ndarray:
        """Cross-correlations to many targets, shape (n, m)."""
        return cross_correlation_matrix(self.spec, self.positions, targets)


def assemble_system(spec: CovarianceSpec, positions) -> CorrelationSystem:
    """
    Build and factorize R for `positions`.

    Raises:
        SingularSystemError: R not numerically positive definite
    """
    return CorrelationSystem(spec, positions)


def cross_correlation(spec: CovarianceSpec, positions, target) -> np.ndarray:
    """r_j = C_phi(|x0 - x_j|); the nugget is never added."""
    target = np.asarray(target, dtype=float).reshape(1, 2)
    return cross_correlation_matrix(spec, positions, target)[:, 0]


def cross_correlation_matrix(spec: CovarianceSpec, positions, targets) -> np.ndarray:
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    return np.atleast_2d(correlation(spec, cdist(np.asarray(positions, dtype=float), targets)))


def parse_covariance(text: str) -> Tuple[str, float]:
    """
    Parse a covariance label into (family, nu).

    Accepts "gaussian", "matern:1/2", "matern_3/2" or "matern:2.5".
    """
    text = str(text).strip().lower()
    if text == "gaussian":
        return "gaussian", 0.5
    for separator in (":", "_"):
        if text.startswith("matern" + separator):
            nu = parse_nu(text[len("matern") + 1 :])
            if nu not in MATERN_NUS:
                raise CovarianceDomainError(f"Matérn smoothness must be one of {MATERN_NUS}, got {nu}")
            return "matern", nu
    raise CovarianceDomainError(f"unknown covariance '{text}' (expected gaussian or matern:<nu>)")
