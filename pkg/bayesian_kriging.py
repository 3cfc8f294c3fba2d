#!/usr/bin/env python3
"""
Bayesian kriging by exact composition sampling.

The range phi lives on a discrete support. Given phi, the vague prior
pi(beta, sigma2) ~ 1/sigma2 and the normal / scaled-inverse-chi2 prior are both
conjugate, so the posterior is sampled exactly: phi from its discrete marginal,
sigma2 | phi from a scaled-inverse-chi2, beta | sigma2, phi from a normal. Each
sampled triple then gives one predictive draw from the known-mean kriging
conditional. No Markov chain is involved.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import integrate, special, stats

from covariance import CorrelationSystem, correlation_spec, distance_range
from dataset import SeedLike, SpatialDataset, make_rng
from errors import CovarianceDomainError, DegenerateDataError, KrigingError, PosteriorDegenerateError, SingularSystemError
from ordinary_kriging import ParameterTriple, gls, simple_kriging_terms

logger = logging.getLogger(__name__)

PRIOR_KINDS = ("vague", "normal_scaled_inv_chi2", "fixed")
DEFAULT_M = 1000
DEFAULT_GRID_SIZE = 51


# --- scaled inverse chi-square -------------------------------------------------

def _check_sinvchi2(scale, df):
    if not (np.all(np.asarray(scale) > 0) and np.all(np.asarray(df) > 0)):
        raise CovarianceDomainError(f"scaled-inverse-chi2 needs scale > 0 and df > 0, got ({scale}, {df})")


def scaled_inv_chi2_sample(scale, df, size=None, rng: SeedLike = None) -> np.ndarray:
    """Draws df * scale / X with X ~ chi2(df)."""
    _check_sinvchi2(scale, df)
    rng = make_rng(rng)
    return np.asarray(df) * np.asarray(scale) / rng.chisquare(df, size=size)


def scaled_inv_chi2_logpdf(x, scale: float, df: float) -> np.ndarray:
    """log density; proportional to (1 + df/2) log(1/x) - df scale / (2x)."""
    _check_sinvchi2(scale, df)
    return stats.invgamma.logpdf(x, a=0.5 * df, scale=0.5 * df * scale)


def scaled_inv_chi2_pdf(x, scale: float, df: float) -> np.ndarray:
    return np.exp(scaled_inv_chi2_logpdf(x, scale, df))


def scaled_inv_chi2_mean(scale: float, df: float) -> float:
    return df * scale / (df - 2.0) if df > 2 else np.inf


def scaled_inv_chi2_mode(scale: float, df: float) -> float:
    return df * scale / (df + 2.0)


# --- prior --------------------------------------------------------------------

def default_phi_support(positions, size: int = DEFAULT_GRID_SIZE, low_fraction: float = 0.01) -> np.ndarray:
    """`size` equally spaced ranges from low_fraction * d_max to d_max."""
    _, d_max = distance_range(positions)
    if size == 1:
        return np.array([d_max])
    return np.linspace(low_fraction * d_max, d_max, int(size))


@dataclass(frozen=True)
class PriorSpec:
    """
    Joint prior on (beta, sigma2, phi).

    kind:
        "vague": pi(beta, sigma2) ~ 1 / sigma2
        "normal_scaled_inv_chi2": sigma2 ~ Scaled-Inv-chi2(sigma2_center, sigma2_df),
            beta | sigma2 ~ N(beta_center, sigma2 / beta_scale)
        "fixed": beta = beta_center and sigma2 = sigma2_center exactly
    The range prior is discrete on `phi_support` with `phi_weights` (uniform when
    omitted). A missing support is filled from the data by `resolve`.
    """

    kind: str = "vague"
    phi_support: Optional[tuple] = None
    phi_weights: Optional[tuple] = None
    beta_center: Optional[float] = None
    sigma2_center: Optional[float] = None
    sigma2_df: Optional[float] = None
    beta_scale: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise KrigingError(f"unknown prior kind '{self.kind}'")
        if self.phi_support is not None:
            support = np.asarray(self.phi_support, dtype=float)
            if support.ndim != 1 or support.size == 0:
                raise KrigingError("phi support must be a non-empty 1-D sequence")
            if np.any(support <= 0) or np.any(np.diff(support) <= 0):
                raise KrigingError("phi support must be strictly positive and strictly increasing")
            object.__setattr__(self, "phi_support", tuple(support.tolist()))
            weights = np.full(support.size, 1.0 / support.size) if self.phi_weights is None else np.asarray(self.phi_weights, dtype=float)
            if weights.shape != support.shape or np.any(weights < 0) or not np.isfinite(weights).all() or weights.sum() <= 0:
                raise KrigingError("phi weights must be nonnegative, finite, one per support point")
            object.__setattr__(self, "phi_weights", tuple((weights / weights.sum()).tolist()))
        if self.kind == "normal_scaled_inv_chi2":
            for name in ("beta_center", "sigma2_center", "sigma2_df", "beta_scale"):
                if getattr(self, name) is None:
                    raise KrigingError(f"conjugate prior needs {name}")
            if self.sigma2_center <= 0 or self.sigma2_df <= 0 or self.beta_scale <= 0:
                raise KrigingError("sigma2_center, sigma2_df and beta_scale must be > 0")
        if self.kind == "fixed":
            if self.beta_center is None or self.sigma2_center is None or self.sigma2_center <= 0:
                raise KrigingError("fixed prior needs beta_center and sigma2_center > 0")

    @classmethod
    def vague(cls, phi_support=None, phi_weights=None) -> "PriorSpec":
        return cls("vague", phi_support, phi_weights, label="vague")

    @classmethod
    def conjugate(cls, beta_center, sigma2_center, sigma2_df, beta_scale, phi_support=None, phi_weights=None, label="") -> "PriorSpec":
        return cls(
            "normal_scaled_inv_chi2",
            phi_support,
            phi_weights,
            beta_center=float(beta_center),
            sigma2_center=float(sigma2_center),
            sigma2_df=float(sigma2_df),
            beta_scale=float(beta_scale),
            label=label,
        )

    @classmethod
    def fixed(cls, beta, sigma2, phi_support=None, phi_weights=None) -> "PriorSpec":
        return cls("fixed", phi_support, phi_weights, beta_center=float(beta), sigma2_center=float(sigma2), label="fixed")

    def resolve(self, positions, grid_size: int = DEFAULT_GRID_SIZE, low_fraction: float = 0.01) -> "PriorSpec":
        """Fill a missing range support with the default grid for `positions`."""
        if self.phi_support is not None:
            return self
        support = default_phi_support(positions, grid_size, low_fraction)
        return PriorSpec(
            self.kind,
            tuple(support.tolist()),
            None,
            self.beta_center,
            self.sigma2_center,
            self.sigma2_df,
            self.beta_scale,
            self.label,
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "beta_center": self.beta_center,
            "sigma2_center": self.sigma2_center,
            "sigma2_df": self.sigma2_df,
            "beta_scale": self.beta_scale,
            "phi_support": list(self.phi_support) if self.phi_support is not None else None,
            "phi_weights": list(self.phi_weights) if self.phi_weights is not None else None,
        }


def make_appendix_prior(case: int, beta_init: float, sigma2_init: float, n: int, phi_support=None, phi_weights=None) -> PriorSpec:
    """
    The five prior specifications of the prior-sensitivity study.

    1 vague; 2 centred and informative (df n); 3 centres tripled; 4 df n/3;
    5 centres tripled and df n/3. beta | sigma2 ~ N(centre, sigma2 / n) throughout.
    """
    if case == 1:
        return PriorSpec("vague", phi_support, phi_weights, label="case1_vague")
    settings = {
        2: (1.0, float(n), "case2_centred_informative"),
        3: (3.0, float(n), "case3_offcentre_informative"),
        4: (1.0, n / 3.0, "case4_centred_vague"),
        5: (3.0, n / 3.0, "case5_offcentre_vague"),
    }
    if case not in settings:
        raise KrigingError(f"prior case must be 1..5, got {case}")
    factor, df, label = settings[case]
    return PriorSpec.conjugate(factor * beta_init, factor * sigma2_init, df, n, phi_support, phi_weights, label=label)


# --- posterior over the range support ------------------------------------------

@dataclass(frozen=True)
class AtomPosterior:
    """
    Conditional posterior at one support point.

    sigma2 | phi ~ Scaled-Inv-chi2(df, scale) and beta | sigma2, phi ~ N(beta_mean, sigma2 / precision).
    For the fixed prior the conditionals are point masses (df is inf).
    """

    phi: float
    system: Optional[CorrelationSystem]
    log_weight: float
    beta_mean: float
    precision: float
    df: float
    scale: float
    gls_beta: float = np.nan


def _posterior_hypparams(prior: PriorSpec, n: int, gls_beta: float, a: float, residual_ss: float):
    """(beta_mean, precision, df, df * scale) after seeing the data at one phi."""
    if prior.kind == "vague":
        return gls_beta, a, n - 1.0, residual_ss
    m0, k0 = prior.beta_center, prior.beta_scale
    nu0, s0 = prior.sigma2_df, prior.sigma2_center
    precision = a + k0
    beta_mean = (a * gls_beta + k0 * m0) / precision
    df = nu0 + n
    df_scale = nu0 * s0 + residual_ss + a * k0 / precision * (gls_beta - m0) ** 2
    return beta_mean, precision, df, df_scale


def _atom_posterior(ds: SpatialDataset, family, nu, nugget_ratio, prior: PriorSpec, phi: float, log_prior: float) -> AtomPosterior:
    try:
        system = CorrelationSystem(correlation_spec(family, nu, phi, nugget_ratio), ds.positions)
    except SingularSystemError as e:
        logger.warning("dropping phi=%.6g from the support: %s", phi, e)
        return AtomPosterior(phi, None, -np.inf, np.nan, np.nan, np.nan, np.nan)
    sol = gls(system, ds.values)
    n = ds.n
    log_det = system.log_det()
    if prior.kind == "fixed":
        resid = ds.values - prior.beta_center
        quad = float(resid @ system.solve(resid))
        log_weight = log_prior - 0.5 * log_det - 0.5 * quad / prior.sigma2_center
        return AtomPosterior(phi, system, log_weight, prior.beta_center, np.inf, np.inf, prior.sigma2_center, sol.beta)
    beta_mean, precision, df, df_scale = _posterior_hypparams(prior, n, sol.beta, sol.one_rinv_one, sol.residual_ss)
    if df_scale <= 0:
        raise DegenerateDataError("zero residual sum of squares; the data carry no variability")
    log_weight = log_prior - 0.5 * log_det - 0.5 * np.log(precision) - 0.5 * df * np.log(df_scale)
    return AtomPosterior(phi, system, float(log_weight), beta_mean, precision, df, df_scale / df, sol.beta)


@dataclass(frozen=True)
class PhiPosterior:
    """Discrete posterior over the range support plus the per-atom conditionals."""

    dataset: SpatialDataset
    family: str
    nu: float
    nugget_ratio: float
    prior: PriorSpec
    atoms: tuple
    weights: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.array([a.phi for a in self.atoms])

    @property
    def mode_index(self) -> int:
        return int(np.argmax(self.weights))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "nu": self.nu if self.family == "matern" else None,
            "nugget_ratio": self.nugget_ratio,
            "prior": self.prior.kind,
            "phi_support": self.support.tolist(),
            "phi_weights": self.weights.tolist(),
        }


def phi_posterior(
    ds: SpatialDataset,
    family: str = "matern",
    nu: float = 0.5,
    nugget_ratio: float = 0.0,
    prior: Optional[PriorSpec] = None,
    grid_size: int = DEFAULT_GRID_SIZE,
    low_fraction: float = 0.01,
    workers: int = 1,
) -> PhiPosterior:
    """
    Posterior weights over the range support.

    Under the vague prior the weight of phi_g is proportional to
    pi(phi_g) |R|^-1/2 (1'R^-1 1)^-1/2 S2_g^-(n-1)/2.

    Raises:
        PosteriorDegenerateError: every weight underflows
    """
    if ds.n < 3:
        raise KrigingError(f"Bayesian kriging needs n >= 3 observations, got {ds.n}")
    if np.ptp(ds.values) == 0 and (prior is None or prior.kind != "fixed"):
        raise DegenerateDataError("all observed values are equal")
    prior = (prior or PriorSpec.vague()).resolve(ds.positions, grid_size, low_fraction)
    support = np.asarray(prior.phi_support)
    with np.errstate(divide="ignore"):
        log_prior = np.log(np.asarray(prior.phi_weights))

    def one(g: int) -> AtomPosterior:
        if not np.isfinite(log_prior[g]):
            return AtomPosterior(support[g], None, -np.inf, np.nan, np.nan, np.nan, np.nan)
        return _atom_posterior(ds, family, nu, nugget_ratio, prior, float(support[g]), float(log_prior[g]))

    if workers > 1:
        # factorizations release the GIL; results come back in support order
        with ThreadPoolExecutor(max_workers=workers) as pool:
            atoms = tuple(pool.map(one, range(support.size)))
    else:
        atoms = tuple(one(g) for g in range(support.size))

    log_w = np.array([a.log_weight for a in atoms])
    if not np.any(np.isfinite(log_w)):
        raise PosteriorDegenerateError("all posterior weights on the phi support underflow; check the support grid")
    weights = np.exp(log_w - special.logsumexp(log_w))
    weights.setflags(write=False)
    return PhiPosterior(ds, family, nu if family == "matern" else 0.5, nugget_ratio, prior, atoms, weights)


# --- sampling -----------------------------------------------------------------

@dataclass(frozen=True)
class PosteriorSampleSet:
    """M posterior triples with the support index of each phi draw."""

    beta: np.ndarray
    sigma2: np.ndarray
    phi: np.ndarray
    atom: np.ndarray
    weights: np.ndarray
    support: np.ndarray

    @property
    def M(self) -> int:
        return int(self.beta.shape[0])


def sample_posterior(posterior: PhiPosterior, M: int = DEFAULT_M, seed: SeedLike = None) -> PosteriorSampleSet:
    """
    Composition sampling: phi, then sigma2 | phi, then beta | sigma2, phi.

    Deterministic given `seed`.
    """
    if int(M) != M or M < 1:
        raise KrigingError(f"number of posterior draws must be >= 1, got {M}")
    rng = make_rng(seed)
    M = int(M)
    atom = rng.choice(len(posterior.atoms), size=M, p=posterior.weights)
    beta_mean = np.array([a.beta_mean for a in posterior.atoms])[atom]
    precision = np.array([a.precision for a in posterior.atoms])[atom]
    df = np.array([a.df for a in posterior.atoms])[atom]
    scale = np.array([a.scale for a in posterior.atoms])[atom]
    if posterior.prior.kind == "fixed":
        sigma2 = scale.copy()
        beta = beta_mean.copy()
    else:
        sigma2 = df * scale / rng.chisquare(df)
        beta = rng.normal(beta_mean, np.sqrt(sigma2 / precision))
    support = posterior.support
    return PosteriorSampleSet(beta, sigma2, support[atom], atom, np.asarray(posterior.weights), support)


@dataclass(frozen=True)
class PosteriorSummary:
    mean: ParameterTriple
    mode: ParameterTriple

    def to_dict(self) -> dict:
        return {"mean": self.mean.as_dict(), "mode": self.mode.as_dict()}


def summarize_posterior(posterior: PhiPosterior, samples: PosteriorSampleSet) -> PosteriorSummary:
    """
    Posterior mean (sample averages) and posterior mode.

    The mode takes the modal range atom, then the conditional modes of sigma2
    (Scaled-Inv-chi2 mode) and beta given that atom.
    """
    mean = ParameterTriple(float(samples.beta.mean()), float(samples.sigma2.mean()), float(samples.phi.mean()))
    atom = posterior.atoms[posterior.mode_index]
    if posterior.prior.kind == "fixed":
        sigma2_mode = atom.scale
    else:
        sigma2_mode = scaled_inv_chi2_mode(atom.scale, atom.df)
    return PosteriorSummary(mean, ParameterTriple(float(atom.beta_mean), float(sigma2_mode), float(atom.phi)))


# --- predictive distributions ---------------------------------------------------

class PredictiveDistribution:
    """
    Empirical predictive law from M draws.

    variance uses divisor M - 1 (0 for a single draw); quantiles are order
    statistics with linear interpolation between closest ranks.
    """

    __slots__ = ("draws", "mean", "variance")

    def __init__(self, draws):
        draws = np.sort(np.asarray(draws, dtype=float))
        draws.setflags(write=False)
        self.draws = draws
        self.mean = float(draws.mean())
        self.variance = float(draws.var(ddof=1)) if draws.size > 1 else 0.0

    def __getstate__(self):
        return {"draws": self.draws}

    def __setstate__(self, state):
        self.__init__(state["draws"])

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.variance))

    @property
    def M(self) -> int:
        return int(self.draws.size)

    def quantile(self, q):
        out = np.quantile(self.draws, q, method="linear")
        return float(out) if np.ndim(out) == 0 else out

    def interval(self, alpha: float):
        """Equal-tailed credible interval of level alpha."""
        return self.quantile(0.5 * (1.0 - alpha)), self.quantile(0.5 * (1.0 + alpha))


def _draws_by_atom(samples: PosteriorSampleSet):
    for g in np.unique(samples.atom):
        yield int(g), np.flatnonzero(samples.atom == g)


def predict_bayes(
    posterior: PhiPosterior,
    targets,
    M: int = DEFAULT_M,
    seed: SeedLike = None,
    samples: Optional[PosteriorSampleSet] = None,
) -> List[PredictiveDistribution]:
    """
    Monte Carlo predictive distribution at each target.

    For every posterior triple one value is drawn from
    N(beta + r'R^-1 (z - beta 1), sigma2 (1 - r'R^-1 r)).
    """
    rng = make_rng(seed)
    if samples is None:
        samples = sample_posterior(posterior, M, rng)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    m = targets.shape[0]
    draws = np.empty((samples.M, m))
    z = posterior.dataset.values
    for g, idx in _draws_by_atom(samples):
        rz, r1, rr = simple_kriging_terms(posterior.atoms[g].system, z, targets)
        beta = samples.beta[idx, None]
        mean = beta + rz[None, :] - beta * r1[None, :]
        var = samples.sigma2[idx, None] * np.maximum(1.0 - rr, 0.0)[None, :]
        draws[idx] = mean + np.sqrt(var) * rng.standard_normal((idx.size, m))
    return [PredictiveDistribution(draws[:, j]) for j in range(m)]


def loo_draws(posterior: PhiPosterior, samples: PosteriorSampleSet, seed: SeedLike = None) -> List[PredictiveDistribution]:
    """
    Leave-one-out predictive draws with the full-data posterior sample.

    For each triple and each held-out i the known-mean conditional of z_i given
    the other observations is sampled; with P = R^-1 its mean is
    z_i - (P (z - beta 1))_i / P_ii and its variance sigma2 (1 / P_ii - tau2/sigma2).
    """
    rng = make_rng(seed)
    z = posterior.dataset.values
    n = z.size
    draws = np.empty((samples.M, n))
    for g, idx in _draws_by_atom(samples):
        system = posterior.atoms[g].system
        prec = system.inverse()
        diag = np.diag(prec)
        pz = prec @ z
        p1 = prec.sum(axis=1)
        beta = samples.beta[idx, None]
        mean = z[None, :] - (pz[None, :] - beta * p1[None, :]) / diag[None, :]
        var = samples.sigma2[idx, None] * np.maximum(1.0 / diag - posterior.nugget_ratio, 0.0)[None, :]
        draws[idx] = mean + np.sqrt(var) * rng.standard_normal((idx.size, n))
    return [PredictiveDistribution(draws[:, i]) for i in range(n)]


# --- posterior density of the range -------------------------------------------

@dataclass(frozen=True)
class PhiDensity:
    """Kernel density of the range draws, or a point mass when they all agree."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    point_mass: Optional[float] = None

    @property
    def mode(self) -> float:
        if self.point_mass is not None:
            return self.point_mass
        return float(self.grid[int(np.argmax(self.density))])

    def integral(self) -> float:
        if self.point_mass is not None:
            return 1.0
        return float(integrate.trapezoid(self.density, self.grid))


def posterior_phi_density(samples: PosteriorSampleSet, grid_size: int = 512, tail_bandwidths: float = 4.0) -> PhiDensity:
    """
    Gaussian kernel density of the phi draws, Silverman bandwidth.

    The evaluation grid spans the support widened by `tail_bandwidths`
    bandwidths on each side so the curve carries all of its mass.
    """
    phis = np.asarray(samples.phi, dtype=float)
    if np.ptp(phis) == 0:
        return PhiDensity(np.array([phis[0]]), np.array([np.inf]), 0.0, point_mass=float(phis[0]))
    kde = stats.gaussian_kde(phis, bw_method="silverman")
    bandwidth = float(np.sqrt(kde.covariance[0, 0]))
    low = min(samples.support.min(), phis.min()) - tail_bandwidths * bandwidth
    high = max(samples.support.max(), phis.max()) + tail_bandwidths * bandwidth
    grid = np.linspace(low, high, int(grid_size))
    return PhiDensity(grid, kde(grid), bandwidth)
