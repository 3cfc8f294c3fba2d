#!/usr/bin/env python3
"""
Leave-one-out cross-validation and the kriging validation criteria.

Criteria:
    Q2        1 - sum (z_i - zhat_-i)^2 / sum (z_i - mean z)^2
    PVA       |log mean((z_i - zhat_-i)^2 / s2_-i)|
    PIA       |log mean((z_i - zhat_-i)^2 / (q0.31_-i - q0.69_-i)^2)|
    alpha-CI  empirical coverage of level-alpha intervals against alpha
    MSEalpha  mean squared distance of that curve to the diagonal
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats

from bayesian_kriging import (
    DEFAULT_GRID_SIZE,
    DEFAULT_M,
    PredictiveDistribution,
    PriorSpec,
    loo_draws,
    phi_posterior,
    predict_bayes,
    sample_posterior,
    summarize_posterior,
)
from covariance import family_tag
from dataset import SpatialDataset
from errors import DegenerateDataError, FoldError, KrigingError, UndefinedCriterionError
from ordinary_kriging import fit_mle, loo_predictions, predict
from simulate import derive_seed

logger = logging.getLogger(__name__)

METHODS = ("ordinary", "bayesian")
LOO_MODES = ("fixed", "refit")
PIA_QUANTILES = (0.31, 0.69)


def default_alpha_levels(count: int = 99) -> np.ndarray:
    """`count` equally spaced levels strictly inside (0, 1): 0.01 .. 0.99 for 99."""
    return np.arange(1, count + 1) / (count + 1.0)


def normalize_method(method: str) -> str:
    aliases = {"ok": "ordinary", "ordinary": "ordinary", "bayes": "bayesian", "bayesian": "bayesian"}
    if method not in aliases:
        raise KrigingError(f"unknown kriging method '{method}' (expected ok or bayes)")
    return aliases[method]


@dataclass(frozen=True)
class ValidationConfig:
    """Everything that determines a cross-validation run."""

    family: str = "matern"
    nu: float = 0.5
    nugget_ratio: float = 0.0
    loo_mode: str = "fixed"
    M: int = DEFAULT_M
    seed: int = 0
    phi_grid_size: int = DEFAULT_GRID_SIZE
    phi_low_fraction: float = 0.01
    prior: Optional[PriorSpec] = None
    alpha_levels: tuple = field(default_factory=lambda: tuple(default_alpha_levels().tolist()))
    mle_bracket: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if self.loo_mode not in LOO_MODES:
            raise KrigingError(f"leave-one-out mode must be one of {LOO_MODES}, got '{self.loo_mode}'")
        levels = np.asarray(self.alpha_levels, dtype=float)
        if levels.size == 0 or np.any(levels <= 0) or np.any(levels >= 1):
            raise KrigingError("alpha levels must be a non-empty subset of (0, 1)")
        object.__setattr__(self, "alpha_levels", tuple(levels.tolist()))

    @property
    def covariance(self) -> str:
        return family_tag(self.family, self.nu)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["prior"] = self.prior.to_dict() if self.prior is not None else None
        out["alpha_levels"] = list(self.alpha_levels)
        out["covariance"] = self.covariance
        return out


class GaussianLaw:
    """Closed-form Gaussian held-out law."""

    __slots__ = ("mean", "variance")

    def __init__(self, mean: float, variance: float):
        self.mean = float(mean)
        self.variance = float(variance)

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.variance))

    def quantile(self, q):
        return self.mean + self.sd * stats.norm.ppf(q)

    def interval(self, alpha: float):
        half = self.sd * stats.norm.ppf(0.5 * (1.0 + alpha))
        return self.mean - half, self.mean + half


@dataclass(frozen=True)
class LooRecord:
    """Held-out prediction for observation `index`."""

    index: int
    observed: float
    mean: float
    variance: float
    law: Union[GaussianLaw, PredictiveDistribution]

    def quantile(self, q):
        return self.law.quantile(q)


@dataclass
class LooResult:
    records: List[LooRecord]
    parameters: dict


def _ordinary_records(ds: SpatialDataset, config: ValidationConfig) -> LooResult:
    if config.loo_mode == "fixed":
        model = fit_mle(ds, config.family, config.nu, config.nugget_ratio, bracket=config.mle_bracket)
        means, variances = loo_predictions(model)
        parameters = model.to_dict()
    else:
        means, variances = np.empty(ds.n), np.empty(ds.n)
        for i in range(ds.n):
            try:
                model = fit_mle(ds.drop(i), config.family, config.nu, config.nugget_ratio, bracket=config.mle_bracket)
                means[i], variances[i] = predict(model, ds.positions[i])
            except KrigingError as e:
                raise FoldError(i, e) from e
        parameters = {"method": "ok", "covariance": config.covariance, "loo_mode": "refit"}
    records = [
        LooRecord(i, float(ds.values[i]), float(means[i]), float(variances[i]), GaussianLaw(means[i], variances[i]))
        for i in range(ds.n)
    ]
    return LooResult(records, parameters)


def _bayesian_records(ds: SpatialDataset, config: ValidationConfig) -> LooResult:
    def posterior_for(data):
        return phi_posterior(
            data,
            config.family,
            config.nu,
            config.nugget_ratio,
            config.prior,
            grid_size=config.phi_grid_size,
            low_fraction=config.phi_low_fraction,
        )

    if config.loo_mode == "fixed":
        posterior = posterior_for(ds)
        rng = np.random.default_rng(derive_seed(config.seed, 0))
        samples = sample_posterior(posterior, config.M, rng)
        laws = loo_draws(posterior, samples, rng)
        parameters = {
            "method": "bayes",
            "covariance": config.covariance,
            "M": config.M,
            **posterior.to_dict(),
            **summarize_posterior(posterior, samples).to_dict(),
        }
    else:
        laws = []
        for i in range(ds.n):
            try:
                posterior = posterior_for(ds.drop(i))
                laws.append(predict_bayes(posterior, ds.positions[i : i + 1], config.M, derive_seed(config.seed, 1, i))[0])
            except KrigingError as e:
                raise FoldError(i, e) from e
        parameters = {"method": "bayes", "covariance": config.covariance, "M": config.M, "loo_mode": "refit"}
    records = [LooRecord(i, float(ds.values[i]), law.mean, law.variance, law) for i, law in enumerate(laws)]
    return LooResult(records, parameters)


def loo_result(ds: SpatialDataset, method: str, config: ValidationConfig) -> LooResult:
    method = normalize_method(method)
    if ds.n < 4:
        raise KrigingError(f"leave-one-out validation needs n >= 4 observations, got {ds.n}")
    if method == "ordinary":
        return _ordinary_records(ds, config)
    return _bayesian_records(ds, config)


def loo_records(ds: SpatialDataset, method: str, config: ValidationConfig) -> List[LooRecord]:
    """
    Held-out predictions for every observation.

    In "fixed" mode the parameters (or posterior) come from the full dataset and
    only the prediction system changes per fold; "refit" reruns the whole fit on
    each n - 1 subset.
    """
    return loo_result(ds, method, config).records


def _errors(records: Sequence[LooRecord]) -> np.ndarray:
    return np.array([r.observed - r.mean for r in records])


def q2(records: Sequence[LooRecord], ds: SpatialDataset) -> float:
    """Predictivity coefficient; the reference mean is that of the full dataset."""
    z = ds.values
    denominator = float(np.sum((z - z.mean()) ** 2))
    if denominator == 0:
        raise DegenerateDataError("Q2 undefined: all observed values are equal")
    return 1.0 - float(np.sum(_errors(records) ** 2)) / denominator


def pva(records: Sequence[LooRecord]) -> float:
    """Predictive variance adequacy."""
    variances = np.array([r.variance for r in records])
    if np.any(variances <= 0):
        raise UndefinedCriterionError(f"PVA undefined: zero prediction variance at fold {int(np.argmin(variances))}")
    return float(abs(np.log(np.mean(_errors(records) ** 2 / variances))))


def pia(records: Sequence[LooRecord]) -> float:
    """Predictive interval adequacy, built on the 0.31-0.69 interquantile width."""
    low, high = PIA_QUANTILES
    widths = np.array([r.quantile(high) - r.quantile(low) for r in records])
    if np.any(widths <= 0):
        raise UndefinedCriterionError(f"PIA undefined: zero interquantile width at fold {int(np.argmin(widths))}")
    return float(abs(np.log(np.mean(_errors(records) ** 2 / widths**2))))


def alpha_curve(records: Sequence[LooRecord], levels=None) -> List[Tuple[float, float]]:
    """
    Coverage Delta_alpha of the closed level-alpha intervals.

    Gaussian laws use mean +- sd * q_{(1+alpha)/2}; sampled laws use the
    (1-alpha)/2 and (1+alpha)/2 empirical quantiles.
    """
    levels = default_alpha_levels() if levels is None else np.asarray(levels, dtype=float)
    observed = np.array([r.observed for r in records])
    curve = []
    for alpha in levels:
        bounds = np.array([r.law.interval(alpha) for r in records])
        covered = (bounds[:, 0] <= observed) & (observed <= bounds[:, 1])
        curve.append((float(alpha), float(covered.mean())))
    return curve


def mse_alpha(curve: Sequence[Tuple[float, float]]) -> float:
    """Mean squared deviation of the alpha-CI curve from the diagonal."""
    if len(curve) == 0:
        raise UndefinedCriterionError("MSEalpha needs at least one level")
    pairs = np.asarray(curve, dtype=float)
    return float(np.mean((pairs[:, 1] - pairs[:, 0]) ** 2))


@dataclass
class ValidationReport:
    """The four scalar criteria, the alpha-CI curve and the run configuration."""

    q2: float
    pva: float
    pia: float
    mse_alpha: float
    alpha_curve: List[Tuple[float, float]]
    method: str
    covariance: str
    n: int
    config: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)

    def scalars(self) -> dict:
        return {"q2": self.q2, "pva": self.pva, "pia": self.pia, "mse_alpha": self.mse_alpha}

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "covariance": self.covariance,
            "n": self.n,
            **self.scalars(),
            "alpha_levels": len(self.alpha_curve),
            "alpha_curve": [{"alpha": a, "delta": d} for a, d in self.alpha_curve],
            "config": self.config,
            "parameters": self.parameters,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default)

    def write_json(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n", encoding="utf-8")
        return path

    def curve_frame(self) -> pd.DataFrame:
        curve = pd.DataFrame(self.alpha_curve, columns=["alpha", "delta"])
        curve.insert(0, "record", "curve")
        scalars = pd.DataFrame([{"record": "scalars", **self.scalars()}])
        return pd.concat([curve, scalars], ignore_index=True)[["record", "alpha", "delta", "q2", "pva", "pia", "mse_alpha"]]

    def write_curve_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.curve_frame().to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
        return path


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def validate(ds: SpatialDataset, method: str, config: ValidationConfig) -> ValidationReport:
    """Cross-validate `method` on `ds` and compute every criterion."""
    method = normalize_method(method)
    if np.ptp(ds.values) == 0:
        raise DegenerateDataError("all observed values are equal")
    result = loo_result(ds, method, config)
    curve = alpha_curve(result.records, config.alpha_levels)
    report = ValidationReport(
        q2=q2(result.records, ds),
        pva=pva(result.records),
        pia=pia(result.records),
        mse_alpha=mse_alpha(curve),
        alpha_curve=curve,
        method=method,
        covariance=config.covariance,
        n=ds.n,
        config=config.to_dict(),
        parameters=result.parameters,
    )
    logger.debug("%s %s n=%d: Q2=%.4f PVA=%.4f PIA=%.4f MSEa=%.5f", method, report.covariance, ds.n, report.q2, report.pva, report.pia, report.mse_alpha)
    return report
