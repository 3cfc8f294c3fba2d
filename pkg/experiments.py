#!/usr/bin/env python3
"""
Benchmark suites: simulated fields, the deterministic test function, resampled
user data, prior sensitivity, parameter estimation and the range posterior.

Replicates are independent tasks. Each derives its own random stream from
(master seed, suite, size, replicate), and results are merged in task order,
so a run is bit-identical whatever the worker count.
"""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from bayesian_kriging import (
    DEFAULT_GRID_SIZE,
    DEFAULT_M,
    make_appendix_prior,
    phi_posterior,
    posterior_phi_density,
    predict_bayes,
    sample_posterior,
    summarize_posterior,
)
from covariance import CovarianceSpec, family_tag, parse_covariance
from dataset import Rectangle, SpatialDataset, make_grid, sample_uniform, subsample
from errors import ConfigurationError, KrigingError
from ordinary_kriging import fit_mle, predict_many
from simulate import derive_seed, function_dataset, simulate_gp
from validation import METHODS, ValidationConfig, default_alpha_levels, validate

logger = logging.getLogger(__name__)

SUITE_KEYS = {
    "gp": 1,
    "covsel": 2,
    "function": 3,
    "resample": 4,
    "prior-sens": 5,
    "estimation": 6,
    "phi-posterior": 7,
    "map": 8,
}
NEEDS_DATA = ("resample", "map")

CRITERION_COLUMNS = ["experiment", "method", "covariance", "n", "replicate", "criterion", "value", "reason"]
CURVE_COLUMNS = ["experiment", "method", "covariance", "n", "replicate", "alpha", "delta"]
ESTIMATE_COLUMNS = ["experiment", "estimator", "covariance", "n", "replicate", "parameter", "value", "reason"]
DENSITY_COLUMNS = ["experiment", "n", "replicate", "phi", "density", "prior_density"]
CRITERION_GROUP = ("experiment", "method", "covariance", "n", "criterion")
ESTIMATE_GROUP = ("experiment", "estimator", "covariance", "n", "parameter")
FAILED = "failed"


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Resolved settings of one benchmark run.

    `covariances` holds (family, nu) pairs; the Gaussian family gets
    `gaussian_nugget_ratio`, every other family `nugget_ratio`.
    """

    suite: str
    sizes: tuple = ()
    replicates: int = 10
    seed: int = 0
    methods: tuple = METHODS
    covariances: tuple = (("matern", 0.5),)
    M: int = DEFAULT_M
    phi_grid_size: int = DEFAULT_GRID_SIZE
    phi_low_fraction: float = 0.01
    loo_mode: str = "fixed"
    alpha_count: int = 99
    jobs: int = 1
    rect: Rectangle = Rectangle(0.0, 10.0, 0.0, 10.0)
    beta: float = 0.5
    sigma2: float = 0.1
    phi: float = 4.5
    nugget_ratio: float = 0.0
    gaussian_nugget_ratio: float = 1e-6
    grid: int = 12
    parent_grid: int = 129
    init_fit_max: int = 2000
    cases: tuple = (1, 2, 3, 4, 5)
    density_grid: int = 512
    map_size: int = 20
    map_grid: int = 50

    def __post_init__(self):
        if self.suite not in SUITE_KEYS:
            raise ConfigurationError(f"unknown suite '{self.suite}' (expected one of {', '.join(SUITE_KEYS)})")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ConfigurationError(f"replicate count must be >= 1, got {self.replicates}")
        if int(self.jobs) != self.jobs or self.jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {self.jobs}")
        for method in self.methods:
            if method not in METHODS:
                raise ConfigurationError(f"unknown method '{method}'")
        sizes = tuple(int(s) for s in self.sizes)
        if any(s < 1 for s in sizes):
            raise ConfigurationError(f"sizes must be positive, got {sizes}")
        if self.suite in ("gp", "estimation"):
            for s in sizes:
                k = int(round(np.sqrt(s)))
                if k * k != s or k < 2:
                    raise ConfigurationError(f"grid designs need square sizes k*k with k >= 2, got {s}")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "covariances", tuple((f, float(nu)) for f, nu in self.covariances))

    @property
    def key(self) -> int:
        return SUITE_KEYS[self.suite]

    @property
    def true_spec(self) -> CovarianceSpec:
        """Exponential field used by the simulated suites."""
        return CovarianceSpec("matern", self.phi, self.sigma2, self.nugget_ratio * self.sigma2, 0.5)

    def nugget_for(self, family: str) -> float:
        return self.gaussian_nugget_ratio if family == "gaussian" else self.nugget_ratio

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rect"] = self.rect.as_list()
        out["covariances"] = [family_tag(f, nu) for f, nu in self.covariances]
        return out


def build_experiment_config(suite: str, settings: dict, **overrides) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a flat settings mapping (config file layers)
    plus explicit overrides; None overrides are ignored.

    Raises:
        ConfigurationError: unknown keys or invalid values
    """
    merged = {**settings, **{k: v for k, v in overrides.items() if v is not None}}
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigurationError(f"unknown experiment settings for '{suite}': {', '.join(unknown)}")
    if "rect" in merged and not isinstance(merged["rect"], Rectangle):
        rect = merged["rect"]
        merged["rect"] = Rectangle.parse(rect) if isinstance(rect, str) else Rectangle(*[float(v) for v in rect])
    if "covariances" in merged:
        merged["covariances"] = tuple(
            parse_covariance(c) if isinstance(c, str) else tuple(c) for c in merged["covariances"]
        )
    for key in ("sizes", "methods", "cases"):
        if key in merged:
            merged[key] = tuple(merged[key])
    merged["suite"] = suite
    try:
        return ExperimentConfig(**merged)
    except KrigingError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid settings for suite '{suite}': {e}") from e


@dataclass
class CriterionTable:
    """
    Long-format result of one suite.

    `rows` is the primary table; `curves` holds alpha-CI curves of the
    validation suites and `extra` any further tables (e.g. density modes).
    """

    experiment: str
    rows: pd.DataFrame
    curves: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=CURVE_COLUMNS))
    extra: Dict[str, pd.DataFrame] = field(default_factory=dict)
    group_columns: tuple = CRITERION_GROUP
    config: dict = field(default_factory=dict)
    reports: bool = False

    @property
    def failures(self) -> pd.DataFrame:
        failed = [f[f["reason"].fillna("") != ""] for f in (self.rows, *self.extra.values()) if "reason" in f]
        failed = [f for f in failed if not f.empty]
        return pd.concat(failed, ignore_index=True) if failed else self.rows.iloc[0:0]

    def summary(self) -> pd.DataFrame:
        return summarize(self.rows, self.group_columns)


def summarize(rows: pd.DataFrame, group_columns=CRITERION_GROUP) -> pd.DataFrame:
    """Median and quartiles of `value` per group, failures excluded."""
    group_columns = list(group_columns)
    columns = group_columns + ["count", "median", "q1", "q3"]
    if not group_columns or rows.empty:
        return pd.DataFrame(columns=columns)
    ok = rows[rows["value"].notna()]
    if "reason" in ok:
        ok = ok[ok["reason"].fillna("") == ""]
    if ok.empty:
        return pd.DataFrame(columns=columns)
    grouped = ok.groupby(group_columns, sort=False)["value"]
    out = pd.DataFrame(
        {
            "count": grouped.count(),
            "median": grouped.median(),
            "q1": grouped.quantile(0.25),
            "q3": grouped.quantile(0.75),
        }
    ).reset_index()
    return out[columns]


def replicate_seed(master: int, *keys: int) -> int:
    """Integer seed of the stream (master, keys...)."""
    return int(derive_seed(master, *keys).generate_state(1)[0])


# --- datasets per replicate -----------------------------------------------------

def simulated_grid_dataset(config: ExperimentConfig, size: int, replicate: int) -> SpatialDataset:
    """Exponential field on a sqrt(size) x sqrt(size) grid; shared by the simulated-field suites."""
    k = int(round(np.sqrt(size)))
    positions = make_grid(config.rect, k)
    return simulate_gp(config.true_spec, config.beta, positions, derive_seed(config.seed, SUITE_KEYS["gp"], size, replicate))


def function_grid_dataset(config: ExperimentConfig) -> SpatialDataset:
    return function_dataset(make_grid(config.rect, config.grid))


def _replicate_dataset(config: ExperimentConfig, size: int, replicate: int, parent: Optional[SpatialDataset]) -> SpatialDataset:
    stream = derive_seed(config.seed, config.key, size, replicate)
    if config.suite == "gp":
        return simulated_grid_dataset(config, size, replicate)
    if config.suite == "function":
        return function_dataset(sample_uniform(config.rect, size, stream))
    if config.suite == "covsel" or size == parent.n:
        return parent
    return subsample(parent, size, stream)


# --- row builders -------------------------------------------------------------

def _failure_row(config, method, covariance, n, replicate, error: Exception) -> dict:
    logger.warning("%s %s %s n=%d replicate %d failed: %s", config.suite, method, covariance, n, replicate, error)
    return dict(zip(CRITERION_COLUMNS, (config.suite, method, covariance, n, replicate, FAILED, np.nan, type(error).__name__)))


def _validation_rows(config, ds, method, family, nu, size, replicate, seed, prior=None, label=None):
    covariance = family_tag(family, nu)
    label = label or method
    vconfig = ValidationConfig(
        family=family,
        nu=nu,
        nugget_ratio=config.nugget_for(family),
        loo_mode=config.loo_mode,
        M=config.M,
        seed=seed,
        phi_grid_size=config.phi_grid_size,
        phi_low_fraction=config.phi_low_fraction,
        prior=prior,
        alpha_levels=tuple(default_alpha_levels(config.alpha_count).tolist()),
    )
    try:
        report = validate(ds, method, vconfig)
    except KrigingError as e:
        return [_failure_row(config, label, covariance, size, replicate, e)], []
    base = (config.suite, label, covariance, size, replicate)
    rows = [dict(zip(CRITERION_COLUMNS, base + (name, value, ""))) for name, value in report.scalars().items()]
    curves = [dict(zip(CURVE_COLUMNS, base + (a, d))) for a, d in report.alpha_curve]
    return rows, curves


def _validation_task(config: ExperimentConfig, size: int, replicate: int, parent: Optional[SpatialDataset]):
    rows, curves = [], []
    try:
        ds = _replicate_dataset(config, size, replicate, parent)
    except KrigingError as e:
        for method in config.methods:
            for family, nu in config.covariances:
                rows.append(_failure_row(config, method, family_tag(family, nu), size, replicate, e))
        return rows, curves
    for m, method in enumerate(config.methods):
        for c, (family, nu) in enumerate(config.covariances):
            seed = replicate_seed(config.seed, config.key, size, replicate, 100 + m, c)
            r, cv = _validation_rows(config, ds, method, family, nu, size, replicate, seed)
            rows.extend(r)
            curves.extend(cv)
    return rows, curves


def _prior_task(config: ExperimentConfig, size: int, replicate: int, parent: SpatialDataset, beta_init: float, sigma2_init: float):
    rows, curves = [], []
    family, nu = config.covariances[0]
    ds = subsample(parent, size, derive_seed(config.seed, config.key, size, replicate))
    for case in config.cases:
        prior = make_appendix_prior(case, beta_init, sigma2_init, size)
        seed = replicate_seed(config.seed, config.key, size, replicate, 200 + case)
        r, cv = _validation_rows(config, ds, "bayesian", family, nu, size, replicate, seed, prior, f"bayesian/{prior.label}")
        rows.extend(r)
        curves.extend(cv)
    return rows, curves


def _estimation_task(config: ExperimentConfig, size: int, replicate: int):
    family, nu = config.covariances[0]
    covariance = family_tag(family, nu)
    base = (config.suite,)

    def row(estimator, parameter, value, reason=""):
        return dict(zip(ESTIMATE_COLUMNS, base + (estimator, covariance, size, replicate, parameter, value, reason)))

    def failed(estimators, error):
        logger.warning("estimation n=%d replicate %d failed: %s", size, replicate, error)
        return [row(e, FAILED, np.nan, type(error).__name__) for e in estimators]

    try:
        ds = simulated_grid_dataset(config, size, replicate)
    except KrigingError as e:
        return failed(("mle", "posterior_mean", "posterior_mode"), e), []
    rows = []
    nugget = config.nugget_for(family)
    try:
        triple = fit_mle(ds, family, nu, nugget).parameters
        rows.extend(row("mle", k, v) for k, v in triple.as_dict().items())
    except KrigingError as e:
        rows.extend(failed(("mle",), e))
    try:
        posterior = phi_posterior(ds, family, nu, nugget, grid_size=config.phi_grid_size, low_fraction=config.phi_low_fraction)
        samples = sample_posterior(posterior, config.M, derive_seed(config.seed, config.key, size, replicate))
        summary = summarize_posterior(posterior, samples)
        rows.extend(row("posterior_mean", k, v) for k, v in summary.mean.as_dict().items())
        rows.extend(row("posterior_mode", k, v) for k, v in summary.mode.as_dict().items())
    except KrigingError as e:
        rows.extend(failed(("posterior_mean", "posterior_mode"), e))
    return rows, []


def _phi_density_task(config: ExperimentConfig, size: int, replicate: int):
    family, nu = config.covariances[0]
    try:
        positions = sample_uniform(config.rect, size, derive_seed(config.seed, config.key, size, replicate, 0))
        ds = simulate_gp(config.true_spec, config.beta, positions, derive_seed(config.seed, config.key, size, replicate, 1))
        posterior = phi_posterior(ds, family, nu, config.nugget_for(family), grid_size=config.phi_grid_size, low_fraction=config.phi_low_fraction)
        samples = sample_posterior(posterior, config.M, derive_seed(config.seed, config.key, size, replicate, 2))
        density = posterior_phi_density(samples, config.density_grid)
    except KrigingError as e:
        logger.warning("phi posterior n=%d replicate %d failed: %s", size, replicate, e)
        return [], [{"experiment": config.suite, "n": size, "replicate": replicate, "reason": type(e).__name__}]
    support = posterior.support
    width = support[-1] - support[0]
    inside = (density.grid >= support[0]) & (density.grid <= support[-1])
    prior_density = np.where(inside, 1.0 / width, 0.0) if width > 0 else np.zeros_like(density.grid)
    rows = [
        dict(zip(DENSITY_COLUMNS, (config.suite, size, replicate, float(p), float(d), float(q))))
        for p, d, q in zip(density.grid, density.density, prior_density)
    ]
    modes = [{
        "experiment": config.suite,
        "n": size,
        "replicate": replicate,
        "mode": density.mode,
        "integral": density.integral(),
        "bandwidth": density.bandwidth,
        "true_phi": config.phi,
        "reason": "",
    }]
    return rows, modes


# --- execution ----------------------------------------------------------------

def _call(task):
    fn, args = task
    return fn(*args)


def run_tasks(tasks: List[Tuple[Callable, tuple]], jobs: int = 1) -> list:
    """Run (fn, args) tasks, in a process pool when jobs > 1; results keep task order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_call, tasks))


def _criterion_table(config: ExperimentConfig, results, reports: bool = False) -> CriterionTable:
    rows = [r for part, _ in results for r in part]
    curves = [c for _, part in results for c in part]
    return CriterionTable(
        experiment=config.suite,
        rows=pd.DataFrame(rows, columns=CRITERION_COLUMNS),
        curves=pd.DataFrame(curves, columns=CURVE_COLUMNS),
        config=config.to_dict(),
        reports=reports,
    )


def _validation_suite(config: ExperimentConfig, parent: Optional[SpatialDataset] = None, reports: bool = False) -> CriterionTable:
    started = time.monotonic()
    logger.info("suite %s: sizes %s, %d replicates, %d jobs", config.suite, list(config.sizes), config.replicates, config.jobs)
    tasks = []
    for size in config.sizes:
        count = 1 if parent is not None and size == parent.n and config.suite != "covsel" else config.replicates
        tasks.extend((_validation_task, (config, size, r, parent)) for r in range(count))
    table = _criterion_table(config, run_tasks(tasks, config.jobs), reports)
    logger.info("suite %s finished in %.1fs, %d failed replicates", config.suite, time.monotonic() - started, len(table.failures))
    return table


def run_gp_benchmark(config: ExperimentConfig) -> CriterionTable:
    """Both methods on exponential fields simulated on square grids."""
    return _validation_suite(config)


def run_covariance_selection(config: ExperimentConfig, ds: Optional[SpatialDataset] = None) -> CriterionTable:
    """
    Every configured covariance on one fixed dataset: the test function on a
    grid x grid design, or `ds` when given.
    """
    parent = ds if ds is not None else function_grid_dataset(config)
    return _validation_suite(replace(config, sizes=(parent.n,)), parent, reports=True)


def run_function_benchmark(config: ExperimentConfig) -> CriterionTable:
    """Test function on uniform random designs."""
    return _validation_suite(config)


def run_resample_benchmark(ds: SpatialDataset, config: ExperimentConfig) -> CriterionTable:
    """Subsamples of `ds` without replacement; the full size runs once."""
    sizes = tuple(s for s in config.sizes if s <= ds.n)
    if len(sizes) < len(config.sizes):
        logger.warning("dropping sizes larger than the dataset (n=%d)", ds.n)
    if not sizes:
        raise ConfigurationError(f"no resample size fits a dataset of {ds.n} observations")
    return _validation_suite(replace(config, sizes=sizes), ds)


def prior_parent(config: ExperimentConfig) -> Tuple[SpatialDataset, float, float]:
    """
    Parent field on a parent_grid x parent_grid grid, and the MLE mean and
    variance that centre the informative priors.

    The fit uses at most init_fit_max parent points.
    """
    positions = make_grid(config.rect, config.parent_grid)
    logger.info("simulating a %d-point parent field", positions.shape[0])
    parent = simulate_gp(config.true_spec, config.beta, positions, derive_seed(config.seed, config.key, 0))
    fit_on = parent if parent.n <= config.init_fit_max else subsample(parent, config.init_fit_max, derive_seed(config.seed, config.key, 1))
    family, nu = config.covariances[0]
    triple = fit_mle(fit_on, family, nu, config.nugget_for(family)).parameters
    logger.info("prior centres: beta_init=%.6g sigma2_init=%.6g", triple.beta, triple.sigma2)
    return parent, triple.beta, triple.sigma2


def run_prior_sensitivity(config: ExperimentConfig) -> CriterionTable:
    """Bayesian validation of subsamples under each prior case."""
    started = time.monotonic()
    parent, beta_init, sigma2_init = prior_parent(config)
    tasks = [
        (_prior_task, (config, size, r, parent, beta_init, sigma2_init))
        for size in config.sizes
        for r in range(config.replicates)
    ]
    table = _criterion_table(config, run_tasks(tasks, config.jobs))
    table.extra["prior_centres"] = pd.DataFrame([{"beta_init": beta_init, "sigma2_init": sigma2_init, "parent_n": parent.n}])
    logger.info("suite %s finished in %.1fs", config.suite, time.monotonic() - started)
    return table


def run_estimation_study(config: ExperimentConfig) -> CriterionTable:
    """MLE, posterior mean and posterior mode of (beta, sigma2, phi) per replicate."""
    started = time.monotonic()
    tasks = [(_estimation_task, (config, size, r)) for size in config.sizes for r in range(config.replicates)]
    rows = [row for part, _ in run_tasks(tasks, config.jobs) for row in part]
    table = CriterionTable(
        experiment=config.suite,
        rows=pd.DataFrame(rows, columns=ESTIMATE_COLUMNS),
        group_columns=ESTIMATE_GROUP,
        config=config.to_dict(),
    )
    logger.info("suite %s finished in %.1fs", config.suite, time.monotonic() - started)
    return table


def run_posterior_phi_study(config: ExperimentConfig) -> CriterionTable:
    """Kernel density of the range posterior on random designs of each size."""
    started = time.monotonic()
    tasks = [(_phi_density_task, (config, size, r)) for size in config.sizes for r in range(config.replicates)]
    results = run_tasks(tasks, config.jobs)
    table = CriterionTable(
        experiment=config.suite,
        rows=pd.DataFrame([row for part, _ in results for row in part], columns=DENSITY_COLUMNS),
        group_columns=(),
        config=config.to_dict(),
    )
    table.extra["modes"] = pd.DataFrame([m for _, part in results for m in part])
    logger.info("suite %s finished in %.1fs", config.suite, time.monotonic() - started)
    return table


def run_prediction_map(ds: SpatialDataset, config: ExperimentConfig) -> CriterionTable:
    """
    Both methods fitted on one map_size subsample of `ds`, predicted on a
    map_grid x map_grid grid over the data's bounding rectangle.
    """
    family, nu = config.covariances[0]
    nugget = config.nugget_for(family)
    train = subsample(ds, min(config.map_size, ds.n), derive_seed(config.seed, config.key, 0))
    targets = make_grid(ds.bounding_rectangle(), config.map_grid)
    model = fit_mle(train, family, nu, nugget)
    ok_mean, ok_var = predict_many(model, targets)
    posterior = phi_posterior(train, family, nu, nugget, grid_size=config.phi_grid_size, low_fraction=config.phi_low_fraction)
    laws = predict_bayes(posterior, targets, config.M, derive_seed(config.seed, config.key, 1))
    bayes_mean = np.array([law.mean for law in laws])
    bayes_sd = np.array([law.sd for law in laws])
    ok_sd = np.sqrt(ok_var)
    rows = pd.DataFrame(
        {
            "x": targets[:, 0],
            "y": targets[:, 1],
            "ok_mean": ok_mean,
            "ok_sd": ok_sd,
            "bayes_mean": bayes_mean,
            "bayes_sd": bayes_sd,
            "mean_difference": bayes_mean - ok_mean,
            "sd_difference": bayes_sd - ok_sd,
        }
    )
    table = CriterionTable(experiment=config.suite, rows=rows, group_columns=(), config=config.to_dict())
    table.extra["training"] = pd.DataFrame({"x": train.positions[:, 0], "y": train.positions[:, 1], "value": train.values})
    return table


def run_suite(config: ExperimentConfig, ds: Optional[SpatialDataset] = None) -> CriterionTable:
    """Dispatch on config.suite."""
    if config.suite in NEEDS_DATA and ds is None:
        raise ConfigurationError(f"suite '{config.suite}' needs a dataset (--data)")
    runners = {
        "gp": lambda: run_gp_benchmark(config),
        "covsel": lambda: run_covariance_selection(config, ds),
        "function": lambda: run_function_benchmark(config),
        "resample": lambda: run_resample_benchmark(ds, config),
        "prior-sens": lambda: run_prior_sensitivity(config),
        "estimation": lambda: run_estimation_study(config),
        "phi-posterior": lambda: run_posterior_phi_study(config),
        "map": lambda: run_prediction_map(ds, config),
    }
    return runners[config.suite]()


# --- output -------------------------------------------------------------------

def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def _group_reports(table: CriterionTable) -> Dict[str, dict]:
    """One report per (method, covariance): criterion medians and the median alpha-CI curve."""
    reports = {}
    summary = table.summary()
    for (method, covariance), group in summary.groupby(["method", "covariance"], sort=False):
        curve = table.curves[(table.curves["method"] == method) & (table.curves["covariance"] == covariance)]
        median_curve = curve.groupby("alpha", sort=True)["delta"].median()
        reports[f"{method}_{covariance}".replace("/", "-")] = {
            "experiment": table.experiment,
            "method": method,
            "covariance": covariance,
            "n": int(group["n"].iloc[0]),
            "replicates": int(group["count"].max()),
            **{row.criterion: row.median for row in group.itertuples()},
            "alpha_curve": [{"alpha": float(a), "delta": float(d)} for a, d in median_curve.items()],
        }
    return reports


def write_outputs(table: CriterionTable, out_dir: Union[str, Path]) -> Dict[str, str]:
    """
    Write the long table, its summary, the alpha-CI curves, extra tables and
    (for covariance selection) one JSON report per group.

    Returns:
        mapping of output name to path
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = table.experiment.replace("-", "_")
    written = {"long": str(_write_csv(table.rows, out_dir / f"{stem}_long.csv"))}
    if table.group_columns:
        summary = table.summary()
        written["summary"] = str(_write_csv(summary, out_dir / f"{stem}_summary.csv"))
        summary_json = out_dir / f"{stem}_summary.json"
        summary_json.write_text(json.dumps(summary.to_dict(orient="records"), indent=2) + "\n", encoding="utf-8")
        written["summary_json"] = str(summary_json)
    if not table.curves.empty:
        written["alpha_curves"] = str(_write_csv(table.curves, out_dir / f"{stem}_alpha_curves.csv"))
    for name, frame in table.extra.items():
        written[name] = str(_write_csv(frame, out_dir / f"{stem}_{name}.csv"))
    if table.reports:
        report_dir = out_dir / "reports"
        report_dir.mkdir(exist_ok=True)
        for name, report in _group_reports(table).items():
            path = report_dir / f"{stem}_{name}.json"
            path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
            written[f"report:{name}"] = str(path)
    return written
