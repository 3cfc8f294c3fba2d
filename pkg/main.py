#!/usr/bin/env python3
"""
Kriging Validation - ordinary and Bayesian kriging with leave-one-out validation.
Simulates fields, fits, predicts, validates and runs benchmark suites.
Defaults come from the YAML configuration (see config.py).
"""

import argparse
import json
import logging
import platform
import sys
import time
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import scipy
import yaml
from scipy import stats

from bayesian_kriging import PriorSpec, phi_posterior, predict_bayes, sample_posterior, summarize_posterior
from config import SCALES, SUITES, Config, get_config
from covariance import FAMILIES, CovarianceSpec, parse_nu
from dataset import Rectangle, make_grid, read_csv, read_targets, sample_uniform, write_csv
from errors import ConfigurationError, KrigingError, NumericalError
from experiments import build_experiment_config, run_suite, write_outputs
from ordinary_kriging import fit_mle, mle_bracket, predict_many
from simulate import function_dataset, simulate_gp
from validation import ValidationConfig, validate

logger = logging.getLogger("kriging")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(level: str):
    """Single stderr handler; stdout stays reserved for data and paths."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    try:
        root.setLevel(level.upper())
    except ValueError as e:
        raise ConfigurationError(f"unknown log level '{level}'") from e


def emit(text: str):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def write_json(data: dict, out: Optional[str]) -> Optional[Path]:
    """Write JSON to `out`, or to stdout when no path is given."""
    text = json.dumps(data, indent=2, default=_json_default)
    if out is None:
        emit(text)
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _model_args(args, config: Config):
    """(family, nu, nugget_ratio) from flags, falling back to the config."""
    family = args.family or config.get("model.family", "matern")
    if family not in FAMILIES:
        raise ConfigurationError(f"unknown covariance family '{family}'")
    nu = parse_nu(args.nu) if args.nu is not None else float(config.get("model.nu", 0.5))
    nugget_ratio = args.tau2 if args.tau2 is not None else float(config.get("model.nugget_ratio", 0.0))
    if nugget_ratio < 0:
        raise ConfigurationError(f"--tau2 must be >= 0, got {nugget_ratio}")
    return family, nu if family == "matern" else 0.5, nugget_ratio


def _number_list(text: str, kind, flag: str) -> list:
    try:
        return [kind(part) for part in text.split(",")]
    except ValueError as e:
        raise ConfigurationError(f"{flag} expects comma-separated numbers, got '{text}'") from e


def _phi_grid(args, config: Config) -> int:
    size = args.phi_grid if args.phi_grid is not None else config.get_phi_grid_size()
    if size < 1:
        raise ConfigurationError(f"--phi-grid must be >= 1, got {size}")
    return size


def _seed(args, config: Config) -> int:
    return args.seed if args.seed is not None else config.get_seed()


def _M(args, config: Config) -> int:
    M = args.M if args.M is not None else config.get_M()
    if M < 1:
        raise ConfigurationError(f"--M must be >= 1, got {M}")
    return M


def _posterior(ds, args, config: Config):
    family, nu, nugget_ratio = _model_args(args, config)
    return phi_posterior(
        ds,
        family,
        nu,
        nugget_ratio,
        PriorSpec.vague(),
        grid_size=_phi_grid(args, config),
        low_fraction=float(config.get("bayes.phi_grid_low_fraction", 0.01)),
    )


def _fit_ok(ds, args, config: Config):
    family, nu, nugget_ratio = _model_args(args, config)
    low, high = config.get_mle_bracket_factors()
    return fit_mle(ds, family, nu, nugget_ratio, mle_bracket(ds.positions, low, high), float(config.get("mle.xtol_factor", 1e-6)))


def cmd_simulate(args, config: Config) -> int:
    """Simulate a field (or evaluate the test function) on a grid or uniform design."""
    rect = Rectangle.parse(args.rect) if args.rect else Rectangle(0.0, 10.0, 0.0, 10.0)
    seed = _seed(args, config)
    if args.grid is not None:
        positions = make_grid(rect, args.grid)
    elif args.n is not None:
        positions = sample_uniform(rect, args.n, np.random.SeedSequence(seed).spawn(1)[0])
    else:
        raise ConfigurationError("simulate needs --grid k or --n n")
    if args.field == "function":
        ds = function_dataset(positions)
        resolved = {"field": "function"}
    else:
        family, nu, _ = _model_args(args, config)
        spec = CovarianceSpec(family, args.phi, args.sigma2, args.tau2 or 0.0, nu)
        ds = simulate_gp(spec, args.beta, positions, seed)
        resolved = {"field": "gp", "covariance": spec.tag, "phi": spec.phi, "sigma2": spec.sigma2, "tau2": spec.tau2, "beta": args.beta}
    resolved.update({"rect": rect.as_list(), "grid": args.grid, "n": ds.n, "seed": seed})
    sys.stderr.write(json.dumps(resolved) + "\n")
    if args.out:
        emit(str(write_csv(ds, args.out)))
    else:
        pd.DataFrame({"x": ds.positions[:, 0], "y": ds.positions[:, 1], "value": ds.values}).to_csv(
            sys.stdout, index=False, float_format="%.17g", lineterminator="\n"
        )
    return EXIT_OK


def cmd_fit(args, config: Config) -> int:
    """Emit MLE parameters or the Bayesian posterior summary as JSON."""
    ds = read_csv(args.data)
    if args.method == "ok":
        result = _fit_ok(ds, args, config).to_dict()
    else:
        posterior = _posterior(ds, args, config)
        samples = sample_posterior(posterior, _M(args, config), _seed(args, config))
        result = {
            "method": "bayes",
            "n": ds.n,
            "M": samples.M,
            "seed": _seed(args, config),
            **posterior.to_dict(),
            **summarize_posterior(posterior, samples).to_dict(),
        }
    path = write_json(result, args.out)
    if path is not None:
        emit(str(path))
    return EXIT_OK


def cmd_predict(args, config: Config) -> int:
    """Per-target mean, variance and quantiles as CSV."""
    ds = read_csv(args.data)
    if args.targets:
        targets = read_targets(args.targets)
    elif args.grid is not None:
        rect = Rectangle.parse(args.rect) if args.rect else ds.bounding_rectangle()
        targets = make_grid(rect, args.grid)
    else:
        raise ConfigurationError("predict needs --targets CSV or --grid k")
    quantiles = _number_list(args.quantiles, float, "--quantiles") if args.quantiles else config.get_quantiles()
    if any(not 0 < q < 1 for q in quantiles):
        raise ConfigurationError(f"quantiles must lie in (0, 1), got {quantiles}")

    frame = pd.DataFrame({"x": targets[:, 0], "y": targets[:, 1]})
    if args.method == "ok":
        means, variances = predict_many(_fit_ok(ds, args, config), targets)
        frame["mean"] = means
        frame["variance"] = variances
        for q in quantiles:
            frame[f"q{q:g}"] = means + np.sqrt(variances) * stats.norm.ppf(q)
    else:
        laws = predict_bayes(_posterior(ds, args, config), targets, _M(args, config), _seed(args, config))
        frame["mean"] = [law.mean for law in laws]
        frame["variance"] = [law.variance for law in laws]
        for q in quantiles:
            frame[f"q{q:g}"] = [law.quantile(q) for law in laws]

    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.10g", lineterminator="\n")
        emit(str(path))
    else:
        frame.to_csv(sys.stdout, index=False, float_format="%.10g", lineterminator="\n")
    return EXIT_OK


def cmd_validate(args, config: Config) -> int:
    """Leave-one-out report as JSON plus the alpha-CI curve as CSV."""
    ds = read_csv(args.data)
    family, nu, nugget_ratio = _model_args(args, config)
    levels = config.get_alpha_levels(args.alpha_levels)
    low, high = config.get_mle_bracket_factors()
    vconfig = ValidationConfig(
        family=family,
        nu=nu,
        nugget_ratio=nugget_ratio,
        loo_mode=args.loo_mode or config.get("validation.loo_mode", "fixed"),
        M=_M(args, config),
        seed=_seed(args, config),
        phi_grid_size=_phi_grid(args, config),
        phi_low_fraction=float(config.get("bayes.phi_grid_low_fraction", 0.01)),
        alpha_levels=tuple(levels.tolist()),
        mle_bracket=mle_bracket(ds.positions, low, high),
    )
    report = validate(ds, args.method, vconfig)
    if args.out is None:
        emit(report.to_json())
        return EXIT_OK
    json_path = report.write_json(args.out)
    curve_path = report.write_curve_csv(json_path.with_name(json_path.stem + "_alpha_curve.csv"))
    emit(str(json_path))
    emit(str(curve_path))
    return EXIT_OK


def cmd_benchmark(args, config: Config) -> int:
    """Run one suite, write its tables and a manifest; exit 4 when replicates failed."""
    started = time.monotonic()
    settings = config.experiment_settings(args.suite, args.scale)
    sizes = _number_list(args.sizes, int, "--sizes") if args.sizes else None
    experiment = build_experiment_config(
        args.suite,
        settings,
        seed=args.seed,
        jobs=args.jobs,
        replicates=args.replicates,
        M=args.M,
        sizes=sizes,
        loo_mode=args.loo_mode,
    )
    ds = read_csv(args.data) if args.data else None
    table = run_suite(experiment, ds)
    out_dir = Path(args.out_dir or config.get_output_dir())
    outputs = write_outputs(table, out_dir)
    failures = table.failures
    manifest = {
        "suite": args.suite,
        "scale": args.scale,
        "data": args.data,
        "config": experiment.to_dict(),
        "config_files": config.loaded_files,
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "pandas": pd.__version__,
            "pyyaml": yaml.__version__,
        },
        "wall_time_seconds": round(time.monotonic() - started, 3),
        "outputs": outputs,
        "failures": failures.to_dict(orient="records"),
    }
    manifest_path = write_json(manifest, str(out_dir / f"{args.suite.replace('-', '_')}_manifest.json"))
    for path in outputs.values():
        emit(path)
    emit(str(manifest_path))
    if len(failures):
        logger.warning("%d replicate(s) failed; see %s", len(failures), manifest_path)
        return EXIT_PARTIAL
    return EXIT_OK


def _add_model_flags(parser):
    parser.add_argument("--family", choices=FAMILIES, help="Covariance family (default from config)")
    parser.add_argument("--nu", help="Matérn smoothness: 1/2, 3/2 or 5/2 (default from config)")


def _add_data_flags(parser, method: bool = True):
    if method:
        parser.add_argument("--method", choices=("ok", "bayes"), default="ok", help="Ordinary or Bayesian kriging")
    parser.add_argument("--data", required=True, help="Input CSV with columns x,y,value")
    _add_model_flags(parser)
    parser.add_argument("--tau2", type=float, help="Nugget as a fraction of sigma2 (tau2/sigma2, default 0)")
    parser.add_argument("--M", type=int, help="Number of posterior draws (bayes)")
    parser.add_argument("--phi-grid", dest="phi_grid", type=int, help="Size of the discrete range support (bayes)")
    parser.add_argument("--seed", type=int, help="Random seed")
    parser.add_argument("--out", help="Output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Ordinary and Bayesian kriging with leave-one-out validation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py simulate --phi 4.5 --sigma2 0.1 --beta 0.5 --grid 9 --seed 1 --out data.csv
  python main.py fit --method ok --data data.csv
  python main.py predict --method bayes --data data.csv --grid 20 --M 1000
  python main.py validate --method ok --data f144.csv --family gaussian --tau2 1e-6
  python main.py benchmark --suite gp --scale smoke --out-dir outputs/gp
        """,
    )
    parser.add_argument("-c", "--config", dest="config_file", help="Configuration file path (default: config.user.yaml)")
    parser.add_argument("--log-level", dest="log_level", help="Logging level on stderr (default: WARNING)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="Write a simulated dataset CSV")
    _add_model_flags(simulate)
    simulate.add_argument("--field", choices=("gp", "function"), default="gp", help="Gaussian field or the test function")
    simulate.add_argument("--phi", type=float, default=4.5, help="Range")
    simulate.add_argument("--sigma2", type=float, default=0.1, help="Variance, > 0")
    simulate.add_argument("--tau2", type=float, default=0.0, help="Nugget variance, >= 0")
    simulate.add_argument("--beta", type=float, default=0.5, help="Mean")
    simulate.add_argument("--grid", type=int, help="k for a k x k grid")
    simulate.add_argument("--n", type=int, help="Uniform random design of n points")
    simulate.add_argument("--rect", help="xmin,xmax,ymin,ymax (default 0,10,0,10)")
    simulate.add_argument("--seed", type=int, help="Random seed")
    simulate.add_argument("--out", help="Output CSV (default: stdout)")
    simulate.set_defaults(func=cmd_simulate)

    fit = subparsers.add_parser("fit", help="Emit parameter estimates as JSON")
    _add_data_flags(fit)
    fit.set_defaults(func=cmd_fit)

    predict = subparsers.add_parser("predict", help="Predict at targets, CSV output")
    _add_data_flags(predict)
    predict.add_argument("--targets", help="CSV with columns x,y")
    predict.add_argument("--grid", type=int, help="k x k grid over --rect or the data's bounding rectangle")
    predict.add_argument("--rect", help="xmin,xmax,ymin,ymax for --grid")
    predict.add_argument("--quantiles", help="Comma-separated quantile levels (default from config)")
    predict.set_defaults(func=cmd_predict)

    validate_cmd = subparsers.add_parser("validate", help="Leave-one-out validation report")
    _add_data_flags(validate_cmd)
    validate_cmd.add_argument("--loo-mode", dest="loo_mode", choices=("fixed", "refit"), help="Leave-one-out mode")
    validate_cmd.add_argument("--alpha-levels", dest="alpha_levels", type=int, help="Number of alpha-CI levels")
    validate_cmd.set_defaults(func=cmd_validate)

    benchmark = subparsers.add_parser("benchmark", help="Run a benchmark suite")
    benchmark.add_argument("--suite", required=True, choices=SUITES, help="Suite to run")
    benchmark.add_argument("--scale", choices=SCALES, default="smoke", help="Replicate/draw profile")
    benchmark.add_argument("--data", help="Input CSV (required by resample and map)")
    benchmark.add_argument("--seed", type=int, help="Master seed")
    benchmark.add_argument("--out-dir", dest="out_dir", help="Output directory (default from config)")
    benchmark.add_argument("--replicates", type=int, help="Override the replicate count")
    benchmark.add_argument("--sizes", help="Comma-separated dataset sizes")
    benchmark.add_argument("--M", type=int, help="Override the number of posterior draws")
    benchmark.add_argument("--loo-mode", dest="loo_mode", choices=("fixed", "refit"), help="Override the suite's leave-one-out mode")
    benchmark.add_argument("--jobs", type=int, help="Worker processes (env: KRIGING_JOBS)")
    benchmark.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    """Main function to run the kriging toolkit."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = get_config(args.config_file)
        setup_logging(args.log_level or config.get_log_level())
        if args.command == "benchmark" and args.suite in ("resample", "map") and not args.data:
            parser.error(f"--suite {args.suite} requires --data")
        return args.func(args, config)
    except KrigingError as e:
        logger.error("%s: %s", type(e).__name__, e)
        return e.exit_code
    except (np.linalg.LinAlgError, ArithmeticError) as e:
        error = NumericalError(f"{type(e).__name__}: {e}")
        logger.error("%s: %s", type(error).__name__, error)
        return error.exit_code
    except OSError as e:
        logger.error("%s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
