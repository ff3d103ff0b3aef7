"""Command-line front end.

::

    noisymc gen    --config gen.json    --out DIR [--seed S]
    noisymc fit    --config fit.json    --out DIR
    noisymc verify --config exp.json    --out DIR [--seed S]
    noisymc rates  --config exp.json    --out DIR [--seed S]

Exit codes: 0 success, 1 runtime failure (including failed report
assertions), 2 invalid configuration, 64 usage error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .concentration import cone_ratio
from .estimators import EstimatorConfig, fit, lambda_known_variance, lambda_sqrt, GAUSSIAN_CSTAR
from .experiments import (
    ConfigError,
    ExperimentConfig,
    make_distribution,
    normalized_error,
    run_bound_verification,
    run_rate_experiment,
    write_bound_report,
    write_rate_report,
)
from .io import read_matrix_csv, read_observations, write_json, write_matrix_csv, write_observations
from .rng import STREAM_MATRIX, STREAM_OBSERVATIONS, substream_seed
from .sampling import MatrixDims, NoiseModel, generate_low_rank, regularity_constants, sample_observations

log = logging.getLogger("noisymc")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_USAGE = 64


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be a JSON object")
    return cfg


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"{key}: required")
    return cfg[key]


def _number(cfg, key, cast):
    value = _require(cfg, key)
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {cfg[key]!r}") from None


def _resolve(base, p):
    p = Path(p)
    return p if p.is_absolute() else base / p


def cmd_gen(cfg, out, seed=None):
    """Generate ``A0.csv``, ``observations.csv`` and ``observations.json``."""
    try:
        dims = MatrixDims(*_require(cfg, "dims"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"dims: {exc}") from None
    rank = _number(cfg, "rank", int)
    if not 1 <= rank <= dims.m:
        raise ConfigError(f"rank: must satisfy 1 <= rank <= min(m1, m2) = {dims.m}, got {rank}")
    box = _number(cfg, "box", float)
    if not box > 0:
        raise ConfigError(f"box: must be > 0, got {box}")
    n = _number(cfg, "n", int)
    if n < 1:
        raise ConfigError(f"n: must be >= 1, got {n}")
    try:
        noise = NoiseModel(**cfg.get("noise", {"kind": "gaussian", "sigma": 1.0}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"noise: {exc}") from None
    try:
        dist = make_distribution(cfg.get("distribution", {"kind": "uniform"}), dims)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"distribution: {exc}") from None
    seed = int(cfg.get("seed", 0) if seed is None else seed)

    A0 = generate_low_rank(dims, rank, box, substream_seed(seed, STREAM_MATRIX))
    obs = sample_observations(A0, dist, noise, n, substream_seed(seed, STREAM_OBSERVATIONS))
    write_matrix_csv(out / "A0.csv", A0)
    write_observations(out / "observations.csv", obs)
    log.info("wrote A0.csv and %d observations to %s", n, out)
    return EXIT_OK


def _auto_lambda(cfg, est, obs):
    dims = obs.dims
    try:
        dist = make_distribution(cfg.get("distribution", {"kind": "uniform"}), dims)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"distribution: {exc}") from None
    L = regularity_constants(dist).L
    Cstar = float(cfg.get("Cstar", GAUSSIAN_CSTAR))
    mult = float(cfg.get("lambda_multiplier", 1.0))
    if est.get("kind") == "known_variance":
        if cfg.get("sigma") is None:
            raise ConfigError("sigma: required for known-variance auto-lambda")
        return mult * lambda_known_variance(float(cfg["sigma"]), L, dims, obs.n, Cstar)
    return mult * lambda_sqrt(L, dims, obs.n, Cstar)


def cmd_fit(cfg, out, base):
    """Fit an estimator; writes ``estimate.csv`` and ``result.json``."""
    est = dict(_require(cfg, "estimator"))
    if est.get("kind") not in ("known_variance", "square_root"):
        raise ConfigError(f"estimator.kind: must be 'known_variance' or 'square_root', got {est.get('kind')!r}")
    if "box_radius" not in est:
        raise ConfigError("estimator.box_radius: required")
    obs_path = _resolve(base, _require(cfg, "observations"))
    try:
        obs = read_observations(obs_path)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"observations: cannot load {obs_path}: {exc}") from None
    lam = est.get("lambda", "auto")
    if lam == "auto":
        est["lambda"] = _auto_lambda(cfg, est, obs)
    try:
        ecfg = EstimatorConfig.from_dict(est)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"estimator: {exc}") from None

    res = fit(obs, ecfg)
    result = {
        "kind": ecfg.kind,
        "lambda": ecfg.lam,
        "lambda_auto": lam == "auto",
        "box_radius": ecfg.box_radius,
        "n": obs.n,
        "dims": [obs.dims.m1, obs.dims.m2],
        **res.to_dict(),
        "estimate": "estimate.csv",
    }
    if cfg.get("ground_truth"):
        A0 = read_matrix_csv(_resolve(base, cfg["ground_truth"]))
        if A0.shape != obs.dims.shape:
            raise ConfigError(f"ground_truth: shape {A0.shape} does not match observations {obs.dims.shape}")
        result["error"] = normalized_error(res.estimate, A0)
        result["cone_ratio"] = cone_ratio(res.estimate, A0)
    write_matrix_csv(out / "estimate.csv", res.estimate)
    write_json(out / "result.json", result)
    log.info("fit %s: %d iterations, kkt %.3g, converged=%s", ecfg.kind, res.iterations, res.kkt_residual, res.converged)
    return EXIT_OK


def _experiment_config(cfg, seed):
    cfg = dict(cfg)
    cfg.pop("checks", None)
    if seed is not None:
        cfg["seed"] = seed
    return ExperimentConfig.from_dict(cfg)


def cmd_verify(cfg, out, seed=None):
    """Run bound verification; writes ``bounds.csv`` and ``summary.json``."""
    checks = cfg.get("checks")
    ecfg = _experiment_config(cfg, seed)
    try:
        report = run_bound_verification(ecfg, checks=checks)
    except ValueError as exc:
        if "unknown check" in str(exc):
            raise ConfigError(f"checks: {exc}") from None
        raise
    write_bound_report(report, out)
    for c in report.checks:
        log.info(
            "%-24s freq %.4f allowed %.4f %s",
            c["check"],
            c["violation_frequency"],
            c["allowed_frequency"],
            "PASS" if c["passed"] else "FAIL",
        )
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_rates(cfg, out, seed=None):
    """Run the rate experiment; writes ``rates.csv``, ``summary.json``, ``rates.dat``."""
    ecfg = _experiment_config(cfg, seed)
    report = run_rate_experiment(ecfg)
    write_rate_report(report, out)
    for s in report.per_multiplier:
        log.info("multiplier %g: slope %s", s["multiplier"], "n/a" if s["slope"] is None else f"{s['slope']:.3f}")
    ok = report.slope_ok()
    return EXIT_FAILURE if ok is False else EXIT_OK


def _configure_logging(quiet):
    if not log.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(message)s"))
        log.addHandler(handler)
        log.propagate = False
    log.setLevel(logging.WARNING if quiet else logging.INFO)


def build_parser():
    parser = _Parser(prog="noisymc", description="Noisy low-rank matrix completion under general sampling.")
    sub = parser.add_subparsers(dest="command", metavar="{gen,fit,verify,rates}")
    sub.required = True
    for name, help_ in [
        ("gen", "generate a low-rank matrix and noisy observations"),
        ("fit", "fit an estimator to observations"),
        ("verify", "Monte Carlo checks of the concentration bounds"),
        ("rates", "error-rate experiment over a grid of sample sizes"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
        if name != "fit":
            p.add_argument("--seed", type=int, default=None, help="override the config seed (unsigned 64-bit)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    _configure_logging(args.quiet)
    seed = getattr(args, "seed", None)
    if seed is not None and not 0 <= seed < 2**64:
        sys.stderr.write("noisymc: error: --seed must be an unsigned 64-bit integer\n")
        return EXIT_USAGE

    try:
        cfg = _load_config(args.config)
        out = args.out
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            sys.stderr.write(f"noisymc: error: cannot create output directory {out}: {exc.strerror}\n")
            return EXIT_FAILURE
        if args.command == "gen":
            return cmd_gen(cfg, out, seed)
        if args.command == "fit":
            return cmd_fit(cfg, out, args.config.parent)
        if args.command == "verify":
            return cmd_verify(cfg, out, seed)
        return cmd_rates(cfg, out, seed)
    except ConfigError as exc:
        sys.stderr.write(f"noisymc: config error: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        sys.stderr.write(f"noisymc: error: {exc}\n")
        return EXIT_FAILURE
    except Exception as exc:  # pragma: no cover - last-resort runtime failure
        log.debug("unhandled error", exc_info=True)
        sys.stderr.write(f"noisymc: runtime failure: {type(exc).__name__}: {exc}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
