"""Monte Carlo harness: error-rate scaling and concentration checks.

Two entry points:

* :func:`run_rate_experiment` fits one estimator over a grid of sample sizes
  and a sweep of penalty multipliers, and fits the log-log slope of the mean
  normalized squared error ``||A_hat - A0||_F^2 / (m1 m2)`` against ``n``.
* :func:`run_bound_verification` runs the concentration and error-geometry
  checks and reports violation frequencies next to their allowed levels.

Randomness for trial ``k`` at grid point ``i`` comes from substreams
``(seed, purpose, i, k)`` (see :mod:`noisymc.rng`), so reports do not depend
on scheduling or worker count, and trials are paired across estimator kinds
and multipliers.
"""

import io as _io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from . import concentration as conc
from .estimators import (
    ESTIMATOR_KINDS,
    GAUSSIAN_CSTAR,
    EstimatorConfig,
    fit,
    lambda_known_variance,
    lambda_sqrt,
    residual_rms,
    sqrt_lambda_validity,
)
from .io import format_float, atomic_write_text, write_json
from .rng import (
    STREAM_MATRIX,
    STREAM_MEMBERS,
    STREAM_OBSERVATIONS,
    STREAM_RADEMACHER,
    make_rng,
    substream_seed,
)
from .sampling import (
    MatrixDims,
    NoiseModel,
    ObservationSet,
    build_distribution,
    generate_low_rank,
    regularity_constants,
    sample_observations,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "RateReport",
    "BoundReport",
    "theoretical_error_bound",
    "sample_size_threshold",
    "make_distribution",
    "grid_observations",
    "normalized_error",
    "fit_loglog_slope",
    "run_rate_experiment",
    "run_bound_verification",
    "check_tail_bound",
    "check_mean_norm_scaling",
    "check_residual_concentration",
    "check_cone_condition",
    "check_rsc",
    "random_constraint_member",
    "write_rate_report",
    "write_bound_report",
]

# Constant c4 / (C*)^2 in the minimum sample size for the square-root estimator.
_C4_PER_CSTAR_SQ = 576.0
SLOPE_BAND = (-1.25, -0.75)
CONE_LIMITS = {"known_variance": 5.0, "square_root": 2.0}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of a rate experiment or bound verification run.

    ``distribution`` is a dict understood by :func:`make_distribution`.
    ``design`` is ``"iid"`` (positions drawn from the distribution) or
    ``"grid"`` (every cell observed ``n / (m1 m2)`` times).
    ``solver`` holds overrides for :class:`EstimatorConfig` fields.
    ``cone_multipliers`` optionally sets the penalty multiplier per estimator
    kind for the cone checks (default: the first sweep multiplier).
    """

    dims: MatrixDims
    rank: int
    box: float
    noise: NoiseModel
    n_grid: Tuple[int, ...]
    trials: int
    distribution: dict = field(default_factory=lambda: {"kind": "uniform"})
    kind: str = "known_variance"
    lambda_multipliers: Tuple[float, ...] = (1.0,)
    lambda_floor: float = 1e-8
    seed: int = 0
    Cstar: float = GAUSSIAN_CSTAR
    design: str = "iid"
    solver: dict = field(default_factory=dict)
    slope_band: Tuple[float, float] = SLOPE_BAND
    workers: int = 1
    cone_multipliers: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.rank <= self.dims.m:
            raise ConfigError(f"rank: must satisfy 1 <= rank <= min(m1, m2) = {self.dims.m}, got {self.rank}")
        if not self.box > 0:
            raise ConfigError(f"box: must be > 0, got {self.box}")
        grid = tuple(int(n) for n in self.n_grid)
        if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"n_grid: must be a nonempty strictly increasing list of positive sizes, got {list(grid)}")
        object.__setattr__(self, "n_grid", grid)
        if self.trials < 1:
            raise ConfigError(f"trials: must be >= 1, got {self.trials}")
        if self.kind not in ESTIMATOR_KINDS:
            raise ConfigError(f"kind: must be one of {ESTIMATOR_KINDS}, got {self.kind!r}")
        mults = tuple(float(x) for x in self.lambda_multipliers)
        if not mults or any(not x > 0 for x in mults):
            raise ConfigError(f"lambda_multiplier: multipliers must be > 0, got {list(mults)}")
        object.__setattr__(self, "lambda_multipliers", mults)
        if self.design not in ("iid", "grid"):
            raise ConfigError(f"design: must be 'iid' or 'grid', got {self.design!r}")
        if self.design == "grid":
            cells = self.dims.m1 * self.dims.m2
            if any(n % cells for n in grid):
                raise ConfigError(f"n_grid: grid design needs multiples of m1*m2 = {cells}")
        for k, v in self.cone_multipliers.items():
            if k not in ESTIMATOR_KINDS or not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"cone_multipliers: expected positive multipliers keyed by estimator kind, got {k!r}: {v!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {self.seed}")
        try:
            make_distribution(self)
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"distribution: {exc}") from None
        try:
            EstimatorConfig.from_dict({"kind": self.kind, "lambda": 1.0, "box_radius": self.box, **self.solver})
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"solver: {exc}") from None

    @classmethod
    def from_dict(cls, d):
        """Build from a JSON-style dict, raising :class:`ConfigError` on bad fields."""
        d = dict(d)
        try:
            dims = d.pop("dims")
            dims = MatrixDims(*dims)
        except KeyError:
            raise ConfigError("dims: required") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"dims: {exc}") from None
        noise = d.pop("noise", {"kind": "gaussian", "sigma": 1.0})
        try:
            noise = NoiseModel(**noise)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"noise: {exc}") from None
        if "lambda_multiplier" in d:
            m = d.pop("lambda_multiplier")
            d["lambda_multipliers"] = m if isinstance(m, (list, tuple)) else [m]
        for key in ("n_grid", "lambda_multipliers", "slope_band"):
            if key in d:
                d[key] = tuple(d[key])
        if "n" in d and "n_grid" not in d:
            d["n_grid"] = (d.pop("n"),)
        for req in ("rank", "box", "n_grid", "trials"):
            if req not in d:
                raise ConfigError(f"{req}: required")
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown field")
        try:
            return cls(dims=dims, noise=noise, **d)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self):
        d = asdict(self)
        d["dims"] = [self.dims.m1, self.dims.m2]
        d["noise"] = asdict(self.noise)
        d["n_grid"] = list(self.n_grid)
        d["lambda_multipliers"] = list(self.lambda_multipliers)
        d["slope_band"] = list(self.slope_band)
        return d


def make_distribution(cfg_or_desc, dims=None):
    """Sampling distribution from a description dict.

    ``{"kind": "uniform"}``, ``{"kind": "product", "row_weights": [...],
    "col_weights": [...]}`` or ``{"kind": "explicit", "table": [[...]]}``.
    """
    if isinstance(cfg_or_desc, ExperimentConfig):
        desc, dims = cfg_or_desc.distribution, cfg_or_desc.dims
    else:
        desc = cfg_or_desc
    desc = dict(desc)
    kind = desc.pop("kind", "uniform")
    return build_distribution(dims, kind, **desc)


def grid_observations(A0, noise, repeats, seed):
    """Observe every cell of ``A0`` exactly ``repeats`` times (row-major order)."""
    A0 = np.asarray(A0, dtype=float)
    m1, m2 = A0.shape
    flat = np.tile(np.arange(m1 * m2), int(repeats))
    rows, cols = np.divmod(flat, m2)
    rng = make_rng(seed)
    y = A0[rows, cols] + noise.sigma * noise.standardized(rng, flat.size)
    return ObservationSet(MatrixDims(m1, m2), rows, cols, y, noise=noise, seed=int(seed))


def normalized_error(A_hat, A0):
    """``||A_hat - A0||_F^2 / (m1 m2)``."""
    D = np.asarray(A_hat) - np.asarray(A0)
    return float(np.sum(D * D) / D.size)


def theoretical_error_bound(sigma, a, mu, L, dims, r, n):
    """Shape of the high-probability error bound with unit leading constant.

    ``max(max(sigma^2, a^2) mu^2 L log(d) r M / n, a^2 mu sqrt(log(d) / n))``.
    Returns ``(value, branch)`` with ``branch`` 1 or 2.
    """
    logd = math.log(dims.d)
    first = max(sigma**2, a**2) * mu**2 * L * logd * r * dims.M / n
    second = a**2 * mu * math.sqrt(logd / n)
    return (first, 1) if first >= second else (second, 2)


def sample_size_threshold(mu, L, dims, r, Cstar=GAUSSIAN_CSTAR):
    """Minimum ``n`` for the square-root guarantee: ``ceil(576 C*^2 mu L M r log d)``."""
    return int(math.ceil(_C4_PER_CSTAR_SQ * Cstar**2 * mu * L * dims.M * r * math.log(dims.d)))


def fit_loglog_slope(ns, values):
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _base_lambda(kind, sigma, L, dims, n, Cstar):
    if kind == "known_variance":
        return lambda_known_variance(sigma, L, dims, n, Cstar)
    return lambda_sqrt(L, dims, n, Cstar)


def _draw_instance(cfg, dist, ni, n, trial):
    A0 = generate_low_rank(cfg.dims, cfg.rank, cfg.box, substream_seed(cfg.seed, STREAM_MATRIX, ni, trial))
    obs_seed = substream_seed(cfg.seed, STREAM_OBSERVATIONS, ni, trial)
    if cfg.design == "grid":
        obs = grid_observations(A0, cfg.noise, n // (cfg.dims.m1 * cfg.dims.m2), obs_seed)
    else:
        obs = sample_observations(A0, dist, cfg.noise, n, obs_seed)
    return A0, obs


def _rate_job(args):
    cfg, ni, n, trial, L = args
    dist = make_distribution(cfg)
    A0, obs = _draw_instance(cfg, dist, ni, n, trial)
    base = _base_lambda(cfg.kind, cfg.noise.sigma, L, cfg.dims, n, cfg.Cstar)
    out = []
    for mult in cfg.lambda_multipliers:
        lam = max(mult * base, cfg.lambda_floor)
        ecfg = EstimatorConfig.from_dict({"kind": cfg.kind, "lambda": lam, "box_radius": cfg.box, **cfg.solver})
        res = fit(obs, ecfg)
        out.append(
            {
                "n": n,
                "trial": trial,
                "multiplier": mult,
                "lambda": lam,
                "error": normalized_error(res.estimate, A0),
                "converged": bool(res.converged),
                "iterations": res.iterations,
                "kind": cfg.kind,
            }
        )
    return (ni, trial), out


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, jobs))
    else:
        results = [fn(j) for j in jobs]
    # merge by key so scheduling never changes the output order
    return [r for _, r in sorted(results, key=lambda kv: kv[0])]


@dataclass
class RateReport:
    config: dict
    rows: list
    per_multiplier: list
    envelopes: list
    best_multiplier: float
    regularity: dict
    extras: dict = field(default_factory=dict)

    def summary(self):
        return {
            "config": self.config,
            "per_multiplier": self.per_multiplier,
            "envelopes": self.envelopes,
            "best_multiplier": self.best_multiplier,
            "regularity": self.regularity,
            **self.extras,
        }

    def multiplier_summary(self, mult):
        for s in self.per_multiplier:
            if s["multiplier"] == mult:
                return s
        raise KeyError(mult)

    @property
    def best(self):
        return self.multiplier_summary(self.best_multiplier)

    def slope_ok(self, band=None):
        """True when some multiplier's slope lies in ``band``; None without slopes."""
        lo, hi = band or tuple(self.config["slope_band"])
        slopes = [s["slope"] for s in self.per_multiplier if s.get("slope") is not None]
        if not slopes:
            return None
        return any(lo <= s <= hi for s in slopes)


def run_rate_experiment(cfg):
    """Error-versus-``n`` experiment for every multiplier in the sweep.

    For every ``n`` and trial a fresh ``A0`` and a fresh observation set are
    drawn; every multiplier is fitted on that same data. Per multiplier the
    report holds mean and median errors per ``n`` over converged trials, the
    non-convergence count, the log-log slope of the mean (only with at least
    three grid points), and the experiment-wide constant ``C_emp`` relating
    mean errors to :func:`theoretical_error_bound`. The best multiplier is
    the one with the smallest geometric mean of per-``n`` mean errors.
    """
    dist = make_distribution(cfg)
    reg = regularity_constants(dist)
    jobs = [(cfg, ni, n, trial, reg.L) for ni, n in enumerate(cfg.n_grid) for trial in range(cfg.trials)]
    rows = [row for batch in _map(_rate_job, jobs, cfg.workers) for row in batch]

    sigma = cfg.noise.sigma
    envelopes = []
    for n in cfg.n_grid:
        value, branch = theoretical_error_bound(sigma, cfg.box, reg.mu, reg.L, cfg.dims, cfg.rank, n)
        envelopes.append({"n": n, "bound": value, "branch": branch})

    per_mult = []
    for mult in cfg.lambda_multipliers:
        means, medians, counts, nonconv = [], [], [], 0
        for n in cfg.n_grid:
            sel = [r for r in rows if r["multiplier"] == mult and r["n"] == n]
            good = [r["error"] for r in sel if r["converged"]]
            nonconv += len(sel) - len(good)
            counts.append(len(good))
            means.append(float(np.mean(good)) if good else float("nan"))
            medians.append(float(np.median(good)) if good else float("nan"))
        finite = [(n, v) for n, v in zip(cfg.n_grid, means) if np.isfinite(v) and v > 0]
        slope = None
        if len(cfg.n_grid) >= 3 and len(finite) >= 3:
            slope = fit_loglog_slope(*zip(*finite))
        ratios = [v / e["bound"] for v, e in zip(means, envelopes) if np.isfinite(v)]
        per_mult.append(
            {
                "multiplier": mult,
                "n": list(cfg.n_grid),
                "mean_error": means,
                "median_error": medians,
                "converged_trials": counts,
                "nonconverged": nonconv,
                "slope": slope,
                "C_emp": max(ratios) if ratios else float("nan"),
                "lambda": [
                    max(mult * _base_lambda(cfg.kind, sigma, reg.L, cfg.dims, n, cfg.Cstar), cfg.lambda_floor)
                    for n in cfg.n_grid
                ],
            }
        )

    def score(s):
        vals = [v for v in s["mean_error"] if np.isfinite(v)]
        if not vals:
            return float("inf")
        return float(np.mean(np.log(np.maximum(vals, 1e-300))))

    best = min(per_mult, key=score)["multiplier"]

    extras = {"sample_size_threshold": None, "sqrt_lambda_valid": None}
    if reg.mu_defined:
        extras["sample_size_threshold"] = sample_size_threshold(reg.mu, reg.L, cfg.dims, cfg.rank, cfg.Cstar)
        if cfg.kind == "square_root":
            extras["sqrt_lambda_valid"] = {
                str(s["multiplier"]): [sqrt_lambda_validity(lam, reg.mu, cfg.dims, cfg.rank) for lam in s["lambda"]]
                for s in per_mult
            }
    extras["slope_ok"] = None
    report = RateReport(
        config=cfg.to_dict(),
        rows=rows,
        per_multiplier=per_mult,
        envelopes=envelopes,
        best_multiplier=best,
        regularity={"L": reg.L, "mu": reg.mu, "zero_position": reg.zero_position},
        extras=extras,
    )
    report.extras["slope_ok"] = report.slope_ok()
    return report


# ---------------------------------------------------------------------------
# bound verification


def _binomial_allowance(p0, trials):
    return p0 + 3.0 * math.sqrt(p0 * (1.0 - p0) / trials)


def _check(name, rows, statistic, envelope, violations, considered, allowed, passed=None, **extra):
    freq = violations / considered if considered else 0.0
    out = {
        "check": name,
        "statistic": statistic,
        "envelope": envelope,
        "violations": int(violations),
        "considered": int(considered),
        "violation_frequency": freq,
        "allowed_frequency": allowed,
        "passed": bool(freq <= allowed) if passed is None else bool(passed),
    }
    out.update(extra)
    return out, [dict(r, check=name) for r in rows]


def check_tail_bound(dist, n, trials, seed, t=None, Cstar=GAUSSIAN_CSTAR):
    """Frequency with which ``||Sigma_R||`` exceeds the ``1 - exp(-t)`` envelope."""
    dims = dist.dims
    t = math.log(dims.d) if t is None else t
    L = regularity_constants(dist).L
    bound = conc.operator_tail_bound(L, dims, n, t, Cstar)
    p = dist.pi.ravel()
    rows, norms = [], []
    for k in range(trials):
        rng = make_rng(seed, STREAM_RADEMACHER, 0, k)
        flat = rng.choice(p.size, size=n, p=p)
        eps = rng.choice(np.array([-1.0, 1.0]), size=n)
        B = np.zeros(dims.shape)
        np.add.at(B, np.divmod(flat, dims.m2), eps)
        s = conc.op_norm(B / n)
        norms.append(s)
        rows.append({"trial": k, "statistic": s, "bound": bound, "violated": s > bound})
    viol = sum(r["violated"] for r in rows)
    return _check(
        "tail_bound", rows, float(np.mean(norms)), bound, viol, trials, _binomial_allowance(math.exp(-t), trials), t=t
    )


def check_mean_norm_scaling(dist, n, trials, seed, Cstar=GAUSSIAN_CSTAR, band=(0.4, 0.6)):
    """Ratio ``E||Sigma_R||(4n) / E||Sigma_R||(n)``, expected near ``1/2``."""
    e1 = conc.estimate_mean_rademacher_norm(dist, n, trials, substream_seed(seed, STREAM_RADEMACHER, 1))
    e4 = conc.estimate_mean_rademacher_norm(dist, 4 * n, trials, substream_seed(seed, STREAM_RADEMACHER, 4))
    L = regularity_constants(dist).L
    bound, valid = conc.expected_norm_bound(L, dist.dims, n, Cstar)
    bound4, valid4 = conc.expected_norm_bound(L, dist.dims, 4 * n, Cstar)
    ratio = e4 / e1
    ok = band[0] <= ratio <= band[1]
    rows = [
        {"trial": 0, "statistic": e1, "bound": bound, "violated": e1 > bound},
        {"trial": 1, "statistic": e4, "bound": bound4, "violated": e4 > bound4},
    ]
    return _check(
        "mean_norm_scaling",
        rows,
        ratio,
        0.5,
        int(not ok),
        1,
        0.0,
        passed=ok,
        ratio_band=list(band),
        mean_norm=[e1, e4],
        mean_bound=[bound, bound4],
        bound_valid=[valid, valid4],
    )


def check_residual_concentration(dims, rank, box, noise, dist, n, trials, seed, min_frequency=0.99):
    """Frequency of ``sigma/2 <= Q(A0) <= 3 sigma/2``."""
    sigma = noise.sigma
    rows = []
    for k in range(trials):
        A0 = generate_low_rank(dims, rank, box, substream_seed(seed, STREAM_MATRIX, 0, k))
        obs = sample_observations(A0, dist, noise, n, substream_seed(seed, STREAM_OBSERVATIONS, 0, k))
        q = residual_rms(A0, obs)
        inside = sigma / 2 <= q <= 1.5 * sigma
        rows.append({"trial": k, "statistic": q, "bound": 1.5 * sigma, "violated": not inside})
    viol = sum(r["violated"] for r in rows)
    if sigma == 0:
        return _check("residual_concentration", rows, 0.0, 0.0, 0, 0, 1.0 - min_frequency, passed=True, skipped=True)
    return _check(
        "residual_concentration",
        rows,
        float(np.mean([r["statistic"] for r in rows]) / sigma),
        [0.5 * sigma, 1.5 * sigma],
        viol,
        trials,
        1.0 - min_frequency,
    )


def _cone_job(args):
    cfg, kind, mult, k = args
    dist = make_distribution(cfg)
    reg = regularity_constants(dist)
    n = cfg.n_grid[0]
    A0, obs = _draw_instance(cfg, dist, 0, n, k)
    lam = mult * _base_lambda(kind, cfg.noise.sigma, reg.L, cfg.dims, n, cfg.Cstar)
    lam = max(lam, cfg.lambda_floor)
    res = fit(obs, EstimatorConfig.from_dict({"kind": kind, "lambda": lam, "box_radius": cfg.box, **cfg.solver}))
    # realized noise term (sigma / n) sum xi_i X_i
    noise_term = conc.op_norm(obs.accumulate(obs.y - A0[obs.rows, obs.cols]) / obs.n)
    if kind == "known_variance":
        hyp = lam > 3.0 * noise_term
    else:
        q0 = residual_rms(A0, obs)
        hyp = q0 > 0 and lam > 3.0 * noise_term / q0
    ratio = conc.cone_ratio(res.estimate, A0)
    return (k,), {
        "trial": k,
        "statistic": ratio,
        "bound": CONE_LIMITS[kind],
        "violated": bool(hyp and ratio > CONE_LIMITS[kind]),
        "hypothesis": bool(hyp),
        "lambda": lam,
        "noise_norm": noise_term,
        "converged": bool(res.converged),
        "estimate_zero": not np.any(res.estimate),
    }


def check_cone_condition(cfg, kind=None, multiplier=None, min_frequency=0.95):
    """Cone ratio of solved instances where the penalty dominates the noise term.

    Limits are 5 (known variance, hypothesis ``lam > 3 ||Sigma||``) and 2
    (square root, hypothesis ``lam > 3 ||Sigma|| / Q(A0)``).
    """
    kind = kind or cfg.kind
    mult = cfg.lambda_multipliers[0] if multiplier is None else multiplier
    jobs = [(cfg, kind, mult, k) for k in range(cfg.trials)]
    rows = _map(_cone_job, jobs, cfg.workers)
    considered = [r for r in rows if r["hypothesis"]]
    viol = sum(r["violated"] for r in considered)
    ratios = [r["statistic"] for r in considered]
    return _check(
        f"cone_{kind}",
        rows,
        float(np.median(ratios)) if ratios else float("nan"),
        CONE_LIMITS[kind],
        viol,
        len(considered),
        1.0 - min_frequency,
        hypothesis_frequency=len(considered) / len(rows),
        zero_estimates=sum(r["estimate_zero"] for r in considered),
    )


def random_constraint_member(dims, r, dist, n, rng, max_tries=10000):
    """Rejection-sample a rank-``<= r`` matrix with unit max-entry in the constraint set.

    Leading term ``u v^T`` with entries of magnitude in ``[0.9, 1]`` and random
    signs, plus up to ``r - 1`` weaker terms of the same form.
    """
    for _ in range(max_tries):
        A = np.zeros(dims.shape)
        for l in range(int(r)):
            u = rng.choice([-1.0, 1.0], dims.m1) * rng.uniform(0.9, 1.0, dims.m1)
            v = rng.choice([-1.0, 1.0], dims.m2) * rng.uniform(0.9, 1.0, dims.m2)
            c = 1.0 if l == 0 else rng.uniform(0.0, 0.15)
            A += c * np.outer(u, v)
        A /= np.abs(A).max()
        if conc.in_constraint_set(A, r, dist, n):
            return A
    raise RuntimeError("no constraint-set member found; threshold too strict for this n")


def check_rsc(dist, r, n, trials, seed, mean_norm_trials=200):
    """Violation frequency of the restricted strong convexity inequality."""
    dims = dist.dims
    reg = regularity_constants(dist)
    e_norm = conc.estimate_mean_rademacher_norm(dist, n, mean_norm_trials, substream_seed(seed, STREAM_RADEMACHER, 9))
    noise = NoiseModel("gaussian", 0.0)
    rows = []
    for k in range(trials):
        rng = make_rng(seed, STREAM_MEMBERS, 0, k)
        A = random_constraint_member(dims, r, dist, n, rng)
        obs = sample_observations(np.zeros(dims.shape), dist, noise, n, substream_seed(seed, STREAM_OBSERVATIONS, 9, k))
        ok = conc.rsc_holds(A, obs, dist, r, e_norm, reg.mu)
        lhs = float(np.sum(A[obs.rows, obs.cols] ** 2) / n)
        rows.append({"trial": k, "statistic": lhs, "bound": None, "violated": not ok})
    viol = sum(r_["violated"] for r_ in rows)
    return _check(
        "rsc",
        rows,
        float(np.mean([r_["statistic"] for r_ in rows])),
        conc.RSC_CONSTANT * reg.mu * r * dims.m1 * dims.m2 * e_norm**2,
        viol,
        trials,
        _binomial_allowance(2.0 / dims.d, trials),
        mean_rademacher_norm=e_norm,
    )


@dataclass
class BoundReport:
    config: dict
    checks: list
    rows: list

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks)

    def check(self, name):
        for c in self.checks:
            if c["check"] == name:
                return c
        raise KeyError(name)

    def summary(self):
        return {"config": self.config, "checks": self.checks, "passed": self.passed}


def run_bound_verification(cfg, checks=None):
    """Run the concentration and cone checks at ``n = cfg.n_grid[0]``.

    ``checks`` selects a subset of ``("tail_bound", "mean_norm_scaling",
    "residual_concentration", "cone_known_variance", "cone_square_root",
    "rsc")``.
    """
    names = checks or (
        "tail_bound",
        "mean_norm_scaling",
        "residual_concentration",
        "cone_known_variance",
        "cone_square_root",
        "rsc",
    )
    dist = make_distribution(cfg)
    n, T, seed = cfg.n_grid[0], cfg.trials, cfg.seed
    results = []
    for name in names:
        sub = substream_seed(seed, 100, len(results))
        if name == "tail_bound":
            results.append(check_tail_bound(dist, n, T, sub, Cstar=cfg.Cstar))
        elif name == "mean_norm_scaling":
            results.append(check_mean_norm_scaling(dist, n, T, sub, Cstar=cfg.Cstar))
        elif name == "residual_concentration":
            results.append(check_residual_concentration(cfg.dims, cfg.rank, cfg.box, cfg.noise, dist, n, T, sub))
        elif name in ("cone_known_variance", "cone_square_root"):
            kind = name[len("cone_"):]
            mult = cfg.cone_multipliers.get(kind)
            results.append(check_cone_condition(replace(cfg, seed=sub), kind=kind, multiplier=mult))
        elif name == "rsc":
            results.append(check_rsc(dist, cfg.rank, n, T, sub, mean_norm_trials=T))
        else:
            raise ValueError(f"unknown check {name!r}")
    return BoundReport(cfg.to_dict(), [c for c, _ in results], [row for _, rs in results for row in rs])


# ---------------------------------------------------------------------------
# report files


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if v is None:
        return ""
    return str(v)


def _csv(rows, columns):
    buf = _io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(_csv_cell(r.get(c)) for c in columns) + "\n")
    return buf.getvalue()


def write_rate_report(report, out_dir):
    """Write ``rates.csv``, ``summary.json`` and gnuplot-ready ``rates.dat``."""
    out = Path(out_dir)
    atomic_write_text(out / "rates.csv", _csv(report.rows, ["n", "trial", "error", "converged", "lambda", "kind", "multiplier"]))
    write_json(out / "summary.json", report.summary())
    lines = ["# n " + " ".join(f"mean[{s['multiplier']:g}] median[{s['multiplier']:g}]" for s in report.per_multiplier) + " bound"]
    for i, env in enumerate(report.envelopes):
        cols = [str(env["n"])]
        for s in report.per_multiplier:
            cols += [format_float(s["mean_error"][i]), format_float(s["median_error"][i])]
        cols.append(format_float(env["bound"]))
        lines.append(" ".join(cols))
    atomic_write_text(out / "rates.dat", "\n".join(lines) + "\n")


def write_bound_report(report, out_dir):
    """Write ``bounds.csv`` (check, trial, statistic, bound, violated) and ``summary.json``."""
    out = Path(out_dir)
    atomic_write_text(out / "bounds.csv", _csv(report.rows, ["check", "trial", "statistic", "bound", "violated"]))
    write_json(out / "summary.json", report.summary())
