"""Sampling model for noisy matrix completion.

Observations follow the trace-regression model

.. math::

    Y_i = \\langle X_i, A_0 \\rangle + \\sigma \\xi_i, \\qquad i = 1, \\dots, n,

where each design matrix :math:`X_i = e_{j_i} e_{k_i}^T` picks a single entry
of :math:`A_0` and positions :math:`(j_i, k_i)` are drawn i.i.d. (with
replacement) from a probability table :math:`\\pi` over the grid.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .rng import make_rng

__all__ = [
    "InvalidDistributionError",
    "MatrixDims",
    "SamplingDistribution",
    "RegularityConstants",
    "NoiseModel",
    "ObservationSet",
    "build_distribution",
    "regularity_constants",
    "pi_norm_sq",
    "generate_low_rank",
    "sample_observations",
    "apply_observation_operator",
]

NOISE_KINDS = ("gaussian", "sub_exponential", "rademacher")


class InvalidDistributionError(ValueError):
    """Raised for a sampling table that cannot be normalized."""


def _frozen(arr, dtype=float):
    arr = np.array(arr, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MatrixDims:
    """Shape ``m1 x m2`` of the unknown matrix."""

    m1: int
    m2: int

    def __post_init__(self):
        for name in ("m1", "m2"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    @property
    def M(self) -> int:
        return max(self.m1, self.m2)

    @property
    def m(self) -> int:
        return min(self.m1, self.m2)

    @property
    def d(self) -> int:
        return self.m1 + self.m2

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.m1, self.m2)

    def check(self, A, what="matrix"):
        A = np.asarray(A, dtype=float)
        if A.shape != self.shape:
            raise ValueError(f"{what} has shape {A.shape}, expected {self.shape}")
        return A


@dataclass(frozen=True, eq=False)
class SamplingDistribution:
    """Probability table ``pi[j, k]`` of observing entry ``(j, k)``.

    Row marginals ``R_j = sum_k pi[j, k]`` and column marginals
    ``C_k = sum_j pi[j, k]`` are computed once at construction.
    """

    dims: MatrixDims
    pi: np.ndarray
    row_marginals: np.ndarray = field(init=False)
    col_marginals: np.ndarray = field(init=False)

    def __post_init__(self):
        pi = _frozen(self.pi)
        if pi.shape != self.dims.shape:
            raise ValueError(f"table has shape {pi.shape}, expected {self.dims.shape}")
        if not np.all(np.isfinite(pi)) or np.any(pi < 0):
            raise InvalidDistributionError("probabilities must be finite and nonnegative")
        if abs(pi.sum() - 1.0) > 1e-12:
            raise InvalidDistributionError(f"probabilities sum to {pi.sum()!r}, not 1")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "row_marginals", _frozen(pi.sum(axis=1)))
        object.__setattr__(self, "col_marginals", _frozen(pi.sum(axis=0)))

    @property
    def max_marginal(self) -> float:
        return float(max(self.row_marginals.max(), self.col_marginals.max()))


@dataclass(frozen=True)
class RegularityConstants:
    """Tightest ``L`` (no over-sampled row or column) and ``mu`` (minimum cell mass).

    When some cell has zero probability ``mu`` is ``inf`` and ``zero_position``
    holds the first such cell in row-major order.
    """

    L: float
    mu: float
    zero_position: Optional[Tuple[int, int]] = None

    @property
    def mu_defined(self) -> bool:
        return self.zero_position is None


@dataclass(frozen=True)
class NoiseModel:
    """Noise ``sigma * xi`` with ``xi`` standardized to mean 0, variance 1.

    ``sub_exponential`` is a Laplace law with scale ``1/sqrt(2)``.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    orlicz_K: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma!r}")
        if not self.orlicz_K > 0:
            raise ValueError(f"orlicz_K must be > 0, got {self.orlicz_K!r}")
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "orlicz_K", float(self.orlicz_K))

    def standardized(self, rng, size):
        """Draw ``size`` standardized noise variables ``xi``."""
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "sub_exponential":
            return rng.laplace(0.0, 1.0 / np.sqrt(2.0), size)
        return rng.choice(np.array([-1.0, 1.0]), size=size)


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """``n`` sampled positions with their noisy responses.

    ``rows[i], cols[i]`` is the position of observation ``i`` (zero-based) and
    ``y[i]`` its response. Positions may repeat.
    """

    dims: MatrixDims
    rows: np.ndarray
    cols: np.ndarray
    y: np.ndarray
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: Optional[int] = None

    def __post_init__(self):
        rows = _frozen(self.rows, dtype=np.int64).ravel()
        cols = _frozen(self.cols, dtype=np.int64).ravel()
        y = _frozen(self.y).ravel()
        if not (len(rows) == len(cols) == len(y)):
            raise ValueError("rows, cols and y must have equal length")
        if len(y) < 1:
            raise ValueError("an observation set needs at least one observation")
        if rows.min() < 0 or rows.max() >= self.dims.m1 or cols.min() < 0 or cols.max() >= self.dims.m2:
            raise ValueError("observation position out of bounds")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def positions(self) -> np.ndarray:
        return np.column_stack([self.rows, self.cols])

    def counts(self) -> np.ndarray:
        """Number of times each cell was observed."""
        W = np.zeros(self.dims.shape)
        np.add.at(W, (self.rows, self.cols), 1.0)
        return W

    def accumulate(self, values) -> np.ndarray:
        """Scatter-add ``values[i]`` into cell ``(rows[i], cols[i])``."""
        B = np.zeros(self.dims.shape)
        np.add.at(B, (self.rows, self.cols), values)
        return B

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.noise == other.noise
            and self.seed == other.seed
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.y, other.y)
        )


def build_distribution(dims, kind="uniform", row_weights=None, col_weights=None, table=None):
    """Build a normalized sampling distribution.

    Parameters
    ----------
    dims : MatrixDims
    kind : {"uniform", "product", "explicit"}
        ``product`` uses the outer product of normalized ``row_weights`` and
        ``col_weights``; ``explicit`` normalizes ``table``.

    Raises
    ------
    InvalidDistributionError
        Negative weights or zero total mass.
    ValueError
        Weights or table of the wrong size.
    """
    if kind == "uniform":
        raw = np.ones(dims.shape)
    elif kind == "product":
        r = np.asarray(row_weights, dtype=float).ravel()
        c = np.asarray(col_weights, dtype=float).ravel()
        if r.shape != (dims.m1,) or c.shape != (dims.m2,):
            raise ValueError(
                f"product weights need lengths ({dims.m1}, {dims.m2}), got ({r.size}, {c.size})"
            )
        for w in (r, c):
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise InvalidDistributionError("weights must be finite and nonnegative")
            if w.sum() <= 0:
                raise InvalidDistributionError("weights have zero total mass")
        raw = np.outer(r / r.sum(), c / c.sum())
    elif kind == "explicit":
        raw = np.asarray(table, dtype=float)
        if raw.shape != dims.shape:
            raise ValueError(f"table has shape {raw.shape}, expected {dims.shape}")
    else:
        raise ValueError(f"unknown distribution kind {kind!r}")

    if np.any(raw < 0) or not np.all(np.isfinite(raw)):
        raise InvalidDistributionError("weights must be finite and nonnegative")
    total = raw.sum()
    if total <= 0:
        raise InvalidDistributionError("weights have zero total mass")
    return SamplingDistribution(dims, raw / total)


def regularity_constants(dist):
    """Tightest constants ``L`` and ``mu`` for ``dist``.

    ``L = m * max(R_j, C_k)`` and ``mu = 1 / (m1 * m2 * min pi)``.
    """
    dims = dist.dims
    L = dims.m * dist.max_marginal
    pmin = dist.pi.min()
    if pmin <= 0:
        j, k = np.unravel_index(int(np.argmin(dist.pi)), dims.shape)
        return RegularityConstants(L=float(L), mu=float("inf"), zero_position=(int(j), int(k)))
    return RegularityConstants(L=float(L), mu=float(1.0 / (dims.m1 * dims.m2 * pmin)))


def pi_norm_sq(A, dist):
    """Squared ``L2(Pi)`` norm, ``E <A, X>^2 = sum_jk pi_jk A_jk^2``."""
    A = dist.dims.check(A)
    return float(np.sum(dist.pi * A * A))


def generate_low_rank(dims, r, a, seed):
    """Random rank-``r`` matrix with ``max |A_jk| = a``.

    Gaussian factors ``U V`` rescaled so the largest entry sits on the box
    boundary.
    """
    r = int(r)
    if r < 1 or r > dims.m:
        raise ValueError(f"rank must satisfy 1 <= r <= min(m1, m2) = {dims.m}, got {r}")
    if not a > 0:
        raise ValueError(f"box radius a must be positive, got {a!r}")
    rng = make_rng(seed)
    A = rng.standard_normal((dims.m1, r)) @ rng.standard_normal((r, dims.m2))
    A *= a / np.abs(A).max()
    return np.clip(A, -a, a)


def sample_observations(A0, dist, noise, n, seed):
    """Draw ``n`` i.i.d. positions from ``dist`` and noisy responses.

    The result is a pure function of the arguments.
    """
    A0 = dist.dims.check(A0, "A0")
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = make_rng(seed)
    flat = rng.choice(A0.size, size=n, p=dist.pi.ravel())
    rows, cols = np.divmod(flat, dist.dims.m2)
    xi = noise.standardized(rng, n)
    y = A0[rows, cols] + noise.sigma * xi
    return ObservationSet(dist.dims, rows, cols, y, noise=noise, seed=int(seed))


def apply_observation_operator(A, obs):
    """Vector of sampled entries ``A[j_i, k_i]``."""
    A = obs.dims.check(A)
    return A[obs.rows, obs.cols]
