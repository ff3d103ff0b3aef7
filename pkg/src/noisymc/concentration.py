"""Stochastic terms, their concentration envelopes, and error-geometry diagnostics.

The two random matrices driving the analysis are

* the noise term ``Sigma = (sigma / n) sum_i xi_i X_i``, and
* the Rademacher term ``Sigma_R = (1 / n) sum_i eps_i X_i``.

Their operator norms are compared with matrix-Bernstein envelopes. The
diagnostics at the bottom (tangent-space projectors, cone ratio, constraint
set membership, restricted strong convexity) evaluate the deterministic
conditions that link those norms to the estimation error.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .rng import make_rng
from .sampling import apply_observation_operator, pi_norm_sq

__all__ = [
    "StochasticTerm",
    "BernsteinParams",
    "Projectors",
    "stochastic_term",
    "op_norm",
    "operator_tail_bound",
    "tail_bound_crossover",
    "expected_norm_bound",
    "bernstein_params",
    "bernstein_tail",
    "rademacher_term",
    "estimate_mean_rademacher_norm",
    "tangent_projectors",
    "cone_ratio",
    "in_constraint_set",
    "constraint_set_threshold",
    "rsc_holds",
    "RSC_CONSTANT",
]

# Constant multiplying mu r m1 m2 (E||Sigma_R||)^2 in the restricted strong convexity bound.
RSC_CONSTANT = 44.0
_DENSE_BELOW = 64


@dataclass(frozen=True, eq=False)
class StochasticTerm:
    matrix: np.ndarray
    op_norm: float
    kind: str  # "sigma" or "sigma_R"


@dataclass(frozen=True)
class BernsteinParams:
    sigma_Z: float
    U: float


class Projectors(NamedTuple):
    """Projection onto the tangent space of a matrix and onto its complement."""

    P: Callable[[np.ndarray], np.ndarray]
    P_perp: Callable[[np.ndarray], np.ndarray]
    rank: int


def op_norm(A, tol=1e-10, max_iter=20000):
    """Largest singular value.

    Dense SVD for matrices smaller than 64 x 64, otherwise power iteration
    on ``A^T A`` stopped once the eigen-residual falls below ``tol`` times the
    Rayleigh quotient.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    if max(A.shape) < _DENSE_BELOW:
        return float(np.linalg.svd(A, compute_uv=False)[0])

    G = A.T @ A if A.shape[0] >= A.shape[1] else A @ A.T
    # deterministic start with nonzero overlap on the top eigenvector
    v = G.sum(axis=1) + np.linspace(1.0, 2.0, G.shape[0])
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    v /= nv
    theta = 0.0
    for _ in range(max_iter):
        w = G @ v
        theta = float(v @ w)
        if theta <= 0:
            return 0.0
        if np.linalg.norm(w - theta * v) <= tol * theta:
            break
        v = w / np.linalg.norm(w)
    return math.sqrt(theta)


def stochastic_term(obs, weights, scale, kind="sigma"):
    """``(scale / n) sum_i weights_i X_i``; repeated positions add up."""
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape != (obs.n,):
        raise ValueError(f"expected {obs.n} weights, got {weights.size}")
    B = obs.accumulate(weights) * (scale / obs.n)
    return StochasticTerm(B, op_norm(B), kind)


def rademacher_term(obs, rng):
    """``Sigma_R`` for ``obs`` with fresh Rademacher signs from ``rng``."""
    eps = rng.choice(np.array([-1.0, 1.0]), size=obs.n)
    return stochastic_term(obs, eps, 1.0, kind="sigma_R")


def operator_tail_bound(L, dims, n, t=None, Cstar=6.5):
    """High-probability envelope for ``||(1/n) sum zeta_i X_i||``.

    ``Cstar * max(sqrt(L (t + log d) / (m n)), log(m) (t + log d) / n)``,
    holding with probability at least ``1 - exp(-t)``. Default ``t = log d``.
    """
    logd = math.log(dims.d)
    if t is None:
        t = logd
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t!r}")
    s = t + logd
    return Cstar * max(math.sqrt(L * s / (dims.m * n)), math.log(dims.m) * s / n)


def tail_bound_crossover(L, dims, t=None):
    """Sample size where both branches of :func:`operator_tail_bound` are equal.

    Above it the square-root branch is the larger one.
    """
    logd = math.log(dims.d)
    if t is None:
        t = logd
    return math.log(dims.m) ** 2 * (t + logd) * dims.m / L


def expected_norm_bound(L, dims, n, Cstar=6.5):
    """Bound ``Cstar sqrt(2 e L log(d) / (n m))`` on ``E||(1/n) sum zeta_i X_i||``.

    Returns ``(bound, valid)`` where ``valid`` says whether
    ``n >= m log(d)^3 / L``, the range in which the bound is proven.
    """
    logd = math.log(dims.d)
    bound = Cstar * math.sqrt(2.0 * math.e * L * logd / (n * dims.m))
    return bound, n >= dims.m * logd**3 / L


def bernstein_params(dist, noise_U=1.0):
    """Matrix-Bernstein variance and Orlicz parameters for ``Z_i = zeta_i X_i``.

    ``E(Z Z^T) = diag(R)`` and ``E(Z^T Z) = diag(C)``, so ``sigma_Z`` is the
    square root of the largest marginal.
    """
    return BernsteinParams(sigma_Z=math.sqrt(dist.max_marginal), U=float(noise_U))


def bernstein_tail(sigma_Z, U, dims, n, t, cstar=1.0):
    """Matrix-Bernstein envelope for ``||(1/n) sum Z_i||``.

    ``cstar * max(sigma_Z sqrt((t + log d) / n), U log(U / sigma_Z) (t + log d) / n)``.
    The log factor is clamped below at 1; returns ``(value, clamped)``.
    """
    if not t > 0:
        raise ValueError(f"t must be > 0, got {t!r}")
    if not (sigma_Z > 0 and U > 0):
        raise ValueError("sigma_Z and U must be positive")
    s = t + math.log(dims.d)
    logfac = math.log(U / sigma_Z)
    clamped = logfac < 1.0
    if clamped:
        logfac = 1.0
    return cstar * max(sigma_Z * math.sqrt(s / n), U * logfac * s / n), clamped


def estimate_mean_rademacher_norm(dist, n, trials, seed):
    """Monte Carlo estimate of ``E||Sigma_R||``.

    Each trial draws fresh positions from ``dist`` and fresh signs from
    substream ``trial`` of ``seed``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    norms = np.empty(int(trials))
    p = dist.pi.ravel()
    m2 = dist.dims.m2
    for k in range(int(trials)):
        rng = make_rng(seed, k)
        flat = rng.choice(p.size, size=n, p=p)
        eps = rng.choice(np.array([-1.0, 1.0]), size=n)
        B = np.zeros(dist.dims.shape)
        np.add.at(B, np.divmod(flat, m2), eps)
        norms[k] = op_norm(B / n)
    return float(norms.mean())


def tangent_projectors(A, rank_tol=1e-8):
    """Projectors onto the tangent space at ``A`` and its orthogonal complement.

    ``P_perp(B) = (I - U U^T) B (I - V V^T)`` with ``U, V`` spanning the
    column and row spaces of ``A``; ``P(B) = B - P_perp(B)``. The rank is
    the number of singular values above ``rank_tol * sigma_1``.
    """
    A = np.asarray(A, dtype=float)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    k = 0 if s.size == 0 or s[0] == 0 else int(np.count_nonzero(s > rank_tol * s[0]))
    U = U[:, :k]
    V = Vt[:k].T

    def P_perp(B):
        B = np.asarray(B, dtype=float)
        left = B - U @ (U.T @ B)
        return left - (left @ V) @ V.T

    def P(B):
        B = np.asarray(B, dtype=float)
        return B - P_perp(B)

    return Projectors(P, P_perp, k)


def cone_ratio(A_hat, A0, rank_tol=1e-8):
    """``||P_perp(D)||_* / ||P(D)||_*`` for ``D = A_hat - A0``, projectors at ``A0``.

    ``0`` for ``D = 0`` and ``inf`` when only the complement part is nonzero.
    """
    D = np.asarray(A_hat, dtype=float) - np.asarray(A0, dtype=float)
    if not np.any(D):
        return 0.0
    proj = tangent_projectors(A0, rank_tol)
    num = np.linalg.svd(proj.P_perp(D), compute_uv=False).sum()
    den = np.linalg.svd(proj.P(D), compute_uv=False).sum()
    scale = np.linalg.svd(D, compute_uv=False).sum()
    # round-off floor for "vanishing" parts
    eps = 1e-12 * scale
    if num <= eps:
        return 0.0
    if den <= eps:
        return float("inf")
    return float(num / den)


def constraint_set_threshold(dims, n):
    """Lower bound ``sqrt(64 log d / (log(6/5) n))`` on ``||A||^2_{L2(Pi)}``."""
    return math.sqrt(64.0 * math.log(dims.d) / (math.log(6.0 / 5.0) * n))


def in_constraint_set(A, r, dist, n, rtol=1e-10):
    """Whether ``A / ||A||_inf`` lies in the restricted set used for strong convexity.

    The normalized matrix must have ``||A||^2_{L2(Pi)}`` at least
    :func:`constraint_set_threshold` and ``||A||_* <= sqrt(r) ||A||_F``; the
    latter is checked with relative slack ``rtol`` so exact rank-``r``
    matrices are not rejected on round-off.
    """
    A = dist.dims.check(A)
    amax = np.abs(A).max()
    if amax == 0:
        raise ValueError("A must be nonzero")
    A = A / amax
    if pi_norm_sq(A, dist) < constraint_set_threshold(dist.dims, n):
        return False
    nuc = np.linalg.svd(A, compute_uv=False).sum()
    return bool(nuc <= math.sqrt(r) * np.linalg.norm(A) * (1.0 + rtol))


def rsc_holds(A, obs, dist, r, mean_rademacher_norm, mu):
    """Evaluate the restricted strong convexity inequality at ``A``.

    ``(1/n) ||Omega(A)||^2 >= 0.5 ||A||^2_{L2(Pi)} - 44 mu r m1 m2 (E||Sigma_R||)^2``.
    ``A`` is expected to be a member of the constraint set.
    """
    v = apply_observation_operator(A, obs)
    lhs = float(v @ v) / obs.n
    dims = obs.dims
    rhs = 0.5 * pi_norm_sq(A, dist) - RSC_CONSTANT * mu * r * dims.m1 * dims.m2 * mean_rademacher_norm**2
    return lhs >= rhs
