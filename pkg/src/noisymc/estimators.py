"""Nuclear-norm penalized estimators over the entrywise box ``|A_jk| <= a``.

Two programs are solved, both over ``{A : max |A_jk| <= a}``:

* ``known_variance``::

      minimize  (1/n) sum_i (Y_i - A[j_i, k_i])^2 + lam * ||A||_*

* ``square_root``::

      minimize  sqrt((1/n) sum_i (Y_i - A[j_i, k_i])^2) + lam * ||A||_*

The solver is a monotone accelerated proximal-gradient method (MFISTA). Its
backward step is the joint proximal map of ``tau * ||.||_*`` plus the box
indicator, evaluated with a Dykstra-like alternation between singular value
thresholding and entrywise clipping.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

__all__ = [
    "ESTIMATOR_KINDS",
    "EstimatorConfig",
    "SolveResult",
    "nuclear_norm",
    "svt",
    "project_inf_ball",
    "prox_box_nuclear",
    "lambda_known_variance",
    "lambda_sqrt",
    "sqrt_lambda_validity",
    "residual_rms",
    "smooth_value_and_grad",
    "objective",
    "fit",
    "kkt_residual",
]

ESTIMATOR_KINDS = ("known_variance", "square_root")

# C* for standard Gaussian noise.
GAUSSIAN_CSTAR = 6.5


@dataclass(frozen=True)
class EstimatorConfig:
    """Solver settings.

    ``lam`` is the penalty level (``"lambda"`` in JSON configs) and
    ``box_radius`` the bound ``a`` on ``max |A_jk|``. ``box_radius=inf``
    removes the box.
    """

    kind: str
    lam: float
    box_radius: float
    max_iters: int = 5000
    grad_tol: float = 1e-6
    dykstra_iters: int = 20
    dykstra_tol: float = 1e-10
    sqrt_guard_eps: float = 1e-12

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}; expected one of {ESTIMATOR_KINDS}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam!r}")
        if not self.box_radius > 0:
            raise ValueError(f"box_radius must be > 0, got {self.box_radius!r}")
        if not self.sqrt_guard_eps > 0:
            raise ValueError(f"sqrt_guard_eps must be > 0, got {self.sqrt_guard_eps!r}")
        if int(self.max_iters) < 1 or int(self.dykstra_iters) < 1:
            raise ValueError("max_iters and dykstra_iters must be >= 1")

    def to_dict(self):
        return {
            "kind": self.kind,
            "lambda": self.lam,
            "box_radius": self.box_radius,
            "max_iters": self.max_iters,
            "grad_tol": self.grad_tol,
            "dykstra_iters": self.dykstra_iters,
            "dykstra_tol": self.dykstra_tol,
            "sqrt_guard_eps": self.sqrt_guard_eps,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown estimator config field(s): {sorted(unknown)}")
        return cls(**d)


@dataclass
class SolveResult:
    estimate: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool
    objective_trace: List[float] = field(default_factory=list)
    guard_engaged: bool = False
    prox_unconverged: int = 0

    def to_dict(self):
        """Scalars only; the estimate is written separately as a matrix file."""
        return {
            "objective": self.objective,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "converged": self.converged,
            "guard_engaged": self.guard_engaged,
            "prox_unconverged": self.prox_unconverged,
            "objective_trace": list(self.objective_trace),
        }


def nuclear_norm(A):
    return float(np.linalg.svd(A, compute_uv=False).sum())


def svt(A, tau):
    """Singular value thresholding ``U max(S - tau, 0) V^T``."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau!r}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (U[:, :k] * s[:k]) @ Vt[:k]


def project_inf_ball(A, a):
    """Entrywise clamp to ``[-a, a]``."""
    if not a > 0:
        raise ValueError(f"a must be > 0, got {a!r}")
    return np.clip(A, -a, a)


def prox_box_nuclear(A, tau, a, iters=20, tol=1e-10, return_info=False):
    """Proximal map of ``tau * ||.||_*`` restricted to ``max |X_jk| <= a``.

    Solves ``argmin_{|X|_inf <= a} 0.5 ||X - A||_F^2 + tau ||X||_*`` with the
    Dykstra-like splitting of Combettes and Pesquet. The returned iterate is
    always the output of the clipping step, hence feasible.

    With ``return_info=True`` also returns ``(rounds, converged)``.
    """
    A = np.asarray(A, dtype=float)
    x = A
    p = np.zeros_like(A)
    q = np.zeros_like(A)
    converged = False
    rounds = 0
    for rounds in range(1, int(iters) + 1):
        y = svt(x + p, tau)
        p = x + p - y
        x_new = np.clip(y + q, -a, a)
        q = y + q - x_new
        delta = np.linalg.norm(x_new - x)
        x = x_new
        if delta < tol:
            converged = True
            break
    if return_info:
        return x, (rounds, converged)
    return x


def lambda_known_variance(sigma, L, dims, n, Cstar=GAUSSIAN_CSTAR):
    """Penalty ``3 C* sigma sqrt(2 L log(d) / (m n))`` for the known-variance program."""
    return 3.0 * Cstar * sigma * math.sqrt(2.0 * L * math.log(dims.d) / (dims.m * n))


def lambda_sqrt(L, dims, n, Cstar=GAUSSIAN_CSTAR):
    """Penalty ``6 C* sqrt(2 L log(d) / (m n))`` for the square-root program.

    Does not involve the noise level.
    """
    return 6.0 * Cstar * math.sqrt(2.0 * L * math.log(dims.d) / (dims.m * n))


def sqrt_lambda_validity(lam, mu, dims, r):
    """Whether ``lam <= sqrt(rho)`` with ``rho = 1 / (16 mu m1 m2 r)``."""
    rho = 1.0 / (16.0 * mu * dims.m1 * dims.m2 * r)
    return lam <= math.sqrt(rho)


def residual_rms(A, obs):
    """Root-mean-square residual ``Q(A) = sqrt((1/n) sum (Y_i - A[j_i, k_i])^2)``."""
    A = obs.dims.check(A)
    r = obs.y - A[obs.rows, obs.cols]
    return float(math.sqrt(np.dot(r, r) / obs.n))


def smooth_value_and_grad(A, obs, kind, guard_eps=1e-12):
    """Data term and its gradient.

    Returns ``(value, grad, guarded)``; ``guarded`` is True when the
    square-root term had ``Q < guard_eps`` and the gradient used the floor.
    """
    r = obs.y - A[obs.rows, obs.cols]
    mse = float(np.dot(r, r)) / obs.n
    if kind == "known_variance":
        return mse, obs.accumulate(r) * (-2.0 / obs.n), False
    Q = math.sqrt(mse)
    guarded = Q < guard_eps
    return Q, obs.accumulate(r) * (-1.0 / (obs.n * max(Q, guard_eps))), guarded


def objective(A, obs, kind, lam):
    value, _, _ = smooth_value_and_grad(A, obs, kind)
    return value + lam * nuclear_norm(A)


class _Problem:
    """Cached per-fit quantities."""

    def __init__(self, obs, cfg):
        self.obs = obs
        self.cfg = cfg
        self.max_count = float(obs.counts().max())

    def value_grad(self, A):
        return smooth_value_and_grad(A, self.obs, self.cfg.kind, self.cfg.sqrt_guard_eps)

    def step(self, value):
        # 1 / local Lipschitz constant of the data-term gradient
        n = self.obs.n
        if self.cfg.kind == "known_variance":
            return n / (2.0 * self.max_count)
        return n * max(value, self.cfg.sqrt_guard_eps) / self.max_count

    def prox(self, A, tau, iters=None):
        cfg = self.cfg
        return prox_box_nuclear(
            A, tau, cfg.box_radius, iters=iters or cfg.dykstra_iters, tol=cfg.dykstra_tol, return_info=True
        )


def _kkt(prob, A, lam, prox_iters=None):
    value, grad, _ = prob.value_grad(A)
    step = prob.step(value)
    P, _ = prob.prox(A - step * grad, step * lam, prox_iters)
    return float(np.linalg.norm(A - P) / (1.0 + np.linalg.norm(A)))


def kkt_residual(A, obs, cfg, lam=None):
    """Scaled fixed-point residual of the proximal-gradient map.

    ``||A - prox(A - step * grad f(A), step * lam, a)||_F / (1 + ||A||_F)``,
    zero exactly at minimizers. ``lam`` overrides ``cfg.lam`` (``0`` is
    allowed here, giving the constrained least-squares certificate).
    """
    A = obs.dims.check(A)
    lam = cfg.lam if lam is None else lam
    return _kkt(_Problem(obs, cfg), A, lam, prox_iters=max(cfg.dykstra_iters, 200))


def fit(obs, cfg, init=None):
    """Minimize the configured program with monotone FISTA.

    Starts from the zero matrix unless ``init`` is given. Stops when the
    scaled proximal-gradient residual drops below ``cfg.grad_tol`` or after
    ``cfg.max_iters`` iterations.
    """
    prob = _Problem(obs, cfg)
    lam = cfg.lam
    a = cfg.box_radius
    x = np.zeros(obs.dims.shape) if init is None else np.clip(obs.dims.check(init), -a, a)

    fx_smooth, _, _ = prob.value_grad(x)
    Fx = fx_smooth + lam * nuclear_norm(x)
    trace = [Fx]
    y = x.copy()
    t = 1.0
    guard = False
    prox_unconverged = 0
    converged = False
    kkt = float("inf")
    it = 0

    for it in range(1, int(cfg.max_iters) + 1):
        fy, gy, guarded = prob.value_grad(y)
        guard = guard or guarded
        step = prob.step(fy)
        while True:
            z, (_, ok) = prob.prox(y - step * gy, step * lam)
            if cfg.kind == "known_variance":
                break
            # the square-root term has no global Lipschitz gradient; backtrack
            fz, _, _ = prob.value_grad(z)
            dz = z - y
            if fz <= fy + np.vdot(gy, dz) + np.vdot(dz, dz) / (2.0 * step) + 1e-15 * max(1.0, fy):
                break
            step *= 0.5
            if step < 1e-14:
                break
        prox_unconverged += not ok

        Fz = prob.value_grad(z)[0] + lam * nuclear_norm(z)
        x_prev = x
        if Fz <= Fx:
            x, Fx = z, Fz
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y_res = np.linalg.norm(y - z) / (1.0 + np.linalg.norm(y))
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        trace.append(Fx)

        # y_res is the residual at the extrapolated point; confirm at x
        if y_res <= cfg.grad_tol:
            kkt = _kkt(prob, x, lam)
            if kkt <= cfg.grad_tol:
                converged = True
                break

    if not converged:
        kkt = _kkt(prob, x, lam)
        converged = kkt <= cfg.grad_tol

    return SolveResult(
        estimate=x,
        objective=float(Fx),
        iterations=it,
        kkt_residual=kkt,
        converged=converged,
        objective_trace=trace,
        guard_engaged=guard,
        prox_unconverged=int(prox_unconverged),
    )
