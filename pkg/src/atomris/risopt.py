"""RIS phase-shift optimization.

The optimizer minimizes J(theta) = || Im(H_eq(theta)) ||_F^2 over the RIS
phases, where H_eq = h_rv diag(e^{j theta}) h_ur + h_uv.  Writing
V_n = h_rv[:, n] outer h_ur[n, :], the imaginary residual decomposes as

    Q = Im(h_uv) + sum_n (cos(theta_n) Im(V_n) + sin(theta_n) Re(V_n))

so J = sum(Q^2) and each objective/gradient evaluation costs O(N M K).
The analytic gradient is

    dJ/dtheta_n = 2 sum_{m,k} Q_{m,k} (cos(theta_n) Re(V_n) - sin(theta_n) Im(V_n))_{m,k}

which finite differences confirm (see tests); note the bracket is the
derivative of the cos/sin expansion above, i.e. descent steps use
theta <- theta - eta * step.

Minimizing J on channels whose rows have been de-phased by the LO
(multiply h_rv and h_uv by exp(-j angle(b)) row-wise) aligns the effective
channel with the LO instead of making it real; that variant is what the
detection pipeline consumes and what ``signal_domain_objective`` scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, effective_channel
from .errors import BudgetExceededError, SingularMatrixError

__all__ = [
    "AdamConfig",
    "ConvergenceTrace",
    "RankOneCache",
    "build_rank_one_cache",
    "objective",
    "gradient",
    "objective_and_gradient",
    "adam_optimize",
    "multistart_adam",
    "brute_force_phases",
    "signal_domain_objective",
    "recover_phi_from_chi",
    "canonicalize_phases",
    "gradient_op_count",
]


@dataclass(frozen=True)
class AdamConfig:
    """Hyperparameters of the momentum gradient-descent loop.

    Defaults: 100 iterations, step 0.05, beta1 0.9, beta2 0.999,
    epsilon 1e-5.  ``grad_tol`` enables an optional early stop on the
    gradient infinity norm (off by default: the loop runs a fixed number
    of iterations).
    """

    max_iters: int = 100
    step: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-5
    grad_tol: float | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step <= 0:
            raise ValueError("step must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class ConvergenceTrace:
    """Objective and gradient-norm history, one entry per gradient
    evaluation (the first entry is the initial point)."""

    objective: np.ndarray
    grad_norm: np.ndarray

    def __len__(self) -> int:
        return self.objective.size


@dataclass(frozen=True)
class RankOneCache:
    """Stacked rank-one terms V_n = h_rv[:, n] outer h_ur[n, :].

    ``outer`` has shape (N, M, K); the flattened real and imaginary parts
    are kept contiguous for the BLAS-backed objective/gradient kernels.
    """

    outer: np.ndarray
    _re_flat: np.ndarray = field(repr=False, compare=False, default=None)
    _im_flat: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        n, m, k = self.outer.shape
        object.__setattr__(self, "_re_flat", np.ascontiguousarray(self.outer.real.reshape(n, m * k)))
        object.__setattr__(self, "_im_flat", np.ascontiguousarray(self.outer.imag.reshape(n, m * k)))

    @property
    def num_elements(self) -> int:
        return self.outer.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.outer.shape


def build_rank_one_cache(ch: ChannelSet) -> RankOneCache:
    """Precompute all N rank-one products from a channel set."""
    outer = ch.h_rv.T[:, :, None] * ch.h_ur[:, None, :]
    return RankOneCache(outer=outer)


def _check_shapes(theta: np.ndarray, cache: RankOneCache, h_uv: np.ndarray) -> None:
    n, m, k = cache.shape
    if theta.shape != (n,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({n},)")
    if h_uv.shape != (m, k):
        raise ValueError(f"h_uv has shape {h_uv.shape}, expected ({m}, {k})")


def _imag_residual(theta, cache: RankOneCache, h_uv) -> np.ndarray:
    """The M x K matrix Q of imaginary parts of the effective channel."""
    q = h_uv.imag.reshape(-1).copy()
    if cache.num_elements:
        q += np.cos(theta) @ cache._im_flat
        q += np.sin(theta) @ cache._re_flat
    return q


def objective(theta: np.ndarray, cache: RankOneCache, h_uv: np.ndarray) -> float:
    """J(theta) = squared Frobenius norm of Im(H_eq)."""
    theta = np.asarray(theta, dtype=float)
    h_uv = np.asarray(h_uv, dtype=complex)
    _check_shapes(theta, cache, h_uv)
    q = _imag_residual(theta, cache, h_uv)
    return float(q @ q)


def gradient(theta: np.ndarray, cache: RankOneCache, h_uv: np.ndarray) -> np.ndarray:
    """Analytic gradient dJ/dtheta (length N)."""
    return objective_and_gradient(theta, cache, h_uv)[1]


def objective_and_gradient(
    theta: np.ndarray, cache: RankOneCache, h_uv: np.ndarray
) -> tuple[float, np.ndarray]:
    """Evaluate J and its gradient in one pass (one gradient evaluation)."""
    theta = np.asarray(theta, dtype=float)
    h_uv = np.asarray(h_uv, dtype=complex)
    _check_shapes(theta, cache, h_uv)
    if cache.num_elements == 0:
        q = h_uv.imag.reshape(-1)
        return float(q @ q), np.zeros(0)
    cos_t = np.cos(theta)
    sin_t = np.sin(theta)
    q = h_uv.imag.reshape(-1) + cos_t @ cache._im_flat + sin_t @ cache._re_flat
    proj_im = cache._im_flat @ q
    proj_re = cache._re_flat @ q
    grad = 2.0 * (cos_t * proj_re - sin_t * proj_im)
    return float(q @ q), grad


def gradient_op_count(cache: RankOneCache) -> int:
    """Multiply-add count of one objective_and_gradient call, derived from
    the cached array sizes (4 length-MK contractions over N plus the
    elementwise trigonometry and combination work)."""
    n, m, k = cache.shape
    return 8 * n * m * k + 6 * n + 2 * m * k


def canonicalize_phases(theta: np.ndarray) -> np.ndarray:
    """Wrap phases into [0, 2pi)."""
    return np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)


def adam_optimize(
    cache: RankOneCache,
    h_uv: np.ndarray,
    cfg: AdamConfig,
    rng: np.random.Generator,
    theta0: np.ndarray | None = None,
) -> tuple[np.ndarray, ConvergenceTrace]:
    """Momentum gradient descent with bias-corrected first/second moments.

    The initial phases are uniform on [0, 2pi) from ``rng`` unless
    ``theta0`` is given.  Exactly ``cfg.max_iters`` gradient evaluations
    are performed (unless ``grad_tol`` stops the loop early); the trace
    records J and ||grad||_2 at each evaluated point.
    """
    n = cache.num_elements
    if theta0 is None:
        theta = rng.uniform(0.0, 2.0 * np.pi, n)
    else:
        theta = np.array(theta0, dtype=float, copy=True)
        if theta.shape != (n,):
            raise ValueError(f"theta0 has shape {theta.shape}, expected ({n},)")
    m = np.zeros(n)
    v = np.zeros(n)
    obj_hist = np.empty(cfg.max_iters)
    gnorm_hist = np.empty(cfg.max_iters)
    evals = 0
    for it in range(1, cfg.max_iters + 1):
        j_val, g = objective_and_gradient(theta, cache, h_uv)
        obj_hist[evals] = j_val
        gnorm_hist[evals] = np.linalg.norm(g)
        evals += 1
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * (g * g)
        m_hat = m / (1.0 - cfg.beta1**it)
        v_hat = v / (1.0 - cfg.beta2**it)
        theta = theta - cfg.step * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        if cfg.grad_tol is not None and (g.size == 0 or np.max(np.abs(g)) < cfg.grad_tol):
            break
    return theta, ConvergenceTrace(obj_hist[:evals].copy(), gnorm_hist[:evals].copy())


_KRONECKER_PRIMES = (2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0)


def multistart_adam(
    cache: RankOneCache,
    h_uv: np.ndarray,
    cfg: AdamConfig,
    rng: np.random.Generator,
    restarts: int = 5,
) -> tuple[np.ndarray, float]:
    """Best of several optimizer runs from stratified starting points.

    The objective is multimodal in theta, so i.i.d. uniform restarts can
    miss the best basin.  Restart r starts from the randomly shifted
    Kronecker lattice point 2*pi*frac(shift + r*sqrt(p_d)), which spreads
    the starts evenly over the phase torus.  Returns (theta, J(theta)).
    """
    n = cache.num_elements
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if n > len(_KRONECKER_PRIMES):
        raise ValueError(
            f"stratified restarts support up to {len(_KRONECKER_PRIMES)} dimensions"
        )
    shift = rng.uniform(0.0, 1.0, n)
    alpha = np.sqrt(np.array(_KRONECKER_PRIMES[:n]))
    best_theta, best_j = None, np.inf
    for r in range(restarts):
        theta0 = 2.0 * np.pi * np.mod(shift + r * alpha, 1.0)
        theta, _ = adam_optimize(cache, h_uv, cfg, rng, theta0=theta0)
        j_val = objective(theta, cache, h_uv)
        if j_val < best_j:
            best_theta, best_j = theta, j_val
    return best_theta, best_j


def brute_force_phases(
    cache: RankOneCache,
    h_uv: np.ndarray,
    grid_points_per_dim: int,
    max_evals: int = 50_000_000,
) -> np.ndarray:
    """Grid-search oracle: the grid point minimizing J.

    Only intended for N <= 3; refuses larger problems with a cost estimate.
    """
    n = cache.num_elements
    cost = grid_points_per_dim**n if n else 1
    if n > 3 or cost > max_evals:
        raise BudgetExceededError(
            f"grid search over N={n} needs {grid_points_per_dim}^{n} = {cost} "
            f"objective evaluations (budget {max_evals})"
        )
    axis = np.arange(grid_points_per_dim) * (2.0 * np.pi / grid_points_per_dim)
    if n == 0:
        return np.zeros(0)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    thetas = np.stack([g.reshape(-1) for g in grids], axis=1)
    # vectorized J over all grid points: Q = Im C + cos @ Vim + sin @ Vre
    q = (
        h_uv.imag.reshape(-1)[None, :]
        + np.cos(thetas) @ cache._im_flat
        + np.sin(thetas) @ cache._re_flat
    )
    values = np.sum(q * q, axis=1)
    return thetas[int(np.argmin(values))].copy()


def signal_domain_objective(
    theta: np.ndarray, ch: ChannelSet, s: np.ndarray, b: np.ndarray
) -> float:
    """The pre-reformulation objective
    || Im( (H_eq(theta) s) o exp(-j angle(b)) ) ||_2^2."""
    s = np.asarray(s, dtype=float)
    b = np.asarray(b, dtype=complex)
    if s.shape != (ch.num_users,):
        raise ValueError(f"s has shape {s.shape}, expected ({ch.num_users},)")
    if b.shape != (ch.num_cells,):
        raise ValueError(f"b has shape {b.shape}, expected ({ch.num_cells},)")
    h_eq = effective_channel(ch, theta)
    e = (h_eq @ s) * np.exp(-1j * np.angle(b))
    return float(np.sum(e.imag**2))


def recover_phi_from_chi(
    a: np.ndarray,
    b_mat: np.ndarray,
    c: np.ndarray,
    chi: np.ndarray,
    cond_threshold: float = 1e12,
) -> np.ndarray:
    """Closed-form recovery Phi = (A^H A)^-1 A^H (chi - C) B^H (B B^H)^-1.

    Requires M >= N and K >= N for the Gram factors to be invertible, so
    this is a desk-scale verification tool only; singular factors raise
    ``SingularMatrixError`` naming the offender.
    """
    a = np.asarray(a, dtype=complex)
    b_mat = np.asarray(b_mat, dtype=complex)
    c = np.asarray(c, dtype=complex)
    chi = np.asarray(chi, dtype=complex)
    m, n = a.shape
    if b_mat.shape[0] != n:
        raise ValueError("A and B have inconsistent inner dimension")
    if c.shape != chi.shape or c.shape != (m, b_mat.shape[1]):
        raise ValueError("C and chi must both be M x K")

    gram_a = a.conj().T @ a
    gram_b = b_mat @ b_mat.conj().T
    for name, gram in (("A^H A", gram_a), ("B B^H", gram_b)):
        cond = np.linalg.cond(gram)
        if not np.isfinite(cond) or cond > cond_threshold:
            raise SingularMatrixError(
                f"{name} is numerically singular (condition number {cond:.3e})"
            )
    left = np.linalg.solve(gram_a, a.conj().T @ (chi - c))
    return np.linalg.solve(gram_b.T, (left @ b_mat.conj().T).T).T
