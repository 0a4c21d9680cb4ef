"""Low-rank + sparse decomposition solvers.

The main solver splits an observed matrix Y into a low-rank part X and a
sparse part B by ADMM,

    min  sum_i phi(sigma_i(X)) + lam * ||omega .* B||_1   s.t.  Y = X + B,

where phi is a piecewise penalty that leaves singular values above an
adaptive knee ``gamma`` untouched.  ``gamma`` scales with the largest
singular value of Y and with the fraction of missing entries, so heavily
damaged matrices get gentler spectral shrinkage.  A classic nuclear-norm
solver with the same ADMM skeleton is provided as a baseline.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import _check_matrix, fro_norm, soft_shrink, spectral_norm, svd

GAMMA_FLOOR_PAD = 1e-6


@dataclass
class SolverConfig:
    """Knobs for the ADMM loop.

    lam       weight of the sparse term (1 suits noiseless inpainting)
    eta       scale of the spectral knee gamma
    rho       penalty growth factor, must be > 1
    mu0       initial penalty; None means 1.25 / sigma1(Y)
    tol       stop when ||Y - X - B||_F / ||Y||_F falls below this
    max_iter  iteration cap
    """

    lam: float = 1.0
    eta: float = 0.1
    rho: float = 1.2
    mu0: float | None = None
    tol: float = 1e-7
    max_iter: int = 500

    def validate(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.rho <= 1:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if self.mu0 is not None and self.mu0 <= 0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be at least 1, got {self.max_iter}")


@dataclass(frozen=True)
class GammaValue:
    """Spectral knee gamma = max((eta + alpha) * sigma1, floor).

    alpha is the missing fraction and the floor 1 + 1/mu0 + pad keeps the
    closed-form singular-value update well defined from the first
    iteration onward (mu only grows).
    """

    gamma: float
    alpha: float
    sigma1: float


@dataclass
class Decomposition:
    """Result of one ADMM run: Y ~ low_rank + sparse."""

    low_rank: np.ndarray
    sparse: np.ndarray
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    multiplier_norm_history: list = field(default_factory=list)
    last_low_rank_delta: float = 0.0
    last_sparse_delta: float = 0.0


def _check_indicator(omega, shape):
    omega = np.asarray(omega, dtype=np.float64)
    if omega.shape != shape:
        raise ValueError(f"indicator shape {omega.shape} does not match data shape {shape}")
    if not np.all((omega == 0.0) | (omega == 1.0)):
        raise ValueError("indicator must be binary (0 = missing, 1 = observed)")
    return omega


def gamma_floor(mu0):
    return 1.0 + 1.0 / mu0 + GAMMA_FLOOR_PAD


def _gamma_value(sigma1, alpha, eta, mu0):
    gamma = max((eta + alpha) * sigma1, gamma_floor(mu0))
    return GammaValue(gamma=gamma, alpha=alpha, sigma1=sigma1)


def gamma_from(y, omega, eta, mu0):
    """Adaptive knee from the data: gamma = max((eta + alpha)*sigma1(Y), floor)."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if mu0 <= 0:
        raise ValueError(f"mu0 must be positive, got {mu0}")
    y = _check_matrix(y)
    omega = _check_indicator(omega, y.shape)
    alpha = 1.0 - float(omega.sum()) / omega.size
    return _gamma_value(spectral_norm(y), alpha, eta, mu0)


def phi(sigma, gamma):
    """Piecewise spectral penalty: identity below 1, saturating at (gamma+1)/2.

    Works element-wise on arrays; requires gamma > 1 and sigma >= 0.
    """
    if gamma <= 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("singular values must be nonnegative")
    mid = (-(sigma**2) + 2.0 * gamma * sigma - 1.0) / (2.0 * (gamma - 1.0))
    out = np.where(sigma <= 1.0, sigma, np.where(sigma <= gamma, mid, (gamma + 1.0) / 2.0))
    return float(out) if out.ndim == 0 else out


def shrink_singular_values(s, mu, gamma):
    """Closed-form minimizer of mu/2 * (sigma - s)^2 + phi(sigma) per value.

    Three regimes in s: soft-threshold by 1/mu below (mu+1)/mu, a mild
    linear pull between (mu+1)/mu and gamma, and pass-through at or above
    gamma.  Requires gamma > 1 + 1/mu; preserves nonincreasing order.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if gamma <= 1 or mu - 1.0 / (gamma - 1.0) <= 0:
        raise ValueError(f"need gamma > 1 + 1/mu; got gamma={gamma}, mu={mu}")
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("singular values must be nonnegative")
    if s.ndim == 1 and np.any(s[:-1] < s[1:]):
        raise ValueError("singular values must be nonincreasing")
    low = np.maximum(s - 1.0 / mu, 0.0)
    mid = (mu * s - gamma / (gamma - 1.0)) / (mu - 1.0 / (gamma - 1.0))
    out = np.where(s <= (mu + 1.0) / mu, low, np.where(s < gamma, mid, s))
    return float(out) if out.ndim == 0 else out


def _zero_decomposition(shape):
    return Decomposition(
        low_rank=np.zeros(shape),
        sparse=np.zeros(shape),
        iterations=0,
        converged=True,
    )


def _admm(y, omega, lam, cfg, sigma1, shrink):
    """Shared ADMM loop; ``shrink(s, mu)`` maps singular values of the
    X-subproblem target to the updated spectrum."""
    y_norm = fro_norm(y)
    x = np.zeros_like(y)
    b = np.zeros_like(y)
    a = y / sigma1
    mu = cfg.mu0 if cfg.mu0 is not None else 1.25 / sigma1

    result = Decomposition(low_rank=x, sparse=b, iterations=0, converged=False)
    result.multiplier_norm_history.append(fro_norm(a))

    for k in range(cfg.max_iter):
        e = a / mu + y - x
        b_new = soft_shrink(e, (lam / mu) * omega)
        d = a / mu + y - b_new
        dsvd = svd(d)
        x_new = (dsvd.u * shrink(dsvd.s, mu)) @ dsvd.v.T
        gap = y - b_new - x_new
        a = a + mu * gap

        residual = fro_norm(gap) / y_norm
        result.residual_history.append(residual)
        result.multiplier_norm_history.append(fro_norm(a))
        result.last_low_rank_delta = fro_norm(x_new - x)
        result.last_sparse_delta = fro_norm(b_new - b)
        x, b = x_new, b_new
        mu *= cfg.rho

        if residual <= cfg.tol:
            result.converged = True
            result.iterations = k + 1
            break
    else:
        result.iterations = cfg.max_iter

    result.low_rank = x
    result.sparse = b
    return result


def decompose(y, omega, cfg=None):
    """Adaptive low-rank/sparse split of ``y`` guided by the indicator.

    Follows the ADMM recursion: B-update by per-entry soft shrinkage with
    threshold lam/mu on observed entries (unobserved entries pass through
    untouched), X-update by one SVD plus the closed-form spectrum update,
    then the multiplier step and mu <- rho * mu.  The knee gamma is
    computed once from the input and held fixed.
    """
    cfg = cfg or SolverConfig()
    cfg.validate()
    y = _check_matrix(y)
    omega = _check_indicator(omega, y.shape)

    sigma1 = spectral_norm(y)
    if sigma1 == 0.0:
        return _zero_decomposition(y.shape)
    mu0 = cfg.mu0 if cfg.mu0 is not None else 1.25 / sigma1
    alpha = 1.0 - float(omega.sum()) / omega.size
    gamma = _gamma_value(sigma1, alpha, cfg.eta, mu0).gamma

    return _admm(
        y, omega, cfg.lam, cfg, sigma1, lambda s, mu: shrink_singular_values(s, mu, gamma)
    )


def nuclear_decompose(y, omega, lam, cfg=None):
    """Nuclear-norm baseline: same ADMM skeleton, but the X-update
    soft-thresholds every singular value at 1/mu."""
    cfg = cfg or SolverConfig()
    cfg.validate()
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    y = _check_matrix(y)
    omega = _check_indicator(omega, y.shape)
    sigma1 = spectral_norm(y)
    if sigma1 == 0.0:
        return _zero_decomposition(y.shape)

    return _admm(y, omega, lam, cfg, sigma1, lambda s, mu: np.maximum(s - 1.0 / mu, 0.0))
