"""Dense linear-algebra primitives shared by the solvers."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class SvdError(RuntimeError):
    """The LAPACK SVD kernel failed to converge on the given matrix."""


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``M = U @ diag(s) @ V.T`` with k = min(m, n).

    Columns of U and V are sign-normalized so that the largest-magnitude
    entry of each U column is nonnegative, which makes the factorization
    deterministic for a fixed input.
    """

    u: np.ndarray  # (m, k), orthonormal columns
    s: np.ndarray  # (k,), nonincreasing, nonnegative
    v: np.ndarray  # (n, k), orthonormal columns


def _check_matrix(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def svd(m):
    """Thin SVD with a fixed sign convention.

    Tries the divide-and-conquer kernel first and falls back to the
    slower Jacobi-style kernel when it fails to converge; raises
    :class:`SvdError` if both give up.
    """
    m = _check_matrix(m)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        try:
            u, s, vt = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except scipy.linalg.LinAlgError as exc:
            raise SvdError(
                f"SVD did not converge on a {m.shape[0]}x{m.shape[1]} matrix "
                f"after both LAPACK drivers (gesdd, gesvd): {exc}"
            ) from exc
    # Sign normalization: largest-|entry| of each U column made nonnegative.
    flip = u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])] < 0
    u[:, flip] *= -1.0
    vt[flip, :] *= -1.0
    return SvdResult(u=u, s=s, v=vt.T)


def spectral_norm(m):
    """Largest singular value of ``m`` (0 for the zero matrix)."""
    m = _check_matrix(m)
    if not m.any():
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def soft_shrink(x, eps):
    """Soft shrinkage sgn(x) * max(|x| - eps, 0), element-wise.

    ``eps`` may be a scalar or an array broadcastable against ``x``
    (per-element thresholds); eps = 0 is the identity.
    """
    x = np.asarray(x, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if np.any(eps < 0):
        raise ValueError("shrinkage threshold must be nonnegative")
    out = np.sign(x) * np.maximum(np.abs(x) - eps, 0.0)
    return float(out) if out.ndim == 0 else out


def fro_norm(m):
    return float(np.linalg.norm(m, "fro"))
