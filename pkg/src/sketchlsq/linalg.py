"""Dense linear-algebra kernels shared by every other module.

QR-based exact least squares, thin orthonormal bases, singular values of
tall-thin matrices via a Jacobi eigensolve of the Gram matrix, spectral
norms of symmetric matrices by power iteration, and orthogonal projections.

All functions are pure: inputs are validated (finite entries, compatible
shapes) and never mutated, so concurrent calls on shared arrays are safe.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConvergenceFailure, DimensionMismatch, RankDeficient
from .rng import stream

# Relative floor on the R diagonal below which a matrix is treated as
# rank deficient. Hard error by design: no pseudo-rank fallback.
RANK_TOL = 1e-12

_JACOBI_MAX_SWEEPS = 30
_JACOBI_OFF_TOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return `a` as a float64 2-D array with finite entries."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got ndim={out.ndim}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be nonempty, got shape {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return out


def as_vector(b, name: str = "vector") -> np.ndarray:
    """Validate and return `b` as a float64 1-D array with finite entries."""
    out = np.asarray(b, dtype=np.float64)
    if out.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got ndim={out.ndim}")
    if out.shape[0] < 1:
        raise DimensionMismatch(f"{name} must be nonempty")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return out


@dataclass(frozen=True)
class QrFactors:
    """Thin QR factors: q has orthonormal columns, r is upper triangular
    with strictly nonnegative diagonal (entries below the diagonal are
    exact zeros)."""

    q: np.ndarray
    r: np.ndarray


def qr_factor(a) -> QrFactors:
    """Thin Householder QR of a tall matrix.

    Args:
        a: (n, d) array with n >= d.

    Returns:
        QrFactors with a = q @ r, q.T @ q = I_d.

    Raises:
        RankDeficient: if any |R_ii| <= 1e-12 * max_j |R_jj|.
    """
    a = as_matrix(a)
    n, d = a.shape
    if n < d:
        raise DimensionMismatch(f"need rows >= cols, got {n} x {d}")
    q, r = np.linalg.qr(a, mode="reduced")
    # Fix the sign ambiguity so the R diagonal is nonnegative.
    flip = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    q = q * flip
    r = np.triu(flip[:, None] * r)
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * diag.max():
        raise RankDeficient(
            f"R diagonal ratio {diag.min():.3e}/{diag.max():.3e} below {RANK_TOL:g}"
        )
    return QrFactors(q, r)


def solve_exact_ls(a, b) -> np.ndarray:
    """Minimizer of ||a x - b||_2 for a full-column-rank tall matrix.

    Solves through the thin QR factorization, so the residual satisfies the
    normal equations to roundoff.
    """
    a = as_matrix(a)
    b = as_vector(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"matrix has {a.shape[0]} rows, rhs has {b.shape[0]}")
    f = qr_factor(a)
    return solve_triangular(f.r, f.q.T @ b, lower=False, check_finite=False)


def orthonormal_basis(a) -> np.ndarray:
    """Orthonormal basis of range(a) as an (n, d) matrix.

    Any orthonormal basis of the column space is equivalent for the
    structural-condition diagnostics: a rotation U -> U Q leaves both the
    singular values of X U and ||(X U)^T v|| unchanged.
    """
    return qr_factor(a).q


def _jacobi_eigenvalues(g: np.ndarray) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.

    Intended for the small Gram matrices of tall-thin inputs; converges when
    the off-diagonal Frobenius mass drops below 1e-12 * ||g||_F.
    """
    a = np.array(g, dtype=np.float64, copy=True)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])
    frob = np.linalg.norm(g, "fro")
    if frob == 0.0:
        return np.zeros(n)

    def _off_norm(mat: np.ndarray) -> float:
        # Summed directly over the off-diagonal entries; subtracting the
        # diagonal mass from the total would cancel catastrophically.
        strict = mat[~np.eye(n, dtype=bool)]
        return float(np.linalg.norm(strict))

    for _ in range(_JACOBI_MAX_SWEEPS):
        if _off_norm(a) <= _JACOBI_OFF_TOL * frob:
            return np.diag(a).copy()
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    off = _off_norm(a)
    if off <= _JACOBI_OFF_TOL * frob:
        return np.diag(a).copy()
    raise ConvergenceFailure(
        f"Jacobi did not converge in {_JACOBI_MAX_SWEEPS} sweeps (off={off:.3e})"
    )


def gram_singular_values(m) -> np.ndarray:
    """Singular values of a tall matrix, descending, each >= 0.

    Computed from a symmetric Jacobi eigensolve of m.T @ m. Squaring the
    condition number is acceptable here: these values feed diagnostics on
    small, well-conditioned sketched matrices.
    """
    m = as_matrix(m)
    if m.shape[0] < m.shape[1]:
        raise DimensionMismatch(f"need rows >= cols, got {m.shape[0]} x {m.shape[1]}")
    eig = _jacobi_eigenvalues(m.T @ m)
    eig = np.clip(eig, 0.0, None)
    return np.sqrt(np.sort(eig)[::-1])


def spectral_norm_sym(m, tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest absolute eigenvalue of a symmetric matrix by power iteration.

    Starts from a fixed seeded random vector and stops when the Rayleigh-like
    estimate ||M v|| changes by less than `tol` relatively.
    """
    m = as_matrix(m)
    n, d = m.shape
    if n != d:
        raise DimensionMismatch(f"matrix must be square, got {n} x {d}")
    if np.abs(m - m.T).max() > 1e-10:
        raise DimensionMismatch("matrix must be symmetric within 1e-10")
    v = stream(0, "spectral-norm-start").standard_normal(n)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = m @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        if abs(nw - est) <= tol * nw:
            return nw
        est = nw
        v = w / nw
    raise ConvergenceFailure(f"power iteration did not settle in {max_iter} iterations")


def project_out(u, b) -> np.ndarray:
    """Component of b orthogonal to the columns of u: b - u (u.T b)."""
    u = as_matrix(u)
    b = as_vector(b)
    if u.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"basis has {u.shape[0]} rows, vector has {b.shape[0]}")
    return b - u @ (u.T @ b)


def condition_number(a) -> float:
    """sigma_max / sigma_min of a full-column-rank tall matrix."""
    sv = gram_singular_values(a)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise RankDeficient(
            f"singular-value ratio {sv[-1]:.3e}/{sv[0]:.3e} below {RANK_TOL:g}"
        )
    return float(sv[0] / sv[-1])
