"""Dense complex matrix arithmetic shared by all other modules.

Matrices are plain ``numpy.ndarray`` objects with ``complex128`` dtype.
The helpers here add the dimension/rank checking and the deterministic
eigen-ordering that the rest of the library relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericsError(ValueError):
    """Bad input to a numerics operation (dimension mismatch, etc.)."""


class RankDeficientError(NumericsError):
    """Input matrix is (numerically) rank deficient.

    Attributes
    ----------
    sv_ratio : float
        Ratio of smallest to largest singular value that triggered the error.
    """

    def __init__(self, message: str, sv_ratio: float):
        super().__init__(message)
        self.sv_ratio = sv_ratio


@dataclass(frozen=True)
class Tolerances:
    """Central numeric tolerance configuration (all defaults double precision)."""

    pinv_rank_rel: float = 1e-10      # sigma_min/sigma_max gate for pinv
    eig_residual_rel: float = 1e-8    # |Av - lv| <= tol * ||A||_F
    rank_rel: float = 1e-8            # numeric-rank threshold vs sigma_max
    lll_delta: float = 0.75           # Lovasz parameter
    lattice_kissing_rel: float = 1e-9


DEFAULT_TOL = Tolerances()


def as_cmat(a) -> np.ndarray:
    """Coerce to a finite 2-D complex128 array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise NumericsError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericsError("matrix has non-finite entries")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex matrix product with an explicit dimension check."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape[-1] != b.shape[0]:
        raise NumericsError(
            f"dimension mismatch for matmul: {a.shape} x {b.shape}"
        )
    return a @ b


def pinv(a: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a full-column-rank matrix.

    Raises :class:`RankDeficientError` when the smallest singular value is
    below ``tol.pinv_rank_rel`` times the largest.
    """
    a = as_cmat(a)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    ratio = s[-1] / s[0] if s[0] > 0 else 0.0
    if ratio <= tol.pinv_rank_rel:
        raise RankDeficientError(
            f"matrix is rank deficient (sigma_min/sigma_max = {ratio:.3e})", ratio
        )
    return (vh.conj().T / s) @ u.conj().T


def eig(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition with a deterministic ordering.

    Eigenpairs are sorted by descending magnitude; ties break by descending
    real part, then descending imaginary part.  Each eigenvector is scaled
    to unit norm with its largest-magnitude entry rotated to the positive
    real axis, so repeated calls (and different LAPACK builds) agree up to
    that canonical form.
    """
    a = as_cmat(a)
    if a.shape[0] != a.shape[1]:
        raise NumericsError(f"eig requires a square matrix, got {a.shape}")
    vals, vecs = np.linalg.eig(a)
    order = np.lexsort((-vals.imag, -vals.real, -np.abs(vals)))
    vals = vals[order]
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        pivot = v[np.argmax(np.abs(v))]
        if pivot != 0:
            v = v * (np.conj(pivot) / abs(pivot))
        vecs[:, k] = v / np.linalg.norm(v)
    return vals, vecs


def frob_norm_sq(a: np.ndarray) -> float:
    """Sum of squared entry magnitudes (squared Frobenius norm)."""
    a = np.asarray(a)
    return float(np.sum(np.abs(a) ** 2))


def cond(a: np.ndarray) -> float:
    """Ratio of largest to smallest singular value; +inf when singular."""
    a = as_cmat(a)
    if a.shape[0] != a.shape[1]:
        raise NumericsError(f"cond requires a square matrix, got {a.shape}")
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def numeric_rank(a: np.ndarray, rel: float = DEFAULT_TOL.rank_rel) -> int:
    """Number of singular values above ``rel`` times the largest."""
    s = np.linalg.svd(np.asarray(a, dtype=np.complex128), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel * s[0]))
