"""Gaussian-integer lattice machinery.

Complex lattices are handled through the standard real embedding

    embed(G) = [[Re G, -Im G],
                [Im G,  Re G]]

so that a single real-valued LLL / Babai stack serves every decoder.  The
hot kernels (Gram-Schmidt, LLL, nearest-plane) are numba-compiled because
the Monte-Carlo harness runs them once per trial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .numerics import NumericsError

DEFAULT_DELTA = 0.75

_CVP_MAX_POINTS = 2 * 10**7


class LatticeError(ValueError):
    """Invalid lattice input (rank-deficient basis, guard violation)."""


def real_embed(g: np.ndarray) -> np.ndarray:
    """Real embedding of a complex matrix, preserving Euclidean norms."""
    g = np.asarray(g, dtype=np.complex128)
    return np.block([[g.real, -g.imag], [g.imag, g.real]])


def embed_vector(x: np.ndarray) -> np.ndarray:
    """Real embedding of a complex vector: [Re x; Im x]."""
    x = np.asarray(x, dtype=np.complex128)
    return np.concatenate([x.real, x.imag])


def unembed_vector(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_vector`."""
    v = np.asarray(v, dtype=np.float64)
    m = v.shape[0] // 2
    return v[:m] + 1j * v[m:]


@njit(cache=True)
def _gso_rows(rows):
    """Row-wise Gram-Schmidt: returns (mu, cnorm, bstar_rows).

    ``rows[i]`` is basis vector i; mu has unit diagonal and
    cnorm[i] = ||b*_i||^2.  Row layout keeps every dot product contiguous.
    """
    m, n = rows.shape
    mu = np.zeros((m, m))
    cnorm = np.zeros(m)
    bstar = np.zeros((m, n))
    for i in range(m):
        v = rows[i].copy()
        for j in range(i):
            mu[i, j] = np.dot(rows[i], bstar[j]) / cnorm[j]
            v -= mu[i, j] * bstar[j]
        mu[i, i] = 1.0
        bstar[i] = v
        cnorm[i] = np.dot(v, v)
    return mu, cnorm, bstar


@njit(cache=True)
def _lll_rows_kernel(rows, delta):
    """LLL on basis vectors stored as rows. Returns (red, uni, ok_flag).

    red == uni @ rows with uni integer and |det uni| == 1.
    """
    m, n = rows.shape
    red = rows.copy()
    uni = np.eye(m, dtype=np.int64)
    mu, cnorm, _ = _gso_rows(red)
    scale = 0.0
    for i in range(m):
        scale = max(scale, cnorm[i])
    for i in range(m):
        if cnorm[i] <= 1e-24 * scale:
            return red, uni, False
    k = 1
    while k < m:
        for j in range(k - 1, -1, -1):
            q = np.rint(mu[k, j])
            if q != 0.0:
                red[k] -= q * red[j]
                uni[k] -= np.int64(q) * uni[j]
                for l in range(j + 1):
                    mu[k, l] -= q * mu[j, l]
        if cnorm[k] >= (delta - mu[k, k - 1] ** 2) * cnorm[k - 1]:
            k += 1
        else:
            for c in range(n):
                tmp = red[k, c]
                red[k, c] = red[k - 1, c]
                red[k - 1, c] = tmp
            for c in range(m):
                t2 = uni[k, c]
                uni[k, c] = uni[k - 1, c]
                uni[k - 1, c] = t2
            mu, cnorm, _ = _gso_rows(red)
            k = max(k - 1, 1)
    return red, uni, True


@njit(cache=True)
def _nearest_plane_rows_kernel(red_rows, bstar_rows, cnorm, target):
    """Babai nearest-plane coefficients of ``target`` in the reduced basis."""
    m = red_rows.shape[0]
    w = target.copy()
    coef = np.zeros(m, dtype=np.int64)
    for i in range(m - 1, -1, -1):
        c = np.rint(np.dot(w, bstar_rows[i]) / cnorm[i])
        coef[i] = np.int64(c)
        if c != 0.0:
            w -= c * red_rows[i]
    return coef


def _gso(b):
    """Column-convention wrapper around :func:`_gso_rows`."""
    mu, cnorm, bstar = _gso_rows(np.ascontiguousarray(b.T))
    return mu, cnorm, bstar.T


def lll_reduce(
    b: np.ndarray, delta: float = DEFAULT_DELTA
) -> tuple[np.ndarray, np.ndarray]:
    """LLL-reduce the columns of a real basis.

    Returns ``(reduced, unimodular)`` with ``reduced == b @ unimodular``,
    ``|det(unimodular)| == 1`` (integer arithmetic), and the output
    satisfying size reduction and the Lovasz condition with ``delta``.
    """
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[1] == 0:
        raise LatticeError(f"expected a non-empty 2-D basis, got shape {b.shape}")
    if not 0.25 < delta <= 1.0:
        raise LatticeError(f"delta must lie in (0.25, 1], got {delta}")
    if b.shape[1] == 1:
        if np.dot(b[:, 0], b[:, 0]) == 0.0:
            raise LatticeError("rank-deficient basis")
        return b.copy(), np.eye(1, dtype=np.int64)
    red_rows, uni_rows, ok = _lll_rows_kernel(np.ascontiguousarray(b.T), delta)
    if not ok:
        raise LatticeError("rank-deficient basis")
    return red_rows.T.copy(), uni_rows.T.copy()


@dataclass(frozen=True)
class LatticeBasis:
    """A complex generator with its real embedding and LLL-reduced form.

    ``reduced == real_embedding @ unimodular`` and the unimodular factor has
    determinant +-1.  The cached Gram-Schmidt data belongs to ``reduced``
    and is what the Babai decoder consumes.
    """

    generator: np.ndarray
    real_embedding: np.ndarray
    reduced: np.ndarray
    unimodular: np.ndarray
    red_rows: np.ndarray      # reduced.T, contiguous, for the jitted kernels
    gs_rows: np.ndarray       # Gram-Schmidt vectors of reduced, as rows
    gs_norms_sq: np.ndarray

    @classmethod
    def _build(cls, g: np.ndarray, emb: np.ndarray, delta: float) -> "LatticeBasis":
        red, uni = lll_reduce(emb, delta)
        red_rows = np.ascontiguousarray(red.T)
        _, cnorm, bstar_rows = _gso_rows(red_rows)
        return cls(g, emb, red, uni, red_rows, bstar_rows, cnorm)

    @classmethod
    def from_generator(
        cls, g: np.ndarray, delta: float = DEFAULT_DELTA
    ) -> "LatticeBasis":
        g = np.asarray(g, dtype=np.complex128)
        return cls._build(g, real_embed(g), delta)

    @classmethod
    def from_real(
        cls, b: np.ndarray, delta: float = DEFAULT_DELTA
    ) -> "LatticeBasis":
        b = np.asarray(b, dtype=np.float64)
        return cls._build(b.astype(np.complex128), b, delta)


def babai_nearest_plane(basis: LatticeBasis, target: np.ndarray) -> np.ndarray:
    """Approximate CVP via Babai's nearest-plane rule.

    Returns integer coefficients in the *original* basis coordinates
    (mapped back through the unimodular transform).
    """
    t = np.ascontiguousarray(target, dtype=np.float64)
    coef = _nearest_plane_rows_kernel(
        basis.red_rows, basis.gs_rows, basis.gs_norms_sq, t
    )
    return basis.unimodular @ coef


def is_size_reduced(red: np.ndarray, tol: float = 1e-9) -> bool:
    mu, _, _ = _gso(np.ascontiguousarray(red, dtype=np.float64))
    m = mu.shape[0]
    for i in range(m):
        for j in range(i):
            if abs(mu[i, j]) > 0.5 + tol:
                return False
    return True


def satisfies_lovasz(
    red: np.ndarray, delta: float = DEFAULT_DELTA, tol: float = 1e-9
) -> bool:
    mu, cnorm, _ = _gso(np.ascontiguousarray(red, dtype=np.float64))
    for k in range(1, len(cnorm)):
        if cnorm[k] < (delta - mu[k, k - 1] ** 2) * cnorm[k - 1] - tol * cnorm[k - 1]:
            return False
    return True


def cvp_bruteforce(g: np.ndarray, target: np.ndarray, radius: int) -> np.ndarray:
    """Exhaustive closest-vector search over the coefficient box [-radius, radius]^m.

    Ties break to the lexicographically smallest coefficient vector.  Guarded
    to small dimensions; this is the oracle side of the decoder pair, kept
    deliberately naive.
    """
    g = np.asarray(g, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    m = g.shape[1]
    n_points = (2 * radius + 1) ** m
    if m > 8 or n_points > _CVP_MAX_POINTS:
        raise LatticeError(
            f"brute-force CVP guard: dimension {m}, {n_points} points exceeds limit"
        )
    axes = [np.arange(-radius, radius + 1)] * m
    grid = np.meshgrid(*axes, indexing="ij")
    coeffs = np.stack([a.ravel() for a in grid])  # (m, P), lexicographic order
    diffs = g @ coeffs - t[:, None]
    best = int(np.argmin(np.einsum("ij,ij->j", diffs, diffs)))
    return coeffs[:, best].copy()


@dataclass(frozen=True)
class LatticeStats:
    """Column-norm proxies for lattice distance and kissing number."""

    d: float
    d1: float
    kissing: int


def lattice_stats(
    desired: np.ndarray, full: np.ndarray, rel_tol: float = 1e-9
) -> LatticeStats:
    """Minimum column norms of the full/desired generators and the count of
    minimum-norm columns (within ``rel_tol`` relative slack)."""
    desired = np.asarray(desired, dtype=np.complex128)
    full = np.asarray(full, dtype=np.complex128)
    if desired.size == 0 or full.size == 0:
        raise LatticeError("empty generator matrix")
    full_norms = np.linalg.norm(full, axis=0)
    desired_norms = np.linalg.norm(desired, axis=0)
    d = float(full_norms.min())
    d1 = float(desired_norms.min())
    kissing = int(np.sum(full_norms <= d * (1.0 + rel_tol)))
    return LatticeStats(d=d, d1=d1, kissing=kissing)
