"""Channel generation and interference-aligned precoders for the 3-user
MIMO network.

Precoders follow the closed-form eigenvector construction: with

    E = H31^-1 H32 . H12^-1 H13 . H23^-1 H21

the first N/2 eigenvectors of E (deterministic ordering from
:mod:`plattice.numerics`) form B1, and B3 = H23^-1 H21 B1,
B2 = H32^-1 H31 B1.  This makes the receiver-2/3 interference generators
*exactly* equal (H21 B1 == H23 B3 and H31 B1 == H32 B2) while receiver 1
only gets span alignment -- the regime the pseudo-lattice detector targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .numerics import frob_norm_sq

COND_REJECT = 1e8
_MAX_REJECTS = 100

REGIME_SIA = "SIA"
REGIME_LIA23 = "LIA23"


class NetworkError(RuntimeError):
    """Channel/precoder construction failure."""


class ResampleSignal(NetworkError):
    """Degenerate channel draw; the caller should regenerate channels."""


@dataclass(frozen=True)
class ChannelSet:
    """3x3 grid of N x N channel matrices, index [rx][tx], 0-based."""

    n: int
    sigma_h_sq: float
    h: np.ndarray  # shape (3, 3, N, N), complex128
    rejects: int = 0

    @property
    def k(self) -> int:
        return 3


@dataclass(frozen=True)
class PrecoderSet:
    """Per-transmitter N x (N/2) precoders with their power budget."""

    b: np.ndarray  # shape (3, N, N/2)
    p_s: float
    regime: str
    per_user_power: np.ndarray = field(default=None)


def generate_channels(n: int, sigma_h_sq: float, rng) -> ChannelSet:
    """Draw nine i.i.d. circularly-symmetric complex Gaussian channels.

    ``rng`` is either a seed (int / sequence) or a ``numpy.random.Generator``.
    Matrices with condition number >= 1e8 are rejected and resampled.
    """
    if n < 2 or n % 2 != 0:
        raise NetworkError(f"antenna count must be even and >= 2, got {n}")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    std = np.sqrt(sigma_h_sq / 2.0)
    h = np.empty((3, 3, n, n), dtype=np.complex128)
    draws = rng.standard_normal((3, 3, n, n, 2)) * std
    h[:] = draws[..., 0] + 1j * draws[..., 1]
    rejects = 0
    sv = np.linalg.svd(h.reshape(9, n, n), compute_uv=False)
    bad = np.flatnonzero((sv[:, -1] == 0) | (sv[:, 0] / np.maximum(sv[:, -1], 1e-300) >= COND_REJECT))
    for flat in bad:
        consecutive = 0
        while True:
            d = rng.standard_normal((n, n, 2)) * std
            m = d[..., 0] + 1j * d[..., 1]
            if numerics.cond(m) < COND_REJECT:
                h.reshape(9, n, n)[flat] = m
                break
            rejects += 1
            consecutive += 1
            if consecutive > _MAX_REJECTS:
                raise NetworkError(
                    "channel generation rejected >100 consecutive draws; "
                    "check sigma_h_sq / antenna configuration"
                )
    return ChannelSet(n=n, sigma_h_sq=sigma_h_sq, h=h, rejects=rejects + len(bad))


def build_precoders(ch: ChannelSet, p_s: float, regime: str = REGIME_SIA) -> PrecoderSet:
    """Closed-form aligned precoders (see module docstring).

    Raises :class:`ResampleSignal` when the alignment eigenproblem is
    degenerate (repeated eigenvalues within 1e-8); the caller should draw a
    fresh channel set.
    """
    if regime not in (REGIME_SIA, REGIME_LIA23):
        raise NetworkError(f"unknown regime {regime!r}")
    n = ch.n
    h = ch.h
    half = n // 2
    e = np.linalg.solve(h[2][0], h[2][1]) @ np.linalg.solve(
        h[0][1], h[0][2]
    ) @ np.linalg.solve(h[1][2], h[1][0])
    vals, vecs = numerics.eig(e)
    gaps = np.abs(vals[:, None] - vals[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() < 1e-8:
        raise ResampleSignal("repeated eigenvalues in the alignment matrix")
    b1 = vecs[:, :half]
    b3 = np.linalg.solve(h[1][2], h[1][0] @ b1)
    b2 = np.linalg.solve(h[2][1], h[2][0] @ b1)
    b = np.stack([b1, b2, b3])
    norms = np.array([frob_norm_sq(bj) for bj in b])
    if regime == REGIME_SIA:
        b = b * np.sqrt(p_s / norms)[:, None, None]
        power = np.full(3, p_s)
    else:
        # One common scalar keeps the receiver-2/3 generator equalities
        # exact; per-user power then deviates from p_s by the norm spread.
        s = np.sqrt(3.0 * p_s / norms.sum())
        b = b * s
        power = norms * s**2
    return PrecoderSet(b=b, p_s=p_s, regime=regime, per_user_power=power)


@dataclass(frozen=True)
class AlignmentReport:
    """Structural alignment diagnostics for one (channels, precoders) pair."""

    span_rank: np.ndarray          # interference span rank at each receiver
    eq_residual: np.ndarray        # relative generator-equality residual, eq1..eq3
    per_user_power: np.ndarray
    rx1_span_aligned: bool
    lattice_aligned_23: bool       # eq2 and eq3 hold
    rx1_lattice_misaligned: bool   # eq1 fails (generic channels)


def _rel_residual(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-300))


def verify_alignment(ch: ChannelSet, pc: PrecoderSet) -> AlignmentReport:
    """Span ranks and generator-equality residuals at every receiver."""
    h, b = ch.h, pc.b
    half = ch.n // 2
    others = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
    ranks = np.zeros(3, dtype=np.int64)
    for i, (j, k) in others.items():
        stacked = np.hstack([h[i][j] @ b[j], h[i][k] @ b[k]])
        ranks[i] = numerics.numeric_rank(stacked)
    residual = np.array(
        [
            _rel_residual(h[0][1] @ b[1], h[0][2] @ b[2]),
            _rel_residual(h[1][0] @ b[0], h[1][2] @ b[2]),
            _rel_residual(h[2][0] @ b[0], h[2][1] @ b[1]),
        ]
    )
    power = np.array([frob_norm_sq(bj) for bj in b])
    return AlignmentReport(
        span_rank=ranks,
        eq_residual=residual,
        per_user_power=power,
        rx1_span_aligned=bool(ranks[0] == half),
        lattice_aligned_23=bool(residual[1] < 1e-8 and residual[2] < 1e-8),
        rx1_lattice_misaligned=bool(residual[0] > 1e-3),
    )


def transmit(
    ch: ChannelSet,
    pc: PrecoderSet,
    symbols: np.ndarray,
    noise_sigma_sq: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Received vectors r_i = sum_j H_ij B_j w_j + z_i for all receivers.

    ``symbols`` has shape (3, N/2); noise is circularly-symmetric complex
    Gaussian with variance ``noise_sigma_sq`` per complex component.
    """
    h, b = ch.h, pc.b
    n = ch.n
    tx = np.stack([b[j] @ symbols[j] for j in range(3)])  # (3, N)
    r = np.einsum("ijkl,jl->ik", h, tx)
    if noise_sigma_sq > 0:
        z = rng.standard_normal((3, n, 2)) * np.sqrt(noise_sigma_sq / 2.0)
        r += z[..., 0] + 1j * z[..., 1]
    return r
