"""Analytic error-probability predictors and the effective-noise
decomposition.

Two closed-form variants of the error approximation are exposed side by
side: ``pe_main`` inflates the noise denominator by ``SNR * e_phi`` and
``pe_variant`` by ``SNR * ||H_c||_F^2 * e_phi``.  The source formulas are
mutually inconsistent about the extra norm factor, so both are reported
rather than silently picking one.  All values are raw formula outputs (not
clamped to [0, 1]); a clamped column is provided separately for plotting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constellation import Constellation
from .lattice import lattice_stats
from .numerics import frob_norm_sq
from .pseudolattice import PseudoLatticeContext


@dataclass(frozen=True)
class RealizationStats:
    """Per-realization geometry feeding the predictors."""

    d1: float
    kissing: int
    e_phi: float
    hc_frob_sq: float

    @classmethod
    def from_context(cls, ctx: PseudoLatticeContext) -> "RealizationStats":
        stats = lattice_stats(ctx.desired, ctx.g_eff)
        return cls(
            d1=stats.d1,
            kissing=stats.kissing,
            e_phi=ctx.e_phi,
            hc_frob_sq=frob_norm_sq(ctx.h_c),
        )


@dataclass(frozen=True)
class PePrediction:
    snr_db: float
    pe_main: float
    pe_variant: float
    pe_ml_bound: float
    pe_floor: float
    pe_main_clamped: float


def pe_ml_bound(stats: RealizationStats, sigma_z_sq: float) -> float:
    """Matched-filter bound style ML error term: K * exp(-d1^2 / (4 sigma^2))."""
    return stats.kissing * math.exp(-(stats.d1**2) / (4.0 * sigma_z_sq))


def pe_floor(stats: RealizationStats, p_s: float, e_phi: float) -> float:
    """High-SNR error floor; zero when there is no approximation noise."""
    if e_phi == 0.0:
        return 0.0
    return stats.kissing * math.exp(-(stats.d1**2) / (4.0 * p_s * e_phi))


def _pe_at(stats: RealizationStats, sigma_z_sq: float, snr: float, norm_factor: float) -> float:
    denom = 4.0 * sigma_z_sq * (1.0 + snr * norm_factor * stats.e_phi)
    return stats.kissing * math.exp(-(stats.d1**2) / denom)


def pe_predict(
    realizations: list[RealizationStats],
    snr_db_grid: np.ndarray,
    p_s: float = 1.0,
) -> list[PePrediction]:
    """Ensemble-averaged predictions on an SNR grid.

    Averages use ``math.fsum`` so the result is independent of iteration
    chunking (determinism across worker counts).
    """
    if not realizations:
        raise ValueError("ensemble must contain at least one realization")
    out = []
    inv_n = 1.0 / len(realizations)
    for snr_db in np.atleast_1d(snr_db_grid):
        snr = 10.0 ** (snr_db / 10.0)
        sigma_z_sq = p_s / snr
        main = math.fsum(_pe_at(s, sigma_z_sq, snr, 1.0) for s in realizations) * inv_n
        variant = (
            math.fsum(_pe_at(s, sigma_z_sq, snr, s.hc_frob_sq) for s in realizations)
            * inv_n
        )
        ml = math.fsum(pe_ml_bound(s, sigma_z_sq) for s in realizations) * inv_n
        floor = math.fsum(pe_floor(s, p_s, s.e_phi) for s in realizations) * inv_n
        clamped = (
            math.fsum(min(_pe_at(s, sigma_z_sq, snr, 1.0), 1.0) for s in realizations)
            * inv_n
        )
        out.append(
            PePrediction(
                snr_db=float(snr_db),
                pe_main=main,
                pe_variant=variant,
                pe_ml_bound=ml,
                pe_floor=floor,
                pe_main_clamped=clamped,
            )
        )
    return out


@dataclass(frozen=True)
class NoiseDecomposition:
    snr_db: float
    background_power: float
    approx_power: float
    effective_power: float


def noise_decompose(
    trials: int,
    ctx: PseudoLatticeContext,
    constellation: Constellation,
    sigma_z_sq: float,
    rng: np.random.Generator,
    snr_db: float = float("nan"),
) -> NoiseDecomposition:
    """Monte-Carlo average powers of the effective-noise components for a
    fixed channel realization."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = ctx.g_eff.shape[0]
    half = n // 2
    a2 = ctx.h_c @ (ctx.d[1] - ctx.phi_d[1])
    a3 = ctx.h_c @ (ctx.d[2] - ctx.phi_d[2])
    idx2 = rng.integers(0, constellation.order, size=(half, trials))
    idx3 = rng.integers(0, constellation.order, size=(half, trials))
    approx = a2 @ constellation.points[idx2] + a3 @ constellation.points[idx3]
    if sigma_z_sq > 0:
        zdraw = rng.standard_normal((n, trials, 2)) * np.sqrt(sigma_z_sq / 2.0)
        z = zdraw[..., 0] + 1j * zdraw[..., 1]
    else:
        z = np.zeros((n, trials), dtype=np.complex128)
    eff = approx + z
    sq = lambda m: float(np.mean(np.sum(np.abs(m) ** 2, axis=0)))
    return NoiseDecomposition(
        snr_db=float(snr_db),
        background_power=sq(z),
        approx_power=sq(approx),
        effective_power=sq(eff),
    )
