"""Receiver-1 detectors: zero-forcing, joint maximum-likelihood, and the
pseudo-lattice LR-based detector."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constellation import Constellation, IntegerCoords
from .lattice import LatticeBasis, babai_nearest_plane, embed_vector
from .network import ChannelSet, PrecoderSet
from .pseudolattice import EffectiveModel, PseudoLatticeContext, build_effective_model

ML_SEARCH_LIMIT = 10**7


class DetectorError(RuntimeError):
    pass


@dataclass(frozen=True)
class DetectionResult:
    est_bits: np.ndarray
    est_coords: IntegerCoords
    aux: Optional[np.ndarray] = None


def detect_zf(
    r: np.ndarray, ch: ChannelSet, pc: PrecoderSet, constellation: Constellation
) -> DetectionResult:
    """Invert [H11 B1 | H12 B2] and hard-demap the first N/2 coordinates.

    Under exact span alignment the interference occupies the trailing N/2
    coordinates, so the leading block is the interference-free desired
    stream (plus enhanced noise).
    """
    h, b = ch.h, pc.b
    half = ch.n // 2
    m = np.hstack([h[0][0] @ b[0], h[0][1] @ b[1]])
    try:
        x = np.linalg.solve(m, r)
    except np.linalg.LinAlgError as exc:
        raise DetectorError(f"ZF matrix is singular: {exc}") from exc
    bits = constellation.demap_hard(x[:half])
    symbols = constellation.map_bits(bits)
    return DetectionResult(
        est_bits=bits, est_coords=constellation.to_integer_coords(symbols)
    )


def _symbol_combos(constellation: Constellation, streams: int) -> np.ndarray:
    """All point-index combinations, lexicographic, shape (streams, M**streams)."""
    m = constellation.order
    grids = np.meshgrid(*([np.arange(m)] * streams), indexing="ij")
    return np.stack([g.ravel() for g in grids])


def detect_ml(
    r: np.ndarray, ch: ChannelSet, pc: PrecoderSet, constellation: Constellation
) -> DetectionResult:
    """Joint exhaustive search over all three users' symbol vectors.

    Ties break to the lexicographically smallest symbol-index tuple.
    Refuses to run when the search space exceeds ``ML_SEARCH_LIMIT``.
    """
    h, b = ch.h, pc.b
    half = ch.n // 2
    m = constellation.order
    if m ** (3 * half) > ML_SEARCH_LIMIT:
        raise DetectorError(
            f"ML infeasible at this size: {m}^{3 * half} candidate combinations"
        )
    combos = _symbol_combos(constellation, half)  # (half, C)
    s = constellation.points[combos]  # (half, C)
    y1 = (h[0][0] @ b[0]) @ s
    y2 = (h[0][1] @ b[1]) @ s
    y3 = (h[0][2] @ b[2]) @ s
    c = s.shape[1]
    y23 = (y2[:, :, None] + y3[:, None, :]).reshape(ch.n, c * c)
    r1 = r[:, None] - y1  # (N, C)
    diff = r1[:, :, None] - y23[:, None, :]  # (N, C, C^2)
    dist = np.einsum("ijk,ijk->jk", diff.real, diff.real) + np.einsum(
        "ijk,ijk->jk", diff.imag, diff.imag
    )
    flat = int(np.argmin(dist))
    a = flat // (c * c)
    est_symbols = constellation.points[combos[:, a]]
    bits = constellation.demap_hard(est_symbols)
    return DetectionResult(
        est_bits=bits, est_coords=constellation.to_integer_coords(est_symbols)
    )


def detect_pseudolattice(
    r: np.ndarray,
    ctx: PseudoLatticeContext,
    constellation: Constellation,
    model: Optional[EffectiveModel] = None,
) -> DetectionResult:
    """LR-based joint decode of the desired stream and the integer
    interference coordinate.

    Pipeline: subtract the known constellation offset, LLL-reduce the real
    embedding of the scaled joint generator, run Babai nearest-plane, map
    the coefficients back through the unimodular transform, clip the
    desired coordinates to the constellation range, and demap.  The
    interference coordinate ``u`` stays unclipped.
    """
    if model is None:
        model = build_effective_model(ctx, constellation)
    n = model.g_scaled.shape[0]
    half = n // 2
    y = r - model.offset
    basis = LatticeBasis.from_generator(model.g_scaled)
    coef = babai_nearest_plane(basis, embed_vector(y))
    zc = coef[:n].astype(np.float64) + 1j * coef[n:].astype(np.float64)
    coords = constellation.clip_coords(zc[:half])
    bits = constellation.bits_from_coords(coords)
    return DetectionResult(est_bits=bits, est_coords=coords, aux=zc[half:])
