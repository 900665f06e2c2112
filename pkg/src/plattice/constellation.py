"""Square-QAM constellations with per-axis gray coding.

Symbols are normalized to unit average energy, so transmit power lives
entirely in the precoders.  Every constellation point ``p`` satisfies
``p / scale = 2*z + (1 + 1j)`` for a Gaussian integer ``z`` whose real and
imaginary parts lie in ``[-side/2, side/2 - 1]`` -- the coordinate form the
lattice detectors work in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_SUPPORTED_ORDERS = (4, 16, 64)

# Per-axis gray tables, indexed by the integer value of the axis bits.
# QPSK uses the sign convention bit 0 -> +1, bit 1 -> -1; the larger
# constellations use the reflected gray code over ascending levels.
_AXIS_LEVELS = {
    4: np.array([1, -1]),
    16: np.array([-3, -1, 3, 1]),
    64: np.array([-7, -5, -1, -3, 7, 5, 1, 3]),
}


class ConstellationError(ValueError):
    """Invalid constellation input (bad order, off-grid symbol, ...)."""


def _axis_bits_by_index(order: int) -> np.ndarray:
    """Inverse of the axis table: level index (ascending) -> axis bits."""
    levels = _AXIS_LEVELS[order]
    side = levels.shape[0]
    nbits = side.bit_length() - 1
    out = np.zeros((side, nbits), dtype=np.uint8)
    for bits_val, level in enumerate(levels):
        k = (level + side - 1) // 2
        for b in range(nbits):
            out[k, b] = (bits_val >> (nbits - 1 - b)) & 1
    return out


@dataclass(frozen=True)
class Constellation:
    order: int
    bits_per_symbol: int = field(init=False)
    side: int = field(init=False)
    scale: float = field(init=False)
    points: np.ndarray = field(init=False)
    point_bits: np.ndarray = field(init=False)
    axis_bits: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.order not in _SUPPORTED_ORDERS:
            raise ConstellationError(
                f"unsupported constellation order {self.order}; "
                f"expected one of {_SUPPORTED_ORDERS}"
            )
        side = int(round(np.sqrt(self.order)))
        bps = 2 * (side.bit_length() - 1)
        scale = 1.0 / np.sqrt(2.0 * (self.order - 1) / 3.0)
        axis_bits = _axis_bits_by_index(self.order)
        # Symbol index enumerates (re level index, im level index)
        # lexicographically; ML tie-breaking relies on this ordering.
        ks = np.arange(side)
        levels = 2 * ks - (side - 1)
        re, im = np.meshgrid(levels, levels, indexing="ij")
        pts = scale * (re.ravel() + 1j * im.ravel())
        pbits = np.concatenate(
            [
                axis_bits[np.repeat(ks, side)],
                axis_bits[np.tile(ks, side)],
            ],
            axis=1,
        ).astype(np.uint8)
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "bits_per_symbol", bps)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "point_bits", pbits)
        object.__setattr__(self, "axis_bits", axis_bits)

    # -- bit <-> symbol mapping ------------------------------------------

    def map_bits(self, bits: np.ndarray) -> np.ndarray:
        """Gray-map a flat bit vector to a complex symbol vector."""
        bits = np.asarray(bits, dtype=np.uint8)
        bps = self.bits_per_symbol
        if bits.ndim != 1 or bits.shape[0] % bps != 0:
            raise ConstellationError(
                f"bit vector length {bits.shape} not divisible by {bps}"
            )
        half = bps // 2
        groups = bits.reshape(-1, bps)
        weights = 1 << np.arange(half - 1, -1, -1)
        re_val = groups[:, :half] @ weights
        im_val = groups[:, half:] @ weights
        levels = _AXIS_LEVELS[self.order]
        return self.scale * (levels[re_val] + 1j * levels[im_val])

    def _quantize_axis(self, x: np.ndarray) -> np.ndarray:
        """Nearest axis-level index; exact midpoints round to the smaller level."""
        v = (x / self.scale + self.side - 1) / 2.0
        k = np.ceil(v - 0.5)
        return np.clip(k, 0, self.side - 1).astype(np.int64)

    def demap_hard(self, y: np.ndarray) -> np.ndarray:
        """Nearest-point hard decision followed by the inverse gray map."""
        y = np.asarray(y, dtype=np.complex128).reshape(-1)
        k_re = self._quantize_axis(y.real)
        k_im = self._quantize_axis(y.imag)
        return np.hstack(
            [self.axis_bits[k_re], self.axis_bits[k_im]]
        ).reshape(-1)

    # -- integer-coordinate form -----------------------------------------

    def to_integer_coords(self, s: np.ndarray) -> "IntegerCoords":
        """Exact Gaussian-integer coordinates of constellation points."""
        s = np.asarray(s, dtype=np.complex128)
        z = (s / self.scale - (1 + 1j)) / 2.0
        zr = np.round(z.real)
        zi = np.round(z.imag)
        if np.max(np.abs(z.real - zr), initial=0.0) > 1e-9 or np.max(
            np.abs(z.imag - zi), initial=0.0
        ) > 1e-9:
            raise ConstellationError("input is not on the constellation grid")
        lo, hi = -self.side // 2, self.side // 2 - 1
        if zr.size and (zr.min() < lo or zr.max() > hi or zi.min() < lo or zi.max() > hi):
            raise ConstellationError("input lies outside the constellation range")
        return IntegerCoords(z=zr + 1j * zi)

    def from_integer_coords(self, coords: "IntegerCoords") -> np.ndarray:
        return self.scale * (2.0 * coords.z + (1 + 1j))

    def clip_coords(self, z: np.ndarray) -> "IntegerCoords":
        """Clamp arbitrary Gaussian-integer coordinates into the valid range."""
        z = np.asarray(z, dtype=np.complex128)
        lo, hi = -self.side // 2, self.side // 2 - 1
        return IntegerCoords(
            z=np.clip(z.real, lo, hi) + 1j * np.clip(z.imag, lo, hi)
        )

    def bits_from_coords(self, coords: "IntegerCoords") -> np.ndarray:
        """Bit labels of in-range integer coordinates."""
        return self.demap_hard(self.from_integer_coords(coords))


@dataclass(frozen=True)
class IntegerCoords:
    """Gaussian-integer symbol coordinates: s = scale * (2 z + (1+1j))."""

    z: np.ndarray


_BY_TOKEN = {"qpsk": 4, "qam16": 16, "qam64": 64}


def from_token(token: str) -> Constellation:
    """Constellation from its CLI token: qpsk | qam16 | qam64."""
    try:
        return Constellation(_BY_TOKEN[token.lower()])
    except KeyError:
        raise ConstellationError(
            f"unknown modulation token {token!r}; expected one of {sorted(_BY_TOKEN)}"
        ) from None
