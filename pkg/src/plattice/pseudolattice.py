"""Receiver-1 channel transformation.

The subspace-aligned interference is rewritten over a common basis H_c with
coefficient matrices D_j, which are rounded to the nearest Gaussian-integer
matrices phi(D_j).  The residual energy

    e_phi = sum_j || H_c (D_j - phi(D_j)) ||_F^2

is the approximation-noise budget that ultimately causes the detector's
high-SNR error floor.  H_c is restricted to the two received interference
generators {H12 B2, H13 B3}; the identity-coefficient candidate always
contributes exactly zero to its own residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .network import ChannelSet, PrecoderSet
from .numerics import frob_norm_sq

POLICY_MIN_EPHI = "min_ephi"
POLICY_FIXED_2 = "fixed_2"
POLICY_FIXED_3 = "fixed_3"

CANDIDATE_FROM_USER2 = "from_user2"
CANDIDATE_FROM_USER3 = "from_user3"

_PHI_LIMIT = float(2**52)


class PseudoLatticeError(RuntimeError):
    pass


def phi(a: np.ndarray) -> np.ndarray:
    """Componentwise nearest Gaussian integer; half-integer ties round away
    from zero (independently on the real and imaginary axes)."""
    a = np.asarray(a, dtype=np.complex128)
    if a.size and (np.max(np.abs(a.real)) > _PHI_LIMIT or np.max(np.abs(a.imag)) > _PHI_LIMIT):
        raise PseudoLatticeError("entry magnitude exceeds exact integer range")

    def _round_half_away(x):
        return np.sign(x) * np.floor(np.abs(x) + 0.5)

    return _round_half_away(a.real) + 1j * _round_half_away(a.imag)


def e_phi(h_c: np.ndarray, d_list, phi_list) -> float:
    """Accumulated approximation-noise energy over the interference terms."""
    total = 0.0
    for d, p in zip(d_list, phi_list):
        total += frob_norm_sq(h_c @ (d - p))
    return total


@dataclass(frozen=True)
class PseudoLatticeContext:
    """Receiver-1 transformation state for one channel realization.

    ``d`` and ``phi_d`` are keyed by interfering user index (1 and 2,
    0-based).  ``g_eff`` is the unscaled joint generator [H11 B1 | H_c];
    the constellation-scaled generator and offset come from
    :func:`build_effective_model`.
    """

    h_c: np.ndarray
    d: dict
    phi_d: dict
    e_phi: float
    g_eff: np.ndarray
    desired: np.ndarray  # H11 B1
    chosen_candidate: str


def _candidate(ch: ChannelSet, pc: PrecoderSet, which: str) -> PseudoLatticeContext:
    h, b = ch.h, pc.b
    g12 = h[0][1] @ b[1]
    g13 = h[0][2] @ b[2]
    half = ch.n // 2
    eye = np.eye(half, dtype=np.complex128)
    if which == CANDIDATE_FROM_USER2:
        h_c = g12
        d = {1: eye, 2: numerics.pinv(h_c) @ g13}
    else:
        h_c = g13
        d = {1: numerics.pinv(h_c) @ g12, 2: eye}
    phi_d = {j: phi(dj) for j, dj in d.items()}
    energy = e_phi(h_c, [d[1], d[2]], [phi_d[1], phi_d[2]])
    desired = h[0][0] @ b[0]
    return PseudoLatticeContext(
        h_c=h_c,
        d=d,
        phi_d=phi_d,
        e_phi=energy,
        g_eff=np.hstack([desired, h_c]),
        desired=desired,
        chosen_candidate=which,
    )


def select_hc(
    ch: ChannelSet, pc: PrecoderSet, policy: str = POLICY_MIN_EPHI
) -> PseudoLatticeContext:
    """Pick the common interference basis H_c according to ``policy``.

    ``min_ephi`` evaluates both restricted candidates and keeps the one
    with the smaller residual energy (ties keep the user-2 candidate);
    ``fixed_2`` / ``fixed_3`` force a candidate.
    """
    if policy == POLICY_FIXED_2:
        return _candidate(ch, pc, CANDIDATE_FROM_USER2)
    if policy == POLICY_FIXED_3:
        return _candidate(ch, pc, CANDIDATE_FROM_USER3)
    if policy != POLICY_MIN_EPHI:
        raise PseudoLatticeError(f"unknown H_c policy {policy!r}")
    c2 = _candidate(ch, pc, CANDIDATE_FROM_USER2)
    c3 = _candidate(ch, pc, CANDIDATE_FROM_USER3)
    return c2 if c2.e_phi <= c3.e_phi else c3


@dataclass(frozen=True)
class EffectiveModel:
    """Scaled joint generator and known constellation offset.

    With symbols s = scale*(2 z + (1+1j)) the received vector satisfies

        r - offset = g_scaled @ [z1; u] + n1,
        u = phi(D2) z2 + phi(D3) z3  (Gaussian integers),

    where n1 collects background plus approximation noise.
    """

    g_scaled: np.ndarray
    offset: np.ndarray


def build_effective_model(ctx: PseudoLatticeContext, constellation) -> EffectiveModel:
    alpha = constellation.scale
    ones = np.ones(ctx.d[1].shape[0], dtype=np.complex128) * (1 + 1j)
    g_scaled = 2.0 * alpha * ctx.g_eff
    offset = alpha * (
        ctx.desired @ ones + ctx.h_c @ (ctx.phi_d[1] @ ones) + ctx.h_c @ (ctx.phi_d[2] @ ones)
    )
    return EffectiveModel(g_scaled=g_scaled, offset=offset)


def approximation_noise_power(ctx: PseudoLatticeContext, constellation) -> float:
    """Expected power of the approximation-noise term over uniform symbols.

    For i.i.d. zero-mean unit-energy symbol components this closed form is
    just the residual energy e_phi times the (unit) symbol energy.
    """
    mean_energy = float(np.mean(np.abs(constellation.points) ** 2))
    return ctx.e_phi * mean_energy
