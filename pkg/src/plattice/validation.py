"""Structural invariant suite backing the `validate` CLI subcommand."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lattice, network
from .numerics import frob_norm_sq


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_alignment(seed: int, seeds: int = 50) -> list:
    results = []
    worst_eq = 0.0
    worst_eq1 = np.inf
    rank_ok = True
    power_ok = True
    for n in (2, 4):
        for s in range(seeds):
            ch = network.generate_channels(n, 1.0, [seed, n, s])
            try:
                pc = network.build_precoders(ch, 1.0, network.REGIME_LIA23)
            except network.ResampleSignal:
                continue
            rep = network.verify_alignment(ch, pc)
            worst_eq = max(worst_eq, rep.eq_residual[1], rep.eq_residual[2])
            worst_eq1 = min(worst_eq1, rep.eq_residual[0])
            rank_ok &= rep.span_rank[0] == n // 2
            pc_sia = network.build_precoders(ch, 1.0, network.REGIME_SIA)
            power_ok &= all(
                abs(frob_norm_sq(bj) - 1.0) < 1e-10 for bj in pc_sia.b
            )
    results.append(
        CheckResult(
            "lia23-generator-equality",
            worst_eq < 1e-8,
            f"worst rx2/rx3 residual {worst_eq:.3e}",
        )
    )
    results.append(
        CheckResult(
            "rx1-span-alignment",
            rank_ok,
            "receiver-1 interference span rank == N/2",
        )
    )
    results.append(
        CheckResult(
            "rx1-lattice-misalignment",
            worst_eq1 > 1e-3,
            f"smallest rx1 generator residual {worst_eq1:.3e}",
        )
    )
    results.append(
        CheckResult("sia-power-constraint", power_ok, "||B_j||_F^2 == P_s in SIA")
    )
    return results


def _check_lll(seed: int, bases: int = 200) -> list:
    rng = np.random.default_rng([seed, 17])
    ok = True
    detail = ""
    for _ in range(bases):
        b = rng.standard_normal((4, 4))
        red, uni = lattice.lll_reduce(b)
        if not lattice.is_size_reduced(red):
            ok, detail = False, "size reduction violated"
            break
        if not lattice.satisfies_lovasz(red):
            ok, detail = False, "Lovasz condition violated"
            break
        if abs(round(float(np.linalg.det(uni.astype(np.float64))))) != 1:
            ok, detail = False, "unimodular determinant != +-1"
            break
        if np.max(np.abs(b @ uni - red)) > 1e-9:
            ok, detail = False, "reduced != basis @ unimodular"
            break
    return [CheckResult("lll-contracts", ok, detail or f"{bases} random 4x4 bases")]


def _check_babai(seed: int, instances: int = 200) -> list:
    rng = np.random.default_rng([seed, 23])
    ok = True
    detail = f"{instances} random 2-D instances"
    for _ in range(instances):
        b = rng.standard_normal((2, 2))
        if abs(np.linalg.det(b)) < 0.1:
            continue
        basis = lattice.LatticeBasis.from_real(b)
        target = rng.uniform(-4, 4, size=2)
        coef = lattice.babai_nearest_plane(basis, target)
        # agreement is only guaranteed when the target is well inside the
        # Babai correctness radius of the reduced basis
        radius = 0.5 * np.sqrt(basis.gs_norms_sq.min())
        exact = lattice.cvp_bruteforce(b, target, radius=8)
        point = b @ exact.astype(np.float64)
        if np.linalg.norm(point - target) < 0.45 * radius:
            if not np.array_equal(coef, exact):
                ok, detail = False, "Babai disagrees inside guarantee radius"
                break
    return [CheckResult("babai-vs-bruteforce", ok, detail)]


def run_validation(seed: int = 0) -> list:
    """Run all structural checks; returns a list of CheckResult."""
    results = []
    results += _check_alignment(seed)
    results += _check_lll(seed)
    results += _check_babai(seed)
    return results
