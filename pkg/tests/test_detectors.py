import itertools

import numpy as np
import pytest

from plattice import harness, network
from plattice.constellation import Constellation
from plattice.detectors import (
    DetectorError,
    detect_ml,
    detect_pseudolattice,
    detect_zf,
)
from plattice.numerics import pinv
from plattice.pseudolattice import POLICY_MIN_EPHI, select_hc

from conftest import admissible_channels
from test_pseudolattice import _integer_aligned_instance


def _setup(seed, n=4, order=4):
    ch = admissible_channels(n, seed)
    pc = network.build_precoders(ch, 1.0)
    ctx = select_hc(ch, pc, POLICY_MIN_EPHI)
    return ch, pc, ctx, Constellation(order)


def _send(ch, pc, const, bits, sigma_sq, noise_seed=0):
    symbols = np.stack([const.map_bits(bits[j]) for j in range(3)])
    r = network.transmit(ch, pc, symbols, sigma_sq, np.random.default_rng(noise_seed))
    return r[0]


def _ml_bruteforce_oracle(r, ch, pc, const, half):
    """Naive per-combination loop, written independently of detect_ml."""
    best = None
    best_dist = np.inf
    for idx in itertools.product(range(const.order), repeat=3 * half):
        w = [np.array([const.points[k] for k in idx[j * half:(j + 1) * half]]) for j in range(3)]
        y = sum(ch.h[0][j] @ pc.b[j] @ w[j] for j in range(3))
        dist = float(np.sum(np.abs(r - y) ** 2))
        if dist < best_dist - 1e-15:
            best_dist = dist
            best = w[0]
    return const.demap_hard(best)


# -- zero forcing ----------------------------------------------------------


def test_zf_zero_noise_exact():
    rng = np.random.default_rng(0)
    for seed in range(10):
        ch, pc, _, const = _setup(seed)
        bits = rng.integers(0, 2, size=(3, 4), dtype=np.uint8)
        r = _send(ch, pc, const, bits, 0.0)
        res = detect_zf(r, ch, pc, const)
        np.testing.assert_array_equal(res.est_bits, bits[0])


def test_zf_zero_received_deterministic():
    ch, pc, _, const = _setup(0)
    a = detect_zf(np.zeros(4, dtype=np.complex128), ch, pc, const)
    b = detect_zf(np.zeros(4, dtype=np.complex128), ch, pc, const)
    np.testing.assert_array_equal(a.est_bits, b.est_bits)
    np.testing.assert_array_equal(a.est_bits, const.demap_hard(np.zeros(2)))


def test_zf_matches_projection_oracle():
    # Independent receiver: project onto the orthogonal complement of the
    # interference span, then pseudo-invert the projected desired channel.
    rng = np.random.default_rng(1)
    for seed in range(100):
        ch, pc, _, const = _setup(seed)
        bits = rng.integers(0, 2, size=(3, 4), dtype=np.uint8)
        r = _send(ch, pc, const, bits, 0.0)
        g12 = ch.h[0][1] @ pc.b[1]
        q, _ = np.linalg.qr(g12, mode="complete")
        p_perp = q[:, 2:] @ q[:, 2:].conj().T
        desired = ch.h[0][0] @ pc.b[0]
        w = pinv(p_perp @ desired) @ (p_perp @ r)
        oracle_bits = const.demap_hard(w)
        res = detect_zf(r, ch, pc, const)
        np.testing.assert_array_equal(res.est_bits, oracle_bits)


# -- maximum likelihood ----------------------------------------------------


def test_ml_zero_noise_exact():
    rng = np.random.default_rng(2)
    for seed in range(10):
        ch, pc, _, const = _setup(seed)
        bits = rng.integers(0, 2, size=(3, 4), dtype=np.uint8)
        r = _send(ch, pc, const, bits, 0.0)
        res = detect_ml(r, ch, pc, const)
        np.testing.assert_array_equal(res.est_bits, bits[0])


def test_ml_small_perturbation_robust():
    ch, pc, _, const = _setup(3)
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, size=(3, 4), dtype=np.uint8)
    r = _send(ch, pc, const, bits, 0.0)
    clean = detect_ml(r, ch, pc, const)
    pert = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    pert *= 1e-6 / np.linalg.norm(pert)
    noisy = detect_ml(r + pert, ch, pc, const)
    np.testing.assert_array_equal(clean.est_bits, noisy.est_bits)


def test_ml_guard_refuses_large_search():
    ch, pc, _, _ = _setup(4)
    with pytest.raises(DetectorError, match="ML infeasible"):
        detect_ml(np.zeros(4, dtype=np.complex128), ch, pc, Constellation(16))


def test_ml_matches_bruteforce_oracle_n2():
    rng = np.random.default_rng(5)
    for trial in range(100):
        ch, pc, _, const = _setup(trial % 20, n=2)
        bits = rng.integers(0, 2, size=(3, 2), dtype=np.uint8)
        r = _send(ch, pc, const, bits, 0.3, noise_seed=trial)
        res = detect_ml(r, ch, pc, const)
        oracle = _ml_bruteforce_oracle(r, ch, pc, const, half=1)
        np.testing.assert_array_equal(res.est_bits, oracle)


# -- pseudo-lattice --------------------------------------------------------


def test_plattice_exact_on_integer_instance_zero_noise():
    rng = np.random.default_rng(6)
    for seed in range(20):
        ch, pc = _integer_aligned_instance(seed)
        ctx = select_hc(ch, pc, POLICY_MIN_EPHI)
        const = Constellation(4)
        bits = rng.integers(0, 2, size=(3, 4), dtype=np.uint8)
        r = _send(ch, pc, const, bits, 0.0)
        res = detect_pseudolattice(r, ctx, const)
        np.testing.assert_array_equal(res.est_bits, bits[0])


def test_plattice_pure_function():
    ch, pc, ctx, const = _setup(7)
    rng = np.random.default_rng(7)
    bits = rng.integers(0, 2, size=(3, 4), dtype=np.uint8)
    r = _send(ch, pc, const, bits, 0.1)
    a = detect_pseudolattice(r, ctx, const)
    b = detect_pseudolattice(r.copy(), ctx, const)
    np.testing.assert_array_equal(a.est_bits, b.est_bits)
    np.testing.assert_array_equal(a.est_coords.z, b.est_coords.z)
    np.testing.assert_array_equal(a.aux, b.aux)


def test_plattice_coords_in_constellation_range():
    rng = np.random.default_rng(8)
    ch, pc, ctx, const = _setup(8)
    for trial in range(50):
        bits = rng.integers(0, 2, size=(3, 4), dtype=np.uint8)
        r = _send(ch, pc, const, bits, 2.0, noise_seed=trial)
        res = detect_pseudolattice(r, ctx, const)
        z = res.est_coords.z
        assert np.all(z.real >= -1) and np.all(z.real <= 0)
        assert np.all(z.imag >= -1) and np.all(z.imag <= 0)


def test_plattice_ser_within_factor_two_of_ml_n2():
    """Paired Monte-Carlo at the SNR where ML SER is near 1e-2 (QPSK, N=2).

    Mirrors the near-ML performance claim; see the repository notes for the
    measured gap when this fails.
    """
    cfg = harness.SimConfig(
        n=2,
        modulation="qpsk",
        snr_db_start=12.5,
        snr_db_stop=12.5,
        snr_db_step=1.0,
        trials_per_point=10**5,
        min_bit_errors=0,
        master_seed=97,
        detectors=("ml", "plattice"),
    )
    result = harness.run_sweep(cfg)
    ml = result.row(12.5, "ml")
    plat = result.row(12.5, "plattice")
    assert 3e-3 < ml.ser < 3e-2, "SNR point not in the ML SER ~ 1e-2 regime"
    assert plat.ser <= 2.0 * ml.ser
