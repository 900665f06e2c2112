"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from plattice import harness, network


@pytest.fixture(scope="session")
def realization_n4():
    """One admissible QPSK/N=4 realization reused by cheap tests."""
    cfg = harness.SimConfig(n=4, modulation="qpsk", master_seed=11)
    return harness.build_realization(cfg, 0, 0)


def admissible_channels(n: int, seed) -> network.ChannelSet:
    """Channel draw that is retried until the precoder eigenproblem is clean."""
    rng = np.random.default_rng(seed)
    for _ in range(32):
        ch = network.generate_channels(n, 1.0, rng)
        try:
            network.build_precoders(ch, 1.0)
            return ch
        except network.ResampleSignal:
            continue
    raise RuntimeError("no admissible channel draw")


def interpolate_snr_at_ber(snr: np.ndarray, ber: np.ndarray, level: float):
    """SNR (dB) where a monotone-ish BER curve first crosses ``level``.

    Log-linear interpolation between the bracketing grid points; returns
    None when the curve never reaches the level.
    """
    snr = np.asarray(snr, dtype=float)
    ber = np.asarray(ber, dtype=float)
    for i in range(len(snr) - 1):
        hi, lo = ber[i], ber[i + 1]
        if hi >= level > lo:
            if lo <= 0.0:
                lo = level / 10.0  # zero-count point: place the crossing inside
            f = (np.log10(hi) - np.log10(level)) / (np.log10(hi) - np.log10(lo))
            return float(snr[i] + f * (snr[i + 1] - snr[i]))
    return None
