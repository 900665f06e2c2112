"""Seeded Monte-Carlo sweeps, aggregation and CSV emission.

Determinism contract: every random draw is keyed by
(master_seed, snr-point index, trial index, stream id) through a
counter-based Philox generator, and aggregation uses integer counters (or
fixed-order float sums), so output CSVs are byte-identical across runs and
worker counts.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, constellation as _constellation, detectors, network, pseudolattice

DETECTOR_TOKENS = ("zf", "ml", "plattice")
HC_POLICY_TOKENS = {"min-ephi": pseudolattice.POLICY_MIN_EPHI,
                    "fixed-2": pseudolattice.POLICY_FIXED_2,
                    "fixed-3": pseudolattice.POLICY_FIXED_3}
REGIME_TOKENS = {"sia": network.REGIME_SIA, "lia23": network.REGIME_LIA23}

# Philox stream ids
_STREAM_CHANNEL = 1
_STREAM_BITS = 2
_STREAM_NOISE = 3
# sentinel "trial" indices for per-point / ensemble realizations
_TRIAL_PER_POINT = 2**40
_TRIAL_ENSEMBLE = 2**41

_CHUNK = 4096
_MAX_REALIZATION_RETRIES = 64

BER_HEADER = "snr_db,detector,trials,bits,bit_errors,ber,syms,sym_errors,ser"
NOISE_HEADER = "snr_db,background_power,approx_power,effective_power"
PREDICT_HEADER = "snr_db,pe_main,pe_variant,pe_ml_bound,pe_floor,pe_main_clamped"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    n: int = 4
    modulation: str = "qpsk"
    snr_db_start: float = 0.0
    snr_db_stop: float = 40.0
    snr_db_step: float = 5.0
    trials_per_point: int = 10**5
    min_bit_errors: int = 200
    master_seed: int = 0
    detectors: tuple = ("zf", "ml", "plattice")
    hc_policy: str = "min-ephi"
    regime: str = "sia"
    channel_mode: str = "per_trial"
    sigma_h_sq: float = 1.0
    p_s: float = 1.0
    ensemble: int = 1000

    def validate(self) -> "SimConfig":
        if self.n not in (2, 4, 6, 8):
            raise ConfigError(f"n must be one of 2, 4, 6, 8; got {self.n}")
        if self.snr_db_step <= 0:
            raise ConfigError("snr step must be > 0")
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point must be >= 1")
        if self.min_bit_errors < 0:
            raise ConfigError("min_bit_errors must be >= 0")
        for d in self.detectors:
            if d not in DETECTOR_TOKENS:
                raise ConfigError(f"unknown detector token {d!r}")
        if not self.detectors:
            raise ConfigError("at least one detector is required")
        if self.hc_policy not in HC_POLICY_TOKENS:
            raise ConfigError(f"unknown hc policy {self.hc_policy!r}")
        if self.regime not in REGIME_TOKENS:
            raise ConfigError(f"unknown regime {self.regime!r}")
        if self.channel_mode not in ("per_trial", "per_point"):
            raise ConfigError(f"unknown channel mode {self.channel_mode!r}")
        if self.sigma_h_sq <= 0 or self.p_s <= 0:
            raise ConfigError("sigma_h_sq and p_s must be > 0")
        if self.ensemble < 1:
            raise ConfigError("ensemble must be >= 1")
        _constellation.from_token(self.modulation)
        return self

    @property
    def snr_grid(self) -> np.ndarray:
        count = int(math.floor((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9)) + 1
        return self.snr_db_start + self.snr_db_step * np.arange(max(count, 1))


def parse_snr(text: str) -> tuple[float, float, float]:
    """Parse a start:stop:step SNR grid token."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad snr grid {text!r}: {exc}") from None
    return start, stop, step


_CONFIG_KEYS = {
    "n": int,
    "modulation": str,
    "snr_db_start": float,
    "snr_db_stop": float,
    "snr_db_step": float,
    "trials_per_point": int,
    "min_bit_errors": int,
    "master_seed": int,
    "detectors": lambda v: tuple(t.strip() for t in v.split(",") if t.strip()),
    "hc_policy": str,
    "regime": str,
    "channel_mode": str,
    "sigma_h_sq": float,
    "p_s": float,
    "ensemble": int,
}


def load_config_file(path) -> dict:
    """Parse a UTF-8 ``key = value`` config file; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = (part.strip() for part in line.partition("="))
        if key == "snr":
            start, stop, step = parse_snr(value)
            values.update(snr_db_start=start, snr_db_stop=stop, snr_db_step=step)
            continue
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    return values


def trial_rng(master_seed: int, point: int, trial: int, stream: int) -> np.random.Generator:
    """Splittable counter-based per-trial generator."""
    bitgen = np.random.Philox(
        key=np.array([master_seed & (2**64 - 1), stream], dtype=np.uint64),
        counter=np.array([0, 0, point, trial], dtype=np.uint64),
    )
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class Realization:
    ch: network.ChannelSet
    pc: network.PrecoderSet
    ctx: pseudolattice.PseudoLatticeContext


def build_realization(cfg: SimConfig, point: int, trial: int) -> Realization:
    """Channels + precoders + pseudo-lattice context for one trial key.

    Degenerate draws consume further values from the same channel stream,
    so the retry loop stays deterministic.
    """
    rng = trial_rng(cfg.master_seed, point, trial, _STREAM_CHANNEL)
    for _ in range(_MAX_REALIZATION_RETRIES):
        ch = network.generate_channels(cfg.n, cfg.sigma_h_sq, rng)
        try:
            pc = network.build_precoders(ch, cfg.p_s, REGIME_TOKENS[cfg.regime])
        except network.ResampleSignal:
            continue
        ctx = pseudolattice.select_hc(ch, pc, HC_POLICY_TOKENS[cfg.hc_policy])
        return Realization(ch=ch, pc=pc, ctx=ctx)
    raise network.NetworkError("could not build an admissible realization")


def _sigma_z_sq(cfg: SimConfig, snr_db: float) -> float:
    return cfg.p_s / 10.0 ** (snr_db / 10.0)


def run_trial(
    cfg: SimConfig,
    point: int,
    trial: int,
    realization: Realization | None = None,
    const: _constellation.Constellation | None = None,
) -> dict:
    """One Monte-Carlo trial; returns {detector: (bit_errors, sym_errors)}."""
    if const is None:
        const = _constellation.from_token(cfg.modulation)
    if realization is None:
        realization = build_realization(cfg, point, trial)
    ch, pc, ctx = realization.ch, realization.pc, realization.ctx
    half = cfg.n // 2
    bps = const.bits_per_symbol
    snr_db = float(cfg.snr_grid[point])
    sigma_z = _sigma_z_sq(cfg, snr_db)

    bits_rng = trial_rng(cfg.master_seed, point, trial, _STREAM_BITS)
    bits = bits_rng.integers(0, 2, size=(3, half * bps), dtype=np.uint8)
    symbols = np.stack([const.map_bits(bits[j]) for j in range(3)])
    noise_rng = trial_rng(cfg.master_seed, point, trial, _STREAM_NOISE)
    r = network.transmit(ch, pc, symbols, sigma_z, noise_rng)[0]

    truth = bits[0]
    truth_sym = truth.reshape(half, bps)
    out = {}
    for det in cfg.detectors:
        if det == "zf":
            res = detectors.detect_zf(r, ch, pc, const)
        elif det == "ml":
            res = detectors.detect_ml(r, ch, pc, const)
        else:
            res = detectors.detect_pseudolattice(r, ctx, const)
        mismatch = res.est_bits != truth
        out[det] = (int(mismatch.sum()), int(mismatch.reshape(half, bps).any(axis=1).sum()))
    return out


def _guard_detectors(cfg: SimConfig) -> None:
    if "ml" in cfg.detectors:
        const = _constellation.from_token(cfg.modulation)
        if const.order ** (3 * cfg.n // 2) > detectors.ML_SEARCH_LIMIT:
            raise detectors.DetectorError(
                f"ML infeasible at this size: {const.order}^{3 * cfg.n // 2} "
                "candidate combinations"
            )


def _run_chunk(cfg: SimConfig, point: int, start: int, stop: int) -> np.ndarray:
    """Worker: trials [start, stop) at one SNR point -> (n_det, 2) counts."""
    const = _constellation.from_token(cfg.modulation)
    realization = None
    if cfg.channel_mode == "per_point":
        realization = build_realization(cfg, point, _TRIAL_PER_POINT)
    counts = np.zeros((len(cfg.detectors), 2), dtype=np.int64)
    for t in range(start, stop):
        res = run_trial(cfg, point, t, realization=realization, const=const)
        for d_idx, det in enumerate(cfg.detectors):
            counts[d_idx, 0] += res[det][0]
            counts[d_idx, 1] += res[det][1]
    return counts


def worker_count() -> int:
    """Worker cap from IA_SIM_THREADS (0/unset = auto)."""
    raw = os.environ.get("IA_SIM_THREADS", "").strip()
    if raw and raw != "0":
        return max(1, int(raw))
    return os.cpu_count() or 1


def _map_chunks(cfg: SimConfig, jobs: list) -> list:
    """Run chunk jobs, possibly in parallel; results in submission order."""
    workers = worker_count()
    if workers <= 1 or len(jobs) <= 1:
        return [_run_chunk(cfg, *job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_chunk, cfg, *job) for job in jobs]
        return [f.result() for f in futures]


@dataclass(frozen=True)
class BerRow:
    snr_db: float
    detector: str
    trials: int
    bits: int
    bit_errors: int
    syms: int
    sym_errors: int

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits

    @property
    def ser(self) -> float:
        return self.sym_errors / self.syms


@dataclass(frozen=True)
class SweepResult:
    config: SimConfig
    rows: list

    def row(self, snr_db: float, detector: str) -> BerRow:
        for r in self.rows:
            if r.detector == detector and abs(r.snr_db - snr_db) < 1e-9:
                return r
        raise KeyError((snr_db, detector))

    def curve(self, detector: str) -> tuple[np.ndarray, np.ndarray]:
        rows = sorted(
            (r for r in self.rows if r.detector == detector), key=lambda r: r.snr_db
        )
        return (
            np.array([r.snr_db for r in rows]),
            np.array([r.ber for r in rows]),
        )


def run_sweep(cfg: SimConfig, progress=None) -> SweepResult:
    """BER/SER sweep over the SNR grid.

    Each point runs ``trials_per_point`` trials, then keeps extending in
    ``trials_per_point`` batches until every detector has accumulated
    ``min_bit_errors`` bit errors, capped at 10x trials_per_point.
    """
    cfg = cfg.validate()
    _guard_detectors(cfg)
    const = _constellation.from_token(cfg.modulation)
    half = cfg.n // 2
    bits_per_trial = half * const.bits_per_symbol
    rows = []
    for point, snr_db in enumerate(cfg.snr_grid):
        counts = np.zeros((len(cfg.detectors), 2), dtype=np.int64)
        done = 0
        while True:
            target = done + cfg.trials_per_point
            jobs = [
                (point, a, min(a + _CHUNK, target))
                for a in range(done, target, _CHUNK)
            ]
            for chunk in _map_chunks(cfg, jobs):
                counts += chunk
            done = target
            enough = cfg.min_bit_errors == 0 or bool(
                np.all(counts[:, 0] >= cfg.min_bit_errors)
            )
            if enough or done >= 10 * cfg.trials_per_point:
                break
        for d_idx, det in enumerate(cfg.detectors):
            rows.append(
                BerRow(
                    snr_db=float(snr_db),
                    detector=det,
                    trials=done,
                    bits=done * bits_per_trial,
                    bit_errors=int(counts[d_idx, 0]),
                    syms=done * half,
                    sym_errors=int(counts[d_idx, 1]),
                )
            )
        if progress is not None:
            progress(point, float(snr_db), done)
    return SweepResult(config=cfg, rows=rows)


def _noise_chunk(cfg: SimConfig, point: int, start: int, stop: int) -> np.ndarray:
    """Worker: effective-noise power sums over trials [start, stop)."""
    const = _constellation.from_token(cfg.modulation)
    snr_db = float(cfg.snr_grid[point])
    sigma_z = _sigma_z_sq(cfg, snr_db)
    fixed = None
    if cfg.channel_mode == "per_point":
        fixed = build_realization(cfg, point, _TRIAL_PER_POINT)
    sums = np.zeros(3)
    for t in range(start, stop):
        realization = fixed if fixed is not None else build_realization(cfg, point, t)
        ctx = realization.ctx
        half = cfg.n // 2
        bits_rng = trial_rng(cfg.master_seed, point, t, _STREAM_BITS)
        bits = bits_rng.integers(0, 2, size=(3, half * const.bits_per_symbol), dtype=np.uint8)
        w2 = const.map_bits(bits[1])
        w3 = const.map_bits(bits[2])
        approx = ctx.h_c @ ((ctx.d[1] - ctx.phi_d[1]) @ w2) + ctx.h_c @ (
            (ctx.d[2] - ctx.phi_d[2]) @ w3
        )
        noise_rng = trial_rng(cfg.master_seed, point, t, _STREAM_NOISE)
        zdraw = noise_rng.standard_normal((cfg.n, 2)) * np.sqrt(sigma_z / 2.0)
        z = zdraw[:, 0] + 1j * zdraw[:, 1]
        sums[0] += np.sum(np.abs(z) ** 2)
        sums[1] += np.sum(np.abs(approx) ** 2)
        sums[2] += np.sum(np.abs(approx + z) ** 2)
    return sums


def run_noise_sweep(cfg: SimConfig, progress=None) -> list:
    """Effective-noise decomposition averaged per SNR point."""
    cfg = cfg.validate()
    out = []
    workers = worker_count()
    for point, snr_db in enumerate(cfg.snr_grid):
        jobs = [
            (point, a, min(a + _CHUNK, cfg.trials_per_point))
            for a in range(0, cfg.trials_per_point, _CHUNK)
        ]
        if workers <= 1 or len(jobs) <= 1:
            partials = [_noise_chunk(cfg, *job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_noise_chunk, cfg, *job) for job in jobs]
                partials = [f.result() for f in futures]
        sums = np.zeros(3)
        for p in partials:
            sums += p
        sums /= cfg.trials_per_point
        out.append(
            analysis.NoiseDecomposition(
                snr_db=float(snr_db),
                background_power=float(sums[0]),
                approx_power=float(sums[1]),
                effective_power=float(sums[2]),
            )
        )
        if progress is not None:
            progress(point, float(snr_db), cfg.trials_per_point)
    return out


def build_ensemble(cfg: SimConfig) -> list:
    """Ensemble of realization stats for the analytic predictors."""
    cfg = cfg.validate()
    stats = []
    for k in range(cfg.ensemble):
        realization = build_realization(cfg, 0, _TRIAL_ENSEMBLE + k)
        stats.append(analysis.RealizationStats.from_context(realization.ctx))
    return stats


def run_predict(cfg: SimConfig) -> list:
    stats = build_ensemble(cfg)
    return analysis.pe_predict(stats, cfg.snr_grid, p_s=cfg.p_s)


# -- CSV emission --------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_ber_csv(result: SweepResult, path) -> None:
    lines = [BER_HEADER]
    for r in result.rows:
        lines.append(
            f"{_fmt(r.snr_db)},{r.detector},{r.trials},{r.bits},{r.bit_errors},"
            f"{_fmt(r.ber)},{r.syms},{r.sym_errors},{_fmt(r.ser)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_noise_csv(rows: list, path) -> None:
    lines = [NOISE_HEADER]
    for r in rows:
        lines.append(
            f"{_fmt(r.snr_db)},{_fmt(r.background_power)},{_fmt(r.approx_power)},"
            f"{_fmt(r.effective_power)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_predict_csv(rows: list, path) -> None:
    lines = [PREDICT_HEADER]
    for r in rows:
        lines.append(
            f"{_fmt(r.snr_db)},{_fmt(r.pe_main)},{_fmt(r.pe_variant)},"
            f"{_fmt(r.pe_ml_bound)},{_fmt(r.pe_floor)},{_fmt(r.pe_main_clamped)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
