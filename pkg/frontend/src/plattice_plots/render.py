"""Matplotlib figure construction.

Rendering is deterministic: fixed figure size, the Agg backend, and no
embedded timestamps (SVG date metadata is stripped).  BER values of zero
cannot sit on a log axis, so they are drawn as unfilled markers pinned to
the axis floor.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

# SVG element ids are derived from this salt; leaving it unset makes every
# render unique, which breaks byte-identical output
matplotlib.rcParams["svg.hashsalt"] = "plattice-plots"

from . import io

FIGSIZE = (7.0, 5.0)
SUPPORTED_FORMATS = ("png", "svg")

_NOISE_LABELS = {
    "background_power": "background",
    "approx_power": "approximation",
    "effective_power": "effective",
}
_PREDICT_SERIES = ("pe_main_clamped", "pe_variant", "pe_ml_bound", "pe_floor")


class RenderError(ValueError):
    pass


def _check_format(out_path) -> str:
    suffix = str(out_path).rsplit(".", 1)[-1].lower()
    if suffix not in SUPPORTED_FORMATS:
        raise RenderError(
            f"unsupported output format {suffix!r}; use one of {SUPPORTED_FORMATS}"
        )
    return suffix


def _save(fig, out_path) -> None:
    fmt = _check_format(out_path)
    kwargs = {"metadata": {"Date": None}} if fmt == "svg" else {}
    fig.savefig(out_path, format=fmt, **kwargs)
    plt.close(fig)


def plot_ber(csv_path, out_path, detectors: list[str] | None = None) -> None:
    series = io.load_ber(csv_path)
    if detectors:
        unknown = [d for d in detectors if d not in series]
        if unknown:
            raise io.CsvFormatError(
                f"detectors not present in {csv_path}: {', '.join(unknown)}"
            )
        series = {d: series[d] for d in detectors}
    positive = [b for _, ber in series.values() for b in ber if b > 0]
    floor = min(positive) / 10 if positive else 1e-8
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for det, (snr, ber) in series.items():
        kept = [(s, b) for s, b in zip(snr, ber) if b > 0]
        if kept:
            xs, ys = zip(*kept)
            ax.semilogy(xs, ys, marker="o", label=det)
        zero_snr = [s for s, b in zip(snr, ber) if b == 0]
        if zero_snr:
            ax.semilogy(
                zero_snr,
                [floor] * len(zero_snr),
                linestyle="none",
                marker="v",
                markerfacecolor="none",
                label=f"{det} (no errors)",
            )
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, out_path)


def plot_noise(csv_path, out_path) -> None:
    data = io.load_noise(csv_path)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for column, label in _NOISE_LABELS.items():
        ax.semilogy(data["snr_db"], data[column], marker="o", label=label)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("noise power")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, out_path)


def plot_predict(csv_path, out_path) -> None:
    data = io.load_predict(csv_path)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for column in _PREDICT_SERIES:
        ax.semilogy(data["snr_db"], data[column], marker="o", label=column)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("predicted error probability")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    _save(fig, out_path)
