"""CSV loading and schema validation for the three simulator outputs."""

from __future__ import annotations

import csv
from pathlib import Path

BER_COLUMNS = (
    "snr_db",
    "detector",
    "trials",
    "bits",
    "bit_errors",
    "ber",
    "syms",
    "sym_errors",
    "ser",
)
NOISE_COLUMNS = ("snr_db", "background_power", "approx_power", "effective_power")
PREDICT_COLUMNS = (
    "snr_db",
    "pe_main",
    "pe_variant",
    "pe_ml_bound",
    "pe_floor",
    "pe_main_clamped",
)


class CsvFormatError(ValueError):
    """Missing columns, empty file, or unparsable numeric fields."""


def load_rows(path, required: tuple) -> list[dict]:
    """Read a CSV as a list of dicts, checking the required columns exist
    and that at least one data row is present."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise CsvFormatError(f"{path}: missing columns {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return rows


def _floats(rows: list[dict], column: str) -> list[float]:
    try:
        return [float(r[column]) for r in rows]
    except ValueError as exc:
        raise CsvFormatError(f"bad numeric value in column {column}: {exc}") from None


def load_ber(path) -> dict[str, tuple[list[float], list[float]]]:
    """detector -> (snr_db, ber) series, each sorted by SNR."""
    rows = load_rows(path, BER_COLUMNS)
    series: dict[str, list] = {}
    for row in rows:
        series.setdefault(row["detector"], []).append(
            (float(row["snr_db"]), float(row["ber"]))
        )
    return {
        det: tuple(zip(*sorted(points)))
        for det, points in sorted(series.items())
    }


def load_noise(path) -> dict[str, list[float]]:
    rows = load_rows(path, NOISE_COLUMNS)
    return {c: _floats(rows, c) for c in NOISE_COLUMNS}


def load_predict(path) -> dict[str, list[float]]:
    rows = load_rows(path, PREDICT_COLUMNS)
    return {c: _floats(rows, c) for c in PREDICT_COLUMNS}
