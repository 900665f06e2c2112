"""Command-line interface.

Subcommands: ber, noise, predict, validate, version.  Simulation flags
mirror the SimConfig fields; a ``key = value`` config file can be supplied
with --config, and explicit flags override it.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, harness, validation
from .harness import ConfigError, SimConfig


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--n", type=int, help="antennas per node (even)")
    p.add_argument("--mod", choices=["qpsk", "qam16", "qam64"], help="modulation")
    p.add_argument("--snr", help="SNR grid as start:stop:step (dB)")
    p.add_argument("--trials", type=int, help="trials per SNR point")
    p.add_argument("--min-errors", type=int, help="min bit errors per point (0 disables)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--detectors", help="comma list from zf,ml,plattice")
    p.add_argument("--hc-policy", choices=sorted(harness.HC_POLICY_TOKENS))
    p.add_argument("--regime", choices=sorted(harness.REGIME_TOKENS))
    p.add_argument("--channel-mode", choices=["per_trial", "per_point"])
    p.add_argument("--sigma-h-sq", type=float, help="channel entry variance")
    p.add_argument("--p-s", type=float, help="per-user transmit power")
    p.add_argument("--ensemble", type=int, help="predictor ensemble size")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")


def build_config(args: argparse.Namespace) -> SimConfig:
    values = {}
    if args.config is not None:
        values.update(harness.load_config_file(args.config))
    flag_map = {
        "n": "n",
        "mod": "modulation",
        "trials": "trials_per_point",
        "min_errors": "min_bit_errors",
        "seed": "master_seed",
        "hc_policy": "hc_policy",
        "regime": "regime",
        "channel_mode": "channel_mode",
        "sigma_h_sq": "sigma_h_sq",
        "p_s": "p_s",
        "ensemble": "ensemble",
    }
    for flag, field_name in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[field_name] = v
    if getattr(args, "detectors", None) is not None:
        values["detectors"] = tuple(
            t.strip() for t in args.detectors.split(",") if t.strip()
        )
    if getattr(args, "snr", None) is not None:
        start, stop, step = harness.parse_snr(args.snr)
        values.update(snr_db_start=start, snr_db_stop=stop, snr_db_step=step)
    return replace(SimConfig(), **values).validate()


def _progress(label: str):
    def cb(point, snr_db, trials):
        print(f"{label}: point {point} ({snr_db:g} dB), {trials} trials", file=sys.stderr)

    return cb


def _cmd_ber(args) -> int:
    cfg = build_config(args)
    result = harness.run_sweep(cfg, progress=_progress("ber"))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    out = args.out_dir / "ber.csv"
    harness.write_ber_csv(result, out)
    print(f"wrote {out}")
    return 0


def _cmd_noise(args) -> int:
    cfg = build_config(args)
    rows = harness.run_noise_sweep(cfg, progress=_progress("noise"))
    args.out_dir.mkdir(parents=True, exist_ok=True)
    out = args.out_dir / "noise.csv"
    harness.write_noise_csv(rows, out)
    print(f"wrote {out}")
    return 0


def _cmd_predict(args) -> int:
    cfg = build_config(args)
    rows = harness.run_predict(cfg)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    out = args.out_dir / "predict.csv"
    harness.write_predict_csv(rows, out)
    print(f"wrote {out}")
    return 0


def _cmd_validate(args) -> int:
    cfg = build_config(args)
    checks = validation.run_validation(cfg.master_seed)
    failed = 0
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: {c.detail}")
        failed += 0 if c.passed else 1
    return 0 if failed == 0 else 1


def _cmd_version(_args) -> int:
    print(__version__)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plattice",
        description="Pseudo-lattice detection simulator for 3-user MIMO interference networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, desc in (
        ("ber", _cmd_ber, "Monte-Carlo BER/SER sweep -> ber.csv"),
        ("noise", _cmd_noise, "effective-noise decomposition -> noise.csv"),
        ("predict", _cmd_predict, "analytic error predictors -> predict.csv"),
        ("validate", _cmd_validate, "structural invariant suite"),
    ):
        p = sub.add_parser(name, help=desc)
        _add_sim_flags(p)
        p.set_defaults(fn=fn)
    pv = sub.add_parser("version", help="print version")
    pv.set_defaults(fn=_cmd_version)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures -> exit 1 per contract
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
