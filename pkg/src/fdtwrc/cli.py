"""Command-line front end: region / sumrate / sweep subcommands."""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .baselines import parse_scheme
from .harness import ExperimentSpec, emit, run_experiment, table_to_csv
from .model import SystemConfig, db_to_linear

log = logging.getLogger("fdtwrc")

_SWEEP_PARAMS = {
    "source-snr": "sumrate_vs_source_snr",
    "relay-snr": "sumrate_vs_relay_snr",
    "si": "sumrate_vs_si",
    "antennas": "sumrate_vs_antennas",
}


def _add_common(p, default_schemes):
    p.add_argument("--trials", type=int, default=100, help="channel realizations per point")
    p.add_argument("--seed", type=int, default=1, help="master seed")
    p.add_argument("--schemes", default=default_schemes,
                   help="comma list from: proposed,hd,fd2,ub,localcsi")
    p.add_argument("--snr-source", type=float, default=10.0, help="source SNR in dB")
    p.add_argument("--snr-relay", type=float, default=10.0, help="relay SNR in dB")
    p.add_argument("--si", type=float, default=-20.0, help="residual SI variance in dB")
    p.add_argument("--antennas", type=int, default=3, help="relay antennas (m_t = m_r)")
    p.add_argument("--gain-br", type=float, default=0.0, help="B-side link gain in dB")
    p.add_argument("--points", type=int, default=11, help="points on a region boundary")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", default=None, help="JSON file with SystemConfig overrides")
    p.add_argument("--workers", type=int, default=None, help="process pool size")


def _base_config(args):
    fields = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            fields.update(json.load(fh))
    p_src = db_to_linear(args.snr_source)
    si = db_to_linear(args.si)
    base = SystemConfig(
        m_t=args.antennas, m_r=args.antennas,
        p_a_max=p_src, p_b_max=p_src, p_r_max=db_to_linear(args.snr_relay),
        sigma2_a=si, sigma2_b=si, sigma2_r=si,
        gain_br=db_to_linear(args.gain_br),
    )
    return replace(base, **fields) if fields else base


def _schemes(args):
    return tuple(parse_scheme(s) for s in args.schemes.split(",") if s.strip())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fdtwrc",
        description="Full-duplex two-way relay simulator: rate regions, sum "
                    "rates and parameter sweeps for the proposed scheme and "
                    "its benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    region = sub.add_parser("region", help="average achievable rate-region boundary")
    _add_common(region, "proposed,hd,fd2,ub")

    sumrate = sub.add_parser("sumrate", help="sum-rate comparison at one operating point")
    _add_common(sumrate, "proposed,hd,fd2,ub")

    sweep = sub.add_parser("sweep", help="sum rate against a swept parameter")
    _add_common(sweep, "proposed,hd,fd2")
    sweep.add_argument("--param", choices=sorted(_SWEEP_PARAMS), required=True)
    sweep.add_argument("--values", required=True,
                       help="comma list of sweep values (dB, or counts for antennas)")
    return parser


def main(argv=None):
    level = os.environ.get("FDTWRC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        base = _base_config(args)
        schemes = _schemes(args)
        if args.command == "region":
            kind = "asymmetric_region" if args.gain_br != 0.0 else "rate_region"
            sweep_vals = tuple(np.linspace(0.0, 1.0, max(2, args.points)))
        elif args.command == "sumrate":
            kind = "sumrate_vs_source_snr"
            sweep_vals = (args.snr_source,)
        else:
            kind = _SWEEP_PARAMS[args.param]
            sweep_vals = tuple(float(v) for v in args.values.split(","))
        spec = ExperimentSpec(kind=kind, schemes=schemes, sweep=sweep_vals,
                              trials=args.trials, seed=args.seed, base=base)
        table = run_experiment(spec, workers=args.workers)
        if args.out:
            emit(table, args.format, args.out)
            log.info("wrote %s (%d rows)", args.out, len(table.rows))
        else:
            sys.stdout.write(table_to_csv(table))
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
