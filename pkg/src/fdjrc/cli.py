"""Command-line entry point: ``fdjrc {design,radar,experiment}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import radarproc
from .config import ConfigError, list_presets, load_config
from .experiments import emit_csv, radar_records, run_design, run_experiment, run_radar

log = logging.getLogger("fdjrc")


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, base_seed=args.seed)
    return cfg


def cmd_design(args):
    cfg = _load(args)
    records = run_design(cfg, args.angle)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")


def cmd_experiment(args):
    cfg = _load(args)
    records = run_experiment(cfg)
    emit_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")


def cmd_radar(args):
    cfg = _load(args)
    r = cfg.radar
    res = run_radar(cfg, cfg.base_seed)
    prefix = Path(args.out_prefix)
    if prefix.parent and not prefix.parent.exists():
        prefix.parent.mkdir(parents=True)
    for est in res.estimates:
        path = f"{prefix}_range_velocity_t{est.index}.csv"
        radarproc.export_range_velocity_csv(est.rd, path, r.max_range_m, r.max_velocity_mps)
        print(f"target {est.index} @ {est.angle_deg:g} deg: range {est.rd.range_m:.3f} m "
              f"(true {est.range_true:g}), velocity {est.rd.velocity_mps():.3f} m/s "
              f"(true {est.velocity_true:g})")
    radarproc.export_angle_range_csv(res.angle_range, f"{prefix}_angle_range.csv", r.max_range_m)
    emit_csv(radar_records(cfg, res, 0), f"{prefix}_estimates.csv")
    print(f"wrote maps and estimates with prefix {prefix}")


def build_parser():
    p = argparse.ArgumentParser(prog="fdjrc", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True,
                        help=f"JSON config file or preset name ({', '.join(list_presets())})")
        sp.add_argument("--seed", type=int, default=None, help="override base_seed")

    sp = sub.add_parser("design", help="one-shot beamformer design and metrics")
    common(sp)
    sp.add_argument("--angle", type=float, required=True, help="target angle in degrees")
    sp.add_argument("--out", required=True, help="output CSV")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("radar", help="range/velocity and angle/range maps")
    common(sp)
    sp.add_argument("--out-prefix", required=True, help="prefix for the map CSV files")
    sp.set_defaults(func=cmd_radar)

    sp = sub.add_parser("experiment", help="Monte Carlo experiments to CSV")
    common(sp)
    sp.add_argument("--out", required=True, help="output CSV")
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
