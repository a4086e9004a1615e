"""Command-line driver: ``beamkey {grid,eve-sweep,ga-dump,keygen}``.

Exit codes: 0 success, 2 configuration error, 3 scheme infeasible, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import RunOptions, build_options, read_config_file
from .errors import ConfigError, SchemeInfeasibleError
from .experiments import (
    eve_csv,
    ga_dump,
    grid_csv,
    keygen_json,
    run_eve_sweep,
    run_grid,
    write_atomic,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

log = logging.getLogger("beamkey")


def cmd_grid(opts: RunOptions, out_path, workers: int = 1) -> None:
    rows = run_grid(opts.session, opts.grid, workers=workers)
    write_atomic(out_path, grid_csv(rows))
    negative = sum(r.sg_negative for r in rows)
    log.info("wrote %d rows to %s (%d with negative secrecy gap)", len(rows), out_path, negative)


def cmd_eve_sweep(opts: RunOptions, out_path, workers: int = 1) -> None:
    schemes = opts.grid.schemes if "schemes" in opts.given else (opts.session.scheme,)
    for off in opts.angle_offsets_deg:
        if not -90.0 <= opts.session.theta_star_deg + off <= 90.0:
            raise ConfigError(f"offset {off} puts Eve outside [-90, 90] degrees")
    rows = run_eve_sweep(
        opts.session,
        opts.angle_offsets_deg,
        schemes=schemes,
        sessions=opts.grid.sessions_per_cell,
        base_seed=opts.grid.base_seed,
        workers=workers,
    )
    write_atomic(out_path, eve_csv(rows))
    log.info("wrote %d rows to %s", len(rows), out_path)


def cmd_ga_dump(opts: RunOptions, out_path) -> None:
    write_atomic(out_path, ga_dump(opts.session))


def cmd_keygen(opts: RunOptions, out_path) -> None:
    write_atomic(out_path, keygen_json(opts.session))


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, default=None, help="base seed (unsigned 64-bit)")
    common.add_argument("--out", required=True, help="output file")
    common.add_argument("--workers", type=int, default=1, help="worker processes for grid cells")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key; may be repeated",
    )
    common.add_argument("--scheme", help="random, null_practical, null_ideal or mmkey")
    common.add_argument("--k-factor-db", help="Rician K-factor in dB ('inf'/'-inf' allowed)")
    common.add_argument("--snr-max-db", help="highest beam-training SNR at Bob in dB")
    common.add_argument("--sessions", type=int, help="sessions per grid cell / sweep point")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="beamkey", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("grid", parents=[common], help="secrecy gap over the SNR x K grid (CSV)")
    sub.add_parser("eve-sweep", parents=[common], help="Eve's KDR versus angular offset (CSV)")
    sub.add_parser("ga-dump", parents=[common], help="dump the GA archive sorted by LOS power")
    sub.add_parser("keygen", parents=[common], help="run one session and emit keys (JSON)")
    return p


def _collect(args) -> RunOptions:
    values = read_config_file(args.config) if args.config else {}
    flag_values = {
        "scheme": args.scheme,
        "k_factor_db": args.k_factor_db,
        "snr_max_db": args.snr_max_db,
        "sessions_per_cell": None if args.sessions is None else str(args.sessions),
    }
    values.update({k: v for k, v in flag_values.items() if v is not None})
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    return build_options(values, seed=args.seed)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        opts = _collect(args)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        if args.cmd == "grid":
            cmd_grid(opts, args.out, args.workers)
        elif args.cmd == "eve-sweep":
            cmd_eve_sweep(opts, args.out, args.workers)
        elif args.cmd == "ga-dump":
            cmd_ga_dump(opts, args.out)
        else:
            cmd_keygen(opts, args.out)
    except ConfigError as exc:
        print(f"beamkey: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemeInfeasibleError as exc:
        print(json.dumps({"error": "scheme_infeasible", "reason": exc.reason}), file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"beamkey: I/O error on {exc.filename or args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
