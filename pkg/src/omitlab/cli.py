"""Command-line front end.

    omit-lab <scan-kind> [--config FILE] [--set key=value]... --out PATH
             [--format csv|json] [--workers N] [--point i[,j]]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""
import argparse
import sys

from . import __version__
from .config import resolve
from .errors import ConfigError, OmitLabError
from .scans import (SCAN_KINDS, ScanSpec, axes_for, emit, evaluate_point,
                    format_cell, run_scan, _COLUMN_RENAME, _KIND_COLUMNS)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="omit-lab",
        description="Scans over the optical response of a cavity coupled to "
                    "a driven mechanical resonator pair.")
    parser.add_argument("--version", action="version",
                        version=f"omit-lab {__version__}")
    sub = parser.add_subparsers(dest="kind", metavar="scan-kind")
    for kind in SCAN_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} scan")
        p.add_argument("--config", default=None,
                       help="config file (defaults to the packaged reference "
                            "operating point)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--point", default=None, metavar="I[,J]",
                       help="evaluate a single grid point and print its row")
    return parser


def _parse_overrides(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _resolve_config(args):
    # with no --config the schema defaults apply, which are exactly the
    # packaged reference operating point
    return resolve(args.config, _parse_overrides(args.overrides))


def _run_point(spec, point_arg):
    parts = point_arg.split(",")
    if len(parts) != len(spec.axes):
        raise ConfigError(
            f"--point needs {len(spec.axes)} comma-separated indices for "
            f"this scan, got {point_arg!r}")
    try:
        idx = [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"--point indices must be integers, got "
                          f"{point_arg!r}") from exc
    axis_vals = []
    for i, ax in zip(idx, spec.axes):
        grid = ax.values()
        if not 0 <= i < len(grid):
            raise ConfigError(f"--point index {i} outside axis of length "
                              f"{len(grid)}")
        axis_vals.append(float(grid[i]))
    fields = tuple(ax.field for ax in spec.axes)
    cells, status = evaluate_point(spec.kind, spec.config.values,
                                   dict(zip(fields, axis_vals)))
    columns = (tuple(_COLUMN_RENAME.get(f, f) for f in fields)
               + _KIND_COLUMNS[spec.kind] + ("status",))
    row = list(axis_vals) + [cells[c] for c in _KIND_COLUMNS[spec.kind]] \
        + [status]
    print(",".join(columns))
    print(",".join(format_cell(c) for c in row))


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.kind is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        cfg = _resolve_config(args)
        axes = axes_for(args.kind, cfg)
        spec = ScanSpec(kind=args.kind, axes=axes, config=cfg,
                        workers=args.workers)
        if args.point is not None:
            _run_point(spec, args.point)
            return EXIT_OK
        if args.out is None:
            raise ConfigError("--out is required unless --point is given")
        result = run_scan(spec)
        emit(result, args.format, args.out)
    except ConfigError as exc:
        print(f"omit-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"omit-lab: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (OmitLabError, ArithmeticError) as exc:
        print(f"omit-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
