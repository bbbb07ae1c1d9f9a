"""``sim`` command line.

Exit codes: 0 success, 1 config error, 2 runtime error, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__, io
from . import phase_noise as pn
from .campaign import ScenarioError, SweepConfig, result_row, run_link, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ACCEPTANCE = 0, 1, 2, 3

log = logging.getLogger("pnlink")


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(path: str | None, header, rows) -> None:
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if close:
            fh.close()


def cmd_psd(args) -> int:
    try:
        model = pn.get_model(args.model)
        if args.fc_ghz is not None:
            model = model.at_carrier(args.fc_ghz * 1e9)
        table = pn.psd_table(model, args.fmin, args.fmax, args.points)
    except ValueError as exc:
        raise io.ConfigError(str(exc)) from exc
    _write_csv(args.out, ["offset_hz", "psd_dbc_hz"], ([repr(float(f)), repr(float(p))] for f, p in table))
    return EXIT_OK


def cmd_run(args) -> int:
    raw = io.load_config(args.config, args.override)
    sc, profiles = io.build_scenario(raw)
    capture: dict = {}
    m = run_link(sc, profiles, capture if (args.dump_grid or args.dump_cpe) else None)
    row = result_row(sc, m)
    if args.out:
        io.write_results([row], args.out)
    else:
        _write_csv(None, io.RESULT_COLUMNS, [[io._fmt(row[c]) for c in io.RESULT_COLUMNS]])
    if args.dump_grid:
        _write_csv(args.dump_grid, ["subcarrier", "symbol", "role", "re", "im"], capture["grid"].to_csv_rows())
    if args.dump_cpe:
        cpe = capture["cpe"]
        if cpe is None:
            log.warning("CPE correction is off; the CPE dump is empty")
        _write_csv(args.dump_cpe, ["symbol", "phi_rad", "pilot_count"], cpe.to_csv_rows() if cpe else [])
    return EXIT_OK


def cmd_sweep(args) -> int:
    raw = io.load_config(args.config, args.override)
    sweep: SweepConfig = io.build_sweep(raw)
    out = args.out or sweep.output_path
    if not out:
        raise io.ConfigError("no output path: pass --out or set sweep.output_path")
    if args.jobs < 1:
        raise io.ConfigError("--jobs must be at least 1")
    Path(out).open("w").close()  # fail on an unwritable path before simulating
    log.info("sweep: %d points x %d seeds", sweep.n_points, sweep.seeds)
    rows, errors = run_sweep(sweep, jobs=args.jobs)
    io.write_results(rows, out)
    io.write_metadata(raw, sweep, errors, out)
    for e in errors:
        log.warning("%s", e)
    return EXIT_OK


def cmd_plot_data(args) -> int:
    header, rows = io.plot_data(io.read_results(args.inp), args.figure)
    io.write_table(header, rows, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    from .acceptance import run_criteria

    results = run_criteria(args.only or None)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sim", description="Phase-noise NR PDSCH link simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("psd", help="tabulate a phase-noise PSD")
    s.add_argument("--model", required=True, choices=sorted(pn.PRESETS))
    s.add_argument("--fmin", type=float, default=1e3)
    s.add_argument("--fmax", type=float, default=1e9)
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--fc-ghz", type=float, default=None, help="rescale the model to another carrier")
    s.add_argument("--out", default=None, help="CSV path (default stdout)")
    s.set_defaults(func=cmd_psd)

    s = sub.add_parser("run", help="run one scenario")
    s.add_argument("--config", default=None)
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out", default=None, help="results CSV (default stdout)")
    s.add_argument("--dump-grid", default=None, metavar="CSV", help="received grid of slot 0")
    s.add_argument("--dump-cpe", default=None, metavar="CSV", help="CPE estimates of slot 0")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    s.add_argument("--out", default=None)
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("plot-data", help="aggregate a results table for one figure")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--figure", required=True, choices=io.FIGURES)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plot_data)

    s = sub.add_parser("check", help="run the acceptance suite")
    s.add_argument("--only", type=int, nargs="*", metavar="N")
    s.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except io.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScenarioError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
