"""Command-line entry point (``maccollab``).

Subcommands::

    simulate --dgp {1,2} --n 1000 --reps R --seed S --out PATH
    bench    --corpus DIR/manifest.json --max-rows N --reps R --out PATH
    fit      --data FILE --method METHOD [--config FILE] [--out MODEL.json]
    report   --in REPORT.json --format {csv,json} [--out PATH]
    pmlb fetch (--all | NAME ...) [--cache DIR]

The cache directory for calibration constants and downloads defaults to
``$MACCOLLAB_CACHE`` or ``~/.cache/maccollab``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dgp, harness, pmlb
from .data import split, standardize
from .errors import MacError
from .stats import mspe


def _config(args) -> harness.HarnessConfig:
    if args.config:
        return harness.HarnessConfig.load(args.config)
    return harness.desk_config() if args.preset == "desk" else harness.HarnessConfig()


def _emit(report, out, fmt):
    paths = harness.emit_report(report, fmt, out)
    for line in harness.summary_lines(report):
        print(line)
    for s in report.skips:
        print(f"skipped {s.dataset} rep={s.replication} {s.method}: {s.error}", file=sys.stderr)
    print("wrote " + ", ".join(map(str, paths)))


def cmd_simulate(args):
    source = harness.DgpSource(args.dgp, n=args.n, mc_size=args.mc_size, cache_dir=args.cache)
    plan = harness.ExperimentPlan(source, tuple(args.methods), args.reps, base_seed=args.seed, config=_config(args))
    _emit(harness.run_experiment(plan), args.out, args.format)


def cmd_bench(args):
    entries = pmlb.cached_corpus(args.corpus, args.max_rows)
    if args.limit:
        entries = entries[: args.limit]
    if not entries:
        raise SystemExit(f"no datasets under {args.max_rows} rows in {args.corpus}")
    plan = harness.ExperimentPlan(harness.PmlbSource(tuple(entries)), tuple(args.methods), args.reps,
                                  base_seed=args.seed, config=_config(args))
    _emit(harness.run_experiment(plan), args.out, args.format)


def cmd_fit(args):
    data = pmlb.parse(args.data)
    if args.standardize:
        data, _ = standardize(data)
    train, val = split(data, (1 - args.val_fraction, args.val_fraction), args.seed).parts(data)[:2]
    model = harness.fit_method(args.method, train, val, _config(args), args.seed)
    print(f"{args.method}: train rows {train.n}, val rows {val.n}, "
          f"val mspe {mspe(val.target, model.predict(val.features)):.6g}")
    if args.out:
        Path(args.out).write_text(model.dumps())
        print(f"wrote {args.out}")


def cmd_report(args):
    report = harness.load_report(args.inp)
    if args.out:
        _emit(report, args.out, args.format)
        return
    if args.format == "json":
        json.dump(report.to_dict(), sys.stdout, indent=1, sort_keys=True)
        print()
    else:
        sys.stdout.write(harness.csv_text(harness.long_table(report)))
        print()
        sys.stdout.write(harness.csv_text(harness.aggregate_table(report)))


def cmd_pmlb_fetch(args):
    if args.all == bool(args.names):
        raise SystemExit("give dataset names or --all (not both)")
    names = [m.name for m in pmlb.corpus(args.max_rows)] if args.all else args.names
    failed = 0
    for name in names:
        try:
            path = pmlb.fetch(name, args.cache)
        except MacError as err:
            failed += 1
            print(f"failed {name}: {err}", file=sys.stderr)
            continue
        print(path)
    if failed:
        raise SystemExit(f"{failed} of {len(names)} datasets failed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maccollab", description="Machine collaboration experiments.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log per-fit progress")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, methods=True):
        p.add_argument("--config", help="JSON harness config (grids, tau, max_iter, refit_on_full_data, ...)")
        p.add_argument("--preset", choices=("desk", "full"), default="desk",
                       help="built-in config when --config is absent (default: desk)")
        p.add_argument("--seed", type=int, default=1, help="base seed; replication r uses seed + r")
        if methods:
            p.add_argument("--methods", nargs="+", choices=harness.METHODS, default=list(harness.METHODS))
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("simulate", help="run the simulation study on one DGP")
    p.add_argument("--dgp", type=int, choices=(1, 2), required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--mc-size", type=int, default=dgp.DEFAULT_MC_SIZE)
    p.add_argument("--cache", default=None, help="calibration cache directory")
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="benchmark on cached PMLB datasets")
    p.add_argument("--corpus", required=True, help="manifest.json of a PMLB cache directory")
    p.add_argument("--max-rows", type=int, default=pmlb.MAX_ROWS)
    p.add_argument("--limit", type=int, default=0, help="use only the first N datasets (by name)")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("fit", help="fit one method on a TSV file with a 'target' column")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=harness.METHODS, required=True)
    p.add_argument("--val-fraction", type=float, default=0.25)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", help="write the fitted model as JSON")
    common(p, methods=False)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="convert or summarize a JSON run report")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", help="write files instead of printing")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pmlb", help="PMLB corpus utilities")
    psub = p.add_subparsers(dest="pmlb_command", required=True)
    f = psub.add_parser("fetch", help="download datasets into the cache")
    f.add_argument("names", nargs="*")
    f.add_argument("--all", action="store_true", help="every regression dataset under --max-rows")
    f.add_argument("--max-rows", type=int, default=pmlb.MAX_ROWS)
    f.add_argument("--cache", default=str(dgp.default_cache_dir() / "pmlb"))
    f.set_defaults(func=cmd_pmlb_fetch)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except MacError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
