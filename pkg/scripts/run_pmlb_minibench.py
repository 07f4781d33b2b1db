"""PMLB benchmark on a local cache (defaults to the bundled test fixtures).

    python3 scripts/run_pmlb_minibench.py --reps 3
    python3 scripts/run_pmlb_minibench.py --corpus ~/.cache/maccollab/pmlb/manifest.json \
        --max-rows 5000 --limit 15 --reps 5

Reports both aggregation levels: one unit per (dataset, repeat) and one
unit per dataset (repeat-averaged MSPE).
"""

from __future__ import annotations

import argparse
from pathlib import Path

from maccollab import harness, pmlb

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "pmlb" / "manifest.json"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", type=Path, default=FIXTURES)
    ap.add_argument("--max-rows", type=int, default=pmlb.MAX_ROWS)
    ap.add_argument("--limit", type=int, default=0)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results") / "pmlb.json")
    args = ap.parse_args(argv)

    entries = pmlb.cached_corpus(args.corpus, args.max_rows)
    if args.limit:
        entries = entries[: args.limit]
    plan = harness.ExperimentPlan(harness.PmlbSource(tuple(entries)), harness.METHODS, args.reps,
                                  base_seed=args.seed, config=harness.desk_config())
    report = harness.run_experiment(plan)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    harness.emit_report(report, "json", args.out)
    for level in ("pooled", "per_dataset"):
        print(f"[{level}]")
        for line in harness.summary_lines(report, level):
            print("  " + line)
    for s in report.skips:
        print(f"skipped {s.dataset} rep={s.replication} {s.method}: {s.error}")


if __name__ == "__main__":
    main()
