"""Run every acceptance criterion, print per-check values and write a JSON summary."""
import argparse
from pathlib import Path

from tamedsurf.acceptance import Bench, run_all
from tamedsurf.reports import write_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", type=int, default=256)
    ap.add_argument("--slack", type=float, default=0.05)
    ap.add_argument("--out", type=Path, default=Path("out/acceptance.json"))
    args = ap.parse_args()
    results = run_all(Bench(args.resolution, args.slack), echo=print)
    write_json(args.out, "acceptance", {"criteria": [r.to_dict() for r in results]},
               {"resolution": args.resolution, "slack": args.slack}, {"slack": args.slack})
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed -> {args.out}")


if __name__ == "__main__":
    main()
