"""Sweep the disparity parameter over a grid and write the CSV (optionally a plain-text chart).

    python3 scripts/delta_sweep.py DATA.csv CONFIG.json [--grid 0:1:0.05] [--workers 4] [--chart]
"""
import argparse
import sys

from deconfound.cli import RunConfig, load
from deconfound.flow import default_grid, delta_sweep, format_sweep, mh_monotone, parse_grid


def chart(records, width=50):
    vals = [r.pr_or for r in records] + [r.crude_or for r in records if r.error is None]
    lo, hi = min(vals), max(vals)
    span = (hi - lo) or 1.0
    for r in records:
        if r.error:
            print(f"{r.delta:5.2f}  {r.error}", file=sys.stderr)
            continue
        pos = int(round((r.crude_or - lo) / span * width))
        print(f"{r.delta:5.2f} |{' ' * pos}*  {r.crude_or:.4f}", file=sys.stderr)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("data")
    ap.add_argument("config")
    ap.add_argument("--grid", default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--chart", action="store_true", help="draw crude OR against delta on stderr")
    args = ap.parse_args()

    cfg = RunConfig.from_json(args.config)
    t = load(args.data, cfg)
    grid = parse_grid(args.grid) if args.grid else default_grid()
    records = delta_sweep(t, grid, cfg.solver(), workers=args.workers)
    sys.stdout.write(format_sweep(records))
    if args.chart:
        chart(records)
        print(f"MH OR monotone along the grid: {mh_monotone(records)}", file=sys.stderr)


if __name__ == "__main__":
    main()
