#!/usr/bin/env python3
"""Run the full pipeline over the fixed acceptance suite and print a table.

Usage: python scripts/run_suite.py [--eps 0.05] [--depth 24] [--json out.json]
"""

import argparse
import json
import time

from stogame._util import json_ready
from stogame.generators import acceptance_suite
from stogame.minmax import default_schedule
from stogame.pipeline import run_pipeline


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--depth", type=int, default=24)
    ap.add_argument("--json", default=None, help="optional summary output path")
    args = ap.parse_args()

    schedule = default_schedule(args.depth)
    rows = []
    start = time.monotonic()
    for game in acceptance_suite():
        t0 = time.monotonic()
        res = run_pipeline(game, eps=args.eps, schedule=schedule)
        summ = res.summary()
        summ["seconds"] = round(time.monotonic() - t0, 3)
        rows.append(summ)
        flag = "ok " if summ["ok"] else "FAIL"
        print(f"{flag} {summ['game']:22s} sets={''.join(summ['kinds']):6s} "
              f"tr={len(summ['transient'])} "
              f"ir={summ['ir_worst_gain']:.4f} "
              f"drift={summ['submartingale_min_drift']:+.2e} "
              f"t={summ['seconds']:.2f}s")
    total = time.monotonic() - start
    n_ok = sum(1 for r in rows if r["ok"])
    print(f"\n{n_ok}/{len(rows)} games ok in {total:.1f}s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(json_ready(rows), fh, indent=2, sort_keys=True)
        print(f"wrote {args.json}")
    return 0 if n_ok == len(rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
