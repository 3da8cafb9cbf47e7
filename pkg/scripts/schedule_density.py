"""Tail-window lower-density proxies of the per-target revisit levels.

    python scripts/schedule_density.py --horizon 1000000 --m-max 6 --csv out.csv
"""

import argparse
import csv

from htlab.schedule import Schedule, density, density_series


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=int, default=10 ** 6)
    ap.add_argument("--m-max", type=int, default=5)
    ap.add_argument("--csv", default=None, help="write (m, N, hits, proxy) series here")
    args = ap.parse_args()

    sched = Schedule.build(args.horizon)
    W = int(sched.levels[-1])
    print(f"stages 1..{args.horizon}, levels up to {W}")
    print(f"{'m':>2} {'hits':>8} {'lower':>9} {'upper':>9} {'2^-(m+1)':>9}")
    rows = []
    for m in range(1, args.m_max + 1):
        hits = sched.hits(m)
        rep = density(hits, W)
        print(f"{m:>2} {rep.hits:>8} {rep.lower:>9.5f} {rep.upper:>9.5f} {2.0 ** -(m + 1):>9.5f}")
        rows.extend([m, *r] for r in density_series(hits, W))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["m", "N", "hits", "proxy"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
