"""Shortest-path kernel timings against the reference triple loop.

    python scripts/bench_apsp.py --sizes 128,512,1024 --out results/bench_apsp.csv
"""

import argparse
import os

from threestage.pipeline import bench_apsp, rows_to_csv, write_csv

FIELDS = ["n", "kernel", "seconds", "speedup", "max_abs_diff"]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="128,512,1024")
    ap.add_argument("--kernels", default="reference,rows,blocked")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--out", default="results/bench_apsp.csv")
    args = ap.parse_args()

    rows = bench_apsp([int(s) for s in args.sizes.split(",")], args.kernels.split(","), args.repeats)
    write_csv(args.out, rows, FIELDS)
    print(f"# {os.cpu_count()} logical core(s)")
    print(rows_to_csv(rows, FIELDS), end="")


if __name__ == "__main__":
    main()
