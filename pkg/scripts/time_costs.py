"""Mean per-call time of the Euclidean, CS and CSC distance costs."""
import argparse
import os

from uavmission.bench import time_cost_functions, write_timing_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--repetitions", type=int, default=50)
    ap.add_argument("--out", default="out/timing")
    args = ap.parse_args()
    rows = time_cost_functions(args.samples, repetitions=args.repetitions)
    os.makedirs(args.out, exist_ok=True)
    write_timing_csv(rows, os.path.join(args.out, "cost_timing.csv"))
    for r in rows:
        print(f"{r.cost:9s} {r.mean_seconds:.3e} s/call ({r.calls} calls)")


if __name__ == "__main__":
    main()
