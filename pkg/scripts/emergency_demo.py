"""One PRBDDG run with new tasks and a damaged UAV; prints the emergency log."""
import argparse

from uavmission.bench import run_single
from uavmission.mission import random_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--emergencies", default="both", choices=["new-tasks", "damage", "both"])
    ap.add_argument("--out", default="out/emergency")
    args = ap.parse_args()
    sc = random_scenario(args.seed, 4, 20)
    report, result = run_single(sc, "PRBDDG", args.seed, emergencies=args.emergencies, out=args.out)
    for t, kind, uav, task, detail in result.events:
        if kind in ("new_task", "damage", "release", "reassign"):
            print(f"{t:7.1f} s  {kind:9s} uav={uav} task={task} {detail}")
    print(f"tasks completed per UAV: {report.task_counts}")
    print(f"total distance {report.total_distance:.1f} m, failed={report.failed}")


if __name__ == "__main__":
    main()
