"""Per-level busy time of TP-BFS and A-GJH on one model, plus overall utilization.

    python3 scripts/load_balance.py --model circle --dirs oct --step 1e-4 --bound 3 --workers 4
"""

import argparse
import json

from parreach.benchmarks import builtin
from parreach.engines import run_agjh, run_tpbfs
from parreach.geometry import TemplateDirections
from parreach.postc import ReachParams


def summarize(stats):
    rows = []
    for level, busy in enumerate(stats.level_busy):
        active = [b for b in busy if b > 0]
        spread = max(active) / min(active) if len(active) == len(busy) else float("inf")
        rows.append({"level": level, "busy": busy, "idle_workers": len(busy) - len(active), "spread": spread})
    return {"engine": stats.engine, "wall": stats.wall, "utilization": stats.utilization, "levels": rows}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="circle")
    ap.add_argument("--dirs", default="oct")
    ap.add_argument("--step", type=float, default=1e-4)
    ap.add_argument("--T", type=float, default=10.0)
    ap.add_argument("--bound", type=int, default=3)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default=None, help="write the summary as JSON")
    args = ap.parse_args(argv)
    ha = builtin(args.model)
    p = ReachParams(args.T, args.step, TemplateDirections.parse(args.dirs, ha.dim))
    report = [summarize(run_tpbfs(ha, None, args.bound, p, workers=args.workers).stats),
              summarize(run_agjh(ha, None, args.bound, p, workers=args.workers).stats)]
    for r in report:
        print(f"{r['engine']}: wall {r['wall']:.2f}s, utilization {r['utilization']:.2f}")
        for row in r["levels"]:
            busy = " ".join(f"{b:7.3f}" for b in row["busy"])
            print(f"  level {row['level']}: busy [{busy}]  idle {row['idle_workers']}  spread {row['spread']:.2f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2)


if __name__ == "__main__":
    main()
