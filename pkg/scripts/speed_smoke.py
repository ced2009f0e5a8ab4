"""Wall time of the three engines on nav:5 (step 1e-3, bound 5); meant for hosts with at least 4 cores.

    python3 scripts/speed_smoke.py --workers 4
"""

import argparse
import os

from parreach.benchmarks import builtin
from parreach.engines import run_agjh, run_seq, run_tpbfs
from parreach.geometry import TemplateDirections
from parreach.postc import ReachParams


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="nav:5")
    ap.add_argument("--step", type=float, default=1e-3)
    ap.add_argument("--bound", type=int, default=5)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args(argv)
    ha = builtin(args.model)
    p = ReachParams(10.0, args.step, TemplateDirections.box(ha.dim))
    seq = run_seq(ha, None, args.bound, p).stats
    agjh = run_agjh(ha, None, args.bound, p, workers=args.workers).stats
    tpbfs = run_tpbfs(ha, None, args.bound, p, workers=args.workers).stats
    print(f"cores: {os.cpu_count()}")
    for s in (seq, agjh, tpbfs):
        print(f"{s.engine:6} wall {s.wall:8.2f}s  posts {s.total_posts:5}  ratio to seq {s.wall / seq.wall:5.2f}")
    ok = agjh.wall <= 1.5 * seq.wall and tpbfs.wall <= 1.5 * seq.wall
    print("within 1.5x of seq" if ok else "slower than 1.5x of seq")


if __name__ == "__main__":
    main()
