"""Command-line front end: run an engine on a model, write region and stats files, compare engines."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import benchmarks
from .automaton import HybridAutomaton, ModelError
from .engines import ENGINES, ReachResult
from .geometry import EmptySet, TemplateDirections, project_vertices_2d
from .modelfile import ModelSyntaxError, parse_model
from .numerics import NumericalError
from .postc import EmptyFlowpipe, Flowpipe, ReachParams

EXIT_FLAGS, EXIT_MODEL, EXIT_NUMERIC = 1, 2, 3
FILE_DEFAULT_STEP = 1e-2
NAV_DEFAULT_STEP = 1e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str
    engine: str = "seq"
    bound: int = 7
    T: float = 10.0
    step: float | None = None
    dirs: str = "box"
    workers: int = 4
    seed: int = 0
    aggregate: bool = True
    containment: bool = False
    out_region: str | None = None
    out_stats: str | None = None
    project: tuple = (0, 1)

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise UsageError(f"unknown engine {self.engine!r}")
        if self.bound < 0:
            raise UsageError("--bound must be nonnegative")
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        if not self.T > 0:
            raise UsageError("--T must be positive")
        if self.step is not None and not self.step > 0:
            raise UsageError("--step must be positive")
        if self.containment and self.engine != "seq":
            raise UsageError("--containment is only available with the seq engine")


def load_model(source: str) -> HybridAutomaton:
    if os.path.isfile(source):
        with open(source) as fh:
            return parse_model(fh.read())
    return benchmarks.builtin(source)


def default_step(source: str) -> float:
    if source in benchmarks.DEFAULT_STEPS:
        return benchmarks.DEFAULT_STEPS[source]
    if source.startswith("nav:") and not os.path.isfile(source):
        return NAV_DEFAULT_STEP
    return FILE_DEFAULT_STEP


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def _axes(text: str) -> tuple:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected two comma-separated indices, e.g. 0,1") from None
    if i == j or min(i, j) < 0:
        raise argparse.ArgumentTypeError("projection axes must be distinct and nonnegative")
    return (i, j)


def _common(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--bound", type=int, default=7, help="BFS levels to explore (default 7)")
    ap.add_argument("--T", type=float, default=10.0, help="time horizon per location (default 10)")
    ap.add_argument("--step", type=float, default=None, help="sampling time; defaults depend on the model")
    ap.add_argument("--dirs", default="box", help="template directions: box, oct or uniform:<k>")
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0, help="seed for A-GJH row scattering")
    ap.add_argument("--aggregate", type=_on_off, default=True, metavar="on|off")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="parreach", description="Reachability analysis of linear hybrid automata.")
    ap.add_argument("--model", required=True, help="model file or builtin: circle, ball, oscillator, nav:N")
    ap.add_argument("--engine", default="seq", choices=sorted(ENGINES))
    _common(ap)
    ap.add_argument("--containment", type=_on_off, default=False, metavar="on|off")
    ap.add_argument("--out-region", default=None, help="write projected polygons here")
    ap.add_argument("--out-stats", default=None, help="write JSON run statistics here")
    ap.add_argument("--project", type=_axes, default=(0, 1), metavar="I,J")
    return ap


def params_for(cfg: RunConfig, ha: HybridAutomaton) -> ReachParams:
    step = cfg.step if cfg.step is not None else default_step(cfg.model)
    if step > cfg.T:
        raise UsageError("--step exceeds --T")
    try:
        D = TemplateDirections.parse(cfg.dirs, ha.dim)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return ReachParams(cfg.T, step, D)


def run_config(cfg: RunConfig, ha: HybridAutomaton) -> ReachResult:
    p = params_for(cfg, ha)
    if cfg.engine == "seq":
        return ENGINES["seq"](ha, None, cfg.bound, p, containment=cfg.containment, aggregate=cfg.aggregate)
    if cfg.engine == "agjh":
        return ENGINES["agjh"](ha, None, cfg.bound, p, workers=cfg.workers, seed=cfg.seed, aggregate=cfg.aggregate)
    return ENGINES["tpbfs"](ha, None, cfg.bound, p, workers=cfg.workers, aggregate=cfg.aggregate)


def _fmt(x) -> str:
    return repr(float(x))


def flowpipe_polygons(f: Flowpipe, axes=(0, 1)) -> list[np.ndarray]:
    """Projected vertex cycles of every polytope in ``f``; empty polytopes are skipped."""
    box = f.box_bounds()
    i, j = axes
    if box is not None:
        lo, hi = box
        if np.all(hi[:, [i, j]] - lo[:, [i, j]] > 1e-12):
            return [np.array([[a[i], a[j]], [b[i], a[j]], [b[i], b[j]], [a[i], b[j]]]) for a, b in zip(lo, hi)]
    out = []
    for k in range(len(f)):
        try:
            out.append(project_vertices_2d(f.omega(k), axes))
        except EmptySet:
            continue
    return out


def region_lines(result: ReachResult, axes=(0, 1)):
    for e in result.entries():
        head = f"{e.state.loc} {e.level}"
        for poly in flowpipe_polygons(e.flowpipe, axes):
            yield head + " " + " ".join(_fmt(v) for v in poly.reshape(-1)) + "\n"


def write_region(result: ReachResult, path: str, axes=(0, 1)) -> None:
    with open(path, "w") as fh:
        fh.writelines(region_lines(result, axes))


def stats_report(cfg: RunConfig, ha: HybridAutomaton, result: ReachResult) -> dict:
    report = result.stats.as_dict()
    conf = asdict(cfg)
    conf["project"] = list(cfg.project)
    conf["step"] = params_for(cfg, ha).step
    report["config"] = conf
    report["model"] = ha.name
    return report


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = RunConfig(args.model, args.engine, args.bound, args.T, args.step, args.dirs, args.workers,
                        args.seed, args.aggregate, args.containment, args.out_region, args.out_stats, args.project)
    except UsageError as e:
        ap.error(str(e))
    try:
        ha = load_model(cfg.model)
    except (ModelSyntaxError, ModelError, OSError) as e:
        print(f"parreach: model error: {e}", file=sys.stderr)
        return EXIT_MODEL
    if max(cfg.project) >= ha.dim:
        ap.error(f"--project axes must be below the model dimension {ha.dim}")
    try:
        params_for(cfg, ha)
        result = run_config(cfg, ha)
    except UsageError as e:
        ap.error(str(e))
    except EmptyFlowpipe as e:
        print(f"parreach: model error: {e}", file=sys.stderr)
        return EXIT_MODEL
    except NumericalError as e:
        print(f"parreach: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    report = stats_report(cfg, ha, result)
    if cfg.out_region:
        write_region(result, cfg.out_region, cfg.project)
    if cfg.out_stats:
        with open(cfg.out_stats, "w") as fh:
            json.dump(report, fh, indent=2)
    s = result.stats
    print(f"{ha.name}: engine={s.engine} workers={s.workers} levels={s.levels} post_c={s.post_c} "
          f"post_d={s.post_d} frontier={s.frontier} wall={s.wall:.3f}s utilization={s.utilization:.2f}")
    return 0


def bench(argv=None) -> int:
    """Run each model under all three engines and print a comparison table."""
    ap = _Parser(prog="parreach-bench", description="Compare the three engines on a set of models.")
    ap.add_argument("models", nargs="*", default=["circle", "ball", "oscillator", "nav:3"])
    _common(ap)
    ap.set_defaults(bound=3)
    ap.add_argument("--out", default=None, help="write the comparison as JSON")
    args = ap.parse_args(argv)
    rows = []
    for model in args.models:
        try:
            ha = load_model(model)
        except (ModelSyntaxError, ModelError, OSError) as e:
            print(f"parreach-bench: model error: {e}", file=sys.stderr)
            return EXIT_MODEL
        row = {"model": model, "engines": {}}
        for engine in ("seq", "agjh", "tpbfs"):
            try:
                cfg = RunConfig(model, engine, args.bound, args.T, args.step, args.dirs, args.workers,
                                args.seed, args.aggregate)
                result = run_config(cfg, ha)
            except UsageError as e:
                ap.error(str(e))
            except NumericalError as e:
                print(f"parreach-bench: numerical failure: {e}", file=sys.stderr)
                return EXIT_NUMERIC
            s = result.stats
            row["engines"][engine] = {"wall": s.wall, "post_c": s.post_c, "post_d": s.post_d,
                                      "total_posts": s.total_posts, "utilization": s.utilization,
                                      "workers": s.workers, "levels": s.levels}
        rows.append(row)
    print(f"{'model':<12}{'engine':<8}{'workers':>8}{'wall[s]':>10}{'posts':>8}{'util':>7}")
    for row in rows:
        for engine, c in row["engines"].items():
            print(f"{row['model']:<12}{engine:<8}{c['workers']:>8}{c['wall']:>10.3f}"
                  f"{c['total_posts']:>8}{c['utilization']:>7.2f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


def entry() -> None:
    sys.exit(main())


def bench_entry() -> None:
    sys.exit(bench())
