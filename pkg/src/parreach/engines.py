"""Breadth-first exploration engines: sequential, lock-free parallel (A-GJH) and task parallel (TP-BFS)."""

from __future__ import annotations

import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .automaton import HybridAutomaton, SymbolicState
from .cost import flow_cost, jump_cost
from .geometry import TemplatePolytope
from .postc import (Flowpipe, ReachParams, assemble_flowpipe, check_start, compute_flowpipe,
                    discretize, first_violation, invariant_prefix, support_sequence)
from .postd import JumpTask, merge_images, post_d_successors, run_jump_task


@dataclass(eq=False)
class Entry:
    """One processed symbolic state with its flowpipe and BFS bookkeeping."""

    state: SymbolicState
    flowpipe: Flowpipe
    level: int
    parent: "Entry | None" = None
    transition: int | None = None
    worker: int = 0
    index: int = -1


@dataclass
class RunStats:
    engine: str
    workers: int = 1
    levels: int = 0
    post_c: int = 0
    post_d: int = 0
    successors: int = 0
    support_samples: int = 0
    frontier: int = 0
    wall: float = 0.0
    busy: list = field(default_factory=list)
    level_busy: list = field(default_factory=list)
    level_active: list = field(default_factory=list)
    balance: list = field(default_factory=list)

    @property
    def total_posts(self) -> int:
        return self.post_c + self.post_d

    @property
    def utilization(self) -> float:
        if self.wall <= 0 or not self.busy:
            return 0.0
        return float(min(1.0, max(0.0, sum(self.busy) / (self.workers * self.wall))))

    def as_dict(self) -> dict:
        return {
            "engine": self.engine, "workers": self.workers, "levels": self.levels,
            "post_c": self.post_c, "post_d": self.post_d, "total_posts": self.total_posts,
            "successors": self.successors, "support_samples": self.support_samples,
            "frontier": self.frontier, "wall": self.wall, "busy": list(self.busy),
            "utilization": self.utilization, "level_busy": [list(b) for b in self.level_busy],
            "level_active": [list(a) for a in self.level_active], "balance": list(self.balance),
        }


@dataclass
class ReachResult:
    levels: list
    stats: RunStats
    write_log: list = field(default_factory=list)

    def __post_init__(self):
        k = 0
        for lvl in self.levels:
            for e in lvl:
                e.index = k
                k += 1

    def entries(self) -> list[Entry]:
        return [e for lvl in self.levels for e in lvl]

    def flowpipes(self) -> list[Flowpipe]:
        return [e.flowpipe for e in self.entries()]

    def signature(self, decimals: int = 9) -> list:
        """Per level, the sorted multiset of (location, rounded flowpipe bounds)."""
        out = []
        for lvl in self.levels:
            keys = []
            for e in lvl:
                b = np.round(e.flowpipe.bounds, decimals) + 0.0
                keys.append((e.state.loc, b.shape, b.tobytes()))
            out.append(sorted(keys))
        return out


def _start(init, ha):
    init = ha.init if init is None else init
    check_start(init, ha)
    return init


def _contained(s: SymbolicState, seen: dict) -> bool:
    if not isinstance(s.set, TemplatePolytope):
        return False
    for b in seen.get((s.loc, s.set.template), ()):
        if np.all(s.set.bounds <= b + 1e-9):
            return True
    return False


def _process(state, ha, p, aggregate):
    f = compute_flowpipe(state, ha, p)
    return f, post_d_successors(f, ha, p.directions, aggregate)


def run_seq(ha: HybridAutomaton, init: SymbolicState | None = None, bound: int = 0,
            p: ReachParams | None = None, containment: bool = False, aggregate: bool = True) -> ReachResult:
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    init = _start(init, ha)
    stats = RunStats("seq")
    levels: list[list[Entry]] = []
    seen: dict = {}
    queue = deque([(init, 0, None, None)])
    t0, c0 = time.perf_counter(), time.thread_time()
    while queue:
        state, level, parent, k = queue.popleft()
        if level > bound:
            stats.frontier = len(queue) + 1
            break
        if isinstance(state.set, TemplatePolytope):
            seen.setdefault((state.loc, state.set.template), []).append(state.set.bounds)
        f, succ = _process(state, ha, p, aggregate)
        stats.post_c += 1
        stats.post_d += 1
        stats.support_samples += f.support_samples
        while len(levels) <= level:
            levels.append([])
            stats.level_active.append([0])
        e = Entry(state, f, level, parent, k)
        levels[level].append(e)
        stats.level_active[level][0] += 1
        stats.levels = level
        for tk, s in succ:
            if containment and _contained(s, seen):
                continue
            stats.successors += 1
            if containment and isinstance(s.set, TemplatePolytope):
                seen.setdefault((s.loc, s.set.template), []).append(s.set.bounds)
            queue.append((s, level + 1, e, tk))
    stats.wall = time.perf_counter() - t0
    stats.busy = [time.thread_time() - c0]
    return ReachResult(levels, stats)


class _Pool:
    """N worker threads stepping through phases separated by a barrier.

    Before each phase the barrier action calls ``advance()`` (on one thread,
    while the others wait); then every worker w runs ``work(w)``.
    """

    def __init__(self, n: int, advance, work):
        self.n = n
        self.advance = advance
        self.work = work
        self.done = False
        self.error: BaseException | None = None
        self.busy = [0.0] * n

    def _action(self):
        try:
            self.done = self.advance() or self.error is not None
        except BaseException as exc:  # surfaced in run()
            self.error = exc
            self.done = True

    def _worker(self, w, barrier):
        try:
            while True:
                barrier.wait()
                if self.done:
                    return
                c = time.thread_time()
                try:
                    self.work(w)
                finally:
                    self.busy[w] += time.thread_time() - c
        except threading.BrokenBarrierError:
            return
        except BaseException as exc:
            self.error = exc
            barrier.abort()

    def run(self):
        barrier = threading.Barrier(self.n, action=self._action)
        threads = [threading.Thread(target=self._worker, args=(w, barrier), daemon=True) for w in range(self.n)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if self.error is not None:
            raise self.error


def run_agjh(ha: HybridAutomaton, init: SymbolicState | None = None, bound: int = 0,
             p: ReachParams | None = None, workers: int = 4, seed: int = 0,
             aggregate: bool = True) -> ReachResult:
    """Level-synchronous BFS over a two-buffer N x N work list.

    Worker w reads row w of the read buffer and writes only column w of the
    write buffer, choosing the row at random; no locks guard the lists.
    """
    if workers < 1:
        raise ValueError("need at least one worker")
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    N = workers
    init = _start(init, ha)
    stats = RunStats("agjh", workers=N)
    wl = [[[[] for _ in range(N)] for _ in range(N)] for _ in range(2)]
    wl[0][0][0].append((init, None, None))
    levels: list[list[Entry]] = []
    write_log: list = []
    local = [dict(entries=[], log=[], samples=0, busy=0.0) for _ in range(N)]
    st = {"t": 1, "level": -1}

    def advance():
        t, level = st["t"], st["level"]
        if level >= 0:
            lvl = []
            active = []
            for w in range(N):
                lvl.extend(local[w]["entries"])
                active.append(len(local[w]["entries"]))
            stats.level_busy.append([local[w]["busy"] for w in range(N)])
            for w in range(N):
                write_log.extend(local[w]["log"])
                stats.support_samples += local[w]["samples"]
                local[w] = dict(entries=[], log=[], samples=0, busy=0.0)
            levels.append(lvl)
            stats.level_active.append(active)
            stats.post_c += len(lvl)
            stats.post_d += len(lvl)
            stats.levels = level
        st["t"] = t = 1 - t
        st["level"] = level = level + 1
        pending = sum(len(c) for row in wl[t] for c in row)
        if pending == 0:
            return True
        if level > bound:
            stats.frontier = pending
            return True
        return False

    def work(w):
        t, level = st["t"], st["level"]
        rng = np.random.default_rng([seed, level, w])
        row = wl[t][w]
        out = wl[1 - t]
        mine = local[w]
        for q in range(N):
            items, row[q] = row[q], []
            for state, parent, k in items:
                c = time.thread_time()
                f, succ = _process(state, ha, p, aggregate)
                e = Entry(state, f, level, parent, k, worker=w)
                mine["entries"].append(e)
                mine["samples"] += f.support_samples
                for tk, s in succ:
                    r = int(rng.integers(N))
                    out[r][w].append((s, e, tk))
                    mine["log"].append((level, r, w, w))
                mine["busy"] += time.thread_time() - c

    pool = _Pool(N, advance, work)
    t0 = time.perf_counter()
    pool.run()
    stats.wall = time.perf_counter() - t0
    stats.busy = pool.busy
    stats.successors = sum(len(l) for l in levels[1:]) + stats.frontier
    return ReachResult(levels, stats, write_log)


def _chunks(costs, n):
    """Contiguous assignment of tasks to n workers by prefix cost; returns (owner list, per-core target)."""
    total = int(sum(costs))
    per_core = max(1, math.ceil(total / n))
    owners = []
    start = 0
    for c in costs:
        owners.append(min(n - 1, start // per_core))
        start += c
    return owners, per_core


def _strided(size: int, n: int) -> np.ndarray:
    """Indices 0..size-1 ordered by residue mod n, so any contiguous slice spans the whole run."""
    return np.concatenate([np.arange(r, size, n) for r in range(n)]) if size else np.zeros(0, dtype=int)


def _unit_pieces(sizes, n):
    """Cut the concatenated unit list of several runs into n contiguous pieces of at most ceil(total/n).

    Units of a run are listed in strided order. Returns, per worker, a list of
    (run index, index array).
    """
    total = int(sum(sizes))
    per_core = max(1, math.ceil(total / n))
    out = [[] for _ in range(n)]
    offset = 0
    for r, size in enumerate(sizes):
        order = _strided(size, n)
        i = 0
        while i < size:
            w = min(n - 1, (offset + i) // per_core)
            stop = size if w == n - 1 else min(size, (w + 1) * per_core - offset)
            out[w].append((r, order[i:stop]))
            i = stop
        offset += size
    return out, per_core


def run_tpbfs(ha: HybridAutomaton, init: SymbolicState | None = None, bound: int = 0,
              p: ReachParams | None = None, workers: int = 4, aggregate: bool = True) -> ReachResult:
    """Level-synchronous BFS where each level's post operations are split into cost-balanced atomic tasks.

    Phases per level: direction tasks of the continuous post, per-state join,
    guard/reset tasks of the discrete post, per-transition join.
    """
    if workers < 1:
        raise ValueError("need at least one worker")
    if bound < 0:
        raise ValueError("bound must be nonnegative")
    N = workers
    init = _start(init, ha)
    D = p.directions
    stats = RunStats("tpbfs", workers=N)
    levels: list[list[Entry]] = []
    wl = [[[] for _ in range(N)] for _ in range(2)]
    wl[0][0].append((init, None, None))
    phases = ("postc", "joinc", "postd", "joind")
    st = {"t": 1, "level": -1, "phase": len(phases) - 1}
    assign = [[] for _ in range(N)]
    results = [[] for _ in range(N)]
    level_busy = [0.0] * N
    # level-local state
    lv: dict = {}

    def record_balance(phase, costs, owners, per_core):
        assigned = [0] * N
        for c, o in zip(costs, owners):
            assigned[o] += c
        stats.balance.append({"level": st["level"], "phase": phase, "per_core": per_core,
                              "max_task": max(costs) if costs else 0, "assigned": assigned})

    def plan_postc():
        items = [it for w in range(N) for it in wl[st["t"]][w]]
        for w in range(N):
            wl[st["t"]][w] = []
        if not items:
            return True
        if st["level"] > bound:
            stats.frontier = len(items)
            return True
        cap_extra = math.ceil(p.T / 100 / p.step) + 1
        discs, caps, dirs, inv_cols, tasks, costs = [], [], [], [], [], []
        for si, (state, _, _) in enumerate(items):
            check_start(state, ha)
            loc = ha.location(state.loc)
            discs.append(discretize(loc.dynamics, state.set, p.step))
            est = flow_cost(state, ha, p)
            caps.append(min(p.steps, est.j + cap_extra))
            # template directions, then invariant normals -a not already in the template
            rows = list(D.matrix)
            cols = []
            for hs in loc.invariant:
                neg = -hs.normal
                hit = [r for r, d in enumerate(rows) if np.array_equal(d, neg)]
                if not hit:
                    rows.append(neg)
                    hit = [len(rows) - 1]
                cols.append(hit[0])
            dirs.append(rows)
            inv_cols.append(cols)
            for d in range(len(rows)):
                tasks.append((si, d))
                costs.append(max(1, est.j))
        lv.clear()
        lv.update(items=items, discs=discs, caps=caps, dirs=dirs, inv_cols=inv_cols,
                  columns=[[None] * len(r) for r in dirs])
        owners, per_core = _chunks(costs, N)
        record_balance("postc", costs, owners, per_core)
        for w in range(N):
            assign[w] = []
        for task, o in zip(tasks, owners):
            assign[o].append(task)
        stats.level_active.append([len(assign[w]) for w in range(N)])
        return False

    def work_postc(w):
        cols = lv["columns"]
        for si, d in assign[w]:
            cols[si][d] = support_sequence(lv["discs"][si], lv["dirs"][si][d], lv["caps"][si])

    def plan_joinc():
        items = lv["items"]
        costs = [lv["caps"][si] for si in range(len(items))]
        owners, per_core = _chunks(costs, N)
        for w in range(N):
            assign[w] = [si for si, o in enumerate(owners) if o == w]
        lv["flowpipes"] = [None] * len(items)
        return False

    def work_joinc(w):
        for si in assign[w]:
            state = lv["items"][si][0]
            disc = lv["discs"][si]
            inv = ha.location(state.loc).invariant
            cols = lv["columns"][si]
            cap = lv["caps"][si]
            if inv:
                j = first_violation([cols[c] for c in lv["inv_cols"][si]], [hs.offset for hs in inv])
                if j is None:
                    j = cap if cap == p.steps else invariant_prefix(disc, inv, p.steps)
            else:
                j = p.steps
            if j > cap:
                cols = [support_sequence(disc, d, j) for d in D.matrix]
            f = assemble_flowpipe(state.loc, D, cols[:len(D)], j, inv)
            f.step = p.step
            lv["flowpipes"][si] = f
            lv["columns"][si] = None

    def plan_postd():
        items, fps = lv["items"], lv["flowpipes"]
        entries = []
        for (state, parent, k), f in zip(items, fps):
            entries.append(Entry(state, f, st["level"], parent, k))
            stats.support_samples += f.support_samples
        levels.append(entries)
        stats.post_c += len(entries)
        stats.post_d += len(entries)
        stats.levels = st["level"]
        runs = [(si, k) for si, f in enumerate(fps) for k in ha.outgoing(f.loc)]
        sizes = [jump_cost(fps[si]) for si, _ in runs]
        pieces, per_core = _unit_pieces(sizes, N)
        assigned = [sum(len(ix) for _, ix in pieces[w]) for w in range(N)]
        stats.balance.append({"level": st["level"], "phase": "postd", "per_core": per_core,
                              "max_task": 1 if sizes else 0, "assigned": assigned})
        lv.update(entries=entries, runs=runs)
        for w in range(N):
            assign[w] = [JumpTask(runs[r][0], runs[r][1], ix) for r, ix in pieces[w]]
        return False

    def work_postd(w):
        out = []
        for task in assign[w]:
            f = lv["flowpipes"][task.flow_index]
            out.append((task.flow_index, task.transition, run_jump_task(task, f, ha, D)))
        results[w] = out

    def plan_joind():
        groups: dict = {}
        for w in range(N):
            for si, k, imgs in results[w]:
                groups.setdefault((si, k), []).extend(imgs)
            results[w] = []
        runs = lv["runs"]
        lv["groups"] = [groups.get(r, []) for r in runs]
        costs = [max(1, len(g)) for g in lv["groups"]]
        owners, _ = _chunks(costs, N)
        for w in range(N):
            assign[w] = [r for r, o in enumerate(owners) if o == w]
        return False

    def work_joind(w):
        out = wl[1 - st["t"]][w]
        entries, runs = lv["entries"], lv["runs"]
        for r in assign[w]:
            si, k = runs[r]
            for s in merge_images(ha, k, lv["groups"][r], aggregate):
                out.append((s, entries[si], k))

    planners = (plan_postc, plan_joinc, plan_postd, plan_joind)
    workers_fn = (work_postc, work_joinc, work_postd, work_joind)

    def advance():
        nxt = (st["phase"] + 1) % len(phases)
        if nxt == 0:
            if st["level"] >= 0:
                stats.level_busy.append(list(level_busy))
            for w in range(N):
                level_busy[w] = 0.0
            st["t"] = 1 - st["t"]
            st["level"] += 1
        st["phase"] = nxt
        return planners[nxt]()

    def work(w):
        c = time.thread_time()
        workers_fn[st["phase"]](w)
        level_busy[w] += time.thread_time() - c

    pool = _Pool(N, advance, work)
    t0 = time.perf_counter()
    pool.run()
    stats.wall = time.perf_counter() - t0
    stats.busy = pool.busy
    if len(stats.level_busy) < len(levels):
        stats.level_busy.append(list(level_busy))
    stats.successors = sum(len(l) for l in levels[1:]) + stats.frontier
    return ReachResult(levels, stats)


ENGINES = {"seq": run_seq, "agjh": run_agjh, "tpbfs": run_tpbfs}
