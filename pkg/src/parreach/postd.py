"""Discrete post: images of guard-hitting polytopes under the reset map, merged into successors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .automaton import HybridAutomaton, SymbolicState, Transition
from .geometry import (SAT_TOL, AffineImage, HalfSpace, TemplateDirections, TemplatePolytope,
                       poly_intersect, satisfies, stack_halfspaces, template_hull)
from .numerics import Infeasible, rows_dot
from .postc import Flowpipe


@dataclass(frozen=True, eq=False)
class JumpTask:
    """Guard test plus reset for some polytopes of one flowpipe along one transition.

    Each polytope index is one unit of work.
    """

    flow_index: int
    transition: int
    indices: np.ndarray

    @property
    def cost(self) -> int:
        return len(self.indices)


def guard_hits(f: Flowpipe, t: Transition, indices=None) -> list[int]:
    """Those of ``indices`` (default: all) whose polytope passes the per-constraint guard test."""
    idx = np.arange(len(f)) if indices is None else np.asarray(indices, dtype=int)
    if idx.size == 0:
        return []
    bi = f.template.axis_index
    if bi is not None:
        # outer box of each polytope; exact when the template is a plain box
        lo, hi = -f.bounds[idx][:, bi[1]], f.bounds[idx][:, bi[0]]
        ok = np.all(lo <= hi + 1e-12, axis=1)
        if t.guard:
            G, h = stack_halfspaces(t.guard, lo.shape[1])
            for g, b in zip(G, h):
                low = rows_dot(lo, np.maximum(g, 0.0)) + rows_dot(hi, np.minimum(g, 0.0))
                ok &= low <= b + SAT_TOL
        idx = idx[ok]
        if f.box_bounds() is not None:
            return [int(i) for i in idx]
    hits = []
    for i in map(int, idx):
        try:
            if satisfies(f.omega(i), t.guard):
                hits.append(i)
        except Infeasible:
            continue
    return hits


def apply_jump(omega: TemplatePolytope, t: Transition, D: TemplateDirections,
               target_inv: tuple[HalfSpace, ...] = ()) -> TemplatePolytope | None:
    """Template hull of M (omega /\\ guard) + v, cut by the target invariant; None when empty."""
    P = poly_intersect(omega, t.guard)
    if P.is_empty():
        return None
    image = AffineImage(t.M, P, t.v)
    return template_hull(image, D).tighten(target_inv)


def run_jump_task(task: JumpTask, f: Flowpipe, ha: HybridAutomaton, D: TemplateDirections):
    """Execute one task; returns a list of (omega index, image) for nonempty images."""
    t = ha.transitions[task.transition]
    target_inv = ha.location(t.target).invariant
    out = []
    for i in guard_hits(f, t, task.indices):
        img = apply_jump(f.omega(i), t, D, target_inv)
        if img is not None:
            out.append((i, img))
    return out


def _meets(tp: TemplatePolytope, inv) -> bool:
    try:
        return satisfies(tp, inv)
    except Infeasible:
        return False


def merge_images(ha: HybridAutomaton, transition: int, images: list[tuple[int, TemplatePolytope]],
                 aggregate: bool = True) -> list[SymbolicState]:
    """Turn the images of one transition into successor states (ordered by omega index)."""
    if not images:
        return []
    t = ha.transitions[transition]
    inv = ha.location(t.target).invariant
    images = sorted(images, key=lambda p: p[0])
    if aggregate:
        first = images[0][1]
        bounds = np.max(np.vstack([img.bounds for _, img in images]), axis=0)
        candidates = [TemplatePolytope(first.template, bounds, first.extra)]
    else:
        candidates = [img for _, img in images]
    return [SymbolicState(t.target, c) for c in candidates if _meets(c, inv)]


def jump_tasks(f: Flowpipe, flow_index: int, ha: HybridAutomaton) -> list[JumpTask]:
    return [JumpTask(flow_index, k, np.arange(len(f))) for k in ha.outgoing(f.loc)]


def post_d_successors(f: Flowpipe, ha: HybridAutomaton, D: TemplateDirections,
                      aggregate: bool = True) -> list[tuple[int, SymbolicState]]:
    """Successors of ``f`` tagged with the index of the transition that produced them."""
    out = []
    for task in jump_tasks(f, 0, ha):
        images = run_jump_task(task, f, ha, D)
        out.extend((task.transition, s) for s in merge_images(ha, task.transition, images, aggregate))
    return out


def post_d(f: Flowpipe, ha: HybridAutomaton, D: TemplateDirections, aggregate: bool = True) -> list[SymbolicState]:
    return [s for _, s in post_d_successors(f, ha, D, aggregate)]
