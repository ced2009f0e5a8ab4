"""Cheap cost estimates for the post operators, driven by an invariant-crossing time search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .automaton import Dynamics, FixedInput, HybridAutomaton, SymbolicState
from .geometry import AffineImage, ConvexSet, HalfSpace, satisfies
from .numerics import mat_exp, phi1
from .postc import Flowpipe, ReachParams


class NotDeterministic(ValueError):
    """Exact reach at a time point needs a fixed input."""


@dataclass(frozen=True)
class CrossingSearchParams:
    discretization: int = 10

    def __post_init__(self):
        if self.discretization < 2:
            raise ValueError("discretization must be at least 2")

    def coarse(self, T: float) -> float:
        return T / self.discretization

    def fine(self, T: float) -> float:
        return T / self.discretization ** 2


@dataclass(frozen=True)
class CostEstimate:
    j: int
    flow_cost: int
    jump_cost: int
    crossing: float = 0.0


def reach_at_time(X0: ConvexSet, dyn: Dynamics, t: float) -> ConvexSet:
    """Exact states reached at time t: e^{At} X0 + phi1(A, t) u."""
    if not isinstance(dyn.input, FixedInput):
        raise NotDeterministic("reach_at_time needs a fixed input")
    return AffineImage(mat_exp(dyn.A, t), X0, phi1(dyn.A, t) @ dyn.input.u)


def crossing_time(I: list[HalfSpace], X0: ConvexSet, dyn: Dynamics, T: float,
                  params: CrossingSearchParams = CrossingSearchParams()) -> float:
    """Upper bound on the first time the reachable image leaves I, or T if it never does.

    A coarse sweep finds the first failing step; the step before it is then
    rescanned at a finer step. When the first coarse step after t = 0 already
    fails, the answer is 0.
    """
    if T <= 0:
        raise ValueError("time horizon must be positive")
    k = params.discretization
    step = T / k

    def ok(t):
        return satisfies(reach_at_time(X0, dyn, t), I)

    i = 0
    while ok(step * i):
        i += 1
        if i > k:
            return T
    if i > 1:
        t1 = step * (i - 1)
    else:
        return 0.0
    step /= k
    i = 0
    while i < k and ok(t1 + i * step):
        i += 1
    return min(T, t1 + i * step)


def _estimation_dynamics(dyn: Dynamics) -> Dynamics:
    if isinstance(dyn.input, FixedInput):
        return dyn
    U = dyn.input.U
    return Dynamics(dyn.A, FixedInput((U.lower + U.upper) / 2))


def flow_cost(s: SymbolicState, ha: HybridAutomaton, p: ReachParams,
              params: CrossingSearchParams = CrossingSearchParams()) -> CostEstimate:
    loc = ha.location(s.loc)
    N = p.steps
    if not loc.invariant:
        return CostEstimate(N, N * len(p.directions), N, p.T)
    t = crossing_time(list(loc.invariant), s.set, _estimation_dynamics(loc.dynamics), p.T, params)
    j = min(N, math.ceil(t / p.step - 1e-9))
    return CostEstimate(j, j * len(p.directions), j, t)


def jump_cost(f: Flowpipe) -> int:
    """Discrete post on a flowpipe costs one unit per emitted polytope (per transition)."""
    return len(f)


def total_cost(estimates) -> int:
    return int(np.sum([e.flow_cost for e in estimates], dtype=np.int64)) if estimates else 0
