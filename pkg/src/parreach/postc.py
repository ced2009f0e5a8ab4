"""Continuous post: time discretization and the support-function flowpipe recurrence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .automaton import Dynamics, HybridAutomaton, SymbolicState
from .geometry import (SAT_TOL, AffineImage, Box, ConvexHullPair, ConvexSet, EmptySet,
                       HalfSpace, MinkowskiSum, TemplateDirections, TemplatePolytope,
                       project_vertices_2d, satisfies, scaled, stack_halfspaces, tighten_bounds)
from .numerics import mat_exp, rows_times


class EmptyFlowpipe(ValueError):
    """The start set does not meet the location invariant."""


@dataclass(frozen=True)
class ReachParams:
    T: float
    step: float
    directions: TemplateDirections

    def __post_init__(self):
        if not (self.T > 0 and self.step > 0):
            raise ValueError("time horizon and step must be positive")
        if self.step > self.T * (1 + 1e-12):
            raise ValueError("step exceeds the time horizon")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.T / self.step)))


@dataclass(frozen=True, eq=False)
class DiscretizedDynamics:
    phi: np.ndarray
    W: ConvexSet
    omega0: ConvexSet


def discretize(dyn: Dynamics, X0: ConvexSet, tau: float) -> DiscretizedDynamics:
    """First-order bloated discretization of x' = Ax + u, u in U, for one time step.

    Norms are infinity norms and the bloating balls are boxes, which keeps the
    remainder bound consistent with the induced matrix norm.
    """
    if tau <= 0:
        raise ValueError("time step must be positive")
    A = dyn.A
    n = A.shape[0]
    U = dyn.input.as_set()
    phi = mat_exp(A, tau)
    norm_a = float(np.linalg.norm(A, np.inf))
    if norm_a == 0.0:
        alpha = beta = 0.0
    else:
        rem = math.expm1(tau * norm_a) - tau * norm_a
        sup_u = U.axis_extent()
        alpha = rem * (X0.axis_extent() + sup_u / norm_a)
        beta = rem * sup_u / norm_a
    tau_u = scaled(tau, U)
    ones = np.ones(n)
    omega0 = ConvexHullPair(
        X0, MinkowskiSum(AffineImage(phi, X0, np.zeros(n)), MinkowskiSum(tau_u, Box(-alpha * ones, alpha * ones))))
    W = MinkowskiSum(tau_u, Box(-beta * ones, beta * ones))
    return DiscretizedDynamics(phi, W, omega0)


def transformed_directions(phi: np.ndarray, ell: np.ndarray, count: int) -> np.ndarray:
    """Rows (phi^T)^i ell for i < count, by block doubling.

    Row i is the same whatever ``count`` is, so a prefix can be extended later
    without changing earlier values.
    """
    n = ell.size
    R = np.empty((count, n))
    R[0] = ell
    filled = 1
    P = phi
    while filled < count:
        take = min(filled, count - filled)
        R[filled:filled + take] = rows_times(R[:take], P)
        filled += take
        if filled < count:
            P = P @ P
    return R


def support_sequence(disc: DiscretizedDynamics, ell: np.ndarray, count: int) -> np.ndarray:
    """Support of Omega_0..Omega_{count-1} in direction ``ell``.

    rho_{i}(l) = rho_{Omega_0}((phi^T)^i l) + sum_{k<i} rho_W((phi^T)^k l)
    """
    R = transformed_directions(disc.phi, np.asarray(ell, dtype=float), count)
    w = disc.W._support(R)
    acc = np.empty(count)
    acc[0] = 0.0
    np.cumsum(w[:-1], out=acc[1:])
    return disc.omega0._support(R) + acc


def first_violation(sequences, h) -> int | None:
    """First index where some constraint's lower value -rho(-a_k) exceeds b_k, given rho(-a_k) sequences."""
    lows = -np.column_stack(sequences)
    bad = np.flatnonzero(np.any(lows > np.asarray(h) + SAT_TOL, axis=1))
    return int(bad[0]) if bad.size else None


def invariant_prefix(disc: DiscretizedDynamics, inv, N: int, chunk: int = 64) -> int:
    """Length of the longest prefix Omega_0..Omega_{j-1} passing the invariant test."""
    if not inv:
        return N
    G, h = stack_halfspaces(inv, disc.phi.shape[0])
    count = min(N, chunk)
    while True:
        bad = first_violation([support_sequence(disc, -g, count) for g in G], h)
        if bad is not None:
            return bad
        if count == N:
            return N
        count = min(N, 4 * count)


class Flowpipe:
    """Template polytopes Omega_0..Omega_{j-1} of one continuous post, stored as a bounds matrix."""

    def __init__(self, loc: int, template: TemplateDirections, bounds: np.ndarray,
                 extra: tuple[HalfSpace, ...] = (), support_samples: int = 0, step: float = 0.0):
        self.loc = loc
        self.template = template
        self.bounds = bounds
        self.extra = extra
        self.support_samples = support_samples
        self.step = step

    def __len__(self):
        return self.bounds.shape[0]

    def omega(self, i: int) -> TemplatePolytope:
        return TemplatePolytope(self.template, self.bounds[i], self.extra)

    @property
    def omegas(self) -> list[TemplatePolytope]:
        return [self.omega(i) for i in range(len(self))]

    def box_bounds(self):
        """(lo, hi) arrays of shape (j, n) when the polytopes are plain boxes, else None."""
        bi = self.template.box_index
        if bi is None or self.extra:
            return None
        return -self.bounds[:, bi[1]], self.bounds[:, bi[0]]


def assemble_flowpipe(loc: int, template: TemplateDirections, columns, j: int, inv) -> Flowpipe:
    """Join per-direction support sequences (each at least ``j`` long) into a flowpipe."""
    if j == 0:
        bounds = np.zeros((0, len(template)))
    else:
        bounds = np.column_stack([c[:j] for c in columns])
    bounds, extra = tighten_bounds(template, bounds, inv)
    return Flowpipe(loc, template, bounds, extra, support_samples=j * len(template))


def check_start(state: SymbolicState, ha: HybridAutomaton) -> None:
    if not satisfies(state.set, ha.location(state.loc).invariant):
        raise EmptyFlowpipe(f"start set violates the invariant of location {state.loc}")


def compute_flowpipe(state: SymbolicState, ha: HybridAutomaton, p: ReachParams) -> Flowpipe:
    check_start(state, ha)
    loc = ha.location(state.loc)
    disc = discretize(loc.dynamics, state.set, p.step)
    j = invariant_prefix(disc, loc.invariant, p.steps)
    columns = [support_sequence(disc, d, j) if j else None for d in p.directions.matrix]
    f = assemble_flowpipe(state.loc, p.directions, columns, j, loc.invariant)
    f.step = p.step
    return f


def flowpipe_template_union(f: Flowpipe, axes=(0, 1)) -> list[np.ndarray]:
    cycles = []
    for i in range(len(f)):
        try:
            cycles.append(project_vertices_2d(f.omega(i), axes))
        except EmptySet:
            continue
    return cycles
