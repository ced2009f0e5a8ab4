"""Generators for the benchmark automata: navigation grids, bouncing ball, circle, oscillator."""

from __future__ import annotations

import math

import numpy as np

from .automaton import Dynamics, FixedInput, HybridAutomaton, Location, ModelError, Transition
from .geometry import Box, HalfSpace

NAV_A = np.array([[-1.2, 0.1], [0.1, -1.2]])
TARGET, UNSAFE = "B", "A"

GRAVITY = 9.81
RESTITUTION = 0.75


def _hs(coeffs, b) -> HalfSpace:
    return HalfSpace(np.asarray(coeffs, dtype=float), b)


def desired_velocity(code) -> np.ndarray:
    """Cell code k in 0..7 points at angle k*pi/4 clockwise from +y; target/unsafe cells rest."""
    if code in (TARGET, UNSAFE):
        return np.zeros(2)
    k = int(code)
    if not 0 <= k <= 7:
        raise ModelError(f"navigation code {code!r} outside 0..7")
    v = np.array([math.sin(k * math.pi / 4), math.cos(k * math.pi / 4)])
    v[np.abs(v) < 1e-15] = 0.0
    return v


def default_nav_grid(n: int) -> list[list]:
    """Serpentine layout: rows alternate right/left, turning upward at the ends.

    Row 0 is the bottom row. The unsafe cell is bottom-left and the target
    sits at the far end of the top row.
    """
    grid = []
    for r in range(n):
        right = r % 2 == 0
        row = []
        for c in range(n):
            at_end = c == n - 1 if right else c == 0
            row.append(0 if at_end else (2 if right else 6))
        grid.append(row)
    grid[0][0] = UNSAFE
    top = n - 1
    grid[top][n - 1 if top % 2 == 0 else 0] = TARGET
    if n == 1:
        grid[0][0] = TARGET
    return grid


def gen_navigation(grid, A=None, init_cell=None, init_pos=(0.4, 0.6),
                   init_vel=((-0.05, 0.05), (-0.05, 0.05))) -> HybridAutomaton:
    """Navigation automaton over unit cells; ``grid[r][c]`` covers x in [c, c+1], y in [r, r+1].

    Variables are (x, y, vx, vy) with x' = vx, y' = vy, v' = A (v - v_d).
    """
    rows = len(grid)
    if rows == 0 or len({len(r) for r in grid}) != 1 or len(grid[0]) == 0:
        raise ModelError("navigation grid must be a nonempty rectangle")
    cols = len(grid[0])
    A = NAV_A if A is None else np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ModelError("navigation velocity matrix must be 2x2")

    def loc_id(r, c):
        return r * cols + c + 1

    flow = np.zeros((4, 4))
    flow[0, 2] = flow[1, 3] = 1.0
    flow[2:, 2:] = A
    locations = []
    for r in range(rows):
        for c in range(cols):
            code = grid[r][c]
            vd = desired_velocity(code)
            u = np.concatenate([np.zeros(2), -A @ vd])
            inv = (_hs([-1, 0, 0, 0], -c), _hs([1, 0, 0, 0], c + 1),
                   _hs([0, -1, 0, 0], -r), _hs([0, 1, 0, 0], r + 1))
            tags = ("target",) if code == TARGET else ("unsafe",) if code == UNSAFE else ()
            locations.append(Location(loc_id(r, c), f"cell_{r}_{c}", Dynamics(flow, FixedInput(u)), inv, tags))

    transitions = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:  # shared facet x = c+1
                facet = (_hs([-1, 0, 0, 0], -(c + 1)), _hs([1, 0, 0, 0], c + 1),
                         _hs([0, -1, 0, 0], -r), _hs([0, 1, 0, 0], r + 1))
                transitions.append(Transition.identity(loc_id(r, c), loc_id(r, c + 1), facet, 4))
                transitions.append(Transition.identity(loc_id(r, c + 1), loc_id(r, c), facet, 4))
            if r + 1 < rows:  # shared facet y = r+1
                facet = (_hs([0, -1, 0, 0], -(r + 1)), _hs([0, 1, 0, 0], r + 1),
                         _hs([-1, 0, 0, 0], -c), _hs([1, 0, 0, 0], c + 1))
                transitions.append(Transition.identity(loc_id(r, c), loc_id(r + 1, c), facet, 4))
                transitions.append(Transition.identity(loc_id(r + 1, c), loc_id(r, c), facet, 4))

    if init_cell is None:
        init_cell = (0, 1) if cols > 1 else (0, 0)
    r0, c0 = init_cell
    lo = np.array([c0 + init_pos[0], r0 + init_pos[0], init_vel[0][0], init_vel[1][0]])
    hi = np.array([c0 + init_pos[1], r0 + init_pos[1], init_vel[0][1], init_vel[1][1]])
    return HybridAutomaton(4, ("x", "y", "vx", "vy"), locations, transitions,
                           loc_id(r0, c0), Box(lo, hi), name=f"nav{rows}x{cols}")


def gen_bouncing_ball() -> HybridAutomaton:
    dyn = Dynamics([[0.0, 1.0], [0.0, 0.0]], FixedInput([0.0, -GRAVITY]))
    loc = Location(1, "falling", dyn, (_hs([-1, 0], 0.0),))
    bounce = Transition(1, 1, (_hs([1, 0], 0.0), _hs([0, 1], 0.0)),
                        np.diag([1.0, -RESTITUTION]), np.zeros(2))
    return HybridAutomaton(2, ("x", "v"), [loc], [bounce], 1,
                           Box([10.0, 0.0], [10.2, 0.0]), name="ball")


def gen_circle() -> HybridAutomaton:
    """Counterclockwise rotation split into the half-planes x >= 0 and x <= 0.

    Guards cover the half of the x = 0 line where the flow actually crosses
    (upward half leaving x >= 0, downward half leaving x <= 0).
    """
    dyn = Dynamics([[0.0, -1.0], [1.0, 0.0]], FixedInput([0.0, 0.0]))
    right = Location(1, "right", dyn, (_hs([-1, 0], 0.0),))
    left = Location(2, "left", dyn, (_hs([1, 0], 0.0),))
    t12 = Transition.identity(1, 2, (_hs([1, 0], 0.0), _hs([0, -1], 0.0)), 2)
    t21 = Transition.identity(2, 1, (_hs([-1, 0], 0.0), _hs([0, 1], 0.0)), 2)
    return HybridAutomaton(2, ("x", "y"), [right, left], [t12, t21], 1,
                           Box([0.9, -0.1], [1.1, 0.1]), name="circle")


def gen_oscillator() -> HybridAutomaton:
    """Switched affine focus x' = A x + u with u = +-(0, 1) on either side of x = 0."""
    A = [[-1.0, -4.0], [4.0, -1.0]]
    right = Location(1, "right", Dynamics(A, FixedInput([0.0, 1.0])), (_hs([-1, 0], 0.0),))
    left = Location(2, "left", Dynamics(A, FixedInput([0.0, -1.0])), (_hs([1, 0], 0.0),))
    t12 = Transition.identity(1, 2, (_hs([1, 0], 0.0), _hs([0, -1], 0.0)), 2)
    t21 = Transition.identity(2, 1, (_hs([-1, 0], 0.0), _hs([0, 1], 0.0)), 2)
    return HybridAutomaton(2, ("x", "y"), [right, left], [t12, t21], 1,
                           Box([0.8, -0.1], [1.0, 0.1]), name="oscillator")


# per-benchmark default sampling times used by the CLI
DEFAULT_STEPS = {"circle": 1e-5, "ball": 1e-4, "oscillator": 1e-4, "nav:3": 1e-4, "nav:5": 1e-4, "nav:9": 0.1}


def builtin(name: str) -> HybridAutomaton:
    if name == "circle":
        return gen_circle()
    if name == "ball":
        return gen_bouncing_ball()
    if name == "oscillator":
        return gen_oscillator()
    if name.startswith("nav:"):
        n = int(name.split(":", 1)[1])
        if n < 1:
            raise ModelError("navigation size must be positive")
        return gen_navigation(default_nav_grid(n))
    raise ModelError(f"unknown builtin benchmark {name!r}")
