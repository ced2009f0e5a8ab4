import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from parreach.automaton import Dynamics, FixedInput, HybridAutomaton, Location, SetInput, SymbolicState
from parreach.benchmarks import DEFAULT_STEPS, builtin
from parreach.cost import (CostEstimate, CrossingSearchParams, NotDeterministic, crossing_time, flow_cost,
                           jump_cost, reach_at_time, total_cost)
from parreach.geometry import Box, HalfSpace, TemplateDirections
from parreach.postc import ReachParams, compute_flowpipe

BOX2 = TemplateDirections.box(2)
DRIFT = Dynamics(np.zeros((2, 2)), FixedInput([1.0, 0.0]))
ORIGIN = Box([0.0, 0.0], [0.0, 0.0])
X_LE_1 = [HalfSpace([1.0, 0.0], 1.0)]


def test_search_params():
    p = CrossingSearchParams()
    assert p.coarse(10.0) == 1.0 and p.fine(10.0) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        CrossingSearchParams(1)


def test_reach_at_time_examples():
    X0 = Box([0.0, 1.0], [1.0, 2.0])
    rot = Dynamics(np.array([[0.0, -1.0], [1.0, 0.0]]), FixedInput([0.0, 0.0]))
    assert np.allclose(reach_at_time(X0, rot, 0.0).support(BOX2.matrix), X0.support(BOX2.matrix))
    assert np.allclose(reach_at_time(ORIGIN, DRIFT, 2.0).support(BOX2.matrix), [2.0, 0.0, -2.0, 0.0])
    pt = reach_at_time(Box([1.0, 0.0], [1.0, 0.0]), rot, math.pi / 2)
    assert np.allclose(pt.support(BOX2.matrix), [0.0, 1.0, 0.0, -1.0], atol=1e-9)


def test_reach_at_time_needs_fixed_input():
    dyn = Dynamics(np.zeros((2, 2)), SetInput(Box([0.0, 0.0], [1.0, 1.0])))
    with pytest.raises(NotDeterministic):
        reach_at_time(ORIGIN, dyn, 1.0)


def stable(M):
    return M - (np.abs(M).sum(axis=1).max() + 0.1) * np.eye(M.shape[0])


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-1, 1)), arrays(np.float64, 3, elements=st.floats(-1, 1)),
       st.floats(0, 2), st.floats(0, 2))
def test_reach_at_time_semigroup(M, u, t, s):
    dyn = Dynamics(stable(M), FixedInput(u))
    X0 = Box([-0.5, 0.0, 1.0], [0.5, 0.3, 1.2])
    D = TemplateDirections.octagonal(3).matrix
    two = reach_at_time(reach_at_time(X0, dyn, t), dyn, s)
    assert np.allclose(two.support(D), reach_at_time(X0, dyn, t + s).support(D), atol=1e-8, rtol=0)


def test_crossing_time_hand_trace():
    # coarse sweep fails at t = 2, fine rescan of [1, 2] fails at t = 1.1
    assert crossing_time(X_LE_1, ORIGIN, DRIFT, 10.0) == pytest.approx(1.1)


def test_crossing_time_never_violated():
    assert crossing_time([HalfSpace([1.0, 0.0], 100.0)], ORIGIN, DRIFT, 10.0) == 10.0
    assert crossing_time([], ORIGIN, DRIFT, 3.0) == 3.0


def test_crossing_time_immediate_violation_is_zero():
    assert crossing_time([HalfSpace([1.0, 0.0], 0.5)], ORIGIN, DRIFT, 10.0) == 0.0
    assert crossing_time([HalfSpace([1.0, 0.0], -1.0)], ORIGIN, DRIFT, 10.0) == 0.0


def test_crossing_time_error_bound_random_constant_dynamics():
    rng = np.random.default_rng(2024)
    params = CrossingSearchParams()
    for _ in range(50):
        theta = rng.uniform(0, 2 * np.pi)
        a = np.array([math.cos(theta), math.sin(theta)])
        k = a * rng.uniform(0.2, 3.0) + np.array([-a[1], a[0]]) * rng.uniform(-2, 2)
        lo = rng.uniform(-2, 2, size=2)
        X0 = Box(lo, lo + rng.uniform(0, 1.5, size=2))
        T = rng.uniform(1.0, 20.0)
        d_c, d_f = params.coarse(T), params.fine(T)
        t_star = rng.uniform(d_c, T)
        low = -X0.support((-a)[None, :])[0]
        b = low + t_star * (a @ k)
        t = crossing_time([HalfSpace(a, b)], X0, Dynamics(np.zeros((2, 2)), FixedInput(k)), T, params)
        assert t >= t_star
        assert t - t_star <= d_f + 1e-12


def single(inv, dyn=DRIFT, init=ORIGIN):
    return HybridAutomaton(2, ("x", "y"), [Location(1, "a", dyn, tuple(inv))], [], 1, init)


def test_flow_cost_examples():
    p = ReachParams(10.0, 0.25, BOX2)
    est = flow_cost(SymbolicState(1, ORIGIN), single(X_LE_1), p)
    assert (est.j, est.flow_cost, est.jump_cost) == (5, 20, 5)
    free = flow_cost(SymbolicState(1, ORIGIN), single([]), p)
    assert (free.j, free.flow_cost) == (40, 160)


def test_flow_cost_of_violating_start_is_zero():
    ha = single([HalfSpace([1.0, 0.0], 1.0)])
    est = flow_cost(SymbolicState(1, Box([2.0, 0.0], [3.0, 1.0])), ha, ReachParams(10.0, 0.25, BOX2))
    assert est.j == 0 and est.flow_cost == 0


def test_flow_cost_set_input_uses_center():
    dyn = Dynamics(np.zeros((2, 2)), SetInput(Box([0.5, -1.0], [1.5, 1.0])))
    est = flow_cost(SymbolicState(1, ORIGIN), single(X_LE_1, dyn), ReachParams(10.0, 0.25, BOX2))
    assert est.j == 5


def test_jump_cost_and_total():
    ha = single(X_LE_1)
    f = compute_flowpipe(ha.init, ha, ReachParams(10.0, 0.25, BOX2))
    assert jump_cost(f) == len(f) == 5
    assert total_cost([CostEstimate(1, 4, 1), CostEstimate(3, 12, 3)]) == 16
    assert total_cost([]) == 0


@pytest.mark.parametrize("name", ["circle", "ball", "nav:3"])
def test_cost_fidelity_on_benchmarks(name):
    ha = builtin(name)
    D = TemplateDirections.box(ha.dim)
    p = ReachParams(10.0, DEFAULT_STEPS[name], D)
    est = flow_cost(ha.init, ha, p)
    f = compute_flowpipe(ha.init, ha, p)
    slack = math.ceil(CrossingSearchParams().fine(p.T) / p.step) + 1
    assert abs(est.j - len(f)) <= slack
    assert abs(est.flow_cost - f.support_samples) <= len(D) * slack


def test_early_crossing_estimates_zero():
    # the oscillator leaves its invariant before the first coarse step
    ha = builtin("oscillator")
    p = ReachParams(10.0, 1e-3, BOX2)
    est = flow_cost(ha.init, ha, p)
    assert est.j == 0
    assert len(compute_flowpipe(ha.init, ha, p)) > 0
