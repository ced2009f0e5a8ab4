import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parreach.automaton import Dynamics, FixedInput, HybridAutomaton, Location, SetInput, SymbolicState
from parreach.benchmarks import builtin, gen_bouncing_ball, gen_circle
from parreach.geometry import Box, HalfSpace, TemplateDirections, template_hull
from parreach.numerics import mat_exp
from parreach.postc import (EmptyFlowpipe, Flowpipe, ReachParams, compute_flowpipe, discretize,
                            flowpipe_template_union, invariant_prefix, support_sequence,
                            transformed_directions)
from oracles import containment_failures

BOX2 = TemplateDirections.box(2)
OCT2 = TemplateDirections.octagonal(2)
ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def single(A, u, inv=(), init=None, dim=2):
    dyn = Dynamics(np.asarray(A, dtype=float), u if isinstance(u, SetInput) else FixedInput(u))
    init = init if init is not None else Box(np.zeros(dim), np.zeros(dim))
    return HybridAutomaton(dim, tuple(f"x{i}" for i in range(dim)), [Location(1, "only", dyn, tuple(inv))], [],
                           1, init)


def test_reach_params():
    assert ReachParams(10.0, 0.25, BOX2).steps == 40
    assert ReachParams(1.0, 1.0, BOX2).steps == 1
    with pytest.raises(ValueError):
        ReachParams(1.0, 2.0, BOX2)
    with pytest.raises(ValueError):
        ReachParams(0.0, 0.1, BOX2)


def test_discretize_stationary():
    X0 = Box([0.0, 1.0], [1.0, 2.0])
    disc = discretize(Dynamics(np.zeros((2, 2)), FixedInput([0.0, 0.0])), X0, 0.1)
    assert np.array_equal(disc.phi, np.eye(2))
    assert np.array_equal(disc.W.support(OCT2.matrix), np.zeros(len(OCT2)))
    assert np.allclose(disc.omega0.support(OCT2.matrix), X0.support(OCT2.matrix))


def test_discretize_constant_input():
    X0 = Box([0.0, 0.0], [1.0, 1.0])
    disc = discretize(Dynamics(np.zeros((2, 2)), FixedInput([1.0, 0.0])), X0, 0.1)
    assert np.allclose(disc.W.support(BOX2.matrix), [0.1, 0.0, -0.1, 0.0])
    # hull of X0 and X0 + (0.1, 0)
    assert np.allclose(disc.omega0.support(BOX2.matrix), [1.1, 1.0, 0.0, 0.0])


def test_discretize_rotation_contains_both_ends():
    p = np.array([1.0, 0.5])
    disc = discretize(Dynamics(ROT, FixedInput([0.0, 0.0])), Box(p, p), 0.3)
    hull = template_hull(disc.omega0, OCT2)
    assert np.allclose(disc.phi, mat_exp(ROT, 0.3))
    assert hull.contains(p, tol=1e-12).all()
    assert hull.contains(mat_exp(ROT, 0.3) @ p, tol=1e-12).all()


def test_discretize_rejects_bad_step():
    with pytest.raises(ValueError):
        discretize(Dynamics(ROT, FixedInput([0.0, 0.0])), Box([0, 0], [1, 1]), 0.0)


def test_transformed_directions_and_prefix_stability():
    phi = mat_exp(ROT, 0.01)
    ell = np.array([0.6, -0.8])
    R = transformed_directions(phi, ell, 37)
    ref = [ell]
    for _ in range(36):
        ref.append(phi.T @ ref[-1])
    assert np.allclose(R, ref, atol=1e-13)
    disc = discretize(Dynamics(ROT, FixedInput([0.0, 0.0])), Box([0.9, -0.1], [1.1, 0.1]), 0.01)
    long = support_sequence(disc, ell, 500)
    for count in (1, 7, 64, 333):
        assert np.array_equal(support_sequence(disc, ell, count), long[:count])


def test_stationary_flowpipe_has_identical_slices():
    X0 = Box([0.0, 0.0], [1.0, 2.0])
    ha = single(np.zeros((2, 2)), [0.0, 0.0], init=X0)
    f = compute_flowpipe(ha.init, ha, ReachParams(1.0, 0.1, BOX2))
    assert len(f) == 10
    assert np.all(f.bounds == f.bounds[0])
    assert np.allclose(f.bounds[0], template_hull(X0, BOX2).bounds)


def test_constant_flow_stops_at_invariant():
    ha = single(np.zeros((2, 2)), [1.0, 0.0], inv=[HalfSpace([1.0, 0.0], 1.0)])
    f = compute_flowpipe(ha.init, ha, ReachParams(10.0, 0.25, BOX2))
    assert len(f) == 5
    lo, hi = f.box_bounds()
    assert lo[0, 0] == pytest.approx(0.0) and hi[-1, 0] == pytest.approx(1.0)  # last slice cut at x <= 1
    assert f.support_samples == 5 * len(BOX2)


def test_circle_flowpipe_exits_at_trajectory_crossing():
    ha = gen_circle()
    p = ReachParams(10.0, 1e-3, BOX2)
    f = compute_flowpipe(ha.init, ha, p)
    # the set leaves x >= 0 entirely once the last corner (0.9, -0.1) crosses x = 0
    t_exit = math.atan2(0.9, -0.1)
    assert len(f) < p.steps
    assert t_exit <= len(f) * p.step <= t_exit + 0.02


def test_empty_start_rejected():
    ha = gen_circle()
    with pytest.raises(EmptyFlowpipe):
        compute_flowpipe(SymbolicState(1, Box([-2.0, 0.0], [-1.0, 1.0])), ha, ReachParams(1.0, 0.1, BOX2))


def test_ball_flowpipe_covers_initial_height():
    ha = gen_bouncing_ball()
    f = compute_flowpipe(ha.init, ha, ReachParams(10.0, 1e-2, BOX2))
    cycles = flowpipe_template_union(f)
    assert len(cycles) == len(f)
    assert max(c[:, 0].max() for c in cycles) >= 10.2
    # free fall from 10.2 m hits the ground after about 1.44 s
    assert 1.40 <= len(f) * 1e-2 <= 1.50


def test_template_union_trivial_cases():
    empty = Flowpipe(1, BOX2, np.zeros((0, 4)))
    assert flowpipe_template_union(empty) == []
    one = Flowpipe(1, BOX2, np.array([[1.0, 2.0, 0.0, 0.0]]))
    (cycle,) = flowpipe_template_union(one)
    assert cycle.shape == (4, 2)
    assert sorted(map(tuple, cycle)) == [(0.0, 0.0), (0.0, 2.0), (1.0, 0.0), (1.0, 2.0)]


def test_flowpipe_is_deterministic():
    ha = builtin("nav:3")
    p = ReachParams(10.0, 1e-2, TemplateDirections.octagonal(4))
    a = compute_flowpipe(ha.init, ha, p)
    b = compute_flowpipe(ha.init, ha, p)
    assert a.bounds.tobytes() == b.bounds.tobytes()
    assert a.support_samples == b.support_samples == len(a) * len(p.directions)


@pytest.mark.parametrize("name, step", [("circle", 1e-2), ("ball", 1e-2), ("oscillator", 1e-3), ("nav:3", 1e-2)])
def test_flowpipe_contains_simulated_trajectories(name, step):
    ha = builtin(name)
    D = TemplateDirections.octagonal(ha.dim) if ha.dim <= 2 else TemplateDirections.box(ha.dim)
    f = compute_flowpipe(ha.init, ha, ReachParams(10.0, step, D))
    loc = ha.location(ha.init_loc)
    rng = np.random.default_rng(7)
    assert containment_failures(f, loc.dynamics, loc.invariant, ha.init_set, rng) == 0


def test_set_input_flowpipe_contains_trajectories():
    U = Box([-0.5, 0.2], [0.5, 0.4])
    ha = single([[-0.3, 1.0], [-1.0, -0.3]], SetInput(U), init=Box([0.0, 0.0], [0.5, 0.5]))
    f = compute_flowpipe(ha.init, ha, ReachParams(3.0, 0.01, OCT2))
    rng = np.random.default_rng(3)
    assert containment_failures(f, ha.location(1).dynamics, (), ha.init_set, rng) == 0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_monotone_truncation(b1, extra):
    b2 = b1 + extra
    X0 = Box([-0.1, -0.1], [0.1, 0.1])
    A = [[-0.2, 1.0], [-1.0, -0.2]]
    counts = []
    for b in (b1, b2):
        ha = single(A, [0.5, 0.0], inv=[HalfSpace([1.0, 0.0], b), HalfSpace([0.0, -1.0], b)], init=X0)
        counts.append(len(compute_flowpipe(ha.init, ha, ReachParams(5.0, 0.05, BOX2))))
    assert counts[0] <= counts[1]


def test_invariant_prefix_chunking_is_transparent():
    ha = gen_circle()
    disc = discretize(ha.location(1).dynamics, ha.init_set, 1e-3)
    inv = ha.location(1).invariant
    assert len({invariant_prefix(disc, inv, 10_000, chunk=c) for c in (1, 5, 64, 10_000)}) == 1


def test_trajectory_oracles_detect_shrunk_flowpipes():
    from parreach.engines import run_seq
    from oracles import hybrid_containment, sample_box
    ha = gen_circle()
    p = ReachParams(10.0, 1e-2, BOX2)
    res = run_seq(ha, None, 1, p)
    X = sample_box(ha.init_set, 50, np.random.default_rng(0))
    assert hybrid_containment(res, ha, X, p.steps)[0] == 0
    child = res.levels[1][0].flowpipe
    child.bounds = child.bounds - 1e-3
    assert hybrid_containment(res, ha, X, p.steps)[0] > 0
    f = res.levels[0][0].flowpipe
    f.bounds = f.bounds - 1e-3
    loc = ha.location(1)
    assert containment_failures(f, loc.dynamics, loc.invariant, ha.init_set, np.random.default_rng(0)) > 0
