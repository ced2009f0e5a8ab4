"""Parallel reachability analysis for hybrid automata with linear dynamics."""

from .automaton import (Dynamics, FixedInput, HybridAutomaton, Location, ModelError, SetInput,
                        SymbolicState, Transition)
from .benchmarks import builtin, gen_bouncing_ball, gen_circle, gen_navigation, gen_oscillator
from .cost import CostEstimate, CrossingSearchParams, crossing_time, flow_cost, jump_cost, reach_at_time
from .engines import ReachResult, RunStats, run_agjh, run_seq, run_tpbfs
from .geometry import Box, HalfSpace, HPolytope, TemplateDirections, TemplatePolytope
from .modelfile import parse_model, render
from .postc import Flowpipe, ReachParams, compute_flowpipe
from .postd import apply_jump, post_d

__all__ = [
    "Box", "CostEstimate", "CrossingSearchParams", "Dynamics", "FixedInput", "Flowpipe", "HPolytope",
    "HalfSpace", "HybridAutomaton", "Location", "ModelError", "ReachParams", "ReachResult", "RunStats",
    "SetInput", "SymbolicState", "TemplateDirections", "TemplatePolytope", "Transition", "apply_jump",
    "builtin", "compute_flowpipe", "crossing_time", "flow_cost", "gen_bouncing_ball", "gen_circle",
    "gen_navigation", "gen_oscillator", "jump_cost", "parse_model", "post_d", "reach_at_time", "render",
    "run_agjh", "run_seq", "run_tpbfs",
]
