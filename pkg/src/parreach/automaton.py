"""Hybrid automata with affine dynamics, polyhedral invariants/guards and affine resets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Box, ConvexSet, HalfSpace, satisfies


class ModelError(ValueError):
    """Semantic problem with an automaton (unknown location, dimension mismatch, ...)."""


@dataclass(frozen=True, eq=False)
class FixedInput:
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float).reshape(-1))

    @property
    def dim(self):
        return self.u.size

    def as_set(self) -> ConvexSet:
        return Box.point(self.u)

    def _key(self):
        return ("fixed", tuple(self.u))


@dataclass(frozen=True, eq=False)
class SetInput:
    U: Box

    @property
    def dim(self):
        return self.U.dim

    def as_set(self) -> ConvexSet:
        return self.U

    def _key(self):
        return ("set", tuple(self.U.lower), tuple(self.U.upper))


@dataclass(frozen=True, eq=False)
class Dynamics:
    """x' = A x + u with u fixed or ranging over a box."""

    A: np.ndarray
    input: FixedInput | SetInput

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ModelError(f"flow matrix must be square, got {A.shape}")
        if self.input.dim != A.shape[0]:
            raise ModelError("input dimension does not match the flow matrix")
        object.__setattr__(self, "A", A)

    @property
    def deterministic(self) -> bool:
        return isinstance(self.input, FixedInput)

    def _key(self):
        return (self.A.tobytes(), self.A.shape, self.input._key())

    def __eq__(self, other):
        return isinstance(other, Dynamics) and self._key() == other._key()

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Location:
    id: int
    name: str
    dynamics: Dynamics
    invariant: tuple[HalfSpace, ...] = ()
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "invariant", tuple(self.invariant))
        object.__setattr__(self, "tags", tuple(self.tags))

    def __eq__(self, other):
        return (isinstance(other, Location) and self.id == other.id and self.name == other.name
                and self.dynamics == other.dynamics and self.invariant == other.invariant
                and self.tags == other.tags)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Transition:
    source: int
    target: int
    guard: tuple[HalfSpace, ...]
    M: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "guard", tuple(self.guard))
        object.__setattr__(self, "M", np.atleast_2d(np.asarray(self.M, dtype=float)))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float).reshape(-1))

    @classmethod
    def identity(cls, source: int, target: int, guard: Sequence[HalfSpace], n: int) -> "Transition":
        return cls(source, target, tuple(guard), np.eye(n), np.zeros(n))

    def __eq__(self, other):
        return (isinstance(other, Transition) and self.source == other.source
                and self.target == other.target and self.guard == other.guard
                and np.array_equal(self.M, other.M) and np.array_equal(self.v, other.v))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SymbolicState:
    loc: int
    set: ConvexSet


@dataclass(eq=False)
class HybridAutomaton:
    dim: int
    variables: tuple[str, ...]
    locations: list[Location]
    transitions: list[Transition]
    init_loc: int
    init_set: Box
    name: str = "model"
    _by_id: dict = field(init=False, repr=False)
    _outgoing: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.variables = tuple(self.variables)
        self.validate()

    def validate(self) -> None:
        n = self.dim
        if n < 1:
            raise ModelError("dimension must be positive")
        if len(self.variables) != n:
            raise ModelError(f"{len(self.variables)} variable names for dimension {n}")
        self._by_id = {}
        for loc in self.locations:
            if loc.id in self._by_id:
                raise ModelError(f"duplicate location id {loc.id}")
            if loc.dynamics.A.shape[0] != n:
                raise ModelError(f"location {loc.id}: flow dimension mismatch")
            for hs in loc.invariant:
                if hs.normal.size != n:
                    raise ModelError(f"location {loc.id}: invariant dimension mismatch")
            self._by_id[loc.id] = loc
        self._outgoing = {loc.id: [] for loc in self.locations}
        for k, t in enumerate(self.transitions):
            for end in (t.source, t.target):
                if end not in self._by_id:
                    raise ModelError(f"transition {t.source} -> {t.target}: unknown location {end}")
            if t.M.shape != (n, n) or t.v.size != n:
                raise ModelError(f"transition {t.source} -> {t.target}: map dimension mismatch")
            for hs in t.guard:
                if hs.normal.size != n:
                    raise ModelError(f"transition {t.source} -> {t.target}: guard dimension mismatch")
            self._outgoing[t.source].append(k)
        if self.init_loc not in self._by_id:
            raise ModelError(f"initial location {self.init_loc} does not exist")
        if self.init_set.dim != n:
            raise ModelError("initial set dimension mismatch")
        if not satisfies(self.init_set, self.location(self.init_loc).invariant):
            raise ModelError("initial set does not meet the invariant of its location")

    def location(self, loc_id: int) -> Location:
        return self._by_id[loc_id]

    def outgoing(self, loc_id: int) -> list[int]:
        """Indices into ``transitions`` of the edges leaving ``loc_id``."""
        return self._outgoing[loc_id]

    @property
    def init(self) -> SymbolicState:
        return SymbolicState(self.init_loc, self.init_set)

    def tagged(self, tag: str) -> list[int]:
        return [loc.id for loc in self.locations if tag in loc.tags]

    def __eq__(self, other):
        return (isinstance(other, HybridAutomaton) and self.dim == other.dim
                and self.variables == other.variables and self.locations == other.locations
                and self.transitions == other.transitions and self.init_loc == other.init_loc
                and np.array_equal(self.init_set.lower, other.init_set.lower)
                and np.array_equal(self.init_set.upper, other.init_set.upper))

    __hash__ = None
