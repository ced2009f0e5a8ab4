"""Compact convex sets given by support functions, and template polytopes.

Every set answers ``support(dirs)`` for a single direction (shape ``(n,)``,
returns a float) or a batch of directions (shape ``(k, n)``, returns ``(k,)``).
Batched evaluation is row-independent: a direction gives the same bits alone
or inside any batch, which the parallel engines rely on.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .numerics import (DimensionError, Infeasible, LinearProgram, Unbounded,
                       lp_max, rows_dot, rows_times)

SAT_TOL = 1e-9
VERTEX_COMBOS_LIMIT = 200_000
VERTEX_MAX_DIM = 3


class EmptySet(ValueError):
    pass


@dataclass(frozen=True)
class HalfSpace:
    """normal . x <= offset"""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float).reshape(-1)
        if not np.any(a):
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    def __eq__(self, other):
        return (isinstance(other, HalfSpace) and self.offset == other.offset
                and np.array_equal(self.normal, other.normal))

    def __hash__(self):
        return hash((self.normal.tobytes(), self.offset))


def stack_halfspaces(hs: Sequence[HalfSpace], dim: int) -> tuple[np.ndarray, np.ndarray]:
    if not hs:
        return np.zeros((0, dim)), np.zeros(0)
    G = np.vstack([h.normal for h in hs])
    if G.shape[1] != dim:
        raise DimensionError(f"half-spaces have dimension {G.shape[1]}, expected {dim}")
    return G, np.array([h.offset for h in hs])


def _as_dirs(dirs, dim: int) -> tuple[np.ndarray, bool]:
    d = np.asarray(dirs, dtype=float)
    single = d.ndim == 1
    d = np.atleast_2d(d)
    if d.shape[1] != dim:
        raise DimensionError(f"direction dimension {d.shape[1]} != set dimension {dim}")
    return d, single


class ConvexSet:
    dim: int

    def support(self, dirs):
        d, single = _as_dirs(dirs, self.dim)
        out = self._support(d)
        return float(out[0]) if single else out

    def _support(self, d: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def axis_extent(self) -> float:
        """max over +-e_i of the support, i.e. sup of the infinity norm."""
        eye = np.eye(self.dim)
        return float(np.max(self._support(np.vstack([eye, -eye]))))


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionError("box bounds differ in dimension")
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def point(cls, p) -> "Box":
        return cls(p, p)

    @property
    def dim(self) -> int:
        return self.lower.size

    def _support(self, d):
        return rows_dot(np.maximum(d, 0.0), self.upper) + rows_dot(np.minimum(d, 0.0), self.lower)


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    """Euclidean ball."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(-1))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @property
    def dim(self) -> int:
        return self.center.size

    def _support(self, d):
        return rows_dot(d, self.center) + self.radius * np.sqrt((d * d).sum(axis=1))


def _axis_box(G: np.ndarray, h: np.ndarray):
    """If every row of G has one nonzero entry, return the (lo, hi) box they cut out."""
    nz = G != 0.0
    if not np.all(nz.sum(axis=1) == 1):
        return None
    n = G.shape[1]
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    idx = np.argmax(nz, axis=1)
    coef = G[np.arange(G.shape[0]), idx]
    lim = h / coef
    for k, c, v in zip(idx, coef, lim):
        if c > 0:
            hi[k] = min(hi[k], v)
        else:
            lo[k] = max(lo[k], v)
    return lo, hi


class HPolytope(ConvexSet):
    """Intersection of half-spaces; axis-aligned systems are answered in closed form."""

    def __init__(self, halfspaces: Sequence[HalfSpace], dim: int | None = None, check: bool = True):
        halfspaces = tuple(halfspaces)
        if dim is None:
            if not halfspaces:
                raise ValueError("dimension needed for an empty constraint list")
            dim = halfspaces[0].normal.size
        self.halfspaces = halfspaces
        self.dim = dim
        self.G, self.h = stack_halfspaces(halfspaces, dim)
        box = _axis_box(self.G, self.h) if len(halfspaces) else None
        self._box = box
        if check:
            if self.is_empty():
                raise EmptySet("polytope is empty")
            eye = np.eye(dim)
            self._support(np.vstack([eye, -eye]))  # raises Unbounded

    @classmethod
    def from_arrays(cls, G, h, check: bool = True) -> "HPolytope":
        G = np.atleast_2d(np.asarray(G, dtype=float))
        return cls([HalfSpace(g, b) for g, b in zip(G, np.asarray(h, dtype=float))],
                   dim=G.shape[1], check=check)

    def is_empty(self) -> bool:
        if self._box is not None:
            lo, hi = self._box
            return bool(np.any(lo > hi + 1e-12))
        if not self.halfspaces:
            return False
        try:
            lp_max(LinearProgram(np.zeros(self.dim), self.G, self.h))
        except Infeasible:
            return True
        return False

    def extreme_point(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if self._box is not None:
            lo, hi = self._box
            if self.is_empty():
                raise Infeasible("constraint set is empty")
            rest = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
            pick = np.where(d > 0, hi, np.where(d < 0, lo, rest))
            if not np.all(np.isfinite(pick)):
                raise Unbounded("polytope unbounded in direction")
            return pick
        return lp_max(LinearProgram(d, self.G, self.h))[1]

    def _support(self, d):
        if self._box is not None:
            lo, hi = self._box
            if self.is_empty():
                raise Infeasible("constraint set is empty")
            pos = np.maximum(d, 0.0)
            neg = np.minimum(d, 0.0)
            if np.any((pos > 0) & ~np.isfinite(hi)) or np.any((neg < 0) & ~np.isfinite(lo)):
                raise Unbounded("polytope unbounded in direction")
            return rows_dot(pos, np.where(np.isfinite(hi), hi, 0.0)) + \
                rows_dot(neg, np.where(np.isfinite(lo), lo, 0.0))
        if not self.halfspaces:
            raise Unbounded("unconstrained set")
        return np.array([lp_max(LinearProgram(row, self.G, self.h))[0] for row in d])


@dataclass(frozen=True, eq=False)
class AffineImage(ConvexSet):
    """{M x + shift : x in base}"""

    M: np.ndarray
    base: ConvexSet
    shift: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        s = np.asarray(self.shift, dtype=float).reshape(-1)
        if M.shape[1] != self.base.dim or s.size != M.shape[0]:
            raise DimensionError("affine map does not fit its base set")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "shift", s)

    @property
    def dim(self) -> int:
        return self.M.shape[0]

    def _support(self, d):
        return self.base._support(rows_times(d, self.M)) + rows_dot(d, self.shift)


@dataclass(frozen=True, eq=False)
class MinkowskiSum(ConvexSet):
    a: ConvexSet
    b: ConvexSet

    def __post_init__(self):
        if self.a.dim != self.b.dim:
            raise DimensionError("Minkowski sum of sets of different dimension")

    @property
    def dim(self) -> int:
        return self.a.dim

    def _support(self, d):
        return self.a._support(d) + self.b._support(d)


@dataclass(frozen=True, eq=False)
class ConvexHullPair(ConvexSet):
    a: ConvexSet
    b: ConvexSet

    def __post_init__(self):
        if self.a.dim != self.b.dim:
            raise DimensionError("hull of sets of different dimension")

    @property
    def dim(self) -> int:
        return self.a.dim

    def _support(self, d):
        return np.maximum(self.a._support(d), self.b._support(d))


def scaled(s: float, X: ConvexSet) -> ConvexSet:
    return AffineImage(s * np.eye(X.dim), X, np.zeros(X.dim))


# --- template directions and polytopes ------------------------------------

class TemplateDirections:
    """An ordered, duplicate-free list of directions."""

    def __init__(self, directions, name: str = "custom"):
        D = np.atleast_2d(np.asarray(directions, dtype=float))
        if D.shape[0] == 0:
            raise ValueError("template must contain at least one direction")
        if np.any(~np.any(D, axis=1)):
            raise ValueError("template directions must be nonzero")
        if len({row.tobytes() for row in D}) != D.shape[0]:
            raise ValueError("template directions must be pairwise distinct")
        self.matrix = D
        self.name = name
        n = D.shape[1]
        # rows of +e_i and -e_i when the template contains all of them (axis_index),
        # and the same when the template is exactly those 2n directions (box_index)
        self.axis_index = None
        self.box_index = None
        pos, neg = [], []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            p = np.flatnonzero(np.all(D == e, axis=1))
            q = np.flatnonzero(np.all(D == -e, axis=1))
            if p.size == 0 or q.size == 0:
                break
            pos.append(int(p[0]))
            neg.append(int(q[0]))
        else:
            self.axis_index = (np.array(pos), np.array(neg))
            if D.shape[0] == 2 * n:
                self.box_index = self.axis_index

    def __len__(self):
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __eq__(self, other):
        return isinstance(other, TemplateDirections) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    @classmethod
    def box(cls, n: int) -> "TemplateDirections":
        eye = np.eye(n)
        return cls(np.vstack([eye, -eye]), name="box")

    @classmethod
    def octagonal(cls, n: int) -> "TemplateDirections":
        rows = [r for r in np.vstack([np.eye(n), -np.eye(n)])]
        for i in range(n):
            for j in range(i + 1, n):
                for si in (1.0, -1.0):
                    for sj in (1.0, -1.0):
                        r = np.zeros(n)
                        r[i], r[j] = si, sj
                        rows.append(r)
        return cls(np.array(rows), name="oct")

    @classmethod
    def uniform(cls, k: int) -> "TemplateDirections":
        if k < 3:
            raise ValueError("uniform template needs at least 3 directions")
        ang = 2 * np.pi * (np.arange(k) / k)  # i/k is exact-rounded, so refinements share rows bitwise
        D = np.column_stack([np.cos(ang), np.sin(ang)])
        D[np.abs(D) < 1e-15] = 0.0
        return cls(D, name=f"uniform:{k}")

    @classmethod
    def parse(cls, spec: str, n: int) -> "TemplateDirections":
        if spec == "box":
            return cls.box(n)
        if spec == "oct":
            return cls.octagonal(n)
        if spec.startswith("uniform:"):
            if n != 2:
                raise ValueError("uniform directions are defined for 2-D models only")
            return cls.uniform(int(spec.split(":", 1)[1]))
        raise ValueError(f"unknown direction family {spec!r}")


def enumerate_vertices(G: np.ndarray, h: np.ndarray, tol: float = 1e-9) -> np.ndarray | None:
    """Vertices of a bounded {x : G x <= h} by solving every n-subset of constraints.

    Returns None when there are too many subsets to try. An empty result means
    the polytope is empty. Boundedness is the caller's responsibility.
    """
    m, n = G.shape
    if m < n or math.comb(m, n) > VERTEX_COMBOS_LIMIT:
        return None
    idx = np.array(list(itertools.combinations(range(m), n)))
    A, b = G[idx], h[idx]
    scale = np.prod(np.linalg.norm(A, axis=2), axis=1)
    ok = np.abs(np.linalg.det(A)) > 1e-12 * scale
    if not np.any(ok):
        return np.zeros((0, n))
    X = np.linalg.solve(A[ok], b[ok][..., None])[..., 0]
    feas = np.all(X @ G.T <= h + tol * (1.0 + np.abs(h)), axis=1)
    V = X[feas]
    if V.size == 0:
        return V
    _, first = np.unique(np.round(V, 12), axis=0, return_index=True)
    return V[np.sort(first)]


def vertex_support(V: np.ndarray, d: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """max_v d.v row by row, in fixed-size chunks so that each row's value is batch independent."""
    out = np.empty(d.shape[0])
    for s in range(0, d.shape[0], chunk):
        blk = d[s:s + chunk]
        out[s:s + chunk] = (blk[:, None, :] * V[None, :, :]).sum(axis=2).max(axis=1)
    return out


class TemplatePolytope(ConvexSet):
    """{x : D x <= bounds} optionally cut further by ``extra`` half-spaces."""

    def __init__(self, template: TemplateDirections, bounds, extra: Sequence[HalfSpace] = ()):
        b = np.asarray(bounds, dtype=float).reshape(-1)
        if b.size != len(template):
            raise DimensionError("one bound per template direction required")
        self.template = template
        self.bounds = b
        self.extra = tuple(extra)
        self.dim = template.dim
        self._poly = None
        self._vertices = False  # not computed yet

    def halfspaces(self) -> list[HalfSpace]:
        return [HalfSpace(d, v) for d, v in zip(self.template.matrix, self.bounds)] + list(self.extra)

    def as_hpolytope(self) -> HPolytope:
        if self._poly is None:
            self._poly = HPolytope(self.halfspaces(), dim=self.dim, check=False)
        return self._poly

    def is_empty(self) -> bool:
        return self.as_hpolytope().is_empty()

    def _support(self, d):
        bi = self.template.box_index
        if bi is not None and not self.extra:
            hi = self.bounds[bi[0]]
            lo = -self.bounds[bi[1]]
            if np.any(lo > hi + 1e-12):
                raise Infeasible("constraint set is empty")
            return rows_dot(np.maximum(d, 0.0), hi) + rows_dot(np.minimum(d, 0.0), lo)
        V = self.vertices()
        if V is not None and V.size:
            return vertex_support(V, d)
        return self.as_hpolytope()._support(d)

    def vertices(self) -> np.ndarray | None:
        """Cached vertex array in low dimension when the template bounds every axis, else None.

        Only used to speed up batched support queries; the answer is the same
        as the linear program's.
        """
        if self._vertices is False:
            self._vertices = None
            if self.template.axis_index is not None and self.dim <= VERTEX_MAX_DIM:
                G, h = stack_halfspaces(self.halfspaces(), self.dim)
                self._vertices = enumerate_vertices(G, h)
        return self._vertices

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        P = np.atleast_2d(pts)
        ok = np.all(P @ self.template.matrix.T <= self.bounds + tol, axis=1)
        for hs in self.extra:
            ok &= P @ hs.normal <= hs.offset + tol
        return ok

    def tighten(self, constraints: Sequence[HalfSpace]) -> "TemplatePolytope":
        b, extra = tighten_bounds(self.template, self.bounds[None, :], constraints)
        return TemplatePolytope(self.template, b[0], self.extra + extra)

    def __repr__(self):
        return f"TemplatePolytope({self.template.name}, {self.bounds.tolist()}, extra={len(self.extra)})"


def tighten_bounds(template: TemplateDirections, bounds: np.ndarray,
                   constraints: Sequence[HalfSpace]) -> tuple[np.ndarray, tuple[HalfSpace, ...]]:
    """Fold constraints parallel to a template direction into the bounds (rows of ``bounds``).

    Returns the new bounds and the constraints that could not be folded.
    """
    bounds = bounds.copy()
    D = template.matrix
    norms = np.linalg.norm(D, axis=1)
    extra = []
    for hs in constraints:
        a = hs.normal
        na = np.linalg.norm(a)
        cos = D @ a / (norms * na)
        k = np.flatnonzero(np.abs(cos - 1.0) <= 1e-14)
        if k.size:
            k = int(k[0])
            bounds[:, k] = np.minimum(bounds[:, k], hs.offset * norms[k] / na)
        else:
            extra.append(hs)
    return bounds, tuple(extra)


def template_hull(X: ConvexSet, D: TemplateDirections) -> TemplatePolytope:
    if X.dim != D.dim:
        raise DimensionError("set and template differ in dimension")
    return TemplatePolytope(D, X.support(D.matrix))


def satisfies(X: ConvexSet, inv: Sequence[HalfSpace], tol: float = SAT_TOL) -> bool:
    """Per-constraint support test: -support(X, -a_i) <= b_i for every constraint."""
    if not inv:
        return True
    G, h = stack_halfspaces(inv, X.dim)
    return bool(np.all(-X.support(-G) <= h + tol))


def poly_intersect(p: TemplatePolytope, g: Sequence[HalfSpace]) -> HPolytope:
    return HPolytope(p.halfspaces() + list(g), dim=p.dim, check=False)


def _hull_ccw(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, counterclockwise, collinear points dropped."""
    pts = sorted(set(map(tuple, np.round(points, 12))))
    if len(pts) <= 2:
        return np.array(pts)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-12:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-12:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1])


def project_vertices_2d(p: TemplatePolytope | HPolytope, axes=(0, 1), tol: float = 1e-9) -> np.ndarray:
    """Counterclockwise vertex cycle of the projection of ``p`` onto two coordinates.

    Grows an inner polygon from extreme points until no edge normal finds a
    point further out, which yields the exact projected polygon.
    """
    i, j = axes
    if isinstance(p, TemplatePolytope) and p.template.box_index is not None and not p.extra:
        up, dn = p.template.box_index
        lo, hi = -p.bounds[dn], p.bounds[up]
        if np.any(lo > hi + SAT_TOL):
            raise EmptySet("cannot project an empty polytope")
        return _hull_ccw(np.array([[lo[i], lo[j]], [hi[i], lo[j]], [hi[i], hi[j]], [lo[i], hi[j]]]))
    poly = p.as_hpolytope() if isinstance(p, TemplatePolytope) else p
    if poly.is_empty():
        raise EmptySet("cannot project an empty polytope")

    def lift(d2):
        d = np.zeros(poly.dim)
        d[i] += d2[0]
        d[j] += d2[1]
        return d

    def extreme(d2):
        x = poly.extreme_point(lift(d2))
        return np.array([x[i], x[j]])

    seeds = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)]
    pts = np.array([extreme(np.array(s, dtype=float)) for s in seeds])
    hull = _hull_ccw(pts)
    for _ in range(200):
        if len(hull) < 3:
            return hull
        added = []
        for k in range(len(hull)):
            a, b = hull[k], hull[(k + 1) % len(hull)]
            e = b - a
            normal = np.array([e[1], -e[0]])
            normal /= np.linalg.norm(normal)
            q = extreme(normal)
            if normal @ q > normal @ a + tol:
                added.append(q)
        if not added:
            return hull
        hull = _hull_ccw(np.vstack([hull] + added))
    return hull
