"""Generators, support functions, capital allocation and risk contributions."""

from dataclasses import dataclass, field

import numpy as np

from . import linprog as lpmod
from .errors import NumericalError, StructuralError
from .scenario import Density, Pnl, extreme_measure, ground, utility

_UNIQUE_TOL = 1e-7


def _stack(xs):
    xs = list(xs)
    if not xs:
        raise StructuralError("at least one component is required")
    space = xs[0].space
    for x in xs:
        if not isinstance(x, Pnl):
            raise StructuralError("components must be Pnl objects")
        if x.space != space:
            raise StructuralError("components live on different scenario spaces")
    return space, np.array([x.values for x in xs])


@dataclass(eq=False)
class Generator:
    """The set ``G = {(E_Q X^1, ..., E_Q X^d) : Q in D}``."""

    spec: object
    components: tuple
    _polygon: list = field(default=None, repr=False)

    def __post_init__(self):
        self.components = tuple(self.components)
        self.space, self.values = _stack(self.components)
        self.spec.check_space(self.space)
        self.grounded = ground(self.spec, self.space)

    @property
    def d(self):
        return len(self.components)

    def combination(self, h):
        h = np.asarray(h, dtype=float).ravel()
        if h.size != self.d:
            raise StructuralError(f"direction must have {self.d} entries")
        return Pnl(self.space, h @ self.values)

    def point(self, z):
        """``(E_z X^1, ..., E_z X^d)`` for a density vector ``z``."""
        z = z.z if isinstance(z, Density) else np.asarray(z, dtype=float)
        return self.values @ (self.space.probs * z)

    def minimizer(self, h):
        """A point of ``G`` minimising ``<h, .>``."""
        res = extreme_measure(self.spec, self.combination(h))
        return self.point(res.density)


def support_value(gen, h):
    """``min_{x in G} <h, x>``, which equals ``u(<h, X>)``."""
    return utility(gen.spec, gen.combination(h))


# ---------------------------------------------------------------------------
# planar generators
# ---------------------------------------------------------------------------


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _clean(points, tol):
    """Drop repeated and collinear points from a closed counterclockwise chain."""
    pts = []
    for p in points:
        if not pts or np.max(np.abs(p - pts[-1])) > tol:
            pts.append(p)
    while len(pts) > 1 and np.max(np.abs(pts[0] - pts[-1])) <= tol:
        pts.pop()
    changed = True
    while changed and len(pts) > 2:
        changed = False
        for i in range(len(pts)):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
            # distance of b from the chord a-c
            if abs(_cross(a, b, c)) <= tol * np.hypot(*(c - a)):
                del pts[i]
                changed = True
                break
    return pts


def generator_polygon(gen):
    """Vertices of the planar generator in counterclockwise order.

    Starts from the four axis directions and splits every chord whose inner
    normal still finds a point strictly beyond it.  A segment is returned as
    two points and a singleton as one.
    """
    if gen.d != 2:
        raise StructuralError("generator_polygon needs exactly two components")
    if gen._polygon is not None:
        return [p.copy() for p in gen._polygon]
    scale = 1.0 + float(np.abs(gen.values).max())
    tol = 1e-9 * scale

    def refine(a, b, depth):
        e = b - a
        if np.max(np.abs(e)) <= tol:
            return [a]
        normal = np.array([-e[1], e[0]])
        c = gen.minimizer(normal)
        if normal @ c < normal @ a - tol * np.abs(normal).sum() and depth < 200:
            return refine(a, c, depth + 1) + refine(c, b, depth + 1)
        return [a]

    starts = [gen.minimizer(h) for h in ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))]
    chain = []
    for i in range(4):
        chain += refine(starts[i], starts[(i + 1) % 4], 0)
    pts = _clean(chain, tol)
    gen._polygon = [p.copy() for p in pts]
    return pts


def polygon_csv(vertices, header=True):
    lines = ["x,y"] if header else []
    lines += [f"{x:.12g},{y:.12g}" for x, y in vertices]
    return "\n".join(lines) + "\n"


def polygon_support(vertices, h):
    """Support value ``min <h, v>`` of a vertex list."""
    return float(min(np.asarray(v) @ np.asarray(h, dtype=float) for v in vertices))


# ---------------------------------------------------------------------------
# allocation and contribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AllocationResult:
    allocation: np.ndarray
    witness: Density
    unique: bool
    segment: tuple = None
    total: float = 0.0


def _face_minimum(face, objective):
    a_eq, b_eq, a_ub, b_ub, lb, ub = face
    sol = lpmod.solve(lpmod.LinearProgram(objective, a_eq, b_eq, a_ub, b_ub, (lb, ub)))
    if not sol.optimal:
        raise NumericalError(f"optimal-face LP ended with status {sol.status.value}")
    return sol


def allocate(spec, xs):
    """Utility allocation of ``u(X^1 + ... + X^d)`` to the components.

    The allocation is ``E_Q X^i`` for an extreme measure ``Q`` of the total.
    Uniqueness is probed by moving along the optimal face in two fixed
    generic directions; in the plane the face endpoints are returned.
    """
    gen = xs if isinstance(xs, Generator) else Generator(spec, xs)
    d = gen.d
    g = gen.grounded
    total_vals = gen.values.sum(axis=0)
    total_row = g.expectation_rows(total_vals)[0]
    sol = lpmod.solve(g.program(total_row))
    if not sol.optimal:
        raise NumericalError(f"allocation LP ended with status {sol.status.value}")
    z = g.density(sol.x[: g.nvar])
    z = np.maximum(z, 0.0)
    z = z / (gen.space.probs @ z)
    u_star = float(sol.objective)
    alloc = gen.point(z)
    face = lpmod.optimal_face(g.program(total_row), sol)

    unique = True
    segment = None
    if d > 1:
        if d == 2:
            directions = [np.array([1.0, 0.0])]
        else:
            rng = np.random.default_rng(7)
            directions = [rng.standard_normal(d) for _ in range(2)]
        for dvec in directions:
            row = g.expectation_rows(dvec @ gen.values)[0]
            lo = gen.point(g.density(_face_minimum(face, row).x[: g.nvar]))
            hi = gen.point(g.density(_face_minimum(face, -row).x[: g.nvar]))
            if dvec @ (hi - lo) > _UNIQUE_TOL * (1.0 + np.abs(gen.values).max()):
                unique = False
                if d == 2:
                    segment = (lo, hi)
                break
    return AllocationResult(alloc, Density(gen.space, z), unique, segment, u_star)


def contribution(spec, x, y):
    """Utility contribution ``u^c(X; Y) = min {E_Q X : Q extreme for Y}``."""
    if not isinstance(x, Pnl) or not isinstance(y, Pnl):
        raise StructuralError("contribution needs two Pnl objects")
    if x.space != y.space:
        raise StructuralError("X and Y live on different scenario spaces")
    spec.check_space(x.space)
    g = ground(spec, x.space)
    rows = g.expectation_rows(np.vstack([x.values, y.values]))
    base = lpmod.solve(g.program(rows[1]))
    if not base.optimal:
        raise NumericalError(f"utility LP ended with status {base.status.value}")
    face = lpmod.optimal_face(g.program(rows[1]), base)
    return float(_face_minimum(face, rows[0]).objective)


def risk_contribution(spec, x, y):
    return -contribution(spec, x, y)
