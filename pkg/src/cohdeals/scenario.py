"""Finite scenario spaces, coherent utilities and extreme measures.

A coherent utility is ``u(X) = min_{Q in D} E_Q X`` where the determining
set ``D`` is described symbolically by a :class:`RiskSpec` and compiled into
linear constraints on density variables by :func:`ground`.
"""

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import linprog as lpmod
from ._tol import FEAS_TOL
from .errors import NumericalError, StructuralError

# ---------------------------------------------------------------------------
# spaces and random variables
# ---------------------------------------------------------------------------


def _frozen(arr):
    arr = np.array(arr, dtype=float).ravel()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScenarioSpace:
    """Finite outcome set with a strictly positive reference measure."""

    probs: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.size == 0:
            raise StructuralError("a scenario space needs at least one outcome")
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
            raise StructuralError("scenario probabilities must be finite and strictly positive")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise StructuralError(f"scenario probabilities sum to {probs.sum():.15g}, not 1")
        labels = tuple(range(probs.size)) if self.labels is None else tuple(self.labels)
        if len(labels) != probs.size:
            raise StructuralError("one label per outcome is required")
        if len(set(labels)) != len(labels):
            raise StructuralError("outcome labels must be unique")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def uniform(cls, n, labels=None):
        return cls(np.full(n, 1.0 / n), labels)

    @classmethod
    def from_weights(cls, weights, labels=None):
        """Normalise nonnegative weights into probabilities."""
        w = np.asarray(weights, dtype=float).ravel()
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise StructuralError("weights must be finite and strictly positive")
        p = w / w.sum()
        # push the rounding residue onto the largest atom so the sum is exact
        k = int(np.argmax(p))
        p[k] += 1.0 - p.sum()
        return cls(p, labels)

    @property
    def n(self):
        return self.probs.size

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, ScenarioSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.labels, self.probs.tobytes()))

    def pnl(self, values):
        return Pnl(self, values)

    def density(self, z):
        return Density(self, z)


def _same_space(a, b):
    if a != b:
        raise StructuralError("objects live on different scenario spaces")


@dataclass(frozen=True, eq=False)
class Pnl:
    """A discounted P&L (or payoff) on a scenario space."""

    space: ScenarioSpace
    values: np.ndarray

    def __post_init__(self):
        if not isinstance(self.space, ScenarioSpace):
            raise StructuralError("Pnl needs a ScenarioSpace")
        vals = _frozen(self.values)
        if vals.size != self.space.n:
            raise StructuralError(f"expected {self.space.n} values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise StructuralError("P&L values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, space, m):
        return cls(space, np.full(space.n, float(m)))

    def mean(self):
        return float(self.space.probs @ self.values)

    def _coerce(self, other):
        if isinstance(other, Pnl):
            _same_space(self.space, other.space)
            return other.values
        return float(other)

    def __add__(self, other):
        return Pnl(self.space, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Pnl(self.space, self.values - self._coerce(other))

    def __rsub__(self, other):
        return Pnl(self.space, self._coerce(other) - self.values)

    def __mul__(self, k):
        if isinstance(k, Pnl):
            return NotImplemented
        return Pnl(self.space, self.values * float(k))

    __rmul__ = __mul__

    def __neg__(self):
        return Pnl(self.space, -self.values)

    def __le__(self, other):
        return bool(np.all(self.values <= self._coerce(other)))


@dataclass(frozen=True, eq=False)
class Density:
    """Density ``dQ/dP`` of a probability measure on a scenario space."""

    space: ScenarioSpace
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=float).ravel()
        if z.size != self.space.n:
            raise StructuralError(f"expected {self.space.n} density entries, got {z.size}")
        if not np.all(np.isfinite(z)):
            raise StructuralError("density entries must be finite")
        if np.any(z < -FEAS_TOL):
            raise StructuralError("density entries must be nonnegative")
        if abs(self.space.probs @ z - 1.0) > FEAS_TOL:
            raise StructuralError(f"density integrates to {self.space.probs @ z:.12g}, not 1")
        z = np.maximum(z, 0.0)
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def measure(self):
        """Probabilities ``Q(omega)``."""
        return self.space.probs * self.z

    def expect(self, x):
        if isinstance(x, Pnl):
            _same_space(self.space, x.space)
            x = x.values
        return float(self.measure @ np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# determining sets
# ---------------------------------------------------------------------------


class RiskSpec:
    """Symbolic determining set; see the concrete subclasses."""

    def check_space(self, space):
        pass


@dataclass(frozen=True)
class TailVaR(RiskSpec):
    """Tail V@R of order ``lam``: densities bounded by ``1/lam``."""

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not 0.0 <= lam <= 1.0:
            raise StructuralError(f"Tail V@R order must lie in [0, 1], got {lam}")
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class WeightedVaR(RiskSpec):
    """Weighted V@R with a discrete weighting measure ``sum a_k delta_{lam_k}``."""

    atoms: tuple

    def __post_init__(self):
        atoms = tuple((float(lam), float(a)) for lam, a in self.atoms)
        if not atoms:
            raise StructuralError("Weighted V@R needs at least one atom")
        for lam, a in atoms:
            if not 0.0 < lam <= 1.0:
                raise StructuralError(f"Weighted V@R atoms must lie in (0, 1], got {lam}")
            if a <= 0:
                raise StructuralError("Weighted V@R weights must be positive")
        if abs(sum(a for _, a in atoms) - 1.0) > 1e-9:
            raise StructuralError("Weighted V@R weights must sum to 1")
        object.__setattr__(self, "atoms", atoms)

    def as_mixture(self):
        return Mixture(tuple((a, TailVaR(lam)) for lam, a in self.atoms))


@dataclass(frozen=True, eq=False)
class Polytope(RiskSpec):
    """Convex hull of finitely many densities."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple(self.vertices)
        if not verts:
            raise StructuralError("a polytope needs at least one vertex")
        for v in verts:
            if not isinstance(v, Density):
                raise StructuralError("polytope vertices must be Density objects")
            _same_space(verts[0].space, v.space)
        object.__setattr__(self, "vertices", verts)

    @property
    def space(self):
        return self.vertices[0].space

    def check_space(self, space):
        _same_space(self.space, space)


@dataclass(frozen=True)
class Mixture(RiskSpec):
    """Minkowski combination ``sum w_k D_k`` of determining sets."""

    terms: tuple

    def __post_init__(self):
        terms = tuple((float(w), s) for w, s in self.terms)
        if not terms:
            raise StructuralError("a mixture needs at least one term")
        for w, s in terms:
            if w <= 0:
                raise StructuralError("mixture weights must be positive")
            if not isinstance(s, RiskSpec):
                raise StructuralError("mixture terms must be RiskSpec instances")
        if abs(sum(w for w, _ in terms) - 1.0) > 1e-9:
            raise StructuralError("mixture weights must sum to 1")
        object.__setattr__(self, "terms", terms)

    def check_space(self, space):
        for _, s in self.terms:
            s.check_space(space)


@dataclass(frozen=True)
class ConvHull(RiskSpec):
    """Convex hull of the union of several determining sets."""

    specs: tuple

    def __post_init__(self):
        specs = tuple(self.specs)
        if not specs:
            raise StructuralError("a convex hull needs at least one member")
        for s in specs:
            if not isinstance(s, RiskSpec):
                raise StructuralError("convex hull members must be RiskSpec instances")
        object.__setattr__(self, "specs", specs)

    def check_space(self, space):
        for s in self.specs:
            s.check_space(space)


def reference_measure():
    """The singleton ``{P}``."""
    return TailVaR(1.0)


# ---------------------------------------------------------------------------
# grounding
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroundedSet:
    """Linear description of a determining set on a concrete space.

    Densities are ``z = density_map @ v`` for block variables ``v`` with
    ``a_eq v = b_eq``, ``a_ub v <= b_ub`` and ``lb <= v <= ub``.
    """

    space: ScenarioSpace
    density_map: sparse.csr_matrix
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    @property
    def nvar(self):
        return self.lb.size

    def expectation_rows(self, values):
        """Rows ``r`` with ``r @ v = E_Q[values_k]`` for each row of ``values``."""
        vals = np.atleast_2d(np.asarray(values, dtype=float))
        weighted = vals * self.space.probs
        return np.asarray(self.density_map.T @ weighted.T).T

    def density(self, v):
        return np.asarray(self.density_map @ np.asarray(v, dtype=float)).ravel()

    def program(self, c, a_eq=None, b_eq=None, a_ub=None, b_ub=None, extra=0,
                extra_bounds=None):
        """Linear program over ``[v, extra variables]`` including the membership rows."""
        k = self.nvar
        tot = k + extra

        def pad(a):
            a = np.zeros((0, tot)) if a is None else np.atleast_2d(np.asarray(a, dtype=float))
            return a

        own_eq = np.hstack([self.a_eq, np.zeros((self.a_eq.shape[0], extra))])
        own_ub = np.hstack([self.a_ub, np.zeros((self.a_ub.shape[0], extra))])
        eq = np.vstack([own_eq, pad(a_eq)])
        ub = np.vstack([own_ub, pad(a_ub)])
        beq = np.concatenate([self.b_eq, np.zeros(0) if b_eq is None else np.atleast_1d(b_eq)])
        bub = np.concatenate([self.b_ub, np.zeros(0) if b_ub is None else np.atleast_1d(b_ub)])
        if extra_bounds is None:
            xlo, xhi = np.full(extra, -np.inf), np.full(extra, np.inf)
        else:
            xlo, xhi = (np.broadcast_to(np.asarray(b, dtype=float), (extra,)) for b in extra_bounds)
        lb = np.concatenate([self.lb, xlo])
        ub_ = np.concatenate([self.ub, xhi])
        return lpmod.LinearProgram(c, eq, beq, ub, bub, (lb, ub_))


def _empty_rows(k):
    return np.zeros((0, k)), np.zeros(0)


def _ground_tail(lam, space):
    n = space.n
    if lam == 1:
        # the singleton {P}: one weight on the constant density
        a_ub, b_ub = _empty_rows(1)
        return GroundedSet(space, sparse.csr_matrix(np.ones((n, 1))), np.ones((1, 1)),
                           np.ones(1), a_ub, b_ub, np.zeros(1), np.full(1, np.inf))
    hi = np.inf if lam == 0 else 1.0 / lam
    a_ub, b_ub = _empty_rows(n)
    return GroundedSet(space, sparse.identity(n, format="csr"), space.probs[None, :].copy(),
                       np.ones(1), a_ub, b_ub, np.zeros(n), np.full(n, hi))


def _ground_polytope(spec, space):
    verts = np.array([v.z for v in spec.vertices])
    k = verts.shape[0]
    a_ub, b_ub = _empty_rows(k)
    return GroundedSet(space, sparse.csr_matrix(verts.T), np.ones((1, k)), np.ones(1),
                       a_ub, b_ub, np.zeros(k), np.full(k, np.inf))


def _block_diag(mats):
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out


def _ground_mixture(terms, space):
    parts = [(w, _ground(s, space)) for w, s in terms]
    dmap = sparse.hstack([w * g.density_map for w, g in parts], format="csr")
    return GroundedSet(
        space, dmap,
        _block_diag([g.a_eq for _, g in parts]), np.concatenate([g.b_eq for _, g in parts]),
        _block_diag([g.a_ub for _, g in parts]), np.concatenate([g.b_ub for _, g in parts]),
        np.concatenate([g.lb for _, g in parts]), np.concatenate([g.ub for _, g in parts]),
    )


def _homogenize(g):
    """Cone ``{(v, t): v in t * G, t >= 0}`` of a bounded grounded set."""
    k = g.nvar
    eq = np.hstack([g.a_eq, -g.b_eq[:, None]])
    ub_rows = [np.hstack([g.a_ub, -g.b_ub[:, None]])]
    lb = g.lb.copy()
    ub = g.ub.copy()
    fin_hi = np.flatnonzero(np.isfinite(g.ub))
    if fin_hi.size:
        rows = np.zeros((fin_hi.size, k + 1))
        rows[np.arange(fin_hi.size), fin_hi] = 1.0
        rows[:, k] = -g.ub[fin_hi]
        ub_rows.append(rows)
        ub[fin_hi] = np.inf
    shifted = np.flatnonzero(np.isfinite(g.lb) & (g.lb != 0))
    if shifted.size:
        rows = np.zeros((shifted.size, k + 1))
        rows[np.arange(shifted.size), shifted] = -1.0
        rows[:, k] = g.lb[shifted]
        ub_rows.append(rows)
        lb[shifted] = -np.inf
    return eq, np.vstack(ub_rows), np.append(lb, 0.0), np.append(ub, np.inf)


def _ground_hull(specs, space):
    parts = [_ground(s, space) for s in specs]
    homog = [_homogenize(g) for g in parts]
    dmap = sparse.hstack(
        [sparse.hstack([g.density_map, sparse.csr_matrix((space.n, 1))]) for g in parts],
        format="csr",
    )
    a_eq = _block_diag([h[0] for h in homog])
    theta = np.zeros((1, a_eq.shape[1]))
    col = 0
    for g in parts:
        col += g.nvar + 1
        theta[0, col - 1] = 1.0
    a_eq = np.vstack([a_eq, theta])
    b_eq = np.zeros(a_eq.shape[0])
    b_eq[-1] = 1.0
    a_ub = _block_diag([h[1] for h in homog])
    return GroundedSet(space, dmap, a_eq, b_eq, a_ub, np.zeros(a_ub.shape[0]),
                       np.concatenate([h[2] for h in homog]), np.concatenate([h[3] for h in homog]))


def _ground(spec, space):
    if isinstance(spec, TailVaR):
        return _ground_tail(spec.lam, space)
    if isinstance(spec, WeightedVaR):
        return _ground_mixture(spec.as_mixture().terms, space)
    if isinstance(spec, Polytope):
        return _ground_polytope(spec, space)
    if isinstance(spec, Mixture):
        return _ground_mixture(spec.terms, space)
    if isinstance(spec, ConvHull):
        return _ground_hull(spec.specs, space)
    raise StructuralError(f"unknown risk specification {spec!r}")


def ground(spec, space):
    """Compile ``spec`` into a :class:`GroundedSet` on ``space``."""
    if not isinstance(space, ScenarioSpace):
        raise StructuralError("ground needs a ScenarioSpace")
    if not isinstance(spec, RiskSpec):
        raise StructuralError("ground needs a RiskSpec")
    spec.check_space(space)
    return _ground(spec, space)


# ---------------------------------------------------------------------------
# utilities and extreme measures
# ---------------------------------------------------------------------------


def tail_mean(values, probs, lam):
    """Mean of the worst ``lam``-fraction of outcomes (boundary atom split)."""
    values = np.asarray(values, dtype=float)
    if lam == 0:
        return float(values.min())
    order = np.argsort(values, kind="stable")
    x = values[order]
    p = probs[order]
    before = np.concatenate([[0.0], np.cumsum(p)[:-1]])
    take = np.clip(np.minimum(p, lam - before), 0.0, None)
    return float(take @ x) / lam


def tail_density(values, probs, lam):
    """Extreme density ``lam^-1 1{X<q} + c 1{X=q}`` of Tail V@R."""
    values = np.asarray(values, dtype=float)
    if lam == 0:
        at = values == values.min()
        return at / probs[at].sum()
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(probs[order])
    k = int(np.searchsorted(cum, lam - 1e-13))
    k = min(k, values.size - 1)
    q = values[order[k]]
    below = values < q
    at = values == q
    p_below = probs[below].sum()
    c = (lam - p_below) / (lam * probs[at].sum())
    c = min(max(c, 0.0), 1.0 / lam)
    return np.where(below, 1.0 / lam, np.where(at, c, 0.0))


def _structural_utility(spec, values, probs):
    if isinstance(spec, TailVaR):
        return tail_mean(values, probs, spec.lam)
    if isinstance(spec, WeightedVaR):
        return sum(a * tail_mean(values, probs, lam) for lam, a in spec.atoms)
    if isinstance(spec, Polytope):
        return min(float((probs * v.z) @ values) for v in spec.vertices)
    if isinstance(spec, Mixture):
        return sum(w * _structural_utility(s, values, probs) for w, s in spec.terms)
    if isinstance(spec, ConvHull):
        return min(_structural_utility(s, values, probs) for s in spec.specs)
    raise StructuralError(f"unknown risk specification {spec!r}")


def _structural_extreme(spec, values, probs):
    """Utility together with a minimising density, without an LP."""
    if isinstance(spec, TailVaR):
        return tail_mean(values, probs, spec.lam), tail_density(values, probs, spec.lam)
    if isinstance(spec, WeightedVaR):
        spec = spec.as_mixture()
    if isinstance(spec, Mixture):
        parts = [(w, _structural_extreme(s, values, probs)) for w, s in spec.terms]
        return sum(w * u for w, (u, _) in parts), sum(w * z for w, (_, z) in parts)
    if isinstance(spec, Polytope):
        vals = [float((probs * v.z) @ values) for v in spec.vertices]
        k = int(np.argmin(vals))
        return vals[k], spec.vertices[k].z.copy()
    if isinstance(spec, ConvHull):
        parts = [_structural_extreme(s, values, probs) for s in spec.specs]
        return min(parts, key=lambda part: part[0])
    raise StructuralError(f"unknown risk specification {spec!r}")


def _check_pnl(spec, x):
    if not isinstance(x, Pnl):
        raise StructuralError("expected a Pnl")
    if not isinstance(spec, RiskSpec):
        raise StructuralError("expected a RiskSpec")
    spec.check_space(x.space)


def lp_minimum(g, values):
    """``min_{z in G} E_z[values]`` and the minimising density."""
    row = g.expectation_rows(values)[0]
    sol = lpmod.solve(g.program(row))
    if not sol.optimal:
        raise NumericalError(f"utility LP ended with status {sol.status.value}: {sol.message}")
    return sol.objective, g.density(sol.x[: g.nvar])


def utility(spec, x, method="auto"):
    """Coherent utility ``u(X) = min_{Q in D} E_Q X``.

    ``method="auto"`` evaluates each spec structurally (sorted tails for
    Tail V@R, sums over mixtures, minima over hulls and vertices);
    ``method="lp"`` minimises over the grounded set instead.
    """
    _check_pnl(spec, x)
    if method == "auto":
        return _structural_utility(spec, x.values, x.space.probs)
    if method == "lp":
        return lp_minimum(ground(spec, x.space), x.values)[0]
    raise StructuralError(f"unknown utility method {method!r}")


def risk(spec, x, method="auto"):
    """Coherent risk ``rho(X) = -u(X)``."""
    return -utility(spec, x, method)


@dataclass(frozen=True, eq=False)
class ExtremeResult:
    utility: float
    density: Density


def extreme_measure(spec, x, method="auto"):
    """A measure in ``D`` attaining ``u(X)``.

    The structural path returns, for Tail V@R, the density
    ``lam^-1 1{X<q} + c 1{X=q}`` and, for Tail V@R(0), ``P`` conditioned on
    the minimising outcomes; mixtures and hulls combine member extremes.
    """
    _check_pnl(spec, x)
    space = x.space
    if method == "auto":
        value, z = _structural_extreme(spec, x.values, space.probs)
        return ExtremeResult(value, Density(space, _renormalize(space, z)))
    if method != "lp":
        raise StructuralError(f"unknown extreme-measure method {method!r}")
    value, z = lp_minimum(ground(spec, space), x.values)
    return ExtremeResult(value, Density(space, _renormalize(space, z)))


def _renormalize(space, z):
    z = np.maximum(z, 0.0)
    return z / (space.probs @ z)


def membership_distance(g, z):
    """L1 distance from ``z`` to the grounded set (0 when ``z`` belongs)."""
    z = z.z if isinstance(z, Density) else np.asarray(z, dtype=float)
    n = g.space.n
    k = g.nvar
    dm = g.density_map.toarray()
    a_eq = np.hstack([dm, -np.eye(n), np.eye(n)])
    c = np.concatenate([np.zeros(k), g.space.probs, g.space.probs])
    lp = g.program(c, a_eq=a_eq, b_eq=z, extra=2 * n, extra_bounds=(0.0, np.inf))
    sol = lpmod.solve(lp)
    if not sol.optimal:
        raise NumericalError(f"membership LP ended with status {sol.status.value}")
    return max(sol.objective, 0.0)


def contains(spec, density, tol=FEAS_TOL):
    """Whether ``density`` lies in the determining set described by ``spec``."""
    spec.check_space(density.space)
    if isinstance(spec, TailVaR):
        hi = np.inf if spec.lam == 0 else 1.0 / spec.lam
        return bool(np.all(density.z <= hi + tol))
    return membership_distance(ground(spec, density.space), density) <= tol


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------


def spec_to_dict(spec):
    """Canonical tagged-union encoding of a risk specification."""
    if isinstance(spec, TailVaR):
        return {"tail_var": {"lambda": spec.lam}}
    if isinstance(spec, WeightedVaR):
        return {"weighted_var": {"atoms": [[lam, a] for lam, a in spec.atoms]}}
    if isinstance(spec, Polytope):
        return {"polytope": {"vertices": [v.z.tolist() for v in spec.vertices]}}
    if isinstance(spec, Mixture):
        return {"mixture": {"terms": [[w, spec_to_dict(s)] for w, s in spec.terms]}}
    if isinstance(spec, ConvHull):
        return {"conv_hull": {"specs": [spec_to_dict(s) for s in spec.specs]}}
    raise StructuralError(f"unknown risk specification {spec!r}")


def spec_from_dict(obj, space=None):
    """Inverse of :func:`spec_to_dict`.

    ``{"tail_var": 0.5}`` is accepted as shorthand for
    ``{"tail_var": {"lambda": 0.5}}``.  Polytopes need ``space``.
    """
    if not isinstance(obj, dict) or len(obj) != 1:
        raise StructuralError(f"a risk specification is a one-key object, got {obj!r}")
    (tag, body), = obj.items()
    try:
        if tag == "tail_var":
            lam = body["lambda"] if isinstance(body, dict) else body
            return TailVaR(float(lam))
        if tag == "weighted_var":
            return WeightedVaR(tuple((lam, a) for lam, a in body["atoms"]))
        if tag == "polytope":
            if space is None:
                raise StructuralError("a polytope specification needs a scenario space")
            return Polytope(tuple(Density(space, v) for v in body["vertices"]))
        if tag == "mixture":
            return Mixture(tuple((w, spec_from_dict(s, space)) for w, s in body["terms"]))
        if tag == "conv_hull":
            return ConvHull(tuple(spec_from_dict(s, space) for s in body["specs"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, StructuralError):
            raise
        raise StructuralError(f"malformed {tag} specification: {exc}") from exc
    raise StructuralError(f"unknown risk specification tag {tag!r}")
