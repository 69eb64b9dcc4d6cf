"""Dense linear-programming engine.

Bounded-variable revised simplex (two phases) on dense numpy arrays.  Every
optimal answer carries the dual vectors of the equality and inequality rows
together with the reduced costs of the variables, so callers can read off
sensitivities and certificates without a second solve.

Sign conventions for ``min c.x  s.t.  A_eq x = b_eq, A_ub x <= b_ub,
lb <= x <= ub``:

* ``dual_eq[i]`` is the derivative of the optimal value with respect to
  ``b_eq[i]``;
* ``dual_ub[i] >= 0`` and the derivative with respect to ``b_ub[i]`` is
  ``-dual_ub[i]``;
* ``reduced_costs = c - A_eq.T @ dual_eq + A_ub.T @ dual_ub``.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError

_PIVOT_TOL = 1e-9
_DUAL_TOL = 1e-11
_REFACTOR_EVERY = 64
_DEGENERATE_STREAK = 40


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    FAILED = "failed"


def _as_matrix(a, n, name):
    if a is None:
        return np.zeros((0, n))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, n))
    if a.ndim != 2 or a.shape[1] != n:
        raise StructuralError(f"{name} must have {n} columns, got shape {a.shape}")
    return a


def _as_vector(b, m, name):
    if b is None:
        b = np.zeros(0)
    b = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
    if b.shape != (m,):
        raise StructuralError(f"{name} must have length {m}, got {b.shape}")
    return b


def _parse_bounds(bounds, n):
    if bounds is None:
        return np.zeros(n), np.full(n, np.inf)
    if isinstance(bounds, tuple) and len(bounds) == 2:
        sides = []
        for side, default in zip(bounds, (-np.inf, np.inf)):
            if side is None:
                sides.append(np.full(n, default))
            elif np.ndim(side) == 0:
                sides.append(np.full(n, float(side)))
            else:
                arr = np.array([default if v is None else v for v in side], dtype=float)
                sides.append(arr)
        lo, hi = sides
    else:
        pairs = list(bounds)
        if len(pairs) != n:
            raise StructuralError(f"bounds must have {n} entries")
        lo = np.array([-np.inf if p[0] is None else p[0] for p in pairs], dtype=float)
        hi = np.array([np.inf if p[1] is None else p[1] for p in pairs], dtype=float)
    if lo.shape != (n,) or hi.shape != (n,):
        raise StructuralError("bounds do not match the number of variables")
    return lo, hi


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min c.x`` subject to equalities, ``<=`` rows and variable bounds.

    ``bounds`` is either ``(lb, ub)`` with scalars or arrays, or a sequence of
    per-variable ``(lo, hi)`` pairs; ``None`` means unbounded on that side.
    The default is ``x >= 0``.
    """

    c: np.ndarray
    a_eq: np.ndarray = None
    b_eq: np.ndarray = None
    a_ub: np.ndarray = None
    b_ub: np.ndarray = None
    bounds: object = None
    lb: np.ndarray = field(init=False)
    ub: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float)).ravel()
        n = c.size
        a_eq = _as_matrix(self.a_eq, n, "a_eq")
        a_ub = _as_matrix(self.a_ub, n, "a_ub")
        b_eq = _as_vector(self.b_eq, a_eq.shape[0], "b_eq")
        b_ub = _as_vector(self.b_ub, a_ub.shape[0], "b_ub")
        lb, ub = _parse_bounds(self.bounds, n)
        for name, arr in (("c", c), ("a_eq", a_eq), ("b_eq", b_eq), ("a_ub", a_ub), ("b_ub", b_ub)):
            if not np.all(np.isfinite(arr)):
                raise StructuralError(f"{name} has non-finite entries")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise StructuralError("invalid variable bounds")
        for name, val in (("c", c), ("a_eq", a_eq), ("b_eq", b_eq), ("a_ub", a_ub),
                          ("b_ub", b_ub), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, val)

    @property
    def n(self):
        return self.c.size


@dataclass(frozen=True, eq=False)
class FarkasCertificate:
    """Row multipliers proving infeasibility.

    With ``r = -A_eq.T y + A_ub.T w`` and ``w >= 0``, every feasible point
    would satisfy ``y.b_eq - w.b_ub + min_{lb<=x<=ub} r.x <= 0``; ``value``
    is that quantity and is strictly positive.
    """

    y_eq: np.ndarray
    w_ub: np.ndarray
    value: float


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: Status
    x: np.ndarray
    objective: float
    dual_eq: np.ndarray
    dual_ub: np.ndarray
    reduced_costs: np.ndarray
    farkas: FarkasCertificate = None
    ray: np.ndarray = None
    iterations: int = 0
    message: str = ""

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


def box_minimum(r, lb, ub):
    """``min r.x`` over the box; ``-inf`` when it is unbounded."""
    total = 0.0
    pos = r > 0
    neg = r < 0
    if np.any(np.isinf(lb[pos])) or np.any(np.isinf(ub[neg])):
        return -np.inf
    total += float(r[pos] @ lb[pos]) + float(r[neg] @ ub[neg])
    return total


def dual_objective(lp, dual_eq, dual_ub, reduced_costs=None):
    """Lagrangian dual value for the given multipliers."""
    if reduced_costs is None:
        reduced_costs = lp.c - lp.a_eq.T @ dual_eq + lp.a_ub.T @ dual_ub
    return float(lp.b_eq @ dual_eq - lp.b_ub @ dual_ub) + box_minimum(reduced_costs, lp.lb, lp.ub)


class _StandardForm:
    """``A y = b, 0 <= y <= U`` with ``b >= 0`` and rows scaled to unit max."""

    def __init__(self, lp):
        n = lp.n
        m_eq, m_ub = lp.a_eq.shape[0], lp.a_ub.shape[0]
        a_full = np.vstack([lp.a_eq, lp.a_ub]) if (m_eq + m_ub) else np.zeros((0, n))
        b_full = np.concatenate([lp.b_eq, lp.b_ub])
        lb, ub = lp.lb, lp.ub

        fin_lo = np.isfinite(lb)
        fin_hi = np.isfinite(ub)
        shift = np.where(fin_lo, lb, np.where(fin_hi, ub, 0.0))
        sign = np.where(fin_lo, 1.0, np.where(fin_hi, -1.0, 1.0))
        cap = np.where(fin_lo, ub - lb, np.inf)
        free = ~fin_lo & ~fin_hi

        orig = np.concatenate([np.arange(n), np.flatnonzero(free)])
        sgn = np.concatenate([sign, -np.ones(int(free.sum()))])
        cap = np.concatenate([cap, np.full(int(free.sum()), np.inf)])

        cols = a_full[:, orig] * sgn
        cost = lp.c[orig] * sgn
        b = b_full - a_full @ shift
        m = m_eq + m_ub
        slack = np.zeros((m, m_ub))
        slack[m_eq + np.arange(m_ub), np.arange(m_ub)] = 1.0
        cols = np.hstack([cols, slack])
        cost = np.concatenate([cost, np.zeros(m_ub)])
        cap = np.concatenate([cap, np.full(m_ub, np.inf)])

        flip = np.where(b < 0, -1.0, 1.0)
        rowmax = np.abs(cols).max(axis=1) if cols.size else np.ones(m)
        scale = np.where(rowmax > 0, 1.0 / np.where(rowmax > 0, rowmax, 1.0), 1.0)
        factor = flip * scale
        self.A = cols * factor[:, None]
        self.b = b * factor
        self.factor = factor
        cmax = np.abs(cost).max() if cost.size else 0.0
        self.cscale = cmax if cmax > 0 else 1.0
        self.cost = cost / self.cscale
        self.cap = cap
        self.orig = orig
        self.sgn = sgn
        self.shift = shift
        self.n_struct = orig.size
        self.m_eq, self.m_ub, self.n = m_eq, m_ub, n
        self.const = float(lp.c @ shift)

    def to_original(self, y):
        x = self.shift.copy()
        np.add.at(x, self.orig, self.sgn * y[: self.n_struct])
        return x

    def row_duals(self, pi, cost_scale):
        """Map duals of the scaled rows back to ``(dual_eq, dual_ub)``."""
        raw = pi * self.factor * cost_scale
        return raw[: self.m_eq].copy(), -raw[self.m_eq:].copy()


class _Simplex:
    def __init__(self, A, b, cap, max_iter):
        m, n = A.shape
        self.m, self.n = m, n
        self.A = np.hstack([A, np.eye(m)])
        self.b = b
        self.cap = np.concatenate([cap, np.zeros(m)])
        self.cap_phase1 = np.concatenate([cap, np.full(m, np.inf)])
        self.basis = np.arange(n, n + m)
        self.is_basic = np.zeros(n + m, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(n + m, dtype=bool)
        self.Binv = np.eye(m)
        self.max_iter = max_iter
        self.iterations = 0
        self.since_refactor = 0
        self.ray = None

    def refactor(self):
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B)
        self.since_refactor = 0

    def values(self, U):
        vals = np.where(self.at_upper, U, 0.0)
        vals[self.basis] = 0.0
        xB = self.Binv @ (self.b - self.A @ vals)
        vals[self.basis] = xB
        return vals, xB

    def run(self, cost, U, enterable, bland=False):
        """Iterate to optimality; returns 'optimal', 'unbounded' or 'limit'."""
        degen = 0
        use_bland = bland
        while True:
            if self.iterations >= self.max_iter:
                return "limit"
            if self.since_refactor >= _REFACTOR_EVERY:
                self.refactor()
            vals, xB = self.values(U)
            pi = cost[self.basis] @ self.Binv
            d = cost - pi @ self.A
            nonbasic = enterable & ~self.is_basic
            up = nonbasic & ~self.at_upper & (d < -_DUAL_TOL) & (U > 0)
            down = nonbasic & self.at_upper & (d > _DUAL_TOL)
            cand = up | down
            if not cand.any():
                return "optimal"
            if use_bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                j = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            sigma = 1.0 if up[j] else -1.0
            alpha = self.Binv @ self.A[:, j]
            delta = sigma * alpha
            Ub = U[self.basis]
            lim = np.full(self.m, np.inf)
            dec = delta > _PIVOT_TOL
            inc = (delta < -_PIVOT_TOL) & np.isfinite(Ub)
            lim[dec] = np.maximum(xB[dec], 0.0) / delta[dec]
            lim[inc] = np.maximum(Ub[inc] - xB[inc], 0.0) / (-delta[inc])
            t_row = lim.min() if self.m else np.inf
            t_flip = U[j]
            self.iterations += 1
            if not np.isfinite(t_row) and not np.isfinite(t_flip):
                ray = np.zeros(self.n + self.m)
                ray[j] = sigma
                ray[self.basis] = -delta
                self.ray = ray
                return "unbounded"
            if t_flip <= t_row:
                self.at_upper[j] = not self.at_upper[j]
                step = t_flip
            else:
                ties = np.flatnonzero(lim <= t_row + 1e-12 * max(1.0, t_row))
                if use_bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])
                self._pivot(r, j, alpha, leaving_to_upper=delta[r] < 0)
                step = t_row
            if step <= 1e-12:
                degen += 1
                if degen > _DEGENERATE_STREAK:
                    use_bland = True
            else:
                degen = 0
                use_bland = bland

    def _pivot(self, r, j, alpha, leaving_to_upper):
        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.at_upper[leaving] = leaving_to_upper
        self.basis[r] = j
        self.is_basic[j] = True
        self.at_upper[j] = False
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.since_refactor += 1

    def drive_out_artificials(self):
        """Replace zero-level artificial basics by structural columns where possible."""
        n = self.n
        for r in range(self.m):
            if self.basis[r] < n:
                continue
            row = self.Binv[r] @ self.A[:, :n]
            row[self.is_basic[:n]] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) > 1e-7:
                alpha = self.Binv @ self.A[:, j]
                self._pivot(r, j, alpha, leaving_to_upper=False)


def _trivial(lp):
    """Problems without rows: each variable sits at its cheaper bound."""
    c, lb, ub = lp.c, lp.lb, lp.ub
    x = np.where(c > 0, lb, np.where(c < 0, ub, np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))))
    empty = np.zeros(0)
    if np.any(~np.isfinite(x)):
        j = int(np.flatnonzero(~np.isfinite(x))[0])
        ray = np.zeros(lp.n)
        ray[j] = -np.sign(c[j])
        return LpSolution(Status.UNBOUNDED, np.where(np.isfinite(x), x, 0.0), -np.inf, empty, empty,
                          c.copy(), ray=ray, message="objective unbounded below")
    return LpSolution(Status.OPTIMAL, x, float(c @ x), empty, empty, c.copy())


def solve(lp, max_iter=None, bland=False):
    """Solve ``lp``; never raises on infeasible, unbounded or failed solves."""
    if not isinstance(lp, LinearProgram):
        raise StructuralError("solve expects a LinearProgram")
    n = lp.n
    empty_eq = np.zeros(lp.a_eq.shape[0])
    empty_ub = np.zeros(lp.a_ub.shape[0])
    if np.any(lp.lb > lp.ub):
        j = int(np.flatnonzero(lp.lb > lp.ub)[0])
        return LpSolution(Status.INFEASIBLE, np.zeros(n), np.nan, empty_eq, empty_ub, np.zeros(n),
                          farkas=FarkasCertificate(empty_eq, empty_ub, float(lp.lb[j] - lp.ub[j])),
                          message=f"variable {j} has lb > ub")
    if lp.a_eq.shape[0] + lp.a_ub.shape[0] == 0:
        return _trivial(lp)

    sol = _solve_once(lp, max_iter, bland)
    if sol.status is Status.FAILED and not bland:
        sol = _solve_once(lp, max_iter, True)
    return sol


def _solve_once(lp, max_iter, bland):
    sf = _StandardForm(lp)
    m, N = sf.A.shape
    if max_iter is None:
        max_iter = 50 * (m + N) + 1000
    sx = _Simplex(sf.A, sf.b, sf.cap, max_iter)
    n = lp.n
    nan_sol = dict(x=np.full(n, np.nan), objective=np.nan, dual_eq=np.zeros(sf.m_eq),
                   dual_ub=np.zeros(sf.m_ub), reduced_costs=np.zeros(n))

    def failed(msg):
        return LpSolution(Status.FAILED, iterations=sx.iterations, message=msg, **nan_sol)

    # phase 1
    cost1 = np.concatenate([np.zeros(N), np.ones(m)])
    enter1 = np.ones(N + m, dtype=bool)
    try:
        state = sx.run(cost1, sx.cap_phase1, enter1, bland)
        if state == "limit":
            return failed("iteration limit in phase 1")
        sx.refactor()
    except np.linalg.LinAlgError:
        return failed("singular basis in phase 1")
    vals, _ = sx.values(sx.cap_phase1)
    infeas = float(vals[N:].sum())
    if infeas > 1e-9 * max(1.0, float(np.abs(sf.b).max(initial=0.0))):
        pi = cost1[sx.basis] @ sx.Binv
        y_eq, w_ub = sf.row_duals(pi, 1.0)
        r = -lp.a_eq.T @ y_eq + lp.a_ub.T @ w_ub
        value = float(lp.b_eq @ y_eq - lp.b_ub @ w_ub) + box_minimum(r, lp.lb, lp.ub)
        return LpSolution(Status.INFEASIBLE, np.full(n, np.nan), np.nan, np.zeros(sf.m_eq),
                          np.zeros(sf.m_ub), np.zeros(n), farkas=FarkasCertificate(y_eq, w_ub, value),
                          iterations=sx.iterations, message=f"phase 1 residual {infeas:.3e}")

    # phase 2
    try:
        sx.drive_out_artificials()
        sx.refactor()
    except np.linalg.LinAlgError:
        return failed("singular basis after phase 1")
    cost2 = np.concatenate([sf.cost, np.zeros(m)])
    enter2 = np.concatenate([np.ones(N, dtype=bool), np.zeros(m, dtype=bool)])
    sx.at_upper[N:] = False
    try:
        state = sx.run(cost2, sx.cap, enter2, bland)
        if state == "limit":
            return failed("iteration limit in phase 2")
        sx.refactor()
    except np.linalg.LinAlgError:
        return failed("singular basis in phase 2")

    vals, _ = sx.values(sx.cap)
    if state == "unbounded":
        ray_std = sx.ray
        ray = np.zeros(n)
        np.add.at(ray, sf.orig, sf.sgn * ray_std[: sf.n_struct])
        norm = np.abs(ray).max()
        if norm > 0:
            ray = ray / norm
        return LpSolution(Status.UNBOUNDED, sf.to_original(np.clip(vals[:N], 0, sf.cap)), -np.inf,
                          np.zeros(sf.m_eq), np.zeros(sf.m_ub), np.zeros(n), ray=ray,
                          iterations=sx.iterations, message="objective unbounded below")

    y = np.clip(vals[:N], 0.0, sf.cap)
    x = sf.to_original(y)
    x = np.clip(x, lp.lb, lp.ub)
    pi = cost2[sx.basis] @ sx.Binv
    dual_eq, dual_ub = sf.row_duals(pi, sf.cscale)
    dual_ub = np.maximum(dual_ub, 0.0)
    rc = lp.c - lp.a_eq.T @ dual_eq + lp.a_ub.T @ dual_ub

    scale = 1.0 + max(float(np.abs(lp.b_eq).max(initial=0.0)), float(np.abs(lp.b_ub).max(initial=0.0)))
    res_eq = np.abs(lp.a_eq @ x - lp.b_eq).max(initial=0.0)
    res_ub = np.maximum(lp.a_ub @ x - lp.b_ub, 0.0).max(initial=0.0)
    if max(res_eq, res_ub) > 1e-6 * scale:
        return failed(f"primal residual {max(res_eq, res_ub):.3e} after phase 2")
    return LpSolution(Status.OPTIMAL, x, float(lp.c @ x), dual_eq, dual_ub, rc,
                      iterations=sx.iterations)


def optimal_face(lp, sol, tol=1e-9):
    """Constraints cutting ``lp``'s feasible set down to its optimal face.

    By complementary slackness every optimum keeps variables with nonzero
    reduced cost at the bound they occupy and inequality rows with positive
    multiplier tight.  Returns a new program with objective ``c``.
    """
    if not sol.optimal:
        raise StructuralError("optimal_face needs an optimal solution")
    scale = max(1.0, float(np.abs(lp.c).max(initial=0.0)))
    lb, ub = lp.lb.copy(), lp.ub.copy()
    at_lo = sol.reduced_costs > tol * scale
    at_hi = sol.reduced_costs < -tol * scale
    ub[at_lo] = lb[at_lo]
    lb[at_hi] = ub[at_hi]
    tight = sol.dual_ub > tol * scale
    a_eq = np.vstack([lp.a_eq, lp.a_ub[tight]])
    b_eq = np.concatenate([lp.b_eq, lp.b_ub[tight]])
    return a_eq, b_eq, lp.a_ub[~tight], lp.b_ub[~tight], lb, ub


def linprog(c, a_eq=None, b_eq=None, a_ub=None, b_ub=None, bounds=None, **kw):
    """Shorthand for ``solve(LinearProgram(...))``."""
    return solve(LinearProgram(c, a_eq, b_eq, a_ub, b_ub, bounds), **kw)
