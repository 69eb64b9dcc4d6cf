"""Upper and lower good-deal prices, hedging strategies and the Tail V@R closed form."""

from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, stats

from . import linprog as lpmod
from .errors import DomainError, NumericalError, StructuralError
from .markets import MarketModel, endpoint_solutions, ngd_interval
from .scenario import ScenarioSpace, TailVaR, utility

# the auxiliary range LP has one row per grounded variable; skip it beyond this
RANGE_MAX_VARS = 4000


def upper_lower(model, spec, f):
    """``(V_upper, V_lower)``; ``(-inf, +inf)`` when no good-deal-free price exists."""
    iv = ngd_interval(model, spec, f)
    if iv.empty:
        return -np.inf, np.inf
    return iv.hi, iv.lo


@dataclass(frozen=True, eq=False)
class HedgeReport:
    upper_price: float
    lower_price: float
    super_h: np.ndarray = None
    sub_h: np.ndarray = None
    super_h_range: tuple = None
    sub_h_range: tuple = None
    certificate: object = None

    @property
    def violated(self):
        return self.upper_price < self.lower_price

    def to_dict(self):
        def arr(v):
            return None if v is None else [float(t) for t in np.ravel(v)]

        return {
            "upper_price": self.upper_price,
            "lower_price": self.lower_price,
            "super_h": arr(self.super_h),
            "sub_h": arr(self.sub_h),
            "super_h_range": arr(self.super_h_range),
            "sub_h_range": arr(self.sub_h_range),
        }


def hedge_range(model, grounded, f, price, side):
    """Interval of one-asset strategies ``h`` that hedge at ``price``.

    ``side="super"`` collects ``h`` with ``u(h (S1-S0) - F + price) >= 0`` and
    ``side="sub"`` those with ``u(h (S1-S0) + F - price) >= 0``.  The inner
    maximum over the determining set is replaced by its LP dual, so both
    ends come from one auxiliary program each.
    """
    if model.d != 1:
        raise StructuralError("hedge ranges are computed for one asset only")
    g = grounded
    k = g.nvar
    sigma, bound = (1.0, price) if side == "super" else (-1.0, -price)
    f_row = g.expectation_rows(f.values)[0]
    s_row = g.expectation_rows(model.increments)[0]
    fin_hi = np.flatnonzero(np.isfinite(g.ub))
    fin_lo = np.flatnonzero(np.isfinite(g.lb))
    m_eq, m_ub = g.a_eq.shape[0], g.a_ub.shape[0]
    # columns: h, y (free), w >= 0, alpha >= 0, beta >= 0
    n_cols = 1 + m_eq + m_ub + fin_hi.size + fin_lo.size
    a_eq = np.zeros((k, n_cols))
    a_eq[:, 0] = s_row
    col = 1
    a_eq[:, col:col + m_eq] = g.a_eq.T
    col += m_eq
    a_eq[:, col:col + m_ub] = g.a_ub.T
    col += m_ub
    a_eq[fin_hi, col + np.arange(fin_hi.size)] = 1.0
    col += fin_hi.size
    a_eq[fin_lo, col + np.arange(fin_lo.size)] = -1.0
    value_row = np.concatenate([[0.0], g.b_eq, g.b_ub, g.ub[fin_hi], -g.lb[fin_lo]])
    lo_b = np.concatenate([[-np.inf], np.full(m_eq, -np.inf), np.zeros(n_cols - 1 - m_eq)])
    hi_b = np.full(n_cols, np.inf)
    slack = 1e-9 * (1.0 + abs(bound))
    ends = []
    for sense in (1.0, -1.0):
        c = np.zeros(n_cols)
        c[0] = sense
        sol = lpmod.linprog(c, a_eq, sigma * f_row, value_row[None, :], [bound + slack],
                            bounds=(lo_b, hi_b))
        if sol.status is lpmod.Status.UNBOUNDED:
            ends.append(-sense * np.inf)
        elif sol.optimal:
            ends.append(float(sol.x[0]))
        else:
            raise NumericalError(f"hedge-range LP ended with status {sol.status.value}")
    return ends[0], ends[1]


def superhedge(model, spec, f, ranges=True):
    """Upper/lower prices with super- and subhedging strategies.

    Strategies are minus the multipliers of the martingale rows in the two
    pricing programs; with one asset the full interval of valid strategies
    is reported as well.
    """
    g, lo, hi = endpoint_solutions(model, spec, f)
    if not (lo.optimal and hi.optimal):
        iv = ngd_interval(model, spec, f)
        return HedgeReport(-np.inf, np.inf, certificate=iv.certificate)
    m = g.a_eq.shape[0]
    upper = -hi.objective
    lower = lo.objective
    super_h = -hi.dual_eq[m:]
    sub_h = -lo.dual_eq[m:]
    sup_r = sub_r = None
    if ranges and model.d == 1 and g.nvar <= RANGE_MAX_VARS:
        sup_r = hedge_range(model, g, f, upper, "super")
        sub_r = hedge_range(model, g, f, lower, "sub")
    return HedgeReport(upper, lower, super_h, sub_h, sup_r, sub_r)


def hedge_residuals(model, spec, f, report, h_super=None, h_sub=None):
    """``u(<h,S1-S0> - F + V_upper)`` and ``u(<h,S1-S0> + F - V_lower)``."""
    hs = report.super_h if h_super is None else h_super
    hb = report.sub_h if h_sub is None else h_sub
    up = utility(spec, model.gain(hs) - f + report.upper_price)
    down = utility(spec, model.gain(hb) + f - report.lower_price)
    return up, down


# ---------------------------------------------------------------------------
# payoffs and continuous claims
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Payoff:
    """Piecewise-linear payoff with linear extrapolation beyond the breakpoints."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != ys.shape:
            raise StructuralError("a payoff needs at least two (x, y) breakpoints")
        if np.any(np.diff(xs) <= 0):
            raise StructuralError("payoff breakpoints must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def call(cls, strike):
        strike = float(strike)
        return cls([min(0.0, strike - 1.0), strike, strike + 1.0],
                   [0.0, 0.0, 1.0])

    @classmethod
    def put(cls, strike):
        strike = float(strike)
        return cls([strike - 1.0, strike, strike + 1.0], [1.0, 0.0, 0.0])

    @classmethod
    def linear(cls, slope, intercept=0.0):
        return cls([0.0, 1.0], [intercept, intercept + slope])

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, dict):
            if "call" in obj:
                return cls.call(obj["call"])
            if "put" in obj:
                return cls.put(obj["put"])
            if "linear" in obj:
                return cls.linear(*obj["linear"])
            if "breakpoints" in obj:
                obj = obj["breakpoints"]
            else:
                raise StructuralError(f"unknown payoff {obj!r}")
        pts = np.asarray(obj, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise StructuralError("payoff breakpoints must be [x, y] pairs")
        return cls(pts[:, 0], pts[:, 1])

    @property
    def slopes(self):
        return np.diff(self.ys) / np.diff(self.xs)

    def is_convex(self):
        s = self.slopes
        return bool(np.all(np.diff(s) >= -1e-12 * (1.0 + np.abs(s[:-1]))))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        s = self.slopes
        out = np.interp(x, self.xs, self.ys)
        out = np.where(x < self.xs[0], self.ys[0] + s[0] * (x - self.xs[0]), out)
        return np.where(x > self.xs[-1], self.ys[-1] + s[-1] * (x - self.xs[-1]), out)


@dataclass(frozen=True, eq=False)
class ContinuousClaimSpec:
    """Claim ``f(S1)`` on an atomless law of ``S1`` on the half line.

    The law is given by its quantile function; ``cdf`` is optional and only
    used to place payoff kinks as quadrature breakpoints.
    """

    quantile: object
    lam: float
    s0: float
    payoff: Payoff
    cdf: object = None

    def __post_init__(self):
        if not 0.0 < float(self.lam) <= 1.0:
            raise DomainError("the Tail V@R order must lie in (0, 1]")
        if not callable(self.quantile):
            raise StructuralError("quantile must be callable")
        if not self.payoff.is_convex():
            raise DomainError("the payoff must be convex")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "s0", float(self.s0))

    @classmethod
    def lognormal(cls, meanlog, sdlog, lam, s0, payoff):
        law = stats.lognorm(s=sdlog, scale=np.exp(meanlog))
        return cls(law.ppf, lam, s0, payoff, law.cdf)

    def kinks(self, lo=0.0, hi=1.0):
        if self.cdf is None:
            return None
        pts = [float(self.cdf(x)) for x in self.payoff.xs]
        pts = [p for p in pts if lo < p < hi]
        return pts or None


def _qint(claim, func, lo, hi):
    """``int_lo^hi func(q(s)) ds`` over quantile levels."""
    if hi <= lo:
        return 0.0
    val, err = integrate.quad(lambda s: func(claim.quantile(s)), lo, hi, limit=400,
                              epsabs=1e-11, epsrel=1e-10, points=claim.kinks(lo, hi))
    if not np.isfinite(val):
        raise NumericalError("quadrature did not converge")
    return val


def _identity(x):
    return x


@dataclass(frozen=True)
class ClosedFormResult:
    upper: float
    lower: float
    super_h: float
    sub_h: float
    a: float
    b: float
    c: float
    d: float

    def to_dict(self):
        return dict(self.__dict__)


def tail_closed_form(claim):
    """Good-deal prices and hedges of ``f(S1)`` under Tail V@R with one asset.

    The upper price uses the two-tailed density ``lam^-1`` on ``{S1 < q_a}``
    and ``{S1 > q_(1-b)}`` with ``a + b = lam``; the lower price uses the
    band ``[q_c, q_d]`` with ``d - c = lam``.  ``a`` and ``c`` are found by
    Brent's method on the martingale condition.
    """
    lam, s0 = claim.lam, claim.s0
    lo_mean = _qint(claim, _identity, 0.0, lam) / lam
    hi_mean = _qint(claim, _identity, 1.0 - lam, 1.0) / lam
    if not lo_mean < s0 < hi_mean:
        raise DomainError(
            f"need u(S1) < S0 < -u(-S1); got {lo_mean:.10g}, {s0:.10g}, {hi_mean:.10g}")

    def two_tail(a):
        return (_qint(claim, _identity, 0.0, a) + _qint(claim, _identity, 1.0 - lam + a, 1.0)) / lam

    def band(c):
        return _qint(claim, _identity, c, c + lam) / lam

    grid = np.linspace(0.0, lam, 9)
    vals = [two_tail(a) for a in grid]
    if np.any(np.diff(vals) > 1e-9 * (1.0 + abs(s0))):
        raise NumericalError("two-tailed mean is not decreasing in a")
    grid_c = np.linspace(0.0, 1.0 - lam, 9)
    vals_c = [band(c) for c in grid_c]
    if np.any(np.diff(vals_c) < -1e-9 * (1.0 + abs(s0))):
        raise NumericalError("band mean is not increasing in c")
    try:
        a = optimize.brentq(lambda t: two_tail(t) - s0, 0.0, lam, xtol=1e-14, rtol=1e-14)
        c = optimize.brentq(lambda t: band(t) - s0, 0.0, 1.0 - lam, xtol=1e-14, rtol=1e-14)
    except ValueError as exc:
        raise NumericalError(f"no sign change for the root finder: {exc}") from exc
    b = lam - a
    d = c + lam
    f = claim.payoff
    upper = (_qint(claim, f, 0.0, a) + _qint(claim, f, 1.0 - b, 1.0)) / lam
    lower = _qint(claim, f, c, d) / lam
    qa, qb = claim.quantile(a), claim.quantile(1.0 - b)
    qc, qd = claim.quantile(c), claim.quantile(d)
    super_h = float((f(qb) - f(qa)) / (qb - qa))
    sub_h = float(-(f(qd) - f(qc)) / (qd - qc))
    return ClosedFormResult(float(upper), float(lower), super_h, sub_h, a, b, c, d)


def discretize(claim, n):
    """Equal-weight quantile-grid version ``(model, spec, F)`` of a continuous claim."""
    levels = (np.arange(n) + 0.5) / n
    x = np.asarray(claim.quantile(levels), dtype=float)
    space = ScenarioSpace.uniform(n)
    model = MarketModel(space, [claim.s0], x[None, :])
    return model, TailVaR(claim.lam), space.pnl(claim.payoff(x))
