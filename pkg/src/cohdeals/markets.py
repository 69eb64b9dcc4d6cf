"""Static market models, risk-neutral measures and fair price intervals."""

from dataclasses import dataclass, field

import numpy as np

from . import linprog as lpmod
from ._tol import FEAS_TOL
from .errors import ModelError, NgdViolation, NumericalError, StructuralError
from .scenario import (Density, Mixture, Pnl, Polytope, RiskSpec, ScenarioSpace, ground,
                       utility)


@dataclass(frozen=True, eq=False)
class MarketModel:
    """One-period market with ``d`` traded assets.

    ``s1`` is a ``d x n`` array (asset-major) of discounted time-1 prices.
    ``d = 0`` is allowed and leaves only the normalisation constraint.
    """

    space: ScenarioSpace
    s0: np.ndarray
    s1: np.ndarray

    def __post_init__(self):
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=float)).ravel()
        if isinstance(self.s1, (list, tuple)) and self.s1 and isinstance(self.s1[0], Pnl):
            for x in self.s1:
                if x.space != self.space:
                    raise StructuralError("asset prices live on a different scenario space")
            s1 = np.array([x.values for x in self.s1])
        else:
            s1 = np.asarray(self.s1, dtype=float)
            if s1.size == 0:
                s1 = np.zeros((0, self.space.n))
            s1 = np.atleast_2d(s1)
        if s1.shape != (s0.size, self.space.n):
            raise StructuralError(
                f"s1 must have shape ({s0.size}, {self.space.n}), got {s1.shape}")
        if not (np.all(np.isfinite(s0)) and np.all(np.isfinite(s1))):
            raise StructuralError("prices must be finite")
        s0.flags.writeable = False
        s1.flags.writeable = False
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "s1", s1)

    @property
    def d(self):
        return self.s0.size

    @property
    def increments(self):
        """``S1 - S0`` as a ``d x n`` array."""
        return self.s1 - self.s0[:, None]

    def gain(self, h):
        """Discounted P&L ``<h, S1 - S0>`` of holding ``h``."""
        h = np.atleast_1d(np.asarray(h, dtype=float))
        if h.size != self.d:
            raise StructuralError(f"strategy must have {self.d} entries")
        return Pnl(self.space, h @ self.increments if self.d else np.zeros(self.space.n))


@dataclass(frozen=True, eq=False)
class PriceInterval:
    """Price interval with endpoint attainment information.

    An empty interval is encoded as ``lo = +inf, hi = -inf`` and carries the
    violation certificate.
    """

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True
    lo_witness: Density = None
    hi_witness: Density = None
    certificate: object = None
    details: dict = field(default_factory=dict)

    @property
    def empty(self):
        return self.lo > self.hi

    def __contains__(self, x):
        if self.empty:
            return False
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return bool(above and below)

    def contains_interval(self, other, tol=0.0):
        """Whether ``other`` is a subset of the closure of ``self`` up to ``tol``."""
        if other.empty:
            return True
        if self.empty:
            return False
        return self.lo - tol <= other.lo and other.hi <= self.hi + tol

    @classmethod
    def empty_with(cls, certificate, **details):
        return cls(np.inf, -np.inf, False, False, certificate=certificate, details=details)


def _check_claim(model, f):
    if not isinstance(f, Pnl):
        raise StructuralError("the claim must be a Pnl")
    if f.space != model.space:
        raise StructuralError("claim and market live on different scenario spaces")


def risk_neutral_constraints(model):
    """Rows ``(a, b)`` with ``a @ z = b`` for densities ``z``.

    The first row is the normalisation ``sum p_i z_i = 1``; the remaining
    ``d`` rows are the martingale conditions ``E_z S1^j = S0^j``.
    """
    p = model.space.probs
    a = np.vstack([p[None, :], model.s1 * p])
    b = np.concatenate([[1.0], model.s0])
    return a, b


# ---------------------------------------------------------------------------
# no-good-deals
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NgdCheck:
    """Outcome of the no-good-deal test.

    ``holds`` with a risk-neutral ``witness`` in ``D``; otherwise a good deal
    ``h`` with ``value = u(<h, S1 - S0>) > 0``.
    """

    holds: bool
    witness: Density = None
    good_deal: np.ndarray = None
    value: float = 0.0

    def to_dict(self):
        out = {"holds": self.holds, "value": self.value}
        if self.witness is not None:
            out["witness"] = self.witness.z.tolist()
        if self.good_deal is not None:
            out["good_deal"] = self.good_deal.tolist()
        return out


def _scale(model, f=None):
    vals = [1.0, float(np.abs(model.s1).max(initial=0.0)), float(np.abs(model.s0).max(initial=0.0))]
    if f is not None:
        vals.append(float(np.abs(f.values).max()))
    return max(vals)


def check_ngd(model, spec):
    """Test whether ``D`` meets the martingale measures.

    Minimises the L1 mispricing ``sum |E_z S1 - S0|`` over ``z in D``.  Zero
    means a risk-neutral measure exists; otherwise ``h = -y`` built from the
    martingale-row multipliers ``y`` satisfies ``u(<h, S1-S0>) = `` optimum.
    """
    g = ground(spec, model.space)
    k, d = g.nvar, model.d
    if d == 0:
        return NgdCheck(True, witness=Density(model.space, _clean_density(model.space, g, _any_point(g))))
    rows = g.expectation_rows(model.s1)
    a_eq = np.hstack([rows, -np.eye(d), np.eye(d)])
    c = np.concatenate([np.zeros(k), np.ones(2 * d)])
    lp = g.program(c, a_eq=a_eq, b_eq=model.s0, extra=2 * d, extra_bounds=(0.0, np.inf))
    sol = lpmod.solve(lp)
    if not sol.optimal:
        raise NumericalError(f"no-good-deal LP ended with status {sol.status.value}")
    if sol.objective <= FEAS_TOL * _scale(model):
        z = _clean_density(model.space, g, sol.x[:k])
        return NgdCheck(True, witness=Density(model.space, z))
    y = sol.dual_eq[g.a_eq.shape[0]:]
    h = -y
    value = utility(spec, model.gain(h))
    return NgdCheck(False, good_deal=h, value=float(value))


def _any_point(g):
    sol = lpmod.solve(g.program(np.zeros(g.nvar)))
    if not sol.optimal:
        raise NumericalError("determining set is empty")
    return sol.x


def _clean_density(space, g, v):
    z = np.maximum(g.density(v[: g.nvar]), 0.0)
    return z / (space.probs @ z)


def _martingale_program(g, model, objective_row, sense):
    rows = g.expectation_rows(model.s1) if model.d else np.zeros((0, g.nvar))
    return g.program(sense * objective_row, a_eq=rows, b_eq=model.s0)


def endpoint_solutions(model, spec, f):
    """Solutions of ``min E_z F`` and ``min -E_z F`` over ``D`` and the martingale rows.

    Returns ``(grounded, lo_solution, hi_solution)``.  The multipliers of the
    martingale rows sit at ``dual_eq[m:]`` with ``m`` the grounded row count.
    """
    _check_claim(model, f)
    spec.check_space(model.space)
    g = ground(spec, model.space)
    row = g.expectation_rows(f.values)[0]
    lo = lpmod.solve(_martingale_program(g, model, row, 1.0))
    hi = lpmod.solve(_martingale_program(g, model, row, -1.0))
    for sol in (lo, hi):
        if sol.status is lpmod.Status.FAILED:
            raise NumericalError(f"pricing LP failed: {sol.message}")
        if sol.status is lpmod.Status.UNBOUNDED:
            raise NumericalError("pricing LP unbounded over a bounded determining set")
    return g, lo, hi


def ngd_interval(model, spec, f):
    """Fair price interval ``{E_Q F : Q in D, E_Q S1 = S0}``.

    Both endpoints are attained and carry witnesses.  When no risk-neutral
    measure lies in ``D`` the interval is empty and holds the good deal.
    """
    g, lo, hi = endpoint_solutions(model, spec, f)
    if not (lo.optimal and hi.optimal):
        return PriceInterval.empty_with(check_ngd(model, spec))
    m = g.a_eq.shape[0]
    space = model.space
    z_lo = Density(space, _clean_density(space, g, lo.x))
    z_hi = Density(space, _clean_density(space, g, hi.x))
    v_lo = z_lo.expect(f)
    v_hi = z_hi.expect(f)
    if v_hi < v_lo:
        # both sides agree up to rounding; report a point
        v_lo = v_hi = 0.5 * (v_lo + v_hi)
    return PriceInterval(v_lo, v_hi, True, True, z_lo, z_hi,
                         details={"lo_dual": lo.dual_eq[m:].copy(), "hi_dual": hi.dual_eq[m:].copy()})


# ---------------------------------------------------------------------------
# RAROC
# ---------------------------------------------------------------------------


def check_containment(pd, rd, space, samples=200, seed=0, tol=FEAS_TOL):
    """Sampled test of ``PD`` inside ``RD`` via ``u_PD >= u_RD`` on random P&Ls."""
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        x = Pnl(space, rng.standard_normal(space.n))
        if utility(pd, x) < utility(rd, x) - tol:
            return False
    return True


def raroc(pd, rd, x, check=True):
    """Risk-adjusted return on capital of ``x``.

    Profit is ``u_PD(X)``, risk is ``-u_RD(X)``.  Returns ``+inf`` when
    profit is positive and risk is nonpositive, otherwise the ratio with
    ``0/0 = 0``.
    """
    if check and not check_containment(pd, rd, x.space):
        raise ModelError("the profit-determining set is not contained in the risk-determining set")
    scale = 1e-12 * (1.0 + float(np.abs(x.values).max()))
    profit = utility(pd, x)
    u_rd = utility(rd, x)
    profit = 0.0 if abs(profit) <= scale else profit
    u_rd = 0.0 if abs(u_rd) <= scale else u_rd
    if profit > 0 and u_rd >= 0:
        return np.inf
    if u_rd == 0:
        if profit == 0:
            return 0.0
        return np.copysign(np.inf, profit)
    return profit / (-u_rd)


def raroc_spec(pd, rd, bigR):
    """Determining set ``PD/(1+R) + R RD/(1+R)`` of RAROC-based pricing."""
    bigR = float(bigR)
    if not bigR >= 0:
        raise ModelError(f"the RAROC limit must be nonnegative, got {bigR}")
    if bigR == 0:
        return pd
    if np.isinf(bigR):
        return rd
    return Mixture(((1.0 / (1.0 + bigR), pd), (bigR / (1.0 + bigR), rd)))


def raroc_interval(model, pd, rd, bigR, f, check=True):
    """RAROC-based fair price interval; ``R = 0`` prices with ``PD`` alone."""
    if check and not check_containment(pd, rd, model.space):
        raise ModelError("the profit-determining set is not contained in the risk-determining set")
    return ngd_interval(model, raroc_spec(pd, rd, bigR), f)


# ---------------------------------------------------------------------------
# no-arbitrage
# ---------------------------------------------------------------------------


def find_arbitrage(model):
    """A strategy ``h`` with ``<h, S1-S0> >= 0`` and positive mean, or None."""
    d, n = model.d, model.space.n
    if d == 0:
        return None
    inc = model.increments.T
    c = -(model.space.probs @ inc)
    a_ub = np.vstack([-inc, inc])
    b_ub = np.concatenate([np.zeros(n), np.ones(n)])
    sol = lpmod.linprog(c, a_ub=a_ub, b_ub=b_ub, bounds=(None, None))
    if not sol.optimal:
        raise NumericalError(f"arbitrage LP ended with status {sol.status.value}")
    if -sol.objective > FEAS_TOL:
        return sol.x
    return None


def _positive_margin(model, extra_rows=None, extra_rhs=None):
    """``max t`` subject to ``z >= t`` and the risk-neutral rows; returns (t, z)."""
    n = model.space.n
    a, b = risk_neutral_constraints(model)
    a = np.hstack([a, np.zeros((a.shape[0], 1))])
    if extra_rows is not None:
        a = np.vstack([a, np.hstack([extra_rows, np.zeros((extra_rows.shape[0], 1))])])
        b = np.concatenate([b, extra_rhs])
    a_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    bounds = (np.zeros(n + 1), np.append(np.full(n, np.inf), 1.0))
    sol = lpmod.linprog(c, a, b, a_ub, np.zeros(n), bounds=bounds)
    if sol.status is lpmod.Status.INFEASIBLE:
        return -np.inf, None
    if not sol.optimal:
        raise NumericalError(f"interior LP ended with status {sol.status.value}")
    return -sol.objective, sol.x[:n]


def na_interval(model, f):
    """No-arbitrage price interval of ``F``.

    Endpoints are the extremes of ``E_Q F`` over the closure of the
    equivalent martingale measures; an endpoint is closed only when a
    strictly positive martingale measure attains it.
    """
    _check_claim(model, f)
    space = model.space
    arb = find_arbitrage(model)
    if arb is not None:
        return PriceInterval.empty_with(arb, reason="arbitrage")
    margin, _ = _positive_margin(model)
    if margin <= FEAS_TOL:
        raise NumericalError("no strictly positive martingale measure found although no arbitrage was detected")
    a, b = risk_neutral_constraints(model)
    fp = space.probs * f.values
    ends = []
    for sense in (1.0, -1.0):
        sol = lpmod.linprog(sense * fp, a, b, bounds=(0.0, None))
        if not sol.optimal:
            raise NumericalError(f"no-arbitrage pricing LP ended with status {sol.status.value}")
        value = float(fp @ sol.x)
        t, z = _positive_margin(model, fp[None, :], [value])
        closed = t > FEAS_TOL
        ends.append((value, closed, Density(space, z / (space.probs @ z)) if closed else None))
    (lo, lo_c, lo_w), (hi, hi_c, hi_w) = ends
    if hi < lo:
        lo = hi = 0.5 * (lo + hi)
    return PriceInterval(lo, hi, lo_c, hi_c, lo_w, hi_w, details={"margin": margin})


# ---------------------------------------------------------------------------
# valuation measures
# ---------------------------------------------------------------------------


_KINDS = ("exponential", "power", "log")


@dataclass(frozen=True, eq=False)
class AgentSpec:
    """A market participant: subjective density, utility kind and wealth.

    ``param`` is the risk aversion ``alpha > 0`` for exponential utility and
    the exponent ``eta`` in ``(0, 1)`` for power utility ``w**eta / eta``.
    """

    subjective: Density
    kind: str
    wealth: Pnl
    param: float = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise StructuralError(f"utility kind must be one of {_KINDS}")
        if self.wealth.space != self.subjective.space:
            raise StructuralError("wealth and subjective measure live on different spaces")
        if self.kind == "exponential" and not (self.param is not None and self.param > 0):
            raise ModelError("exponential utility needs alpha > 0")
        if self.kind == "power" and not (self.param is not None and 0 < self.param < 1):
            raise ModelError("power utility needs eta in (0, 1)")
        if self.kind in ("power", "log") and np.any(self.wealth.values <= 0):
            raise ModelError(f"{self.kind} utility needs strictly positive wealth")

    def marginal_utility(self):
        w = self.wealth.values
        if self.kind == "exponential":
            # scaled by a constant, which the normalisation removes
            return np.exp(-self.param * (w - w.min()))
        if self.kind == "power":
            return w ** (self.param - 1.0)
        return 1.0 / w

    def valuation_density(self):
        """Density of ``c u'(W) P_n`` with respect to the reference measure."""
        raw = self.marginal_utility() * self.subjective.z
        space = self.subjective.space
        return Density(space, raw / (space.probs @ raw))


def valuation_measures(agents):
    """Polytope spanned by the valuation measures of the participants."""
    agents = list(agents)
    if not agents:
        raise StructuralError("at least one agent is required")
    return Polytope(tuple(a.valuation_density() for a in agents))


def require_ngd(interval):
    """Raise :class:`NgdViolation` if ``interval`` is empty."""
    if interval.empty:
        raise NgdViolation("no risk-neutral measure in the determining set", interval.certificate)
    return interval


__all__ = [
    "AgentSpec", "MarketModel", "NgdCheck", "PriceInterval", "RiskSpec", "check_containment",
    "check_ngd", "endpoint_solutions", "find_arbitrage", "na_interval", "ngd_interval", "raroc",
    "raroc_interval", "raroc_spec", "require_ngd", "risk_neutral_constraints",
    "valuation_measures",
]
