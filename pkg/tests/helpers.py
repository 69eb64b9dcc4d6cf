"""Random instance generators shared by the test modules."""

import numpy as np

from cohdeals import (ConvHull, Mixture, Polytope, ScenarioSpace, TailVaR, WeightedVaR,
                      extreme_measure)
from cohdeals.linprog import LinearProgram, dual_objective
from cohdeals.markets import MarketModel

FAMILIES = ("tail_var", "weighted_var", "polytope", "mixture", "conv_hull")


def random_space(rng, n=None, max_n=50):
    n = n or int(rng.integers(2, max_n + 1))
    return ScenarioSpace.from_weights(rng.uniform(0.05, 1.0, n))


def random_density(rng, space):
    z = rng.exponential(size=space.n)
    return space.density(z / (space.probs @ z))


def random_tail(rng):
    # keep a few exact corner orders in the mix
    return TailVaR(float(rng.choice([0.0, 1.0, rng.uniform(0.01, 1.0)], p=[0.1, 0.1, 0.8])))


def random_weighted(rng):
    k = int(rng.integers(1, 5))
    lams = rng.uniform(0.01, 1.0, k)
    w = rng.dirichlet(np.ones(k))
    w[-1] = 1.0 - w[:-1].sum()
    return WeightedVaR(tuple(zip(lams, w)))


def random_polytope(rng, space):
    k = int(rng.integers(1, 5))
    return Polytope(tuple(random_density(rng, space) for _ in range(k)))


def random_spec(rng, space, family=None):
    family = family or FAMILIES[int(rng.integers(0, len(FAMILIES)))]
    if family == "tail_var":
        return random_tail(rng)
    if family == "weighted_var":
        return random_weighted(rng)
    if family == "polytope":
        return random_polytope(rng, space)
    simple = (random_tail(rng), random_weighted(rng), random_polytope(rng, space))
    k = int(rng.integers(2, 4))
    picks = [simple[int(i)] for i in rng.integers(0, 3, k)]
    if family == "mixture":
        w = rng.dirichlet(np.ones(k))
        w[-1] = 1.0 - w[:-1].sum()
        return Mixture(tuple(zip(w, picks)))
    return ConvHull(tuple(picks))


def random_pnl(rng, space, scale=1.0, ties=False):
    if ties:
        return space.pnl(rng.integers(-3, 4, space.n).astype(float) * scale)
    return space.pnl(rng.normal(scale=scale, size=space.n))


def random_market(rng, spec=None, n=None, d=None):
    """A market that satisfies NGD for ``spec`` (defaults to a random Tail V@R).

    Prices are taken as expectations under a random member of the set, so
    the model is consistent by construction.
    """
    n = n or int(rng.integers(3, 13))
    d = int(rng.integers(1, 3)) if d is None else d
    space = ScenarioSpace.uniform(n)
    spec = spec or TailVaR(float(rng.uniform(0.2, 0.9)))
    s1 = rng.uniform(0.5, 1.5, size=(d, n))
    z = extreme_measure(spec, space.pnl(rng.normal(size=n))).density
    # mix with P to land in the relative interior
    w = 0.5 * (z.z + 1.0)
    s0 = s1 @ (space.probs * w)
    return MarketModel(space, s0, s1), spec


def random_lp(rng, n=None, boxed=True):
    n = n or int(rng.integers(1, 31))
    m_eq = int(rng.integers(0, max(1, n // 2) + 1))
    m_ub = int(rng.integers(0, n + 1))
    x0 = rng.uniform(0.1, 1.0, n)
    a_eq = rng.normal(size=(m_eq, n))
    a_ub = rng.normal(size=(m_ub, n))
    b_eq = a_eq @ x0
    b_ub = a_ub @ x0 + rng.uniform(0, 1, m_ub)
    c = rng.normal(size=n)
    ub = rng.uniform(1.0, 3.0, n) if boxed else np.full(n, np.inf)
    return LinearProgram(c, a_eq, b_eq, a_ub, b_ub, (np.zeros(n), ub))


def kkt_gaps(lp, sol):
    """Primal infeasibility, dual sign violation, complementarity and duality gap."""
    x = sol.x
    primal = max(np.abs(lp.a_eq @ x - lp.b_eq).max(initial=0.0),
                 np.maximum(lp.a_ub @ x - lp.b_ub, 0).max(initial=0.0),
                 np.maximum(lp.lb - x, 0).max(), np.maximum(x - lp.ub, 0).max())
    rc = sol.reduced_costs
    # a positive reduced cost must sit at the lower bound, a negative one at the upper
    dual = max(np.maximum(rc, 0)[x > lp.lb + 1e-7].max(initial=0.0),
               np.maximum(-rc, 0)[x < lp.ub - 1e-7].max(initial=0.0))
    slack = lp.b_ub - lp.a_ub @ x
    # products of multipliers and slacks, including the variable bounds
    with np.errstate(invalid="ignore"):
        at_lb = np.where(rc > 0, rc * (x - lp.lb), 0.0)
        at_ub = np.where(rc < 0, -rc * (lp.ub - x), 0.0)
    comp = max(np.abs(sol.dual_ub * slack).max(initial=0.0),
               np.nan_to_num(np.abs(at_lb)).max(initial=0.0),
               np.nan_to_num(np.abs(at_ub)).max(initial=0.0))
    gap = abs(sol.objective - dual_objective(lp, sol.dual_eq, sol.dual_ub, rc))
    return primal, dual, comp, gap
