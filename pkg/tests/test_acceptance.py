"""Acceptance criteria at their stated tolerances.

Run with ``pytest tests/test_acceptance.py``; the summary lists one
PASS/FAIL line per criterion together with the measured quantities.
"""

import time

import numpy as np
import pytest

from cohdeals import ScenarioSpace, TailVaR, contains, utility
from cohdeals.gaussian import (GaussianMarket, discretize_market, gamma_of, gaussian_allocate,
                               gaussian_contribution, gaussian_na_interval, gaussian_ngd_interval,
                               product_grid)
from cohdeals.geometry import allocate, contribution
from cohdeals.hedging import (ContinuousClaimSpec, Payoff, discretize, tail_closed_form,
                              hedge_residuals, superhedge, upper_lower)
from cohdeals.linprog import solve
from cohdeals.markets import MarketModel, na_interval, ngd_interval, raroc_interval
from cohdeals.scenario import tail_mean
from cohdeals.txcost import (binomial_tree, convergence_sweep, frictionless_interval,
                             geometric_lambdas, txcost_interval)

from helpers import FAMILIES, kkt_gaps, random_lp, random_market, random_pnl, random_space, random_spec

S3 = ScenarioSpace.uniform(3)
REF = MarketModel(S3, [1.0], [[0.5, 1.0, 1.5]])
CALL = S3.pnl([0, 0, 0.5])
G_HALF = gamma_of(TailVaR(0.5))


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


@pytest.mark.criterion(1, "coherence axioms, 500 instances per family")
def test_coherence_axioms(measured):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for family in FAMILIES:
        for _ in range(500):
            space = random_space(rng, max_n=50)
            spec = random_spec(rng, space, family)
            x, y = random_pnl(rng, space), random_pnl(rng, space)
            u = lambda v: utility(spec, v)  # noqa: E731
            ux = u(x)
            worst = max(worst, u(x) + u(y) - u(x + y))
            worst = max(worst, ux - u(x + space.pnl(rng.uniform(0, 1, space.n))))
            c = float(rng.uniform(0, 10))
            worst = max(worst, abs(u(x * c) - c * ux))
            m = float(rng.normal(scale=5))
            worst = max(worst, abs(u(x + m) - ux - m))
    elapsed = time.perf_counter() - start
    measured.update(worst_violation=worst, seconds=elapsed)
    assert worst <= 1e-9
    assert elapsed < 30


@pytest.mark.criterion(2, "sorted-tail vs LP (500) and weighted identity (200)")
def test_oracle_equivalence(measured):
    rng = np.random.default_rng(202)
    tail_gap = 0.0
    for k in range(500):
        space = random_space(rng)
        lam = float(rng.uniform(0.01, 1.0))
        x = random_pnl(rng, space, ties=bool(k % 4 == 0))
        tail_gap = max(tail_gap, abs(tail_mean(x.values, space.probs, lam)
                                     - utility(TailVaR(lam), x, method="lp")))
    mix_gap = 0.0
    for _ in range(200):
        space = random_space(rng)
        spec = random_spec(rng, space, "weighted_var")
        x = random_pnl(rng, space)
        atoms = sum(a * tail_mean(x.values, space.probs, lam) for lam, a in spec.atoms)
        mix_gap = max(mix_gap, abs(utility(spec, x, method="lp") - atoms))
    measured.update(tail_gap=tail_gap, weighted_gap=mix_gap)
    assert tail_gap <= 1e-9
    assert mix_gap <= 1e-9


@pytest.mark.criterion(3, "capital allocation and Gaussian closed form")
def test_capital_allocation(measured):
    rng = np.random.default_rng(303)
    total_gap = positive_gap = any_gap = 0.0
    for _ in range(200):
        space = random_space(rng, max_n=40)
        spec = random_spec(rng, space)
        d = int(rng.integers(1, 5))
        xs = [random_pnl(rng, space) for _ in range(d)]
        vals = np.array([x.values for x in xs])
        alloc = allocate(spec, xs).allocation
        total_gap = max(total_gap, abs(alloc.sum() - utility(spec, space.pnl(vals.sum(0)))))
        for h in np.abs(rng.normal(size=(64, d))):
            positive_gap = max(positive_gap, utility(spec, space.pnl(h @ vals)) - h @ alloc)
        for h in rng.normal(size=(64, d)):
            any_gap = max(any_gap, utility(spec, space.pnl(h @ vals)) - h @ alloc)

    cov = np.array([[1.0, 0.3], [0.3, 0.5]])
    a = np.array([0.2, -0.1])
    w, v = np.linalg.eigh(cov)
    xs = a[:, None] + (v * np.sqrt(w)) @ product_grid(100, 2)
    space = ScenarioSpace.uniform(xs.shape[1])
    lp = allocate(TailVaR(0.5), [space.pnl(x) for x in xs]).allocation
    closed = gaussian_allocate(a, cov, G_HALF).allocation
    gauss = max(rel_err(lp[i], closed[i]) for i in range(2))
    measured.update(total_gap=total_gap, positive_gap=positive_gap, any_gap=any_gap, gaussian_rel=gauss)
    assert total_gap <= 1e-8 and positive_gap <= 1e-8 and any_gap <= 1e-8
    assert gauss <= 0.02


@pytest.mark.criterion(4, "risk contribution limit and Gaussian identity")
def test_risk_contribution(measured):
    rng = np.random.default_rng(404)
    eps = 1e-4
    gap = 0.0
    for k in range(100):
        space = random_space(rng, max_n=50)
        spec = random_spec(rng, space, "tail_var" if k % 2 else "weighted_var")
        if isinstance(spec, TailVaR) and spec.lam in (0.0, 1.0):
            spec = TailVaR(0.37)
        x, y = random_pnl(rng, space), random_pnl(rng, space)
        fd = (utility(spec, y + x * eps) - utility(spec, y)) / eps
        gap = max(gap, abs(fd - contribution(spec, x, y)))

    ident = 0.0
    for corr in np.linspace(-1, 1, 41):
        for sx, sy in ((1.0, 1.0), (0.3, 2.0), (5.0, 0.7)):
            uc = gaussian_contribution(0.0, 0.0, corr * sx * sy, sx ** 2, sy ** 2, G_HALF)
            ident = max(ident, abs(uc / (-G_HALF * sx) - corr))

    xi = product_grid(100, 2)
    space = ScenarioSpace.uniform(xi.shape[1])
    y = space.pnl(xi[0])
    x = space.pnl(0.5 * xi[0] + np.sqrt(0.75) * xi[1])
    disc = rel_err(contribution(TailVaR(0.5), x, y),
                   gaussian_contribution(0, 0, 0.5, 1, 1, G_HALF))
    measured.update(fd_gap=gap, identity=ident, gaussian_rel=disc)
    assert gap < 1e-3
    assert ident <= 1e-12
    assert disc <= 0.02


@pytest.mark.criterion(5, "pricing intervals, nesting and witnesses")
def test_pricing(measured):
    iv = ngd_interval(REF, TailVaR(2 / 3), CALL)
    rv = raroc_interval(REF, TailVaR(1.0), TailVaR(2 / 3), 1.0, CALL)
    exact = max(abs(iv.lo - 0.125), abs(iv.hi - 0.25), abs(rv.lo - 7 / 48), abs(rv.hi - 5 / 24))

    rng = np.random.default_rng(505)
    nest_ok, wit_feas, wit_val = True, 0.0, 0.0
    for _ in range(200):
        model, rd = random_market(rng)
        f = model.space.pnl(rng.normal(size=model.space.n))
        ngd = ngd_interval(model, rd, f)
        na = na_interval(model, f)
        nest_ok &= na.contains_interval(ngd, 1e-9)
        for bigR in (0.25, 1.0, 4.0):
            nest_ok &= ngd.contains_interval(raroc_interval(model, TailVaR(1.0), rd, bigR, f), 1e-9)
        for w, v in ((ngd.lo_witness, ngd.lo), (ngd.hi_witness, ngd.hi)):
            wit_feas = max(wit_feas, float(np.abs(model.s1 @ w.measure - model.s0).max()),
                           float(np.maximum(w.z - 1.0 / rd.lam, 0).max()))
            wit_val = max(wit_val, abs(w.expect(f) - v))
    measured.update(exact_gap=exact, nested=nest_ok, witness_feas=wit_feas, witness_value=wit_val)
    assert exact <= 1e-9
    assert nest_ok
    assert wit_feas <= 1e-9 and wit_val <= 1e-8


@pytest.mark.criterion(6, "hedge certificates, strategy range and closed form")
def test_hedging(measured):
    rng = np.random.default_rng(606)
    lo_cert, hi_cert = np.inf, -np.inf
    for _ in range(200):
        model, spec = random_market(rng)
        f = model.space.pnl(rng.normal(size=model.space.n))
        rep = superhedge(model, spec, f, ranges=False)
        for r in hedge_residuals(model, spec, f, rep):
            lo_cert, hi_cert = min(lo_cert, r), max(hi_cert, r)

    rep = superhedge(REF, TailVaR(2 / 3), CALL)
    rng_gap = max(abs(rep.super_h_range[0] - 0.0), abs(rep.super_h_range[1] - 1.0))

    sd = 0.25
    s0 = float(np.exp(sd ** 2 / 2))
    claim = ContinuousClaimSpec.lognormal(0.0, sd, 0.5, s0, Payoff.call(1.0))
    closed = tail_closed_form(claim)
    model, spec, f = discretize(claim, 10_000)
    up, down = upper_lower(model, spec, f)
    cf_gap = max(rel_err(up, closed.upper), rel_err(down, closed.lower))

    ident = tail_closed_form(ContinuousClaimSpec.lognormal(0.0, sd, 0.5, s0, Payoff.linear(1.0)))
    lin = max(abs(ident.upper - s0), abs(ident.lower - s0))
    measured.update(cert_min=lo_cert, cert_max=hi_cert, range_gap=rng_gap, closed_form_rel=cf_gap,
                    identity_gap=lin)
    assert -1e-7 <= lo_cert and hi_cert <= 1e-6
    assert rng_gap <= 1e-7
    assert cf_gap <= 0.01
    assert lin <= 1e-8


@pytest.mark.criterion(7, "Gaussian pricing vs discretised LP and degenerate collapse")
def test_gaussian_pricing(measured):
    mkt = GaussianMarket([1.0], [[0.04]], [1.03], 0.2, [0.006], 0.0225, G_HALF)
    model, f = discretize_market(mkt, 100)
    worst = 0.0
    pairs = [(gaussian_ngd_interval(mkt), ngd_interval(model, TailVaR(0.5), f))]
    for bigR in (0.5, 1.0, 3.0):
        pairs.append((gaussian_ngd_interval(mkt, bigR),
                      raroc_interval(model, TailVaR(1.0), TailVaR(0.5), bigR, f)))
    for closed, lp in pairs:
        worst = max(worst, rel_err(lp.lo, closed.lo), rel_err(lp.hi, closed.hi))

    flat = GaussianMarket([1.0], [[0.04]], [1.03], 0.2, [0.006], 0.15 * 0.006, G_HALF)
    point = 0.2 + 0.15 * 0.03
    fmodel, ff = discretize_market(flat, 100)
    intervals = [gaussian_ngd_interval(flat), gaussian_ngd_interval(flat, 1.0),
                 gaussian_na_interval(flat), ngd_interval(fmodel, TailVaR(0.5), ff),
                 raroc_interval(fmodel, TailVaR(1.0), TailVaR(0.5), 1.0, ff)]
    collapse = max(max(abs(iv.lo - point), abs(iv.hi - point)) for iv in intervals)
    measured.update(max_rel=worst, collapse=collapse)
    assert worst <= 0.02
    assert collapse <= 1e-9


@pytest.mark.criterion(8, "transaction-cost sweep on the binomial tree")
def test_transaction_costs(measured):
    tree = binomial_tree(1.0, 1.2, 0.8, 0.6, 3, lambda s: max(s - 1.0, 0.0), TailVaR(0.5))
    start = time.perf_counter()
    res = convergence_sweep(tree, geometric_lambdas(0.5, 12))
    elapsed = time.perf_counter() - start
    fr = frictionless_interval(tree)
    _, lo12, hi12 = res.rows[-1]
    conv = max(abs(lo12 - fr.lo), abs(hi12 - fr.hi))
    zero = txcost_interval(tree, 0.0)
    base = max(abs(zero.lo - fr.lo), abs(zero.hi - fr.hi))
    measured.update(nested=res.nested, gap_2_12=conv, zero_gap=base, seconds=elapsed)
    assert res.nested
    assert conv <= 1e-3
    assert base <= 1e-8
    assert elapsed < 60


@pytest.mark.criterion(9, "LP duality and complementary slackness, 1000 programs")
def test_lp_engine(measured):
    rng = np.random.default_rng(909)
    gap = comp = 0.0
    for _ in range(1000):
        lp = random_lp(rng)
        sol = solve(lp)
        assert sol.optimal
        _, _, c, g = kkt_gaps(lp, sol)
        gap, comp = max(gap, g), max(comp, c)
    measured.update(duality_gap=gap, complementarity=comp)
    assert gap <= 1e-8
    assert comp <= 1e-8


def test_witnesses_are_members():
    # the witnesses above are checked against the Tail V@R cap; check the generic test too
    iv = ngd_interval(REF, TailVaR(2 / 3), CALL)
    assert contains(TailVaR(2 / 3), iv.lo_witness) and contains(TailVaR(2 / 3), iv.hi_witness)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
