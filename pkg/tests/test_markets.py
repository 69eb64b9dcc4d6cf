import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog as highs

from cohdeals import (ModelError, NgdViolation, ScenarioSpace, StructuralError, TailVaR, contains,
                      utility)
from cohdeals.markets import (AgentSpec, MarketModel, check_containment, check_ngd, find_arbitrage,
                              na_interval, ngd_interval, raroc, raroc_interval, raroc_spec,
                              require_ngd, risk_neutral_constraints, valuation_measures)

from helpers import random_market

S3 = ScenarioSpace.uniform(3)
CALL = S3.pnl([0, 0, 0.5])
REF = MarketModel(S3, [1.0], [[0.5, 1.0, 1.5]])


def tail_feasible(model, lam):
    """Independent feasibility test for Tail V@R plus martingale rows."""
    p = model.space.probs
    a = np.vstack([p, model.s1 * p])
    b = np.concatenate([[1.0], model.s0])
    ub = np.inf if lam == 0 else 1.0 / lam
    res = highs(np.zeros(model.space.n), A_eq=a, b_eq=b, bounds=[(0, ub)] * model.space.n,
                method="highs")
    return res.status == 0


def tail_price_range(model, lam, f):
    p = model.space.probs
    a = np.vstack([p, model.s1 * p])
    b = np.concatenate([[1.0], model.s0])
    bounds = [(0, 1.0 / lam)] * model.space.n
    lo = highs(p * f.values, A_eq=a, b_eq=b, bounds=bounds, method="highs").fun
    hi = -highs(-p * f.values, A_eq=a, b_eq=b, bounds=bounds, method="highs").fun
    return lo, hi


class TestConstraints:
    def test_no_assets(self):
        a, b = risk_neutral_constraints(MarketModel(S3, [], np.zeros((0, 3))))
        assert a.shape == (1, 3) and np.allclose(b, [1])

    def test_one_asset_row(self):
        a, b = risk_neutral_constraints(REF)
        assert np.allclose(a[1] * 3, [0.5, 1, 1.5]) and b[1] == 1

    def test_duplicate_assets(self):
        a, _ = risk_neutral_constraints(MarketModel(S3, [1, 1], [[0.5, 1, 1.5]] * 2))
        assert np.allclose(a[1], a[2])

    def test_shape_errors(self):
        with pytest.raises(StructuralError):
            MarketModel(S3, [1.0, 2.0], [[0.5, 1.0, 1.5]])
        with pytest.raises(StructuralError):
            ngd_interval(REF, TailVaR(0.5), ScenarioSpace.uniform(2).pnl([1, 2]))


class TestNgd:
    def test_reference_model_holds(self):
        res = check_ngd(REF, TailVaR(2 / 3))
        assert res.holds
        q = res.witness.measure
        # witnesses have the form (t, 1-2t, t) with t in [1/4, 1/2]
        assert q[0] == pytest.approx(q[2], abs=1e-9)
        assert 0.25 - 1e-9 <= q[0] <= 0.5 + 1e-9

    def test_dominated_price_gives_short(self):
        model = MarketModel(S3, [2.0], [[0.5, 1.0, 1.5]])
        res = check_ngd(model, TailVaR(0.5))
        assert not res.holds
        assert res.good_deal[0] < 0
        assert utility(TailVaR(0.5), model.gain(res.good_deal)) > 0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_agrees_with_independent_feasibility(self, seed):
        rng = np.random.default_rng(seed)
        n, d = int(rng.integers(3, 10)), int(rng.integers(1, 4))
        space = ScenarioSpace.uniform(n)
        s1 = rng.uniform(0.5, 1.5, size=(d, n))
        s0 = s1.mean(axis=1) + rng.normal(scale=0.15, size=d)
        model = MarketModel(space, s0, s1)
        lam = float(rng.uniform(0.1, 0.9))
        res = check_ngd(model, TailVaR(lam))
        assert res.holds == tail_feasible(model, lam)
        if d == 1:
            x = space.pnl(s1[0])
            inside = utility(TailVaR(lam), x) <= s0[0] <= -utility(TailVaR(lam), -x)
            assert res.holds == inside
        if not res.holds:
            assert utility(TailVaR(lam), model.gain(res.good_deal)) > 0
            assert res.value == pytest.approx(utility(TailVaR(lam), model.gain(res.good_deal)))


class TestNgdInterval:
    def test_reference_call(self):
        iv = ngd_interval(REF, TailVaR(2 / 3), CALL)
        assert iv.lo == pytest.approx(0.125, abs=1e-9)
        assert iv.hi == pytest.approx(0.25, abs=1e-9)
        assert iv.lo_closed and iv.hi_closed
        assert np.allclose(iv.lo_witness.measure, [0.25, 0.5, 0.25], atol=1e-9)
        assert np.allclose(iv.hi_witness.measure, [0.5, 0.0, 0.5], atol=1e-9)

    def test_replicable_claim_is_a_point(self):
        f = S3.pnl(0.3 + 2.0 * np.array([0.5, 1.0, 1.5]))
        iv = ngd_interval(REF, TailVaR(0.4), f)
        assert iv.lo == pytest.approx(2.3, abs=1e-9) and iv.hi == pytest.approx(2.3, abs=1e-9)

    def test_reference_measure_only(self):
        iv = ngd_interval(REF, TailVaR(1), CALL)
        assert iv.lo == pytest.approx(CALL.mean()) and iv.hi == pytest.approx(CALL.mean())
        skew = MarketModel(S3, [1.1], [[0.5, 1.0, 1.5]])
        bad = ngd_interval(skew, TailVaR(1), CALL)
        assert bad.empty and not bad.certificate.holds
        with pytest.raises(NgdViolation):
            require_ngd(bad)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_witnesses_and_independent_endpoints(self, seed):
        rng = np.random.default_rng(seed)
        model, spec = random_market(rng)
        f = model.space.pnl(rng.normal(size=model.space.n))
        iv = ngd_interval(model, spec, f)
        lo, hi = tail_price_range(model, spec.lam, f)
        assert iv.lo == pytest.approx(lo, abs=1e-8) and iv.hi == pytest.approx(hi, abs=1e-8)
        for w, v in ((iv.lo_witness, iv.lo), (iv.hi_witness, iv.hi)):
            assert contains(spec, w)
            assert np.allclose(model.s1 @ w.measure, model.s0, atol=1e-9)
            assert w.expect(f) == pytest.approx(v, abs=1e-8)


class TestRaroc:
    def test_conventions(self):
        s = ScenarioSpace.uniform(2)
        pd, rd = TailVaR(1), TailVaR(0.5)
        assert raroc(pd, rd, s.pnl([0, 0])) == 0
        assert raroc(pd, rd, s.pnl([2, 2])) == np.inf
        assert raroc(pd, rd, s.pnl([-1, 3])) == pytest.approx(1.0)

    def test_containment_enforced(self):
        with pytest.raises(ModelError):
            raroc(TailVaR(0.2), TailVaR(0.8), S3.pnl([1, 2, 3]))
        assert check_containment(TailVaR(0.8), TailVaR(0.2), S3)
        with pytest.raises(ModelError):
            raroc_spec(TailVaR(1), TailVaR(0.5), -1)

    def test_reference_interval(self):
        iv = raroc_interval(REF, TailVaR(1), TailVaR(2 / 3), 1.0, CALL)
        assert iv.lo == pytest.approx(7 / 48, abs=1e-9)
        assert iv.hi == pytest.approx(5 / 24, abs=1e-9)

    def test_zero_limit_uses_profit_set(self):
        iv = raroc_interval(REF, TailVaR(1), TailVaR(2 / 3), 0.0, CALL)
        assert iv.lo == pytest.approx(CALL.mean()) and iv.hi == pytest.approx(CALL.mean())

    def test_large_limit_approaches_utility_interval(self):
        big = raroc_interval(REF, TailVaR(1), TailVaR(2 / 3), 1e6, CALL)
        assert big.lo == pytest.approx(0.125, abs=1e-6) and big.hi == pytest.approx(0.25, abs=1e-6)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_nesting(self, seed):
        rng = np.random.default_rng(seed)
        model, rd = random_market(rng)
        f = model.space.pnl(rng.normal(size=model.space.n))
        tol = 1e-9
        ngd = ngd_interval(model, rd, f)
        na = na_interval(model, f)
        assert na.contains_interval(ngd, tol)
        prev = None
        for bigR in (0.25, 1.0, 4.0):
            iv = raroc_interval(model, TailVaR(1), rd, bigR, f)
            assert ngd.contains_interval(iv, tol)
            if prev is not None:
                assert iv.contains_interval(prev, tol)
            prev = iv


class TestNoArbitrage:
    def test_binary_claim_without_assets(self):
        s = ScenarioSpace.uniform(2)
        iv = na_interval(MarketModel(s, [], np.zeros((0, 2))), s.pnl([0, 1000]))
        assert (iv.lo, iv.hi) == pytest.approx((0, 1000))
        assert not iv.lo_closed and not iv.hi_closed
        assert 500 in iv and 0 not in iv and 1000 not in iv

    def test_reference_call_open(self):
        iv = na_interval(REF, CALL)
        assert (iv.lo, iv.hi) == pytest.approx((0, 0.25), abs=1e-9)
        assert not iv.lo_closed and not iv.hi_closed

    def test_replicable_is_closed_point(self):
        iv = na_interval(REF, S3.pnl([0.5, 1.0, 1.5]))
        assert iv.lo == pytest.approx(1) and iv.hi == pytest.approx(1)
        assert iv.lo_closed and iv.hi_closed
        assert iv.lo_witness.z.min() > 0

    def test_arbitrage_detected(self):
        model = MarketModel(S3, [0.4], [[0.5, 1.0, 1.5]])
        h = find_arbitrage(model)
        assert h is not None and h[0] > 0
        assert na_interval(model, CALL).empty


class TestValuation:
    def test_exponential_agent(self):
        s = ScenarioSpace.uniform(2)
        agent = AgentSpec(s.density([1, 1]), "exponential", s.pnl([0, np.log(2)]), 1.0)
        assert np.allclose(agent.valuation_density().measure, [2 / 3, 1 / 3])

    def test_nearly_neutral_agent(self):
        agent = AgentSpec(S3.density([1, 1, 1]), "exponential", S3.pnl([0, 5, -3]), 1e-8)
        assert np.allclose(agent.valuation_density().z, 1, atol=1e-6)

    def test_two_agents_polytope(self):
        a = AgentSpec(S3.density([1, 1, 1]), "log", S3.pnl([1, 2, 4]))
        b = AgentSpec(S3.density([1.5, 1, 0.5]), "power", S3.pnl([1, 1, 2]), 0.5)
        poly = valuation_measures([a, b])
        x = S3.pnl([3, -1, 2])
        expected = min(a.valuation_density().expect(x), b.valuation_density().expect(x))
        assert utility(poly, x) == pytest.approx(expected)

    def test_parameter_checks(self):
        with pytest.raises(ModelError):
            AgentSpec(S3.density([1, 1, 1]), "power", S3.pnl([1, 2, 3]), 1.5)
        with pytest.raises(ModelError):
            AgentSpec(S3.density([1, 1, 1]), "log", S3.pnl([0, 2, 3]))
