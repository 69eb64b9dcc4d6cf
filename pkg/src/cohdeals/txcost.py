"""Event-tree pricing with proportional transaction costs.

A measure ``Q`` on the leaves is risk-neutral when some process ``M`` in
the bid-ask band is a ``Q``-martingale.  With node masses ``q`` and
``n = q * M`` the condition is linear:

* children masses add up to the parent mass and children ``n`` add up to
  the parent ``n``;
* ``bid * q <= n <= ask * q`` at every node.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import linprog as lpmod
from ._tol import FEAS_TOL
from .errors import NumericalError, StructuralError
from .markets import MarketModel, PriceInterval, ngd_interval
from .scenario import Density, ScenarioSpace, TailVaR, ground


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Finite event tree with per-node ask prices and leaf payoffs.

    ``parent[j]`` is ``-1`` for the root; ``prob[j]`` is the conditional
    probability of node ``j`` given its parent (ignored at the root);
    ``ask`` is ``n_nodes x d``.  ``bid`` defaults to ``ask``; in proportional
    mode it is ``(1 - lam * cost_weights) * ask``.
    """

    parent: tuple
    prob: np.ndarray
    ask: np.ndarray
    payoff: dict
    spec: object = None
    bid: np.ndarray = None
    cost_weights: np.ndarray = None

    def __post_init__(self):
        parent = tuple(-1 if p is None else int(p) for p in self.parent)
        n = len(parent)
        roots = [j for j, p in enumerate(parent) if p == -1]
        if len(roots) != 1:
            raise StructuralError("a tree needs exactly one root")
        ask = np.asarray(self.ask, dtype=float)
        if ask.ndim == 1:
            ask = ask[:, None]
        if ask.shape[0] != n:
            raise StructuralError("one ask row per node is required")
        prob = np.asarray(self.prob, dtype=float)
        if prob.shape != (n,):
            raise StructuralError("one branch probability per node is required")
        children = [[] for _ in range(n)]
        for j, p in enumerate(parent):
            if p != -1:
                if not 0 <= p < n:
                    raise StructuralError(f"node {j} has an invalid parent {p}")
                children[p].append(j)
        order, stack = [], [roots[0]]
        while stack:
            j = stack.pop()
            order.append(j)
            stack.extend(reversed(children[j]))
        if len(order) != n:
            raise StructuralError("the tree is not connected")
        for j in range(n):
            if children[j]:
                kids = prob[children[j]]
                if np.any(kids <= 0):
                    raise StructuralError(f"children of node {j} need positive probabilities")
                if abs(kids.sum() - 1.0) > 1e-9:
                    raise StructuralError(f"branch probabilities below node {j} do not sum to 1")
        leaves = [j for j in order if not children[j]]
        mass = np.zeros(n)
        mass[roots[0]] = 1.0
        for j in order:
            for c in children[j]:
                mass[c] = mass[j] * prob[c]
        payoff = {int(k): float(v) for k, v in dict(self.payoff).items()}
        if set(payoff) != set(leaves):
            raise StructuralError("payoffs must be given exactly at the leaves")
        bid = ask.copy() if self.bid is None else np.asarray(self.bid, dtype=float).reshape(ask.shape)
        if np.any(bid > ask + 1e-12):
            raise StructuralError("bid exceeds ask")
        weights = (np.ones(ask.shape[1]) if self.cost_weights is None
                   else np.asarray(self.cost_weights, dtype=float).ravel())
        if weights.size != ask.shape[1] or np.any(weights < 0):
            raise StructuralError("one nonnegative cost weight per asset is required")
        spec = TailVaR(1.0) if self.spec is None else self.spec
        for name, val in (("parent", parent), ("prob", prob), ("ask", ask), ("bid", bid),
                          ("payoff", payoff), ("cost_weights", weights), ("spec", spec)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "root", roots[0])
        object.__setattr__(self, "children", tuple(tuple(c) for c in children))
        object.__setattr__(self, "order", tuple(order))
        object.__setattr__(self, "leaves", tuple(leaves))
        object.__setattr__(self, "mass", mass)
        leaf_p = mass[leaves]
        object.__setattr__(self, "space", ScenarioSpace(leaf_p / leaf_p.sum(), tuple(leaves)))

    @property
    def n_nodes(self):
        return len(self.parent)

    @property
    def d(self):
        return self.ask.shape[1]

    def claim(self):
        return self.space.pnl([self.payoff[j] for j in self.leaves])

    def band(self, lam=None):
        """``(bid, ask)``; proportional costs ``lam`` override the stored bid."""
        if lam is None:
            return self.bid, self.ask
        lam = float(lam)
        if not 0.0 <= lam < 1.0:
            raise StructuralError(f"proportional cost must lie in [0, 1), got {lam}")
        return (1.0 - lam * self.cost_weights) * self.ask, self.ask

    @classmethod
    def from_dict(cls, obj, spec=None):
        from .scenario import spec_from_dict

        try:
            nodes = obj["nodes"]
            parent = [nd.get("parent") for nd in nodes]
            prob = [1.0 if nd.get("parent") is None else nd["prob"] for nd in nodes]
            ask = [np.atleast_1d(nd["ask"]).tolist() for nd in nodes]
            bid = None
            if any("bid" in nd for nd in nodes):
                bid = [np.atleast_1d(nd.get("bid", nd["ask"])).tolist() for nd in nodes]
            payoff = {j: nd["payoff"] for j, nd in enumerate(nodes) if "payoff" in nd}
        except (KeyError, TypeError) as exc:
            raise StructuralError(f"malformed tree: {exc}") from exc
        tree = cls(parent, prob, ask, payoff, None, bid, obj.get("cost_weights"))
        if spec is None and "risk" in obj:
            spec = spec_from_dict(obj["risk"], tree.space)
        if spec is not None:
            tree = replace(tree, spec=spec)
        return tree

    def to_dict(self):
        from .scenario import spec_to_dict

        nodes = []
        for j in range(self.n_nodes):
            nd = {"parent": None if self.parent[j] == -1 else self.parent[j]}
            if self.parent[j] != -1:
                nd["prob"] = float(self.prob[j])
            nd["ask"] = self.ask[j].tolist()
            if not np.array_equal(self.bid, self.ask):
                nd["bid"] = self.bid[j].tolist()
            if j in self.payoff:
                nd["payoff"] = self.payoff[j]
            nodes.append(nd)
        return {"nodes": nodes, "cost_weights": self.cost_weights.tolist(),
                "risk": spec_to_dict(self.spec)}


def binomial_tree(s0, up, down, p_up, periods, payoff, spec=None):
    """Recombining-price binomial tree stored as a full event tree."""
    parent, prob, ask, pay = [-1], [1.0], [[s0]], {}
    frontier = [0]
    for _ in range(periods):
        nxt = []
        for j in frontier:
            for factor, p in ((up, p_up), (down, 1.0 - p_up)):
                parent.append(j)
                prob.append(p)
                ask.append([ask[j][0] * factor])
                nxt.append(len(parent) - 1)
        frontier = nxt
    for j in frontier:
        pay[j] = float(payoff(ask[j][0]))
    return TreeModel(parent, prob, ask, pay, spec)


@dataclass(frozen=True)
class _Layout:
    nv: int
    nq: int
    n_total: int

    def q(self, j):
        return self.nv + j

    def n(self, j, i, d):
        return self.nv + self.nq + j * d + i


def _program(tree, lam, sense):
    g = ground(tree.spec, tree.space)
    n_nodes, d = tree.n_nodes, tree.d
    lay = _Layout(g.nvar, n_nodes, g.nvar + n_nodes * (1 + d))
    bid, ask = tree.band(lam)
    eq_rows, eq_rhs, ub_rows = [], [], []

    def row():
        return np.zeros(lay.n_total)

    r = row()
    r[lay.q(tree.root)] = 1.0
    eq_rows.append(r)
    eq_rhs.append(1.0)
    for j in range(n_nodes):
        kids = tree.children[j]
        if kids:
            r = row()
            r[lay.q(j)] = -1.0
            for c in kids:
                r[lay.q(c)] = 1.0
            eq_rows.append(r)
            eq_rhs.append(0.0)
            for i in range(d):
                r = row()
                r[lay.n(j, i, d)] = -1.0
                for c in kids:
                    r[lay.n(c, i, d)] = 1.0
                eq_rows.append(r)
                eq_rhs.append(0.0)
        for i in range(d):
            r = row()
            r[lay.q(j)] = bid[j, i]
            r[lay.n(j, i, d)] = -1.0
            ub_rows.append(r)
            r = row()
            r[lay.q(j)] = -ask[j, i]
            r[lay.n(j, i, d)] = 1.0
            ub_rows.append(r)
    dm = g.density_map.toarray()
    probs = tree.space.probs
    for k, leaf in enumerate(tree.leaves):
        r = row()
        r[lay.q(leaf)] = 1.0
        r[: g.nvar] = -probs[k] * dm[k]
        eq_rows.append(r)
        eq_rhs.append(0.0)
    c = row()
    claim = tree.claim().values
    for k, leaf in enumerate(tree.leaves):
        c[lay.q(leaf)] = sense * claim[k]
    extra = lay.n_total - g.nvar
    lo = np.concatenate([np.zeros(n_nodes), np.full(n_nodes * d, -np.inf)])
    hi = np.full(extra, np.inf)
    lp = g.program(c, a_eq=np.array(eq_rows)[:, :], b_eq=np.array(eq_rhs),
                   a_ub=np.array(ub_rows), b_ub=np.zeros(len(ub_rows)), extra=extra,
                   extra_bounds=(lo, hi))
    return lp, lay


def _shadow_prices(tree, lay, x):
    """``M = n / q`` at nodes with positive mass, ``None`` elsewhere."""
    out = []
    for j in range(tree.n_nodes):
        q = x[lay.q(j)]
        if q > 1e-12:
            out.append([x[lay.n(j, i, tree.d)] / q for i in range(tree.d)])
        else:
            out.append(None)
    return out


def txcost_interval(tree, lam=0.0):
    """Good-deal price interval of the leaf payoff under proportional costs ``lam``.

    ``lam=None`` uses the stored bid prices instead.
    """
    ends = []
    for sense in (1.0, -1.0):
        lp, lay = _program(tree, lam, sense)
        sol = lpmod.solve(lp)
        if sol.status is lpmod.Status.INFEASIBLE:
            return PriceInterval.empty_with(sol.farkas, lam=lam)
        if not sol.optimal:
            raise NumericalError(f"transaction-cost LP ended with status {sol.status.value}")
        q_leaf = np.array([sol.x[lay.q(leaf)] for leaf in tree.leaves])
        z = np.maximum(q_leaf, 0.0) / tree.space.probs
        z = z / (tree.space.probs @ z)
        ends.append((sense * sol.objective, Density(tree.space, z), _shadow_prices(tree, lay, sol.x)))
    (lo, w_lo, m_lo), (hi, w_hi, m_hi) = ends
    if hi < lo:
        lo = hi = 0.5 * (lo + hi)
    return PriceInterval(lo, hi, True, True, w_lo, w_hi,
                         details={"lam": lam, "lo_shadow": m_lo, "hi_shadow": m_hi})


def frictionless_model(tree):
    """Static market on the leaves equivalent to dynamic frictionless trading.

    Each internal node ``j`` and asset ``i`` contributes the zero-cost
    asset ``1{j reached} (S_child - S_j)``; its martingale condition is the
    one-step martingale property of ``S^i`` at ``j``.
    """
    leaves = tree.leaves
    index = {leaf: k for k, leaf in enumerate(leaves)}
    mid = tree.ask
    rows = []
    for j in range(tree.n_nodes):
        if not tree.children[j]:
            continue
        for i in range(tree.d):
            row = np.zeros(len(leaves))
            for c in tree.children[j]:
                for leaf in _leaves_below(tree, c):
                    row[index[leaf]] = mid[c, i] - mid[j, i]
            rows.append(row)
    s1 = np.array(rows) if rows else np.zeros((0, len(leaves)))
    return MarketModel(tree.space, np.zeros(len(rows)), s1)


def _leaves_below(tree, j):
    stack, out = [j], []
    while stack:
        k = stack.pop()
        if tree.children[k]:
            stack.extend(tree.children[k])
        else:
            out.append(k)
    return out


def frictionless_interval(tree):
    return ngd_interval(frictionless_model(tree), tree.spec, tree.claim())


@dataclass(frozen=True, eq=False)
class SweepResult:
    rows: tuple
    frictionless: tuple
    nested: bool
    intervals: tuple = ()

    def to_csv(self, header=True):
        lines = ["lambda,lo,hi,lo0,hi0"] if header else []
        lo0, hi0 = self.frictionless
        rows = list(self.rows)
        # the closing row is the frictionless limit itself
        if not rows or rows[-1][0] != 0.0:
            rows.append((0.0, lo0, hi0))
        for lam, lo, hi in rows:
            lines.append(f"{lam:.12g},{_num(lo)},{_num(hi)},{_num(lo0)},{_num(hi0)}")
        return "\n".join(lines) + "\n"


def _num(x):
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def geometric_lambdas(ratio, count):
    """``ratio, ratio**2, ..., ratio**count``."""
    return [ratio ** k for k in range(1, count + 1)]


def convergence_sweep(tree, lambdas, workers=None):
    """Intervals along a decreasing cost sequence plus the frictionless one.

    Per-cost programs run concurrently; rows keep the input order.  ``nested``
    reports whether each interval contains the next one (and the last
    contains the frictionless interval) within ``1e-9``.
    """
    lambdas = [float(x) for x in lambdas]
    if not lambdas:
        raise StructuralError("at least one cost level is required")
    if any(b >= a for a, b in zip(lambdas, lambdas[1:])) or lambdas[-1] < 0:
        raise StructuralError("cost levels must be strictly decreasing and nonnegative")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        intervals = list(pool.map(lambda lam: txcost_interval(tree, lam), lambdas))
    base = txcost_interval(tree, 0.0)
    chain = intervals + [base]
    tol = FEAS_TOL * (1.0 + max(abs(v) for v in tree.payoff.values()))
    nested = all(outer.contains_interval(inner, tol) for outer, inner in zip(chain, chain[1:]))
    rows = tuple((lam, iv.lo, iv.hi) for lam, iv in zip(lambdas, intervals))
    return SweepResult(rows, (base.lo, base.hi), nested, tuple(intervals))
