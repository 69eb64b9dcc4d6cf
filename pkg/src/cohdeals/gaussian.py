"""Closed forms for jointly Gaussian models under law-invariant coherent utilities.

For a Gaussian ``xi`` with mean ``m`` and standard deviation ``s`` every
law-invariant coherent utility gives ``u(xi) = m - gamma * s``; everything
below is expressed through that single constant.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError, ModelError, StructuralError
from .markets import PriceInterval
from .scenario import Mixture, TailVaR, WeightedVaR

_EIG_CUTOFF = 1e-10


def gamma_of(spec):
    """``gamma`` with ``u(xi) = E xi - gamma * sd(xi)`` for Gaussian ``xi``."""
    if isinstance(spec, TailVaR):
        if spec.lam == 0:
            raise DomainError("Tail V@R of order 0 is -inf on Gaussian P&Ls")
        if spec.lam == 1:
            return 0.0
        return float(stats.norm.pdf(stats.norm.ppf(spec.lam)) / spec.lam)
    if isinstance(spec, WeightedVaR):
        return sum(a * gamma_of(TailVaR(lam)) for lam, a in spec.atoms)
    if isinstance(spec, Mixture):
        return sum(w * gamma_of(s) for w, s in spec.terms)
    raise DomainError(f"no Gaussian constant for {type(spec).__name__}")


def pinv_psd(c):
    """Spectral pseudo-inverse of a symmetric PSD matrix and an image basis."""
    w, v = np.linalg.eigh(c)
    cut = _EIG_CUTOFF * max(float(w.max(initial=0.0)), 0.0)
    keep = w > cut
    inv = (v[:, keep] / w[keep]) @ v[:, keep].T
    return inv, v[:, keep]


def _in_image(basis, x, scale):
    resid = x - basis @ (basis.T @ x)
    return float(np.abs(resid).max(initial=0.0)) <= 1e-9 * scale, resid


@dataclass(frozen=True, eq=False)
class GaussianMarket:
    """Gaussian asset prices ``S1 ~ N(a, C)`` and a claim ``F`` jointly Gaussian with them.

    ``c`` is ``cov(S1, F)`` and ``var_f`` is ``var F``.
    """

    a: np.ndarray
    cov: np.ndarray
    s0: np.ndarray
    mean_f: float
    c: np.ndarray
    var_f: float
    gamma: float

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        d = a.size
        cov = np.asarray(self.cov, dtype=float).reshape(d, d)
        s0 = np.atleast_1d(np.asarray(self.s0, dtype=float))
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if s0.size != d or c.size != d:
            raise StructuralError("a, s0 and c must have the same length")
        if np.abs(cov - cov.T).max(initial=0.0) > 1e-10:
            raise ModelError("covariance matrix is not symmetric")
        cov = 0.5 * (cov + cov.T)
        joint = np.block([[cov, c[:, None]], [c[None, :], np.array([[float(self.var_f)]])]])
        scale = max(1.0, float(np.abs(joint).max()))
        if np.linalg.eigvalsh(cov).min(initial=0.0) < -1e-10 * scale:
            raise ModelError("covariance matrix is not positive semidefinite")
        if np.linalg.eigvalsh(joint).min() < -1e-10 * scale:
            raise ModelError("joint covariance of assets and claim is not positive semidefinite")
        if not float(self.gamma) > 0:
            raise DomainError("gamma must be positive")
        for name, val in (("a", a), ("cov", cov), ("s0", s0), ("c", c)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "mean_f", float(self.mean_f))
        object.__setattr__(self, "var_f", float(self.var_f))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def d(self):
        return self.a.size

    @classmethod
    def from_dict(cls, obj):
        claim = obj.get("claim", {})
        gamma = obj.get("gamma")
        if gamma is None and "risk" in obj:
            from .scenario import spec_from_dict
            gamma = gamma_of(spec_from_dict(obj["risk"]))
        try:
            return cls(obj["a"], obj["cov"], obj["s0"], claim.get("mean", 0.0),
                       claim.get("cov_with_assets", np.zeros(len(obj["a"]))),
                       claim.get("var", 0.0), gamma)
        except KeyError as exc:
            raise StructuralError(f"missing field {exc} in Gaussian market") from exc


@dataclass(frozen=True, eq=False)
class GaussianAllocation:
    """Allocation ``a - gamma <e,Ce>^(-1/2) Ce``, or the whole generator when ``Ce = 0``.

    In the set-valued case the generator is the ellipsoid
    ``{a + C^(1/2) y : |y| <= gamma}`` recorded by ``center``, ``shape`` and
    ``radius``.
    """

    allocation: np.ndarray
    unique: bool
    center: np.ndarray = None
    shape: np.ndarray = None
    radius: float = None


def gaussian_allocate(a, cov, gamma):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    cov = np.asarray(cov, dtype=float).reshape(a.size, a.size)
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    ce = cov.sum(axis=1)
    ece = float(ce.sum())
    if ece <= _EIG_CUTOFF * max(1.0, float(np.abs(cov).max())):
        return GaussianAllocation(a.copy(), False, a.copy(), cov.copy(), float(gamma))
    return GaussianAllocation(a - gamma * ce / np.sqrt(ece), True)


def gaussian_contribution(mean_x, mean_y, cov_xy, var_x, var_y, gamma):
    """``u^c(X;Y) = E X - gamma cov(X,Y) / sd(Y)``.

    Also evaluated as ``E X + (u(X) - E X) corr(X,Y)`` and the two are
    required to agree.
    """
    if not (var_x > 0 and var_y > 0):
        raise DomainError("contributions need positive variances")
    corr = cov_xy / np.sqrt(var_x * var_y)
    if abs(corr) > 1.0 + 1e-12:
        raise DomainError(f"correlation {corr} outside [-1, 1]")
    first = mean_x - gamma * cov_xy / np.sqrt(var_y)
    u_x = mean_x - gamma * np.sqrt(var_x)
    second = mean_x + (u_x - mean_x) * corr
    if abs(first - second) > 1e-12 * (1.0 + abs(first) + abs(mean_x)):
        raise ArithmeticError("the two contribution formulas disagree")
    return float(first)


@dataclass(frozen=True)
class _Geometry:
    b: np.ndarray
    sigma2: float
    kappa: float
    shift: np.ndarray
    center: float
    outside: np.ndarray


def _geometry(mkt):
    inv, basis = pinv_psd(mkt.cov)
    scale = max(1.0, float(np.abs(mkt.cov).max(initial=0.0)), float(np.abs(mkt.c).max(initial=0.0)))
    ok, _ = _in_image(basis, mkt.c, scale)
    if not ok:
        raise ModelError("cov(S1, F) is not in the image of the asset covariance")
    b = inv @ mkt.c
    sigma2 = mkt.var_f - float(b @ mkt.c)
    if sigma2 < -1e-10 * max(1.0, abs(mkt.var_f)):
        raise ModelError("residual claim variance is negative")
    sigma2 = max(sigma2, 0.0)
    if sigma2 <= 1e-14 * max(1.0, abs(mkt.var_f)):
        sigma2 = 0.0
    diff = mkt.s0 - mkt.a
    _, outside = _in_image(basis, diff, max(1.0, float(np.abs(diff).max(initial=0.0))))
    shift = inv @ diff
    kappa = float(diff @ shift)
    center = float(b @ diff) + mkt.mean_f
    return _Geometry(b, sigma2, kappa, shift, center, outside)


def effective_gamma(gamma, bigR=None):
    """``gamma`` for utility pricing, ``gamma R / (1 + R)`` for RAROC pricing with ``PD = {P}``."""
    if bigR is None:
        return gamma
    if bigR < 0:
        raise DomainError("the RAROC limit must be nonnegative")
    if np.isinf(bigR):
        return gamma
    return gamma * bigR / (1.0 + bigR)


def _good_deal(mkt, geo, g_eff):
    diff = mkt.s0 - mkt.a
    if np.abs(geo.outside).max(initial=0.0) > 1e-9 * max(1.0, float(np.abs(diff).max())):
        h = -geo.outside
        value = float(h @ (mkt.a - mkt.s0))
    else:
        h = -geo.shift
        value = geo.kappa - g_eff * np.sqrt(geo.kappa)
    return {"good_deal": h.tolist(), "value": value}


def gaussian_ngd_interval(mkt, bigR=None):
    """Closed-form good-deal price interval of the Gaussian claim.

    Center ``<b, S0 - a> + E F`` with ``C b = c`` and half-width
    ``sqrt(sigma2 g^2 - sigma2 <S0-a, C^+ (S0-a)>)`` where
    ``sigma2 = var F - <b, c>`` and ``g`` is ``gamma`` (or its RAROC
    counterpart).  Empty when ``S0`` leaves the generator.
    """
    geo = _geometry(mkt)
    g_eff = effective_gamma(mkt.gamma, bigR)
    diff = mkt.s0 - mkt.a
    tol = 1e-9 * max(1.0, g_eff ** 2)
    outside = np.abs(geo.outside).max(initial=0.0) > 1e-9 * max(1.0, float(np.abs(diff).max(initial=0.0)))
    if outside or geo.kappa > g_eff ** 2 + tol:
        return PriceInterval.empty_with(_good_deal(mkt, geo, g_eff))
    half = np.sqrt(max(geo.sigma2 * (g_eff ** 2 - geo.kappa), 0.0))
    return PriceInterval(geo.center - half, geo.center + half,
                         details={"b": geo.b.tolist(), "sigma2": geo.sigma2, "alpha": half,
                                  "kappa": geo.kappa})


def gaussian_na_interval(mkt):
    """The whole line when ``sigma2 > 0``, the replication price otherwise."""
    geo = _geometry(mkt)
    diff = mkt.s0 - mkt.a
    if np.abs(geo.outside).max(initial=0.0) > 1e-9 * max(1.0, float(np.abs(diff).max(initial=0.0))):
        return PriceInterval.empty_with({"arbitrage": (-geo.outside).tolist()})
    if geo.sigma2 > 0:
        return PriceInterval(-np.inf, np.inf, False, False)
    return PriceInterval(geo.center, geo.center)


def gaussian_hedges(mkt, bigR=None):
    """``(H_super, H_sub) = (b - sigma2/alpha C^+(S0-a), -b - sigma2/alpha C^+(S0-a))``.

    A replicable claim (``sigma2 = 0``) strictly inside the generator gets
    the limit ``(b, -b)``; the boundary ``alpha = 0`` with ``sigma2 > 0`` is
    rejected.
    """
    iv = gaussian_ngd_interval(mkt, bigR)
    if iv.empty:
        raise DomainError("no good-deal-free price: hedges are undefined")
    geo = _geometry(mkt)
    g_eff = effective_gamma(mkt.gamma, bigR)
    if geo.sigma2 == 0:
        if geo.kappa >= g_eff ** 2 * (1 - 1e-9):
            raise DomainError("S0 lies on the boundary of the generator: hedges are undefined")
        return geo.b.copy(), -geo.b
    alpha = iv.details["alpha"]
    if alpha <= 1e-12 * np.sqrt(geo.sigma2):
        raise DomainError("alpha = 0: S0 lies on the boundary of the generator and hedges are undefined")
    corr = geo.sigma2 / alpha * geo.shift
    return geo.b - corr, -geo.b - corr


def standard_grid(n):
    """``n`` equal-weight standard normal quantiles rescaled to unit variance."""
    z = stats.norm.ppf((np.arange(n) + 0.5) / n)
    return z / np.sqrt(np.mean(z ** 2))


def product_grid(n, d):
    """``n**d`` equal-weight points of a standardised product grid in ``d`` dimensions."""
    z = standard_grid(n)
    mesh = np.meshgrid(*([z] * d), indexing="ij")
    return np.array([m.ravel() for m in mesh])


def discretize_market(mkt, n_per_dim=100):
    """Scenario version of a Gaussian market for LP cross-checks.

    Returns ``(model, F)`` where assets and claim are affine in a
    ``d + 1``-dimensional standardised grid (``d`` when the claim is
    replicable).
    """
    from .markets import MarketModel
    from .scenario import ScenarioSpace

    geo = _geometry(mkt)
    w, v = np.linalg.eigh(mkt.cov)
    w = np.clip(w, 0.0, None)
    root = v * np.sqrt(w)
    extra = 1 if geo.sigma2 > 0 else 0
    xi = product_grid(n_per_dim, mkt.d + extra)
    s1 = mkt.a[:, None] + root @ xi[: mkt.d]
    f = mkt.mean_f + geo.b @ (s1 - mkt.a[:, None])
    if extra:
        f = f + np.sqrt(geo.sigma2) * xi[-1]
    space = ScenarioSpace.uniform(xi.shape[1])
    return MarketModel(space, mkt.s0, s1), space.pnl(f)
