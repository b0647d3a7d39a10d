"""One-dimensional optimal transport, numerical Legendre transforms, the
entropic curvature criterion, and the 1-D Kahler-Einstein fixed point.

The monotone rearrangement T = G^{-1} o F between two densities is the 1-D
optimal-transport map; its potential Phi (T = Phi') provides the Hessian
metric used by the refined inequalities.  All CDF work is grid-based with
local quadrature corrections, so map values are good to ~1e-10 well inside
the support.
"""

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import integrate, interpolate

from .errors import (
    BarycenterNotZero,
    CDFInversionFailure,
    DegenerateHessian,
    NoConvergence,
    NonCompactTarget,
    NotStronglyConvex,
)
from .fields import PotentialField, as_point

_BASE_GRID = 4096
_TAIL_LOG = 42.0  # truncate unbounded supports where the density has fallen
                  # below exp(-42) of its peak (past the 1e-12 quantile)


class Density1D:
    """A probability density exp(-V)/Z on an interval, with cached CDF.

    The working grid has ~4096 base points and is refined where the mass
    concentrates (equal-mass re-gridding).  `cdf`/`ppf` use the cached grid
    plus a local quadrature/Newton correction; the vectorized `cdf_many` /
    `ppf_many` paths interpolate and are meant for sampling.
    """

    def __init__(self, potential, support, name="density", grid_size=_BASE_GRID):
        self.raw_potential = potential
        self.support = (float(support[0]), float(support[1]))
        self.name = name
        self._build(grid_size)

    # -- construction ---------------------------------------------------------

    def _build(self, grid_size):
        lo, hi = self._effective_bounds()
        grid = np.linspace(lo, hi, grid_size)
        vals = self._raw(grid)
        self._vmin = float(vals.min())
        pdf = np.exp(-(vals - self._vmin))
        cdf = self._cumulative(grid, pdf)
        total = cdf[-1]
        # refine: place half the nodes at equal-mass levels
        levels = np.linspace(0.0, total, grid_size // 2 + 1)[1:-1]
        extra = np.interp(levels, cdf, grid)
        grid = np.unique(np.concatenate([grid, extra]))
        pdf = np.exp(-(self._raw(grid) - self._vmin))
        cdf = self._cumulative(grid, pdf)
        self._z = cdf[-1]
        self.grid = grid
        self._pdf_grid = pdf / self._z
        self.cdf_grid = cdf / self._z
        self.log_z = math.log(self._z) - self._vmin
        self._ppf_interp = None
        if not (self._z > 0.0 and np.isfinite(self._z)):
            raise NoConvergence(f"{self.name}: normalization failed")

    def _raw(self, x):
        x = np.asarray(x, dtype=float)
        out = np.array([self.raw_potential(t) for t in np.atleast_1d(x)])
        return out if x.ndim else out[0]

    @staticmethod
    def _cumulative(grid, pdf):
        cdf = integrate.cumulative_simpson(pdf, x=grid, initial=0.0)
        return np.maximum.accumulate(cdf)

    def _effective_bounds(self):
        a, b = self.support
        if np.isfinite(a) and np.isfinite(b):
            return a, b
        # probe for the mode, then expand until the potential has climbed
        # TAIL_LOG above its minimum
        seed = 0.0
        if np.isfinite(a):
            seed = a + 1.0
        elif np.isfinite(b):
            seed = b - 1.0
        probe = seed + np.linspace(-10.0, 10.0, 201)
        probe = probe[(probe > a) & (probe < b)]
        vp = self._raw(probe)
        x0 = float(probe[np.argmin(vp)])
        vmin = float(vp.min())

        def expand(direction, bound):
            x, step = x0, 1.0
            while True:
                nxt = x + direction * step
                if (direction < 0 and nxt <= bound) or (direction > 0 and nxt >= bound):
                    return bound
                if self.raw_potential(nxt) - vmin > _TAIL_LOG:
                    return nxt
                x, step = nxt, step * 1.5

        lo = a if np.isfinite(a) else expand(-1.0, a)
        hi = b if np.isfinite(b) else expand(+1.0, b)
        return lo, hi

    # -- pointwise queries ----------------------------------------------------

    def potential(self, x):
        """Normalized potential: pdf(x) = exp(-potential(x))."""
        return self._raw(x) + self.log_z

    def pdf(self, x):
        return np.exp(-self.potential(x))

    def cdf(self, x):
        """CDF with a local quadrature correction off the cached grid."""
        x = float(x)
        if x <= self.grid[0]:
            return 0.0
        if x >= self.grid[-1]:
            return 1.0
        i = np.searchsorted(self.grid, x) - 1
        corr, _ = integrate.quad(self.pdf, self.grid[i], x, limit=60)
        return min(max(self.cdf_grid[i] + corr, 0.0), 1.0)

    def ppf(self, u, tol=1e-13):
        """Quantile by bracketed Newton on the corrected CDF."""
        u = float(u)
        if not 0.0 < u < 1.0:
            raise ValueError("quantile level must be in (0, 1)")
        i = int(np.clip(np.searchsorted(self.cdf_grid, u) - 1, 0, len(self.grid) - 2))
        lo, hi = self.grid[i], self.grid[min(i + 2, len(self.grid) - 1)]
        if self.cdf_grid[min(i + 2, len(self.grid) - 1)] - self.cdf_grid[i] <= 0.0:
            raise CDFInversionFailure(
                f"{self.name}: CDF flat near level {u:.3e}; density vanishes inside support"
            )
        x = float(np.interp(u, self.cdf_grid, self.grid))
        for _ in range(60):
            f = self.cdf(x) - u
            if abs(f) < tol:
                break
            if f > 0:
                hi = x
            else:
                lo = x
            p = self.pdf(x)
            step = f / p if p > 1e-300 else 0.0
            x_new = x - step
            if not lo < x_new < hi or step == 0.0:
                x_new = 0.5 * (lo + hi)
            x = x_new
        return x

    # -- vectorized paths (sampling accuracy) ---------------------------------

    def cdf_many(self, x):
        return np.interp(np.asarray(x, dtype=float), self.grid, self.cdf_grid)

    def _ensure_ppf_interp(self):
        if self._ppf_interp is None:
            u, idx = np.unique(self.cdf_grid, return_index=True)
            self._ppf_interp = interpolate.PchipInterpolator(
                u, self.grid[idx], extrapolate=False
            )

    def ppf_many(self, u):
        self._ensure_ppf_interp()
        u = np.clip(np.asarray(u, dtype=float), 1e-15, 1.0 - 1e-15)
        out = self._ppf_interp(np.clip(u, self.cdf_grid[0], self.cdf_grid[-1]))
        return np.clip(out, self.grid[0], self.grid[-1])

    def sample(self, n, rng):
        return self.ppf_many(rng.uniform(size=n))

    # -- moments and transforms ------------------------------------------------

    def moment(self, k=1):
        """k-th moment by adaptive quadrature (grid Simpson is not accurate
        enough for the barycenter normalization of the fixed-point solver)."""
        val, _ = integrate.quad(
            lambda t: t**k * float(self.pdf(t)),
            self.grid[0],
            self.grid[-1],
            limit=200,
        )
        return float(val)

    def mean(self):
        return self.moment(1)

    def variance(self):
        m = self.mean()
        return self.moment(2) - m * m

    def shifted(self, delta):
        """Density of X + delta."""
        a, b = self.support
        return Density1D(
            lambda t: self.raw_potential(t - delta),
            (a + delta, b + delta),
            name=f"{self.name}+{delta:.3g}",
            grid_size=len(self.grid) // 2 + 1,
        )

    def potential_field(self, d1=None, d2=None) -> PotentialField:
        """Normalized potential as a 1-D PotentialField (analytic derivative
        callbacks optional)."""
        return PotentialField(
            fn=lambda x: self.potential(float(np.atleast_1d(x)[0])),
            grad=None if d1 is None else (
                lambda x: np.array([d1(float(np.atleast_1d(x)[0]))])
            ),
            hess=None if d2 is None else (
                lambda x: np.array([[d2(float(np.atleast_1d(x)[0]))]])
            ),
        )


# -- stock densities -----------------------------------------------------------


def uniform_density(a, b):
    return Density1D(lambda t: 0.0, (a, b), name=f"uniform[{a},{b}]")


def cos_density(half_width=0.5):
    """Density proportional to cos(pi x / (2 half_width)) on [-hw, hw]."""
    w = math.pi / (2.0 * half_width)

    def pot(t):
        c = math.cos(w * t)
        return -math.log(c) if c > 1e-300 else 700.0

    return Density1D(pot, (-half_width, half_width), name="cos")


def gaussian_density(sigma=1.0):
    return Density1D(lambda t: 0.5 * (t / sigma) ** 2, (-np.inf, np.inf), name="gauss")


def exponential_density(rate=1.0):
    return Density1D(lambda t: rate * t, (0.0, np.inf), name="exp")


def power_density(q, c=1.0):
    """exp(-c x^q) on the positive half-line."""
    return Density1D(lambda t: c * t**q, (0.0, np.inf), name=f"power{q}")


# -- optimal transport ----------------------------------------------------------


def monotone_map_1d(mu: Density1D, nu: Density1D, x) -> Tuple[float, float]:
    """Monotone rearrangement T = G^{-1}(F(x)) of mu onto nu and its
    derivative T' = pdf_mu(x) / pdf_nu(T(x))."""
    x = float(np.atleast_1d(x)[0])
    u = mu.cdf(x)
    if not 0.0 < u < 1.0:
        raise ValueError(f"point {x} outside the interior of supp(mu)")
    t = nu.ppf(u)
    dens = nu.pdf(t)
    if dens <= 1e-300:
        raise CDFInversionFailure(f"{nu.name}: density vanishes at T({x}) = {t}")
    return t, float(mu.pdf(x)) / float(dens)


def transport_potential_1d(mu: Density1D, nu: Density1D, n=2049) -> PotentialField:
    """Convex potential Phi with Phi' = monotone map of mu onto nu.

    Built on the interior quantile range of mu; Phi'' comes from the density
    ratio, Phi''' from differencing it.
    """
    qs = np.linspace(1e-6, 1.0 - 1e-6, n)
    xs = mu.ppf_many(qs)
    xs = np.unique(xs)
    ts = nu.ppf_many(mu.cdf_many(xs))
    tp = mu.pdf(xs) / np.maximum(nu.pdf(ts), 1e-300)
    phi_vals = integrate.cumulative_simpson(ts, x=xs, initial=0.0)
    spl = interpolate.CubicSpline(xs, phi_vals)
    t_spl = interpolate.CubicSpline(xs, ts)
    tp_spl = interpolate.CubicSpline(xs, tp)

    return PotentialField(
        fn=lambda x: float(spl(float(np.atleast_1d(x)[0]))),
        grad=lambda x: np.array([float(t_spl(float(np.atleast_1d(x)[0])))]),
        hess=lambda x: np.array([[float(tp_spl(float(np.atleast_1d(x)[0])))]]),
        third=lambda x: np.array(
            [[[float(tp_spl(float(np.atleast_1d(x)[0]), 1))]]]
        ),
        convex=True,
    )


def monge_ampere_residual(phi: PotentialField, v: PotentialField, w, x):
    """Defect of the change of variables: log det D^2 Phi + V - W(grad Phi).

    Vanishes exactly when det D^2 Phi = exp(-V)/exp(-W(grad Phi)) holds at x,
    i.e. when grad Phi transports exp(-V) dx onto exp(-W) dx there.  `w` may
    be a PotentialField or a plain callable.
    """
    x = as_point(x)
    h = phi.hessian(x)
    sign, logdet = np.linalg.slogdet(h)
    if sign <= 0:
        raise DegenerateHessian(f"det D^2 Phi <= 0 at {x}")
    y = phi.gradient(x)
    wv = w.value(y) if hasattr(w, "value") else float(w(y))
    vv = v.value(x) if hasattr(v, "value") else float(v(x))
    return float(logdet + vv - wv)


# -- Legendre transform -----------------------------------------------------------


@dataclass
class LegendreData:
    """Dual-side grid data of a strongly convex 1-D potential.

    f_vals holds F(y) = y (V*)'(y) - log (V*)''(y); the dual criterion of the
    entropic inequality is expressed through these arrays.
    """

    x_grid: np.ndarray
    y_grid: np.ndarray
    vstar: np.ndarray
    dvstar: np.ndarray
    ddvstar: np.ndarray
    f_vals: np.ndarray
    potential: PotentialField

    def conjugate_value(self, y, refine=True):
        """V*(y) = sup_x (xy - V(x)) by grid supremum plus Newton refinement."""
        y = float(y)
        vals = self.x_grid * y - np.array(
            [self.potential.value(t) for t in self.x_grid]
        )
        i = int(np.argmax(vals))
        x = self.x_grid[i]
        if refine and 0 < i < len(self.x_grid) - 1:
            for _ in range(40):
                g = self.potential.gradient([x])[0] - y
                h = self.potential.hessian([x])[0, 0]
                if h <= 0:
                    break
                step = g / h
                x_new = float(
                    np.clip(x - step, self.x_grid[0], self.x_grid[-1])
                )
                if abs(x_new - x) < 1e-14 * (1.0 + abs(x)):
                    x = x_new
                    break
                x = x_new
        return x * y - self.potential.value([x])


def legendre_1d(v: PotentialField, grid) -> LegendreData:
    """Legendre data of a strongly convex potential along an x-grid.

    Dual values come from the exact parametrization y = V'(x): the conjugate
    satisfies V*(V'(x)) = x V'(x) - V(x) and D^2 V*(V') D^2 V = 1.
    """
    grid = np.asarray(grid, dtype=float)
    vv = np.array([v.value([t]) for t in grid])
    d1 = np.array([v.gradient([t])[0] for t in grid])
    d2 = np.array([v.hessian([t])[0, 0] for t in grid])
    if np.any(d2 <= 1e-12):
        raise NotStronglyConvex(
            f"V'' <= 0 on the grid (min {d2.min():.3e}); Legendre data undefined"
        )
    y = d1
    if np.any(np.diff(y) <= 0):
        raise NotStronglyConvex("V' is not strictly increasing on the grid")
    vstar = grid * y - vv
    f_vals = grid * y + np.log(d2)
    return LegendreData(
        x_grid=grid,
        y_grid=y,
        vstar=vstar,
        dvstar=grid.copy(),
        ddvstar=1.0 / d2,
        f_vals=f_vals,
        potential=v,
    )


# -- entropic criterion ------------------------------------------------------------


@dataclass
class DualCriterion:
    """Arrays on a dual grid entering the entropic sufficient condition

        F'' + (1/2d) ((log (V*)'')')^2 >= 2 rho (V*)''   (d = 1 here).
    """

    y_grid: np.ndarray
    ddvstar: np.ndarray
    f_second: np.ndarray
    logd_prime: np.ndarray

    def margin(self, rho, enhanced=True):
        lhs = self.f_second.copy()
        if enhanced:
            lhs = lhs + 0.5 * self.logd_prime**2
        return lhs - 2.0 * rho * self.ddvstar

    def bisect_rho(self, hi=64.0, tol=1e-10, enhanced=False):
        """sup{rho >= 0 : the criterion margin stays non-negative}."""
        if self.margin(0.0, enhanced).min() < -1e-12:
            return 0.0
        lo = 0.0
        while self.margin(hi, enhanced).min() >= 0.0:
            hi *= 2.0
            if hi > 1e9:
                return hi
        while hi - lo > tol * (1.0 + hi):
            mid = 0.5 * (lo + hi)
            if self.margin(mid, enhanced).min() >= 0.0:
                lo = mid
            else:
                hi = mid
        return lo


def dual_criterion_from_potential(v: PotentialField, grid) -> DualCriterion:
    """Push a 4-times differentiable strongly convex V to the dual side.

    Uses the chain rule on y = V'(x):
        (V*)'' = 1/V'',   (log (V*)'')'(y) = -V'''/V''^2,
        F''(y) = 2/V'' + r'/V''^2 - (y + r) V'''/V''^3,   r = V'''/V''.
    """
    grid = np.asarray(grid, dtype=float)
    d1 = np.array([v.gradient([t])[0] for t in grid])
    d2 = np.array([v.hessian([t])[0, 0] for t in grid])
    d3 = np.array([v.third_tensor([t])[0, 0, 0] for t in grid])
    d4 = np.array([v.fourth_1d([t]) for t in grid])
    if np.any(d2 <= 0):
        raise NotStronglyConvex("V'' <= 0 on the criterion grid")
    r = d3 / d2
    rp = (d4 * d2 - d3**2) / d2**2
    f2 = 2.0 / d2 + rp / d2**2 - (d1 + r) * d3 / d2**3
    return DualCriterion(
        y_grid=d1, ddvstar=1.0 / d2, f_second=f2, logd_prime=-d3 / d2**2
    )


def entropic_condition_check(v: PotentialField, rho, grid, enhanced=True):
    """Pointwise verdict of the entropic sufficient condition at level rho.

    Returns a dict with the convexity flag of F, the worst margin over the
    grid, and the grid location where it is attained.
    """
    crit = dual_criterion_from_potential(v, grid)
    m = crit.margin(rho, enhanced=enhanced)
    i = int(np.argmin(m))
    return {
        "holds": bool(m[i] >= -1e-9),
        "convex": bool(crit.f_second.min() >= -1e-8),
        "worst_violation": float(m[i]),
        "location": float(np.asarray(grid, dtype=float)[i]),
        "criterion": crit,
    }


# -- the q > 2 construction ----------------------------------------------------------


@dataclass
class FlattenedPowerPotential:
    """Even potential that is quadratic near 0 and |x|^q-like at infinity.

    Defined through its conjugate: (V*)''(y) = min(1, |y|^(p-2))/p with
    p = q/(q-1); everything below is closed form on the primal side.
    """

    q: float

    def __post_init__(self):
        if self.q <= 2.0:
            raise ValueError("construction requires q > 2")
        self.p = self.q / (self.q - 1.0)
        self.x_knee = 1.0 / self.p  # where |V'| reaches 1

    # primal-side derivatives (x >= 0; extend evenly)

    def d1(self, x):
        p = self.p
        x = abs(float(x))
        if x <= self.x_knee:
            return p * x
        return (p * (p - 1.0) * x + (2.0 - p)) ** (1.0 / (p - 1.0))

    def d2(self, x):
        p = self.p
        x = abs(float(x))
        if x <= self.x_knee:
            return p
        return p * self.d1(x) ** (2.0 - p)

    def value(self, x):
        p = self.p
        x = abs(float(x))
        if x <= self.x_knee:
            return 0.5 * p * x * x
        # V(x) = x y - V*(y) at y = V'(x)
        y = self.d1(x)
        vstar = (
            0.5 / p
            + (y - 1.0) / p
            + ((y**p - 1.0) / p - (y - 1.0)) / (p * (p - 1.0))
        )
        return x * y - vstar

    def potential_field(self) -> PotentialField:
        return PotentialField(
            fn=lambda x: self.value(float(np.atleast_1d(x)[0])),
            grad=lambda x: np.array(
                [math.copysign(self.d1(t), t) for t in np.atleast_1d(x)]
            ),
            hess=lambda x: np.array([[self.d2(float(np.atleast_1d(x)[0]))]]),
            convex=True,
        )

    def dual_criterion(self, y_grid) -> DualCriterion:
        """Closed-form dual arrays: for |y| <= 1, F'' = 2/p; for |y| > 1,
        F'' = |y|^(p-2) + (p-2)/y^2, (log (V*)'')' = (p-2)/y."""
        y = np.abs(np.asarray(y_grid, dtype=float))
        p = self.p
        inner = y <= 1.0
        ys = np.where(inner, 1.0, y)  # keep the unused branch finite
        dd = np.where(inner, 1.0 / p, ys ** (p - 2.0) / p)
        f2 = np.where(inner, 2.0 / p, ys ** (p - 2.0) + (p - 2.0) / ys**2)
        ld = np.where(inner, 0.0, (p - 2.0) / ys)
        return DualCriterion(y_grid=y, ddvstar=dd, f_second=f2, logd_prime=ld)

    def density(self, x_max=None) -> Density1D:
        x_max = x_max or (8.0 * _TAIL_LOG) ** (1.0 / self.q) + 5.0
        return Density1D(self.value, (0.0, np.inf), name=f"flatpower{self.q}")


# -- Kahler-Einstein fixed point -------------------------------------------------------


@dataclass
class KESolution:
    grid: np.ndarray
    phi_vals: np.ndarray
    nu: Density1D
    iterations: int
    residual_sup: float
    phi: PotentialField = field(repr=False, default=None)

    def interior_mask(self, q_lo=0.005, q_hi=0.995):
        cdf = _grid_cdf(self.grid, np.exp(-self.phi_vals))
        return (cdf >= q_lo) & (cdf <= q_hi)

    def second_derivative(self):
        return _fd5(self.phi_vals, self.grid[1] - self.grid[0], order=2)


def _grid_cdf(grid, pdf):
    cdf = integrate.cumulative_simpson(pdf, x=grid, initial=0.0)
    cdf = np.maximum.accumulate(cdf)
    return cdf / cdf[-1]


def _fd5(vals, h, order):
    """Five-point first or second derivative on a uniform grid; one-sided
    copies at the two boundary nodes on each end."""
    n = len(vals)
    out = np.empty(n)
    v = vals
    if order == 1:
        out[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)
    else:
        out[2:-2] = (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (
            12 * h * h
        )
    out[:2] = out[2]
    out[-2:] = out[-3]
    return out


def _cumulative_smooth(vals, h):
    """Cumulative integral on a uniform grid by trapezoid with the telescoped
    Euler-Maclaurin endpoint correction.

    Unlike composite Simpson, the O(h^4) error here varies smoothly from node
    to node (no even/odd parity sawtooth), so finite differences of the
    primitive recover the integrand and its derivative cleanly.
    """
    prim = np.concatenate(
        [[0.0], np.cumsum(0.5 * h * (vals[1:] + vals[:-1]))]
    )
    d = _fd5(vals, h, order=1)
    return prim - (h * h / 12.0) * (d - d[0])


def _primitive_smooth_symmetric(vals, h):
    """Primitive averaged between left-to-right and right-to-left
    accumulation, so reflection symmetry of the integrand is preserved to
    roundoff instead of drifting with the accumulation direction."""
    fwd = _cumulative_smooth(vals, h)
    bwd = _cumulative_smooth(vals[::-1], h)[::-1]
    total = 0.5 * (fwd[-1] + bwd[0])
    return 0.5 * (fwd + (total - bwd))


def _normalized_cdf_smooth(vals, h):
    """Smooth CDF of a density sampled on a uniform grid; symmetric densities
    yield CDFs with F(x) + F(-x) = 1 to roundoff."""
    prim = _primitive_smooth_symmetric(vals, h)
    cdf = prim / max(prim[-1], 1e-300)
    return np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))


def ke_solve_1d(
    nu: Density1D,
    tol=1e-8,
    max_iter=500,
    damping=0.5,
    grid_size=16385,
    recenter=True,
    initial_shift=0.0,
) -> KESolution:
    """Fixed point Phi of exp(-Phi) = Phi'' exp(-W(Phi')) for a compactly
    supported log-concave target exp(-W).

    Damped Picard iteration: transport exp(-Phi_k) onto nu by monotone
    rearrangement, integrate the map into a new potential, normalize and
    recenter.  The residual is measured in sup norm over the interior
    quantile range of the solution.
    """
    a, b = nu.support
    if not (np.isfinite(a) and np.isfinite(b)):
        raise NonCompactTarget("the fixed-point construction needs compact support")
    bary = nu.mean()
    if recenter:
        if abs(bary) > 1e-12:
            nu = nu.shifted(-bary)
            a, b = nu.support
    elif abs(bary) > 1e-10:
        raise BarycenterNotZero(f"barycenter of target = {bary:.3e}")

    edge = min(abs(a), abs(b))
    if edge <= 0.0:
        raise BarycenterNotZero("target support must surround the origin")
    half = _TAIL_LOG / edge
    grid = np.linspace(-half, half, grid_size)
    h = grid[1] - grid[0]

    # dense inverse-CDF interpolant of the target, built once; the transport
    # quantile is clipped at 1e-6 where the inverse CDF is well conditioned
    # (far outside the interior range the residual is measured on)
    tg = np.linspace(a, b, 65537)
    t_cdf = _normalized_cdf_smooth(np.asarray(nu.pdf(tg), dtype=float), tg[1] - tg[0])
    uu, idx = np.unique(t_cdf, return_index=True)
    nu_ppf = interpolate.PchipInterpolator(uu, tg[idx], extrapolate=False)
    u_lo = max(1e-6, float(uu[1]))
    u_hi = 1.0 - u_lo

    # Huber-type start: quadratic core, linear tails with the fixed point's
    # true decay rate (the support edge), so nothing underflows on the grid;
    # `initial_shift` translates the start (the solution must not care)
    sigma = math.sqrt(max(nu.variance(), 1e-6))
    s0 = 2.0 * sigma
    g0 = grid - initial_shift
    phi = edge * (np.sqrt(s0 * s0 + g0 * g0) - s0)
    phi = phi + math.log(np.trapezoid(np.exp(-phi), grid))

    def normalize(p):
        m = p.min()
        z = integrate.simpson(np.exp(-(p - m)), x=grid)
        return p + (math.log(z) - m)

    def transport(p):
        cdf = _normalized_cdf_smooth(np.exp(-p), h)
        u = np.clip(cdf, u_lo, u_hi)
        return np.asarray(nu_ppf(u), dtype=float)

    w_pot = nu.potential

    def residual(p):
        # defect of exp(-Phi) = Phi'' exp(-W(Phi')) with honest finite
        # differences for Phi', Phi''
        d1 = _fd5(p, h, order=1)
        d2 = _fd5(p, h, order=2)
        mask = _grid_cdf(grid, np.exp(-p))
        mask = (mask >= 0.005) & (mask <= 0.995)
        if d2[mask].min() <= 0.0:
            return math.inf
        t = np.clip(d1[mask], a + 1e-13, b - 1e-13)
        r = d2[mask] * np.exp(-np.asarray(w_pot(t), dtype=float)) - np.exp(-p[mask])
        return float(np.abs(r).max())

    res = math.inf
    iterations = 0
    for k in range(max_iter):
        iterations = k + 1
        new = normalize(_primitive_smooth_symmetric(transport(phi), h))
        phi_next = (1.0 - damping) * phi + damping * new
        phi_next = normalize(phi_next)
        if recenter:
            m1 = integrate.simpson(grid * np.exp(-phi_next), x=grid)
            if abs(m1) > 0.1 * h:
                spl = interpolate.CubicSpline(grid, phi_next, extrapolate=True)
                phi_next = normalize(np.asarray(spl(grid + m1), dtype=float))
            elif abs(m1) > 1e-15:
                # first-order argument shift: exact to O(m1^2), no resample noise
                phi_next = normalize(phi_next + m1 * _fd5(phi_next, h, order=1))
        delta = float(np.abs(phi_next - phi).max())
        phi = phi_next
        if delta < 0.25 * tol or (k > 10 and k % 5 == 0):
            res = residual(phi)
            if res < tol:
                break
    else:
        res = residual(phi)
    if not res < tol:
        raise NoConvergence(
            f"KE iteration stalled at residual {res:.3e} after {iterations} steps",
            residual=res,
        )

    spl = interpolate.CubicSpline(grid, phi)
    phi_field = PotentialField(
        fn=lambda x: float(spl(float(np.atleast_1d(x)[0]))),
        grad=lambda x: np.array([float(spl(float(np.atleast_1d(x)[0]), 1))]),
        hess=lambda x: np.array([[float(spl(float(np.atleast_1d(x)[0]), 2))]]),
        convex=True,
    )
    return KESolution(
        grid=grid,
        phi_vals=phi,
        nu=nu,
        iterations=iterations,
        residual_sup=res,
        phi=phi_field,
    )
