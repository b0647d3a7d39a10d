"""Scalar, metric and quadratic-form fields over convex domains.

Conventions:
  * points are 1-D float arrays of shape (d,);
  * metric derivative arrays have shape (d, d, d) with axis 0 the
    differentiation direction: deriv(x)[k] = d g / d x_k;
  * third-derivative tensors of potentials are fully symmetric (d, d, d)
    arrays T[i, j, k] = d^3 f / dx_i dx_j dx_k.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import numdiff
from .errors import MissingThirdDerivatives, StepTooLarge


def as_point(x, dim=None):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if dim is not None and x.size != dim:
        raise ValueError(f"expected a point of dimension {dim}, got shape {x.shape}")
    return x


@dataclass
class PotentialField:
    """A smooth scalar field with optional analytic derivative callbacks.

    Missing callbacks fall back to central differences of the next lower
    order, using the shared step discipline.  `third` returns the symmetric
    (d,d,d) tensor; `fourth` is only consumed through 1-D code paths and may
    return a scalar there.
    """

    fn: Callable[[np.ndarray], float]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    third: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fourth: Optional[Callable[[np.ndarray], np.ndarray]] = None
    convex: bool = False

    def value(self, x):
        return float(self.fn(as_point(x)))

    def gradient(self, x):
        x = as_point(x)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float).reshape(x.size)
        return numdiff.central_grad(self.fn, x, numdiff.step_first(x))

    def hessian(self, x):
        x = as_point(x)
        if self.hess is not None:
            return numdiff.symmetrize(np.asarray(self.hess(x), dtype=float))
        if self.grad is not None:
            jac = numdiff.central_jacobian(self.grad, x, numdiff.step_first(x))
            return numdiff.symmetrize(jac)
        return numdiff.symmetrize(
            numdiff.central_hess(self.fn, x, numdiff.step_second(x))
        )

    def third_tensor(self, x, require_analytic=False):
        x = as_point(x)
        if self.third is not None:
            return np.asarray(self.third(x), dtype=float)
        if require_analytic:
            raise MissingThirdDerivatives(
                "analytic third derivatives required at this point"
            )
        jac = numdiff.central_jacobian(self.hessian, x, numdiff.THIRD_ORDER_STEP)
        # jac[k] = d(Hess)/dx_k; re-order to T[i, j, k] and symmetrize i<->j.
        t = np.moveaxis(jac, 0, 2)
        return 0.5 * (t + np.swapaxes(t, 0, 1))

    def fourth_1d(self, x):
        """V'''' at a scalar point; falls back to differencing `third`."""
        x = as_point(x)
        if self.fourth is not None:
            return float(np.asarray(self.fourth(x)).reshape(()))
        h = numdiff.THIRD_ORDER_STEP
        tp = self.third_tensor(x + h)[0, 0, 0]
        tm = self.third_tensor(x - h)[0, 0, 0]
        return (tp - tm) / (2.0 * h)


def quadratic_potential(a, center=None):
    """V(x) = 0.5 <A (x-c), (x-c)> with all derivatives analytic."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    d = a.shape[0]
    c = np.zeros(d) if center is None else as_point(center, d)

    return PotentialField(
        fn=lambda x: 0.5 * float((x - c) @ a @ (x - c)),
        grad=lambda x: a @ (x - c),
        hess=lambda x: a.copy(),
        third=lambda x: np.zeros((d, d, d)),
        fourth=lambda x: np.zeros((d,) * 4),
        convex=numdiff.min_eigenvalue(a) >= 0,
    )


def gaussian_potential(d, sigma=1.0):
    return quadratic_potential(np.eye(d) / sigma**2)


def linear_potential(coeffs):
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    d = c.size
    return PotentialField(
        fn=lambda x: float(c @ x),
        grad=lambda x: c.copy(),
        hess=lambda x: np.zeros((d, d)),
        third=lambda x: np.zeros((d, d, d)),
        fourth=lambda x: np.zeros((d,) * 4),
        convex=True,
    )


def separable_potential(f, d1, d2, d3=None, d4=None, dim=1):
    """V(x) = sum_i f(x_i) from 1-D profile derivatives."""

    def third(x):
        t = np.zeros((dim, dim, dim))
        for i in range(dim):
            t[i, i, i] = d3(x[i])
        return t

    def fourth(x):
        t = np.zeros((dim,) * 4)
        for i in range(dim):
            t[i, i, i, i] = d4(x[i])
        return t

    return PotentialField(
        fn=lambda x: float(sum(f(xi) for xi in x)),
        grad=lambda x: np.array([d1(xi) for xi in x]),
        hess=lambda x: np.diag([d2(xi) for xi in x]),
        third=None if d3 is None else third,
        fourth=None if d4 is None else fourth,
    )


def power_potential(c, q, dim=1):
    """V(x) = c * sum x_i^q on the open positive orthant."""
    return separable_potential(
        lambda t: c * t**q,
        lambda t: c * q * t ** (q - 1),
        lambda t: c * q * (q - 1) * t ** (q - 2),
        lambda t: c * q * (q - 1) * (q - 2) * t ** (q - 3),
        lambda t: c * q * (q - 1) * (q - 2) * (q - 3) * t ** (q - 4),
        dim=dim,
    )


@dataclass
class MetricField:
    """Coordinate matrix field g(x) of a Riemannian metric.

    `deriv`, when given, supplies the analytic first derivatives; `domain`
    is an optional membership predicate used by stencil code to detect a
    step leaving the domain.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    domain: Optional[Callable[[np.ndarray], bool]] = None
    name: str = "metric"

    def value(self, x, check=True):
        x = as_point(x, self.dim)
        if self.domain is not None and not self.domain(x):
            raise StepTooLarge(f"{self.name}: point {x} outside the metric domain")
        g = np.asarray(self.fn(x), dtype=float)
        if check:
            return numdiff.check_psd_metric(g, x)
        return numdiff.symmetrize(g)

    def inverse(self, x):
        return np.linalg.inv(self.value(x))

    def derivative(self, x, h=None):
        """(d,d,d) array of d g / d x_k; analytic callback preferred."""
        x = as_point(x, self.dim)
        if self.deriv is not None:
            return np.asarray(self.deriv(x), dtype=float)
        if h is None:
            h = numdiff.step_first(x)
        return numdiff.central_jacobian(lambda y: self.value(y), x, h)


def euclidean_metric(d):
    eye = np.eye(d)
    zero = np.zeros((d, d, d))
    return MetricField(dim=d, fn=lambda x: eye, deriv=lambda x: zero, name="euclidean")


def conformal_metric(phi: PotentialField, d, domain=None):
    """g = exp(2*phi) * g_0 with analytic first derivatives from phi.grad."""

    def fn(x):
        return np.exp(2.0 * phi.value(x)) * np.eye(d)

    def deriv(x):
        gp = phi.gradient(x)
        scale = 2.0 * np.exp(2.0 * phi.value(x))
        return scale * gp[:, None, None] * np.eye(d)[None, :, :]

    return MetricField(dim=d, fn=fn, deriv=deriv, domain=domain, name="conformal")


def product_metric(profiles, domain=None):
    """g = diag(w_i(x_i)) from 1-D weight profiles (value, derivative) pairs."""
    d = len(profiles)

    def fn(x):
        return np.diag([p[0](x[i]) for i, p in enumerate(profiles)])

    def deriv(x):
        out = np.zeros((d, d, d))
        for i, p in enumerate(profiles):
            out[i, i, i] = p[1](x[i])
        return out

    return MetricField(dim=d, fn=fn, deriv=deriv, domain=domain, name="product")


def power_product_metric(p, d, domain=None):
    """g_ii = x_i^(-2p) on the open positive orthant."""
    prof = (lambda t: t ** (-2.0 * p), lambda t: -2.0 * p * t ** (-2.0 * p - 1.0))
    return product_metric([prof] * d, domain=domain)


def exp_product_metric(lams, domain=None):
    """g_ii = exp(-2*lam_i*x_i)."""
    profs = [
        (
            lambda t, l=l: np.exp(-2.0 * l * t),
            lambda t, l=l: -2.0 * l * np.exp(-2.0 * l * t),
        )
        for l in np.atleast_1d(lams)
    ]
    return product_metric(profs, domain=domain)


def hessian_metric(phi: PotentialField, d, domain=None):
    """g = D^2 Phi with derivatives from the third-derivative tensor."""

    def deriv(x):
        t = phi.third_tensor(x)
        return np.moveaxis(t, 2, 0)

    return MetricField(
        dim=d, fn=lambda x: phi.hessian(x), deriv=deriv, domain=domain, name="hessian"
    )


@dataclass
class QuadraticFormField:
    """Map from points to symmetric matrices (curvature tensors, RHS weights).

    `batch` may be supplied for vectorized evaluation over an (n, d) array of
    points; otherwise evaluation loops.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "form"

    def value(self, x):
        return numdiff.symmetrize(np.asarray(self.fn(as_point(x, self.dim)), float))

    def values(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.batch is not None:
            out = np.asarray(self.batch(points), dtype=float)
            return 0.5 * (out + np.swapaxes(out, 1, 2))
        return np.array([self.value(p) for p in points])

    def quad(self, points, vectors):
        """<W(x) v, v> row-wise for (n,d) points and vectors."""
        w = self.values(points)
        return np.einsum("nij,ni,nj->n", w, vectors, vectors)

    def inverse_field(self, name=None):
        return QuadraticFormField(
            dim=self.dim,
            fn=lambda x: np.linalg.inv(self.value(x)),
            batch=None if self.batch is None else (
                lambda pts: np.linalg.inv(self.values(pts))
            ),
            name=name or f"{self.name}^-1",
        )


def diagonal_form_field(d, weights, name="diag"):
    """W(x) = diag(w(x)) from a vectorized map (n, d) -> (n, d)."""

    def batch(pts):
        w = np.asarray(weights(pts), dtype=float)
        out = np.zeros((pts.shape[0], d, d))
        idx = np.arange(d)
        out[:, idx, idx] = w
        return out

    return QuadraticFormField(
        dim=d, fn=lambda x: np.diag(weights(x[None, :])[0]), batch=batch, name=name
    )


def scalar_form_field(d, scale, name="scalar*id"):
    """W(x) = s(x) * Id from a vectorized scalar map (n, d) -> (n,)."""

    def batch(pts):
        s = np.asarray(scale(pts), dtype=float)
        return s[:, None, None] * np.eye(d)[None, :, :]

    return QuadraticFormField(
        dim=d,
        fn=lambda x: float(scale(x[None, :])[0]) * np.eye(d),
        batch=batch,
        name=name,
    )


def constant_form_field(a, name="const"):
    a = np.atleast_2d(np.asarray(a, dtype=float))
    d = a.shape[0]
    return QuadraticFormField(
        dim=d,
        fn=lambda x: a,
        batch=lambda pts: np.broadcast_to(a, (pts.shape[0], d, d)).copy(),
        name=name,
    )
