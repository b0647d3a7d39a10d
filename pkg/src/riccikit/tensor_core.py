"""Coordinate differential geometry for arbitrary metric fields.

Everything here works from the metric matrix g(x) alone (plus optional
analytic first derivatives), so it doubles as the universal finite-difference
oracle against which the closed-form family formulas are validated.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import numdiff
from .errors import InvalidDimensionParameter, StepTooLarge
from .fields import MetricField, PotentialField, as_point


@dataclass
class ChristoffelTensor:
    """Gamma[m, i, j] = Gamma^m_{ij}, symmetric in (i, j)."""

    point: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.gamma = 0.5 * (self.gamma + np.swapaxes(self.gamma, 1, 2))


@dataclass
class CurvaturePoint:
    """Geometric and generalized Ricci tensors evaluated at one point.

    `n_param` is the extended-real generalized dimension; ric_gmu_n equals
    ric_gmu exactly when it is infinite.
    """

    x: np.ndarray
    ric_g: np.ndarray
    ric_gmu: np.ndarray
    ric_gmu_n: np.ndarray
    n_param: float


def christoffel(metric: MetricField, x, h=None) -> ChristoffelTensor:
    """Gamma^m_{ij} = 1/2 g^{mk} (d_j g_ki + d_i g_kj - d_k g_ij).

    Uses analytic metric derivatives when the field supplies them, central
    differences with h = 1e-4*(1+|x|) otherwise.
    """
    x = as_point(x, metric.dim)
    ginv = np.linalg.inv(metric.value(x))
    dg = metric.derivative(x, h=h)  # dg[k] = d g / d x_k
    # term[k, i, j] = d_j g_ki + d_i g_kj - d_k g_ij
    term = (
        np.einsum("jki->kij", dg) + np.einsum("ikj->kij", dg) - dg
    )
    gamma = 0.5 * np.einsum("mk,kij->mij", ginv, term)
    return ChristoffelTensor(point=x, gamma=gamma)


def riemannian_hessian(metric: MetricField, f: PotentialField, x, h=None):
    """(Hess_g f)_ij = d^2_ij f - Gamma^k_ij d_k f."""
    x = as_point(x, metric.dim)
    gam = christoffel(metric, x, h=h).gamma
    hess = f.hessian(x)
    grad = f.gradient(x)
    return numdiff.symmetrize(hess - np.einsum("kij,k->ij", gam, grad))


def geometric_ricci_fd(metric: MetricField, x, h=None):
    """Ricci tensor from finite differences of the Christoffel symbols.

    Ric_jk = d_i Gamma^i_jk - d_j Gamma^i_ik
             + Gamma^i_im Gamma^m_jk - Gamma^i_jm Gamma^m_ik,
    symmetrized on output.  The outer differentiation step defaults to
    1e-3*(1+|x|).
    """
    x = as_point(x, metric.dim)
    d = metric.dim
    if h is None:
        h = numdiff.step_second(x)
    gam0 = christoffel(metric, x).gamma
    dgam = np.empty((d, d, d, d))  # dgam[a] = d Gamma / d x_a
    for a in range(d):
        e = np.zeros(d)
        e[a] = h
        try:
            gp = christoffel(metric, x + e).gamma
            gm = christoffel(metric, x - e).gamma
        except StepTooLarge:
            raise StepTooLarge(
                f"Ricci stencil of width {h:.2e} leaves the domain at {x}"
            )
        dgam[a] = (gp - gm) / (2.0 * h)

    ric = (
        np.einsum("iijk->jk", dgam)
        - np.einsum("jiik->jk", dgam)
        + np.einsum("iim,mjk->jk", gam0, gam0)
        - np.einsum("ijm,mik->jk", gam0, gam0)
    )
    return numdiff.symmetrize(ric)


def lebesgue_to_volume_potential(metric: MetricField, v: PotentialField, x):
    """P(x) with exp(-P) vol_g = exp(-V) dx, i.e. P = V + 1/2 log det g."""
    x = as_point(x, metric.dim)
    sign, logdet = np.linalg.slogdet(metric.value(x))
    return v.value(x) + 0.5 * logdet


def volume_potential_field(metric: MetricField, v: PotentialField) -> PotentialField:
    """P = V + 1/2 log det g as a PotentialField.

    The log-det part is differentiated with the shared stencil discipline;
    its gradient uses tr(g^{-1} dg) when analytic metric derivatives exist.
    """

    def half_logdet(x):
        sign, logdet = np.linalg.slogdet(metric.value(x))
        return 0.5 * logdet

    def grad(x):
        x = as_point(x, metric.dim)
        gv = v.gradient(x)
        if metric.deriv is not None:
            ginv = np.linalg.inv(metric.value(x))
            dg = metric.derivative(x)
            return gv + 0.5 * np.einsum("ij,kji->k", ginv, dg)
        return gv + numdiff.central_grad(half_logdet, x, numdiff.step_first(x))

    def hess(x):
        x = as_point(x, metric.dim)
        return v.hessian(x) + numdiff.central_hess(
            half_logdet, x, numdiff.step_second(x)
        )

    return PotentialField(
        fn=lambda x: v.value(x) + half_logdet(as_point(x, metric.dim)),
        grad=grad,
        hess=hess,
    )


def check_dimension_param(n_param, d, exclude_d=False):
    """Reject generalized dimensions in [1, d); optionally reject N == d."""
    if math.isinf(n_param):
        return
    if 1.0 <= n_param < d:
        raise InvalidDimensionParameter(
            f"N = {n_param} lies in the forbidden range [1, {d})"
        )
    if exclude_d and n_param == d:
        raise InvalidDimensionParameter(f"N = d = {d} is excluded for this formula")


def generalized_ricci(
    metric: MetricField, v: PotentialField, x, n_param=math.inf
) -> CurvaturePoint:
    """Ric_g + Hess_g P and its N-dimensional variant.

    V is the potential with respect to Lebesgue measure and is converted
    internally to the volume-measure potential P = V + 1/2 log det g; the
    N-variant subtracts (dP tensor dP)/(N - d).
    """
    x = as_point(x, metric.dim)
    d = metric.dim
    check_dimension_param(n_param, d)

    ric_g = geometric_ricci_fd(metric, x)
    p = volume_potential_field(metric, v)
    ric_gmu = numdiff.symmetrize(ric_g + riemannian_hessian(metric, p, x))
    if math.isinf(n_param):
        ric_n = ric_gmu.copy()
    else:
        gp = p.gradient(x)
        ric_n = numdiff.symmetrize(ric_gmu - np.outer(gp, gp) / (n_param - d))
    return CurvaturePoint(
        x=x, ric_g=ric_g, ric_gmu=ric_gmu, ric_gmu_n=ric_n, n_param=n_param
    )
