"""Catalog of functional inequalities as executable instances.

Each entry turns one theorem into: an LHS functional kind (variance, entropy
of f^2, or Dirichlet L^2 mass), an interior RHS weight field with an explicit
constant, an optional boundary term with a free additive constant, and a set
of named hypothesis margins checked on sample points at instantiation.

Instances whose theorem only asserts an unspecified universal constant are
marked constant_known=False and are evaluated as ratio reports, never
pass/fail.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import families, measures, transport
from .bodies import ConeMeasureSampler, ConvexBody, Simplex
from .errors import HypothesisViolated, UnknownInequalityId
from .fields import (
    QuadraticFormField,
    constant_form_field,
    diagonal_form_field,
    scalar_form_field,
)

_HYPOTHESIS_SEED = 2025
_HYPOTHESIS_SAMPLES = 512


@dataclass
class BoundaryTerm:
    """Boundary part of an inequality: integral of weight(x) (f - C)^2 against
    the Hausdorff measure normalized by Vol(body); C free when free_constant."""

    body: ConvexBody
    weight: Callable  # (n, d) boundary points -> (n,) weights
    free_constant: bool = True


@dataclass
class InequalityInstance:
    id: str
    lhs_kind: str  # variance | entropy_of_square | l2_dirichlet
    measure: measures.MeasureSpec
    lhs_scale: float = 1.0
    rhs_weight: Optional[QuadraticFormField] = None
    rhs_constant: float = 1.0
    boundary: Optional[BoundaryTerm] = None
    gradient_surcharge: float = 0.0  # adds c * int |grad f|^2 dmu to the RHS
    rhs_fixed: Optional[float] = None  # f-independent RHS (plus stderr)
    rhs_fixed_err: float = 0.0
    constant_known: bool = True
    lipschitz_only: bool = False
    dirichlet: bool = False
    eval_mode: str = "standard"  # standard | fixed_rhs | poincare_ratio
    cone_sampler: Optional[ConeMeasureSampler] = None
    body: Optional[ConvexBody] = None
    hypothesis_report: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.measure.dim if self.measure is not None else self.body.dim


@dataclass
class CatalogEntry:
    id: str
    builder: Callable
    description: str
    constant_known: bool = True


def _margin(report, name, value, location=None, tol=1e-9, enforce=True):
    report[name] = float(value)
    if enforce and value < -tol:
        raise HypothesisViolated(name, location, float(value))


def _hypothesis_points(measure, n=_HYPOTHESIS_SAMPLES):
    return measure.sample(n, _HYPOTHESIS_SEED)


def _min_eig_batch(mats):
    return np.linalg.eigvalsh(mats)[:, 0]


# ---------------------------------------------------------------------------
# weight-field helpers
# ---------------------------------------------------------------------------


def _inverse_hessian_field(measure):
    if measure.hess_batch is None:
        hess = measure.potential.hessian
        return QuadraticFormField(
            dim=measure.dim, fn=lambda x: np.linalg.inv(hess(x)), name="(D2V)^-1"
        )
    return QuadraticFormField(
        dim=measure.dim,
        fn=lambda x: np.linalg.inv(measure.potential.hessian(x)),
        batch=lambda pts: np.linalg.inv(measure.hess_batch(pts)),
        name="(D2V)^-1",
    )


def _negdim_weight_field(measure):
    d = measure.dim

    def combined(pts):
        h = measure.hess_batch(pts)
        g = measure.grad_batch(pts)
        return h + np.einsum("ni,nj->nij", g, g) / (2.0 * d)

    return QuadraticFormField(
        dim=d,
        fn=lambda x: np.linalg.inv(
            measure.potential.hessian(x)
            + np.outer(measure.potential.gradient(x), measure.potential.gradient(x))
            / (2.0 * d)
        ),
        batch=lambda pts: np.linalg.inv(combined(pts)),
        name="negdim^-1",
    )


def _product_ricci_batch(measure, profile_kind, profile_param):
    """Vectorized closed-form generalized Ricci for product metrics over a
    product measure: D^2 V + diag(V_{x_i} u'/u - u''/u)."""

    def ratios(pts):
        if profile_kind == "power":
            p = profile_param
            return p / pts, p * (p - 1.0) / pts**2
        lam = profile_param
        return np.full_like(pts, lam), np.full_like(pts, lam * lam)

    def batch(pts):
        du_u, ddu_u = ratios(pts)
        diag = measure.grad_batch(pts) * du_u - ddu_u
        out = measure.hess_batch(pts).copy()
        idx = np.arange(pts.shape[1])
        out[:, idx, idx] += diag
        return out

    return batch


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _build_classical_bl(params):
    mu = params["measure"]
    report = {}
    pts = _hypothesis_points(mu)
    if mu.hess_batch is not None:
        eigs = _min_eig_batch(mu.hess_batch(pts))
    else:
        eigs = np.array([np.linalg.eigvalsh(mu.potential.hessian(p))[0] for p in pts])
    i = int(np.argmin(eigs))
    _margin(report, "hess_v_positive", eigs[i] , location=pts[i], tol=-1e-12)
    return InequalityInstance(
        id="classical_bl",
        lhs_kind="variance",
        measure=mu,
        rhs_weight=_inverse_hessian_field(mu),
        rhs_constant=1.0,
        hypothesis_report=report,
    )


def _build_generalized_bl(params):
    mu = params["measure"]
    fam = params["family"]
    report = {}
    if fam["type"] == "product_power":
        batch = _product_ricci_batch(mu, "power", fam["p"])
    elif fam["type"] == "product_exp":
        batch = _product_ricci_batch(mu, "exp", fam["lam"])
    else:
        raise UnknownInequalityId(f"generalized_bl family {fam['type']!r}")
    pts = _hypothesis_points(mu)
    eigs = _min_eig_batch(batch(pts))
    i = int(np.argmin(eigs))
    _margin(report, "ric_positive", eigs[i], location=pts[i], tol=-1e-12)
    weight = QuadraticFormField(
        dim=mu.dim,
        fn=lambda x: np.linalg.inv(batch(np.atleast_2d(x))[0]),
        batch=lambda p: np.linalg.inv(batch(p)),
        name="Ric^-1",
    )
    return InequalityInstance(
        id="generalized_bl",
        lhs_kind="variance",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=1.0,
        hypothesis_report=report,
        params={"family": fam},
    )


def _refined_q_1d(mu, nu):
    """Vectorized 1-D transport weight Q for the refined inequality."""
    mu_d, nu_d = mu.coord_densities[0], nu.coord_densities[0]
    phi = transport.transport_potential_1d(mu_d, nu_d)
    v1, v2 = mu.coord_d1[0], mu.coord_d2[0]
    w1, w2 = nu.coord_d1[0], nu.coord_d2[0]

    def q_scalar(pts):
        x = pts[:, 0]
        t = np.array([phi.gradient([xi])[0] for xi in x])
        tp = np.array([phi.hessian([xi])[0, 0] for xi in x])
        dv1 = np.vectorize(v1)(x)
        dv2 = np.vectorize(v2)(x)
        dw1 = np.vectorize(w1)(t)
        dw2 = np.vectorize(w2)(t)
        u = dv1 - tp * dw1
        return 0.5 * dv2 + 0.5 * tp * tp * dw2 + 0.25 * u * u

    return q_scalar, phi


def _build_refined_bl(params):
    mu, nu = params["measure"], params["target"]
    report = {}
    q_scalar, phi = _refined_q_1d(mu, nu)
    pts = _hypothesis_points(mu)
    qv = q_scalar(pts)
    i = int(np.argmin(qv))
    _margin(report, "q_positive", qv[i], location=pts[i], tol=-1e-12)
    tgrid = nu.coord_densities[0].ppf_many(np.linspace(1e-6, 1.0 - 1e-6, 257))
    wvals = np.vectorize(nu.coord_d2[0])(tgrid)
    _margin(report, "target_log_concave", float(wvals.min()), tol=1e-12)
    weight = scalar_form_field(1, lambda pts: 1.0 / q_scalar(pts), name="Q^-1")
    return InequalityInstance(
        id="refined_bl",
        lhs_kind="variance",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=1.0,
        hypothesis_report=report,
        params={"target": nu.kind},
    )


def _build_negdim_bl(params):
    mu = params["measure"]
    report = {}
    pts = _hypothesis_points(mu)
    eigs = _min_eig_batch(mu.hess_batch(pts))
    i = int(np.argmin(eigs))
    _margin(report, "log_concave", eigs[i], location=pts[i])
    combo = _negdim_weight_field(mu)
    ceigs = _min_eig_batch(np.linalg.inv(combo.values(pts)))
    j = int(np.argmin(ceigs))
    _margin(report, "weight_positive", ceigs[j], location=pts[j], tol=-1e-12)
    return InequalityInstance(
        id="negdim_bl",
        lhs_kind="variance",
        measure=mu,
        rhs_weight=combo,
        rhs_constant=2.0,
        hypothesis_report=report,
    )


def _compact_support_radius(nu):
    a, b = nu.coord_densities[0].support
    if not (np.isfinite(a) and np.isfinite(b)):
        raise HypothesisViolated("compact_support", None, -math.inf)
    return max(abs(a), abs(b))


def _build_compact_bl(params):
    nu = params["measure"]
    report = {}
    dens = nu.coord_densities[0]
    _margin(report, "barycenter", -abs(dens.mean()), tol=1e-6)
    r = params.get("R") or _compact_support_radius(nu)
    _margin(report, "support_radius", r - _compact_support_radius(nu), tol=1e-12)
    grid = np.linspace(*dens.support, 257)[1:-1]
    w2 = np.vectorize(nu.coord_d2[0])(grid) if nu.coord_d1[0] else np.zeros_like(grid)
    _margin(report, "log_concave", float(w2.min()), tol=1e-12)
    if params.get("run_ke", True):
        sol = transport.ke_solve_1d(dens, tol=params.get("ke_tol", 1e-8))
        _margin(report, "ke_residual", params.get("ke_tol", 1e-8) - sol.residual_sup)
        mask = sol.interior_mask(1e-4, 1.0 - 1e-4)
        _margin(
            report,
            "trace_bound",
            2.0 * r * r - float(sol.second_derivative()[mask].max()),
        )
    w2_field = nu.coord_d2[0]
    weight = scalar_form_field(
        1,
        lambda pts: 1.0
        / (1.0 / (2.0 * r * r) + np.vectorize(w2_field)(pts[:, 0])),
        name="(Id/2R^2 + D2W)^-1",
    )
    return InequalityInstance(
        id="compact_bl",
        lhs_kind="variance",
        measure=nu,
        rhs_weight=weight,
        rhs_constant=2.0,
        hypothesis_report=report,
        params={"R": r},
    )


def _build_payne_weinberger(params):
    nu = params["measure"]
    report = {}
    dens = nu.coord_densities[0]
    _margin(report, "barycenter", -abs(dens.mean()), tol=1e-6)
    r = params.get("R") or _compact_support_radius(nu)
    return InequalityInstance(
        id="payne_weinberger",
        lhs_kind="variance",
        measure=nu,
        rhs_weight=constant_form_field(np.eye(nu.dim)),
        rhs_constant=2.0 * r * r,
        hypothesis_report=report,
        params={"R": r},
    )


def _build_bakry_emery_lsi(params):
    mu = params["measure"]
    fam = params["family"]
    rho = params["rho"]
    report = {}
    d = mu.dim
    if fam["type"] == "product_power":
        p = fam["p"]
        ric = _product_ricci_batch(mu, "power", p)
        metric_diag = lambda pts: pts ** (-2.0 * p)
        inv_diag = lambda pts: pts ** (2.0 * p)
    elif fam["type"] == "product_exp":
        lam = fam["lam"]
        ric = _product_ricci_batch(mu, "exp", lam)
        metric_diag = lambda pts: np.exp(-2.0 * lam * pts)
        inv_diag = lambda pts: np.exp(2.0 * lam * pts)
    else:
        raise UnknownInequalityId(f"bakry_emery_lsi family {fam['type']!r}")
    pts = _hypothesis_points(mu)
    gap = ric(pts).copy()
    idx = np.arange(d)
    gap[:, idx, idx] -= rho * metric_diag(pts)
    eigs = _min_eig_batch(gap)
    i = int(np.argmin(eigs))
    _margin(report, "curvature_level", eigs[i], location=pts[i], tol=1e-7)
    weight = diagonal_form_field(d, inv_diag, name="g^-1")
    return InequalityInstance(
        id="bakry_emery_lsi",
        lhs_kind="entropy_of_square",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=2.0 / rho,
        hypothesis_report=report,
        params={"rho": rho, "family": fam},
    )


def _build_entropic_bl(params):
    mu = params["measure"]
    report = {}
    dens = mu.coord_densities[0]
    lo = dens.ppf(1e-7)
    hi = dens.ppf(1.0 - 1e-7)
    grid = np.linspace(lo, hi, 1025)
    vf = _coordinate_field_1d(mu)
    crit = transport.dual_criterion_from_potential(vf, grid)
    rho = params.get("rho")
    if rho is None:
        rho = crit.bisect_rho(enhanced=True)
    _margin(report, "criterion_margin", float(crit.margin(rho, enhanced=True).min()),
            tol=1e-8)
    _margin(report, "rho_positive", rho, tol=0.0)
    return InequalityInstance(
        id="entropic_bl",
        lhs_kind="entropy_of_square",
        measure=mu,
        rhs_weight=_inverse_hessian_field(mu),
        rhs_constant=2.0 / rho,
        hypothesis_report=report,
        params={"rho": rho},
    )


def _coordinate_field_1d(mu):
    """1-D PotentialField with numeric 3rd/4th derivatives from the
    coordinate callbacks of a product measure."""
    from .fields import PotentialField

    d1, d2 = mu.coord_d1[0], mu.coord_d2[0]

    def third(x):
        h = 1e-4 * (1.0 + abs(float(x[0])))
        return np.array(
            [[[(d2(float(x[0]) + h) - d2(float(x[0]) - h)) / (2 * h)]]]
        )

    def fourth(x):
        h = 2e-3 * (1.0 + abs(float(x[0])))
        return (d2(float(x[0]) + h) - 2 * d2(float(x[0])) + d2(float(x[0]) - h)) / h**2

    return PotentialField(
        fn=lambda x: mu.coord_densities[0].potential(float(x[0])),
        grad=lambda x: np.array([d1(float(x[0]))]),
        hess=lambda x: np.array([[d2(float(x[0]))]]),
        third=third,
        fourth=fourth,
    )


def _build_muq_lsi(params):
    mu = params["measure"]
    q, c = mu.params["q"], mu.params["c"]
    report = {}
    _margin(report, "q_in_range", min(q - 1.0, 2.0 - q), tol=1e-12)
    weight = diagonal_form_field(mu.dim, lambda pts: pts ** (2.0 - q), name="x^(2-q)")
    return InequalityInstance(
        id="muq_lsi",
        lhs_kind="entropy_of_square",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=4.0 / (c * q * q),
        hypothesis_report=report,
        params={"q": q, "c": c},
    )


def _build_bakry_t_lsi(params):
    """Image of the power-measure log-Sobolev bound under t_i = x_i^q.

    The substitution carries its Jacobian into the measure: the image law is
    the Gamma(1/q, c) product, and the transformed Dirichlet form is
    (4/c) int sum t_i f_{t_i}^2.
    """
    q = params["q"]
    c = params.get("c", 1.0)
    d = params["measure"].dim if "measure" in params else params["dim"]
    report = {}
    _margin(report, "q_in_range", min(q - 1.0, 2.0 - q), tol=1e-12)
    mu = measures.gamma_power_product(d, q, c)
    weight = diagonal_form_field(d, lambda pts: pts, name="t")
    return InequalityInstance(
        id="bakry_t_lsi",
        lhs_kind="entropy_of_square",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=4.0 / c,
        hypothesis_report=report,
        params={"q": q, "c": c},
    )


def _build_qgt2_lsi(params):
    q = params["q"]
    mode = params.get("potential", "modified")
    report = {}
    if q <= 2.0:
        raise HypothesisViolated("q_gt_2", None, q - 2.0)
    report["q_gt_2"] = q - 2.0
    weight = diagonal_form_field(
        1, lambda pts: np.minimum(1.0, pts ** (2.0 - q)), name="min(1,x^(2-q))"
    )
    if mode == "modified":
        mu = measures.flat_power_1d(q)
        fp = mu.flat_power
        # the binding region of the criterion sits just above the knee |y| = 1
        ymax = 50.0 ** (1.0 / (fp.p - 1.0)) + 10.0
        ygrid = np.concatenate(
            [np.linspace(0.0, 1.0, 513), 1.0 + np.geomspace(1e-9, ymax - 1.0, 8193)]
        )
        crit = fp.dual_criterion(ygrid)
        rho_max = crit.bisect_rho(enhanced=False)
        _margin(report, "rho_q_positive", rho_max, tol=0.0)
        _margin(report, "f_convex", float(crit.f_second.min()), tol=1e-8)
        # the derived weight is (V'')^{-1}; fold its comparison against the
        # stated weight min(1, x^(2-q)) into the effective level:
        # K_q = sup (V'')^{-1} / min(1, x^(2-q)), rho_q = rho_max / max(K_q, 1)
        xg = np.concatenate([np.linspace(1e-3, 10.0, 2001), np.geomspace(10.0, 1e5, 501)])
        ratio = (1.0 / np.vectorize(fp.d2)(xg)) / np.minimum(1.0, xg ** (2.0 - q))
        k_tail = (1.0 / fp.p) * (fp.p * (fp.p - 1.0)) ** ((fp.p - 2.0) / (fp.p - 1.0))
        k_q = max(float(ratio.max()), k_tail)
        _margin(report, "weight_comparison_finite", 1e6 - k_q)
        rho_q = rho_max / max(k_q, 1.0)
        return InequalityInstance(
            id="qgt2_lsi",
            lhs_kind="entropy_of_square",
            measure=mu,
            rhs_weight=weight,
            rhs_constant=2.0 / rho_q,
            hypothesis_report=report,
            params={"q": q, "rho_q": rho_q, "rho_max": rho_max, "K_q": k_q,
                    "potential": mode},
        )
    mu = measures.power_product(1, q)
    return InequalityInstance(
        id="qgt2_lsi",
        lhs_kind="entropy_of_square",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=1.0,
        constant_known=False,
        hypothesis_report=report,
        params={"q": q, "potential": mode},
    )


def _poly_orthant_checks(mu, report, lam=None, r_max=None):
    pts = _hypothesis_points(mu)
    if not mu.orthant:
        raise HypothesisViolated("orthant_unconditional", None, -1.0)
    report["orthant_unconditional"] = 1.0
    eigs = _min_eig_batch(mu.hess_batch(pts))
    i = int(np.argmin(eigs))
    _margin(report, "hess_v_psd", eigs[i], location=pts[i], tol=1e-10)
    g = mu.grad_batch(pts)
    level = 0.0 if lam is None else lam
    j = int(np.argmin(g.min(axis=1)))
    _margin(report, "v_xi_lower", float(g.min()) - level, location=pts[j], tol=1e-10)
    if r_max is not None:
        hi = max(d.support[1] for d in mu.coord_densities)
        _margin(report, "support_in_box", r_max - hi, tol=1e-12)
    return pts


def _build_poly_product(params):
    mu = params["measure"]
    part = params["part"]
    d = mu.dim
    report = {}
    if part == 1:
        p = params.get("p", 0.5)
        _poly_orthant_checks(mu, report)
        batch = _product_ricci_batch(mu, "power", p)
        pts = _hypothesis_points(mu)
        eigs = _min_eig_batch(batch(pts))
        _margin(report, "ric_positive", float(eigs.min()), tol=-1e-12)
        weight = QuadraticFormField(
            dim=d,
            fn=lambda x: np.linalg.inv(batch(np.atleast_2d(x))[0]),
            batch=lambda q: np.linalg.inv(batch(q)),
            name="Ric_p^-1",
        )
        return InequalityInstance(
            id="poly_product", lhs_kind="variance", measure=mu,
            rhs_weight=weight, rhs_constant=1.0,
            hypothesis_report=report, params={"part": 1, "p": p},
        )
    if part == 2:
        _poly_orthant_checks(mu, report)
        weight = diagonal_form_field(d, lambda pts: pts**2, name="x^2")
        return InequalityInstance(
            id="poly_product", lhs_kind="variance", measure=mu,
            rhs_weight=weight, rhs_constant=4.0,
            hypothesis_report=report, params={"part": 2},
        )
    if part == 3:
        lam = params["lam"]
        _poly_orthant_checks(mu, report, lam=lam)
        weight = diagonal_form_field(d, lambda pts: pts, name="x")
        return InequalityInstance(
            id="poly_product", lhs_kind="variance", measure=mu,
            rhs_weight=weight, rhs_constant=1.0 / lam,
            hypothesis_report=report, params={"part": 3, "lam": lam},
        )
    p = params["p"]
    if part == 4:
        r_max = params["R"]
        _poly_orthant_checks(mu, report, r_max=r_max)
        _margin(report, "p_in_range", min(p, 1.0 - p), tol=1e-12)
        rho = families.rho_p_bounded(p, r_max)
    elif part == 5:
        lam = params["lam"]
        _poly_orthant_checks(mu, report, lam=lam)
        _margin(report, "p_in_range", min(p - 0.5, 1.0 - p), tol=1e-12)
        rho = families.rho_p_slope(p, lam)
    else:
        raise UnknownInequalityId(f"poly_product part {part}")
    weight = diagonal_form_field(d, lambda pts: pts ** (2.0 * p), name="x^(2p)")
    return InequalityInstance(
        id="poly_product", lhs_kind="entropy_of_square", measure=mu,
        rhs_weight=weight, rhs_constant=2.0 / rho,
        hypothesis_report=report,
        params={"part": part, "p": p, "rho": rho, **{k: v for k, v in params.items()
                                                     if k in ("lam", "R")}},
    )


def _build_exp_product(params):
    mu = params["measure"]
    mode = params.get("mode", "corollary")
    d = mu.dim
    report = {}
    if mode == "corollary":
        lam = params["lam"]
        _poly_orthant_checks(mu, report, lam=lam)
        return InequalityInstance(
            id="exp_product", lhs_kind="variance", measure=mu,
            rhs_weight=constant_form_field(np.eye(d)),
            rhs_constant=4.0 / lam**2,
            hypothesis_report=report, params={"mode": mode, "lam": lam},
        )
    lams = np.atleast_1d(np.asarray(params["lams"], dtype=float))
    if lams.size == 1:
        lams = np.full(d, lams[0])
    pts = _poly_orthant_checks(mu, report)
    g = mu.grad_batch(pts)
    _margin(report, "v_xi_above_lambda", float((g - lams).min()), tol=1e-10)

    def weights(pts):
        g = mu.grad_batch(pts)
        return 1.0 / (lams * (g - lams))

    weight = QuadraticFormField(
        dim=d,
        fn=lambda x: np.diag(weights(np.atleast_2d(x))[0]),
        batch=lambda p: _diag_embed(weights(p)),
        name="1/(lam (V_xi - lam))",
    )
    return InequalityInstance(
        id="exp_product", lhs_kind="variance", measure=mu,
        rhs_weight=weight, rhs_constant=1.0,
        hypothesis_report=report, params={"mode": mode, "lams": lams.tolist()},
    )


def _diag_embed(w):
    n, d = w.shape
    out = np.zeros((n, d, d))
    idx = np.arange(d)
    out[:, idx, idx] = w
    return out


def _conditioned_orthant(mu):
    """Condition a symmetric product measure onto the positive orthant."""
    densities = []
    for dens in mu.coord_densities:
        densities.append(
            transport.Density1D(
                dens.raw_potential, (0.0, dens.support[1]), name=dens.name + "+"
            )
        )
    d1 = getattr(mu, "orthant_d1", None) or mu.coord_d1
    d2 = getattr(mu, "orthant_d2", None) or mu.coord_d2
    spec = measures._product_spec(
        mu.kind + "_orthant",
        densities,
        d1=d1,
        d2=d2,
        log_concave=mu.log_concave,
        orthant=True,
    )
    return spec


def _build_klartag_transfer(params):
    mu = params["measure"]
    report = {}
    if not mu.unconditional:
        raise HypothesisViolated("unconditional", None, -1.0)
    report["unconditional"] = 1.0
    mu_plus = _conditioned_orthant(mu)
    base_params = dict(params.get("base", {"id": "poly_product", "part": 2}))
    base_id = base_params.pop("id")
    base = instantiate(base_id, {**base_params, "measure": mu_plus})
    report.update({f"base:{k}": v for k, v in base.hypothesis_report.items()})
    surcharge = float(mu.coordinate_moment(2).max())
    base_weight = base.rhs_weight

    def batch(pts):
        return base_weight.values(np.abs(pts))

    weight = QuadraticFormField(
        dim=mu.dim,
        fn=lambda x: base_weight.value(np.abs(x)),
        batch=batch,
        name=base_weight.name + "(|x|)",
    )
    return InequalityInstance(
        id="klartag_transfer",
        lhs_kind="variance",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=base.rhs_constant,
        gradient_surcharge=surcharge,
        hypothesis_report=report,
        params={"base": {"id": base_id, **base_params}, "surcharge": surcharge},
    )


def _cone_second_moment_ratio(body, report, lam, seed=11):
    """E_sigma |x|^2/<x,n>^2, exact on the simplex, MC elsewhere."""
    if isinstance(body, Simplex):
        d = body.dim
        val = 2.0 * d / (d + 1.0)
        return val, 0.0
    sampler = ConeMeasureSampler(body, seed=seed)
    pts = sampler.sample(20000)
    vals = np.array([float(p @ p) / float(p @ body.normal(p)) ** 2 for p in pts])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


def _build_cone_variance(params):
    body = params["body"]
    lam = params.get("lam")
    d = body.dim
    report = {}
    _margin(report, "dimension_rule", d - 3.0, tol=1e-12)
    sampler = ConeMeasureSampler(body, seed=params.get("seed", 5))
    probe = sampler.sample(2000)
    from .bodies import diagonality_bounds

    lam_emp, lam_sup = diagonality_bounds(body, probe[:500])
    report["diagonality_inf"] = lam_emp
    if lam is None:
        lam = lam_emp
    _margin(report, "diagonality_level", lam_emp - lam, tol=1e-9)
    ratio, ratio_err = _cone_second_moment_ratio(body, report, lam)
    const = 4.0 / (lam**2 * (d - 1.0) * (d - 2.0))
    return InequalityInstance(
        id="cone_variance",
        lhs_kind="variance",
        measure=None,
        rhs_fixed=const * ratio,
        rhs_fixed_err=const * ratio_err,
        lipschitz_only=True,
        eval_mode="fixed_rhs",
        cone_sampler=ConeMeasureSampler(body, seed=params.get("seed", 5) + 1),
        body=body,
        hypothesis_report=report,
        params={"lam": lam},
    )


def _simplex_uniform_second_moment(body):
    d = body.dim
    return 2.0 * d / ((d + 1.0) * (d + 2.0)) * body.scale**2


def _build_l1_type(params):
    body = params["body"]
    d = body.dim
    report = {}
    _margin(report, "dimension_rule", d - 3.0, tol=1e-12)
    sampler = ConeMeasureSampler(body, seed=7)
    from .bodies import diagonality_bounds

    lam_emp, lam_sup = diagonality_bounds(body, sampler.sample(500))
    report["diagonality_inf"] = lam_emp
    report["diagonality_sup"] = lam_sup
    lam = params.get("lam", lam_emp)
    if isinstance(body, Simplex):
        i1 = _simplex_uniform_second_moment(body)
        i2 = 2.0 * d / (d + 1.0)
    else:
        mu = measures.uniform_body(body)
        pts = mu.sample(100000, 13)
        i1 = float((pts**2).sum(axis=1).mean())
        i2, _ = _cone_second_moment_ratio(body, report, lam)
    rhs_base = (i1 + i2 / lam**2) / d**2
    alt = (1.0 + (d + 2.0) * (lam_sup / lam) ** 2) / d**2 * i1
    return InequalityInstance(
        id="l1_type",
        lhs_kind="variance",
        measure=measures.uniform_body(body),
        rhs_fixed=rhs_base,
        constant_known=False,
        eval_mode="poincare_ratio",
        body=body,
        hypothesis_report=report,
        params={"lam": lam, "Lam": lam_sup, "rhs_diagonal_form": alt},
    )


def _radial_weight_field(d, theta, n_param):
    ev = families.radial_conformal_eigenvalues(theta, 0.0, n_param, d, 1.0)
    tc, rc = ev.tangential, ev.radial  # coefficients of 1/|x|^2

    def batch(pts):
        r2 = np.sum(pts**2, axis=1)
        xhat = pts / np.sqrt(r2)[:, None]
        outer = np.einsum("ni,nj->nij", xhat, xhat)
        eye = np.broadcast_to(np.eye(d), outer.shape)
        return r2[:, None, None] * ((eye - outer) / tc + outer / rc)

    return (
        QuadraticFormField(
            dim=d, fn=lambda x: batch(np.atleast_2d(x))[0], batch=batch,
            name="Ric_N^-1(radial)"
        ),
        tc,
        rc,
    )


def _ball_boundary_geometry(body, pts):
    r2 = np.sum(pts**2, axis=1)
    nrm = pts / np.sqrt(r2)[:, None]
    xn = np.einsum("ni,ni->n", pts, nrm)
    h0 = np.full(len(pts), (body.dim - 1) / body.radius)
    return r2, xn, h0


def _build_dim_bl_boundary(params):
    body = params["body"]
    n_param = params["N"]
    part = params.get("part", 1)
    d = body.dim
    report = {}
    if not n_param < 0.0:
        raise HypothesisViolated("n_negative", None, -abs(n_param))
    report["n_negative"] = -n_param
    theta = params.get("theta") or families.radial_theta_optimal(n_param, d)
    adm = families.radial_admissibility(theta, n_param, d)
    _margin(report, "tangential_nonneg", adm["tangential_nonneg"])
    _margin(report, "radial_nonneg", adm["radial_nonneg"])
    weight, tc, rc = _radial_weight_field(d, theta, n_param)
    _margin(report, "tangential_coef", tc, tol=1e-12)
    _margin(report, "radial_coef", rc, tol=1e-12)
    mu = measures.uniform_body(body)
    lhs_scale = n_param / (n_param - 1.0)
    boundary = None
    dirichlet = False
    if part == 1:

        def bweight(pts):
            r2, xn, h0 = _ball_boundary_geometry(body, pts)
            hgmu = h0 + theta * xn / r2
            return 1.0 / hgmu

        r0 = body.radius
        _margin(
            report,
            "boundary_mean_convex",
            (d - 1.0) / r0 + theta / r0,
            tol=1e-12,
        )
        boundary = BoundaryTerm(body=body, weight=bweight, free_constant=True)
    elif part == 2:
        # ball: II_0 = Id/R >= theta <x,n>/|x|^2 Id = (theta/R) Id iff theta <= 1
        _margin(report, "locally_convex", 1.0 - theta, tol=1e-12)
    elif part == 3:
        dirichlet = True
    else:
        raise UnknownInequalityId(f"dim_bl_boundary part {part}")
    return InequalityInstance(
        id="dim_bl_boundary",
        lhs_kind="l2_dirichlet" if part == 3 else "variance",
        measure=mu,
        lhs_scale=lhs_scale,
        rhs_weight=weight,
        rhs_constant=1.0,
        boundary=boundary,
        dirichlet=dirichlet,
        body=body,
        hypothesis_report=report,
        params={"N": n_param, "theta": theta, "part": part},
    )


def _build_hardy_boundary(params, instance_id="hardy_boundary"):
    body = params["body"]
    n_param = params.get("N", 0.0)
    d = body.dim
    report = {}
    if n_param > 0.0:
        raise HypothesisViolated("n_nonpositive", None, -n_param)
    report["n_nonpositive"] = -n_param
    _margin(report, "small_cond", (0.5 - _inv_or_zero(n_param)) * d - 3.0)
    mu = measures.uniform_body(body)
    const = 4.0 / (d * (d - n_param))
    weight = scalar_form_field(
        d, lambda pts: const * np.sum(pts**2, axis=1), name="4|x|^2/(d(d-N))"
    )

    def bweight(pts):
        r2, xn, h0 = _ball_boundary_geometry(body, pts)
        return 1.0 / (0.5 * (d - n_param) * xn / r2 - n_param * h0)

    r0 = body.radius
    _margin(
        report,
        "boundary_mean_convex",
        0.5 * (d - n_param) / r0 - n_param * (d - 1.0) / r0,
        tol=1e-12,
    )
    return InequalityInstance(
        id=instance_id,
        lhs_kind="variance",
        measure=mu,
        lhs_scale=1.0 / (1.0 - n_param),
        rhs_weight=weight,
        rhs_constant=1.0,
        boundary=BoundaryTerm(body=body, weight=bweight, free_constant=True),
        body=body,
        hypothesis_report=report,
        params={"N": n_param},
    )


def _inv_or_zero(n_param):
    return 0.0 if n_param == 0.0 else 1.0 / n_param


def _build_hardy_n0(params):
    return _build_hardy_boundary({**params, "N": 0.0}, instance_id="hardy_n0")


def _build_hardy_dirichlet(params):
    body = params["body"]
    d = body.dim
    mu = measures.uniform_body(body)
    weight = scalar_form_field(
        d, lambda pts: (4.0 / d**2) * np.sum(pts**2, axis=1), name="4|x|^2/d^2"
    )
    return InequalityInstance(
        id="hardy_dirichlet",
        lhs_kind="l2_dirichlet",
        measure=mu,
        rhs_weight=weight,
        rhs_constant=1.0,
        dirichlet=True,
        body=body,
        hypothesis_report={"dirichlet": 1.0},
        params={},
    )


def _build_strong_boundary(params):
    body = params["body"]
    theta = params["theta"]
    mode = params.get("mode", "variance")
    d = body.dim
    report = {}
    _margin(report, "dimension_rule", d - 8.0, tol=1e-12)
    _margin(report, "theta_range", min(theta, 0.5 - theta), tol=1e-12)
    # II_0 >= theta <x,n>/|x|^2 Id on the boundary (exact on balls)
    r0 = body.radius
    _margin(report, "ii_lower", 1.0 / r0 - theta / r0, tol=1e-12)
    mu = measures.uniform_body(body)
    if mode == "variance":
        weight = scalar_form_field(
            d, lambda pts: np.sum(pts**2, axis=1), name="|x|^2"
        )
        const = 2.0 / (d * theta)
        lhs_kind = "variance"
    else:
        weight = scalar_form_field(
            d, lambda pts: np.sum(pts**2, axis=1) ** theta, name="|x|^(2theta)"
        )
        const = 4.0 * body.radius_bound() ** (2.0 * (1.0 - theta)) / (d * theta)
        lhs_kind = "entropy_of_square"
    return InequalityInstance(
        id="strong_boundary",
        lhs_kind=lhs_kind,
        measure=mu,
        rhs_weight=weight,
        rhs_constant=const,
        body=body,
        hypothesis_report=report,
        params={"theta": theta, "mode": mode},
    )


def _build_one_lip_reduction(params):
    body = params["body"]
    return InequalityInstance(
        id="one_lip_reduction",
        lhs_kind="variance",
        measure=measures.uniform_body(body),
        rhs_fixed=None,
        constant_known=False,
        lipschitz_only=True,
        eval_mode="poincare_ratio",
        body=body,
        hypothesis_report={"convex_body": 1.0},
        params={"mode": "one_lip"},
    )


CATALOG = {
    e.id: e
    for e in [
        CatalogEntry("classical_bl", _build_classical_bl,
                     "variance bounded by the inverse-Hessian Dirichlet form"),
        CatalogEntry("generalized_bl", _build_generalized_bl,
                     "variance bound with the generalized Ricci weight"),
        CatalogEntry("refined_bl", _build_refined_bl,
                     "transport-refined variance bound (weight Q)"),
        CatalogEntry("negdim_bl", _build_negdim_bl,
                     "negative-dimensional variance bound, constant 2"),
        CatalogEntry("compact_bl", _build_compact_bl,
                     "compact-support variance bound through the 1-D fixed point"),
        CatalogEntry("payne_weinberger", _build_payne_weinberger,
                     "2R^2 spectral-gap estimate on a ball of radius R"),
        CatalogEntry("bakry_emery_lsi", _build_bakry_emery_lsi,
                     "log-Sobolev from a uniform curvature lower bound"),
        CatalogEntry("entropic_bl", _build_entropic_bl,
                     "entropic variance bound via the dual convexity criterion"),
        CatalogEntry("muq_lsi", _build_muq_lsi,
                     "weighted log-Sobolev for exp(-c sum x_i^q), q in [1,2]"),
        CatalogEntry("bakry_t_lsi", _build_bakry_t_lsi,
                     "weighted log-Sobolev for the exponential measure, weight t^(1/q)"),
        CatalogEntry("qgt2_lsi", _build_qgt2_lsi,
                     "q > 2 log-Sobolev with flattened potential", constant_known=False),
        CatalogEntry("poly_product", _build_poly_product,
                     "power-profile product-metric bounds, parts 1-5"),
        CatalogEntry("exp_product", _build_exp_product,
                     "exponential-profile product-metric bounds"),
        CatalogEntry("klartag_transfer", _build_klartag_transfer,
                     "orthant-to-full-space transfer of weighted variance bounds"),
        CatalogEntry("cone_variance", _build_cone_variance,
                     "cone-measure variance of 1-Lipschitz functions"),
        CatalogEntry("l1_type", _build_l1_type,
                     "diagonal-boundary Poincare bound", constant_known=False),
        CatalogEntry("dim_bl_boundary", _build_dim_bl_boundary,
                     "dimensional boundary bound via the radial conformal metric"),
        CatalogEntry("hardy_boundary", _build_hardy_boundary,
                     "Hardy-type bound with mean-curvature boundary term"),
        CatalogEntry("hardy_dirichlet", _build_hardy_dirichlet,
                     "classical Hardy bound under vanishing boundary data"),
        CatalogEntry("hardy_n0", _build_hardy_n0,
                     "Hardy-type bound, zero generalized dimension"),
        CatalogEntry("strong_boundary", _build_strong_boundary,
                     "variance/entropy bounds for strongly convex boundaries"),
        CatalogEntry("one_lip_reduction", _build_one_lip_reduction,
                     "Poincare vs worst 1-Lipschitz variance",
                     constant_known=False),
    ]
}


def instantiate(inequality_id, params) -> InequalityInstance:
    """Build a fully evaluable instance; raises HypothesisViolated with the
    failing hypothesis name, location and margin when a check fails."""
    entry = CATALOG.get(inequality_id)
    if entry is None:
        raise UnknownInequalityId(inequality_id)
    inst = entry.builder(params)
    inst.constant_known = inst.constant_known and entry.constant_known
    return inst


def hypothesis_margins(instance: InequalityInstance, points=None):
    """Hypothesis margins recorded at instantiation, optionally re-evaluated
    pointwise margins over a user grid for weight positivity."""
    report = dict(instance.hypothesis_report)
    if points is not None and instance.rhs_weight is not None:
        vals = instance.rhs_weight.values(np.atleast_2d(points))
        report["weight_min_eig_on_grid"] = float(_min_eig_batch(vals).min())
    return report


def manifest():
    """Machine-readable catalog manifest."""
    return {
        eid: {
            "description": e.description,
            "constant_known": e.constant_known,
        }
        for eid, e in sorted(CATALOG.items())
    }
