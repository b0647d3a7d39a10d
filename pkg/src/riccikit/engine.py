"""Numerical evaluation of inequality instances.

Both sides are estimated from i.i.d. samples with bootstrap standard errors;
boundary terms use exact moments or antithetic Monte Carlo on the boundary;
the 1-D Sturm-Liouville eigensolver provides exact spectral-gap oracles.

Determinism contract: a report is a pure function of (instance, suite,
budget, seed).  Sampling is sharded into a fixed number of logical shards
regardless of worker count, and every reduction runs in fixed shard order,
so worker parallelism cannot change a single bit of the output.
"""

import math
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .bodies import Ball, Simplex
from .catalog import InequalityInstance
from .errors import (
    BoundaryQuadratureFailure,
    DegenerateSample,
    EigensolveFailure,
    HypothesisViolated,
)

BOOTSTRAP_RESAMPLES = 200
REL_TOL = 0.02  # relative slack allowance in the pass/fail rule
SIGMA_FACTOR = 3.0


@dataclass
class TestFunction:
    """A C^1 test function with vectorized value/gradient callbacks."""

    id: str
    fn: Callable  # (n, d) -> (n,)
    grad: Callable  # (n, d) -> (n, d)
    lipschitz_bound: Optional[float] = None
    vanishes_on_boundary: bool = False

    def self_test(self, points, tol=1e-6):
        """Check grad against central differences of fn at the given points."""
        pts = np.atleast_2d(points)
        g = self.grad(pts)
        h = 1e-6
        for k in range(pts.shape[1]):
            e = np.zeros(pts.shape[1])
            e[k] = h
            fd = (self.fn(pts + e) - self.fn(pts - e)) / (2.0 * h)
            if np.max(np.abs(fd - g[:, k])) > tol * (1.0 + np.max(np.abs(g))):
                return False
        return True


def default_suite(d, seed=0, n_random=5) -> List[TestFunction]:
    """Coordinates, |x|^2, the diagonal direction, a coordinate product,
    low-frequency cosines of the diagonal, and seeded random cubics."""
    funcs = []
    sq = math.sqrt(d)

    def coord(i):
        e = np.zeros(d)
        e[i] = 1.0
        return TestFunction(
            id=f"x{i + 1}",
            fn=lambda p: p[:, i],
            grad=lambda p, e=e: np.broadcast_to(e, p.shape).copy(),
            lipschitz_bound=1.0,
        )

    funcs.append(coord(0))
    if d > 1:
        funcs.append(coord(d - 1))
    funcs.append(
        TestFunction(
            id="|x|^2",
            fn=lambda p: np.sum(p**2, axis=1),
            grad=lambda p: 2.0 * p,
        )
    )
    if d > 1:
        diag = np.full(d, 1.0 / sq)
        funcs.append(
            TestFunction(
                id="sum_x",
                fn=lambda p: p @ diag,
                grad=lambda p: np.broadcast_to(diag, p.shape).copy(),
                lipschitz_bound=1.0,
            )
        )
        funcs.append(
            TestFunction(
                id="x1*x2",
                fn=lambda p: p[:, 0] * p[:, 1],
                grad=lambda p: np.column_stack(
                    [p[:, 1], p[:, 0]] + [np.zeros(len(p))] * (d - 2)
                ),
            )
        )
    for k in (1, 2):
        w = k * math.pi / sq
        funcs.append(
            TestFunction(
                id=f"cos{k}",
                fn=lambda p, w=w: np.cos(w * p.sum(axis=1)),
                grad=lambda p, w=w: (
                    -w * np.sin(w * p.sum(axis=1))[:, None]
                ) * np.ones((1, d)),
                lipschitz_bound=k * math.pi,
            )
        )
    rng = np.random.default_rng(seed)
    for j in range(n_random):
        a = rng.standard_normal(d)
        b = rng.standard_normal(d)
        c = rng.standard_normal(d)
        al, be = 0.5 * rng.uniform(), 0.2 * rng.uniform()

        def fn(p, a=a, b=b, c=c, al=al, be=be):
            return p @ a + al * (p @ b) ** 2 + be * (p @ c) ** 3

        def grad(p, a=a, b=b, c=c, al=al, be=be):
            return (
                np.broadcast_to(a, p.shape).copy()
                + 2.0 * al * (p @ b)[:, None] * b
                + 3.0 * be * ((p @ c) ** 2)[:, None] * c
            )

        funcs.append(TestFunction(id=f"poly3_{j}", fn=fn, grad=grad))
    return funcs


def dirichlet_wrap(f: TestFunction, body) -> TestFunction:
    """Multiply by (1 - gauge^2) so the function vanishes on the boundary."""

    def fn(p):
        g = body.gauge_many(p)
        return (1.0 - g**2) * f.fn(p)

    def grad(p):
        g = body.gauge_many(p)
        gg = np.array([body.gauge_grad(x) for x in p])
        return (1.0 - g**2)[:, None] * f.grad(p) - 2.0 * (g * f.fn(p))[:, None] * gg

    return TestFunction(
        id=f.id + "*(1-p^2)", fn=fn, grad=grad, vanishes_on_boundary=True
    )


def lipschitz_normalize(f: TestFunction, points) -> TestFunction:
    """Scale to an (empirically) 1-Lipschitz function over the given region."""
    if f.lipschitz_bound is not None:
        scale = f.lipschitz_bound
    else:
        scale = float(np.linalg.norm(f.grad(np.atleast_2d(points)), axis=1).max())
    scale = max(scale, 1e-12)
    return TestFunction(
        id=f.id + "/L",
        fn=lambda p: f.fn(p) / scale,
        grad=lambda p: f.grad(p) / scale,
        lipschitz_bound=1.0,
    )


# ---------------------------------------------------------------------------
# sampling and estimation
# ---------------------------------------------------------------------------


def sample_measure(spec, n, seed, workers=1):
    """n i.i.d. points from a MeasureSpec; shard layout is fixed so the
    result is independent of `workers`."""
    from .measures import N_SHARDS

    if n < 100:
        raise DegenerateSample(f"budget {n} < 100")
    seqs = np.random.SeedSequence(seed).spawn(N_SHARDS)
    counts = [n // N_SHARDS] * N_SHARDS
    counts[-1] += n - sum(counts)

    def one(i):
        return spec.sampler(counts[i], np.random.default_rng(seqs[i]))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(N_SHARDS)))
    else:
        parts = [one(i) for i in range(N_SHARDS)]
    return np.concatenate(parts, axis=0)


def _row_seed(seed, *labels):
    h = zlib.crc32("|".join(str(x) for x in labels).encode())
    return np.random.SeedSequence([seed, h])


def _bootstrap(stat, columns, rng, n_resamples=BOOTSTRAP_RESAMPLES):
    """Standard error of stat(columns...) under i.i.d. resampling."""
    n = len(columns[0])
    vals = np.empty(n_resamples)
    for b in range(n_resamples):
        idx = rng.integers(0, n, size=n)
        vals[b] = stat(*(c[idx] for c in columns))
    return float(vals.std(ddof=1))


def _variance_stat(f_vals):
    n = len(f_vals)
    return float(f_vals.var(ddof=0) * n / (n - 1))


def _entropy_sq_stat(f_vals):
    t = np.clip(f_vals**2, 1e-300, None)
    m = t.mean()
    return float((t * np.log(t)).mean() - m * math.log(m))


def estimate_lhs(instance: InequalityInstance, f: TestFunction, samples, seed=0):
    """LHS functional (variance, entropy of the square, or L^2 mass) with a
    bootstrap standard error; entropy recenters f first."""
    if len(samples) < 100:
        raise DegenerateSample("need at least 100 samples")
    vals = f.fn(samples)
    rng = np.random.default_rng(_row_seed(seed, instance.id, f.id, "lhs"))
    if instance.lhs_kind == "variance":
        est = _variance_stat(vals)
        err = _bootstrap(_variance_stat, [vals], rng)
    elif instance.lhs_kind == "entropy_of_square":
        vals = vals - vals.mean()
        est = _entropy_sq_stat(vals)
        err = _bootstrap(_entropy_sq_stat, [vals], rng)
    elif instance.lhs_kind == "l2_dirichlet":
        sq = vals**2
        est = float(sq.mean())
        err = float(sq.std(ddof=1) / math.sqrt(len(sq)))
    else:
        raise ValueError(f"unknown lhs kind {instance.lhs_kind!r}")
    return instance.lhs_scale * est, instance.lhs_scale * err


def boundary_quadrature(instance, f: TestFunction, n, seed):
    """Boundary term: (1/Vol) min_C int w(x) (f-C)^2 dH^{d-1}, with the free
    constant minimized in closed form (C* = int w f / int w)."""
    term = instance.boundary
    body = term.body
    if isinstance(body, Ball):
        rng = np.random.default_rng(_row_seed(seed, instance.id, f.id, "bnd"))
        pts = body.sample_boundary(n, rng, antithetic=True)
        scale = body.surface_area() / body.volume()
    elif isinstance(body, Simplex):
        rng = np.random.default_rng(_row_seed(seed, instance.id, f.id, "bnd"))
        pts = body.sample_facet(n, rng)
        scale = body.facet_area() / body.volume()
    else:
        raise BoundaryQuadratureFailure(
            f"no boundary quadrature for body kind {body.kind!r}"
        )
    w = np.asarray(term.weight(pts), dtype=float)
    fv = f.fn(pts)
    if term.free_constant:
        def stat(w, fv):
            mw = w.mean()
            return float(
                (w * fv**2).mean() - (w * fv).mean() ** 2 / mw
            ) * scale
    else:
        def stat(w, fv):
            return float((w * fv**2).mean()) * scale
    est = stat(w, fv)
    err = _bootstrap(stat, [w, fv], rng)
    return est, err


def estimate_rhs(instance: InequalityInstance, f: TestFunction, samples, seed=0,
                 boundary_n=None, weight_values=None):
    """Interior weighted Dirichlet energy plus surcharge and boundary terms.

    `weight_values` may carry precomputed (n, d, d) weight matrices for the
    sample set.  Raises HypothesisViolated if the weight fails PSD at a
    sample point.
    """
    if instance.eval_mode == "fixed_rhs":
        return instance.rhs_fixed, instance.rhs_fixed_err
    grads = f.grad(samples)
    if weight_values is None:
        vals = instance.rhs_weight.quad(samples, grads)
    else:
        vals = np.einsum("nij,ni,nj->n", weight_values, grads, grads)
    if np.any(vals < -1e-10):
        i = int(np.argmin(vals))
        raise HypothesisViolated("rhs_weight_psd", samples[i], float(vals[i]))
    per_sample = instance.rhs_constant * vals
    if instance.gradient_surcharge:
        per_sample = per_sample + instance.gradient_surcharge * np.sum(
            grads**2, axis=1
        )
    est = float(per_sample.mean())
    err = float(per_sample.std(ddof=1) / math.sqrt(len(per_sample)))
    if instance.boundary is not None:
        bn = boundary_n or len(samples)
        best, berr = boundary_quadrature(instance, f, bn, seed)
        est += best
        err = math.hypot(err, berr)
    return est, err


def psd_verify(form_field, points):
    """Smallest eigenvalue of a matrix field over the points, with location."""
    vals = form_field.values(np.atleast_2d(points))
    eigs = np.linalg.eigvalsh(vals)[:, 0]
    i = int(np.argmin(eigs))
    return float(eigs[i]), np.atleast_2d(points)[i]


# ---------------------------------------------------------------------------
# 1-D spectral gap oracle
# ---------------------------------------------------------------------------


def spectral_gap_1d(potential, interval, n=4096, richardson=True):
    """First nonzero Neumann eigenvalue of the weighted Laplacian
    -exp(V) d/dx (exp(-V) d/dx) on an interval.

    Three-point flux discretization; Richardson extrapolation over n and 2n.
    Returns (lambda_1, 1/lambda_1).
    """
    if n < 256:
        raise EigensolveFailure("need at least 256 grid points")

    def solve(m):
        x = np.linspace(interval[0], interval[1], m)
        h = x[1] - x[0]
        v = np.array([float(potential(t)) for t in x])
        v = v - v.min()
        w = np.exp(-v)
        wh = np.exp(-0.5 * (v[1:] + v[:-1]))  # midpoint weights
        diag = np.zeros(m)
        diag[:-1] += wh
        diag[1:] += wh
        diag /= h
        off = -wh / h
        mass = np.full(m, h)
        mass[0] = mass[-1] = 0.5 * h
        mass *= w
        dscale = 1.0 / np.sqrt(mass)
        t_diag = diag * dscale**2
        t_off = off * dscale[:-1] * dscale[1:]
        try:
            eigs = eigh_tridiagonal(
                t_diag, t_off, select="i", select_range=(0, 1), eigvals_only=True
            )
        except Exception as exc:  # pragma: no cover
            raise EigensolveFailure(str(exc)) from exc
        return eigs[1]

    lam = solve(n)
    if richardson:
        lam2 = solve(2 * n)
        lam = (4.0 * lam2 - lam) / 3.0
    if lam <= 0:
        raise EigensolveFailure(f"nonpositive spectral gap {lam}")
    return float(lam), float(1.0 / lam)


# ---------------------------------------------------------------------------
# report assembly
# ---------------------------------------------------------------------------


@dataclass
class ReportRow:
    suite: str
    inequality: str
    dim: int
    function: str
    lhs: float
    lhs_err: float
    rhs: float
    rhs_err: float
    slack: float
    status: str
    seed: int
    n: int

    def as_dict(self):
        return {
            "suite": self.suite,
            "inequality": self.inequality,
            "dim": self.dim,
            "function": self.function,
            "lhs": self.lhs,
            "lhs_err": self.lhs_err,
            "rhs": self.rhs,
            "rhs_err": self.rhs_err,
            "slack": self.slack,
            "status": self.status,
            "seed": self.seed,
            "n": self.n,
        }


@dataclass
class VerificationReport:
    rows: List[ReportRow] = field(default_factory=list)
    attachments: dict = field(default_factory=dict)

    def add(self, row):
        self.rows.append(row)

    def extend(self, other):
        self.rows.extend(other.rows)
        self.attachments.update(other.attachments)

    @property
    def failed(self):
        return [r for r in self.rows if r.status == "fail"]

    @property
    def errored(self):
        return [r for r in self.rows if r.status == "error"]

    def summary(self):
        by = {}
        for r in self.rows:
            by[r.status] = by.get(r.status, 0) + 1
        return by


def _status(lhs, lhs_err, rhs, rhs_err, constant_known):
    if not constant_known:
        return "report-only", rhs - lhs
    slack = rhs - lhs
    tol = SIGMA_FACTOR * math.hypot(lhs_err, rhs_err) + REL_TOL * abs(rhs)
    return ("pass" if slack >= -tol else "fail"), slack


def check_inequality(
    instance: InequalityInstance,
    functions=None,
    budget=200000,
    seed=0,
    workers=1,
    suite_name="adhoc",
) -> VerificationReport:
    """One report row per test function, following the slack rule
    fail iff slack < -(3 sigma + rel_tol * rhs)."""
    report = VerificationReport()
    d = instance.dim
    report.attachments[f"{instance.id}:d={d}:hypotheses"] = dict(
        instance.hypothesis_report
    )

    if instance.eval_mode == "fixed_rhs":
        from .bodies import ConeMeasureSampler

        sampler = ConeMeasureSampler(
            instance.body, seed=int(_row_seed(seed, instance.id, "cone").entropy[1])
        )
        samples = sampler.sample(budget)
    else:
        samples = sample_measure(instance.measure, budget, seed, workers=workers)

    if functions is None:
        functions = default_suite(d, seed=seed)
    prepared = []
    for f in functions:
        if instance.dirichlet:
            prepared.append(dirichlet_wrap(f, instance.body))
        elif instance.lipschitz_only:
            prepared.append(lipschitz_normalize(f, samples[:4096]))
        else:
            prepared.append(f)

    weight_values = None
    if instance.eval_mode == "standard" and instance.rhs_weight is not None:
        weight_values = instance.rhs_weight.values(samples)

    ratios = []
    lip_variances = []
    for f in prepared:
        try:
            lhs, lhs_err = estimate_lhs(instance, f, samples, seed=seed)
            if instance.eval_mode == "poincare_ratio":
                grads = f.grad(samples)
                energy = float(np.sum(grads**2, axis=1).mean())
                quotient = lhs / max(energy, 1e-300)
                ratios.append(quotient)
                if instance.lipschitz_only:
                    lip_variances.append(lhs)
                rhs = instance.rhs_fixed if instance.rhs_fixed is not None else 0.0
                row = ReportRow(
                    suite=suite_name, inequality=instance.id, dim=d,
                    function=f.id, lhs=quotient, lhs_err=lhs_err / max(energy, 1e-300),
                    rhs=rhs, rhs_err=0.0, slack=rhs - quotient,
                    status="report-only", seed=seed, n=budget,
                )
            else:
                rhs, rhs_err = estimate_rhs(
                    instance, f, samples, seed=seed, weight_values=weight_values
                )
                status, slack = _status(
                    lhs, lhs_err, rhs, rhs_err, instance.constant_known
                )
                row = ReportRow(
                    suite=suite_name, inequality=instance.id, dim=d,
                    function=f.id, lhs=lhs, lhs_err=lhs_err,
                    rhs=rhs, rhs_err=rhs_err, slack=slack,
                    status=status, seed=seed, n=budget,
                )
        except HypothesisViolated as exc:
            row = ReportRow(
                suite=suite_name, inequality=instance.id, dim=d,
                function=f.id, lhs=math.nan, lhs_err=math.nan,
                rhs=math.nan, rhs_err=math.nan, slack=math.nan,
                status="error", seed=seed, n=budget,
            )
            report.attachments[f"{instance.id}:{f.id}:error"] = str(exc)
        report.add(row)

    if instance.eval_mode == "poincare_ratio" and ratios:
        key = f"{instance.id}:d={d}"
        cp_lb = max(ratios)
        info = {
            "poincare_lower_bound": cp_lb,
            "rhs_base": instance.rhs_fixed,
            "fitted_ratio": (
                cp_lb / instance.rhs_fixed if instance.rhs_fixed else None
            ),
        }
        if lip_variances:
            sup_var = max(lip_variances)
            info["sup_one_lip_variance"] = sup_var
            info["fitted_ratio"] = cp_lb / sup_var
        report.attachments[key] = info
    return report
