"""Measure specifications: normalized potentials, samplers, and moments.

Product measures are built from per-coordinate `Density1D` objects; sampling
goes through the coordinate quantile functions, so a sample set is a
deterministic function of (spec, n, seed).  Uniform measures on bodies defer
to the body's own sampler.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .bodies import Box, ConvexBody, body_from_spec
from .errors import NonNormalizable
from .fields import PotentialField
from .transport import Density1D, FlattenedPowerPotential

N_SHARDS = 8  # logical sampling shards, independent of worker count


@dataclass
class MeasureSpec:
    """A sampleable probability measure with derivative access to its
    potential.  `grad_batch`/`hess_batch` are vectorized over (n, d) arrays."""

    kind: str
    dim: int
    potential: PotentialField
    sampler: Callable
    body: Optional[ConvexBody] = None
    coord_densities: Optional[List[Density1D]] = None
    coord_d1: Optional[List[Callable]] = None
    coord_d2: Optional[List[Callable]] = None
    grad_batch: Optional[Callable] = None
    hess_batch: Optional[Callable] = None
    log_concave: bool = False
    unconditional: bool = False
    orthant: bool = False
    params: dict = field(default_factory=dict)

    def sample(self, n, seed):
        """n i.i.d. points, sharded deterministically from the root seed."""
        seqs = np.random.SeedSequence(seed).spawn(N_SHARDS)
        counts = [n // N_SHARDS] * N_SHARDS
        counts[-1] += n - sum(counts)
        parts = [
            self.sampler(c, np.random.default_rng(s)) for c, s in zip(counts, seqs)
        ]
        return np.concatenate(parts, axis=0)

    def coordinate_moment(self, k):
        """Per-coordinate k-th moments (exact quadrature for products)."""
        if self.coord_densities is None:
            raise NonNormalizable(f"{self.kind}: no coordinate densities")
        return np.array([d.moment(k) for d in self.coord_densities])

    def spec_dict(self):
        return {"kind": self.kind, "dim": self.dim, **self.params}


def _product_spec(kind, densities, d1=None, d2=None, **flags):
    """Assemble a product MeasureSpec from per-coordinate densities and
    optional coordinate derivative callbacks d1, d2 (lists or shared)."""
    dim = len(densities)
    d1s = d1 if isinstance(d1, list) else [d1] * dim
    d2s = d2 if isinstance(d2, list) else [d2] * dim

    def fn(x):
        return float(sum(dens.potential(t) for dens, t in zip(densities, x)))

    grad = None
    hess = None
    gb = None
    hb = None
    if d1s[0] is not None:
        grad = lambda x: np.array([g(t) for g, t in zip(d1s, x)])
        gb = lambda pts: np.column_stack(
            [np.vectorize(g)(pts[:, i]) for i, g in enumerate(d1s)]
        )
    if d2s[0] is not None:
        hess = lambda x: np.diag([h(t) for h, t in zip(d2s, x)])

        def hb(pts):
            out = np.zeros((pts.shape[0], dim, dim))
            idx = np.arange(dim)
            out[:, idx, idx] = np.column_stack(
                [np.vectorize(h)(pts[:, i]) for i, h in enumerate(d2s)]
            )
            return out

    def sampler(n, rng):
        return np.column_stack([dens.sample(n, rng) for dens in densities])

    return MeasureSpec(
        kind=kind,
        dim=dim,
        potential=PotentialField(fn=fn, grad=grad, hess=hess),
        sampler=sampler,
        coord_densities=list(densities),
        coord_d1=d1s,
        coord_d2=d2s,
        grad_batch=gb,
        hess_batch=hb,
        **flags,
    )


# -- stock measures ------------------------------------------------------------


def gaussian(d, sigma=1.0):
    dens = Density1D(
        lambda t: 0.5 * (t / sigma) ** 2, (-np.inf, np.inf), name="gauss"
    )
    spec = _product_spec(
        "gaussian",
        [dens] * d,
        d1=lambda t: t / sigma**2,
        d2=lambda t: 1.0 / sigma**2,
        log_concave=True,
        unconditional=True,
    )
    spec.params = {"sigma": sigma}
    return spec


def exp_product(d, rate=1.0):
    """exp(-rate * sum x_i) on the positive orthant."""
    dens = Density1D(lambda t: rate * t, (0.0, np.inf), name="exp")
    spec = _product_spec(
        "exp_product",
        [dens] * d,
        d1=lambda t: rate,
        d2=lambda t: 0.0,
        log_concave=True,
        orthant=True,
    )
    spec.params = {"rate": rate}
    return spec


def power_product(d, q, c=1.0):
    """mu_q^(x) d = exp(-c sum x_i^q) on the positive orthant, q >= 1."""
    dens = Density1D(lambda t: c * abs(t) ** q, (0.0, np.inf), name=f"power{q}")
    spec = _product_spec(
        "power_product",
        [dens] * d,
        d1=lambda t: c * q * t ** (q - 1.0),
        d2=lambda t: c * q * (q - 1.0) * t ** (q - 2.0) if t > 0 else 0.0,
        log_concave=q >= 1.0,
        orthant=True,
    )
    spec.params = {"q": q, "c": c}
    return spec


def exp_quad_orthant(d, lam=1.0, beta=0.5):
    """exp(-(lam sum x_i + beta |x|^2 / 2)) on the positive orthant."""
    dens = Density1D(
        lambda t: lam * t + 0.5 * beta * t * t, (0.0, np.inf), name="expquad"
    )
    spec = _product_spec(
        "exp_quad_orthant",
        [dens] * d,
        d1=lambda t: lam + beta * t,
        d2=lambda t: beta,
        log_concave=True,
        orthant=True,
    )
    spec.params = {"lam": lam, "beta": beta}
    return spec


def trunc_gaussian_orthant(d, r_max=1.0):
    """Standard Gaussian conditioned on the box [0, R]^d."""
    dens = Density1D(lambda t: 0.5 * t * t, (0.0, r_max), name="halfgauss")
    spec = _product_spec(
        "trunc_gaussian_orthant",
        [dens] * d,
        d1=lambda t: t,
        d2=lambda t: 1.0,
        log_concave=True,
        orthant=True,
    )
    spec.body = Box(np.full(d, 0.5 * r_max))  # informational only
    spec.params = {"R": r_max}
    return spec


def uniform_box_orthant(d, r_max=1.0):
    dens = Density1D(lambda t: 0.0, (0.0, r_max), name="uniform")
    spec = _product_spec(
        "uniform_box_orthant",
        [dens] * d,
        d1=lambda t: 0.0,
        d2=lambda t: 0.0,
        log_concave=True,
        orthant=True,
    )
    spec.params = {"R": r_max}
    return spec


def laplace_product(d):
    """Symmetric exponential exp(-sum |x_i|)/2^d on the whole space.

    The potential has a kink at the coordinate hyperplanes; the smooth
    derivative callbacks below are valid on the open positive orthant and are
    what the orthant-conditioned measure uses.
    """
    dens = Density1D(lambda t: abs(t), (-np.inf, np.inf), name="laplace")
    spec = _product_spec("laplace_product", [dens] * d, log_concave=True,
                         unconditional=True)
    spec.orthant_d1 = [lambda t: 1.0] * d
    spec.orthant_d2 = [lambda t: 0.0] * d
    return spec


def uniform_interval(a=-0.5, b=0.5):
    """Uniform measure on an interval as a 1-D product spec."""
    dens = Density1D(lambda t: 0.0, (a, b), name=f"uniform[{a},{b}]")
    spec = _product_spec(
        "uniform_interval", [dens],
        d1=lambda t: 0.0, d2=lambda t: 0.0,
        log_concave=True, unconditional=(a == -b),
    )
    spec.params = {"a": a, "b": b}
    return spec


def cos_interval(half_width=0.5):
    """Density proportional to cos(pi x / (2 hw)) on [-hw, hw]."""
    w = math.pi / (2.0 * half_width)

    def pot(t):
        c = math.cos(w * t)
        return -math.log(c) if c > 1e-300 else 700.0

    dens = Density1D(pot, (-half_width, half_width), name="cos")
    spec = _product_spec(
        "cos_interval", [dens],
        d1=lambda t: w * math.tan(min(max(w * t, -1.5707), 1.5707)),
        d2=lambda t: w * w / math.cos(min(max(w * t, -1.5707), 1.5707)) ** 2,
        log_concave=True, unconditional=True,
    )
    spec.params = {"half_width": half_width}
    return spec


def trunc_gaussian_sym(d, half_width=1.5):
    dens = Density1D(lambda t: 0.5 * t * t, (-half_width, half_width), name="tgauss")
    spec = _product_spec(
        "trunc_gaussian_sym",
        [dens] * d,
        d1=lambda t: t,
        d2=lambda t: 1.0,
        log_concave=True,
        unconditional=True,
    )
    spec.params = {"half_width": half_width}
    return spec


def gamma_power_product(d, q, c=1.0):
    """Push-forward of exp(-c sum x_i^q) under t_i = x_i^q: the Gamma(1/q, c)
    product, density proportional to t^(1/q - 1) exp(-c t) per coordinate.

    Sampling goes through the smooth x-side density; the t-side potential is
    singular at the origin, so no coordinate densities are exposed.
    """
    base = power_product(d, q, c)

    def sampler(n, rng):
        return base.sampler(n, rng) ** q

    a = 1.0 / q
    spec = MeasureSpec(
        kind="gamma_power_product",
        dim=d,
        potential=PotentialField(
            fn=lambda t: float(c * np.sum(t) + (1.0 - a) * np.sum(np.log(t)))
        ),
        sampler=sampler,
        orthant=True,
        params={"q": q, "c": c},
    )
    return spec


def uniform_body(body: ConvexBody):
    logv = math.log(body.volume())
    d = body.dim
    return MeasureSpec(
        kind="uniform_body",
        dim=d,
        potential=PotentialField(
            fn=lambda x: logv,
            grad=lambda x: np.zeros(d),
            hess=lambda x: np.zeros((d, d)),
        ),
        sampler=lambda n, rng: body.sample_uniform(n, rng),
        body=body,
        grad_batch=lambda pts: np.zeros_like(pts),
        hess_batch=lambda pts: np.zeros((pts.shape[0], d, d)),
        log_concave=True,
        params=body.spec(),
    )


def density_1d(dens: Density1D, d1=None, d2=None, kind="custom_1d"):
    spec = _product_spec(kind, [dens], d1=d1, d2=d2, log_concave=False)
    return spec


def flat_power_1d(q):
    """The flattened |x|^q-type potential (quadratic near 0) on the
    positive half-line."""
    fp = FlattenedPowerPotential(q)
    dens = fp.density()
    spec = _product_spec(
        "flat_power_1d",
        [dens],
        d1=lambda t: fp.d1(t),
        d2=lambda t: fp.d2(t),
        log_concave=True,
        orthant=True,
    )
    spec.params = {"q": q}
    spec.flat_power = fp
    return spec


_BUILDERS = {
    "gaussian": lambda d, p: gaussian(d, p.get("sigma", 1.0)),
    "exp_product": lambda d, p: exp_product(d, p.get("rate", 1.0)),
    "power_product": lambda d, p: power_product(d, p["q"], p.get("c", 1.0)),
    "exp_quad_orthant": lambda d, p: exp_quad_orthant(
        d, p.get("lam", 1.0), p.get("beta", 0.5)
    ),
    "trunc_gaussian_orthant": lambda d, p: trunc_gaussian_orthant(d, p.get("R", 1.0)),
    "uniform_box_orthant": lambda d, p: uniform_box_orthant(d, p.get("R", 1.0)),
    "laplace_product": lambda d, p: laplace_product(d),
    "trunc_gaussian_sym": lambda d, p: trunc_gaussian_sym(d, p.get("half_width", 1.5)),
    "uniform_interval": lambda d, p: uniform_interval(p.get("a", -0.5), p.get("b", 0.5)),
    "cos_interval": lambda d, p: cos_interval(p.get("half_width", 0.5)),
    "flat_power_1d": lambda d, p: flat_power_1d(p["q"]),
    "uniform_body": lambda d, p: uniform_body(body_from_spec({**p["body"], "dim": d})),
}


def from_spec(doc, dim):
    """Build a MeasureSpec from a JSON-style {kind, params...} document."""
    kind = doc["kind"]
    if kind not in _BUILDERS:
        raise NonNormalizable(f"unknown measure kind {kind!r}")
    params = {k: v for k, v in doc.items() if k != "kind"}
    return _BUILDERS[kind](dim, params)
