"""Monotone rearrangement, Legendre machinery, the entropic criterion, and
the 1-D Kahler-Einstein fixed point."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import interpolate, stats

from riccikit import fields, transport as tr
from riccikit.errors import (
    BarycenterNotZero,
    NonCompactTarget,
    NotStronglyConvex,
)


class TestDensity1D:
    def test_normalization(self):
        for dens in (
            tr.exponential_density(),
            tr.gaussian_density(),
            tr.power_density(1.5),
            tr.cos_density(),
        ):
            from scipy.integrate import quad

            lo, hi = dens.grid[0], dens.grid[-1]
            mass, _ = quad(dens.pdf, lo, hi, limit=200)
            assert mass == pytest.approx(1.0, abs=1e-8)

    def test_cdf_strictly_increasing(self):
        dens = tr.gaussian_density()
        xs = np.linspace(-4, 4, 33)
        cdfs = [dens.cdf(x) for x in xs]
        assert np.all(np.diff(cdfs) > 0)

    def test_ppf_inverts_cdf(self):
        dens = tr.power_density(1.5)
        for u in (0.01, 0.3, 0.5, 0.9, 0.999):
            assert dens.cdf(dens.ppf(u)) == pytest.approx(u, abs=1e-11)


class TestMonotoneMap:
    def test_identity(self):
        mu = tr.exponential_density()
        t, tp = tr.monotone_map_1d(mu, mu, 0.8)
        assert t == pytest.approx(0.8, abs=1e-10)
        assert tp == pytest.approx(1.0, abs=1e-8)

    def test_exp_to_uniform_closed_form(self):
        mu = tr.exponential_density()
        nu = tr.uniform_density(0.0, 1.0)
        for x in (0.1, 0.5, 1.0, 2.3, 5.0):
            t, tp = tr.monotone_map_1d(mu, nu, x)
            assert t == pytest.approx(1.0 - math.exp(-x), abs=1e-8)
            assert tp == pytest.approx(math.exp(-x), abs=1e-8)

    def test_gaussian_median(self):
        t, _ = tr.monotone_map_1d(tr.gaussian_density(), tr.uniform_density(0, 1), 0.0)
        assert t == pytest.approx(0.5, abs=1e-10)

    def test_pushforward_kolmogorov_smirnov(self, rng):
        mu = tr.gaussian_density()
        nu = tr.power_density(1.5)
        n = 20000
        xs = mu.sample(n, rng)
        ts = nu.ppf_many(mu.cdf_many(xs))
        ks = stats.kstest(ts, lambda v: np.interp(v, nu.grid, nu.cdf_grid)).statistic
        assert ks < 3.0 / math.sqrt(n)

    def test_strictly_increasing(self):
        mu = tr.gaussian_density()
        nu = tr.cos_density()
        xs = np.linspace(-3, 3, 41)
        ts = [tr.monotone_map_1d(mu, nu, x)[0] for x in xs]
        assert np.all(np.diff(ts) > 0)


class TestMongeAmpere:
    def test_identity_transport(self):
        phi = fields.quadratic_potential(np.eye(1))
        mu = tr.gaussian_density()
        v = mu.potential_field()
        assert abs(tr.monge_ampere_residual(phi, v, v, [0.4])) < 1e-12

    def test_reconstructed_map_residual(self):
        mu = tr.exponential_density()
        nu = tr.uniform_density(0.0, 1.0)
        phi = tr.transport_potential_1d(mu, nu)
        v, w = mu.potential_field(), nu.potential_field()
        # interior 90%-quantile range
        grid = [mu.ppf(u) for u in np.linspace(0.05, 0.95, 25)]
        worst = max(abs(tr.monge_ampere_residual(phi, v, w, [x])) for x in grid)
        assert worst < 1e-6

    def test_wrong_variance_gaussian(self):
        # identity map with nu = N(0, 2): residual = x^2/4 - log(2)/2
        phi = fields.quadratic_potential(np.eye(1))
        mu = tr.gaussian_density(1.0)
        nu = tr.gaussian_density(math.sqrt(2.0))
        v, w = mu.potential_field(), nu.potential_field()
        for x in (0.0, 1.0, 2.0):
            got = tr.monge_ampere_residual(phi, v, w, [x])
            assert got == pytest.approx(x * x / 4.0 - 0.5 * math.log(2.0), abs=1e-9)


class TestLegendre:
    def test_gaussian_self_dual(self):
        ld = tr.legendre_1d(fields.gaussian_potential(1), np.linspace(-5, 5, 801))
        assert np.abs(ld.vstar - 0.5 * ld.y_grid**2).max() < 1e-12

    def test_power_conjugate_pair(self):
        # V = x^q/q has V* = y^p/p with 1/p + 1/q = 1 (checked at q = 3)
        q = 3.0
        p = q / (q - 1.0)
        v = fields.power_potential(1.0 / q, q, dim=1)
        grid = np.linspace(1e-3, 4.0, 3001)
        ld = tr.legendre_1d(v, grid)
        want = ld.y_grid**p / p
        assert np.abs(ld.vstar - want).max() < 1e-10

    def test_cosh_involution(self):
        v = fields.PotentialField(
            fn=lambda x: math.cosh(x[0]),
            grad=lambda x: np.array([math.sinh(x[0])]),
            hess=lambda x: np.array([[math.cosh(x[0])]]),
        )
        ld = tr.legendre_1d(v, np.linspace(-4.0, 4.0, 2001))
        spl = interpolate.CubicSpline(ld.y_grid, ld.vstar)
        vstar = fields.PotentialField(
            fn=lambda y: float(spl(y[0])),
            grad=lambda y: np.array([float(spl(y[0], 1))]),
            hess=lambda y: np.array([[float(spl(y[0], 2))]]),
        )
        ld2 = tr.legendre_1d(vstar, ld.y_grid)
        xs = np.linspace(-2.5, 2.5, 21)
        err = max(abs(ld2.conjugate_value(x) - math.cosh(x)) for x in xs)
        assert err < 1e-6

    def test_young_identity_and_dual_hessian(self):
        v = fields.power_potential(0.5, 2.6, dim=1)
        grid = np.linspace(0.05, 3.0, 501)
        ld = tr.legendre_1d(v, grid)
        for i in range(0, len(grid), 50):
            x, y = ld.x_grid[i], ld.y_grid[i]
            assert v.value([x]) + ld.vstar[i] == pytest.approx(x * y, abs=1e-12)
            assert ld.ddvstar[i] * v.hessian([x])[0, 0] == pytest.approx(
                1.0, abs=1e-7
            )

    def test_not_strongly_convex_rejected(self):
        v = fields.PotentialField(
            fn=lambda x: math.sin(x[0]),
            grad=lambda x: np.array([math.cos(x[0])]),
            hess=lambda x: np.array([[-math.sin(x[0])]]),
        )
        with pytest.raises(NotStronglyConvex):
            tr.legendre_1d(v, np.linspace(0.0, 3.0, 64))

    @given(
        a=st.floats(0.3, 3.0),
        b=st.floats(-1.0, 1.0),
        x=st.floats(-1.8, 1.8),
    )
    @settings(max_examples=40, deadline=None)
    def test_involution_property_smooth_family(self, a, b, x):
        # V = a cosh(t - b): V** recovers V on the bulk of the grid
        v = fields.PotentialField(
            fn=lambda t: a * math.cosh(t[0] - b),
            grad=lambda t: np.array([a * math.sinh(t[0] - b)]),
            hess=lambda t: np.array([[a * math.cosh(t[0] - b)]]),
        )
        ld = tr.legendre_1d(v, np.linspace(-4.0, 4.0, 1201))
        spl = interpolate.CubicSpline(ld.y_grid, ld.vstar)
        vstar = fields.PotentialField(
            fn=lambda y: float(spl(y[0])),
            grad=lambda y: np.array([float(spl(y[0], 1))]),
            hess=lambda y: np.array([[float(spl(y[0], 2))]]),
        )
        ld2 = tr.legendre_1d(vstar, ld.y_grid[2:-2])
        assert abs(ld2.conjugate_value(x) - a * math.cosh(x - b)) < 1e-6 * (1 + a)


class TestEntropicCriterion:
    def test_gaussian_margin(self):
        v = fields.gaussian_potential(1)
        out = tr.entropic_condition_check(v, 0.5, np.linspace(-4, 4, 201))
        # F = y^2: F'' = 2 >= 2 rho (V*)'' = 1, margin exactly 1
        assert out["holds"] and out["worst_violation"] == pytest.approx(1.0)

    def test_huge_rho_fails(self):
        v = fields.gaussian_potential(1)
        out = tr.entropic_condition_check(v, 1e6, np.linspace(-4, 4, 201))
        assert not out["holds"] and out["worst_violation"] < 0

    def test_example2_bisection_analytic_value(self):
        # q = 3 (p = 3/2): sup rho with F - 2 rho V* convex is exactly 3/8
        fp = tr.FlattenedPowerPotential(3.0)
        y = np.concatenate([np.linspace(0, 1, 257), 1 + np.geomspace(1e-9, 50, 4097)])
        crit = fp.dual_criterion(y)
        rho = crit.bisect_rho(enhanced=False)
        assert rho == pytest.approx(0.375, abs=1e-6)
        assert crit.f_second.min() >= -1e-12

    def test_example2_primal_dual_consistency(self):
        # closed-form V matches conjugation of (V*)'' data: V''(x) (V*)''(V') = 1
        fp = tr.FlattenedPowerPotential(3.0)
        for x in (0.1, 0.5, 0.7, 2.0, 10.0):
            y = fp.d1(x)
            dd = min(1.0, abs(y) ** (fp.p - 2.0)) / fp.p
            assert fp.d2(x) * dd == pytest.approx(1.0, rel=1e-12)


class TestKESolver:
    def test_uniform_target_closed_form(self):
        # quantile integration gives the exact solution
        # exp(-Phi) = sech^2(x/4)/8 for nu = uniform[-1/2, 1/2]
        sol = tr.ke_solve_1d(tr.uniform_density(-0.5, 0.5))
        assert sol.residual_sup < 1e-8
        mask = sol.interior_mask()
        oracle = -np.log(np.cosh(sol.grid / 4.0) ** -2 / 8.0)
        assert np.abs(sol.phi_vals - oracle)[mask].max() < 1e-6

    def test_trace_bound(self):
        sol = tr.ke_solve_1d(tr.uniform_density(-0.5, 0.5))
        mask = sol.interior_mask(1e-4, 1 - 1e-4)
        assert sol.second_derivative()[mask].max() <= 2.0 * 0.5**2 + 1e-10

    def test_symmetric_target_even_solution(self):
        sol = tr.ke_solve_1d(tr.cos_density(0.5))
        assert np.abs(sol.phi_vals - sol.phi_vals[::-1]).max() < 1e-8

    def test_self_consistency_residual(self):
        sol = tr.ke_solve_1d(tr.cos_density(0.5), tol=1e-8)
        assert sol.residual_sup < 1e-8

    def test_translation_invariance_of_target(self):
        # recentring makes a shifted target give the same solution
        a = tr.ke_solve_1d(tr.uniform_density(-0.5, 0.5))
        b = tr.ke_solve_1d(tr.uniform_density(-0.2, 0.8))
        assert np.abs(a.phi_vals - b.phi_vals).max() < 1e-8

    def test_translation_invariance_of_initial_guess(self):
        a = tr.ke_solve_1d(tr.cos_density(0.5))
        b = tr.ke_solve_1d(tr.cos_density(0.5), initial_shift=3.0)
        assert np.abs(a.phi_vals - b.phi_vals).max() < 1e-8

    def test_noncompact_target_rejected(self):
        with pytest.raises(NonCompactTarget):
            tr.ke_solve_1d(tr.gaussian_density())

    def test_barycenter_guard_without_recenter(self):
        with pytest.raises(BarycenterNotZero):
            tr.ke_solve_1d(tr.uniform_density(0.0, 1.0), recenter=False)


class TestMoreGuards:
    def test_cdf_inversion_failure_on_vanishing_density(self):
        from riccikit.errors import CDFInversionFailure

        dens = tr.Density1D(
            lambda t: 0.0 if (t <= 1.0 or t >= 2.0) else 700.0,
            (0.0, 3.0),
            name="gapped",
        )
        # a level strictly inside the dead zone's flat CDF stretch
        level = dens.cdf(1.5)
        with pytest.raises(CDFInversionFailure):
            dens.ppf(level)

    def test_no_convergence_reported(self):
        from riccikit.errors import NoConvergence

        with pytest.raises(NoConvergence) as err:
            tr.ke_solve_1d(tr.cos_density(0.5), max_iter=3)
        assert err.value.residual is None or err.value.residual > 1e-8
