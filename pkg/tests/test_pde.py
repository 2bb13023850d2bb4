"""Solver tests: exact special solutions, the Gaussian-convolution oracle,
scheme properties (linearity, positivity, order), and serialization."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dlet import tridiag
from dlet.pde import (
    GridSolution,
    PdeSpec,
    closed_form_heat,
    consistency_gap,
    solve_backward,
    solve_discounted,
    undiscount,
)

from oracles import heat_kernel_convolution


def gaussian_bump(center, width):
    return lambda x: np.exp(-0.5 * ((x - center) / width) ** 2)


class TestTridiag:
    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(3, 60), seed=st.integers(0, 2 ** 31), m=st.integers(1, 4))
    def test_thomas_matches_banded(self, n, seed, m):
        rng = np.random.default_rng(seed)
        lower = rng.standard_normal(n - 1)
        upper = rng.standard_normal(n - 1)
        diag = rng.standard_normal(n) + 6.0  # diagonally dominant
        rhs = rng.standard_normal((n, m))
        a = tridiag.thomas_solve(lower, diag, upper, rhs)
        b = tridiag.solve(lower, diag, upper, rhs)
        assert np.max(np.abs(a - b)) < 1e-10

    def test_solves_the_system(self):
        rng = np.random.default_rng(1)
        n = 40
        lower = rng.standard_normal(n - 1)
        upper = rng.standard_normal(n - 1)
        diag = rng.standard_normal(n) + 5.0
        rhs = rng.standard_normal(n)
        sol = tridiag.solve(lower, diag, upper, rhs)
        recon = diag * sol
        recon[1:] += lower * sol[:-1]
        recon[:-1] += upper * sol[1:]
        assert np.max(np.abs(recon - rhs)) < 1e-10


class TestSpecialSolutions:
    def test_terminal_row_bit_exact(self):
        rng = np.random.default_rng(2)
        terminal = rng.standard_normal(65)
        sol = solve_discounted(0.0, 1.0, terminal, -2.0, 2.0, 0.5, 65, 16)
        assert np.array_equal(sol.values[0], terminal)

    def test_constant_terminal_stays_constant(self):
        spec = PdeSpec(lam=0.5, sigma=0.3, x_lo=0.0, x_hi=5.0, horizon=1.0,
                       r=0.1)
        sol = solve_backward(spec, lambda x: np.full_like(x, 2.5), 201, 64)
        assert np.max(np.abs(sol.values - 2.5)) < 1e-12

    def test_linear_terminal_exact_in_discounted_form(self):
        sol = solve_discounted(1.0, 0.2, lambda x: x, 0.0, 4.0, 1.0, 513, 256)
        assert np.max(np.abs(sol.values - sol.x_grid[None, :])) < 1e-12

    def test_quadratic_terminal_heat(self):
        # lam=0, sigma=1: Q(tau, x) = x^2 + tau; interior nodes only,
        # boundary rows freeze the ends and the defect diffuses inward.
        sol = solve_discounted(0.0, 1.0, lambda x: x * x, -10.0, 10.0, 1.0,
                               1025, 512)
        x = sol.x_grid
        mask = np.abs(x) <= 3.5
        err = np.max(np.abs(sol.values[-1][mask] - (x[mask] ** 2 + 1.0)))
        assert err < 1e-6

    def test_degenerate_node_frozen(self):
        sol = solve_discounted(0.5, 0.4, lambda x: np.sin(x) + 2.0, 0.0, 6.0,
                               1.0, 301, 100)
        assert np.max(np.abs(sol.values[:, 0] - sol.values[0, 0])) == 0.0


class TestHeatOracle:
    def test_matches_closed_form(self):
        bump = gaussian_bump(4.0, 0.8)
        sol = solve_discounted(0.0, 1.0, bump, -4.0, 12.0, 1.0, 1025, 512)
        nodes = (sol.x_grid, bump(sol.x_grid))
        for tau in (0.1, 0.5, 1.0):
            ref = closed_form_heat(1.0, nodes, tau, sol.x_grid)
            rel = np.max(np.abs(sol.row(tau) - ref)) / np.max(np.abs(ref))
            assert rel < 1e-3, f"tau={tau}: {rel}"

    def test_convergence_order(self):
        bump = gaussian_bump(4.0, 0.8)
        errs = []
        for nx, nt in ((129, 32), (257, 64)):
            s = solve_discounted(0.0, 1.0, bump, -4.0, 12.0, 0.5, nx, nt)
            ref = closed_form_heat(1.0, (s.x_grid, bump(s.x_grid)), 0.5,
                                   s.x_grid)
            errs.append(np.max(np.abs(s.values[-1] - ref))
                        / np.max(np.abs(ref)))
        assert errs[0] / errs[1] >= 3.5

    def test_mother_norm_contracts(self):
        from dlet.wavelets import make_basis
        basis = make_basis(4, 8)
        xg = np.linspace(-6.0, 13.0, 1217)
        sol = solve_discounted(0.0, 1.0, basis.mother(xg), -6.0, 13.0, 0.5,
                               1217, 128)
        dx = xg[1] - xg[0]
        n0 = np.sqrt(np.sum(sol.values[0] ** 2) * dx)
        n1 = np.sqrt(np.sum(sol.row(0.5) ** 2) * dx)
        assert n1 < n0


class TestClosedFormHeat:
    def test_tau_zero_is_interpolant(self):
        xw = np.linspace(-1.0, 1.0, 21)
        f = xw ** 3
        assert closed_form_heat(1.0, (xw, f), 0.0, 0.35) == pytest.approx(
            np.interp(0.35, xw, f))

    def test_unit_terminal_normalization(self):
        xw = np.linspace(-25.0, 25.0, 501)
        val = closed_form_heat(1.0, (xw, np.ones_like(xw)), 0.7, 0.0)
        assert abs(val - 1.0) < 1e-12

    def test_second_moment(self):
        xw = np.linspace(-25.0, 25.0, 5001)
        val = closed_form_heat(1.0, (xw, xw ** 2), 2.0, 0.0)
        assert abs(val - 2.0) < 1e-4

    def test_gaussian_in_gaussian_out(self):
        w, c = 0.8, 4.0
        xw = np.linspace(-6.0, 14.0, 4001)
        bump = np.exp(-0.5 * ((xw - c) / w) ** 2)
        v = w * w + 0.5
        ref = w / np.sqrt(v) * np.exp(-0.5 * (5.0 - c) ** 2 / v)
        assert abs(closed_form_heat(1.0, (xw, bump), 0.5, 5.0) - ref) < 1e-5

    def test_matches_adaptive_quadrature(self):
        # The integrand has a kink at every node, so hand quad the
        # breakpoints and keep the node count within its points budget.
        from scipy.integrate import quad
        xw = np.linspace(-3.0, 5.0, 33)
        f = np.cos(xw) * np.exp(-0.1 * xw ** 2)
        sigma, tau, x0 = 0.7, 0.9, 1.3
        var = sigma * sigma * tau

        def integrand(y):
            fy = np.interp(y, xw, f, left=0.0, right=0.0)
            return fy * np.exp(-0.5 * (y - x0) ** 2 / var) / np.sqrt(
                2.0 * np.pi * var)

        ref, _ = quad(integrand, -3.0, 5.0, limit=400, points=list(xw))
        assert abs(closed_form_heat(sigma, (xw, f), tau, x0) - ref) < 1e-9

    def test_matches_independent_oracle(self):
        rng = np.random.default_rng(4)
        xw = np.linspace(-2.0, 6.0, 129)
        f = rng.standard_normal(129)
        x = np.linspace(-1.0, 5.0, 17)
        mine = closed_form_heat(0.6, (xw, f), 0.4, x)
        ref = heat_kernel_convolution(xw, f, 0.6, 0.4, x)
        assert np.max(np.abs(mine - ref)) < 1e-12

    def test_negative_tau_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            closed_form_heat(1.0, (np.array([0.0, 1.0]),
                                   np.array([1.0, 1.0])), -0.1, 0.5)


class TestSchemeProperties:
    def test_linearity(self):
        rng = np.random.default_rng(9)
        f = rng.standard_normal(257)
        g = rng.standard_normal(257)
        a, b = 1.7, -0.6

        def run(term):
            return solve_discounted(0.0, 1.0, term, -4.0, 4.0, 0.5, 257, 64)

        combo = run(a * f + b * g).values
        parts = a * run(f).values + b * run(g).values
        scale = np.max(np.abs(combo))
        assert np.max(np.abs(combo - parts)) / scale < 1e-12

    def test_positivity_fully_implicit(self):
        rng = np.random.default_rng(10)
        f = rng.uniform(0.0, 1.0, 129)
        sol = solve_discounted(0.0, 1.0, f, -2.0, 2.0, 1.0, 129, 64,
                               scheme_theta=1.0)
        assert sol.values.min() >= -1e-12

    def test_positivity_crank_nicolson_smooth(self):
        bump = gaussian_bump(0.0, 0.5)
        sol = solve_discounted(0.0, 1.0, bump, -6.0, 6.0, 1.0, 257, 128)
        assert sol.values.min() >= -1e-12

    def test_self_similarity_rescaling(self):
        # Qtilde(alpha^(2-2 lam) tau, alpha x) solves the problem with
        # terminal g(alpha x); spot-check one (lam, alpha) pair here, the
        # acceptance suite sweeps the full set.
        lam, alpha = 0.5, 2.0
        g = gaussian_bump(2.0, 0.4)
        factor = alpha ** (2.0 - 2.0 * lam)
        tau_star = 0.25
        base = solve_discounted(lam, 1.0, g, 0.0, 8.0, factor * tau_star,
                                641, 320)
        direct = solve_discounted(lam, 1.0, lambda x: g(alpha * x), 0.0,
                                  8.0 / alpha, tau_star, 641, 256)
        xq = direct.x_grid
        rescaled = base.interp(factor * tau_star, alpha * xq)
        ref = direct.values[-1]
        rel = np.max(np.abs(rescaled - ref)) / np.max(np.abs(ref))
        assert rel < 2e-3


class TestDiscounting:
    def test_undiscount_r_zero_identity(self):
        sol = solve_discounted(0.0, 1.0, gaussian_bump(0.0, 1.0), -4.0, 4.0,
                               0.5, 65, 16)
        out = undiscount(sol, 0.0)
        assert np.array_equal(out.values, sol.values)

    def test_undiscount_factor(self):
        sol = GridSolution(tau_grid=np.array([0.0, 1.0]),
                           x_grid=np.array([0.0, 1.0]),
                           values=np.array([[100.0, 100.0], [100.0, 100.0]]))
        out = undiscount(sol, 0.05)
        assert out.values[1, 0] == pytest.approx(100.0 * np.exp(-0.05))
        assert out.values[0, 0] == 100.0

    def test_gap_vanishes_at_r_zero(self):
        spec = PdeSpec(lam=1.0, sigma=0.2, x_lo=0.0, x_hi=4.0, horizon=1.0,
                       r=0.0)
        gap = consistency_gap(spec, lambda x: np.maximum(x - 1.0, 0.0),
                              257, 64)
        assert gap < 1e-12

    def test_gap_positive_with_drift(self):
        spec = PdeSpec(lam=0.5, sigma=0.3, x_lo=0.0, x_hi=4.0, horizon=1.0,
                       r=0.05)
        gap = consistency_gap(spec, gaussian_bump(2.0, 0.5), 257, 64)
        assert gap > 1e-4


class TestValidation:
    def test_spec_validation(self):
        with pytest.raises(ValueError, match="lambda"):
            PdeSpec(lam=1.5, sigma=1.0, x_lo=0.0, x_hi=1.0, horizon=1.0)
        with pytest.raises(ValueError, match="x_lo"):
            PdeSpec(lam=0.5, sigma=1.0, x_lo=-1.0, x_hi=1.0, horizon=1.0)
        with pytest.raises(ValueError, match="width"):
            PdeSpec(lam=0.0, sigma=1.0, x_lo=1.0, x_hi=1.0, horizon=1.0)

    def test_non_finite_terminal_rejected(self):
        bad = np.ones(65)
        bad[3] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            solve_discounted(0.0, 1.0, bad, -1.0, 1.0, 0.5, 65, 8)

    def test_grid_solution_serialization(self):
        sol = solve_discounted(0.0, 1.0, gaussian_bump(0.0, 1.0), -2.0, 2.0,
                               0.25, 33, 8)
        back = GridSolution.from_json_summary(sol.to_json_summary())
        assert np.array_equal(back.values, sol.values)
        assert np.array_equal(back.tau_grid, sol.tau_grid)

    def test_row_interpolation(self):
        sol = solve_discounted(0.0, 1.0, gaussian_bump(0.0, 1.0), -4.0, 4.0,
                               1.0, 129, 16)
        mid = sol.row(0.53125)  # between nodes 8 and 9 at dt = 1/16
        lo, hi = sol.values[8], sol.values[9]
        assert np.allclose(mid, 0.5 * lo + 0.5 * hi)
        with pytest.raises(ValueError, match="outside"):
            sol.row(1.5)
