"""Grids, operators, inner products, and singular quadrature."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from rayleighlab.discretization import (
    DenseComplexOperator,
    Grid,
    TridiagonalOperator,
    dirichlet_form,
    fourier_sine_coefficient,
    helmholtz_solve,
    inner_product,
    near_singular_integral,
    pv_integral,
    sine_mode,
)
from rayleighlab.errors import (
    InvalidRange,
    NoConvergence,
    ShapeMismatch,
    SingularityOnBoundary,
)

ALPHA_SQ = 4.0 - math.pi**2 / 4.0  # sine-family beta=2 neutral eigenvalue


class TestGrid:
    def test_spacing_identity(self):
        g = Grid(777, (-1.0, 1.0))
        assert g.h * (g.n + 1) == pytest.approx(2.0, rel=1e-15)
        assert np.all(np.diff(g.nodes) > 0)
        assert g.nodes[0] > -1.0 and g.nodes[-1] < 1.0

    def test_conform(self):
        g = Grid(10, (-1.0, 1.0))
        with pytest.raises(ShapeMismatch):
            g.conform(np.zeros(9))


class TestHelmholtzSolve:
    @pytest.mark.parametrize("m,shift", [(1, math.pi**2 / 4), (3, 9 * math.pi**2 / 4)])
    def test_sine_mode_oracle(self, m, shift):
        g = Grid(500, (-1.0, 1.0))
        op = TridiagonalOperator.helmholtz(g, ALPHA_SQ)
        f = sine_mode(g, m)
        psi = helmholtz_solve(op, f)
        np.testing.assert_allclose(psi, f / (ALPHA_SQ + shift), atol=1e-4)

    def test_zero_rhs(self):
        g = Grid(100, (-1.0, 1.0))
        op = TridiagonalOperator.helmholtz(g, 1.0)
        np.testing.assert_array_equal(helmholtz_solve(op, np.zeros(100)), 0.0)

    def test_round_trip(self):
        g = Grid(400, (-1.0, 1.0))
        op = TridiagonalOperator.helmholtz(g, ALPHA_SQ)
        rng = np.random.default_rng(7)
        f = rng.standard_normal(400) + 1j * rng.standard_normal(400)
        back = op.apply(op.solve(f))
        assert np.max(np.abs(back - f)) <= 1e-10 * np.max(np.abs(f))

    def test_solution_residual(self):
        g = Grid(600, (-1.0, 1.0))
        op = TridiagonalOperator.helmholtz(g, 2.0)
        rng = np.random.default_rng(3)
        f = rng.standard_normal(600)
        psi = op.solve(f)
        res = np.linalg.norm(op.apply(psi) - f)
        assert res <= 1e-12 * np.linalg.norm(f)


class TestInnerProduct:
    def test_cos_l2_unit(self):
        g = Grid(500, (-1.0, 1.0))
        f = np.cos(math.pi * g.nodes / 2)
        assert inner_product(f, f, g, "L2").real == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_modes(self):
        g = Grid(500, (-1.0, 1.0))
        v = inner_product(sine_mode(g, 1), sine_mode(g, 2), g, "L2")
        assert abs(v) <= 1e-12

    def test_cos_h1(self):
        g = Grid(1000, (-1.0, 1.0))
        f = np.cos(math.pi * g.nodes / 2)
        expect = 1.0 + math.pi**2 / 4.0
        assert inner_product(f, f, g, "H1").real == pytest.approx(expect, rel=1e-4)

    def test_l2_convergence_order(self):
        # trapezoid norm of a non-bandlimited function: observed order >= 1.9
        errs = []
        for n in (250, 500):
            g = Grid(n, (-1.0, 1.0))
            f = g.nodes**2 * (1 - g.nodes**2)
            exact = quad(lambda y: y**4 * (1 - y**2) ** 2, -1, 1)[0]
            errs.append(abs(inner_product(f, f, g).real - exact))
        assert math.log2(errs[0] / errs[1]) >= 1.9

    def test_dirichlet_form_matches_operator(self):
        g = Grid(300, (-1.0, 1.0))
        rng = np.random.default_rng(11)
        f = rng.standard_normal(300)
        q = rng.standard_normal(300)
        op = TridiagonalOperator.helmholtz(g, 0.0, q=q)
        quad_form = g.h * float(f @ op.apply(f))
        assert dirichlet_form(f, g, q=q) == pytest.approx(quad_form, rel=1e-12)


class TestPvIntegral:
    def test_constant_log_oracle(self):
        val = pv_integral(lambda x: np.ones_like(x), 0.0, (-1.0, 2.0))
        assert val == pytest.approx(math.log(2.0), rel=1e-10)

    def test_linear(self):
        val = pv_integral(lambda x: x, 0.0, (-1.0, 2.0))
        assert val == pytest.approx(3.0, rel=1e-10)

    def test_odd_integrand_vanishes(self):
        # odd smooth f/x is even, but odd f itself gives p.v. = integral of even
        def f(x):
            return np.cos(math.pi * x / 2) ** 2 * np.sin(2 * x)

        def integrand(x):
            return math.cos(math.pi * x / 2) ** 2 * (math.sin(2 * x) / x if x else 2.0)

        val = pv_integral(f, 0.0, (-1.0, 1.0))
        oracle = quad(integrand, -1, 1, limit=200)[0]
        assert val == pytest.approx(oracle, abs=1e-9)

    def test_even_integrand_pv_zero(self):
        # f even => (f(x)-f(0))/x odd => p.v. = 0
        def f(x):
            return np.cos(x) ** 2

        assert abs(pv_integral(f, 0.0, (-1.0, 1.0))) <= 1e-10

    def test_reflection_antisymmetry(self):
        def f(x):
            return np.exp(x)

        def f_ref(x):
            return np.exp(-x)

        plus = pv_integral(f, 0.0, (-1.0, 1.0))
        minus = pv_integral(f_ref, 0.0, (-1.0, 1.0))
        assert plus == pytest.approx(-minus, rel=1e-9)

    def test_boundary_guard(self):
        with pytest.raises(SingularityOnBoundary):
            pv_integral(lambda x: x, -1.0 + 1e-9, (-1.0, 1.0))


class TestNearSingular:
    def test_pole_closed_form(self):
        c = 1e-3
        val = near_singular_integral(lambda y: 1.0 / (y - 1j * c), 0.0, c, (-1.0, 1.0))
        oracle = np.log((1.0 - 1j * c) / (-1.0 - 1j * c))
        assert val == pytest.approx(oracle, rel=1e-9)

    def test_smooth_case_matches_quad(self):
        val = near_singular_integral(lambda y: 1.0 / (y - 1j), 0.0, 1.0, (-1.0, 1.0))
        re = quad(lambda y: (1.0 / (y - 1j)).real, -1, 1)[0]
        im = quad(lambda y: (1.0 / (y - 1j)).imag, -1, 1)[0]
        assert val == pytest.approx(re + 1j * im, rel=1e-9)

    def test_seed_independence(self):
        c = 1e-4
        f = lambda y: np.exp(y) / (y - 0.2 - 1j * c)
        a = near_singular_integral(f, 0.2, c, (-1.0, 1.0), n_base=1)
        b = near_singular_integral(f, 0.2, c, (-1.0, 1.0), n_base=3)
        assert a == pytest.approx(b, rel=1e-8)

    def test_depth_cap_failure(self):
        c = 1e-13
        with pytest.raises(NoConvergence):
            near_singular_integral(lambda y: 1.0 / (y - 1j * c), 0.0, c, (-1.0, 1.0))


class TestFourierSine:
    def test_mode_normalization(self):
        g = Grid(800, (-1.0, 1.0))
        coef = fourier_sine_coefficient(sine_mode(g, 1), 1, g)
        assert coef.real == pytest.approx(1.0, abs=1e-12)
        assert coef.imag == 0.0

    def test_orthogonality(self):
        g = Grid(800, (-1.0, 1.0))
        assert abs(fourier_sine_coefficient(sine_mode(g, 1), 2, g)) <= 1e-12

    def test_l2_norm_convergence(self):
        errs = []
        for n in (200, 400):
            g = Grid(n, (-1.0, 1.0))
            # non-bandlimited: norm of mode measured through a smooth window
            f = sine_mode(g, 3) * np.exp(g.nodes)
            exact = quad(lambda y: math.sin(3 * math.pi * (y + 1) / 2) ** 2 * math.exp(2 * y),
                         -1, 1)[0]
            errs.append(abs(inner_product(f, f, g).real - exact))
        assert math.log2(errs[0] / errs[1]) >= 1.9

    def test_invalid_mode(self):
        g = Grid(100, (-1.0, 1.0))
        with pytest.raises(InvalidRange):
            fourier_sine_coefficient(sine_mode(g, 1), 0, g)

    def test_wrong_interval(self):
        g = Grid(100, (0.0, 1.0))
        with pytest.raises(ShapeMismatch):
            fourier_sine_coefficient(np.zeros(100), 1, g)


class TestDenseOperator:
    def test_solve_round_trip(self):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((50, 50)) + 1j * rng.standard_normal((50, 50))
        m += 10 * np.eye(50)
        op = DenseComplexOperator(m)
        b = rng.standard_normal(50) + 1j * rng.standard_normal(50)
        x = op.solve(b)
        assert np.max(np.abs(op.apply(x) - b)) <= 1e-12 * np.max(np.abs(b))
