"""Channel and truncated-line neutral eigenproblems against closed forms."""

import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from rayleighlab.discretization import Grid, TridiagonalOperator, inner_product, sine_mode
from rayleighlab.errors import (
    NoBoundState,
    NotConverging,
    NoUnstableNeutralMode,
    OutOfDomain,
)
from rayleighlab.neutral_modes import (
    line_eigenvalue_limit,
    rayleigh_quotient,
    smallest_eigenpair,
    solve_neutral,
    solve_truncated_line,
)
from rayleighlab.profiles import ShearProfile, sheet_base_profile, sine_profile


def sheet_alpha0_oracle() -> float:
    """Square-well matching condition mu*tan(2*mu) = sqrt(w^2 - mu^2), w = pi/4.

    Independent 1-D bisection oracle for the whole-line bound state decay
    rate alpha0 of the sheet base profile.
    """
    w = math.pi / 4

    def g(mu):
        return mu * math.tan(2 * mu) - math.sqrt(w * w - mu * mu)

    lo, hi = 1e-12, w - 1e-12
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    mu = 0.5 * (lo + hi)
    return math.sqrt(w * w - mu * mu)


ALPHA0 = sheet_alpha0_oracle()


class _LinearLineProfile(ShearProfile):
    """U(y) = y on the line: zero curvature, so no bound state exists."""

    family = "test-linear-line"

    def __init__(self):
        super().__init__(a=0.0, domain=(-math.inf, math.inf), tol_a=1e-6)

    def sampling_interval(self):
        return (-4.0, 4.0)

    def _eval_raw(self, y, order):
        if order == 0:
            return np.asarray(y, dtype=float)
        if order == 1:
            return np.ones_like(np.asarray(y, dtype=float))
        return np.zeros_like(np.asarray(y, dtype=float))


class TestOracleValue:
    def test_matching_condition_value(self):
        # the bound state sits near 0.632; its square near 0.3994
        assert ALPHA0 == pytest.approx(0.632, abs=5e-3)
        assert ALPHA0**2 == pytest.approx(0.3994, abs=1e-3)


class TestSolveNeutral:
    def test_sine_beta2_closed_form(self):
        grid = Grid(2000, (-1.0, 1.0))
        mode = solve_neutral(sine_profile(2.0), grid)
        assert mode.alpha_sq == pytest.approx(4.0 - math.pi**2 / 4, abs=1e-5)
        exact = np.cos(math.pi * grid.nodes / 2)
        assert np.max(np.abs(mode.phi - exact)) <= 1e-4
        assert mode.residual <= 1e-8
        assert mode.normalization == "L2_unit"

    def test_sine_beta16_closed_form(self):
        mode = solve_neutral(sine_profile(1.6), Grid(2000, (-1.0, 1.0)))
        assert mode.alpha_sq == pytest.approx(1.6**2 - math.pi**2 / 4, abs=1e-5)

    def test_sine_beta1_rejected(self):
        with pytest.raises(NoUnstableNeutralMode):
            solve_neutral(sine_profile(1.0), Grid(500, (-1.0, 1.0)))

    def test_eigenfunction_positive(self):
        mode = solve_neutral(sine_profile(2.0), Grid(800, (-1.0, 1.0)))
        assert np.all(mode.phi > 0)

    def test_grid_doubling_order(self):
        exact = 4.0 - math.pi**2 / 4
        errs = []
        for n in (500, 1000):
            mode = solve_neutral(sine_profile(2.0), Grid(n, (-1.0, 1.0)))
            errs.append(abs(mode.alpha_sq - exact))
        assert math.log2(errs[0] / errs[1]) >= 1.9

    def test_against_lapack_oracle(self):
        grid = Grid(700, (-1.0, 1.0))
        p = sine_profile(1.8)
        op = TridiagonalOperator.helmholtz(grid, 0.0, q=-np.asarray(p.ratio(grid.nodes)))
        lam, _, _ = smallest_eigenpair(op)
        ref = eigh_tridiagonal(op.diag, op.off, select="i",
                               select_range=(0, 0), eigvals_only=True)[0]
        assert lam == pytest.approx(ref, abs=1e-9 * max(1.0, abs(ref)))

    def test_interpolant_hits_nodes(self):
        grid = Grid(300, (-1.0, 1.0))
        mode = solve_neutral(sine_profile(2.0), grid)
        np.testing.assert_allclose(mode.phi_at(grid.nodes), mode.phi, atol=1e-12)
        assert mode.phi_at(0.0) == pytest.approx(1.0, abs=1e-6)


class TestRayleighQuotient:
    def test_minimizer_attains_minimum(self):
        grid = Grid(1500, (-1.0, 1.0))
        p = sine_profile(2.0)
        mode = solve_neutral(p, grid)
        q = rayleigh_quotient(mode.phi, p, grid)
        assert q == pytest.approx(-mode.alpha_sq, abs=1e-6)

    def test_second_mode_value(self):
        grid = Grid(2000, (-1.0, 1.0))
        p = sine_profile(2.0)
        f = sine_mode(grid, 2)
        f = f / math.sqrt(inner_product(f, f, grid).real)
        q = rayleigh_quotient(f, p, grid)
        assert q == pytest.approx(math.pi**2 - 4.0, rel=1e-4)

    def test_minimization_lower_bound(self):
        grid = Grid(800, (-1.0, 1.0))
        p = sine_profile(2.0)
        mode = solve_neutral(p, grid)
        rng = np.random.default_rng(5)
        for _ in range(5):
            v = rng.standard_normal(grid.n)
            v /= math.sqrt(inner_product(v, v, grid).real)
            assert rayleigh_quotient(v, p, grid) >= -mode.alpha_sq - 1e-6

    def test_requires_unit_norm(self):
        grid = Grid(100, (-1.0, 1.0))
        with pytest.raises(ValueError):
            rayleigh_quotient(np.ones(100), sine_profile(2.0), grid)


class TestTruncatedLine:
    def test_width16_matches_oracle(self):
        mode = solve_truncated_line(sheet_base_profile(), 16.0)
        assert math.sqrt(mode.alpha_sq) == pytest.approx(ALPHA0, abs=2e-2)
        assert mode.normalization == "H1_unit"

    def test_h1_normalized(self):
        mode = solve_truncated_line(sheet_base_profile(), 8.0)
        h1 = inner_product(mode.phi, mode.phi, mode.grid, "H1").real
        assert h1 == pytest.approx(1.0, abs=1e-10)

    def test_even_symmetry(self):
        mode = solve_truncated_line(sheet_base_profile(), 16.0)
        assert np.max(np.abs(mode.phi - mode.phi[::-1])) <= 1e-6

    def test_exponential_tail(self):
        mode = solve_truncated_line(sheet_base_profile(), 16.0)
        ratio = mode.phi_at(5.0) / mode.phi_at(4.0)
        assert ratio == pytest.approx(math.exp(-ALPHA0), rel=2e-2)

    def test_no_potential_no_bound_state(self):
        with pytest.raises(NoBoundState):
            solve_truncated_line(_LinearLineProfile(), 8.0)

    def test_channel_profile_rejected(self):
        with pytest.raises(OutOfDomain):
            solve_truncated_line(sine_profile(2.0), 8.0)

    def test_width_pair_tail_bound(self):
        m8 = solve_truncated_line(sheet_base_profile(), 8.0)
        m16 = solve_truncated_line(sheet_base_profile(), 16.0)
        assert m16.alpha_sq > m8.alpha_sq  # domain monotonicity
        assert abs(m16.alpha_sq - m8.alpha_sq) <= 10 * math.exp(-2 * ALPHA0 * 6)


class TestLineLimit:
    def test_extrapolated_limit(self):
        res = line_eigenvalue_limit(sheet_base_profile(), (4.0, 8.0, 16.0, 32.0))
        assert res.alpha0_sq == pytest.approx(ALPHA0**2, abs=1e-3)
        assert res.monotone
        assert all(b > a for a, b in zip(res.eigenvalues, res.eigenvalues[1:]))

    def test_degenerate_widths(self):
        with pytest.raises(NotConverging):
            line_eigenvalue_limit(sheet_base_profile(), (16.0, 16.0, 16.0))

    def test_too_few_widths(self):
        with pytest.raises(NotConverging):
            line_eigenvalue_limit(sheet_base_profile(), (8.0, 16.0))
