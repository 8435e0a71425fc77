"""Projected-equation operators: identities, solvers, and norm scalings."""

import math

import numpy as np
import pytest
from scipy.linalg import svdvals

from rayleighlab.discretization import Grid, inner_product, l2_norm, sine_mode
from rayleighlab.errors import DivergentCoefficient, NeumannDiverging
from rayleighlab.lyapunov_schmidt import (
    RayleighOperators,
    r_norm_probe,
    solve_projected,
    solve_projected_fast,
)
from rayleighlab.neutral_modes import solve_neutral
from rayleighlab.profiles import sine_profile

LAMBDA_B2 = 2j * math.pi  # closed-form spectral coefficient for beta = 2


def make_ops(beta=2.0, n=800):
    p = sine_profile(beta)
    grid = Grid(n, (-1.0, 1.0))
    mode = solve_neutral(p, grid)
    return RayleighOperators(p, grid, mode)


@pytest.fixture(scope="module")
def ops():
    return make_ops()


class TestProjection:
    def test_unit_projection(self, ops):
        np.testing.assert_allclose(ops.apply_P(ops.phi), ops.phi, atol=1e-11)

    def test_orthogonal_mode_killed(self, ops):
        out = ops.apply_P(sine_mode(ops.grid, 2))
        assert np.max(np.abs(out)) <= 1e-10

    def test_linearity(self, ops):
        f = 2.0 * ops.phi + sine_mode(ops.grid, 2)
        np.testing.assert_allclose(ops.apply_P(f), 2.0 * ops.phi, atol=1e-9)


class TestTOperator:
    def test_t_phi_equals_k_phi(self, ops):
        lhs = ops.apply_T(ops.phi)
        rhs = ops.K.solve(ops.phi)
        assert l2_norm(lhs - rhs, ops.grid) <= 1e-8

    def test_solve_t_recovers_phi(self, ops):
        x = ops.solve_T(ops.K.solve(ops.phi.astype(complex)))
        assert l2_norm(x - ops.phi, ops.grid) <= 1e-8

    def test_zero_rhs(self, ops):
        np.testing.assert_array_equal(ops.solve_T(np.zeros(ops.grid.n)), 0.0)

    def test_round_trip(self, ops):
        rng = np.random.default_rng(2)
        b = rng.standard_normal(ops.grid.n) + 1j * rng.standard_normal(ops.grid.n)
        x = ops.solve_T(b)
        assert np.linalg.norm(ops.apply_T(x) - b) <= 1e-10 * np.linalg.norm(b)

    def test_smallest_singular_value_floor(self):
        # ker T = 0 surrogate: sigma_min stays above a recorded floor
        for beta, n in ((2.0, 300), (1.7, 500)):
            ops = make_ops(beta, n)
            sigma = svdvals(ops.T_factorization.matrix)[-1]
            assert sigma > 0.05

    def test_t_inverse_k_self_adjoint(self, ops):
        rng = np.random.default_rng(4)
        f = rng.standard_normal(ops.grid.n)
        g = rng.standard_normal(ops.grid.n)
        tk_f = ops.solve_T(ops.K.solve(f.astype(complex)))
        tk_g = ops.solve_T(ops.K.solve(g.astype(complex)))
        lhs = inner_product(tk_f, g, ops.grid)
        rhs = inner_product(f, tk_g, ops.grid)
        assert abs(lhs - rhs) <= 1e-8


class TestROperator:
    def test_vanishes_at_origin(self, ops):
        out = ops.apply_R(0.0, 0.0, ops.phi)
        assert np.max(np.abs(out)) == 0.0

    def test_eps_only_scaling(self, ops):
        out = ops.apply_R(1e-2, 0.0, ops.phi)
        np.testing.assert_allclose(out, (1e-2 / 4.0) * ops.phi, rtol=1e-5)

    def test_real_c_rejected(self, ops):
        with pytest.raises(DivergentCoefficient):
            ops.apply_R(1e-2, 0.05, ops.phi)

    def test_norm_probe_linear_slope(self, ops):
        ts = np.logspace(-3, -1, 5)
        norms = [r_norm_probe(ops, t, 1j * t) for t in ts]
        slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
        assert slope == pytest.approx(1.0, abs=0.1)

    def test_norm_probe_halving(self, ops):
        hi = r_norm_probe(ops, 2e-2, 2e-2j)
        lo = r_norm_probe(ops, 1e-2, 1e-2j)
        assert 1.5 <= hi / lo <= 2.5


class TestSolveProjected:
    def test_zero_data_zero_solution(self, ops):
        for method in ("direct", "neumann"):
            sol = solve_projected(ops, 0.0, 0.0, method=method)
            assert np.max(np.abs(sol.psi)) <= 1e-14

    def test_direct_neumann_agreement(self, ops):
        eps = 1e-2
        c = -eps / LAMBDA_B2
        direct = solve_projected(ops, eps, c, method="direct")
        neumann = solve_projected(ops, eps, c, method="neumann")
        assert l2_norm(direct.psi - neumann.psi, ops.grid) <= 1e-8
        assert neumann.contraction is not None and neumann.contraction < 0.2
        # geometric decay of the recorded term norms
        tn = neumann.term_norms
        assert all(b < 0.5 * a for a, b in zip(tn[:-1], tn[1:]) if a > 1e-14)

    def test_projected_residual_small(self, ops):
        eps = 1e-2
        c = -eps / LAMBDA_B2
        sol = solve_projected(ops, eps, c, method="direct")
        assert sol.residual <= 1e-8

    def test_solution_norm_bound(self, ops):
        # || psi ||_H1 <= C (eps + |c|) with the constant pinned at 3
        for eps in (2e-3, 4e-3, 8e-3, 1.6e-2):
            c = -eps / LAMBDA_B2
            sol = solve_projected(ops, eps, c, method="direct")
            h1 = abs(inner_product(sol.psi, sol.psi, ops.grid, "H1")) ** 0.5
            assert h1 <= 3.0 * (eps + abs(c))

    def test_neumann_diverges_outside_regime(self, ops):
        # measured divergence threshold sits near eps ~ 2 (beyond the
        # physical window eps < alpha_tilde^2); eps = 2 reliably fails
        with pytest.raises(NeumannDiverging):
            solve_projected(ops, 2.0, -2.0 / LAMBDA_B2, method="neumann")

    def test_fast_path_matches_direct(self, ops):
        eps = 1e-2
        c = -eps / LAMBDA_B2 * (1 + 0.08)  # displaced from the root
        direct = solve_projected(ops, eps, c, method="direct").psi
        fast = solve_projected_fast(ops, eps, c)
        assert l2_norm(direct - fast, ops.grid) <= 1e-10 * max(l2_norm(direct, ops.grid), 1e-12)
