"""Cross-module invariant battery behind the `validate` command.

Each check runs at fixed grids and seeds so repeated runs print identical
tables.  Checks return (name, passed, detail); the command maps any
failure to exit code 3.  The lambda sign-flip hook exists to prove the
battery actually trips on a violated invariant.
"""

from __future__ import annotations

import math

import numpy as np

from .discretization import Grid, inner_product, near_singular_integral, sine_mode
from .dispersion import eval_G, predict_c, solve_reduced
from .errors import ImagNotPositive
from .lyapunov_schmidt import RayleighOperators, r_norm_probe, solve_projected
from .neutral_modes import (
    line_eigenvalue_limit,
    rayleigh_quotient,
    solve_neutral,
    solve_truncated_line,
)
from .profiles import check_assumptions, rescale_profile, sheet_base_profile, sine_profile
from .singular_limits import approximation_defect, gamma, lambda_limit
from .vortex_sheet import build_cutoffs, sheet_operators, solve_block_system, z_norm


class Check:
    def __init__(self, name, fn):
        self.name = name
        self.fn = fn

    def run(self):
        try:
            detail = self.fn()
            return self.name, True, detail or ""
        except Exception as exc:
            return self.name, False, f"{type(exc).__name__}: {exc}"


def _require(cond: bool, msg: str):
    if not cond:
        raise AssertionError(msg)


def run_validation(quick: bool = False, inject_lambda_sign_flip: bool = False):
    """Run the invariant suite; returns a list of (name, passed, detail)."""
    n = 250 if quick else 1000
    grid = Grid(n, (-1.0, 1.0))
    profile = sine_profile(2.0)
    sheet = sheet_base_profile()
    mode = solve_neutral(profile, grid)
    ops = RayleighOperators(profile, grid, mode)
    taus = (1e-1, 1e-2, 1e-3, 1e-4)
    lam = lambda_limit(profile, mode, taus)
    lam_c = lam.as_complex
    if inject_lambda_sign_flip:  # test hook: emulate a sign bug upstream
        lam_c = lam_c.conjugate()

    checks = []

    def add(name, fn):
        checks.append(Check(name, fn))

    # -- profiles
    def profiles_fd():
        p = profile
        ys = np.array([-0.61, 0.27, 0.52])
        errs = []
        for h in (1e-3, 5e-4):
            fd = (p.eval(ys + h, 1) - p.eval(ys - h, 1)) / (2 * h)
            errs.append(np.max(np.abs(fd - p.eval(ys, 2))))
        rate = math.log2(errs[0] / errs[1])
        _require(rate >= 1.9, f"FD order {rate:.2f} < 1.9")
        return f"order {rate:.2f}"

    add("profiles: finite-difference consistency", profiles_fd)

    def profiles_rescale():
        base = sheet
        p = rescale_profile(base, 8.0)
        ys = np.linspace(-1, 1, 33)
        for order in range(4):
            if not np.array_equal(p.eval(ys, order), 8.0**order * base.eval(8.0 * ys, order)):
                raise AssertionError(f"rescale identity broken at order {order}")
        return "exact"

    add("profiles: rescaling identity", profiles_rescale)

    def profiles_assumptions():
        for p, tag in ((profile, "sine(2)"), (sheet, "sheet")):
            rep = check_assumptions(p, 1001)
            _require(rep.passed, f"{tag} failed: {rep}")
        return "sine(2), sheet pass"

    add("profiles: standing assumptions", profiles_assumptions)

    # -- discretization
    def disc_round_trip():
        rng = np.random.default_rng(7)
        f = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        back = ops.K.apply(ops.K.solve(f))
        rel = np.max(np.abs(back - f)) / np.max(np.abs(f))
        _require(rel <= 1e-10, f"round trip {rel:.2e}")
        return f"rel {rel:.1e}"

    add("discretization: Helmholtz round trip", disc_round_trip)

    def disc_pv_reflection():
        from .discretization import pv_integral

        plus = pv_integral(lambda x: np.exp(x), 0.0, (-1.0, 1.0))
        minus = pv_integral(lambda x: np.exp(-x), 0.0, (-1.0, 1.0))
        _require(abs(plus + minus) <= 1e-9, f"asymmetry {abs(plus + minus):.2e}")
        return "antisymmetric"

    add("discretization: p.v. reflection antisymmetry", disc_pv_reflection)

    def disc_seed_independence():
        f = lambda y: np.exp(y) / (y - 0.2 - 1e-4j)
        a = near_singular_integral(f, 0.2, 1e-4, (-1.0, 1.0), n_base=1)
        b = near_singular_integral(f, 0.2, 1e-4, (-1.0, 1.0), n_base=3)
        _require(abs(a - b) <= 1e-8 * abs(a), f"seeds differ {abs(a - b):.2e}")
        return "agree to 1e-8"

    add("discretization: refinement seed independence", disc_seed_independence)

    def disc_sine_norm_order():
        errs = []
        for m in (n // 2, n):
            g = Grid(m, (-1.0, 1.0))
            f = sine_mode(g, 3) * np.exp(g.nodes)
            from scipy.integrate import quad

            exact = quad(lambda y: math.sin(3 * math.pi * (y + 1) / 2) ** 2
                         * math.exp(2 * y), -1, 1)[0]
            errs.append(abs(inner_product(f, f, g).real - exact))
        rate = math.log2(errs[0] / errs[1])
        _require(rate >= 1.9, f"order {rate:.2f}")
        return f"order {rate:.2f}"

    add("discretization: trapezoid norm convergence", disc_sine_norm_order)

    # -- neutral modes
    def neutral_variational():
        q = rayleigh_quotient(mode.phi, profile, grid)
        _require(abs(q + mode.alpha_sq) <= 1e-6, f"|q + a^2| = {abs(q + mode.alpha_sq):.2e}")
        return f"defect {abs(q + mode.alpha_sq):.1e}"

    add("neutral: variational consistency", neutral_variational)

    def neutral_order():
        exact = 4.0 - math.pi**2 / 4
        errs = [abs(solve_neutral(profile, Grid(m, (-1.0, 1.0))).alpha_sq - exact)
                for m in (n // 2, n)]
        rate = math.log2(errs[0] / errs[1])
        _require(rate >= 1.9, f"order {rate:.2f}")
        return f"order {rate:.2f}"

    add("neutral: eigenvalue grid-doubling order", neutral_order)

    def neutral_positive():
        _require(bool(np.all(mode.phi > 0)), "eigenfunction changes sign")
        return "no sign change"

    add("neutral: ground-state positivity", neutral_positive)

    def neutral_line_monotone():
        widths = (4.0, 8.0, 16.0) if quick else (4.0, 8.0, 16.0, 32.0)
        npu = 64 if quick else 128
        res = line_eigenvalue_limit(sheet, widths, nodes_per_unit=npu)
        _require(res.monotone, "widths table not monotone")
        return f"alpha0^2 -> {res.alpha0_sq:.5f}"

    add("neutral: line eigenvalue monotone in width", neutral_line_monotone)

    # -- singular limits
    def limits_gamma_sign():
        for tau in taus:
            val = gamma(profile, mode, 1j * tau)
            _require(val.imag > 0, f"Im Gamma(i{tau:g}) = {val.imag:g} <= 0")
        return "Im Gamma > 0 along the ray"

    add("singular limits: Im Gamma positive", limits_gamma_sign)

    def limits_lambda_cross_check():
        if lam_c.imag <= 0:
            raise ImagNotPositive(f"Im lambda = {lam_c.imag:g} <= 0")
        rel = abs(lam_c - complex(lam.C_closed_form, lam.imag_closed_form)) / abs(lam_c)
        _require(rel <= 1e-2, f"cross-check off by {rel:.2%}")
        return f"within {rel:.2%}"

    add("singular limits: lambda closed-form cross-check", limits_lambda_cross_check)

    def limits_plemelj_decay():
        from .singular_limits import default_delta_eps_sequence, plemelj_limit_check

        res = plemelj_limit_check(lambda x: np.sqrt(np.abs(x)), (-1.0, 1.0),
                                  default_delta_eps_sequence(6 if quick else 8))
        _require(res.discrepancies[-1] < res.discrepancies[0], "no decay")
        _require(0.3 <= res.observed_decay_exponent <= 0.7,
                 f"exponent {res.observed_decay_exponent:.2f}")
        return f"exponent {res.observed_decay_exponent:.2f}"

    add("singular limits: Plemelj discrepancy decay", limits_plemelj_decay)

    def limits_defect_monotone():
        sups = [approximation_defect(profile, 1j * t, grid)[1]
                for t in (1e-1, 1e-2, 1e-3)]
        _require(sups[0] > sups[1] > sups[2], f"not decreasing: {sups}")
        return "imag defect decreasing"

    add("singular limits: approximation defect decay", limits_defect_monotone)

    # -- projected equation
    def ls_t_identity():
        diff = ops.apply_T(ops.phi) - ops.K.solve(ops.phi)
        nrm = math.sqrt(abs(inner_product(diff, diff, grid).real))
        _require(nrm <= 1e-8, f"T phi - K phi = {nrm:.2e}")
        return f"{nrm:.1e}"

    add("projected: T phi = K phi identity", ls_t_identity)

    def ls_self_adjoint():
        rng = np.random.default_rng(4)
        f = rng.standard_normal(grid.n)
        g = rng.standard_normal(grid.n)
        tk = lambda v: ops.solve_T(ops.K.solve(v.astype(complex)))
        lhs = inner_product(tk(f), g, grid)
        rhs = inner_product(f, tk(g), grid)
        _require(abs(lhs - rhs) <= 1e-8, f"asymmetry {abs(lhs - rhs):.2e}")
        return "self-adjoint"

    add("projected: T^-1 K self-adjointness", ls_self_adjoint)

    def ls_r_slope():
        ts = np.logspace(-3, -1, 5)
        norms = [r_norm_probe(ops, t, 1j * t) for t in ts]
        slope = float(np.polyfit(np.log(ts), np.log(norms), 1)[0])
        _require(abs(slope - 1.0) <= 0.1, f"slope {slope:.3f}")
        return f"slope {slope:.3f}"

    add("projected: remainder-norm linear slope", ls_r_slope)

    def ls_two_solvers():
        eps = 1e-2
        c = predict_c(lam_c, eps)
        direct = solve_projected(ops, eps, c, method="direct")
        neumann = solve_projected(ops, eps, c, method="neumann")
        diff = direct.psi - neumann.psi
        nrm = math.sqrt(abs(inner_product(diff, diff, grid).real))
        _require(nrm <= 1e-8, f"solvers differ by {nrm:.2e}")
        _require(direct.residual <= 1e-8, f"residual {direct.residual:.2e}")
        return f"agree to {nrm:.1e}"

    add("projected: direct vs Neumann agreement", ls_two_solvers)

    # -- dispersion
    def disp_point():
        eps = 2e-2 if quick else 1e-2
        point = solve_reduced(ops, lam_c, eps)
        _require(point.c.imag > 0, "Im c <= 0")
        _require(point.winding == 1, f"winding {point.winding}")
        _require(point.G_residual <= 1e-10 * (eps + abs(point.c)), "G residual")
        _require(abs(point.c - point.pencil_c) <= 1e-6,
                 f"oracle gap {abs(point.c - point.pencil_c):.2e}")
        return f"c = {point.c:.2e}"

    add("dispersion: certified point invariants", disp_point)

    def disp_conjugate():
        c = 2e-3 + 1.5e-3j
        lhs = eval_G(ops, 1e-2, -np.conj(c), solver="fast")
        rhs = np.conj(eval_G(ops, 1e-2, c, solver="fast"))
        rel = abs(lhs - rhs) / abs(rhs)
        _require(rel <= 1e-8, f"reflection defect {rel:.2e}")
        return "symmetric"

    add("dispersion: conjugate-reflection symmetry", disp_conjugate)

    # -- vortex sheet
    def sheet_rescale_norm():
        k = 16.0
        m = 1024 if quick else 2048
        inner_ops, outer_ops = sheet_operators(sheet, k, 32.0, 0.1, n=m)
        rng = np.random.default_rng(0)
        v = rng.standard_normal(m)
        lhs = math.sqrt(inner_product(v, v, inner_ops.grid).real)
        rhs = math.sqrt(k) * math.sqrt(inner_product(v, v, outer_ops.grid).real)
        _require(abs(lhs - rhs) <= 1e-12 * rhs, "rescaling norm identity broken")
        return "||R|| = k^(1/2) exact"

    add("sheet: rescaling norm identity", sheet_rescale_norm)

    def sheet_cutoff_bounds():
        build_cutoffs(16.0, 32.0)
        build_cutoffs(8.0, 24.0)
        return "bounds verified at construction"

    add("sheet: cutoff derivative bounds", sheet_cutoff_bounds)

    def sheet_block_coupling():
        k, L = 64.0, 16.0
        m = 2048 if quick else 4096
        inner_ops, outer_ops = sheet_operators(sheet, k, L, 0.0, n=m)
        sol = solve_block_system(k, L, 0.0, 0.0, outer_ops.cutoffs,
                                 inner_ops, outer_ops)
        bound = 1.0 * L ** -0.5
        _require(sol.psi_h1 + sol.phiout_z <= bound,
                 f"{sol.psi_h1 + sol.phiout_z:.3e} > {bound:.3e}")
        _require(sol.assembled_residual <= 1e-6,
                 f"residual {sol.assembled_residual:.2e}")
        return f"coupling norm {sol.psi_h1 + sol.phiout_z:.2e}"

    add("sheet: coupling-only block solve", sheet_block_coupling)

    # -- determinism
    def determinism():
        from .dispersion import continue_curve

        eps_grid = np.geomspace(1e-2, 3e-2, 3)
        a = continue_curve(ops, lam_c, eps_grid)
        b = continue_curve(ops, lam_c, eps_grid)
        same = all(pa.c == pb.c and pa.G_residual == pb.G_residual
                   for pa, pb in zip(a.points, b.points))
        _require(same and len(a.points) == len(b.points), "reruns differ")
        return "bit-identical rerun"

    add("determinism: curve rerun reproducibility", determinism)

    return [c.run() for c in checks]
