"""The reduced dispersion function G(c, eps), its certified roots, and the
continuation of the unstable-eigenvalue curve.

G(c, eps) = (psi, phi_tilde) with psi the projected-equation solution; its
zero in the upper half-plane is the unstable eigenvalue.  The root is
located by a complex secant iteration warm-started from the straight-line
prediction c_tilde = -eps/lambda, then certified two independent ways:

* a winding-number count of G around the disk of radius eps/(2|lambda|)
  about c_tilde (the argument-principle step of the construction), and
* a generalized-pencil eigenvalue obtained by clearing the (U - c)
  denominator of the Rayleigh equation, solved by shift-invert iteration
  on tridiagonal factorizations (an oracle that never touches the
  projected-equation machinery).

Secant and winding samples use the O(n) Sherman-Morrison evaluation of G;
accepted roots are re-evaluated through the dense direct solve, which
stays accurate where the tridiagonal block turns singular.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .discretization import (
    Grid,
    TridiagonalOperator,
    inner_product,
    solve_general_tridiagonal,
)
from .errors import (
    ConvergedToRealAxis,
    ImagNotPositive,
    NotConverged,
    PhaseUnwrapAmbiguous,
    ShapeMismatch,
    WindingMismatch,
)
from .lyapunov_schmidt import RayleighOperators, solve_projected, solve_projected_fast
from .neutral_modes import NeutralMode
from .profiles import ShearProfile
from .singular_limits import SpectralCoefficientLambda


@dataclass(frozen=True)
class DispersionPoint:
    """One certified sample of the unstable-eigenvalue curve."""

    eps: float
    c: complex
    G_residual: float
    winding: int
    iterations: int
    pencil_c: complex
    growth_rate: float


@dataclass(frozen=True)
class WindingCertificate:
    winding: int
    min_abs_g: float
    n_samples: int


@dataclass(frozen=True)
class CurveGap:
    eps: float
    error: str


@dataclass(frozen=True)
class CurveResult:
    points: tuple[DispersionPoint, ...]
    gaps: tuple[CurveGap, ...]
    slope: float
    slope_target: float

    @property
    def slope_rel_dev(self) -> float:
        return abs(self.slope - self.slope_target) / abs(self.slope_target)


@dataclass(frozen=True)
class StreamFunctionSample:
    x: np.ndarray
    y: np.ndarray
    field: np.ndarray  # shape (len(y), len(x)), t = 0 snapshot
    growth_rate: float
    phase_speed: float


def _as_lambda(lam) -> complex:
    if isinstance(lam, SpectralCoefficientLambda):
        return lam.as_complex
    lam = complex(lam)
    if lam.imag <= 0:
        raise ImagNotPositive(f"need Im lambda > 0, got {lam.imag:g}")
    return lam


def predict_c(lam, eps: float) -> complex:
    """Straight-line prediction c_tilde = -eps/lambda (upper half-plane)."""
    if eps == 0:
        return 0.0 + 0.0j
    if eps < 0:
        raise ValueError("need eps >= 0")
    return -eps / _as_lambda(lam)


def eval_G(ops: RayleighOperators, eps: float, c: complex,
           solver: str = "direct") -> complex:
    """G(c, eps) = (psi, phi_tilde) for the projected solution psi."""
    if solver == "direct":
        psi = solve_projected(ops, eps, c, method="direct").psi
    elif solver == "fast":
        psi = solve_projected_fast(ops, eps, c)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return complex(inner_product(psi, ops.phi, ops.grid))


def phase_winding(values: np.ndarray):
    """(winding, min |value|) from samples around a closed loop.

    Phase increments between consecutive samples must stay below pi/2;
    otherwise PhaseUnwrapAmbiguous demands a finer sampling.
    """
    phases = np.angle(values)
    steps = np.diff(phases, append=phases[0])
    steps = (steps + math.pi) % (2 * math.pi) - math.pi
    if np.max(np.abs(steps)) > math.pi / 2:
        raise PhaseUnwrapAmbiguous(
            f"phase jump {np.max(np.abs(steps)):.3f} > pi/2 with {len(values)} samples"
        )
    winding = int(round(float(np.sum(steps)) / (2 * math.pi)))
    return winding, float(np.min(np.abs(values)))


def winding_number(ops: RayleighOperators, eps: float, center: complex,
                   radius: float, n_samples: int = 256,
                   solver: str = "fast") -> WindingCertificate:
    """Argument-principle zero count of G(., eps) around a circle."""
    if n_samples < 64:
        raise ValueError("need n_samples >= 64")
    center = complex(center)
    if center.imag - radius <= 0:
        raise ValueError("certificate circle must stay in the upper half-plane")
    thetas = 2 * math.pi * np.arange(n_samples) / n_samples
    values = np.array([
        eval_G(ops, eps, center + radius * cmath.exp(1j * t), solver=solver)
        for t in thetas
    ])
    winding, min_abs = phase_winding(values)
    return WindingCertificate(winding=winding, min_abs_g=min_abs,
                              n_samples=n_samples)


def _certified_winding(ops, eps, center, radius, n_samples) -> WindingCertificate:
    n = n_samples
    while True:
        try:
            return winding_number(ops, eps, center, radius, n_samples=n)
        except PhaseUnwrapAmbiguous:
            if n >= 2048:
                raise
            n *= 2


def solve_reduced(ops: RayleighOperators, lam, eps: float,
                  tol: float | None = None, max_iter: int = 50,
                  n_samples: int = 256, c_init: complex | None = None,
                  pencil_check: bool = True) -> DispersionPoint:
    """Locate and certify the root of G(., eps) near the prediction.

    Secant iteration (warm starts at c_init, default the prediction
    c_tilde, plus a 0.1% perturbation) runs on the fast G; once the
    residual is small the last steps re-evaluate G densely so the recorded
    |G| at the root is trustworthy.  The Rouche disk certificate and the
    pencil oracle then validate the accepted point.
    """
    lam_c = _as_lambda(lam)
    c_tilde = predict_c(lam_c, eps)
    radius = eps / (2 * abs(lam_c))

    def tol_at(c):
        return 1e-10 * (eps + abs(c)) if tol is None else tol

    def g_of(c, solver):
        return eval_G(ops, eps, c, solver=solver)

    c_start = c_tilde if c_init is None else complex(c_init)
    c_prev, c_cur = c_start, c_start * (1 + 1e-3)
    g_prev, g_cur = g_of(c_prev, "fast"), g_of(c_cur, "fast")
    solver = "fast"
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        if g_cur == g_prev:
            raise NotConverged("secant stalled: equal G values")
        c_next = c_cur - g_cur * (c_cur - c_prev) / (g_cur - g_prev)
        for _ in range(8):  # keep iterates in the upper half-plane
            if c_next.imag > 0:
                break
            c_next = 0.5 * (c_next + c_cur)
        else:
            raise NotConverged("iterates escaped the upper half-plane")
        if solver == "fast" and abs(g_cur) < 1e-7 * max(1.0, eps):
            solver = "direct"  # polish with the dense evaluation
        c_prev, g_prev = c_cur, g_cur
        c_cur = c_next
        g_cur = g_of(c_cur, solver)
        if solver == "direct" and abs(g_cur) <= tol_at(c_cur):
            break
    else:
        raise NotConverged(
            f"|G| = {abs(g_cur):.3e} after {max_iter} secant iterations"
        )

    if c_cur.imag <= 0:
        raise NotConverged("root left the upper half-plane")
    cert = _certified_winding(ops, eps, c_tilde, radius, n_samples)
    if cert.winding != 1:
        raise WindingMismatch(
            f"winding {cert.winding} != 1 on the prediction disk (eps outside regime?)"
        )
    if abs(c_cur - c_tilde) > radius:
        raise WindingMismatch("accepted root lies outside the certified disk")

    pencil = complex(math.nan, math.nan)
    if pencil_check:
        pencil, _ = pencil_eigenvalue(ops.profile, ops.mode, eps, shift=c_cur)
    alpha = math.sqrt(ops.alpha_sq)
    return DispersionPoint(
        eps=eps, c=c_cur, G_residual=abs(g_cur), winding=cert.winding,
        iterations=iterations, pencil_c=pencil,
        growth_rate=alpha * c_cur.imag,
    )


def pencil_eigenvalue(profile: ShearProfile, mode: NeutralMode, eps: float,
                      shift: complex, max_iter: int = 50,
                      _retried: bool = False):
    """Independent oracle: clear the (U - c) denominator and shift-invert.

    Multiplying the perturbed Rayleigh equation by (U - c) gives the
    linear pencil A phi = c B phi with B = -D^2 + (alpha_tilde^2 - eps)
    and A = diag(U) B + diag(U'').  A - sigma*B stays tridiagonal, so each
    inverse-power step is O(n); the shift is refreshed from the
    generalized Rayleigh quotient every 10 steps.
    """
    shift = complex(shift)
    if shift.imag == 0:
        raise ValueError("shift must stay off the real axis")
    grid = mode.grid
    nodes = grid.nodes
    u = np.asarray(profile.eval(nodes, 0))
    u2 = np.asarray(profile.eval(nodes, 2))
    b = TridiagonalOperator.helmholtz(grid, mode.alpha_sq - eps)

    def apply_a(v):
        return u * b.apply(v) + u2 * v

    def solve_shifted(sigma, v):
        us = u - sigma
        diag = us * b.diag + u2
        lower = us[1:] * b.off
        upper = us[:-1] * b.off
        return solve_general_tridiagonal(lower, diag, upper, v)

    norm_a = float(np.max(np.abs(u)) * (2 / grid.h**2 + abs(mode.alpha_sq - eps))
                   + np.max(np.abs(u2)))
    norm_b = float(2 / grid.h**2 + abs(mode.alpha_sq - eps))

    # the loose contract scale 1e-8*(||A|| + |c| ||B||) admits eigenvalue
    # errors far above the cross-check tolerance, so iterate down to the
    # accuracy floor and only use the contract as the failure threshold
    v = mode.phi.astype(complex)
    v /= np.linalg.norm(v)
    sigma = shift
    c_est = sigma
    best = math.inf
    stale = 0
    for it in range(1, max_iter + 1):
        w = solve_shifted(sigma, b.apply(v))
        w /= np.linalg.norm(w)
        v = w
        c_est = complex((np.conj(v) @ apply_a(v)) / (np.conj(v) @ b.apply(v)))
        residual = float(np.linalg.norm(apply_a(v) - c_est * b.apply(v)))
        scale = norm_a + abs(c_est) * norm_b
        if residual <= 1e-14 * scale:
            break
        if residual < 0.5 * best:
            best, stale = residual, 0
        else:
            stale += 1
            if stale >= 4 and residual <= 1e-8 * scale:
                break  # stagnated at the rounding floor
        if it % 10 == 0 and c_est.imag * shift.imag > 0:
            sigma = c_est
    else:
        raise NotConverged(f"pencil iteration: residual {residual:.3e} after {max_iter} steps")
    if residual > 1e-8 * (norm_a + abs(c_est) * norm_b):
        raise NotConverged(f"pencil residual {residual:.3e} above contract")

    if abs(c_est.imag) < 1e-10 and abs(c_est) > 1e-8:
        # landed in the discretized critical-layer cluster on the real axis
        if not _retried:
            return pencil_eigenvalue(profile, mode, eps, shift * (1 + 0.5j),
                                     max_iter=max_iter, _retried=True)
        raise ConvergedToRealAxis(f"pencil converged to c = {c_est:.3e}")

    phi = v / math.sqrt(abs(inner_product(v, v, grid).real))
    s = complex(inner_product(phi, mode.phi, grid))
    if abs(s) > 0:
        phi = phi * (np.conj(s) / abs(s))
    return c_est, phi


def continue_curve(ops: RayleighOperators, lam, eps_grid,
                   warm_start: bool = True, n_samples: int = 256,
                   tol: float | None = None) -> CurveResult:
    """Trace c(eps) over an increasing eps grid with per-point certificates.

    Failures are recorded as gaps and the curve continues.  The summary
    least-squares slope of Im c against eps (through the origin) is
    compared with the prediction Im(-1/lambda).
    """
    eps_list = [float(e) for e in eps_grid]
    if any(b <= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps grid must be strictly increasing")
    lam_c = _as_lambda(lam)
    points: list[DispersionPoint] = []
    gaps: list[CurveGap] = []
    seed: complex | None = None
    eps_prev = math.nan
    for eps in eps_list:
        c_init = seed * (eps / eps_prev) if (warm_start and seed is not None) else None
        try:
            point = solve_reduced(ops, lam_c, eps, tol=tol,
                                  n_samples=n_samples, c_init=c_init)
            points.append(point)
            seed, eps_prev = point.c, eps
        except Exception as exc:  # per-point failure: record and continue
            gaps.append(CurveGap(eps=eps, error=f"{type(exc).__name__}: {exc}"))
    if points:
        es = np.array([p.eps for p in points])
        ims = np.array([p.c.imag for p in points])
        slope = float(np.sum(es * ims) / np.sum(es * es))
    else:
        slope = math.nan
    target = (-1.0 / lam_c).imag
    return CurveResult(points=tuple(points), gaps=tuple(gaps),
                       slope=slope, slope_target=target)


def validated_eps_range(ops: RayleighOperators, lam, eps_seed: float = 1e-2,
                        n_samples: int = 128, bisect_steps: int = 6):
    """Empirical eps window where the winding certificate passes.

    The theorems only promise "sufficiently small eps"; at a fixed grid the
    window is also bounded below by critical-layer resolution (the root
    leaves the prediction disk once Im c drops under the h |U'| sampling
    scale).  Both boundaries are located by doubling/halving scans plus
    bisection and reported rather than asserted.
    """
    lam_c = _as_lambda(lam)

    def passes(eps: float) -> bool:
        try:
            solve_reduced(ops, lam_c, eps, n_samples=n_samples,
                          pencil_check=False)
            return True
        except Exception:
            return False

    if not passes(eps_seed):
        raise NotConverged(f"seed eps {eps_seed:g} fails its certificate")

    hi_pass, hi_fail = eps_seed, None
    while hi_fail is None and hi_pass < 0.9 * ops.alpha_sq:
        cand = min(2 * hi_pass, 0.9 * ops.alpha_sq)
        if passes(cand):
            hi_pass = cand
            if cand >= 0.9 * ops.alpha_sq:
                break
        else:
            hi_fail = cand
    if hi_fail is not None:
        for _ in range(bisect_steps):
            mid = 0.5 * (hi_pass + hi_fail)
            if passes(mid):
                hi_pass = mid
            else:
                hi_fail = mid

    lo_pass, lo_fail = eps_seed, None
    while lo_fail is None and lo_pass > 1e-6:
        cand = max(0.5 * lo_pass, 1e-6)
        if passes(cand):
            lo_pass = cand
            if cand <= 1e-6:
                break
        else:
            lo_fail = cand
    if lo_fail is not None:
        for _ in range(bisect_steps):
            mid = 0.5 * (lo_pass + lo_fail)
            if passes(mid):
                lo_pass = mid
            else:
                lo_fail = mid
    return lo_pass, hi_pass


def assemble_unstable_mode(mode: NeutralMode, psi, alpha: float, c: complex,
                           nx: int = 64) -> StreamFunctionSample:
    """Sample the stream function phi(y) e^{i alpha x} at t = 0."""
    psi = np.asarray(psi)
    if psi.shape[0] != mode.grid.n:
        raise ShapeMismatch("psi does not conform to the mode grid")
    phi = mode.phi + psi
    x = np.linspace(0.0, 2 * math.pi / alpha, nx, endpoint=False)
    field = phi[:, None] * np.exp(1j * alpha * x)[None, :]
    return StreamFunctionSample(
        x=x, y=mode.grid.nodes, field=field,
        growth_rate=alpha * complex(c).imag,
        phase_speed=complex(c).real,
    )
