"""Neutral-mode eigenproblems: the channel Sturm-Liouville problem and the
truncated-line bound state.

The channel problem at zero wave speed,

    -phi'' + (U''/U) phi = -alpha^2 phi,   phi(+-1) = 0,

is discretized as a symmetric tridiagonal matrix whose smallest eigenvalue
is -alpha_tilde^2.  The extreme eigenvalue comes from Sturm-sequence
bisection (certified bracketing, no dense solver), the eigenvector from
inverse iteration, and the returned eigenvalue from a final Rayleigh
quotient of the converged vector.

The line problem is solved on nested windows (-A, A); Dirichlet domain
monotonicity makes beta_A^2 increase toward the whole-line eigenvalue, and
the geometric tail of the differences is extrapolated away.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .discretization import Grid, TridiagonalOperator, dirichlet_form, inner_product
from .errors import (
    NoBoundState,
    NotConverging,
    NoUnstableNeutralMode,
    OutOfDomain,
)
from .profiles import ShearProfile, check_assumptions


@dataclass(frozen=True)
class NeutralMode:
    """Converged eigenpair with its normalization convention."""

    alpha_sq: float
    phi: np.ndarray
    grid: Grid
    residual: float
    normalization: str  # "L2_unit" or "H1_unit"

    @cached_property
    def _interp(self):
        from scipy.interpolate import CubicSpline

        lo, hi = self.grid.interval
        ys = np.concatenate(([lo], self.grid.nodes, [hi]))
        vals = np.concatenate(([0.0], self.phi, [0.0]))
        return CubicSpline(ys, vals, bc_type="natural")

    def phi_at(self, y):
        """Cubic interpolation of the eigenfunction (zero at the ends)."""
        return self._interp(y)


@dataclass(frozen=True)
class LineLimitResult:
    alpha0: float
    alpha0_sq: float
    widths: tuple[float, ...]
    eigenvalues: tuple[float, ...]
    monotone: bool
    correction: float


def _sturm_count(diag: np.ndarray, off: np.ndarray, x: float) -> int:
    """Number of eigenvalues of the symmetric tridiagonal matrix below x."""
    d = diag.tolist()
    off2 = (off * off).tolist()
    # pivot floor keeps off^2/q from overflowing without changing counts
    pivmin = 1e-280 * max(1.0, float(np.max(off * off)))
    count = 0
    q = d[0] - x
    if q < 0:
        count += 1
    for i in range(1, len(d)):
        if abs(q) < pivmin:
            q = pivmin if q >= 0 else -pivmin
        q = d[i] - x - off2[i - 1] / q
        if q < 0:
            count += 1
    return count


def smallest_eigenpair(op: TridiagonalOperator, max_bisect: int = 80,
                       inverse_steps: int = 3):
    """Extreme (smallest) eigenpair by Sturm bisection plus inverse iteration."""
    d, e = op.diag, op.off
    pad = np.concatenate(([0.0], np.abs(e), [0.0]))
    lo = float(np.min(d - pad[:-1] - pad[1:]))
    hi = float(np.max(d + pad[:-1] + pad[1:]))
    scale = max(abs(lo), abs(hi), 1.0)
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        if _sturm_count(d, e, mid) >= 1:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * scale:
            break
    lam = 0.5 * (lo + hi)

    n = d.shape[0]
    v = np.ones(n)
    shift = lam
    for _ in range(inverse_steps):
        shifted = TridiagonalOperator(d - shift, e)
        try:
            w = shifted.solve(v)
        except Exception:
            shift = lam + 1e-12 * scale
            w = TridiagonalOperator(d - shift, e).solve(v)
        v = w / np.linalg.norm(w)
    lam = float(v @ op.apply(v))  # Rayleigh quotient of the converged vector
    residual = float(np.linalg.norm(op.apply(v) - lam * v))
    return lam, v, residual


def _potential(profile: ShearProfile, grid: Grid) -> np.ndarray:
    """U''/U at the nodes with the continuous extension across the zero."""
    return -np.asarray(profile.ratio(grid.nodes))


def solve_neutral(profile: ShearProfile, grid: Grid) -> NeutralMode:
    """Maximal channel eigenvalue alpha_tilde^2 with L2-unit eigenfunction.

    Raises NoUnstableNeutralMode when the maximal eigenvalue is not
    positive (stable-profile case).
    """
    report = check_assumptions(profile, max(257, min(4 * grid.n + 1, 4097)))
    if not report.passed:
        raise ValueError(f"profile fails standing assumptions: {report}")
    op = TridiagonalOperator.helmholtz(grid, 0.0, q=_potential(profile, grid))
    lam, v, raw_res = smallest_eigenpair(op)
    alpha_sq = -lam
    if alpha_sq <= 0:
        raise NoUnstableNeutralMode(
            f"maximal eigenvalue {alpha_sq:.6g} is not positive"
        )
    norm = math.sqrt(inner_product(v, v, grid).real)
    phi = v / norm
    idx = int(np.argmin(np.abs(grid.nodes - profile.a)))
    if phi[idx] < 0:
        phi = -phi
    residual = raw_res / norm * math.sqrt(grid.h)  # discrete L2 scaling
    return NeutralMode(alpha_sq=alpha_sq, phi=phi, grid=grid,
                       residual=residual, normalization="L2_unit")


def rayleigh_quotient(phi, profile: ShearProfile, grid: Grid) -> float:
    """Energy functional: integral of |phi'|^2 + (U''/U)|phi|^2.

    Uses the staggered (operator-consistent) gradient so the minimum over
    unit vectors equals -alpha_tilde^2 to roundoff on the eigenvector.
    Requires phi to be L2-normalized.
    """
    norm = inner_product(phi, phi, grid).real
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"phi must be L2-normalized, got norm^2 = {norm:.3e}")
    return dirichlet_form(phi, grid, q=_potential(profile, grid))


def line_grid(half_width: float, nodes_per_unit: int = 128) -> Grid:
    """Uniform grid on (-A, A) whose nodes avoid the curvature seam |y| = 2."""
    n = int(round(2 * half_width * nodes_per_unit))
    return Grid(n, (-float(half_width), float(half_width)))


def solve_truncated_line(profile: ShearProfile, half_width: float,
                         grid: Grid | None = None,
                         nodes_per_unit: int = 128) -> NeutralMode:
    """Largest eigenvalue beta_A^2 of the Dirichlet window (-A, A), H1-unit."""
    if profile.domain[0] != -math.inf:
        raise OutOfDomain("line problem needs a line-domain profile")
    if half_width < 4:
        raise ValueError("need half_width >= 4 to contain the curvature support")
    if grid is None:
        grid = line_grid(half_width, nodes_per_unit)
    lo, hi = grid.interval
    if abs(lo + half_width) > 1e-12 or abs(hi - half_width) > 1e-12:
        raise ValueError("grid interval must be (-half_width, half_width)")
    op = TridiagonalOperator.helmholtz(grid, 0.0, q=_potential(profile, grid))
    lam, v, raw_res = smallest_eigenpair(op)
    beta_sq = -lam
    if beta_sq <= 0:
        raise NoBoundState(f"largest eigenvalue {beta_sq:.6g} is not positive")
    norm = math.sqrt(inner_product(v, v, grid, "H1").real)
    phi = v / norm
    idx = int(np.argmin(np.abs(grid.nodes - profile.a)))
    if phi[idx] < 0:
        phi = -phi
    residual = raw_res / np.linalg.norm(v) * math.sqrt(grid.h)
    return NeutralMode(alpha_sq=beta_sq, phi=phi, grid=grid,
                       residual=residual, normalization="H1_unit")


def line_eigenvalue_limit(profile: ShearProfile, widths,
                          nodes_per_unit: int = 128) -> LineLimitResult:
    """Extrapolated whole-line eigenvalue from a nested-width table.

    The Dirichlet tail error decays like exp(-2*alpha0*A), so successive
    differences shrink geometrically; the last ratio extrapolates the tail.
    """
    widths = tuple(float(a) for a in widths)
    if len(widths) < 3:
        raise NotConverging("need at least 3 widths")
    if any(b <= a for a, b in zip(widths, widths[1:])):
        raise NotConverging("widths must be strictly increasing")
    eigs = []
    for a in widths:
        eigs.append(solve_truncated_line(profile, a,
                                         nodes_per_unit=nodes_per_unit).alpha_sq)
    diffs = np.diff(eigs)
    monotone = bool(np.all(diffs > 0))
    if np.any(np.abs(diffs[1:]) >= np.abs(diffs[:-1])):
        raise NotConverging(f"successive differences fail to decrease: {diffs}")
    r = diffs[-1] / diffs[-2]
    correction = float(diffs[-1] * r / (1.0 - r)) if abs(r) < 1 else 0.0
    alpha0_sq = float(eigs[-1] + correction)
    return LineLimitResult(
        alpha0=math.sqrt(max(alpha0_sq, 0.0)),
        alpha0_sq=alpha0_sq,
        widths=widths,
        eigenvalues=tuple(eigs),
        monotone=monotone,
        correction=correction,
    )
