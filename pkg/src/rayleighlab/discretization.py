"""Uniform Dirichlet grids, tridiagonal/dense operators, and quadrature.

Vectors live on interior nodes only; the homogeneous Dirichlet values at
the interval ends are implicit zeros.  Second-order central differences
are used throughout, which makes discrete sine modes exact eigenvectors
of -D^2 and gives clean closed-form oracles.

Quadrature helpers:

* ``pv_integral``            -- Cauchy principal value by singularity
                                subtraction plus the exact log term.
* ``near_singular_integral`` -- adaptive composite Gauss panels with
                                dyadic refinement toward a peak point.
* ``fourier_sine_coefficient`` -- trapezoid sine coefficients on (-1, 1),
                                normalized so mode m maps to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.linalg import lu_factor, lu_solve, solve_banded

from .errors import (
    InvalidRange,
    NoConvergence,
    ShapeMismatch,
    SingularityOnBoundary,
    SingularOperator,
)

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class Grid:
    """n interior nodes, uniformly spaced on (y_lo, y_hi), endpoints excluded."""

    n: int
    interval: tuple[float, float]
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 interior nodes")
        lo, hi = self.interval
        if not hi > lo:
            raise ValueError("empty interval")
        h = (hi - lo) / (self.n + 1)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "nodes", lo + h * np.arange(1, self.n + 1))

    def conform(self, *vectors):
        for v in vectors:
            if np.asarray(v).shape[0] != self.n:
                raise ShapeMismatch(f"vector of length {len(v)} on grid with n={self.n}")


class TridiagonalOperator:
    """Symmetric tridiagonal matrix -D^2 + diag(q) on a grid."""

    def __init__(self, diag: np.ndarray, off: np.ndarray):
        diag = np.asarray(diag)
        off = np.asarray(off)
        if off.shape[0] != diag.shape[0] - 1:
            raise ShapeMismatch("off-diagonal must have length n-1")
        self.diag = diag
        self.off = off
        self.n = diag.shape[0]

    @classmethod
    def helmholtz(cls, grid: Grid, alpha_sq: float, q=None) -> "TridiagonalOperator":
        """-D^2 + alpha_sq + q(y) with central differences."""
        d = np.full(grid.n, 2.0 / grid.h**2) + alpha_sq
        if q is not None:
            grid.conform(q)
            d = d + np.asarray(q)
        off = np.full(grid.n - 1, -1.0 / grid.h**2)
        return cls(d, off)

    def apply(self, v):
        v = np.asarray(v)
        if v.shape[0] != self.n:
            raise ShapeMismatch("vector does not conform to operator")
        out = self.diag * v
        out[1:] += self.off * v[:-1]
        out[:-1] += self.off * v[1:]
        return out

    def solve(self, f):
        """Tridiagonal elimination (LAPACK banded LU with pivoting)."""
        f = np.asarray(f)
        if f.shape[0] != self.n:
            raise ShapeMismatch("rhs does not conform to operator")
        ab = np.zeros((3, self.n), dtype=np.result_type(self.diag, self.off, f))
        ab[0, 1:] = self.off
        ab[1, :] = self.diag
        ab[2, :-1] = self.off
        try:
            x = solve_banded((1, 1), ab, f)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
            raise SingularOperator(str(exc)) from exc
        if not np.all(np.isfinite(x)):
            raise SingularOperator("non-finite solution: vanishing pivot")
        return x


class DenseComplexOperator:
    """Dense complex matrix with a cached LU factorization."""

    def __init__(self, matrix: np.ndarray):
        self.matrix = np.asarray(matrix, dtype=complex)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ShapeMismatch("matrix must be square")
        if not np.all(np.isfinite(self.matrix)):
            raise SingularOperator("matrix entries not finite")
        self.n = self.matrix.shape[0]
        try:
            self._lu = lu_factor(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise SingularOperator(str(exc)) from exc
        self.factorized = True

    def apply(self, v):
        return self.matrix @ np.asarray(v, dtype=complex)

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        if b.shape[0] != self.n:
            raise ShapeMismatch("rhs does not conform to operator")
        x = lu_solve(self._lu, b)
        if not np.all(np.isfinite(x)):
            raise SingularOperator("non-finite solution from dense solve")
        return x


def helmholtz_solve(op: TridiagonalOperator, f):
    """Solve (-D^2 + alpha^2) psi = f with implicit Dirichlet zeros."""
    return op.solve(f)


def solve_general_tridiagonal(lower, diag, upper, b):
    """Pivoted banded solve for a non-symmetric tridiagonal system."""
    diag = np.asarray(diag)
    n = diag.shape[0]
    dtype = np.result_type(lower, diag, upper, b)
    ab = np.zeros((3, n), dtype=dtype)
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    x = solve_banded((1, 1), ab, b)
    if not np.all(np.isfinite(x)):
        raise SingularOperator("non-finite solution: vanishing pivot")
    return x


def inner_product(f, g, grid: Grid, norm_kind: str = "L2"):
    """Discrete (f, g) = integral of f * conj(g); H1 adds the derivative term.

    The derivative is the central difference with ghost zeros at both ends
    (the Dirichlet data), one-sided in effect at the first and last node.
    """
    grid.conform(f, g)
    f = np.asarray(f)
    g = np.asarray(g)
    val = grid.h * np.sum(f * np.conj(g))
    if norm_kind == "L2":
        return complex(val)
    if norm_kind == "H1":
        df, dg = central_gradient(f, grid), central_gradient(g, grid)
        val = val + grid.h * np.sum(df * np.conj(dg))
        # the derivative does not vanish at the Dirichlet ends: add the
        # half-weighted trapezoid endpoint terms with one-sided values
        for fb, gb in zip(_end_derivatives(f, grid), _end_derivatives(g, grid)):
            val = val + 0.5 * grid.h * fb * np.conj(gb)
        return complex(val)
    raise ValueError(f"unknown norm_kind {norm_kind!r}")


def _end_derivatives(f, grid: Grid):
    """Second-order one-sided derivative estimates at the interval ends."""
    d_lo = (4.0 * f[0] - f[1]) / (2 * grid.h)
    d_hi = (-4.0 * f[-1] + f[-2]) / (2 * grid.h)
    return d_lo, d_hi


def central_gradient(f, grid: Grid):
    """Central-difference derivative using the implicit zero boundary values."""
    f = np.asarray(f)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - f[:-2]) / (2 * grid.h)
    out[0] = f[1] / (2 * grid.h)
    out[-1] = -f[-2] / (2 * grid.h)
    return out


def dirichlet_form(f, grid: Grid, q=None) -> float:
    """Quadratic form sum |f_{i+1}-f_i|^2/h (+ h*sum q|f|^2), ghost zeros included.

    Matches the quadratic form of the discrete -D^2 (+ diag q) exactly, so
    variational identities hold to roundoff rather than O(h^2).
    """
    grid.conform(f)
    f = np.asarray(f)
    steps = np.diff(f, prepend=0.0, append=0.0)
    val = float(np.sum(np.abs(steps) ** 2)) / grid.h
    if q is not None:
        val += grid.h * float(np.sum(np.asarray(q) * np.abs(f) ** 2))
    return val


def l2_norm(f, grid: Grid) -> float:
    return math.sqrt(abs(inner_product(f, f, grid, "L2")))


def h1_norm(f, grid: Grid) -> float:
    return math.sqrt(abs(inner_product(f, f, grid, "H1")))


def _quad_maybe_complex(func, a, b, **kw):
    probe = np.asarray(func(np.array([(a + b) / 2])))
    kw.setdefault("limit", 200)
    if np.iscomplexobj(probe):
        re = quad(lambda x: float(np.real(func(np.array([x]))[0])), a, b, **kw)[0]
        im = quad(lambda x: float(np.imag(func(np.array([x]))[0])), a, b, **kw)[0]
        return re + 1j * im
    return quad(lambda x: float(np.asarray(func(np.array([x])))[0]), a, b, **kw)[0]


def pv_integral(f, x0: float, interval: tuple[float, float]):
    """p.v. integral of f(x)/(x - x0) by singularity subtraction.

    The subtracted part (f(x) - f(x0))/(x - x0) is smooth for smooth f and
    is integrated adaptively on each side of x0 (quadrature nodes never
    land on x0); the split-off pole integrates exactly to
    f(x0) * log((b - x0)/(x0 - a)).  ``f`` must accept ndarray input.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < x0 < b:
        raise SingularityOnBoundary("x0 must lie strictly inside the interval")
    margin = 1e-6 * (b - a)
    if min(x0 - a, b - x0) < margin:
        raise SingularityOnBoundary("x0 within margin of an endpoint")
    f0 = np.asarray(f(np.array([x0])))[0]

    def g(x):
        return (np.asarray(f(x)) - f0) / (x - x0)

    left = _quad_maybe_complex(g, a, x0, epsabs=1e-13, epsrel=1e-11)
    right = _quad_maybe_complex(g, x0, b, epsabs=1e-13, epsrel=1e-11)
    return left + right + f0 * math.log((b - x0) / (x0 - a))


def _panel_edges(lo: float, hi: float, toward_lo: bool, depth: int):
    """Panel edges on [lo, hi] accumulating dyadically toward one end."""
    width = hi - lo
    offs = width * 0.5 ** np.arange(depth, -1, -1.0)
    if toward_lo:
        return np.concatenate(([lo], lo + offs))
    return np.concatenate((hi - offs[::-1], [hi]))


def _gauss_on_edges(f, edges: np.ndarray, n_base: int):
    """Composite 16-pt Gauss over each [edges_i, edges_i+1] split n_base ways."""
    sub = np.linspace(0.0, 1.0, n_base + 1)
    lo = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * sub[None, :-1]
    hi = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * sub[None, 1:]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = (mid[..., None] + half[..., None] * _GAUSS_X).ravel()
    vals = np.asarray(f(pts)).reshape(*half.shape, _GAUSS_X.size)
    contrib = np.einsum("...k,k->...", vals, _GAUSS_W) * half
    return np.sum(contrib), np.sum(np.abs(contrib))


def near_singular_integral(f, a_prime: float, c_I: float, interval,
                           n_base: int = 2, rtol: float = 1e-9,
                           depth_cap: int = 30):
    """Integral of a smooth integrand peaked near a_prime at scale c_I.

    Composite Gauss panels with dyadic subdivision toward a_prime; depth is
    increased until two successive refinements agree to ``rtol`` (with an
    absolute floor tied to the integral of |f|) or the cap is reached.
    """
    if c_I <= 0:
        raise ValueError("need c_I > 0")
    a, b = float(interval[0]), float(interval[1])
    p = min(max(float(a_prime), a), b)
    prev = None
    diff = math.inf
    total = 0.0 + 0.0j
    for depth in range(2, depth_cap + 1):
        total = 0.0 + 0.0j
        total_abs = 0.0
        if p - a > 0:
            s, sa = _gauss_on_edges(f, _panel_edges(a, p, False, depth), n_base)
            total += s
            total_abs += sa
        if b - p > 0:
            s, sa = _gauss_on_edges(f, _panel_edges(p, b, True, depth), n_base)
            total += s
            total_abs += sa
        if prev is not None:
            diff = abs(total - prev)
            if diff <= rtol * abs(total) + 1e-13 * total_abs:
                return total
        prev = total
    if diff > 1e-6 * max(abs(total), 1e-300):
        raise NoConvergence(
            f"depth cap {depth_cap} reached with relative change "
            f"{diff / max(abs(total), 1e-300):.2e}"
        )
    return total


def sine_mode(grid: Grid, m: int):
    """sin(m*pi*(y+1)/2) sampled on a (-1, 1) grid; unit L2 norm in the limit."""
    return np.sin(m * math.pi * (grid.nodes + 1.0) / 2.0)


def fourier_sine_coefficient(f, m: int, grid: Grid):
    """Trapezoid sine coefficient on (-1, 1); the m-th mode itself maps to 1."""
    if m < 1:
        raise InvalidRange("need mode index m >= 1")
    lo, hi = grid.interval
    if abs(lo + 1.0) > 1e-12 or abs(hi - 1.0) > 1e-12:
        raise ShapeMismatch("sine coefficients are defined on the (-1, 1) grid")
    grid.conform(f)
    return complex(grid.h * np.sum(np.asarray(f) * sine_mode(grid, m)))
