"""Discrete projected-equation machinery: K, T, R and the rank-one projection.

With the neutral pair (alpha_tilde^2, phi_tilde) fixed, the perturbed
Rayleigh problem splits into the projected equation

    T psi = R_{eps,c} psi + R_{eps,c} phi_tilde,
    T psi = psi + K( (U''/U) psi + P psi ),      K = (-D^2 + alpha^2)^{-1},
    R_{eps,c} f = K( w f ),   w = eps + U''/U - U''/(U-c),

plus the scalar reduced equation handled by the dispersion module.  The
coefficient w is evaluated in the cancellation-free product form
w = eps + c*ratio/(U - c) with ratio = -U''/U continuously extended.

Two solvers are provided: a dense direct factorization of the full
(tridiagonal + rank-one) system, and the Neumann series
psi = sum_k (T^{-1} R)^k phi_tilde whose geometric term decay certifies
the contraction.  A Sherman-Morrison fast path (exact direct formula,
O(n) per solve, with iterative refinement) backs the dispersion hot loop;
it degrades near the dispersion root where the tridiagonal block turns
singular, which is why root certification re-solves densely.

All operators use the discrete eigenvalue alpha_tilde^2 of the mode, not
the continuum one, so the identity T phi_tilde = K phi_tilde holds to
solver roundoff in the discrete algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .discretization import (
    DenseComplexOperator,
    Grid,
    TridiagonalOperator,
    inner_product,
)
from .errors import DivergentCoefficient, NeumannDiverging, SingularT
from .neutral_modes import NeutralMode
from .profiles import ShearProfile


@dataclass(frozen=True)
class ProjectedSolve:
    """Solution of the projected equation plus its certificate."""

    psi: np.ndarray
    method: str
    residual: float
    terms: int
    contraction: float | None
    term_norms: tuple[float, ...]


class RayleighOperators:
    """Operators bound to one (profile, grid, neutral mode) triple.

    Construction is cheap; the dense T factorization is built lazily on
    first use so that fast-path-only consumers (large scan grids) never
    pay the O(n^3) cost.  Instances are immutable and safe to share.
    """

    def __init__(self, profile: ShearProfile, grid: Grid, mode: NeutralMode):
        if mode.grid is not grid and mode.grid.n != grid.n:
            raise ValueError("mode was solved on a different grid")
        self.profile = profile
        self.grid = grid
        self.mode = mode
        self.alpha_sq = mode.alpha_sq
        self.phi = mode.phi
        nodes = grid.nodes
        self.ratio = np.asarray(profile.ratio(nodes))
        self.q = -self.ratio  # U''/U with the continuous extension
        self.u = np.asarray(profile.eval(nodes, 0))
        self.K = TridiagonalOperator.helmholtz(grid, self.alpha_sq)

    # -- coefficient and component operators --------------------------------

    def coefficient(self, eps: float, c: complex) -> np.ndarray:
        """w = eps + U''/U - U''/(U-c) in the product form eps + c*ratio/(U-c)."""
        c = complex(c)
        if c == 0:
            return np.full(self.grid.n, float(eps), dtype=complex)
        if c.imag == 0.0:
            raise DivergentCoefficient(
                "real nonzero c makes U''/(U-c) singular off the inflection point"
            )
        return eps + c * self.ratio / (self.u - c)

    def apply_P(self, f) -> np.ndarray:
        """Rank-one projection (f, phi_tilde) phi_tilde in the discrete L2."""
        self.grid.conform(f)
        return complex(inner_product(f, self.phi, self.grid)) * self.phi

    def apply_K(self, f) -> np.ndarray:
        return self.K.solve(f)

    def apply_R(self, eps: float, c: complex, f) -> np.ndarray:
        """R_{eps,c} f = K(w f)."""
        self.grid.conform(f)
        return self.K.solve(self.coefficient(eps, c) * np.asarray(f))

    def apply_T(self, f) -> np.ndarray:
        """T f = f + K(q f + P f) by tridiagonal solve (no dense matrix)."""
        self.grid.conform(f)
        f = np.asarray(f)
        return f + self.K.solve(self.q * f + self.apply_P(f))

    @cached_property
    def T_factorization(self) -> DenseComplexOperator:
        """Dense LU of T = I + K(diag(q) + P); one factorization per grid."""
        n = self.grid.n
        m = np.diag(self.q).astype(complex)
        m += self.grid.h * np.outer(self.phi, self.phi)
        try:
            y = self.K.solve(m)
            op = DenseComplexOperator(np.eye(n, dtype=complex) + y)
        except Exception as exc:
            raise SingularT(f"failed to factorize T: {exc}") from exc
        return op

    def solve_T(self, b) -> np.ndarray:
        """x with T x = b via the cached dense factorization."""
        x = self.T_factorization.solve(b)
        res = np.linalg.norm(self.apply_T(x) - np.asarray(b, dtype=complex))
        if res > 1e-10 * max(np.linalg.norm(b), 1e-300):
            raise SingularT(f"T solve residual {res:.2e} exceeds contract")
        return x

    # -- full projected system ----------------------------------------------

    def a_tri(self, eps: float, c: complex) -> TridiagonalOperator:
        """Tridiagonal part -D^2 + (alpha^2 - eps) + diag(U''/(U-c)).

        Equals K's matrix plus diag(q - w); singular exactly at a discrete
        dispersion root, where only the rank-one projection restores
        invertibility.
        """
        w = self.coefficient(eps, c)
        return TridiagonalOperator(self.K.diag + (self.q - w), self.K.off)

    def projected_residual(self, eps: float, c: complex, psi) -> float:
        """Discrete L2 residual of the projected equation for a candidate psi."""
        w = self.coefficient(eps, c)
        lhs = self.a_tri(eps, c).apply(psi) + self.apply_P(psi)
        return math.sqrt(self.grid.h) * float(np.linalg.norm(lhs - w * self.phi))


def _solve_direct(ops: RayleighOperators, eps: float, c: complex) -> np.ndarray:
    """Dense factorization of the tridiagonal + rank-one projected system."""
    a = ops.a_tri(eps, c)
    n = ops.grid.n
    full = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    full[idx, idx] = a.diag
    full[idx[1:], idx[:-1]] = a.off
    full[idx[:-1], idx[1:]] = a.off
    full += ops.grid.h * np.outer(ops.phi, ops.phi)
    rhs = ops.coefficient(eps, c) * ops.phi
    return DenseComplexOperator(full).solve(rhs)


def solve_projected_fast(ops: RayleighOperators, eps: float, c: complex,
                         refine: int = 2) -> np.ndarray:
    """Sherman-Morrison direct solve, O(n), with iterative refinement.

    Exact in exact arithmetic; loses accuracy when a_tri approaches
    singularity (near the dispersion root), so certification paths should
    use the dense solve instead.
    """
    a = ops.a_tri(eps, c)
    h = ops.grid.h
    phi = ops.phi
    rhs = ops.coefficient(eps, c) * phi

    both = a.solve(np.column_stack([rhs, phi.astype(complex)]))
    xb, xu = both[:, 0], both[:, 1]
    denom = 1.0 + h * (phi @ xu)

    psi = xb - (h * (phi @ xb) / denom) * xu
    for _ in range(refine):
        r = rhs - (a.apply(psi) + h * (phi @ psi) * phi)
        xr = a.solve(r)
        psi = psi + (xr - (h * (phi @ xr) / denom) * xu)
    return psi


def solve_projected(ops: RayleighOperators, eps: float, c: complex,
                    method: str = "direct", max_terms: int = 80,
                    term_tol: float = 1e-12) -> ProjectedSolve:
    """Solve the projected equation for psi.

    method="direct": one dense factorization of the full system.
    method="neumann": accumulate sum_{k>=1} (T^{-1} R)^k phi_tilde until the
    term norm drops below ``term_tol``; raises NeumannDiverging when the
    term norms stop decaying geometrically (outside the contraction regime).
    """
    if method == "direct":
        psi = _solve_direct(ops, eps, c)
        res = ops.projected_residual(eps, c, psi)
        return ProjectedSolve(psi=psi, method=method, residual=res,
                              terms=1, contraction=None, term_norms=())
    if method != "neumann":
        raise ValueError(f"unknown method {method!r}")

    term = ops.phi.astype(complex)
    psi = np.zeros_like(term)
    norms: list[float] = []
    for _ in range(max_terms):
        term = ops.solve_T(ops.apply_R(eps, c, term))
        t_norm = math.sqrt(abs(inner_product(term, term, ops.grid).real))
        norms.append(t_norm)
        psi = psi + term
        if len(norms) >= 2 and norms[-1] >= 0.999 * norms[-2]:
            raise NeumannDiverging(
                f"term norms not decaying geometrically: {norms[-2]:.3e} -> {norms[-1]:.3e}"
            )
        if t_norm < term_tol:
            break
    else:
        raise NeumannDiverging(f"no convergence within {max_terms} terms")
    contraction = norms[1] / norms[0] if len(norms) >= 2 and norms[0] > 0 else 0.0
    res = ops.projected_residual(eps, c, psi)
    return ProjectedSolve(psi=psi, method="neumann", residual=res,
                          terms=len(norms), contraction=contraction,
                          term_norms=tuple(norms))


def r_norm_probe(ops: RayleighOperators, eps: float, c: complex,
                 n_iter: int = 40, seed: int = 0) -> float:
    """H1 -> H1 operator norm estimate of R_{eps,c} by power iteration.

    Iterates R* R with the adjoint taken in the discrete H1 inner product
    (Gram operator I + dirichlet form), matching the space in which the
    remainder-norm bound ||R|| <~ eps + |c| is stated.
    """
    w = ops.coefficient(eps, c)
    gram = TridiagonalOperator.helmholtz(ops.grid, 1.0)  # G = I + (-D^2)
    h = ops.grid.h

    def h1g(f, g):  # <f, g>_G = h * conj(g) . (G f), the discrete H1 pairing
        return h * np.sum(np.conj(g) * gram.apply(f))

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(ops.grid.n) + 1j * rng.standard_normal(ops.grid.n)
    v = v / math.sqrt(abs(h1g(v, v)))
    lam = 0.0
    for _ in range(n_iter):
        rv = ops.K.solve(w * v)
        # H1 adjoint: G^{-1} R^H G, with R^H = conj(w) * K (K symmetric)
        z = gram.solve(np.conj(w) * ops.K.solve(gram.apply(rv)))
        lam = math.sqrt(abs(h1g(z, v)))
        nrm = math.sqrt(abs(h1g(z, z)))
        if nrm == 0:
            return 0.0
        v = z / nrm
    return lam
