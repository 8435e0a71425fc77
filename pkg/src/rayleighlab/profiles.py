"""Analytic shear-velocity profiles U(y) and their standing-assumption checks.

All families evaluate U and its first three derivatives from closed forms
(no numerical differentiation), so downstream quadrature and eigensolves
see exact coefficients.  A profile knows the location ``a`` of its single
zero, which by the standing assumptions is also the inflection point, and
provides the continuous extension of -U''/U across it.

Families:

* ``sine_profile(beta)``      -- U(y) = -sin(beta*y) on (-1, 1), zero at 0.
* ``sheet_base_profile()``    -- U0(y) = -sin(pi*y/4) on [-2, 2], +/-1 outside;
                                 the thin-shear-layer base with compactly
                                 supported curvature.
* ``rescale_profile(base,k)`` -- U(y) = U0(k*y) on (-1, 1).
* ``custom_profile(terms)``   -- finite sums of sin/cos/monomial terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain, RatioUndefined, UnsupportedOrder

_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class AssumptionReport:
    """Outcome of sampling the standing assumptions on a profile."""

    sign_changes: int
    min_ratio: float
    du_at_zero: float
    n_samples: int
    passed: bool


class ShearProfile:
    """Base class: analytic velocity profile with exact derivatives.

    Instances are immutable after construction; every method is pure.
    ``derivative_order_available`` is the highest order ``eval`` supplies
    (piecewise-exact; one-sided values at any seam).  ``continuity_order``
    records global smoothness honestly: the sheet base is only C^1 at the
    seam |y| = 2.
    """

    family: str = "abstract"
    derivative_order_available: int = 3
    continuity_order: int = 3

    def __init__(self, a: float, domain: tuple[float, float], tol_a: float):
        self.a = float(a)
        self.domain = (float(domain[0]), float(domain[1]))
        self.tol_a = float(tol_a)
        ua = self.eval(self.a, 0)
        if abs(ua) > 1e-12:
            raise ValueError(f"stored zero violated: U(a) = {ua:g}")
        if self.eval(self.a, 1) == 0.0:
            raise ValueError("U'(a) = 0: profile violates the simple-zero assumption")

    # subclasses implement the raw closed form; y is always an ndarray
    def _eval_raw(self, y: np.ndarray, order: int) -> np.ndarray:
        raise NotImplementedError

    def eval(self, y, order: int = 0):
        """d^order U / dy^order at y (scalar or array)."""
        if not 0 <= order <= self.derivative_order_available:
            raise UnsupportedOrder(
                f"order {order} not in 0..{self.derivative_order_available}"
            )
        arr = np.asarray(y, dtype=float)
        lo, hi = self.domain
        if np.any(arr < lo) or np.any(arr > hi):
            raise OutOfDomain(f"y outside closure of domain [{lo}, {hi}]")
        out = self._eval_raw(arr, order)
        return out if arr.ndim else float(out)

    def _ratio_at_zero(self) -> float:
        du = self.eval(self.a, 1)
        if du == 0.0:
            raise RatioUndefined("continuous extension needs U'(a) != 0")
        return -self.eval(self.a, 3) / du

    def ratio(self, y):
        """Continuous ratio -U''(y)/U(y), extended by -U'''(a)/U'(a) at the zero."""
        arr = np.asarray(y, dtype=float)
        near = np.abs(arr - self.a) <= self.tol_a
        u = np.asarray(self._eval_raw_checked(arr, 0))
        u2 = np.asarray(self._eval_raw_checked(arr, 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = -u2 / np.where(near, 1.0, u)
        if np.any(near):
            raw = np.where(near, self._ratio_at_zero(), raw)
        return raw if arr.ndim else float(raw)

    def _eval_raw_checked(self, arr, order):
        lo, hi = self.domain
        if np.any(arr < lo) or np.any(arr > hi):
            raise OutOfDomain(f"y outside closure of domain [{lo}, {hi}]")
        return self._eval_raw(arr, order)

    # interval on which sign changes and the ratio are sampled; line
    # profiles are constant outside the curvature support, so a bounded
    # window captures everything that can vary
    def sampling_interval(self) -> tuple[float, float]:
        return self.domain

    def __repr__(self):
        return f"<{type(self).__name__} a={self.a:g} domain={self.domain}>"


class SineProfile(ShearProfile):
    """U(y) = -sin(beta*y) on (-1, 1); -U''/U is identically beta^2."""

    family = "sine"

    def __init__(self, beta: float):
        if not 0 < beta <= math.pi:
            raise ValueError("need 0 < beta <= pi so U has a single zero in (-1, 1)")
        self.beta = float(beta)
        super().__init__(a=0.0, domain=(-1.0, 1.0), tol_a=2e-6)

    def _eval_raw(self, y, order):
        b = self.beta
        if order == 0:
            return -np.sin(b * y)
        if order == 1:
            return -b * np.cos(b * y)
        if order == 2:
            return b * b * np.sin(b * y)
        return b ** 3 * np.cos(b * y)


class SheetBaseProfile(ShearProfile):
    """Thin-layer base flow: U0 = -sin(pi*y/4) on [-2, 2], sign(-y) outside.

    C^1 across |y| = 2 (U0' = 0 there from both sides); U0'' jumps, and the
    outer (zero) one-sided value is returned at the seam.  The curvature
    ratio -U0''/U0 is then the square well of depth (pi/4)^2 on (-2, 2).
    """

    family = "sheet"
    continuity_order = 1

    def __init__(self):
        self.omega = math.pi / 4
        super().__init__(a=0.0, domain=(-math.inf, math.inf), tol_a=4e-6)

    def curvature_support(self) -> tuple[float, float]:
        return (-2.0, 2.0)

    def sampling_interval(self):
        return (-4.0, 4.0)

    def _eval_raw(self, y, order):
        w = self.omega
        inner = np.abs(y) < 2.0
        if order == 0:
            return np.where(inner, -np.sin(w * y), -np.sign(y))
        if order == 1:
            return np.where(inner, -w * np.cos(w * y), 0.0)
        if order == 2:
            return np.where(inner, w * w * np.sin(w * y), 0.0)
        return np.where(inner, w ** 3 * np.cos(w * y), 0.0)


class RescaledProfile(ShearProfile):
    """U(y) = U0(k*y) on (-1, 1) with chain-rule derivatives k^m U0^(m)(k*y)."""

    family = "rescaled"

    def __init__(self, base: ShearProfile, k: float):
        if base.domain[0] != -math.inf:
            raise ValueError("rescaling needs a line-domain base profile")
        if k < 1:
            raise ValueError("need k >= 1")
        self.base = base
        self.k = float(k)
        self.continuity_order = base.continuity_order
        super().__init__(a=base.a / k, domain=(-1.0, 1.0), tol_a=2e-6)

    def _eval_raw(self, y, order):
        return self.k ** order * self.base._eval_raw(self.k * y, order)


class CustomProfile(ShearProfile):
    """Finite sum of ("sin", A, w), ("cos", A, w), ("poly", A, p) terms.

    Closed-form derivatives keep evaluation exact; spline profiles are
    deliberately not supported.
    """

    family = "custom"

    def __init__(self, terms, domain=(-1.0, 1.0), a: float | None = None):
        self.terms = tuple((str(kind), float(amp), float(par)) for kind, amp, par in terms)
        for kind, _, par in self.terms:
            if kind not in ("sin", "cos", "poly"):
                raise ValueError(f"unknown term kind {kind!r}")
            if kind == "poly" and (par < 0 or par != int(par)):
                raise ValueError("poly power must be a nonnegative integer")
        self._domain_tmp = (float(domain[0]), float(domain[1]))
        if a is None:
            a = self._locate_zero()
        length = self._domain_tmp[1] - self._domain_tmp[0]
        super().__init__(a=a, domain=self._domain_tmp, tol_a=1e-6 * length)

    def _locate_zero(self) -> float:
        from scipy.optimize import brentq

        lo, hi = self._domain_tmp
        ys = np.linspace(lo, hi, 4097)[1:-1]
        vals = self._eval_raw(ys, 0)
        sgn = np.sign(vals)
        idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
        exact = np.nonzero(np.abs(vals) <= _ZERO_TOL)[0]
        if exact.size:
            return float(ys[exact[0]])
        if idx.size == 0:
            raise ValueError("no zero of U found in the domain")
        i = idx[0]
        return float(brentq(lambda t: float(self._eval_raw(np.asarray(t), 0)), ys[i], ys[i + 1]))

    def _eval_raw(self, y, order):
        out = np.zeros_like(np.asarray(y, dtype=float))
        for kind, amp, par in self.terms:
            if kind == "poly":
                p = int(par)
                if order > p:
                    continue
                coef = amp * math.prod(range(p - order + 1, p + 1))
                out = out + coef * np.asarray(y, dtype=float) ** (p - order)
            else:
                w = par
                phase = order * math.pi / 2
                if kind == "sin":
                    out = out + amp * w ** order * np.sin(w * np.asarray(y) + phase)
                else:
                    out = out + amp * w ** order * np.cos(w * np.asarray(y) + phase)
        return out


def sine_profile(beta: float) -> SineProfile:
    return SineProfile(beta)


def sheet_base_profile() -> SheetBaseProfile:
    return SheetBaseProfile()


def custom_profile(terms, domain=(-1.0, 1.0), a=None) -> CustomProfile:
    return CustomProfile(terms, domain=domain, a=a)


def rescale_profile(base: ShearProfile, k: float) -> RescaledProfile:
    """Profile evaluating U0(k*y) on (-1, 1); k = 1 is the identity rescale."""
    return RescaledProfile(base, k)


def eval_profile(profile: ShearProfile, y, order: int = 0):
    return profile.eval(y, order)


def continuous_ratio(profile: ShearProfile, y):
    return profile.ratio(y)


def check_assumptions(profile: ShearProfile, n_samples: int = 1001) -> AssumptionReport:
    """Sample the standing assumptions; failures are reported, never raised.

    Checks: exactly one sign change of U, min of -U''/U >= -1e-12 over the
    samples (continuous extension at the zero), and U'(a) != 0.
    """
    if n_samples < 64:
        raise ValueError("need n_samples >= 64")
    lo, hi = profile.sampling_interval()
    pad = (hi - lo) / (n_samples + 1)
    ys = np.linspace(lo + pad, hi - pad, n_samples)
    u = np.asarray(profile.eval(ys, 0))
    scale = np.max(np.abs(u))
    sgn = np.sign(u[np.abs(u) > 1e-12 * max(scale, 1.0)])
    sign_changes = int(np.count_nonzero(sgn[:-1] != sgn[1:]))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.asarray(profile.ratio(ys))
    min_ratio = float(np.min(ratios)) if np.all(np.isfinite(ratios)) else -math.inf
    du = abs(profile.eval(profile.a, 1))
    passed = sign_changes == 1 and min_ratio >= -1e-12 and du > 0
    return AssumptionReport(
        sign_changes=sign_changes,
        min_ratio=min_ratio,
        du_at_zero=du,
        n_samples=n_samples,
        passed=bool(passed),
    )
