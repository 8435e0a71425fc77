"""The spectral coefficient lambda as a boundary limit of a singular integral.

The reduced dispersion function behaves like c*lambda + eps near the
origin, with

    lambda = lim_{Im c > 0, c -> 0}  Gamma(c),
    Gamma(c) = integral of h(y) / (U(y) - c) dy,
    h = (-U''/U) * phi^2  (curvature ratio weighted by the neutral mode),

and the limit evaluates, by the Plemelj-Sochocki jump formula, to
C + i*pi*h(a)/|U'(a)| with C the principal-value part.  This module
computes Gamma along the imaginary ray, extrapolates the limit, and
cross-checks both the imaginary part and C against their closed forms.
It also houses the diagnostics behind the supporting lemmas: the uniform
critical-layer approximation defect, the logarithmic growth bound on sine
coefficients of 1/(U - c), and the numerical Plemelj formula itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import (
    Grid,
    fourier_sine_coefficient,
    near_singular_integral,
    pv_integral,
)
from .errors import ImagNotPositive, InvalidRange, NoCrossing
from .neutral_modes import NeutralMode
from .profiles import ShearProfile


@dataclass(frozen=True)
class SpectralCoefficientLambda:
    """Extrapolated lambda = C + i*imag with its closed-form cross-checks."""

    C: float
    imag: float
    extrapolation_error: float
    C_closed_form: float
    imag_closed_form: float
    gamma_table: tuple[tuple[float, complex], ...]

    @property
    def as_complex(self) -> complex:
        return complex(self.C, self.imag)

    @property
    def discrepancy_C(self) -> float:
        return abs(self.C - self.C_closed_form)

    @property
    def discrepancy_imag(self) -> float:
        return abs(self.imag - self.imag_closed_form)


@dataclass(frozen=True)
class PlemeljCheckResult:
    """Discrepancies of the one-sided limit against -i*pi*f(0) + p.v."""

    reference: complex
    values: tuple[complex, ...]
    discrepancies: tuple[float, ...]
    sizes: tuple[float, ...]  # delta + eps per step

    @property
    def final_discrepancy(self) -> float:
        return self.discrepancies[-1]

    @property
    def observed_decay_exponent(self) -> float:
        tail = min(4, len(self.sizes))
        s = np.log(np.asarray(self.sizes[-tail:]))
        d = np.log(np.maximum(np.asarray(self.discrepancies[-tail:]), 1e-300))
        return float(np.polyfit(s, d, 1)[0])


@dataclass(frozen=True)
class SineGrowthTable:
    modes: np.ndarray
    abs_coefficients: np.ndarray
    ratios: np.ndarray  # |coef| / log(1+m)

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))


def shifted_crossing(profile: ShearProfile, c: complex) -> float:
    """The point a' near a with U(a') = Re c, by safeguarded Newton.

    Raises NoCrossing when Re c is outside the local range of U around its
    zero (monotone neighborhood).
    """
    target = float(np.real(c))
    a = profile.a
    if target == 0.0:
        return a
    # expand a bracket around a until U - target changes sign across it
    lo, hi = profile.domain
    span = 4.0 if math.isinf(hi) else (hi - lo)
    f_a = profile.eval(a, 0) - target  # = -target, nonzero here
    step = 1e-3 * span
    bracket = None
    while step <= 0.25 * span and bracket is None:
        for cand in (a - step, a + step):
            if not math.isinf(hi) and not (lo < cand < hi):
                continue
            if f_a * (profile.eval(cand, 0) - target) <= 0:
                bracket = (min(a, cand), max(a, cand))
                break
        step *= 2.0
    if bracket is None:
        raise NoCrossing(f"Re c = {target:g} outside the local range of U near a")
    x_lo, x_hi = bracket
    f_lo = profile.eval(x_lo, 0) - target
    x = 0.5 * (x_lo + x_hi)
    for _ in range(100):
        f = profile.eval(x, 0) - target
        if abs(f) <= 1e-13:
            return float(x)
        df = profile.eval(x, 1)
        x_new = x - f / df if df != 0 else math.nan
        if not (x_lo < x_new < x_hi):  # safeguard: bisect the bracket
            x_new = 0.5 * (x_lo + x_hi)
        if f_lo * (profile.eval(x_new, 0) - target) <= 0:
            x_hi = x_new
        else:
            x_lo, f_lo = x_new, profile.eval(x_new, 0) - target
        x = x_new
    if abs(profile.eval(x, 0) - target) > 1e-12:
        raise NoCrossing("safeguarded Newton failed to locate the crossing to 1e-12")
    return float(x)


def _weight_handle(profile: ShearProfile, mode: NeutralMode):
    """h(y) = ratio(y) * phi(y)^2 as a vectorized function handle."""

    def h(y):
        return np.asarray(profile.ratio(y)) * np.asarray(mode.phi_at(y)) ** 2

    return h


def _gamma_interval(profile: ShearProfile, mode: NeutralMode):
    support = getattr(profile, "curvature_support", None)
    if support is not None:
        return support()
    return mode.grid.interval


def gamma(profile: ShearProfile, mode: NeutralMode, c: complex) -> complex:
    """Gamma(c) = integral of h(y)/(U(y) - c) dy, refined at the crossing a'.

    Defined for Im c != 0; the instability limit approaches from Im c > 0,
    and evaluating at conj(c) realizes the Schwarz reflection check.
    """
    c = complex(c)
    if c.imag == 0.0:
        raise ValueError("gamma needs Im c != 0")
    a_prime = shifted_crossing(profile, c)
    h = _weight_handle(profile, mode)

    def f(y):
        return h(y) / (np.asarray(profile.eval(y, 0)) - c)

    return near_singular_integral(f, a_prime, abs(c.imag),
                                  _gamma_interval(profile, mode))


def _pv_weight_handle(profile: ShearProfile, mode: NeutralMode):
    """f(y) = ratio*phi^2*(y-a)/U with its smooth value at the zero."""
    a = profile.a
    du_a = profile.eval(a, 1)

    def f(y):
        y = np.asarray(y, dtype=float)
        u = np.asarray(profile.eval(y, 0))
        near = np.abs(y - a) < 1e-13
        quot = np.where(near, 1.0 / du_a, (y - a) / np.where(near, 1.0, u))
        return np.asarray(profile.ratio(y)) * np.asarray(mode.phi_at(y)) ** 2 * quot

    return f


def lambda_limit(profile: ShearProfile, mode: NeutralMode,
                 tau_sequence) -> SpectralCoefficientLambda:
    """Extrapolate Gamma(i*tau) to tau = 0 and cross-check the closed forms.

    The closed-form targets are imag_cf = pi*h(a)/|U'(a)| (Plemelj jump)
    and C_cf = -p.v. integral of U'' phi^2 / U^2 (the classical constant).
    """
    taus = [float(t) for t in tau_sequence]
    if len(taus) < 3:
        raise InvalidRange("need at least 3 tau values")
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise InvalidRange("tau sequence must be strictly decreasing")
    if taus[0] / taus[-1] < 100.0 * (1 - 1e-12):
        raise InvalidRange("tau sequence must span at least 2 decades")
    if taus[-1] < 1e-5 * (1 - 1e-12):
        raise InvalidRange("smallest tau must be >= 1e-5")

    values = [gamma(profile, mode, 1j * t) for t in taus]
    d_last = values[-1] - values[-2]
    d_prev = values[-2] - values[-3]
    rho = d_last / d_prev if d_prev != 0 else 0.0
    if abs(rho) < 1.0:
        limit = values[-1] + d_last * rho / (1.0 - rho)
    else:
        limit = values[-1]
    err = abs(limit - values[-1]) + 0.5 * abs(d_last)

    a = profile.a
    phi_a = float(mode.phi_at(a))
    imag_cf = math.pi * float(profile.ratio(a)) * phi_a**2 / abs(profile.eval(a, 1))
    C_cf = float(np.real(pv_integral(_pv_weight_handle(profile, mode), a,
                                     _gamma_interval(profile, mode))))
    if limit.imag <= 0:
        raise ImagNotPositive(f"extrapolated Im lambda = {limit.imag:g} <= 0")
    return SpectralCoefficientLambda(
        C=float(limit.real),
        imag=float(limit.imag),
        extrapolation_error=float(err),
        C_closed_form=C_cf,
        imag_closed_form=imag_cf,
        gamma_table=tuple((t, complex(v)) for t, v in zip(taus, values)),
    )


def default_delta_eps_sequence(n: int = 8) -> tuple[tuple[float, float], ...]:
    """Geometric (delta, eps) = (10^-j, 10^-j), j = 1..n, for the limit check."""
    return tuple((10.0 ** -j, 10.0 ** -j) for j in range(1, n + 1))


def plemelj_limit_check(f, interval, delta_eps_sequence) -> PlemeljCheckResult:
    """Evaluate the one-sided singular integral along (delta, eps) -> (0, 0+).

    Compares integral of f(x)/(x + delta + i*eps) with the jump formula
    -i*pi*f(0) + p.v. integral of f(x)/x; f must be vectorized and Hoelder
    continuous at 0, which controls the observed decay rate.
    """
    pairs = [(float(d), float(e)) for d, e in delta_eps_sequence]
    if not pairs:
        raise InvalidRange("empty (delta, eps) sequence")
    if any(e <= 0 for _, e in pairs):
        raise InvalidRange("eps must stay positive along the sequence")
    a, b = float(interval[0]), float(interval[1])
    if not a < 0 < b:
        raise InvalidRange("0 must lie strictly inside the interval")
    f0 = float(np.asarray(f(np.array([0.0])))[0])
    reference = -1j * math.pi * f0 + pv_integral(f, 0.0, interval)
    values = []
    for d, e in pairs:
        def g(x, _d=d, _e=e):
            return np.asarray(f(x)) / (x + _d + 1j * _e)

        values.append(near_singular_integral(g, -d, e, interval))
    discrepancies = tuple(abs(v - reference) for v in values)
    return PlemeljCheckResult(
        reference=complex(reference),
        values=tuple(complex(v) for v in values),
        discrepancies=discrepancies,
        sizes=tuple(abs(d) + e for d, e in pairs),
    )


def approximation_defect(profile: ShearProfile, c: complex, grid: Grid):
    """Sup-norm defect of 1/(U-c) against its critical-layer linearization.

    Returns (sup_abs, sup_imag) over the grid nodes; the first stays
    bounded and the second decays as c approaches 0 from above.
    """
    c = complex(c)
    if c.imag <= 0:
        raise ValueError("need Im c > 0")
    a_prime = shifted_crossing(profile, c)
    y = grid.nodes
    u = np.asarray(profile.eval(y, 0))
    du = profile.eval(a_prime, 1)
    exact = 1.0 / (u - c)
    approx = 1.0 / (du * (y - a_prime) - 1j * c.imag)
    defect = exact - approx
    return float(np.max(np.abs(defect))), float(np.max(np.abs(defect.imag)))


def sine_coefficient_growth(profile: ShearProfile, c: complex,
                            m_max: int, n: int | None = None) -> SineGrowthTable:
    """|sine coefficients| of 1/(U - c) against the log(1+m) envelope."""
    c = complex(c)
    if c.imag <= 0:
        raise ValueError("need Im c > 0")
    if m_max < 1:
        raise InvalidRange("need m_max >= 1")
    if n is None:
        n = max(8192, 4 * m_max, min(int(8.0 / c.imag), 65536))
    grid = Grid(n, (-1.0, 1.0))
    f = 1.0 / (np.asarray(profile.eval(grid.nodes, 0)) - c)
    ms = np.arange(1, m_max + 1)
    coefs = np.empty(m_max, dtype=complex)
    for start in range(0, m_max, 128):
        block = ms[start:start + 128]
        sines = np.sin(block[:, None] * math.pi * (grid.nodes[None, :] + 1.0) / 2.0)
        coefs[start:start + 128] = grid.h * sines @ f
    ratios = np.abs(coefs) / np.log1p(ms)
    return SineGrowthTable(modes=ms, abs_coefficients=np.abs(coefs), ratios=ratios)
