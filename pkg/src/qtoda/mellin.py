"""Mellin-Barnes machinery: the Gamma-product g(s), the vertical-line Barnes
integral for K, the forward Mellin transform and the lowering ladder identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .qbessel import macdonald_K_array, matching_constant_A
from .qcalc import (
    DEFAULT_TOL,
    DomainError,
    NonConvergenceError,
    QContext,
    SeriesValue,
    Tolerances,
    qgamma,
    qpow,
)

T_START = 20.0
T_MAX = 400.0


@dataclass(frozen=True)
class BarnesContour:
    """Vertical line Re s = sigma truncated to |Im s| <= T with trapezoid step h."""

    sigma: float
    T: float = T_START
    h: float | None = None

    def __post_init__(self) -> None:
        if not self.T > 0:
            raise DomainError("T must be positive")
        h = self.T / 2000 if self.h is None else self.h
        if not (0 < h <= self.T / 50):
            raise DomainError("h must satisfy 0 < h <= T/50")
        object.__setattr__(self, "h", float(h))

    @classmethod
    def default(cls, ctx: QContext) -> "BarnesContour":
        return cls(abs(ctx.nu) + 1.0)

    def validate(self, ctx: QContext) -> None:
        if not self.sigma > abs(ctx.nu):
            raise DomainError("contour must satisfy sigma > |nu| to clear the Gamma poles")


def _log_qgamma_array(z: np.ndarray, base: float) -> np.ndarray:
    """log Gamma_base(z) (any branch) for an array of complex z with Re z > 0."""
    lb = math.log(base)
    kmax = int(math.ceil(math.log(1e-18) / lb)) + 2
    k = np.arange(kmax)
    bk = base**k
    log_num = np.sum(np.log1p(-base * bk))
    e = np.exp(np.multiply.outer(z * lb, np.ones(kmax))) * bk
    log_den = np.sum(np.log(1 - e), axis=-1)
    return log_num - log_den + (1 - z) * math.log(1 - base)


def g_of_s(s: complex, ctx: QContext) -> complex:
    """g(s) = q^{-delta s^2/4 + (2+delta) s/2} Gamma_{q^2}((s+i nu)/2) Gamma_{q^2}((s-i nu)/2)."""
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    s = complex(s)
    q2 = q * q
    return (
        qpow(q, -d * s * s / 4 + (2 + d) * s / 2)
        * qgamma((s + iv) / 2, q2).value
        * qgamma((s - iv) / 2, q2).value
    )


def g_recurrence_residual(s: complex, ctx: QContext) -> float:
    """Relative residual of q^{-s}(1-q^{s+i nu})(1-q^{s-i nu})/(1-q^2)^2 g(s) = q^{(delta-1)s-2} g(s+2)."""
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    s = complex(s)
    lhs = qpow(q, -s) * (1 - qpow(q, s + iv)) * (1 - qpow(q, s - iv)) / (1 - q * q) ** 2 * g_of_s(s, ctx)
    rhs = qpow(q, (d - 1) * s - 2) * g_of_s(s + 2, ctx)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))


def barnes_prefactor(ctx: QContext) -> complex:
    """-ln q / (4 pi (1-q^2)) * A^{|1-delta|} * q^{(4-delta) nu^2/4 - delta/2}."""
    q, d, nu = ctx.q, ctx.delta, ctx.nu
    e = abs(1 - d)
    a = matching_constant_A(ctx) ** e if e else 1.0
    return -math.log(q) / (4 * math.pi * (1 - q * q)) * a * q ** ((4 - d) * nu * nu / 4 - d / 2)


def _integrand(ctx: QContext, x: float, sigma: float, t: np.ndarray) -> np.ndarray:
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    s = sigma + 1j * t
    lq = math.log(q)
    log_g = (
        (-d * s * s / 4 + (2 + d) * s / 2) * lq
        + _log_qgamma_array((s + iv) / 2, q * q)
        + _log_qgamma_array((s - iv) / 2, q * q)
    )
    return np.exp(log_g - s * math.log(ctx.mu * x))


def _trapezoid(ctx: QContext, x: float, sigma: float, T: float, h: float) -> tuple[complex, float]:
    n = int(round(T / h))
    t = np.linspace(-T, T, 2 * n + 1)
    f = _integrand(ctx, x, sigma, t)
    val = h * (f.sum() - 0.5 * (f[0] + f[-1]))
    # tail: integrand size over the next stretch beyond T, both sides
    period = 2 * math.pi / abs(math.log(ctx.q))
    tt = np.linspace(T, T + max(period, T), 400)
    beyond = np.abs(_integrand(ctx, x, sigma, tt)) + np.abs(_integrand(ctx, x, sigma, -tt))
    d = ctx.delta
    if d > 0:
        a = d * abs(math.log(ctx.q)) / 4
        tail = float(beyond.max()) / (2 * a * T) if a * T > 0 else math.inf
    else:
        tail = math.inf if beyond.max() > 0 else 0.0
    return complex(val), tail


def barnes_integral(ctx: QContext, x: float, contour: BarnesContour | None = None, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """int g(sigma+it) (mu x)^{-sigma-it} dt over the line, doubling T until the tail is negligible."""
    if x <= 0:
        raise DomainError("x must be positive")
    contour = BarnesContour.default(ctx) if contour is None else contour
    contour.validate(ctx)
    T, h = contour.T, contour.h
    rel = max(tol.rel_eps, 1e-13)
    while True:
        val, tail = _trapezoid(ctx, x, contour.sigma, T, h)
        nodes = int(round(2 * T / h)) + 1
        if tail <= rel * abs(val) + tol.abs_eps:
            return SeriesValue(val, nodes, tail)
        if 2 * T > T_MAX:
            raise NonConvergenceError(
                f"Barnes integrand does not decay along the contour (T={T}, tail bound {tail:.3g})",
                SeriesValue(val, nodes, tail if math.isfinite(tail) else float("inf")),
            )
        T *= 2
        h *= 2


def barnes_K(ctx: QContext, x: float, contour: BarnesContour | None = None, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """Barnes-integral representation of K.

    K(x) = -ln q/(4 pi (1-q^2)) A^{|1-delta|} q^{(4-delta) nu^2/4 - delta/2}
           * int g(sigma+it) (mu x)^{-sigma-it} dt.
    """
    raw = barnes_integral(ctx, x, contour, tol)
    p = barnes_prefactor(ctx)
    return SeriesValue(p * raw.value, raw.terms_used, abs(p) * raw.tail_estimate)


def barnes_K_array(ctx: QContext, xs, contour: BarnesContour | None = None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """barnes_K on many points at once; the tail test is against the largest |K| on the set."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs <= 0):
        raise DomainError("x must be positive")
    contour = BarnesContour.default(ctx) if contour is None else contour
    contour.validate(ctx)
    T, h, sigma = contour.T, contour.h, contour.sigma
    rel = max(tol.rel_eps, 1e-13)
    lmx = np.log(ctx.mu * xs)
    period = 2 * math.pi / abs(math.log(ctx.q))
    while True:
        n = int(round(T / h))
        t = np.linspace(-T, T, 2 * n + 1)
        w = np.full(t.shape, h)
        w[[0, -1]] *= 0.5
        # the integrand at x factors as g(s) (mu x)^{-s}; reuse g across x
        g = _integrand(ctx, 1.0 / ctx.mu, sigma, t)
        vals = np.exp(-np.multiply.outer(lmx, sigma + 1j * t)) @ (w * g)
        tt = np.linspace(T, T + max(period, T), 400)
        beyond = np.abs(_integrand(ctx, 1.0 / ctx.mu, sigma, tt)) + np.abs(_integrand(ctx, 1.0 / ctx.mu, sigma, -tt))
        peak = float(np.max(beyond * np.exp(-sigma * lmx).max()))
        a = ctx.delta * abs(math.log(ctx.q)) / 4
        tail = peak / (2 * a * T) if a > 0 else (math.inf if peak > 0 else 0.0)
        if tail <= rel * float(np.max(np.abs(vals))) + tol.abs_eps:
            return barnes_prefactor(ctx) * vals
        if 2 * T > T_MAX:
            raise NonConvergenceError(f"Barnes integrand does not decay along the contour (T={T}, tail bound {tail:.3g})")
        T *= 2
        h *= 2


def barnes_G(ctx: QContext, x: float, contour: BarnesContour | None = None, tol: Tolerances = DEFAULT_TOL) -> complex:
    """G(x) = (1/2 pi) int g(sigma+it)(mu x)^{-sigma-it} dt, whose Mellin transform is mu^{-s} g(s)."""
    return barnes_integral(ctx, x, contour, tol).value / (2 * math.pi)


def B_closed_form(ctx: QContext) -> complex:
    """B = -(2(1-q^2)/ln q) mu^{i nu+2} A_{-i nu}^{|1-delta|} q^{-(4-delta) nu^2/4 + delta/2}."""
    q, d, nu = ctx.q, ctx.delta, ctx.nu
    e = abs(1 - d)
    a_minus = (1 / matching_constant_A(ctx)) ** e if e else 1.0
    return -(2 * (1 - q * q) / math.log(q)) * ctx.mu ** (2 + 1j * nu) * a_minus * q ** (-(4 - d) * nu * nu / 4 + d / 2)


def _mellin_quad(f: Callable[[float], complex], s: complex, growth_check: bool = True) -> complex:
    """int_0^inf f(x) x^{s-1} dx via the substitution x = e^u on a finite u-range."""
    s = complex(s)

    def h(u: float) -> complex:
        return f(math.exp(u)) * np.exp(s * u)

    u_hi = 6.0
    if growth_check:
        a, b = abs(h(u_hi)), abs(h(u_hi + 1.5))
        if not (b < a or b < 1e-14):
            raise NonConvergenceError(f"forward Mellin integrand does not decay (|.| {a:.3g} -> {b:.3g})")
    re = integrate.quad(lambda u: h(u).real, -40.0, u_hi, limit=400, epsabs=1e-14, epsrel=1e-11)[0]
    im = integrate.quad(lambda u: h(u).imag, -40.0, u_hi, limit=400, epsabs=1e-14, epsrel=1e-11)[0]
    return complex(re, im)


def mellin_forward(ctx: QContext, s: complex, kernel: str = "series") -> complex:
    """Forward Mellin transform int_0^inf K(x) x^{s-1} dx.

    ``kernel="series"`` transforms the series combination of ``qbessel``;
    ``kernel="barnes"`` transforms the Barnes integral ``barnes_K``.
    Raises NonConvergenceError when the kernel does not decay at large x.
    """
    s = complex(s)
    if not s.real > abs(ctx.nu):
        raise DomainError("Re s must exceed |nu| (strip of convergence)")
    if kernel == "series":
        def f(x: float) -> complex:
            return complex(macdonald_K_array(ctx, [x])[0])
    elif kernel == "barnes":
        return _mellin_barnes(ctx, s)
    else:
        raise DomainError(f"unknown kernel {kernel!r}")
    return _mellin_quad(f, s)


def _mellin_barnes(ctx: QContext, s: complex, step: float = 0.01) -> complex:
    """Forward transform of barnes_K by the trapezoid rule in u = ln x (spectrally accurate
    for the smooth, doubly decaying integrand K(e^u) e^{su})."""
    u = np.arange(-40.0, 10.0 + step / 2, step)
    k = barnes_K_array(ctx, np.exp(u))
    h = k * np.exp(s * u)
    if abs(h[-1]) > 1e-12 * np.max(np.abs(h)):
        raise NonConvergenceError("forward Mellin integrand does not decay on the Barnes kernel")
    return complex(step * (h.sum() - 0.5 * (h[0] + h[-1])))


def extract_B(ctx: QContext, s: complex, kernel: str = "series") -> complex:
    """B = g(s) / int_0^inf K(x) x^{s-1} dx."""
    return g_of_s(s, ctx) / mellin_forward(ctx, s, kernel)


def ladder_sides(ctx: QContext, x: float, order: complex | None = None) -> tuple[complex, complex]:
    """Both sides of the lowering relation for K of order a (default i nu):

    q^{delta/2}/(mu(1+q)x) * D~_x[x^a K_a(x)]  and  -q^{-(2-delta)(a-1)/2} x^{a-1} K_{a-1}(q^{1-delta/2} x),

    with D~_x f(x) = (f(x) - f(qx))/((1-q)x).
    """
    q, d, mu = ctx.q, ctx.delta, ctx.mu
    a = ctx.inu if order is None else complex(order)
    k = macdonald_K_array(ctx, [x, q * x], order=a)
    phi = [complex(x**a * k[0]), complex((q * x) ** a * k[1])]
    lhs = q ** (d / 2) / (mu * (1 + q) * x) * (phi[0] - phi[1]) / ((1 - q) * x)
    k_low = complex(macdonald_K_array(ctx, [q ** (1 - d / 2) * x], order=a - 1)[0])
    rhs = -qpow(q, -(2 - d) * (a - 1) / 2) * x ** (a - 1) * k_low
    return lhs, rhs


def ladder_identity_check(ctx: QContext, xs=(0.5, 1.0, 2.0)) -> float:
    """Max relative residual of the lowering relation over the sample points."""
    worst = 0.0
    for x in xs:
        lhs, rhs = ladder_sides(ctx, float(x))
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def boundary_identity(f: Callable[[float], float], q: float) -> tuple[float, float]:
    """(int_0^inf D~_x f(x) dx, ln q/(1-q) f(0)) with an ordinary integral.

    The identity holds for f with f(x) -> 0 as x -> inf; it is a Frullani integral.
    """

    def d(x: float) -> float:
        return (f(x) - f(q * x)) / ((1 - q) * x)

    val = integrate.quad(d, 0, 1, limit=400)[0] + integrate.quad(d, 1, np.inf, limit=400)[0]
    return val, math.log(q) / (1 - q) * f(0.0)
