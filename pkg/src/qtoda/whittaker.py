"""Whittaker vectors, the invariant vector, the Hermitian pairing and the
radial matrix-element integral.

Representation label n is fixed to 0 throughout; mu is real so mu-bar = mu.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

from .qbessel import bessel_J0
from .qcalc import (
    DEFAULT_TOL,
    DomainError,
    NonConvergenceError,
    QContext,
    SeriesValue,
    Tolerances,
    qpochhammer,
    qpow,
    sum_series,
)


@dataclass(frozen=True)
class PowerSeries1D:
    coefficients: tuple[complex, ...]
    variable_tag: str = "z"

    def __post_init__(self) -> None:
        if self.variable_tag not in ("z", "zbar", "x"):
            raise DomainError("variable_tag must be 'z', 'zbar' or 'x'")

    def __call__(self, v: complex) -> complex:
        return sum(c * v**k for k, c in enumerate(self.coefficients))


@dataclass(frozen=True)
class MatrixElementResult:
    H: float
    value: complex
    quadrature_error: float
    terms: int
    converged: bool = True
    radius: float = 0.0


# ---------------------------------------------------------------------------
# invariant vector psi_L(x), x = |z|^2


def psi_L_coefficient(m: int, ctx: QContext) -> complex:
    """b_m/(q^2;q^2)_m with b_m = (-1)^m q^{2m} (q^{-2 i nu + 2};q^2)_m."""
    q = ctx.q
    q2 = q * q
    b = (-1) ** m * q ** (2 * m) * qpochhammer(qpow(q, -2 * ctx.inu + 2), q2, m).value
    return b / qpochhammer(q2, q2, m).value


def psi_L(x: float, ctx: QContext, sign: int = -1, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """Invariant vector (-q^{sign*2 i nu + 4} x;q^2)_inf / (-q^2 x;q^2)_inf.

    ``sign=-1`` is the vector solving the invariance conditions; ``sign=+1`` is
    its complex conjugate, the weight that enters the pairing.
    """
    if x < 0:
        raise DomainError("psi_L is defined for x = |z|^2 >= 0")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    q = ctx.q
    q2 = q * q
    num = qpochhammer(-qpow(q, sign * 2 * ctx.inu + 4) * x, q2, tol=tol)
    den = qpochhammer(-q2 * x, q2, tol=tol)
    val = num.value / den.value
    return SeriesValue(val, max(num.terms_used, den.terms_used), abs(val) * (num.tail_estimate / abs(num.value) + den.tail_estimate / abs(den.value)))


def psi_L_series(x: float, ctx: QContext, n_terms: int = 40) -> complex:
    """Truncated series sum_m b_m/(q^2;q^2)_m x^m (converges for q^2 x < 1)."""
    return sum(psi_L_coefficient(m, ctx) * x**m for m in range(n_terms))


def _pi_B_right(coeffs: Mapping[tuple[int, int], complex], ctx: QContext) -> dict[tuple[int, int], complex]:
    """Right action of B on the z-degree: z^k -> q^{i nu/2} (q^{-k} - q^k)/(1-q^2) z^{k-1}."""
    q = ctx.q
    out: dict[tuple[int, int], complex] = {}
    for (a, k), c in coeffs.items():
        if k == 0:
            continue
        f = qpow(q, ctx.inu / 2) * (q ** (-k) - q**k) / (1 - q * q)
        out[(a, k - 1)] = out.get((a, k - 1), 0) + c * f
    return out


def _pi_Bstar_left(coeffs: Mapping[tuple[int, int], complex], ctx: QContext) -> dict[tuple[int, int], complex]:
    """Left action of B* on the zbar-degree: zbar^a -> q^{i nu/2}(q^{-a} - q^a)/(1-q^2) zbar^{a-1}."""
    q = ctx.q
    out: dict[tuple[int, int], complex] = {}
    for (a, k), c in coeffs.items():
        if a == 0:
            continue
        f = qpow(q, ctx.inu / 2) * (q ** (-a) - q**a) / (1 - q * q)
        out[(a - 1, k)] = out.get((a - 1, k), 0) + c * f
    return out


def _pi_Cstar_left(coeffs: Mapping[tuple[int, int], complex], ctx: QContext) -> dict[tuple[int, int], complex]:
    """Left action of C*: zbar^a -> zbar^{a+1}/(1-q^2) [-q^{(i nu+2)/2} q^{-a} + q^{-3 i nu/2 + 3} q^a]."""
    q = ctx.q
    iv = ctx.inu
    out: dict[tuple[int, int], complex] = {}
    for (a, k), c in coeffs.items():
        f = (-qpow(q, (iv + 2) / 2) * q ** (-a) + qpow(q, -1.5 * iv + 3) * q**a) / (1 - q * q)
        out[(a + 1, k)] = out.get((a + 1, k), 0) + c * f
    return out


def invariance_residual(ctx: QContext, sign: int = -1, N: int = 10) -> float:
    """Max relative coefficient mismatch of C*.psi_L = psi_L.B through degree N."""
    q = ctx.q
    q2 = q * q
    a = qpow(q, sign * 2 * ctx.inu + 2)
    coeffs = {
        (m, m): (-1) ** m * q ** (2 * m) * qpochhammer(a, q2, m).value / qpochhammer(q2, q2, m).value
        for m in range(N + 2)
    }
    lhs = _pi_Cstar_left(coeffs, ctx)
    rhs = _pi_B_right(coeffs, ctx)
    worst = 0.0
    for key in set(lhs) | set(rhs):
        if key[0] > N:
            continue
        l, r = lhs.get(key, 0), rhs.get(key, 0)
        worst = max(worst, abs(l - r) / max(abs(l), abs(r), 1e-300))
    return worst


# ---------------------------------------------------------------------------
# Whittaker vector psi_R = xi_1(zbar) xi_2(z)


def xi1_coefficient(n: int, ctx: QContext) -> complex:
    """a_n (1-q^2)^n/(q^2;q^2)_n with a_n = (i mu)^n q^{n(n-1)/2 + n(1 - i nu)}."""
    q = ctx.q
    a = (1j * ctx.mu) ** n * qpow(q, n * (n - 1) / 2 + n * (1 - ctx.inu))
    return a * (1 - q * q) ** n / qpochhammer(q * q, q * q, n).value


def xi2_coefficient(k: int, ctx: QContext) -> complex:
    """c_k (1-q^2)^k/(q^2;q^2)_k with
    c_k = (i mu)^k q^{k(k-1)(3-2 delta)/2 + k(1 - i nu) + (i nu delta - 2 delta + 2) k}."""
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    c = (1j * ctx.mu) ** k * qpow(q, k * (k - 1) * (3 - 2 * d) / 2 + k * (1 - iv) + (iv * d - 2 * d + 2) * k)
    return c * (1 - q * q) ** k / qpochhammer(q * q, q * q, k).value


def _series(coef: Callable[[int], complex], v: complex, tol: Tolerances) -> SeriesValue:
    def terms():
        k = 0
        while True:
            c = coef(k)
            yield c * v**k if k else c
            k += 1
            if k > 4 and not math.isfinite(abs(c)):
                raise NonConvergenceError("coefficients overflow; series diverges")

    return sum_series(terms(), tol)


def xi1(zbar: complex, ctx: QContext, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    return _series(lambda n: xi1_coefficient(n, ctx), complex(zbar), tol)


def xi2(z: complex, ctx: QContext, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """For delta=2 the coefficients grow like q^{-k^2/2}: the series diverges for z != 0."""
    if ctx.delta == 2 and z != 0:
        raise NonConvergenceError("the delta=2 xi_2 series has zero radius of convergence")
    return _series(lambda k: xi2_coefficient(k, ctx), complex(z), tol)


def basic_hypergeometric_coefficients(a: list[complex], b: list[complex], q: float, w: complex, N: int) -> list[complex]:
    """Coefficients of w-powers in r Phi s(a; b; q, w) evaluated with the argument
    absorbed: entry n is the n-th term of the series (without the variable)."""
    r, s = len(a), len(b)
    out = []
    for n in range(N + 1):
        num = 1 + 0j
        for ai in a:
            num *= qpochhammer(ai, q, n).value
        den = qpochhammer(q, q, n).value
        for bi in b:
            den *= qpochhammer(bi, q, n).value
        out.append(num / den * ((-1) ** n * q ** (n * (n - 1) / 2)) ** (1 + s - r) * w**n)
    return out


def xi_hypergeometric_coefficients(which: int, ctx: QContext, N: int) -> list[complex]:
    """Coefficients of xi_1 (which=1) or xi_2 (which=2) from their basic-hypergeometric labels."""
    q, d, iv, mu = ctx.q, ctx.delta, ctx.inu, ctx.mu
    base = -1j * mu * (1 - q * q)
    if which == 1 or d == 1:
        w = base * qpow(q, 1 - iv) if which == 1 else base * q
        return basic_hypergeometric_coefficients([0], [-q], q, w, N)
    if d == 0:
        return basic_hypergeometric_coefficients([], [0, -q], q, base * qpow(q, 3 - iv), N)
    return basic_hypergeometric_coefficients([0, 0, 0], [-q], q, base * qpow(q, iv - 1), N)


def whittaker_condition_residual(ctx: QContext, N: int = 8) -> float:
    """Max relative coefficient mismatch of
    B*.psi_R.B = -mu^2 q^{(i nu - 2)(delta - 1)} psi_R(zbar, q^{2-2 delta} z)
    over bidegrees (n, k) with n, k <= N."""
    if N < 2:
        raise DomainError("N must be at least 2")
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    A = [xi1_coefficient(n, ctx) for n in range(N + 2)]
    C = [xi2_coefficient(k, ctx) for k in range(N + 2)]
    psi = {(n, k): A[n] * C[k] for n in range(N + 2) for k in range(N + 2)}
    lhs = _pi_Bstar_left(_pi_B_right(psi, ctx), ctx)
    factor = -(ctx.mu**2) * qpow(q, (iv - 2) * (d - 1))
    worst = 0.0
    for n in range(N + 1):
        for k in range(N + 1):
            rhs = factor * psi[(n, k)] * q ** ((2 - 2 * d) * k)
            l = lhs.get((n, k), 0)
            worst = max(worst, abs(l - rhs) / max(abs(rhs), 1e-300))
    return worst


def coefficient_recursion_residual(ctx: QContext, N: int = 8) -> float:
    """Check a_n c_k = -mu^2 a_{n-1} c_{k-1} q^{i nu delta - 2 i nu - 2 delta + 3 + (k-1)(3-2 delta) + n}."""
    q, d, iv, mu = ctx.q, ctx.delta, ctx.inu, ctx.mu

    def a(n: int) -> complex:
        return (1j * mu) ** n * qpow(q, n * (n - 1) / 2 + n * (1 - iv))

    def c(k: int) -> complex:
        return (1j * mu) ** k * qpow(q, k * (k - 1) * (3 - 2 * d) / 2 + k * (1 - iv) + (iv * d - 2 * d + 2) * k)

    worst = 0.0
    for n in range(1, N + 1):
        for k in range(1, N + 1):
            lhs = a(n) * c(k)
            rhs = -(mu**2) * a(n - 1) * c(k - 1) * qpow(q, iv * d - 2 * iv - 2 * d + 3 + (k - 1) * (3 - 2 * d) + n)
            worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst


# ---------------------------------------------------------------------------
# radial matrix element


def radial_weight(rho: float, ctx: QContext) -> complex:
    """(-q^{2 i nu + 4} rho^2;q^2)_inf / (-q^2 rho^2;q^2)_inf."""
    return psi_L(rho * rho, ctx, sign=+1).value


def radial_weight_expansion(rho: float, ctx: QContext, n_terms: int = 200) -> complex:
    """Weight via its partial-fraction (pole) expansion in rho^2:

    (q^{2 i nu+2};q^2)_inf/(q^2;q^2)_inf
      * sum_n (q^{-2 i nu};q^2)_n q^{(2 i nu+2) n} / ((q^2;q^2)_n (1+q^{2n+2} rho^2)).

    The terms decay like q^{2n}, so the sum converges absolutely.
    """
    q, iv = ctx.q, ctx.inu
    q2 = q * q
    r2 = rho * rho
    pre = qpochhammer(qpow(q, 2 * iv + 2), q2).value / qpochhammer(q2, q2).value
    s = sum(
        qpochhammer(qpow(q, -2 * iv), q2, n).value * qpow(q, (2 * iv + 2) * n) / (qpochhammer(q2, q2, n).value * (1 + q ** (2 * n + 2) * r2))
        for n in range(n_terms)
    )
    return pre * s


def radial_weight_oscillating_terms(rho: float, ctx: QContext, n_terms: int) -> np.ndarray:
    """Terms of the alternative expansion of (1+rho^2) W(rho) with unit-modulus ratio q^{2 i nu n}:

    (1+rho^2)(q^{2 i nu};q^2)_inf/((1+q^{2 i nu+2} rho^2)(q^2;q^2)_inf)
      * (q^{-2 i nu+2};q^2)_n q^{2 i nu n}/((q^2;q^2)_n (1+q^{2n+2} rho^2)).

    The terms do not tend to zero; the series is only Cesaro summable.
    """
    q, iv = ctx.q, ctx.inu
    q2 = q * q
    r2 = rho * rho
    pre = (1 + r2) * qpochhammer(qpow(q, 2 * iv), q2).value / ((1 + qpow(q, 2 * iv + 2) * r2) * qpochhammer(q2, q2).value)
    return np.array(
        [
            pre * qpochhammer(qpow(q, -2 * iv + 2), q2, n).value * qpow(q, 2 * iv * n) / (qpochhammer(q2, q2, n).value * (1 + q ** (2 * n + 2) * r2))
            for n in range(n_terms)
        ]
    )


def j0_scale(ctx: QContext, H: float) -> complex:
    """Coefficient c with J_0 evaluated at c*rho: 2 mu (1-q^2) q^{(i nu - 1) delta/2 + 1} / H."""
    q = ctx.q
    return 2 * ctx.mu * (1 - q * q) * qpow(q, (ctx.inu - 1) * ctx.delta / 2 + 1) / H


def radial_integrand(rho: float, H: float, ctx: QContext) -> complex:
    return radial_weight(rho, ctx) * bessel_J0(ctx, j0_scale(ctx, H) * rho).value * rho


def angular_average(rho: float, H: float, ctx: QContext, n_nodes: int = 256) -> complex:
    """(1/2 pi) int xi_1(q^{i nu+1} rho e^{-i phi}) xi_2(q^{i nu-1} H^{-2} rho e^{i phi}) dphi (trapezoid)."""
    q, iv = ctx.q, ctx.inu
    phis = 2 * math.pi * np.arange(n_nodes) / n_nodes
    vals = [
        xi1(qpow(q, iv + 1) * rho * cmath.exp(-1j * p), ctx).value * xi2(qpow(q, iv - 1) * rho * cmath.exp(1j * p) / H**2, ctx).value
        for p in phis
    ]
    return complex(np.mean(vals))


def matrix_element_radial(
    H: float,
    ctx: QContext,
    rel_tol: float = 1e-8,
    r_max: float = 4096.0,
    strict: bool = False,
) -> MatrixElementResult:
    """F(H) = 4 pi q^{i nu - 1} H^{i nu - 1} int_0^inf W(rho) J_0^{(j)}(c rho) rho d rho.

    Integrated over dyadic shells [0,1], [1,2], [2,4], ... with adaptive
    Gauss-Kronrod on each shell.  The integral is accepted once two successive
    shells contribute less than ``rel_tol`` of the running total; otherwise the
    result is reported as not converged (``strict=True`` raises).
    """
    if H <= 0:
        raise DomainError("H must be positive")
    if ctx.delta == 2:
        if abs(math.cos(ctx.nu * math.log(ctx.q))) < 1e-8:
            raise DomainError("contour condition nu ln q != (k + 1/2) pi violated")
    q, iv = ctx.q, ctx.inu

    def piece(a: float, b: float) -> tuple[complex, float, int]:
        re = integrate.quad(lambda r: radial_integrand(r, H, ctx).real, a, b, limit=200, full_output=1)
        im = integrate.quad(lambda r: radial_integrand(r, H, ctx).imag, a, b, limit=200, full_output=1)
        return complex(re[0], im[0]), re[1] + im[1], re[2]["neval"] + im[2]["neval"]

    total = 0j
    err = 0.0
    evals = 0
    quiet = 0
    a, b = 0.0, 1.0
    last = math.inf
    converged = False
    try:
        while b <= r_max:
            v, e, n = piece(a, b)
            total += v
            err += e
            evals += n
            last = abs(v)
            if last <= rel_tol * abs(total):
                quiet += 1
                if quiet >= 2:
                    converged = True
                    break
            else:
                quiet = 0
            a, b = b, 2 * b
    except (DomainError, NonConvergenceError, OverflowError):
        converged = False
    pref = 4 * math.pi * qpow(q, iv - 1) * qpow(H, iv - 1)
    value = pref * total
    qerr = abs(pref) * (err + (0.0 if converged else last))
    result = MatrixElementResult(H, complex(value), float(qerr), evals, converged, a if not converged else b)
    if strict and not converged:
        raise NonConvergenceError(f"radial integral not converged up to rho={a:g} (last shell {last:.3g})")
    return result


def toda_residual_in_H(F: Callable[[float], complex], H: float, ctx: QContext) -> float:
    """Relative residual of
    [q F(qH) - (q^{i nu}+q^{-i nu}) F(H) + q^{-1} F(H/q)]/(1-q^2)^2 - mu^2 q^{-delta-1} H^{-2} F(q^{delta-1} H)."""
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    terms = [
        q * F(q * H) / (1 - q * q) ** 2,
        -(qpow(q, iv) + qpow(q, -iv)) * F(H) / (1 - q * q) ** 2,
        F(H / q) / (q * (1 - q * q) ** 2),
        -(ctx.mu**2) * q ** (-d - 1) * H**-2 * F(q ** (d - 1) * H),
    ]
    return abs(sum(terms)) / sum(abs(t) for t in terms)


# ---------------------------------------------------------------------------
# Hermitian pairing on polynomial-times-radial-weight test functions


@dataclass(frozen=True)
class PowerSeries2D:
    """sum c[a,b] zbar^a z^b, multiplied in pairings by a radial weight w(|z|^2)."""

    coefficients: Mapping[tuple[int, int], complex] = field(default_factory=dict)

    def __call__(self, zbar: complex, z: complex) -> complex:
        return sum(c * zbar**a * z**b for (a, b), c in self.coefficients.items())

    def scaled(self, lam_bar: complex, lam: complex) -> "PowerSeries2D":
        return PowerSeries2D({(a, b): c * lam_bar**a * lam**b for (a, b), c in self.coefficients.items()})


def _radial_moment(p: int, weight: Callable[[float], float]) -> float:
    """int_0^inf rho^{2p+1} w(rho^2) d rho."""
    f = lambda r: r ** (2 * p + 1) * weight(r * r)
    return integrate.quad(f, 0, 1, limit=200)[0] + integrate.quad(f, 1, np.inf, limit=200)[0]


def hermitian_form(f: PowerSeries2D, g: PowerSeries2D, ctx: QContext, weight: Callable[[float], float]) -> complex:
    """<f|g> = q^{i nu - 1} int int conj(f(zbar, z)) g(q^{i nu + 1} zbar, q^{i nu - 1} z) w(|z|^2) dzbar dz

    with dzbar dz = 2 rho d rho d phi; angular integration done exactly."""
    q, iv = ctx.q, ctx.inu
    total = 0j
    moments: dict[int, float] = {}
    for (a, b), fc in f.coefficients.items():
        for (c, d), gc in g.coefficients.items():
            # conj(zbar^a z^b) = z^a zbar^b ; angular integral needs b + c == a + d
            if b + c != a + d:
                continue
            p = b + c
            if p not in moments:
                moments[p] = _radial_moment(p, weight)
            total += fc.conjugate() * gc * qpow(q, (iv + 1) * c + (iv - 1) * d) * 4 * math.pi * moments[p]
    return qpow(q, iv - 1) * total


def hermitian_form_quadrature(f: PowerSeries2D, g: PowerSeries2D, ctx: QContext, weight: Callable[[float], float], n_phi: int = 64) -> complex:
    """Same pairing by direct polar quadrature (trapezoid in phi, adaptive in rho)."""
    q, iv = ctx.q, ctx.inu
    phis = 2 * math.pi * np.arange(n_phi) / n_phi

    def inner(r: float) -> complex:
        z = r * np.exp(1j * phis)
        zb = np.conj(z)
        vals = np.conj(f(zb, z)) * g(qpow(q, iv + 1) * zb, qpow(q, iv - 1) * z)
        return complex(np.mean(vals)) * 2 * math.pi * 2 * r * weight(r * r)

    re = integrate.quad(lambda r: inner(r).real, 0, np.inf, limit=200)[0]
    im = integrate.quad(lambda r: inner(r).imag, 0, np.inf, limit=200)[0]
    return qpow(q, iv - 1) * complex(re, im)
