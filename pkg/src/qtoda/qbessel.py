"""Modified q^2-Bessel functions, the zero-order q^2-Bessel functions, the
Macdonald-type combinations K and their Wronskians.

The three kinds are labelled by ``j`` and tied to the lattice type ``delta``:
j=1 <-> delta=2, j=2 <-> delta=0, j=3 <-> delta=1.

Every function takes the "scaled" argument ``x``; the standard argument of
the special function is ``2*mu*(1-q^2)*q^(-delta/2)*x``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .qcalc import (
    DEFAULT_TOL,
    QUIET_RUN,
    DomainError,
    NonConvergenceError,
    QContext,
    SeriesValue,
    Tolerances,
    qexp_big,
    qexp_small,
    qgamma,
    qpochhammer,
    qpow,
    sum_series,
)

DELTA_OF_KIND = {1: 2, 2: 0, 3: 1}
KIND_OF_DELTA = {d: j for j, d in DELTA_OF_KIND.items()}
# j=1 series are summed only inside this fraction of the radius of convergence
J1_WINDOW = 0.95


@dataclass(frozen=True)
class BesselKind:
    j: int

    def __post_init__(self) -> None:
        if self.j not in DELTA_OF_KIND:
            raise DomainError(f"Bessel kind must be 1, 2 or 3, got {self.j}")

    @property
    def delta(self) -> int:
        return DELTA_OF_KIND[self.j]

    @classmethod
    def of(cls, ctx: QContext) -> "BesselKind":
        return cls(KIND_OF_DELTA[ctx.delta])


@dataclass(frozen=True)
class BesselEval:
    kind: BesselKind
    order: complex
    argument: complex
    result: SeriesValue


def _check_kind(ctx: QContext, j: int | BesselKind | None) -> BesselKind:
    kind = BesselKind.of(ctx)
    if j is None:
        return kind
    jj = j.j if isinstance(j, BesselKind) else int(j)
    if jj != kind.j:
        raise DomainError(f"kind j={jj} does not match delta={ctx.delta} (expected j={kind.j})")
    return kind


def j1_radius(ctx: QContext) -> float:
    """Radius in x of the j=1 series: mu*(1-q^2)*q^-1*x < 1."""
    return ctx.q / (ctx.mu * (1 - ctx.q**2))


def standard_argument(ctx: QContext, x: complex) -> complex:
    return 2 * ctx.mu * (1 - ctx.q**2) * ctx.q ** (-ctx.delta / 2) * x


def _log_coefficients_step(q: float, delta: int, alpha: complex, k: int) -> complex:
    """log of c_{k+1}/c_k for c_k = q^{(2-d)k(k+a)-kd}(1-q^2)^{2k}/((q^2;q^2)_k (q^{2a+2};q^2)_k)."""
    lq = math.log(q)
    num = lq * ((2 - delta) * (2 * k + 1 + alpha) - delta) + 2 * math.log(1 - q * q)
    den = cmath.log(1 - q ** (2 * k + 2)) + cmath.log(1 - cmath.exp((2 * alpha + 2 + 2 * k) * lq))
    return num - den


def i_series_array(
    q: float,
    delta: int,
    mu: float,
    alpha: complex,
    xs: np.ndarray,
    tol: Tolerances = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized modified-I series of complex order ``alpha`` at positive ``xs``.

    Returns (values, terms_used, tail_estimates). Terms are formed in log space
    so very large and very small arguments do not overflow.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs <= 0):
        raise DomainError("modified_I needs x > 0")
    alpha = complex(alpha)
    lq = math.log(q)
    for k in range(64):
        if abs(1 - cmath.exp((2 * alpha + 2 + 2 * k) * lq)) < 1e-14:
            raise DomainError(f"order {alpha} hits a pole of the coefficient denominators")
    pref = cmath.exp(-delta * alpha * lq / 2) / qgamma(alpha + 1, q * q, tol).value
    logx = np.log(mu * xs)
    total = np.zeros(xs.shape, dtype=complex)
    quiet = np.zeros(xs.shape, dtype=int)
    done = np.zeros(xs.shape, dtype=bool)
    terms = np.zeros(xs.shape, dtype=int)
    tails = np.zeros(xs.shape, dtype=float)
    logc = 0j
    for k in range(tol.max_terms):
        t = np.exp(logc + (alpha + 2 * k) * logx)
        active = ~done
        total[active] += t[active]
        terms[active] = k + 1
        small = np.abs(t) < tol.rel_eps * np.abs(total) + tol.abs_eps
        quiet = np.where(small, quiet + 1, 0)
        tails[active] = np.abs(t[active])
        done |= quiet >= QUIET_RUN
        if done.all():
            break
        logc += _log_coefficients_step(q, delta, alpha, k)
    else:
        raise NonConvergenceError("modified I series not converged")
    return pref * total, terms, np.abs(pref) * tails


def _validate_x(ctx: QContext, xs: np.ndarray) -> None:
    if ctx.delta == 2:
        lim = J1_WINDOW * j1_radius(ctx)
        if np.any(np.asarray(xs) >= lim):
            raise DomainError(
                f"j=1 series evaluated only for x < {lim:.6g} ({J1_WINDOW} of its radius of convergence)"
            )


def modified_I_array(ctx: QContext, xs, sign: int = 1, order: complex | None = None, tol: Tolerances = DEFAULT_TOL):
    """Values of I_{sign*i*nu} (or of the given complex order) on an array of x."""
    alpha = sign * ctx.inu if order is None else complex(order)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    _validate_x(ctx, xs)
    return i_series_array(ctx.q, ctx.delta, ctx.mu, alpha, xs, tol)


def modified_I(
    ctx: QContext,
    x: float,
    sign: int = 1,
    j: int | BesselKind | None = None,
    order: complex | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> SeriesValue:
    """Modified q^2-Bessel function I^{(j)}_{sign*i nu}(2 mu (1-q^2) q^{-delta/2} x; q^2).

    Series:
        q^{-i delta nu/2}/Gamma_{q^2}(i nu + 1)
        * sum_k q^{(2-delta)k(k+i nu) - k delta} (1-q^2)^{2k} (mu x)^{i nu + 2k}
          / ((q^2;q^2)_k (q^{2 i nu + 2};q^2)_k)
    """
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    _check_kind(ctx, j)
    vals, terms, tails = modified_I_array(ctx, [x], sign, order, tol)
    return SeriesValue(complex(vals[0]), int(terms[0]), float(tails[0]))


def modified_I_direct(ctx: QContext, x: float, sign: int = 1, n_terms: int = 200) -> complex:
    """Straightforward term-by-term evaluation with explicit powers (reference oracle)."""
    q, d, iv = ctx.q, ctx.delta, sign * ctx.inu
    q2 = q * q
    total = 0j
    for k in range(n_terms):
        num = qpow(q, (2 - d) * k * (k + iv) - k * d) * (1 - q2) ** (2 * k) * qpow(ctx.mu * x, iv + 2 * k)
        den = qpochhammer(q2, q2, k).value * qpochhammer(qpow(q, 2 * iv + 2), q2, k).value
        total += num / den
    return qpow(q, -iv * d / 2) / qgamma(iv + 1, q2).value * total


def bessel_J0(ctx: QContext, arg: complex, j: int | BesselKind | None = None, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """Zero-order q^2-Bessel function J_0^{(j)}(arg; q^2).

    J_0^{(j)}(y) = sum_k (-1)^k q^{(2-delta)k^2} (y/2)^{2k} / (q^2;q^2)_k^2.
    The j=1 series converges for |y/2| < 1.
    """
    kind = _check_kind(ctx, j)
    q, d = ctx.q, kind.delta
    q2 = q * q
    h = complex(arg) / 2
    if d == 2 and abs(h) >= 1:
        raise DomainError("j=1 zero-order series needs |arg/2| < 1")
    h2 = h * h

    def terms():
        c = 1 + 0j
        k = 0
        while True:
            yield c
            c *= -h2 * q ** ((2 - d) * (2 * k + 1)) / (1 - q2 ** (k + 1)) ** 2
            k += 1

    return sum_series(terms(), tol)


def bessel_J0_hahn_exton_product(ctx: QContext, x: complex, tol: Tolerances = DEFAULT_TOL) -> complex:
    """Product form of J_0^{(3)}(2x; q^2):
    (q x^2;q^2)_inf/(q^2;q^2)_inf * sum_k (-1)^k q^{k(k+1)} / ((q^2;q^2)_k (q x^2;q^2)_k).
    """
    q = ctx.q
    q2 = q * q
    a = q * complex(x) ** 2
    pre = qpochhammer(a, q2, tol=tol).value / qpochhammer(q2, q2, tol=tol).value

    def terms():
        c = 1 + 0j
        k = 0
        while True:
            yield c
            c *= -(q ** (2 * k + 2)) / ((1 - q2 ** (k + 1)) * (1 - a * q2**k))
            k += 1

    return pre * sum_series(terms(), tol).value


def matching_constant_A(ctx: QContext, order: complex | None = None, tol: Tolerances = DEFAULT_TOL) -> complex:
    """A = sqrt(I^{(2)}_{a}(2; q^2) / I^{(2)}_{-a}(2; q^2)) with a = i nu by default.

    Uses the j=2 function at standard argument 2, i.e. x = 1/(mu (1-q^2)).
    """
    alpha = ctx.inu if order is None else complex(order)
    q, mu = ctx.q, ctx.mu
    x = np.array([1.0 / (mu * (1 - q * q))])
    num = i_series_array(q, 0, mu, alpha, x, tol)[0][0]
    den = i_series_array(q, 0, mu, -alpha, x, tol)[0][0]
    if den == 0:
        raise DomainError("vanishing denominator in the matching constant")
    return cmath.sqrt(num / den)


def macdonald_prefactor(q: float, alpha: complex) -> complex:
    """1/2 q^{-alpha^2+alpha} Gamma_{q^2}(alpha) Gamma_{q^2}(1-alpha)."""
    q2 = q * q
    return 0.5 * qpow(q, -alpha * alpha + alpha) * qgamma(alpha, q2).value * qgamma(1 - alpha, q2).value


def macdonald_K_array(ctx: QContext, xs, order: complex | None = None, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """K of complex order (default i nu) on an array of x.

    K = 1/2 q^{nu^2+i nu} Gamma(i nu) Gamma(1-i nu) [A^e I_{-i nu} - A_{-i nu}^e I_{i nu}],
    e = |1-delta|, written for a general order a with nu^2 -> -a^2.
    """
    alpha = ctx.inu if order is None else complex(order)
    if alpha == 0 or abs(alpha - round(alpha.real)) < 1e-14:
        raise DomainError("integer order: the Gamma prefactor is singular")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    _validate_x(ctx, xs)
    e = abs(1 - ctx.delta)
    a_plus = matching_constant_A(ctx, alpha, tol) ** e if e else 1.0
    a_minus = (1 / matching_constant_A(ctx, alpha, tol)) ** e if e else 1.0
    i_minus = i_series_array(ctx.q, ctx.delta, ctx.mu, -alpha, xs, tol)[0]
    i_plus = i_series_array(ctx.q, ctx.delta, ctx.mu, alpha, xs, tol)[0]
    return macdonald_prefactor(ctx.q, alpha) * (a_plus * i_minus - a_minus * i_plus)


def macdonald_K(ctx: QContext, x: float, j: int | BesselKind | None = None, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """q-Bessel-Macdonald function K^{(j)}_{i nu}(2 mu (1-q^2) q^{-delta/2} x; q^2)."""
    _check_kind(ctx, j)
    alpha = ctx.inu
    xs = np.array([float(x)])
    _validate_x(ctx, xs)
    e = abs(1 - ctx.delta)
    a = matching_constant_A(ctx, alpha, tol) if e else 1.0
    im, tm, em = i_series_array(ctx.q, ctx.delta, ctx.mu, -alpha, xs, tol)
    ip, tp, ep = i_series_array(ctx.q, ctx.delta, ctx.mu, alpha, xs, tol)
    pre = macdonald_prefactor(ctx.q, alpha)
    val = pre * (a**e * im[0] - a ** (-e) * ip[0])
    tail = abs(pre) * (em[0] + ep[0])
    return SeriesValue(complex(val), int(max(tm[0], tp[0])), float(tail))


def wronskian(ctx: QContext, x, tol: Tolerances = DEFAULT_TOL):
    """W(x) = I_{i nu}(x) I_{-i nu}(q x) - I_{-i nu}(x) I_{i nu}(q x) (scaled arguments)."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    both = np.concatenate([xs, ctx.q * xs])
    ip = modified_I_array(ctx, both, +1, tol=tol)[0]
    im = modified_I_array(ctx, both, -1, tol=tol)[0]
    n = len(xs)
    w = ip[:n] * im[n:] - im[:n] * ip[n:]
    return w if np.ndim(x) else complex(w[0])


def wronskian_constant(ctx: QContext) -> complex:
    """q^{-i nu}(1-q^{2 i nu}) / (Gamma_{q^2}(1+i nu) Gamma_{q^2}(1-i nu))."""
    q, iv = ctx.q, ctx.inu
    q2 = q * q
    return qpow(q, -iv) * (1 - qpow(q, 2 * iv)) / (qgamma(1 + iv, q2).value * qgamma(1 - iv, q2).value)


def wronskian_factor(ctx: QContext, x: float) -> complex:
    """x-dependent factor of the Wronskian for the lattice type delta.

    delta=0: E_{q^2}(-q^2 (1-q^2)^2 mu^2 x^2)
    delta=1: 1
    delta=2: e_{q^2}(q^{-2} (1-q^2)^2 mu^2 x^2)
    """
    q, mu = ctx.q, ctx.mu
    q2 = q * q
    y = (1 - q2) ** 2 * mu**2 * x**2
    if ctx.delta == 0:
        return qexp_big(-q2 * y, q2).value
    if ctx.delta == 1:
        return 1.0
    return qexp_small(y / q2, q2).value


def wronskian_closed_form(ctx: QContext, x) -> complex:
    if np.ndim(x):
        return np.array([wronskian_constant(ctx) * wronskian_factor(ctx, float(v)) for v in np.asarray(x)])
    return wronskian_constant(ctx) * wronskian_factor(ctx, float(x))


def wronskian_series_coefficients(ctx: QContext, kmax: int) -> list[complex]:
    """Coefficients C_k with W(x) = (Gamma(1+i nu)Gamma(1-i nu))^{-1} sum_k C_k (mu x)^{2k}.

    Built as the Cauchy product of the two I series (independent oracle).
    """
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    q2 = q * q

    def coef(n: int, a: complex) -> complex:
        return (
            qpow(q, (2 - d) * n * (n + a) - n * d)
            * (1 - q2) ** (2 * n)
            / (qpochhammer(q2, q2, n).value * qpochhammer(qpow(q, 2 * a + 2), q2, n).value)
        )

    out = []
    for k in range(kmax + 1):
        out.append(
            sum(
                coef(n, iv) * coef(k - n, -iv) * (qpow(q, -iv + 2 * (k - n)) - qpow(q, iv + 2 * n))
                for n in range(k + 1)
            )
        )
    return out


def q_binomial(k: int, n: int, base: float) -> float:
    if n < 0 or n > k:
        return 0.0
    return (
        qpochhammer(base, base, k).value / (qpochhammer(base, base, n).value * qpochhammer(base, base, k - n).value)
    ).real


def interior_sum_S(ctx: QContext, k: int) -> complex:
    """Interior sum of the Wronskian Cauchy product.

    S_k = sum_n [k,n]_{q^2} q^{-2(2-delta)(k-n)(n+i nu)} (q^{-i nu+2k-2n} - q^{i nu+2n})
          / ((q^{2 i nu+2};q^2)_n (q^{-2 i nu+2};q^2)_{k-n})

    With this normalization the k-th Wronskian coefficient is
    q^{(2-delta)k(k+i nu)-k delta}(1-q^2)^{2k}/(q^2;q^2)_k * S_k.
    """
    if k < 0:
        raise DomainError("k must be nonnegative")
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    q2 = q * q
    total = 0j
    for n in range(k + 1):
        total += (
            q_binomial(k, n, q2)
            * qpow(q, -2 * (2 - d) * (k - n) * (n + iv))
            * (qpow(q, -iv + 2 * k - 2 * n) - qpow(q, iv + 2 * n))
            / (qpochhammer(qpow(q, 2 * iv + 2), q2, n).value * qpochhammer(qpow(q, -2 * iv + 2), q2, k - n).value)
        )
    return total


def interior_sum_S_literal(ctx: QContext, k: int) -> complex:
    """The alternative summand q^{-2(2-delta)n(k-n-i nu)} with both Pochhammers at index n."""
    q, d, iv = ctx.q, ctx.delta, ctx.inu
    q2 = q * q
    total = 0j
    for n in range(k + 1):
        total += (
            q_binomial(k, n, q2)
            * qpow(q, -2 * (2 - d) * n * (k - n - iv))
            * (qpow(q, -iv + 2 * k - 2 * n) - qpow(q, iv + 2 * n))
            / (qpochhammer(qpow(q, 2 * iv + 2), q2, n).value * qpochhammer(qpow(q, -2 * iv + 2), q2, n).value)
        )
    return total


def interior_sum_closed_form(ctx: QContext, k: int) -> complex:
    """Closed form of S_k per lattice type.

    delta=0: (-1)^k q^{-k(k+2 i nu-1)} q^{-i nu}(1-q^{2 i nu})
    delta=1: q^{-i nu}(1-q^{2 i nu}) at k=0, else 0
    delta=2: q^{-i nu}(1-q^{2 i nu})
    """
    q, iv = ctx.q, ctx.inu
    base = qpow(q, -iv) * (1 - qpow(q, 2 * iv))
    if ctx.delta == 0:
        return (-1) ** k * qpow(q, -k * (k + 2 * iv - 1)) * base
    if ctx.delta == 1:
        return base if k == 0 else 0j
    return base
