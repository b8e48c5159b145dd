"""q-calculus kernel: Pochhammer symbols, q-Gamma, q-exponentials, q-numbers,
Jackson derivatives and Jackson integrals over complex values.

All complex powers use the principal branch ``q**x = exp(x*log(q))`` with
``log(q) < 0`` real.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Iterable

DEFAULT_REL_EPS = 1e-12
DEFAULT_ABS_EPS = 1e-300
DEFAULT_MAX_TERMS = 10000
# a series is cut after this many consecutive negligible terms
QUIET_RUN = 3


class DomainError(ValueError):
    """Argument outside the domain of a function (pole, radius, bad parameter)."""


class NonConvergenceError(ArithmeticError):
    """A series, product or quadrature did not reach its tolerance."""

    def __init__(self, message: str, partial: "SeriesValue | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Tolerances:
    rel_eps: float = DEFAULT_REL_EPS
    abs_eps: float = DEFAULT_ABS_EPS
    max_terms: int = DEFAULT_MAX_TERMS

    def __post_init__(self) -> None:
        if not (self.rel_eps > 0 and self.abs_eps > 0):
            raise DomainError("rel_eps and abs_eps must be positive")
        if int(self.max_terms) != self.max_terms or self.max_terms < 8:
            raise DomainError("max_terms must be an integer >= 8")


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class QContext:
    """Base parameters: deformation q, lattice type delta, coupling mu, spectral nu."""

    q: float
    delta: int = 1
    mu: float = 1.0
    nu: float = 0.5

    def __post_init__(self) -> None:
        q = float(self.q)
        if not (0.0 < q < 1.0):
            raise DomainError(f"q must lie strictly inside (0, 1), got {self.q}")
        if self.delta not in (0, 1, 2) or isinstance(self.delta, bool):
            raise DomainError(f"delta must be 0, 1 or 2, got {self.delta}")
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"mu must be positive, got {self.mu}")
        if not math.isfinite(self.nu):
            raise DomainError(f"nu must be finite, got {self.nu}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "delta", int(self.delta))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def kappa(self) -> float:
        return self.q**self.delta

    @property
    def log_q(self) -> float:
        return math.log(self.q)

    @property
    def inu(self) -> complex:
        return 1j * self.nu

    def replace(self, **changes) -> "QContext":
        fields = {"q": self.q, "delta": self.delta, "mu": self.mu, "nu": self.nu}
        fields.update(changes)
        return QContext(**fields)


@dataclass(frozen=True)
class SeriesValue:
    """A complex value with its truncation diagnostics."""

    value: complex
    terms_used: int
    tail_estimate: float

    def __post_init__(self) -> None:
        if self.tail_estimate < 0 or self.terms_used < 0:
            raise ValueError("diagnostics must be nonnegative")

    def converged(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return self.terms_used >= 1 and self.tail_estimate <= tol.rel_eps * abs(self.value) + tol.abs_eps

    def __complex__(self) -> complex:
        return complex(self.value)

    def __abs__(self) -> float:
        return abs(self.value)


def qpow(q: float, x: complex) -> complex:
    """Principal-branch power q**x for real 0 < q."""
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return q ** x
    return cmath.exp(complex(x) * math.log(q))


def sum_series(terms: Iterable[complex], tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """Sum a series, stopping after ``QUIET_RUN`` consecutive negligible terms.

    The tail estimate is the magnitude of the last term that was still added,
    which bounds the remainder for the geometrically decaying series used here.
    """
    total = 0j
    quiet = 0
    last = 0.0
    used = 0
    for t in terms:
        total += t
        used += 1
        last = abs(t)
        if last < tol.rel_eps * abs(total) + tol.abs_eps:
            quiet += 1
            if quiet >= QUIET_RUN:
                return SeriesValue(total, used, last)
        else:
            quiet = 0
        if used >= tol.max_terms:
            break
    else:
        return SeriesValue(total, used, 0.0)
    raise NonConvergenceError(f"series not converged after {used} terms", SeriesValue(total, used, last))


def qpochhammer(a: complex, q: float, n: int | float = math.inf, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """(a; q)_n = prod_{k<n} (1 - a q^k); ``n = math.inf`` gives the infinite product."""
    if not (0.0 < q < 1.0):
        raise DomainError("qpochhammer needs 0 < q < 1")
    if n != math.inf:
        if n < 0 or int(n) != n:
            raise DomainError("n must be a nonnegative integer or infinity")
        prod = 1 + 0j
        ak = complex(a)
        for _ in range(int(n)):
            prod *= 1 - ak
            ak *= q
        return SeriesValue(prod, max(int(n), 1), 0.0)
    prod = 1 + 0j
    ak = complex(a)
    k = 0
    while True:
        # |log(remaining product)| <= sum |a q^j| / (1 - |a q^j|)
        if abs(ak) < 0.5:
            tail = abs(ak) / ((1 - q) * (1 - abs(ak)))
            if tail <= tol.rel_eps or abs(ak) < tol.abs_eps:
                return SeriesValue(prod, max(k, 1), tail * abs(prod))
        if k >= tol.max_terms:
            raise NonConvergenceError("infinite product not converged", SeriesValue(prod, k, abs(ak) * abs(prod)))
        prod *= 1 - ak
        ak *= q
        k += 1


def _is_gamma_pole(x: complex, base: float) -> bool:
    lb = math.log(base)
    # poles where base^(x+j) = 1 for some integer j >= 0
    re = complex(x).real
    if re > 0.5:
        return False
    j = round(-re)
    w = (complex(x) + j) * lb / (2j * math.pi)
    return j >= 0 and abs(complex(x) + j - round(w.real) * 2j * math.pi / lb) < 1e-13


def qgamma(x: complex, base: float, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """Gamma_base(x) = (base;base)_inf / (base^x;base)_inf * (1-base)^(1-x)."""
    if _is_gamma_pole(x, base):
        raise DomainError(f"q-Gamma pole at x={x}")
    num = qpochhammer(base, base, tol=tol)
    den = qpochhammer(qpow(base, x), base, tol=tol)
    if den.value == 0:
        raise DomainError(f"q-Gamma pole at x={x}")
    val = num.value / den.value * qpow(1 - base, 1 - complex(x))
    rel_tail = num.tail_estimate / max(abs(num.value), 1e-300) + den.tail_estimate / max(abs(den.value), 1e-300)
    return SeriesValue(val, max(num.terms_used, den.terms_used), rel_tail * abs(val))


def qexp_small(x: complex, base: float, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """e_base(x) = sum x^n/(base;base)_n = 1/(x;base)_inf for |x| < 1."""
    if abs(x) >= 1:
        raise DomainError("qexp_small requires |x| < 1")
    p = qpochhammer(x, base, tol=tol)
    return SeriesValue(1 / p.value, p.terms_used, p.tail_estimate / abs(p.value) ** 2)


def qexp_big(x: complex, base: float, tol: Tolerances = DEFAULT_TOL) -> SeriesValue:
    """E_base(x) = (-x;base)_inf, entire in x."""
    return qpochhammer(-complex(x), base, tol=tol)


def qnumber(x: complex, q: float) -> complex:
    """Symmetric q-number [x]_q = (q^x - q^-x)/(q - 1/q)."""
    return (qpow(q, x) - qpow(q, -complex(x))) / (q - 1 / q)


def jackson_derivative(f: Callable[[complex], complex], x: complex, q: float, variant: str = "q2") -> complex:
    """Jackson derivative.

    ``variant="q2"``: (f(x) - f(q^2 x)) / ((1-q^2) x);
    ``variant="tilde"``: (f(x) - f(q x)) / ((1-q) x).
    """
    if x == 0:
        raise DomainError("Jackson derivative is undefined at x = 0")
    if variant == "q2":
        p = q * q
    elif variant == "tilde":
        p = q
    else:
        raise DomainError(f"unknown variant {variant!r}")
    return (f(x) - f(p * x)) / ((1 - p) * x)


def _one_side(f: Callable[[float], complex], q: float, anchor: float, step: int, tol: Tolerances) -> tuple[complex, int, float]:
    total = 0j
    quiet = 0
    n = 0 if step > 0 else -1
    used = 0
    last = 0.0
    while True:
        x = anchor * q**n
        t = q**n * f(x)
        total += t
        used += 1
        last = abs(t)
        if last < tol.rel_eps * abs(total) + tol.abs_eps:
            quiet += 1
            if quiet >= QUIET_RUN:
                return total, used, last
        else:
            quiet = 0
        if used >= tol.max_terms:
            raise NonConvergenceError("Jackson sum does not decay", SeriesValue(total, used, last))
        n += step


def jackson_integral(
    f: Callable[[float], complex],
    q: float,
    domain: str = "half-line",
    grid_anchor: float = 1.0,
    tol: Tolerances = DEFAULT_TOL,
) -> SeriesValue:
    """Jackson integral over (0, inf) or the whole real line.

    half-line: (1-q) * anchor * sum_{n in Z} q^n f(q^n anchor).
    bilateral: the same lattice mirrored onto the negative axis.
    Each end of the bilateral index range is truncated independently.
    """
    if domain == "half-line":
        g = f
    elif domain == "bilateral":
        def g(x: float) -> complex:
            return f(x) + f(-x)
    else:
        raise DomainError(f"unknown domain {domain!r}")
    up, n_up, t_up = _one_side(g, q, grid_anchor, +1, tol)
    down, n_down, t_down = _one_side(g, q, grid_anchor, -1, tol)
    scale = (1 - q) * grid_anchor
    return SeriesValue(scale * (up + down), n_up + n_down, scale * (t_up + t_down))
