"""Two-body relativistic open Toda q-difference operator on geometric grids."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .qcalc import DEFAULT_ABS_EPS, DomainError, QContext, qnumber


@dataclass(frozen=True)
class GridFunction:
    """Complex samples f(anchor * q**n) for n = lo..hi."""

    anchor: float
    q: float
    lo: int
    hi: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise DomainError("lo must not exceed hi")
        if not (self.anchor > 0 and 0 < self.q < 1):
            raise DomainError("anchor must be positive and 0 < q < 1")
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.hi - self.lo + 1,):
            raise DomainError("samples must match the index window")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def sample(cls, f: Callable[[np.ndarray], np.ndarray], q: float, anchor: float = 1.0, lo: int = -20, hi: int = 20) -> "GridFunction":
        n = np.arange(lo, hi + 1)
        return cls(anchor, q, lo, hi, f(anchor * q**n.astype(float)))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    @property
    def x(self) -> np.ndarray:
        return self.anchor * self.q ** self.indices.astype(float)

    def at(self, n: int) -> complex:
        if not (self.lo <= n <= self.hi):
            raise DomainError(f"index {n} outside [{self.lo}, {self.hi}]")
        return complex(self.samples[n - self.lo])

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Samples for indices lo..hi (must lie inside the stored window)."""
        if lo < self.lo or hi > self.hi:
            raise DomainError(f"window [{lo}, {hi}] exceeds [{self.lo}, {self.hi}]")
        return self.samples[lo - self.lo : hi - self.lo + 1]

    def shifted(self, steps: int, lo: int, hi: int) -> np.ndarray:
        """Values of f(q**steps * x_n) for n = lo..hi, i.e. samples at n + steps."""
        return self.window(lo + steps, hi + steps)

    def restrict(self, lo: int, hi: int) -> "GridFunction":
        return GridFunction(self.anchor, self.q, lo, hi, self.window(lo, hi))

    def combine(self, other: "GridFunction", a: complex = 1.0, b: complex = 1.0) -> "GridFunction":
        if (self.anchor, self.q) != (other.anchor, other.q):
            raise DomainError("grid functions live on different lattices")
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return GridFunction(self.anchor, self.q, lo, hi, a * self.window(lo, hi) + b * other.window(lo, hi))


def delta_q(f: GridFunction) -> GridFunction:
    """Centered second difference (f(qx) - 2f(x) + f(x/q)) / (q - 1/q)^2."""
    if f.hi - f.lo < 2:
        raise DomainError("window too small for the second difference")
    lo, hi = f.lo + 1, f.hi - 1
    q = f.q
    vals = (f.shifted(1, lo, hi) - 2 * f.shifted(0, lo, hi) + f.shifted(-1, lo, hi)) / (q - 1 / q) ** 2
    return GridFunction(f.anchor, q, lo, hi, vals)


def toda_eigenvalue(ctx: QContext) -> complex:
    """lambda = -([i nu/2]_q)^2."""
    return -qnumber(ctx.inu / 2, ctx.q) ** 2


@dataclass(frozen=True)
class TodaOperator:
    """H = -Delta_q + mu^2 q^{-2 delta + 2} x^2 T_q^{1-delta}, T_q f(x) = f(q x)."""

    ctx: QContext

    def __post_init__(self) -> None:
        if self.ctx.delta not in (0, 1, 2):
            raise DomainError("only delta in {0, 1, 2} gives a second-order operator")

    @property
    def shift(self) -> int:
        return 1 - self.ctx.delta

    def valid_window(self, f: GridFunction) -> tuple[int, int]:
        s = self.shift
        lo = f.lo + max(1, s)
        hi = f.hi - max(1, -s)
        if lo > hi:
            raise DomainError("window too small for the operator stencil")
        return lo, hi

    def potential(self, f: GridFunction, lo: int, hi: int) -> np.ndarray:
        c = self.ctx
        x = f.anchor * f.q ** np.arange(lo, hi + 1, dtype=float)
        return c.mu**2 * c.q ** (-2 * c.delta + 2) * x**2 * f.shifted(self.shift, lo, hi)


def apply_hamiltonian(op: TodaOperator, f: GridFunction) -> GridFunction:
    if op.ctx.q != f.q:
        raise DomainError("operator and grid use different q")
    lo, hi = op.valid_window(f)
    d2 = delta_q(f).window(lo, hi)
    return GridFunction(f.anchor, f.q, lo, hi, -d2 + op.potential(f, lo, hi))


@dataclass(frozen=True)
class ResidualReport:
    """Residual diagnostics on the valid window.

    ``hamiltonian``: max |Hf - lambda f| / (|lambda| |f| + abs_eps).
    ``difference_equation``: max of the difference-equation residual divided by
    the sum of magnitudes of its four terms (scale-free cancellation measure).
    ``pointwise``: the per-point values of the latter.
    """

    hamiltonian: float
    difference_equation: float
    pointwise: np.ndarray = field(repr=False)
    lo: int = 0
    hi: int = 0


def difference_equation_terms(op: TodaOperator, f: GridFunction, lo: int, hi: int) -> list[np.ndarray]:
    """The four terms of
    F(x/q) - (q^{i nu} + q^{-i nu}) F(x) + F(q x) - mu^2 q^{-2 delta}(1-q^2)^2 x^2 F(q^{1-delta} x)."""
    c = op.ctx
    q = c.q
    x = f.anchor * q ** np.arange(lo, hi + 1, dtype=float)
    lam2 = q ** (1j * c.nu) + q ** (-1j * c.nu)
    return [
        f.shifted(-1, lo, hi),
        -lam2 * f.shifted(0, lo, hi),
        f.shifted(1, lo, hi),
        -(c.mu**2) * q ** (-2 * c.delta) * (1 - q * q) ** 2 * x**2 * f.shifted(op.shift, lo, hi),
    ]


def eigen_residual(op: TodaOperator, f: GridFunction, eigenvalue: complex | None = None, abs_eps: float = DEFAULT_ABS_EPS) -> ResidualReport:
    lam = toda_eigenvalue(op.ctx) if eigenvalue is None else complex(eigenvalue)
    hf = apply_hamiltonian(op, f)
    lo, hi = hf.lo, hf.hi
    fv = f.window(lo, hi)
    with np.errstate(over="ignore"):
        # lambda = 0 with a tiny abs_eps legitimately sends this to inf
        ham = np.abs(hf.samples - lam * fv) / (abs(lam) * np.abs(fv) + abs_eps)
    terms = difference_equation_terms(op, f, lo, hi)
    if eigenvalue is not None:
        # the difference equation encodes the eigenvalue through q^{i nu}+q^{-i nu};
        # replace it by the one implied by the supplied eigenvalue
        q = op.ctx.q
        implied = 2 - lam * (q - 1 / q) ** 2
        terms[1] = -implied * f.shifted(0, lo, hi)
    num = np.abs(sum(terms))
    den = sum(np.abs(t) for t in terms) + abs_eps
    pw = num / den
    return ResidualReport(float(np.max(ham)), float(np.max(pw)), pw, lo, hi)


def hamiltonian_from_difference_equation(op: TodaOperator, f: GridFunction) -> GridFunction:
    """(H - lambda) f rebuilt from the difference-equation terms (cross-check of the algebra)."""
    lo, hi = op.valid_window(f)
    q = op.ctx.q
    terms = difference_equation_terms(op, f, lo, hi)
    # multiply by -(q - 1/q)^{-2} and shift the eigenvalue back
    vals = -sum(terms) / (q - 1 / q) ** 2
    return GridFunction(f.anchor, f.q, lo, hi, vals)


def classical_limit_error(
    f: Callable[[np.ndarray], np.ndarray],
    euler_second: Callable[[np.ndarray], np.ndarray],
    q: float,
    xs: np.ndarray,
) -> float:
    """max |Delta_q f - (x^2 f'' + x f')/4| over xs; ``euler_second`` supplies x^2 f'' + x f'."""
    xs = np.asarray(xs, dtype=float)
    d2 = (f(q * xs) - 2 * f(xs) + f(xs / q)) / (q - 1 / q) ** 2
    return float(np.max(np.abs(d2 - euler_second(xs) / 4)))


def empirical_order(qs, errors) -> np.ndarray:
    """Successive slopes log(e_i/e_{i+1}) / log((1-q_i)/(1-q_{i+1}))."""
    h = 1 - np.asarray(qs, dtype=float)
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
