from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtoda.qbessel import J1_WINDOW, j1_radius, macdonald_K_array, modified_I_array
from qtoda.qcalc import DomainError, QContext, qnumber
from qtoda.toda import (
    GridFunction,
    TodaOperator,
    apply_hamiltonian,
    classical_limit_error,
    delta_q,
    eigen_residual,
    empirical_order,
    hamiltonian_from_difference_equation,
    toda_eigenvalue,
)


def j1_anchor(ctx: QContext, lo: int) -> float:
    """Anchor putting the largest sample just inside the j=1 window."""
    return 0.999 * J1_WINDOW * j1_radius(ctx) * ctx.q ** (1 - lo)


def sampled_I(ctx: QContext, sign: int, lo: int = -20, hi: int = 20) -> GridFunction:
    anchor = j1_anchor(ctx, lo) if ctx.delta == 2 else 1.0
    return GridFunction.sample(lambda x: modified_I_array(ctx, x, sign)[0], ctx.q, anchor, lo - 1, hi + 1)


def test_grid_function_validation():
    with pytest.raises(DomainError):
        GridFunction(1.0, 0.5, 3, 2, np.zeros(0))
    with pytest.raises(DomainError):
        GridFunction(1.0, 0.5, 0, 2, np.zeros(2))
    with pytest.raises(DomainError):
        GridFunction(-1.0, 0.5, 0, 2, np.zeros(3))
    g = GridFunction.sample(lambda x: x, 0.5, 2.0, -1, 1)
    assert g.at(1) == pytest.approx(1.0)
    assert g.shifted(1, -1, 0) == pytest.approx([2.0, 1.0])
    with pytest.raises(DomainError):
        g.at(2)
    with pytest.raises(DomainError):
        delta_q(g.restrict(0, 1))


def test_delta_q_kills_constants():
    f = GridFunction.sample(lambda x: np.full_like(x, 3.0), 0.7, 1.0, -5, 5)
    assert np.all(delta_q(f).samples == 0)


@given(st.floats(0.1, 0.95), st.floats(-3, 3))
def test_delta_q_on_power(q, nu):
    # x^{i nu} is an eigenvector with eigenvalue ([i nu/2]_q)^2
    f = GridFunction.sample(lambda x: x ** (1j * nu), q, 1.0, -4, 4)
    d = delta_q(f)
    lam = qnumber(1j * nu / 2, q) ** 2
    direct = (q ** (1j * nu) - 2 + q ** (-1j * nu)) / (q - 1 / q) ** 2
    assert abs(lam - direct) < 1e-12 * max(1.0, abs(direct))
    np.testing.assert_allclose(d.samples, lam * f.window(d.lo, d.hi), rtol=1e-11, atol=1e-14)


def test_operator_rejects_other_delta():
    with pytest.raises(DomainError):
        TodaOperator(QContext(0.5, 3, 1.0, 0.5))


@pytest.mark.parametrize("delta", [0, 1, 2])
def test_constant_potential(delta):
    ctx = QContext(0.5, delta, 1.3, 0.5)
    op = TodaOperator(ctx)
    f = GridFunction.sample(lambda x: np.ones_like(x), ctx.q, 1.0, -6, 6)
    h = apply_hamiltonian(op, f)
    x = h.x
    np.testing.assert_allclose(h.samples, ctx.mu**2 * ctx.q ** (2 - 2 * delta) * x**2, rtol=1e-13)


def test_delta_one_potential_is_local():
    ctx = QContext(0.6, 1, 0.7, 0.5)
    op = TodaOperator(ctx)
    assert op.shift == 0
    f = GridFunction.sample(lambda x: np.exp(-x), ctx.q, 1.0, -3, 3)
    lo, hi = op.valid_window(f)
    np.testing.assert_allclose(op.potential(f, lo, hi), ctx.mu**2 * f.x[1:-1] ** 2 * f.window(lo, hi))


CASES = [(d, q, nu, mu) for d in (0, 1, 2) for q in (0.3, 0.5, 0.9) for nu in (0.5, 1.3, 2.7) for mu in (0.5, 1.0, 2.0)]


@pytest.mark.parametrize("delta,q,nu,mu", CASES)
def test_I_solves_difference_equation(delta, q, nu, mu):
    ctx = QContext(q, delta, mu, nu)
    op = TodaOperator(ctx)
    for sign in (1, -1):
        rep = eigen_residual(op, sampled_I(ctx, sign))
        assert rep.difference_equation < 1e-9


@pytest.mark.parametrize("delta", [0, 1])
def test_K_solves_difference_equation(delta):
    ctx = QContext(0.5, delta, 1.0, 0.8)
    f = GridFunction.sample(lambda x: macdonald_K_array(ctx, x), ctx.q, 1.0, -11, 11)
    assert eigen_residual(TodaOperator(ctx), f).difference_equation < 1e-9


@pytest.mark.parametrize("delta", [0, 1, 2])
def test_hamiltonian_residual_small_where_well_scaled(delta):
    ctx = QContext(0.5, delta, 1.0, 1.3)
    f = sampled_I(ctx, 1, -3, 3)
    assert eigen_residual(TodaOperator(ctx), f).hamiltonian < 1e-9


@pytest.mark.parametrize("delta", [0, 1, 2])
def test_two_formulations_agree(delta):
    ctx = QContext(0.5, delta, 1.0, 0.5)
    op = TodaOperator(ctx)
    f = GridFunction.sample(lambda x: np.exp(-x) + 1j * x, ctx.q, 1.0, -6, 6)
    lam = toda_eigenvalue(ctx)
    hf = apply_hamiltonian(op, f)
    direct = hf.samples - lam * f.window(hf.lo, hf.hi)
    other = hamiltonian_from_difference_equation(op, f)
    assert (other.lo, other.hi) == (hf.lo, hf.hi)
    assert np.max(np.abs(direct - other.samples)) < 1e-12 * np.max(np.abs(direct))


def test_eigenvalue_convention():
    ctx = QContext(0.5, 1, 1.0, 1.3)
    q = ctx.q
    expected = -(q ** (1.3j) - 2 + q ** (-1.3j)) / (q - 1 / q) ** 2
    assert abs(toda_eigenvalue(ctx) - expected) < 1e-14
    assert abs(toda_eigenvalue(ctx).imag) < 1e-15 and toda_eigenvalue(ctx).real > 0


@pytest.mark.parametrize("delta", [0, 1, 2])
def test_constants_are_not_eigenfunctions(delta):
    ctx = QContext(0.5, delta, 1.0, 0.5)
    f = GridFunction.sample(lambda x: np.ones_like(x), ctx.q, 1.0, -20, 20)
    rep = eigen_residual(TodaOperator(ctx), f, eigenvalue=0.0)
    assert rep.difference_equation > 0.1
    assert rep.hamiltonian > 0.1


def test_wrong_eigenvalue_detected():
    ctx = QContext(0.5, 1, 1.0, 0.5)
    f = sampled_I(ctx, 1)
    rep = eigen_residual(TodaOperator(ctx), f, eigenvalue=toda_eigenvalue(ctx) * 1.5)
    assert rep.difference_equation > 1e-3


def test_linearity_of_solution_space():
    ctx = QContext(0.5, 0, 1.0, 1.3)
    op = TodaOperator(ctx)
    a, b = 0.3 - 2j, 1.7
    f = sampled_I(ctx, 1).combine(sampled_I(ctx, -1), a, b)
    assert eigen_residual(op, f).difference_equation < 1e-9


def test_classical_limit_order():
    f = lambda x: np.exp(-(x**2))
    euler = lambda x: (4 * x**4 - 4 * x**2) * np.exp(-(x**2))
    qs = (0.9, 0.95, 0.975)
    errs = [classical_limit_error(f, euler, q, np.linspace(0.2, 2.0, 19)) for q in qs]
    assert errs[0] > errs[1] > errs[2]
    assert np.all(empirical_order(qs, errs) >= 1.8)
