from __future__ import annotations

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtoda.qbessel import bessel_J0
from qtoda.qcalc import DomainError, NonConvergenceError, QContext, qpow
from qtoda.whittaker import (
    PowerSeries1D,
    PowerSeries2D,
    angular_average,
    coefficient_recursion_residual,
    hermitian_form,
    hermitian_form_quadrature,
    invariance_residual,
    j0_scale,
    matrix_element_radial,
    psi_L,
    psi_L_series,
    radial_weight,
    radial_weight_expansion,
    radial_weight_oscillating_terms,
    toda_residual_in_H,
    whittaker_condition_residual,
    xi1,
    xi1_coefficient,
    xi2,
    xi2_coefficient,
    xi_hypergeometric_coefficients,
)

CTXS = [QContext(q, d, mu, nu) for d in (0, 1, 2) for q in (0.3, 0.5, 0.8) for mu, nu in ((1.0, 0.8), (0.5, 1.3))]


def test_psi_L_matches_mpmath():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    with mp.workdps(30):
        q = mp.mpf(ctx.q)
        for x in (0.1, 0.7, 3.0):
            ref = mp.qp(-(q ** mp.mpc(4, -1.6)) * x, q * q) / mp.qp(-q * q * x, q * q)
            assert abs(psi_L(x, ctx).value - complex(ref)) < 1e-11 * abs(ref)


def test_psi_L_series_agrees_inside_disk():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    for x in (0.2, 0.7, 2.0):
        assert abs(psi_L(x, ctx).value - psi_L_series(x, ctx, 120)) < 1e-11


def test_psi_L_domain():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    with pytest.raises(DomainError):
        psi_L(-1.0, ctx)
    with pytest.raises(DomainError):
        psi_L(1.0, ctx, sign=0)


@pytest.mark.parametrize("ctx", CTXS, ids=str)
def test_invariance_selects_minus_sign(ctx):
    assert invariance_residual(ctx, sign=-1, N=12) < 1e-13
    assert invariance_residual(ctx, sign=+1, N=12) > 1e-3


def test_weight_is_conjugate_of_invariant_vector():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    for x in (0.3, 1.0, 4.0):
        assert abs(psi_L(x, ctx, +1).value - psi_L(x, ctx, -1).value.conjugate()) < 1e-14


@pytest.mark.parametrize("ctx", CTXS, ids=str)
def test_whittaker_condition(ctx):
    assert whittaker_condition_residual(ctx, N=8) < 1e-13


@pytest.mark.parametrize("ctx", CTXS, ids=str)
def test_coefficient_recursion(ctx):
    assert coefficient_recursion_residual(ctx, N=8) < 1e-13


def test_whittaker_condition_rejects_tiny_N():
    with pytest.raises(DomainError):
        whittaker_condition_residual(QContext(0.5, 1, 1.0, 0.8), N=1)


@pytest.mark.parametrize("ctx", CTXS, ids=str)
def test_hypergeometric_labels(ctx):
    N = 10
    for which, coef in ((1, xi1_coefficient), (2, xi2_coefficient)):
        got = xi_hypergeometric_coefficients(which, ctx, N)
        ref = [coef(n, ctx) for n in range(N + 1)]
        for g, r in zip(got, ref):
            assert abs(g - r) <= 1e-13 * abs(r) + 1e-300


def test_xi_series_values():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    z = 0.4 - 0.9j
    assert abs(xi1(z, ctx).value - sum(xi1_coefficient(n, ctx) * z**n for n in range(60))) < 1e-13
    assert abs(xi2(z, ctx).value - sum(xi2_coefficient(n, ctx) * z**n for n in range(60))) < 1e-13


def test_xi2_delta_two_diverges():
    ctx = QContext(0.5, 2, 1.0, 0.8)
    assert xi2(0, ctx).value == 1
    with pytest.raises(NonConvergenceError):
        xi2(0.1, ctx)


@pytest.mark.parametrize("delta", [0, 1])
@pytest.mark.parametrize("rho", [0.3, 1.0, 2.5])
def test_angular_average_is_J0(delta, rho):
    ctx = QContext(0.5, delta, 1.0, 0.8)
    H = 1.3
    ref = bessel_J0(ctx, j0_scale(ctx, H) * rho).value
    assert abs(angular_average(rho, H, ctx) - ref) < 1e-12 * max(1.0, abs(ref))


@given(st.floats(0.0, 20.0), st.sampled_from([0.3, 0.5, 0.8]), st.floats(0.2, 2.0))
def test_radial_weight_expansion(rho, q, nu):
    ctx = QContext(q, 1, 1.0, nu)
    a, b = radial_weight(rho, ctx), radial_weight_expansion(rho, ctx, 400)
    assert abs(a - b) < 1e-10 * max(1.0, abs(a))


def test_oscillating_expansion_does_not_converge():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    t = radial_weight_oscillating_terms(1.0, ctx, 200)
    # the terms approach a nonzero modulus
    assert abs(t[-1]) > 0.1 * abs(t[0])
    assert abs(abs(t[-1]) - abs(t[-2])) < 1e-10


@pytest.mark.parametrize("delta", [0, 1])
def test_radial_matrix_element_is_reported_not_converged(delta):
    ctx = QContext(0.5, delta, 1.0, 0.8)
    r = matrix_element_radial(1.0, ctx, r_max=256.0)
    assert not r.converged
    with pytest.raises(NonConvergenceError):
        matrix_element_radial(1.0, ctx, r_max=256.0, strict=True)


def test_radial_matrix_element_domain():
    with pytest.raises(DomainError):
        matrix_element_radial(-1.0, QContext(0.5, 1, 1.0, 0.8))
    q = 0.5
    nu = (math.pi / 2) / abs(math.log(q))
    with pytest.raises(DomainError):
        matrix_element_radial(1.0, QContext(q, 2, 1.0, nu))


def test_toda_residual_in_H_detects_non_solutions():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    assert toda_residual_in_H(lambda H: 1.0, 1.0, ctx) > 0.1


def test_power_series_1d():
    p = PowerSeries1D((1, 2, 3))
    assert p(2.0) == 17
    with pytest.raises(DomainError):
        PowerSeries1D((1,), variable_tag="w")


F = PowerSeries2D({(0, 0): 1.0, (1, 1): 0.5 - 0.2j, (2, 1): 0.3j, (0, 1): 0.7})
G = PowerSeries2D({(0, 0): 2.0 + 1j, (1, 1): -0.4, (1, 2): 0.25, (1, 0): 1.1j})


def gaussian_weight(x: float) -> float:
    return math.exp(-x)


@pytest.mark.parametrize("delta", [0, 1])
def test_hermitian_form_matches_quadrature(delta):
    ctx = QContext(0.5, delta, 1.0, 0.8)
    a = hermitian_form(F, G, ctx, gaussian_weight)
    b = hermitian_form_quadrature(F, G, ctx, gaussian_weight)
    assert abs(a - b) < 1e-9 * abs(a)


def test_hermitian_form_conjugate_symmetry():
    # <f|g> = q^{2 i nu} conj(<g_L|f_{1/L}>) with L = q^{i nu} and h_L(zbar, z) = h(L zbar, L z)
    ctx = QContext(0.5, 1, 1.0, 0.8)
    L = qpow(ctx.q, ctx.inu)
    lhs = hermitian_form(F, G, ctx, gaussian_weight)
    rhs = qpow(ctx.q, 2 * ctx.inu) * hermitian_form(G.scaled(L, L), F.scaled(1 / L, 1 / L), ctx, gaussian_weight).conjugate()
    assert abs(lhs - rhs) < 1e-13 * abs(lhs)


def test_hermitian_form_angular_selection():
    ctx = QContext(0.5, 1, 1.0, 0.8)
    f = PowerSeries2D({(1, 0): 1.0})
    g = PowerSeries2D({(0, 0): 1.0})
    assert hermitian_form(f, g, ctx, gaussian_weight) == 0
    assert abs(hermitian_form_quadrature(f, g, ctx, gaussian_weight)) < 1e-12
