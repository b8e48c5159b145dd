from __future__ import annotations

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qtoda.qbessel import (
    BesselKind,
    J1_WINDOW,
    bessel_J0,
    bessel_J0_hahn_exton_product,
    interior_sum_closed_form,
    interior_sum_S,
    interior_sum_S_literal,
    j1_radius,
    macdonald_K,
    macdonald_K_array,
    matching_constant_A,
    modified_I,
    modified_I_array,
    modified_I_direct,
    wronskian,
    wronskian_closed_form,
    wronskian_constant,
    wronskian_factor,
    wronskian_series_coefficients,
)
from qtoda.qcalc import DomainError, QContext, qpochhammer, qpow

mp.mp.dps = 40


def mp_I(ctx: QContext, x: float, sign: int) -> complex:
    """High-precision term-by-term series (independent oracle)."""
    q, d, mu = mp.mpf(ctx.q), ctx.delta, mp.mpf(ctx.mu)
    iv = sign * mp.mpc(0, ctx.nu)
    q2 = q * q
    total = mp.mpc(0)
    for k in range(120):
        num = q ** ((2 - d) * k * (k + iv) - k * d) * (1 - q2) ** (2 * k) * (mu * x) ** (iv + 2 * k)
        den = mp.qp(q2, q2, k) * mp.qp(q ** (2 * iv + 2), q2, k)
        total += num / den
    return complex(q ** (-iv * d / 2) / mp.qgamma(iv + 1, q2) * total)


def ctx_strategy(deltas=(0, 1, 2)):
    return st.builds(
        QContext,
        q=st.floats(0.2, 0.9),
        delta=st.sampled_from(deltas),
        mu=st.floats(0.5, 2.0),
        nu=st.floats(0.2, 3.0),
    )


def test_kind_mapping():
    assert BesselKind(1).delta == 2
    assert BesselKind(2).delta == 0
    assert BesselKind(3).delta == 1
    with pytest.raises(DomainError):
        BesselKind(4)


def test_kind_mismatch_rejected():
    with pytest.raises(DomainError):
        modified_I(QContext(0.5, 1), 1.0, j=2)


@given(ctx_strategy(), st.floats(0.05, 1.0), st.sampled_from([1, -1]))
def test_modified_I_matches_high_precision_oracle(ctx, t, sign):
    x = t * (0.9 * J1_WINDOW * j1_radius(ctx) if ctx.delta == 2 else 3.0)
    got = modified_I(ctx, x, sign).value
    ref = mp_I(ctx, x, sign)
    assert abs(got - ref) <= 1e-11 * abs(ref)


@given(ctx_strategy((0, 1)), st.floats(0.05, 3.0))
def test_modified_I_matches_direct_sum(ctx, x):
    got = modified_I(ctx, x).value
    assert abs(got - modified_I_direct(ctx, x)) <= 1e-11 * abs(got)


def test_j1_window_enforced():
    ctx = QContext(0.5, 2)
    lim = J1_WINDOW * j1_radius(ctx)
    modified_I(ctx, 0.99 * lim)
    with pytest.raises(DomainError):
        modified_I(ctx, 1.01 * lim)
    assert j1_radius(ctx) == pytest.approx(ctx.q / (ctx.mu * (1 - ctx.q**2)))


def test_modified_I_diagnostics():
    v = modified_I(QContext(0.5, 1), 1.0)
    assert v.converged() and v.terms_used >= 1


def test_modified_I_array_consistent_with_scalar():
    ctx = QContext(0.4, 0, 1.3, 0.8)
    xs = [0.2, 0.9, 2.5]
    arr = modified_I_array(ctx, xs, -1)[0]
    for x, v in zip(xs, arr):
        assert v == modified_I(ctx, x, -1).value


@given(st.floats(0.2, 0.9), st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False))
def test_J0_kind3_matches_product_form(q, x):
    ctx = QContext(q, 1)
    series = bessel_J0(ctx, 2 * x).value
    assert abs(series - bessel_J0_hahn_exton_product(ctx, x)) <= 1e-11 * max(1.0, abs(series))


def test_J0_kind1_domain():
    with pytest.raises(DomainError):
        bessel_J0(QContext(0.5, 2), 2.5)


@given(ctx_strategy((0, 2)))
def test_matching_constant_is_unimodular_one(ctx):
    a = matching_constant_A(ctx)
    assert abs(a - 1) < 1e-10


@given(ctx_strategy((0, 1)), st.floats(0.1, 3.0))
def test_K_is_real_and_even_in_nu(ctx, x):
    k = macdonald_K(ctx, x).value
    k_neg = macdonald_K(ctx.replace(nu=-ctx.nu), x).value
    assert abs(k.imag) <= 1e-10 * abs(k)
    assert abs(k - k_neg) <= 1e-10 * abs(k)


def test_K_integer_order_rejected():
    with pytest.raises(DomainError):
        macdonald_K_array(QContext(0.5, 1, 1.0, 0.0), [1.0])


# ---------------------------------------------------------------------------
# Wronskian


@pytest.mark.parametrize("delta", [0, 1, 2])
@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("nu", [0.5, 2.7])
def test_wronskian_closed_form(delta, q, nu):
    ctx = QContext(q, delta, 1.0, nu)
    # W cancels between products of size |I|^2; for j=1 near the radius that costs digits,
    # so the double-precision grid stops at half the radius (see the high-precision test below)
    top = 0.5 * j1_radius(ctx) if delta == 2 else 1.0
    xs = top * q ** np.arange(0, 20, dtype=float)
    w = wronskian(ctx, xs)
    ref = wronskian_closed_form(ctx, xs)
    assert np.max(np.abs(w - ref) / np.abs(ref)) < 1e-8


@pytest.mark.parametrize("delta", [0, 1, 2])
def test_wronskian_series_coefficients_match_closed_form(delta):
    """Cauchy-product coefficients of W against the expansion of the closed form."""
    ctx = QContext(0.6, delta, 1.0, 0.9)
    q, iv = ctx.q, ctx.inu
    q2 = q * q
    from qtoda.qcalc import qgamma

    norm = qgamma(1 + iv, q2).value * qgamma(1 - iv, q2).value
    coeffs = wronskian_series_coefficients(ctx, 6)
    for k, ck in enumerate(coeffs):
        pref = qpow(q, (2 - delta) * k * (k + iv) - k * delta) * (1 - q2) ** (2 * k) / qpochhammer(q2, q2, k).value
        assert abs(ck - pref * interior_sum_S(ctx, k)) <= 1e-12 * max(abs(ck), abs(norm * wronskian_constant(ctx)))
    c = wronskian_constant(ctx) * norm
    # closed-form factor expanded in y = (1-q^2)^2 mu^2 x^2
    for k in range(7):
        y_coef = coeffs[k] / (1 - q2) ** (2 * k)
        if delta == 0:
            ref = c * (-1) ** k * q ** (k * (k - 1)) * q2**k / qpochhammer(q2, q2, k).value
        elif delta == 1:
            ref = c if k == 0 else 0
        else:
            ref = c * q2**-k / qpochhammer(q2, q2, k).value
        assert abs(y_coef - ref) <= 1e-12 * max(abs(c), 1e-12)


@pytest.mark.parametrize("delta", [0, 1, 2])
@pytest.mark.parametrize("k", range(0, 7))
def test_interior_sum_closed_form(delta, k):
    ctx = QContext(0.55, delta, 1.0, 1.1)
    s, ref = interior_sum_S(ctx, k), interior_sum_closed_form(ctx, k)
    assert abs(s - ref) <= 1e-10 * max(abs(ref), abs(wronskian_constant(ctx)))


def test_interior_sum_literal_form_disagrees():
    """The alternative summand (Pochhammers both at index n) does not produce the closed form."""
    ctx = QContext(0.5, 0, 1.3, 0.7)
    assert abs(interior_sum_S_literal(ctx, 2) - interior_sum_closed_form(ctx, 2)) > 0.1


def test_wronskian_factor_typo_is_rejected():
    """The factor 4 mu^2 (1-q^2) q^{+-2} x^2 does not describe W."""
    from qtoda.qcalc import qexp_big

    ctx = QContext(0.5, 0, 1.0, 0.5)
    q2 = 0.25
    xs = np.array([0.3, 0.6, 1.0])
    w = wronskian(ctx, xs) / wronskian_constant(ctx)
    typo = np.array([qexp_big(-4 * (1 - q2) * q2 * x * x, q2).value for x in xs])
    assert np.max(np.abs(w - typo) / np.abs(w)) > 1e-3
    ok = np.array([wronskian_factor(ctx, x) for x in xs])
    assert np.max(np.abs(w - ok) / np.abs(w)) < 1e-12


def test_wronskian_closed_form_near_radius_high_precision():
    """Near the j=1 radius, compare the closed form with W built in 50-digit arithmetic."""
    ctx = QContext(0.9, 2, 1.0, 0.5)
    q = mp.mpf(ctx.q)
    q2 = q * q

    def I(x, sign):
        iv = sign * mp.mpc(0, ctx.nu)
        x = mp.mpf(x)
        term = x**iv
        total = term
        for k in range(5000):
            term *= q**-2 * (1 - q2) ** 2 * x**2 / ((1 - q2 ** (k + 1)) * (1 - q ** (2 * iv + 2) * q2**k))
            total += term
            if abs(term) < mp.mpf(10) ** -45 * abs(total):
                break
        return q ** (-iv) / mp.qgamma(iv + 1, q2) * total

    with mp.workdps(50):
        for f in (0.85, 0.6):
            x = f * j1_radius(ctx)
            w = complex(I(x, 1) * I(q * x, -1) - I(x, -1) * I(q * x, 1))
            assert abs(wronskian_closed_form(ctx, x) - w) <= 1e-10 * abs(w)
