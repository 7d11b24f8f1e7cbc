import math

import numpy as np
import pytest
from scipy.integrate import quad

from ramancomb.fiber_models import FiberSpan, LossProfile, NoGain, TriangularGain
from ramancomb.spectrum import Band, bands, build_comb, flat_launch
from ramancomb.srs_perturbative import (
    QuadratureError,
    closed_form_flat_triangular,
    compute_orders,
    effective_length,
    gamma_first_order,
    gamma_next_order,
    gamma_second_order_analytic,
    order_source,
    partitions,
    quadrature_grid,
    second_order_kernel,
    truncated_power_profile,
)

ALPHA_02 = 0.2 / (10 / math.log(10)) / 1e3


# ------------------------------------------------------ effective length


def test_effective_length_limits():
    assert effective_length(0.0, 70e3) == 70e3
    assert effective_length(ALPHA_02, 1e9) == pytest.approx(1 / ALPHA_02, rel=1e-12)
    assert 1 / ALPHA_02 == pytest.approx(21715, abs=1)
    a = 1e-4
    assert effective_length(a, math.log(2) / a) == pytest.approx(0.5 / a, rel=1e-14)


def test_effective_length_series_branch_agrees_with_expm1():
    z = 1e3
    for a in (0.999e-9, 1.001e-9, 1e-12):
        assert effective_length(a, z) == pytest.approx(-math.expm1(-a * z) / a, rel=1e-15)


def test_effective_length_bounded_and_monotone():
    z = np.linspace(0, 1e5, 101)
    lam = effective_length(ALPHA_02, z)
    assert lam[0] == 0
    assert np.all(np.diff(lam) >= 0)
    assert np.all(lam <= np.minimum(z, 1 / ALPHA_02) + 1e-9)


# ------------------------------------------------------- kernels / orders


@pytest.mark.parametrize("a1, a2", [(4.6e-5, 4.6e-5), (3.5e-5, 6.9e-5), (6.9e-5, 3.5e-5), (4e-5, 0.0), (0.0, 0.0)])
def test_second_order_kernel_against_quadrature(a1, a2):
    z = 70e3
    ref, _ = quad(lambda s: math.exp(-a1 * s) * effective_length(a2, s), 0, z, epsabs=0, epsrel=1e-13)
    assert second_order_kernel(a1, a2, z) == pytest.approx(ref, rel=1e-10)


def test_second_order_kernel_flat_loss_is_half_square():
    lam = effective_length(ALPHA_02, 70e3)
    assert second_order_kernel(ALPHA_02, ALPHA_02, 70e3) == pytest.approx(0.5 * lam**2, rel=1e-13)


def test_partitions_match_low_order_brackets():
    assert partitions(0) == ((),)
    assert partitions(1) == (((1, 1),),)
    assert set(partitions(2)) == {((2, 1),), ((1, 2),)}
    assert set(partitions(3)) == {((3, 1),), ((2, 1), (1, 1)), ((1, 3),)}
    assert [len(partitions(m)) for m in range(1, 9)] == [1, 2, 3, 5, 7, 11, 15, 22]


def test_order_source_low_orders():
    g1, g2, g3 = np.array([0.3]), np.array([-0.2]), np.array([0.05])
    gam = [g1, g2, g3]
    assert order_source(gam, 2) == pytest.approx(g1)
    assert order_source(gam, 3) == pytest.approx(g2 + g1**2 / 2)
    assert order_source(gam, 4) == pytest.approx(g3 + g1 * g2 + g1**3 / 6)


def _two_channel(power_dbm=10.0):
    comb = flat_launch(build_comb([Band("X", 190e12, 200e12)], slot_width_hz=10e12), power_dbm)
    return comb


def test_first_order_two_channel_closed_form():
    comb = _two_channel()
    span = FiberSpan(70e3, LossProfile.flat(0.2), TriangularGain(5e-17))
    z = np.array([0.0, 10e3, 70e3])
    o = gamma_first_order(comb, span, z)
    g = 10e12 * 5e-17
    expected = g * comb.power_w[1] * effective_length(ALPHA_02, z)
    np.testing.assert_allclose(o.order(1)[0], expected, rtol=1e-14)
    assert np.all(o.order(1)[:, 0] == 0)


@pytest.mark.parametrize("alpha", [0.0, 1e-300, 1e-12, ALPHA_02])
def test_first_order_uses_effective_length_for_any_loss(alpha):
    comb = _two_channel()
    span = FiberSpan(70e3, LossProfile.flat(0.2), TriangularGain(5e-17))
    z = np.array([0.0, 1.0, 10e3, 70e3])
    G = span.gain_matrix(comb.frequency_hz)
    o = gamma_first_order(comb, span, z, G, alpha=np.full(2, alpha))
    expected = G @ (comb.power_w[:, None] * effective_length(np.full((2, 1), alpha), z[None, :]))
    np.testing.assert_allclose(o.order(1), expected, rtol=1e-14, atol=0)


def test_no_gain_gives_zero_orders():
    comb = flat_launch(build_comb(bands("C")), 0.0)
    o = compute_orders(comb, FiberSpan(70e3, LossProfile.flat(0.2), NoGain()), 3)
    assert not o.gamma.any()
    tr = truncated_power_profile(o, 3)
    np.testing.assert_allclose(tr.powers[:, -1], comb.power_w * 10 ** (-1.4), rtol=1e-13)


def test_second_order_two_channel_against_hand_integral():
    comb = _two_channel()
    span = FiberSpan(70e3, LossProfile.flat(0.2), TriangularGain(5e-17))
    o = compute_orders(comb, span, 2, quadrature_step_m=50.0)
    g = 10e12 * 5e-17
    p0, p1 = comb.power_w
    # Gamma2_0(z) = int g01 p1 e^{-a s} Gamma1_1(s) ds with Gamma1_1 = -g p0 L(s)
    ref, _ = quad(lambda s: g * p1 * math.exp(-ALPHA_02 * s) * (-g * p0 * effective_length(ALPHA_02, s)),
                  0, 70e3, epsrel=1e-13)
    assert o.order(2)[0, -1] == pytest.approx(ref, rel=1e-6)


def test_analytic_second_order_matches_quadrature(realistic_span):
    comb = flat_launch(build_comb(bands("LCS")), 0.0)
    G = realistic_span.gain_matrix(comb.frequency_hz)
    o = compute_orders(comb, realistic_span, 2, quadrature_step_m=100.0, gain_matrix=G)
    analytic = gamma_second_order_analytic(comb, realistic_span, 70e3, G)
    diff_db = 10 / math.log(10) * np.max(np.abs(analytic - o.order(2)[:, -1]))
    assert diff_db < 1e-4


def test_first_order_matches_inner_quadrature(flat_span):
    comb = flat_launch(build_comb(bands("ULCSE")), -1.0)
    G = flat_span.gain_matrix(comb.frequency_hz)
    o = gamma_first_order(comb, flat_span, np.array([0.0, 70e3]), G)
    lam_q, _ = quad(lambda s: math.exp(-ALPHA_02 * s), 0, 70e3, epsabs=0, epsrel=1e-13)
    ref = G @ (comb.power_w * lam_q)
    np.testing.assert_allclose(o.order(1)[:, -1], ref, rtol=1e-10)


def test_quadrature_check_raises_on_coarse_grid(realistic_span):
    comb = flat_launch(build_comb(bands("ULCSE")), 0.0)
    o = gamma_first_order(comb, realistic_span, quadrature_grid(70e3, 35e3))
    with pytest.raises(QuadratureError) as info:
        gamma_next_order(o, tolerance_db=1e-6)
    assert info.value.order == 2 and info.value.estimate_db > 1e-6


def test_quadrature_grid_hits_span_end():
    z = quadrature_grid(70e3, 3e3)
    assert z[0] == 0 and z[-1] == 70e3 and np.all(np.diff(z) > 0)


def test_truncated_solution_starts_at_launch(realistic_span):
    comb = flat_launch(build_comb(bands("C")), 3.0)
    tr = truncated_power_profile(compute_orders(comb, realistic_span, 3), 3)
    assert np.array_equal(tr.powers[:, 0], comb.power_w)
    assert np.all(tr.powers > 0)


def test_truncated_rejects_missing_order(realistic_span):
    o = compute_orders(flat_launch(build_comb(bands("C")), 0.0), realistic_span, 2)
    with pytest.raises(ValueError):
        truncated_power_profile(o, 3)


# ------------------------------------------------------------ closed form


def test_closed_form_limits():
    comb = flat_launch(build_comb(bands("C")), 0.0)
    p = closed_form_flat_triangular(comb, ALPHA_02, 0.0, 70e3)
    np.testing.assert_allclose(p, comb.power_w * math.exp(-ALPHA_02 * 70e3), rtol=1e-14)
    q = closed_form_flat_triangular(comb, 0.0, 3e-17, 70e3)
    assert q.sum() == pytest.approx(comb.total_power_w, rel=1e-13)


def test_closed_form_two_channel_antisymmetry():
    comb = _two_channel(15.0)
    p = closed_form_flat_triangular(comb, 0.0, 3e-17, 70e3)
    d = p - comb.power_w
    assert d[0] == pytest.approx(-d[1], rel=1e-12)
    assert d[0] > 0
