"""Property-based checks of structural invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from ramancomb.fiber_models import FiberSpan, LossProfile, ScaledRamanGain, TriangularGain, load_bundled_table
from ramancomb.spectrum import Band, build_comb
from ramancomb.srs_numerical import NumericalSettings, integrate
from ramancomb.srs_perturbative import (
    closed_form_flat_triangular,
    compute_orders,
    effective_length,
    partitions,
    second_order_kernel,
)

TABLE = load_bundled_table()
ALPHA = st.floats(0.0, 1e-4)
Z = st.floats(0.0, 2e5)


@given(st.integers(1, 24), st.floats(-6, 6), st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_power_scaling_of_orders(n_ch, p_dbm, seed):
    rng = np.random.default_rng(seed)
    comb = build_comb([Band("X", 190e12, 190e12 + (n_ch - 1) * 0.3e12)], slot_width_hz=0.3e12)
    comb = comb.with_power_dbm(p_dbm + rng.uniform(-2, 2, n_ch))
    span = FiberSpan(50e3, LossProfile.flat(0.2), ScaledRamanGain(TABLE))
    base = compute_orders(comb, span, 3, 5e3)
    for s in (0.5, 2.0):
        scaled = compute_orders(comb.scaled(s), span, 3, 5e3)
        for k in (1, 2, 3):
            np.testing.assert_allclose(scaled.order(k), s**k * base.order(k), rtol=1e-9, atol=0)


@given(ALPHA, Z)
def test_effective_length_bounds(a, z):
    lam = effective_length(a, z)
    assert 0 <= lam <= z * (1 + 1e-15)
    if a > 0:
        assert lam <= 1 / a * (1 + 1e-12)


@given(ALPHA, ALPHA, st.floats(1.0, 1e5))
def test_kernel_symmetric_sum_rule(a1, a2, z):
    # K(a1, a2) + K(a2, a1) = Lambda(a1) Lambda(a2) (integration by parts)
    lhs = second_order_kernel(a1, a2, z) + second_order_kernel(a2, a1, z)
    rhs = effective_length(a1, z) * effective_length(a2, z)
    assert np.isclose(lhs, rhs, rtol=1e-9, atol=0)


@given(st.integers(0, 14))
def test_partitions_sum(m):
    for part in partitions(m):
        assert sum(j * n for j, n in part) == m
    assert len(set(partitions(m))) == len(partitions(m))


@given(st.lists(st.floats(-8, 8), min_size=2, max_size=12), st.floats(0, 5e-17), Z)
@settings(deadline=None)
def test_closed_form_conserves_pre_loss_power(p_dbm, slope, z):
    n = len(p_dbm)
    comb = build_comb([Band("X", 190e12, 190e12 + (n - 1) * 0.5e12)], slot_width_hz=0.5e12).with_power_dbm(p_dbm)
    p = closed_form_flat_triangular(comb, 0.0, slope, z)
    assert np.isclose(p.sum(), comb.total_power_w, rtol=1e-12)


@given(st.integers(2, 10), st.floats(0, 8), st.integers(0, 1000))
@settings(max_examples=15, deadline=None)
def test_numerical_conserves_power_without_loss(n, p_dbm, seed):
    rng = np.random.default_rng(seed)
    comb = build_comb([Band("X", 190e12, 190e12 + (n - 1) * 1e12)], slot_width_hz=1e12)
    comb = comb.with_power_dbm(p_dbm + rng.uniform(-3, 3, n))
    span = FiberSpan(20e3, LossProfile.flat(0.0), TriangularGain(2e-17))
    ev = integrate(comb, span, NumericalSettings(dz_m=200.0))
    totals = ev.powers.sum(axis=0)
    assert np.max(np.abs(totals / totals[0] - 1)) < 1e-12
