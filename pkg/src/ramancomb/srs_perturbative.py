"""Perturbative solution of the SRS equations in the log domain.

Writing ``P_ch(z) = P_ch e^{-alpha_ch z} exp(Gamma_ch(z))`` and expanding
``Gamma = sum_k Gamma^(k)`` with ``Gamma^(k)`` of degree ``k`` in the launch
powers, each order follows from the previous ones:

    Gamma^(k)(z, f) = int_0^z dz' sum_f' g_R(f, f') P' e^{-alpha' z'} B_k(z', f')

where ``B_k`` is the coefficient of ``eps^(k-1)`` in
``exp(sum_j eps^j Gamma^(j))``, i.e. a sum over integer partitions of
``k - 1``. The first order has a closed form; higher orders use a composite
trapezoid on a coarse uniform grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

from .fiber_models import DB_PER_NEPER, FiberSpan
from .spectrum import WdmComb

SMALL_AZ = 1e-6


class QuadratureError(ArithmeticError):
    """The spatial grid is too coarse for the requested tolerance."""

    def __init__(self, message, order, estimate_db, tolerance_db, step_m):
        super().__init__(message)
        self.order = order
        self.estimate_db = estimate_db
        self.tolerance_db = tolerance_db
        self.step_m = step_m


def effective_length(alpha, z):
    """``(1 - exp(-alpha z)) / alpha`` in metres; equals ``z`` for ``alpha = 0``.

    Broadcasts over ``alpha`` and ``z``.
    """
    a = np.asarray(alpha, dtype=float)
    z = np.asarray(z, dtype=float)
    x = a * z
    small = np.abs(x) < SMALL_AZ
    if not small.any():
        out = -np.expm1(-x) / a
    else:
        # the product a z loses precision for tiny or subnormal alpha; use the series there
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = np.where(small, z * (1.0 - x / 2.0 + x * x / 6.0), -np.expm1(-x) / a)
    return out if out.ndim else float(out)


def _exp_moment(n, a, z):
    """``int_0^z s^n exp(-a s) ds`` for n in (1, 2), stable as ``a z -> 0``."""
    x = a * z
    out = np.empty(np.broadcast(a, z).shape)
    x = np.broadcast_to(x, out.shape)
    a_b = np.broadcast_to(a, out.shape)
    z_b = np.broadcast_to(z, out.shape)
    series = x < 1.0
    xs, zs = x[series], z_b[series]
    acc = np.zeros(xs.shape)
    term = np.ones(xs.shape)
    for m in range(30):
        acc += term / (n + 1 + m)
        term = term * (-xs) / (m + 1)
    out[series] = zs ** (n + 1) * acc
    xl, al = x[~series], a_b[~series]
    e = np.exp(-xl)
    if n == 1:
        out[~series] = (1.0 - e * (1.0 + xl)) / al**2
    else:
        out[~series] = (2.0 - e * (2.0 + 2.0 * xl + xl * xl)) / al**3
    return out


def second_order_kernel(alpha_1, alpha_2, z):
    """``int_0^z exp(-alpha_1 s) Lambda(s, alpha_2) ds``.

    Equal to ``(Lambda(z, a1) - Lambda(z, a1 + a2)) / a2``, which reduces to
    ``Lambda(z)^2 / 2`` for ``a1 = a2``. Small ``alpha_2 z`` uses a series in
    ``alpha_2``.
    """
    a1, a2, z = np.broadcast_arrays(
        np.asarray(alpha_1, dtype=float), np.asarray(alpha_2, dtype=float), np.asarray(z, dtype=float)
    )
    out = np.empty(a1.shape)
    small = a2 * z < SMALL_AZ
    big = ~small
    out[big] = (
        np.asarray(effective_length(a1[big], z[big])) - np.asarray(effective_length(a1[big] + a2[big], z[big]))
    ) / a2[big]
    if np.any(small):
        a1s, a2s, zs = a1[small], a2[small], z[small]
        out[small] = _exp_moment(1, a1s, zs) - 0.5 * a2s * _exp_moment(2, a1s, zs)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def partitions(m: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Integer partitions of ``m`` as ``((part, multiplicity), ...)``, largest part first."""
    if m < 0:
        raise ValueError("m must be non-negative")

    def gen(rest, max_part):
        if rest == 0:
            yield ()
            return
        for part in range(min(rest, max_part), 0, -1):
            for mult in range(rest // part, 0, -1):
                for tail in gen(rest - part * mult, part - 1):
                    yield ((part, mult),) + tail

    return tuple(gen(m, m))


def order_source(gammas, k: int) -> np.ndarray:
    """Bracketed factor ``B_k`` multiplying ``L(z', f')`` in the order-``k`` integral.

    ``gammas[j - 1]`` holds ``Gamma^(j)``; orders ``1 .. k-1`` are needed.
    """
    shape = np.shape(gammas[0]) if len(gammas) else ()
    if k == 1:
        return np.ones(shape)
    total = np.zeros(shape)
    for part in partitions(k - 1):
        term = np.ones(shape)
        for j, n in part:
            term = term * gammas[j - 1] ** n / math.factorial(n)
        total += term
    return total


@lru_cache(maxsize=256)
def quadrature_grid(length_m: float, step_m: float) -> np.ndarray:
    """Uniform grid from 0 to ``length_m``; the last interval may be shorter.

    The returned array is shared between calls and read-only.
    """
    if step_m <= 0:
        raise ValueError("quadrature step must be positive")
    if length_m == 0:
        return np.zeros(1)
    n = int(math.floor(length_m / step_m * (1 + 1e-12)))
    z = step_m * np.arange(n + 1)
    if length_m - z[-1] > 1e-9 * step_m:
        z = np.append(z, length_m)
    z[-1] = length_m
    z.flags.writeable = False
    return z


def _cumtrapz(y, z):
    out = np.zeros(y.shape)
    if z.size > 1:
        dz = np.diff(z)
        np.cumsum(0.5 * dz * (y[..., 1:] + y[..., :-1]), axis=-1, out=out[..., 1:])
    return out


@dataclass(frozen=True, eq=False)
class PerturbativeOrders:
    """``gamma[k-1, ch, iz]`` holds ``Gamma^(k)`` on ``z_grid``.

    Also carries the launch powers, loss and gain matrix the orders were
    built from, so further orders need no extra inputs.
    """

    z_grid: np.ndarray
    gamma: np.ndarray
    comb: WdmComb
    alpha: np.ndarray
    gain_matrix: np.ndarray

    @property
    def max_order(self) -> int:
        return self.gamma.shape[0]

    @property
    def power_w(self) -> np.ndarray:
        return self.comb.power_w

    def order(self, k: int) -> np.ndarray:
        if not 1 <= k <= self.max_order:
            raise ValueError(f"order {k} not computed (max {self.max_order})")
        return self.gamma[k - 1]

    def at(self, z_m: float) -> np.ndarray:
        """All orders at ``z_m`` (linear interpolation), shape (orders, channels)."""
        zg = self.z_grid
        if not (-1e-9 <= z_m <= zg[-1] + 1e-9):
            raise ValueError(f"z = {z_m} m outside the quadrature grid")
        i = int(np.clip(np.searchsorted(zg, z_m), 1, max(zg.size - 1, 1)))
        if zg.size == 1:
            return self.gamma[:, :, 0].copy()
        w = (z_m - zg[i - 1]) / (zg[i] - zg[i - 1])
        return (1 - w) * self.gamma[:, :, i - 1] + w * self.gamma[:, :, i]


def _context(comb, span, gain_matrix, alpha=None):
    alpha = span.alpha(comb.frequency_hz) if alpha is None else np.asarray(alpha, dtype=float)
    G = span.gain_matrix(comb.frequency_hz) if gain_matrix is None else np.asarray(gain_matrix, dtype=float)
    return alpha, G


def gamma_first_order(comb: WdmComb, span: FiberSpan, z_grid, gain_matrix=None,
                      alpha=None) -> PerturbativeOrders:
    """``Gamma^(1)(z) = sum_f' g_R(f, f') P' Lambda(z, f')``, exact in z.

    ``gain_matrix`` and ``alpha`` (1/m per channel) may be passed in
    precomputed; otherwise they are evaluated from ``span``.
    """
    z = np.asarray(z_grid, dtype=float)
    alpha, G = _context(comb, span, gain_matrix, alpha)
    g1 = _first_order_kernel(np.ascontiguousarray(G), comb.power_w, np.ascontiguousarray(alpha),
                             np.ascontiguousarray(z))
    return PerturbativeOrders(z, g1[None], comb, alpha, G)


# Compiled for the same reason as the numerical stepping loop: at small
# channel counts the handful of array temporaries costs more than the math.
@numba.njit(cache=True)
def _first_order_kernel(G, power_w, alpha, z):
    n, m = alpha.size, z.size
    weighted = np.empty((n, m))
    for i in range(n):
        a = alpha[i]
        for j in range(m):
            x = a * z[j]
            if abs(x) < SMALL_AZ:
                lam = z[j] * (1.0 - x / 2.0 + x * x / 6.0)
            else:
                lam = -math.expm1(-x) / a
            weighted[i, j] = power_w[i] * lam
    return np.dot(G, weighted)


def gamma_next_order(previous: PerturbativeOrders, comb: WdmComb | None = None, span: FiberSpan | None = None,
                     tolerance_db: float | None = None) -> PerturbativeOrders:
    """Append order ``previous.max_order + 1`` by trapezoid integration.

    ``comb`` and ``span`` default to the ones ``previous`` was built from; if
    given, they replace the stored launch powers, loss and gain.

    Parameters
    ----------
    tolerance_db
        If set, the quadrature error of the new order at the span end is
        estimated by comparison with the half-resolution grid, and
        :class:`QuadratureError` is raised when it exceeds this value.
    """
    alpha, G, powers = previous.alpha, previous.gain_matrix, previous.power_w
    if comb is not None:
        powers = comb.power_w
    if span is not None:
        alpha, G = _context(comb if comb is not None else previous.comb, span, None)
    z = previous.z_grid
    k = previous.max_order + 1
    source = order_source(previous.gamma, k)
    integrand = G @ (powers[:, None] * np.exp(-alpha[:, None] * z[None, :]) * source)
    new = _cumtrapz(integrand, z)
    if tolerance_db is not None:
        _check_quadrature(integrand, z, new[:, -1], k, tolerance_db)
    gamma = np.concatenate([previous.gamma, new[None]], axis=0)
    return PerturbativeOrders(z, gamma, comb if comb is not None else previous.comb, alpha, G)


def _check_quadrature(integrand, z, fine_end, k, tolerance_db):
    if z.size < 3:
        return
    idx = np.arange(0, z.size, 2)
    if idx[-1] != z.size - 1:
        idx = np.append(idx, z.size - 1)
    coarse_end = _cumtrapz(integrand[:, idx], z[idx])[:, -1]
    # trapezoid error shrinks 4x per halving
    estimate = DB_PER_NEPER * float(np.max(np.abs(fine_end - coarse_end))) / 3.0
    if estimate > tolerance_db:
        step = float(z[1] - z[0])
        raise QuadratureError(
            f"order {k}: quadrature error estimate {estimate:.3g} dB exceeds {tolerance_db:.3g} dB "
            f"at step {step:.1f} m",
            k, estimate, tolerance_db, step,
        )


def compute_orders(comb: WdmComb, span: FiberSpan, max_order: int, quadrature_step_m: float = 1000.0,
                   gain_matrix=None, alpha=None) -> PerturbativeOrders:
    """Orders ``1 .. max_order`` on a uniform grid of ``quadrature_step_m``."""
    z = quadrature_grid(span.length_m, quadrature_step_m)
    orders = gamma_first_order(comb, span, z, gain_matrix, alpha)
    while orders.max_order < max_order:
        orders = gamma_next_order(orders)
    return orders


def gamma_second_order_analytic(comb: WdmComb, span: FiberSpan, z, gain_matrix=None) -> np.ndarray:
    """Second order with the z-integral done in closed form.

    ``Gamma^(2)(z, f) = sum_f' g(f, f') P' sum_f'' g(f', f'') P'' K(z; a', a'')``
    with ``K`` from :func:`second_order_kernel`. Returns shape (channels,)
    for scalar ``z`` or (channels, len(z)).
    """
    alpha, G = _context(comb, span, gain_matrix)
    p = comb.power_w
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty((p.size, zs.size))
    for i, zi in enumerate(zs):
        kern = second_order_kernel(alpha[:, None], alpha[None, :], zi)
        inner = (G * kern) @ p
        out[:, i] = G @ (p * inner)
    return out[:, 0] if np.ndim(z) == 0 else out


@dataclass(frozen=True, eq=False)
class TruncatedSolution:
    order: int
    z_grid: np.ndarray
    powers: np.ndarray
    comb: WdmComb

    @property
    def frequency_hz(self) -> np.ndarray:
        return self.comb.frequency_hz

    def at(self, z_m: float) -> np.ndarray:
        from .srs_numerical import _interp_columns

        return _interp_columns(self.z_grid, self.powers, z_m, log=True)


def truncated_power_profile(orders: PerturbativeOrders, k: int) -> TruncatedSolution:
    """``P_ch e^{-alpha_ch z} exp(sum_{j<=k} Gamma^(j))`` on the quadrature grid."""
    if not 1 <= k <= orders.max_order:
        raise ValueError(f"order {k} not available (max {orders.max_order})")
    z = orders.z_grid
    log_gain = orders.gamma[0] if k == 1 else orders.gamma[:k].sum(axis=0)
    log_gain = log_gain - orders.alpha[:, None] * z[None, :]
    powers = orders.power_w[:, None] * np.exp(log_gain)
    return TruncatedSolution(k, z, powers, orders.comb)


def closed_form_flat_triangular(comb: WdmComb, alpha: float, slope: float, z) -> np.ndarray:
    """Exact powers for flat loss and ``g_R(f, f') = -(f - f') * slope``.

    Returns shape (channels,) for scalar ``z`` or (channels, len(z)).
    """
    p = comb.power_w
    total = p.sum()
    # frequencies relative to the first channel; the ratio is shift-invariant
    f = comb.frequency_hz - comb.frequency_hz[0]
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    lam = np.atleast_1d(effective_length(alpha, zs))
    expo = -f[:, None] * slope * total * lam[None, :]
    expo -= expo.max(axis=0, keepdims=True)
    w = np.exp(expo)
    chi = total * w / (p[:, None] * w).sum(axis=0, keepdims=True)
    out = p[:, None] * np.exp(-alpha * zs)[None, :] * chi
    return out[:, 0] if np.ndim(z) == 0 else out
