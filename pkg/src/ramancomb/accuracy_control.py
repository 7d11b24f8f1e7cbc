"""Error of truncated solutions and automatic choice of the truncation order."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fiber_models import DB_PER_NEPER, FiberSpan
from .spectrum import WdmComb
from .srs_perturbative import (
    PerturbativeOrders,
    TruncatedSolution,
    gamma_first_order,
    gamma_next_order,
    quadrature_grid,
    truncated_power_profile,
)


class ConvergenceError(RuntimeError):
    """No order up to ``k_max`` met the tolerance."""

    def __init__(self, message, selection):
        super().__init__(message)
        self.selection = selection


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """Per-channel ``10 log10(P_ref / P_k)`` in dB at one position."""

    per_channel_db: np.ndarray
    order: int
    z_m: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.per_channel_db)))


def _powers_at(solution, z_m):
    return solution.at(z_m)


def relative_error(reference, candidate, z_m: float | None = None) -> ErrorReport:
    """Compare two solutions of the same comb at ``z_m`` (default: span end).

    Either argument may be a numerical or a truncated solution; powers off
    the stored grid are interpolated linearly in dB.
    """
    f_ref, f_cand = reference.comb.frequency_hz, candidate.comb.frequency_hz
    if f_ref.shape != f_cand.shape or np.any(f_ref != f_cand):
        raise ValueError("reference and candidate describe different combs")
    if z_m is None:
        z_m = float(min(reference.z_grid[-1], candidate.z_grid[-1]))
    p_ref = _powers_at(reference, z_m)
    p_cand = _powers_at(candidate, z_m)
    err = 10.0 * (np.log10(p_ref) - np.log10(p_cand))
    if not np.all(np.isfinite(err)):
        raise ValueError("non-finite relative error")
    return ErrorReport(err, int(getattr(candidate, "order", 0)), float(z_m))


def order_theta(orders: PerturbativeOrders, k: int) -> float:
    """``(k! max |Gamma^(k)|)^(1/k)``, the max taken over channels and grid points."""
    g = orders.order(k)
    peak = max(float(g.max()), -float(g.min()))
    return (math.factorial(k) * peak) ** (1.0 / k)


def bound_from_theta(theta: float, k: int) -> float:
    """``(10 / ln 10) [exp(theta) - sum_{j<=k} theta^j / j!]`` in dB."""
    if theta == 0.0:
        return 0.0
    # the exponential's tail beyond degree k, summed directly (no cancellation)
    term = theta ** (k + 1) / math.factorial(k + 1)
    tail, j = 0.0, k + 1
    while term > 1e-17 * max(tail, 1e-300):
        tail += term
        j += 1
        term *= theta / j
        if j > k + 400:
            break
    return DB_PER_NEPER * tail


def order_bound(orders: PerturbativeOrders, k: int) -> float:
    """Heuristic bound (dB) on the order-``k`` truncation error."""
    return bound_from_theta(order_theta(orders, k), k)


@dataclass
class OrderSelection:
    tolerance_db: float
    selected_order: int | None = None
    theta: list[float] = field(default_factory=list)
    bounds_db: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "tolerance_db": self.tolerance_db,
            "selected_order": self.selected_order,
            "theta": list(self.theta),
            "bounds_db": list(self.bounds_db),
        }


def select_order(comb: WdmComb, span: FiberSpan, tolerance_db: float, k_max: int = 8,
                 quadrature_step_m: float = 1000.0, gain_matrix=None,
                 quadrature_tolerance_db: float | None = None, alpha=None):
    """Add orders until the heuristic bound drops to ``tolerance_db``.

    ``quadrature_tolerance_db`` enables the per-order quadrature error check
    of :func:`gamma_next_order`. ``gain_matrix`` and ``alpha`` may be passed
    in precomputed.

    Returns
    -------
    (OrderSelection, TruncatedSolution, PerturbativeOrders)

    Raises
    ------
    ConvergenceError
        When ``k_max`` is reached first; carries the theta trace.
    QuadratureError
        When the quadrature check is enabled and fails.
    """
    if not tolerance_db > 0:
        raise ValueError("tolerance must be positive")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    sel = OrderSelection(tolerance_db)
    z = quadrature_grid(span.length_m, quadrature_step_m)
    orders = gamma_first_order(comb, span, z, gain_matrix, alpha)
    k = 1
    while True:
        theta = order_theta(orders, k)
        bound = bound_from_theta(theta, k)
        sel.theta.append(theta)
        sel.bounds_db.append(bound)
        if bound <= tolerance_db:
            sel.selected_order = k
            return sel, truncated_power_profile(orders, k), orders
        if k >= k_max:
            trace = ", ".join(f"k={i + 1}: theta={t:.4g}" for i, t in enumerate(sel.theta))
            raise ConvergenceError(
                f"no order up to k_max={k_max} meets {tolerance_db} dB ({trace})", sel
            )
        orders = gamma_next_order(orders, tolerance_db=quadrature_tolerance_db)
        k += 1


def measured_order(reference, orders: PerturbativeOrders, tolerance_db: float) -> int | None:
    """Smallest order whose span-end error against ``reference`` is within tolerance."""
    for k in range(1, orders.max_order + 1):
        if relative_error(reference, truncated_power_profile(orders, k)).max_abs <= tolerance_db:
            return k
    return None


__all__ = [
    "ConvergenceError",
    "ErrorReport",
    "OrderSelection",
    "TruncatedSolution",
    "bound_from_theta",
    "measured_order",
    "order_bound",
    "order_theta",
    "relative_error",
    "select_order",
]
