"""Reference solver: direct integration of the coupled SRS power equations.

Each channel obeys ``dP_i/dz = (-alpha_i + sum_j G_ij P_j) P_i``. The state
advanced is ``y = ln P``, so the linear loss is exact and powers stay positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .fiber_models import FiberSpan
from .spectrum import WdmComb

SCHEMES = ("rk4-log", "euler-log")


class IntegrationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class NumericalSettings:
    """Step size and scheme.

    ``record_step_m`` thins the stored grid (the span end is always kept);
    ``None`` stores every step.
    """

    dz_m: float = 0.8
    scheme: str = "rk4-log"
    record_step_m: float | None = None

    def __post_init__(self):
        if not self.dz_m > 0:
            raise ValueError("dz must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.record_step_m is not None and not self.record_step_m > 0:
            raise ValueError("record_step_m must be positive")


@dataclass(frozen=True, eq=False)
class PowerEvolution:
    """Channel powers ``powers[ch, iz]`` (W) on ``z_grid`` (m)."""

    z_grid: np.ndarray
    powers: np.ndarray
    comb: WdmComb

    @property
    def frequency_hz(self) -> np.ndarray:
        return self.comb.frequency_hz

    def at(self, z_m: float) -> np.ndarray:
        """Powers at ``z_m``, interpolated linearly in dB between grid points."""
        return _interp_columns(self.z_grid, self.powers, z_m, log=True)


def _interp_columns(z_grid, values, z, log=False):
    if not (z_grid[0] - 1e-9 <= z <= z_grid[-1] + 1e-9):
        raise ValueError(f"z = {z} m outside the solution grid")
    i = int(np.searchsorted(z_grid, z))
    if i < z_grid.size and abs(z_grid[i] - z) <= 1e-9:
        return values[:, i].copy()
    if i > 0 and abs(z_grid[i - 1] - z) <= 1e-9:
        return values[:, i - 1].copy()
    i = min(max(i, 1), z_grid.size - 1)
    w = (z - z_grid[i - 1]) / (z_grid[i] - z_grid[i - 1])
    a, b = values[:, i - 1], values[:, i]
    if log:
        return np.exp((1 - w) * np.log(a) + w * np.log(b))
    return (1 - w) * a + w * b


def step_sizes(length_m: float, dz_m: float) -> np.ndarray:
    """Uniform steps of ``dz_m`` with the last one shortened to land on the end."""
    if length_m == 0:
        return np.zeros(0)
    n_full = int(math.floor(length_m / dz_m * (1 + 1e-12)))
    steps = np.full(n_full, dz_m)
    rest = length_m - n_full * dz_m
    if rest > 1e-9 * dz_m:
        steps = np.append(steps, rest)
    return steps


def integrate(comb: WdmComb, span: FiberSpan, settings: NumericalSettings = NumericalSettings(),
              gain_matrix: np.ndarray | None = None, alpha: np.ndarray | None = None) -> PowerEvolution:
    """Propagate the comb through the span.

    Parameters
    ----------
    gain_matrix
        Precomputed ``span.gain_matrix(comb.frequency_hz)``; built here if
        omitted.
    alpha
        Precomputed ``span.alpha(comb.frequency_hz)`` in 1/m; evaluated here
        if omitted.

    Raises
    ------
    IntegrationError
        If a power becomes non-finite; the message names channel and z.
    """
    if len(comb) == 0:
        raise ValueError("empty comb")
    alpha = span.alpha(comb.frequency_hz) if alpha is None else np.asarray(alpha, dtype=float)
    G = span.gain_matrix(comb.frequency_hz) if gain_matrix is None else np.asarray(gain_matrix, dtype=float)
    p0 = comb.power_w
    if np.any(p0 <= 0):
        raise ValueError("all launch powers must be positive")

    steps = step_sizes(span.length_m, settings.dz_m)
    z_nodes = settings.dz_m * np.arange(steps.size + 1)
    if steps.size:
        z_nodes[-1] = span.length_m
    record = _record_mask(z_nodes, settings.record_step_m)
    out = np.empty((comb.frequency_hz.size, int(record.sum())))
    out_z = z_nodes[record]

    y = np.log(p0)
    out[:, 0] = p0
    kernel = _rk4_log_run if settings.scheme == "rk4-log" else _euler_log_run
    bad_step = kernel(y, np.ascontiguousarray(G, dtype=np.float64), np.ascontiguousarray(alpha, dtype=np.float64),
                      steps, record[1:].copy(), out)
    if bad_step >= 0:
        col = int(np.searchsorted(np.flatnonzero(record), bad_step + 1))
        p = out[:, col]
        bad = int(np.flatnonzero(~np.isfinite(p) | (p <= 0))[0])
        raise IntegrationError(
            f"non-finite power on channel {bad} "
            f"({comb.frequency_hz[bad] / 1e12:.3f} THz) at z = {z_nodes[bad_step + 1]:.1f} m"
        )
    return PowerEvolution(out_z, out, comb)


# The stepping loops are compiled: at desk-scale channel counts the cost of a
# step is dominated by interpreter overhead, not by the O(N^2) products,
# which still go through BLAS via np.dot. Both return the index of the first
# recorded step with a non-finite or non-positive power, or -1.


@numba.njit(cache=True, error_model="numpy")
def _rk4_log_run(y, G, alpha, steps, record, out):
    n = y.size
    col = 1
    for s in range(steps.size):
        h = steps[s]
        hh = 0.5 * h
        k1 = np.dot(G, np.exp(y))
        base = y - alpha * hh
        k2 = np.dot(G, np.exp(base + hh * k1))
        k3 = np.dot(G, np.exp(base + hh * k2))
        k4 = np.dot(G, np.exp(y - alpha * h + h * k3))
        w = h / 6.0
        for i in range(n):
            y[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) - alpha[i] * h
        if record[s]:
            ok = True
            for i in range(n):
                p = np.exp(y[i])
                out[i, col] = p
                if not (np.isfinite(p) and p > 0.0):
                    ok = False
            if not ok:
                return s
            col += 1
    return -1


@numba.njit(cache=True, error_model="numpy")
def _euler_log_run(y, G, alpha, steps, record, out):
    n = y.size
    col = 1
    for s in range(steps.size):
        h = steps[s]
        k1 = np.dot(G, np.exp(y))
        for i in range(n):
            y[i] += h * (k1[i] - alpha[i])
        if record[s]:
            ok = True
            for i in range(n):
                p = np.exp(y[i])
                out[i, col] = p
                if not (np.isfinite(p) and p > 0.0):
                    ok = False
            if not ok:
                return s
            col += 1
    return -1


def _record_mask(z_nodes, record_step_m):
    mask = np.ones(z_nodes.size, dtype=bool)
    if record_step_m is not None and z_nodes.size > 2:
        # keep the first node at or beyond each multiple of record_step_m
        bucket = np.floor(z_nodes / record_step_m + 1e-9)
        mask[1:] = bucket[1:] != bucket[:-1]
        mask[0] = True
    mask[-1] = True
    return mask


def final_profile(evolution: PowerEvolution) -> np.ndarray:
    """Channel powers (W) at the span end."""
    return evolution.powers[:, -1].copy()
