"""Accuracy-matched wall-time comparison over growing transmission bandwidth."""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..accuracy_control import relative_error, select_order
from ..fiber_models import FiberSpan
from ..spectrum import WdmComb
from ..srs_numerical import NumericalSettings, final_profile, integrate
from . import io as rio
from .plots import emit_plot
from .scenario import comb_from_config, span_from_config, timed

# each timing sample repeats the solve for at least this long
MIN_SAMPLE_S = 0.05

BENCH_HEADER = [
    "bandwidth_THz", "channels", "solver", "max_error_dB", "wall_time_s",
    "step_m", "order", "status", "message",
]


@dataclass
class BenchResult:
    bandwidth_thz: float
    channels: int
    solver: str
    max_error_db: float | None
    wall_time_s: float | None
    step_m: float | None = None
    order: int | None = None
    status: str = "ok"
    message: str = ""
    settings: dict = field(default_factory=dict)

    def row(self):
        return [self.bandwidth_thz, self.channels, self.solver, self.max_error_db, self.wall_time_s,
                self.step_m, self.order, self.status, self.message]


def sweep_points(from_thz: float, to_thz: float, step_thz: float) -> list[float]:
    """``from, from + step, ...`` not exceeding ``to`` (one point if the step overshoots)."""
    if not (from_thz > 0 and step_thz > 0):
        raise ValueError("sweep start and step must be positive")
    if to_thz < from_thz:
        raise ValueError("sweep end below start")
    n = int(math.floor((to_thz - from_thz) / step_thz + 1e-9))
    return [round(from_thz + i * step_thz, 9) for i in range(n + 1)]


def leading_subcomb(comb: WdmComb, bandwidth_thz: float) -> WdmComb:
    """Channels within ``bandwidth_thz`` of the lowest channel of ``comb``."""
    f = comb.frequency_hz
    return comb.subset(f - f[0] < bandwidth_thz * 1e12 - 1.0)


def _max_change_db(a, b) -> float:
    return float(np.max(np.abs(10.0 * np.log10(a / b))))


def tune_numerical_step(comb, span, G, tolerance_db, initial_dz_m, scheme="rk4-log", min_dz_m=1e-3,
                        alpha=None):
    """Halve ``dz`` until the span-end profile moves by less than the tolerance.

    Returns the last (finer) step of the final pair.
    """
    dz = min(initial_dz_m, span.length_m)
    prev = final_profile(integrate(comb, span, NumericalSettings(dz, scheme), G, alpha))
    while True:
        dz /= 2.0
        if dz < min_dz_m:
            raise ArithmeticError("numerical step did not settle")
        cur = final_profile(integrate(comb, span, NumericalSettings(dz, scheme), G, alpha))
        if _max_change_db(cur, prev) < tolerance_db:
            return dz
        prev = cur


def tune_quadrature_step(comb, span, G, tolerance_db, initial_step_m, k_max, min_step_m=1.0, alpha=None):
    """Same halving rule for the perturbative quadrature step, order chosen by ``select_order``."""
    h = min(initial_step_m, span.length_m)
    prev = select_order(comb, span, tolerance_db, k_max, h, G, alpha=alpha)[1].powers[:, -1]
    while True:
        h /= 2.0
        if h < min_step_m:
            raise ArithmeticError("quadrature step did not settle")
        cur = select_order(comb, span, tolerance_db, k_max, h, G, alpha=alpha)[1].powers[:, -1]
        if _max_change_db(cur, prev) < tolerance_db:
            return h
        prev = cur


def bench_point(comb: WdmComb, span: FiberSpan, bandwidth_thz: float, solver_cfg: dict) -> list[BenchResult]:
    """Tune, time and score both solvers on one comb; failures become rows."""
    tol = solver_cfg["tolerance_dB"]
    repeats = solver_cfg["timing_repeats"]
    n = len(comb)
    # loss and gain evaluation is shared setup, excluded from both timings
    G = span.gain_matrix(comb.frequency_hz)
    alpha = span.alpha(comb.frequency_hz)
    results = []
    try:
        reference = integrate(comb, span, NumericalSettings(solver_cfg["reference_dz_m"], solver_cfg["scheme"],
                                                           record_step_m=span.length_m), G, alpha)
    except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
        return [BenchResult(bandwidth_thz, n, s, None, None, status="failed", message=f"reference: {exc}")
                for s in ("numerical", "perturbative")]

    # tune both solvers first; a failure in one still lets the other be timed
    solves, failures, meta = {}, {}, {}
    try:
        dz = tune_numerical_step(comb, span, G, tol, solver_cfg["sweep_initial_dz_m"], solver_cfg["scheme"],
                                 alpha=alpha)
        settings = NumericalSettings(dz, solver_cfg["scheme"], record_step_m=span.length_m)
        solves["numerical"] = lambda: integrate(comb, span, settings, G, alpha)
        meta["numerical"] = (dz, {"scheme": settings.scheme, "dz_m": dz})
    except Exception as exc:  # noqa: BLE001
        failures["numerical"] = str(exc)
    try:
        h = tune_quadrature_step(comb, span, G, tol, solver_cfg["sweep_initial_quadrature_step_m"],
                                 solver_cfg["k_max"], alpha=alpha)
        solves["perturbative"] = lambda: select_order(comb, span, tol, solver_cfg["k_max"], h, G, alpha=alpha)
        meta["perturbative"] = (h, {"quadrature_step_m": h})
    except Exception as exc:  # noqa: BLE001
        failures["perturbative"] = str(exc)

    # timing samples alternate between the solvers so both see the same machine load
    samples = {name: [] for name in solves}
    outputs = {}
    for _ in range(repeats):
        for name, fn in solves.items():
            wall, outputs[name] = timed(fn, 1, MIN_SAMPLE_S)
            samples[name].append(wall)

    for name in ("numerical", "perturbative"):
        if name in failures:
            results.append(BenchResult(bandwidth_thz, n, name, None, None, status="failed", message=failures[name]))
            continue
        wall = statistics.median(samples[name])
        step, settings_doc = meta[name]
        if name == "numerical":
            err = relative_error(reference, outputs[name]).max_abs
            results.append(BenchResult(bandwidth_thz, n, name, err, wall, step, settings=settings_doc))
        else:
            sel, trunc, _ = outputs[name]
            err = relative_error(reference, trunc).max_abs
            results.append(BenchResult(bandwidth_thz, n, name, err, wall, step, sel.selected_order,
                                       settings={**settings_doc, "selection": sel.as_dict()}))
    return results


def run_bandwidth_sweep(cfg: dict, from_thz: float, to_thz: float, step_thz: float, workers: int = 1,
                        write: bool = True) -> list[BenchResult]:
    """Wall-time of both solvers for bandwidths ``from..to`` at matched tolerance.

    Each comb starts at the lowest configured channel and grows upward. Both
    solvers are tuned to ``solver.tolerance_dB`` by step halving, then timed
    as the median of ``solver.timing_repeats`` runs (gain-matrix and loss
    setup excluded). Writes ``bench.csv``, ``bench.json`` and, if plots are on,
    ``time_vs_bandwidth.svg`` to ``output.directory``.
    """
    points = sweep_points(from_thz, to_thz, step_thz)
    full = comb_from_config(cfg)
    span = span_from_config(cfg)
    total_thz = (full.frequency_hz[-1] - full.frequency_hz[0] + full.slot_width_hz) / 1e12
    if points[-1] > total_thz + 1e-9:
        raise ValueError(f"sweep end {points[-1]} THz exceeds the configured comb ({total_thz:.3f} THz)")

    def one(b):
        return bench_point(leading_subcomb(full, b), span, b, cfg["solver"])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(one, points))
    else:
        per_point = [one(b) for b in points]
    results = [r for rows in per_point for r in rows]

    if write:
        out_dir = Path(cfg["output"]["directory"])
        rio.atomic_write_text(out_dir / "bench.csv", rio.table_csv(BENCH_HEADER, [r.row() for r in results]))
        doc = {"report_kind": "sweep", "config": cfg, "from_THz": from_thz, "to_THz": to_thz,
               "step_THz": step_thz, "workers": workers, "results": [asdict(r) for r in results]}
        rio.atomic_write_text(out_dir / "bench.json", rio.json_text(doc))
        if cfg["output"]["plots"]:
            series = []
            for solver in ("numerical", "perturbative"):
                ok = [r for r in results if r.solver == solver and r.status == "ok"]
                series.append({"label": solver, "x": [r.bandwidth_thz for r in ok],
                               "y": [r.wall_time_s for r in ok]})
            if any(s["x"] for s in series):
                emit_plot({"series": series}, "time_vs_bandwidth", out_dir / "time_vs_bandwidth.svg")
    return results
