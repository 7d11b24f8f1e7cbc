"""SVG figures: power and error against frequency, wall-time against bandwidth."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write_text  # noqa: E402

PLOT_KINDS = ("power_vs_freq", "error_vs_freq", "time_vs_bandwidth")

_AXES = {
    "power_vs_freq": ("Frequency [THz]", "Power [dBm]", "linear"),
    "error_vs_freq": ("Frequency [THz]", "Relative error [dB]", "linear"),
    "time_vs_bandwidth": ("Total bandwidth [THz]", "Wall-time [s]", "log"),
}


def emit_plot(data: dict, kind: str, path) -> Path:
    """Draw ``data`` as a self-contained SVG.

    Parameters
    ----------
    data
        ``{"series": [{"label": str, "x": [...], "y": [...]}, ...]}``, plus an
        optional ``"title"``. ``x`` is in THz; ``y`` in dBm, dB or s
        according to ``kind``.
    kind
        One of ``power_vs_freq``, ``error_vs_freq``, ``time_vs_bandwidth``.

    Raises
    ------
    ValueError
        Unknown kind or no data points.
    OSError
        If ``path`` cannot be written.
    """
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    series = [s for s in data.get("series", []) if len(s.get("x", [])) > 0]
    if not series:
        raise ValueError("nothing to plot")
    xlabel, ylabel, yscale = _AXES[kind]

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    try:
        for s in series:
            x = np.asarray(s["x"], dtype=float)
            y = np.asarray(s["y"], dtype=float)
            if yscale == "log":
                keep = np.isfinite(y) & (y > 0)
                x, y = x[keep], y[keep]
            style = "o-" if kind == "time_vs_bandwidth" or x.size == 1 else "-"
            ax.plot(x, y, style, label=s.get("label"), markersize=4, linewidth=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_yscale(yscale)
        if kind == "error_vs_freq":
            ax.axhline(0.0, color="0.6", linewidth=0.6)
        if data.get("title"):
            ax.set_title(data["title"])
        if any(s.get("label") for s in series):
            ax.legend(fontsize="small")
        ax.grid(True, which="both", linewidth=0.3)
        fig.tight_layout()
        buf = _svg_text(fig)
    finally:
        plt.close(fig)
    return atomic_write_text(path, buf)


def _svg_text(fig) -> str:
    out = io.StringIO()
    # fixed ids and no timestamp keep repeated runs byte-identical
    with matplotlib.rc_context({"svg.hashsalt": "ramancomb", "svg.fonttype": "none"}):
        fig.savefig(out, format="svg", metadata={"Date": None})
    return out.getvalue()
