"""WDM channel combs on a fixed grid over the U/L/C/S/E band plan."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class CombError(ValueError):
    pass


@dataclass(frozen=True)
class Band:
    name: str
    lowest_hz: float
    highest_hz: float

    def __post_init__(self):
        if self.highest_hz < self.lowest_hz:
            raise CombError(f"band {self.name}: highest below lowest frequency")


# lowest and highest channel central frequencies on the 75 GHz grid
BAND_PLAN = {
    "U": Band("U", 180.710e12, 185.510e12),
    "L": Band("L", 186.010e12, 190.810e12),
    "C": Band("C", 191.310e12, 196.110e12),
    "S": Band("S", 196.610e12, 206.210e12),
    "E": Band("E", 206.810e12, 221.210e12),
}
SLOT_WIDTH_HZ = 75e9
SYMBOL_RATE_HZ = 64e9


def bands(names) -> list[Band]:
    """Look up bands by name, e.g. ``bands("CLS")`` or ``bands(["U", "E"])``."""
    try:
        return [BAND_PLAN[n] for n in names]
    except KeyError as exc:
        raise CombError(f"unknown band {exc.args[0]!r}") from None


def dbm_to_w(p_dbm):
    return 1e-3 * np.power(10.0, np.asarray(p_dbm, dtype=float) / 10.0)


def w_to_dbm(p_w):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(p_w, dtype=float) / 1e-3)


@dataclass(frozen=True, eq=False)
class Channel:
    index: int
    frequency_hz: float
    bandwidth_hz: float
    power_w: float
    band: str


@dataclass(frozen=True, eq=False)
class WdmComb:
    """Channels in ascending frequency.

    Launch powers are held in dBm, the unit in which they are specified and
    exchanged, so a profile written and read back reproduces them exactly.
    """

    frequency_hz: np.ndarray
    power_dbm: np.ndarray
    bandwidth_hz: np.ndarray
    band: tuple[str, ...]
    slot_width_hz: float = SLOT_WIDTH_HZ

    def __post_init__(self):
        f = np.array(self.frequency_hz, dtype=float)
        p = np.array(self.power_dbm, dtype=float)
        b = np.array(self.bandwidth_hz, dtype=float)
        if not (f.ndim == 1 and f.shape == p.shape == b.shape == (len(self.band),)):
            raise CombError("channel arrays must be 1-D and of equal length")
        if f.size > 1 and np.any(np.diff(f) < self.slot_width_hz * (1 - 1e-9)):
            raise CombError("channel frequencies must ascend by at least one slot width")
        if np.any(b <= 0):
            raise CombError("channel bandwidths must be positive")
        if np.any(np.isnan(p)) or np.any(p == np.inf):
            raise CombError("launch powers must be finite (or -inf dBm for dark channels)")
        for arr in (f, p, b):
            arr.flags.writeable = False
        object.__setattr__(self, "frequency_hz", f)
        object.__setattr__(self, "power_dbm", p)
        object.__setattr__(self, "bandwidth_hz", b)
        object.__setattr__(self, "band", tuple(self.band))

    def __len__(self):
        return self.frequency_hz.size

    @cached_property
    def power_w(self) -> np.ndarray:
        """Launch powers in W (read-only, computed once)."""
        out = dbm_to_w(self.power_dbm)
        out.flags.writeable = False
        return out

    @property
    def total_power_w(self) -> float:
        return float(np.sum(self.power_w))

    @property
    def total_power_dbm(self) -> float:
        return float(w_to_dbm(self.total_power_w))

    @property
    def channels(self) -> list[Channel]:
        pw = self.power_w
        return [
            Channel(i, float(self.frequency_hz[i]), float(self.bandwidth_hz[i]), float(pw[i]), self.band[i])
            for i in range(len(self))
        ]

    def with_power_dbm(self, power_dbm) -> WdmComb:
        p = np.broadcast_to(np.asarray(power_dbm, dtype=float), self.frequency_hz.shape)
        return WdmComb(self.frequency_hz, p, self.bandwidth_hz, self.band, self.slot_width_hz)

    def with_power_w(self, power_w) -> WdmComb:
        return self.with_power_dbm(w_to_dbm(power_w))

    def scaled(self, factor: float) -> WdmComb:
        return self.with_power_w(self.power_w * factor)

    def subset(self, mask) -> WdmComb:
        idx = np.flatnonzero(np.asarray(mask))
        return WdmComb(
            self.frequency_hz[idx], self.power_dbm[idx], self.bandwidth_hz[idx],
            tuple(self.band[i] for i in idx), self.slot_width_hz,
        )


def build_comb(band_list, slot_width_hz=SLOT_WIDTH_HZ, power_dbm=-math.inf,
               symbol_rate_hz=SYMBOL_RATE_HZ) -> WdmComb:
    """Fill each band with channels at ``lowest + k * slot`` up to ``highest``.

    Band order in ``band_list`` does not matter. The default launch leaves all
    channels dark; see :func:`flat_launch`.
    """
    if slot_width_hz <= 0:
        raise CombError("slot width must be positive")
    ordered = sorted(band_list, key=lambda b: b.lowest_hz)
    for a, b in zip(ordered, ordered[1:]):
        if b.lowest_hz <= a.highest_hz:
            raise CombError(f"bands {a.name} and {b.name} overlap")
    freqs, labels = [], []
    for b in ordered:
        steps = (b.highest_hz - b.lowest_hz) / slot_width_hz
        n = round(steps)
        if abs(steps - n) > 1e-6:
            raise CombError(f"band {b.name} bounds are not on the {slot_width_hz / 1e9:g} GHz grid")
        freqs.append(b.lowest_hz + slot_width_hz * np.arange(n + 1))
        labels.extend([b.name] * (n + 1))
    f = np.concatenate(freqs) if freqs else np.zeros(0)
    return WdmComb(
        f, np.full(f.shape, float(power_dbm)), np.full(f.shape, float(symbol_rate_hz)), tuple(labels),
        slot_width_hz,
    )


def flat_launch(comb: WdmComb, p_dbm: float) -> WdmComb:
    """Same launch power (dBm) on every channel."""
    return comb.with_power_dbm(float(p_dbm))


def write_launch_profile(comb: WdmComb, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency_THz", "power_dBm"])
        for f, p in zip(comb.frequency_hz, comb.power_dbm):
            w.writerow([repr(float(f) / 1e12), repr(float(p))])


def load_launch_profile(comb: WdmComb, path) -> WdmComb:
    """Assign per-channel powers from a ``frequency_THz,power_dBm`` CSV.

    Each comb channel must match exactly one row within half a slot.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"frequency_THz", "power_dBm"} - set(reader.fieldnames):
            raise CombError(f"{path}: header must be frequency_THz,power_dBm")
        rows = [(float(r["frequency_THz"]) * 1e12, float(r["power_dBm"])) for r in reader]
    if not rows:
        raise CombError(f"{path}: no rows")
    f_file = np.array([r[0] for r in rows])
    p_file = np.array([r[1] for r in rows])
    order = np.argsort(f_file, kind="stable")
    dup = f_file[order][1:][np.diff(f_file[order]) == 0]
    if dup.size:
        raise CombError(f"{path}: duplicate frequencies (THz): {sorted(set(dup / 1e12))}")
    half = comb.slot_width_hz / 2
    dist = np.abs(comb.frequency_hz[:, None] - f_file[None, :])
    nearest = np.argmin(dist, axis=1)
    unmatched = comb.frequency_hz[dist[np.arange(len(comb)), nearest] >= half]
    if unmatched.size:
        raise CombError(f"{path}: no power for channels at (THz): {[float(x) for x in unmatched / 1e12]}")
    return comb.with_power_dbm(p_file[nearest])
