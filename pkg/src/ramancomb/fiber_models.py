"""Frequency-dependent fiber parameters: loss, effective area and Raman gain.

Internal units are SI (Hz, m, W, 1/m). dB/km and micrometres only appear in
the parametric loss model, which is written the way it is usually fitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import c

DB_PER_NEPER = 10.0 / math.log(10.0)
LOSS_WAVELENGTH_RANGE_UM = (1.2, 1.7)


class DomainError(ValueError):
    """An evaluation point lies outside the model's validity range."""


class RamanTableError(ValueError):
    """A Raman gain table file could not be parsed."""


def db_per_km_to_per_m(value):
    """Convert a power loss coefficient from dB/km to 1/m."""
    return np.asarray(value, dtype=float) / DB_PER_NEPER / 1e3


# ---------------------------------------------------------------- loss model


@dataclass(frozen=True)
class LossModelParams:
    """Parametric loss model in dB/km, wavelength in micrometres.

    ``gaussian_peaks`` holds ``(amplitude_db_per_km, center_um, sigma_um)``
    triples for the OH and P-OH absorption bands.
    """

    A: float
    B: float
    K_UV: float
    C_UV: float
    K_IR: float
    C_IR: float
    gaussian_peaks: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        for name in ("A", "B", "K_UV", "K_IR"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        peaks = tuple(tuple(float(v) for v in p) for p in self.gaussian_peaks)
        for amp, center, sigma in peaks:
            if sigma <= 0:
                raise ValueError(f"peak at {center} um has non-positive width {sigma}")
        object.__setattr__(self, "gaussian_peaks", peaks)


# Peak centres/widths and the amplitude of each band relative to the OH
# scale A1. Only the 1.38 um family is kept; the 1.24 um and P-OH bands are
# dropped for S/C/L-centred fits.
WALKER_C_UV_UM = 4.63
WALKER_C_IR_UM = 48.48
WALKER_OH_BANDS = (
    # (relative amplitude, center um, sigma um)
    (1.0e4, 1.383, 0.015),
    (2.0e3, 1.350, 0.020),
    (3.0e3, 1.410, 0.025),
    (1.0e3, 1.317, 0.020),
)


def walker_ssmf_params(
    A=0.9192,
    B=0.0147,
    K_IR=5.0e11,
    A1=0.0043e-3,
    K_UV=1.4655e-16,
    C_UV=WALKER_C_UV_UM,
    C_IR=WALKER_C_IR_UM,
    oh_bands=WALKER_OH_BANDS,
) -> LossModelParams:
    """SSMF loss parameters; OH peak amplitudes scale with ``A1``."""
    peaks = tuple((A1 * rel, center, sigma) for rel, center, sigma in oh_bands)
    return LossModelParams(A=A, B=B, K_UV=K_UV, C_UV=C_UV, K_IR=K_IR, C_IR=C_IR, gaussian_peaks=peaks)


def loss_coefficient(params: LossModelParams, wavelength_um):
    """Loss coefficient in dB/km at ``wavelength_um``.

    Sum of Rayleigh (``A/lambda^4 + B``), UV and IR absorption tails and the
    Gaussian absorption peaks.

    Raises
    ------
    DomainError
        If any wavelength lies outside 1.2-1.7 um.
    """
    lam = np.asarray(wavelength_um, dtype=float)
    lo, hi = LOSS_WAVELENGTH_RANGE_UM
    if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
        raise DomainError(f"wavelength outside supported range [{lo}, {hi}] um")
    alpha = params.A / lam**4 + params.B
    alpha = alpha + params.K_UV * np.exp(params.C_UV / lam)
    alpha = alpha + params.K_IR * np.exp(-params.C_IR / lam)
    for amp, center, sigma in params.gaussian_peaks:
        alpha = alpha + amp * np.exp(-((lam - center) ** 2) / (2.0 * sigma**2))
    return alpha if alpha.ndim else float(alpha)


@dataclass(frozen=True)
class LossProfile:
    """Loss coefficient evaluated over frequency, either parametric or flat.

    Use :meth:`flat` or :meth:`parametric` to build one.
    """

    mode: str
    flat_db_per_km: float | None = None
    params: LossModelParams | None = None

    @classmethod
    def flat(cls, db_per_km: float) -> LossProfile:
        if db_per_km < 0:
            raise ValueError("flat loss must be non-negative")
        return cls(mode="flat", flat_db_per_km=float(db_per_km))

    @classmethod
    def parametric(cls, params: LossModelParams) -> LossProfile:
        return cls(mode="parametric", params=params)

    def db_per_km(self, frequency_hz):
        f = np.asarray(frequency_hz, dtype=float)
        if self.mode == "flat":
            return np.full(f.shape, self.flat_db_per_km)
        return np.asarray(loss_coefficient(self.params, c / f * 1e6))

    def alpha(self, frequency_hz) -> np.ndarray:
        """Power loss coefficient in 1/m."""
        return db_per_km_to_per_m(self.db_per_km(frequency_hz))


# ------------------------------------------------------------ effective area


@dataclass(frozen=True)
class FiberGeometry:
    core_radius_um: float
    core_index: float
    cladding_index: float
    relative_index_step: float
    nonlinear_index: float = 2.6e-20

    def __post_init__(self):
        n1, nc = self.core_index, self.cladding_index
        if not n1 > nc > 1.0:
            raise ValueError("indices must satisfy core_index > cladding_index > 1")
        if abs(self.relative_index_step - (n1 - nc) / n1) > 1e-12:
            raise ValueError("relative_index_step inconsistent with core/cladding indices")
        if self.core_radius_um <= 0:
            raise ValueError("core radius must be positive")

    @classmethod
    def from_cladding(cls, core_radius_um=4.2, cladding_index=1.45, relative_index_step=0.0031,
                      nonlinear_index=2.6e-20) -> FiberGeometry:
        """Standard SSMF geometry parametrised by cladding index and index step."""
        n1 = cladding_index / (1.0 - relative_index_step)
        return cls(core_radius_um, n1, cladding_index, (n1 - cladding_index) / n1, nonlinear_index)

    def normalized_frequency(self, frequency_hz):
        lam_um = c / np.asarray(frequency_hz, dtype=float) * 1e6
        return (2.0 * np.pi / lam_um) * self.core_radius_um * self.core_index * np.sqrt(
            2.0 * self.relative_index_step
        )


def effective_area(geom: FiberGeometry, frequency_hz):
    """Gaussian-mode effective area in um^2, ``pi * a^2 / ln V``.

    Raises
    ------
    DomainError
        If ``V <= 1`` at any requested frequency.
    """
    v = geom.normalized_frequency(frequency_hz)
    if np.any(v <= 1.0):
        raise DomainError("normalized frequency V <= 1: mode radius undefined")
    area = np.pi * geom.core_radius_um**2 / np.log(v)
    return area if np.ndim(area) else float(area)


def overlap_area(geom: FiberGeometry, f_pump_hz, f_stokes_hz):
    """Pump/Stokes overlap area (um^2): arithmetic mean of the two areas."""
    return 0.5 * (np.asarray(effective_area(geom, f_pump_hz)) + np.asarray(effective_area(geom, f_stokes_hz)))


# --------------------------------------------------------------- Raman gain


@dataclass(frozen=True, eq=False)
class RamanGainTable:
    """Signed Raman gain curve ``g0`` (1/W/m) versus shift ``f' - f`` (Hz).

    Positive shifts mean the interfering channel is the pump. Lookups are
    linear between samples and zero outside the sampled range.
    """

    shift_hz: np.ndarray
    g0: np.ndarray
    reference_frequency_hz: float = 206.185e12
    polarization_factor: float = 1.0

    def __post_init__(self):
        shift = np.asarray(self.shift_hz, dtype=float)
        g0 = np.asarray(self.g0, dtype=float)
        if shift.shape != g0.shape or shift.ndim != 1:
            raise ValueError("shift and g0 must be 1-D arrays of equal length")
        if shift.size and np.any(np.diff(shift) <= 0):
            raise ValueError("shift grid must be strictly ascending")
        shift.flags.writeable = False
        g0.flags.writeable = False
        object.__setattr__(self, "shift_hz", shift)
        object.__setattr__(self, "g0", g0)

    def __call__(self, shift_hz):
        s = np.asarray(shift_hz, dtype=float)
        if self.shift_hz.size < 2:
            return np.zeros(s.shape)
        return np.interp(s, self.shift_hz, self.g0, left=0.0, right=0.0)

    def mirrored(self) -> RamanGainTable:
        """Copy whose negative half is the exact mirror ``-g0(-shift)``."""
        pos = self.shift_hz >= 0
        s_pos, g_pos = self.shift_hz[pos], self.g0[pos]
        neg = s_pos > 0
        shift = np.concatenate([-s_pos[neg][::-1], s_pos])
        g0 = np.concatenate([-g_pos[neg][::-1], g_pos])
        return RamanGainTable(shift, g0, self.reference_frequency_hz, self.polarization_factor)

    def stokes_peak_shift_hz(self) -> float:
        pos = self.shift_hz > 0
        return float(self.shift_hz[pos][np.argmax(self.g0[pos])])


def load_raman_table(path, reference_frequency_hz=206.185e12, polarization_factor=1.0) -> RamanGainTable:
    """Read a two-column text table (shift in THz, g0 in 1/W/m).

    ``#`` starts a comment. The grid must ascend strictly and bracket zero
    shift, where the gain must vanish.

    Raises
    ------
    RamanTableError
        Malformed or out-of-order rows (message carries ``path:line``).
    """
    shifts, values, lines = [], [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.replace(",", " ").split()
            if len(parts) != 2:
                raise RamanTableError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                s, g = float(parts[0]), float(parts[1])
            except ValueError:
                raise RamanTableError(f"{path}:{lineno}: non-numeric value") from None
            if not (math.isfinite(s) and math.isfinite(g)):
                raise RamanTableError(f"{path}:{lineno}: non-finite value")
            if shifts and s <= shifts[-1]:
                raise RamanTableError(f"{path}:{lineno}: shift {s} THz does not ascend")
            shifts.append(s)
            values.append(g)
            lines.append(lineno)
    if not shifts or shifts[0] > 0 or shifts[-1] < 0:
        raise RamanTableError(f"{path}: table must bracket zero shift")
    if np.interp(0.0, shifts, values) != 0.0:
        raise RamanTableError(f"{path}: gain at zero shift must be 0")
    return RamanGainTable(np.array(shifts) * 1e12, np.array(values), reference_frequency_hz, polarization_factor)


def bundled_table_path() -> Path:
    return Path(str(resources.files("ramancomb") / "data" / "ssmf_raman_g0.txt"))


def load_bundled_table(reference_frequency_hz=206.185e12, polarization_factor=1.0) -> RamanGainTable:
    """The fused-silica SSMF gain curve shipped with the package."""
    return load_raman_table(bundled_table_path(), reference_frequency_hz, polarization_factor)


def raman_gain(table: RamanGainTable, geom: FiberGeometry | None, f_hz, f_prime_hz):
    """Raman coupling ``g_R(f, f')`` in 1/W/m seen by channel ``f``.

    The reference curve is rescaled to the actual pump ``f_p = max(f, f')``
    by the pump-frequency ratio and the overlap-area ratio. Without a
    geometry the area ratio is taken as 1. Positive when ``f`` is pumped.
    """
    f = np.asarray(f_hz, dtype=float)
    fp_ = np.asarray(f_prime_hz, dtype=float)
    shift = fp_ - f
    f_pump = np.maximum(f, fp_)
    f_ref = table.reference_frequency_hz
    scale = f_pump / f_ref
    if geom is not None:
        # beyond the table the gain is zero anyway; clip to keep V > 1
        ds = np.minimum(np.abs(shift), np.max(np.abs(table.shift_hz), initial=0.0))
        scale = scale * overlap_area(geom, f_ref, f_ref - ds) / overlap_area(geom, f_pump, f_pump - ds)
    out = table.polarization_factor * table(shift) * scale
    return out if np.ndim(out) else float(out)


# ------------------------------------------------------ span / gain models


@dataclass(frozen=True, eq=False)
class ScaledRamanGain:
    """Tabulated Raman gain with pump-frequency and overlap-area scaling."""

    table: RamanGainTable
    geometry: FiberGeometry | None = None
    symmetric: bool = False

    def matrix(self, frequency_hz) -> np.ndarray:
        table = self.table.mirrored() if self.symmetric else self.table
        f = np.asarray(frequency_hz, dtype=float)
        return np.asarray(raman_gain(table, self.geometry, f[:, None], f[None, :]))


@dataclass(frozen=True)
class TriangularGain:
    """Linear gain ``g_R(f, f') = -(f - f') * slope`` (slope in 1/W/m/Hz)."""

    slope: float

    def matrix(self, frequency_hz) -> np.ndarray:
        f = np.asarray(frequency_hz, dtype=float)
        return -(f[:, None] - f[None, :]) * self.slope


@dataclass(frozen=True)
class NoGain:
    """No Raman coupling at all."""

    def matrix(self, frequency_hz) -> np.ndarray:
        n = np.size(frequency_hz)
        return np.zeros((n, n))


@dataclass(frozen=True, eq=False)
class FiberSpan:
    """One fiber segment: length, loss profile and Raman gain model."""

    length_m: float
    loss: LossProfile = field(default_factory=lambda: LossProfile.flat(0.2))
    gain: object = field(default_factory=NoGain)

    def __post_init__(self):
        if not (self.length_m >= 0 and math.isfinite(self.length_m)):
            raise ValueError("span length must be finite and non-negative")

    def alpha(self, frequency_hz) -> np.ndarray:
        return self.loss.alpha(frequency_hz)

    def gain_matrix(self, frequency_hz) -> np.ndarray:
        """``G[i, j] = g_R(f_i, f_j)`` with a zero diagonal."""
        g = np.array(self.gain.matrix(frequency_hz), dtype=float)
        np.fill_diagonal(g, 0.0)
        return g
