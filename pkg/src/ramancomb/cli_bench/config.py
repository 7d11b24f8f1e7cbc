"""Scenario configuration: defaults, schema validation and dotted overrides.

A configuration is a JSON document with four sections, ``fiber``,
``spectrum``, ``solver`` and ``output``. Anything left out takes the default
below; unknown keys are rejected. Errors name the offending field by its
dotted path, e.g. ``fiber.span_length_km``.
"""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path

import jsonschema

from ..fiber_models import WALKER_C_IR_UM, WALKER_C_UV_UM, WALKER_OH_BANDS


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(dotted_path, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p or '<root>'}: {m}" for p, m in self.errors))


DEFAULTS = {
    "fiber": {
        "span_length_km": 70.0,
        "loss": {
            "mode": "parametric",
            "flat_dB_per_km": 0.2,
            "params": {
                "A": 0.9192,
                "B": 0.0147,
                "K_UV": 1.4655e-16,
                "C_UV": WALKER_C_UV_UM,
                "K_IR": 5.0e11,
                "C_IR": WALKER_C_IR_UM,
                "A1": 0.0043e-3,
                "oh_bands": [list(b) for b in WALKER_OH_BANDS],
            },
        },
        "geometry": {
            "core_radius_um": 4.2,
            "cladding_index": 1.45,
            "relative_index_step": 0.0031,
            "nonlinear_index_m2_per_W": 2.6e-20,
        },
        "raman": {
            "model": "table",
            "table_path": None,
            "reference_frequency_THz": 206.185,
            "polarization_factor": 1.0,
            "area_scaling": True,
            "triangular_slope_per_W_m_Hz": 3.2e-17,
        },
    },
    "spectrum": {
        "bands": ["U", "L", "C", "S", "E"],
        "slot_GHz": 75.0,
        "symbol_rate_GBd": 64.0,
        "launch": {"mode": "flat", "power_dBm": -1.0, "profile_path": None},
    },
    "solver": {
        "mode": "both",
        "scheme": "rk4-log",
        "dz_m": 0.8,
        "record_step_m": 1000.0,
        "quadrature_step_m": 1000.0,
        "quadrature_tolerance_dB": None,
        "tolerance_dB": 0.1,
        "k_max": 8,
        "symmetric_gain": False,
        "reference_dz_m": 0.8,
        "timing_repeats": 5,
        "sweep_initial_dz_m": 1000.0,
        "sweep_initial_quadrature_step_m": 17500.0,
    },
    "output": {
        "directory": "results",
        "formats": ["csv", "json"],
        "plots": True,
    },
}

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_OPT_PATH = {"type": ["string", "null"]}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


SCHEMA = _obj(
    {
        "fiber": _obj(
            {
                "span_length_km": _POS,
                "loss": _obj(
                    {
                        "mode": {"enum": ["parametric", "flat"]},
                        "flat_dB_per_km": _NONNEG,
                        "params": _obj(
                            {
                                "A": _NONNEG,
                                "B": {"type": "number"},
                                "K_UV": _NONNEG,
                                "C_UV": {"type": "number"},
                                "K_IR": _NONNEG,
                                "C_IR": {"type": "number"},
                                "A1": _NONNEG,
                                "oh_bands": {
                                    "type": "array",
                                    "items": {
                                        "type": "array",
                                        "prefixItems": [_NONNEG, _POS, _POS],
                                        "items": False,
                                        "minItems": 3,
                                    },
                                },
                            }
                        ),
                    }
                ),
                "geometry": _obj(
                    {
                        "core_radius_um": _POS,
                        "cladding_index": {"type": "number", "exclusiveMinimum": 1},
                        "relative_index_step": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "nonlinear_index_m2_per_W": _POS,
                    }
                ),
                "raman": _obj(
                    {
                        "model": {"enum": ["table", "triangular", "none"]},
                        "table_path": _OPT_PATH,
                        "reference_frequency_THz": _POS,
                        "polarization_factor": _POS,
                        "area_scaling": {"type": "boolean"},
                        "triangular_slope_per_W_m_Hz": _NONNEG,
                    }
                ),
            }
        ),
        "spectrum": _obj(
            {
                "bands": {
                    "type": "array",
                    "items": {"enum": ["U", "L", "C", "S", "E"]},
                    "minItems": 1,
                    "uniqueItems": True,
                },
                "slot_GHz": _POS,
                "symbol_rate_GBd": _POS,
                "launch": _obj(
                    {
                        "mode": {"enum": ["flat", "profile"]},
                        "power_dBm": {"type": "number"},
                        "profile_path": _OPT_PATH,
                    }
                ),
            }
        ),
        "solver": _obj(
            {
                "mode": {"enum": ["numerical", "perturbative", "both"]},
                "scheme": {"enum": ["rk4-log", "euler-log"]},
                "dz_m": _POS,
                "record_step_m": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "quadrature_step_m": _POS,
                "quadrature_tolerance_dB": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "tolerance_dB": _POS,
                "k_max": {"type": "integer", "minimum": 1},
                "symmetric_gain": {"type": "boolean"},
                "reference_dz_m": _POS,
                "timing_repeats": {"type": "integer", "minimum": 1},
                "sweep_initial_dz_m": _POS,
                "sweep_initial_quadrature_step_m": _POS,
            }
        ),
        "output": _obj(
            {
                "directory": {"type": "string", "minLength": 1},
                "formats": {
                    "type": "array",
                    "items": {"enum": ["csv", "json"]},
                    "uniqueItems": True,
                },
                "plots": {"type": "boolean"},
            }
        ),
    }
)

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


def _dotted(path) -> str:
    return ".".join(str(p) for p in path)


def validate(cfg: dict) -> None:
    """Raise :class:`ConfigError` listing every schema violation."""
    errors = []
    for err in sorted(_VALIDATOR.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path))):
        path = list(err.absolute_path)
        if err.validator == "additionalProperties":
            allowed = set(err.schema.get("properties", {}))
            for key in sorted(set(err.instance) - allowed):
                errors.append((_dotted(path + [key]), "unknown key"))
        else:
            errors.append((_dotted(path), err.message))
    errors.extend(_semantic_errors(cfg))
    if errors:
        raise ConfigError(errors)


def _semantic_errors(cfg):
    out = []
    launch = cfg.get("spectrum", {}).get("launch", {})
    if launch.get("mode") == "profile" and not launch.get("profile_path"):
        out.append(("spectrum.launch.profile_path", "required when launch mode is 'profile'"))
    solver = cfg.get("solver", {})
    span_km = cfg.get("fiber", {}).get("span_length_km")
    dz = solver.get("dz_m")
    numbers = isinstance(dz, (int, float)) and isinstance(span_km, (int, float))
    if numbers and span_km > 0 and dz > 1e3 * span_km:
        out.append(("solver.dz_m", "step larger than the span"))
    return out


def deep_merge(base: dict, update: dict) -> dict:
    """Recursive dict merge; values in ``update`` win, lists are replaced."""
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_override(text: str) -> tuple[list[str], object]:
    """Split ``a.b.c=value``; the value is read as JSON, else kept as a string."""
    if "=" not in text:
        raise ConfigError([(text, "override must look like dotted.path=value")])
    key, raw = text.split("=", 1)
    path = [p for p in key.strip().split(".")]
    if not all(path):
        raise ConfigError([(key, "empty path component")])
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(cfg: dict, overrides) -> dict:
    out = copy.deepcopy(cfg)
    for item in overrides or ():
        path, value = parse_override(item)
        node = out
        for i, key in enumerate(path[:-1]):
            nxt = node.get(key)
            if not isinstance(nxt, dict):
                raise ConfigError([(_dotted(path[: i + 1]), "not a configuration section")])
            node = nxt
        node[path[-1]] = value
    return out


def _resolve_paths(cfg: dict, base_dir: Path) -> None:
    # input files are pinned to absolute paths so a saved config runs anywhere
    raman = cfg["fiber"]["raman"]
    launch = cfg["spectrum"]["launch"]
    for section, key in ((raman, "table_path"), (launch, "profile_path")):
        if section.get(key):
            p = Path(section[key])
            section[key] = str(p if p.is_absolute() else (base_dir / p).resolve())


def resolve(user_cfg: dict, overrides=(), base_dir: str | Path = ".") -> dict:
    """Defaults + user file + overrides, validated, with absolute input paths."""
    if not isinstance(user_cfg, dict):
        raise ConfigError([("", "configuration must be a JSON object")])
    merged = apply_overrides(deep_merge(DEFAULTS, user_cfg), overrides)
    validate(merged)
    _resolve_paths(merged, Path(base_dir))
    for section, key in (("fiber.raman", "table_path"), ("spectrum.launch", "profile_path")):
        node = merged
        for part in section.split("."):
            node = node[part]
        if node.get(key) and not Path(node[key]).is_file():
            raise ConfigError([(f"{section}.{key}", f"file not found: {node[key]}")])
    return merged


def load_config(path, overrides=()) -> dict:
    """Read, merge and validate a configuration file.

    A run report written by ``solve`` is accepted too; its embedded
    configuration is used.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([("", f"config file not found: {path}")]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}")]) from None
    if isinstance(doc, dict) and "report_kind" in doc and "config" in doc:
        doc = doc["config"]
    return resolve(doc, overrides, path.parent)


def worker_count(cli_threads: int | None = None) -> int:
    """Worker count from ``--threads``, else ``RC_THREADS``, else 1."""
    if cli_threads is not None:
        n = cli_threads
    else:
        raw = os.environ.get("RC_THREADS", "").strip()
        if not raw:
            return 1
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError([("RC_THREADS", f"not an integer: {raw!r}")]) from None
    if n < 1:
        raise ConfigError([("threads", "must be at least 1")])
    return n
