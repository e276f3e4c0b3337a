"""Experiment configuration: schema, defaults, and validation with field-path diagnostics.

The configuration is a JSON document with the sections below; a section
present in the file replaces the default section wholesale and must be
complete, while absent sections fall back to the defaults (which mirror
the reference simulation setup).  Validation failures raise
:class:`ConfigError` naming the offending field path.

Sections and keys::

    array     {m, n, f0_hz, delta_f_hz, d_t_m, d_r_m}
    waveform  {k_snapshots, f_d}
    training  {l_cells}
    target    {range_m, angle_deg}
    jammers   [{kind, angle_deg, jnr_db, range_m (deceptive only)}]
    noise_power
    mc        {pfa, seed, trials_threshold?, trials_pd?, workers?}
    detectors [names]
    sweep     {kind: snr|pfa|mismatch|fda_vs_mimo, grid, cos2_spatial?, cos2_doppler?}
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

from .detectors import DetectorKind
from .montecarlo import McConfig
from .scenario import Jammer, Scenario
from .steering import SPEED_OF_LIGHT, ArrayConfig

WORKERS_ENV_VAR = "FDADETECT_WORKERS"

SWEEP_KINDS = ("snr", "pfa", "mismatch", "fda_vs_mimo")

_HALF_WAVELENGTH = SPEED_OF_LIGHT / (2.0 * 2e9)

DEFAULTS: dict = {
    "array": {
        "m": 4,
        "n": 3,
        "f0_hz": 2e9,
        "delta_f_hz": 1e6,
        "d_t_m": _HALF_WAVELENGTH,
        "d_r_m": _HALF_WAVELENGTH,
    },
    "waveform": {"k_snapshots": 6, "f_d": 0.2},
    "training": {"l_cells": 4},
    "target": {"range_m": 15120.0, "angle_deg": 30.0},
    "jammers": [
        {"kind": "deceptive", "range_m": 15165.0, "angle_deg": 30.0, "jnr_db": 20.0},
        {"kind": "deceptive", "range_m": 30480.0, "angle_deg": 28.0, "jnr_db": 20.0},
        {"kind": "suppressive", "angle_deg": -20.0, "jnr_db": 30.0},
    ],
    "noise_power": 1.0,
    "mc": {"pfa": 1e-3, "seed": 0},
    "detectors": ["oglrt", "tglrt", "rao", "lhamf"],
    "sweep": {"kind": "snr", "grid": [-16.0, -14.0, -12.0, -10.0, -8.0, -6.0,
                                      -4.0, -2.0, 0.0]},
}


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending field path."""


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    grid: tuple[float, ...]
    cos2_spatial: float = 1.0
    cos2_doppler: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved and validated experiment description."""

    array: ArrayConfig
    k_snapshots: int
    f_d: float
    l_cells: int
    target_range_m: float
    target_angle_deg: float
    jammers: tuple[Jammer, ...]
    noise_power: float
    mc: McConfig
    detectors: tuple[DetectorKind, ...]
    sweep: SweepSpec

    def scenario(self) -> Scenario:
        return Scenario(
            cfg=self.array,
            k_snapshots=self.k_snapshots,
            l_cells=self.l_cells,
            target_range=self.target_range_m,
            target_angle=math.radians(self.target_angle_deg),
            f_d=self.f_d,
            noise_power=self.noise_power,
            jammers=self.jammers,
        )

    def resolved(self) -> dict:
        """JSON-serializable echo of every resolved parameter."""
        return {
            "array": {
                "m": self.array.m_tx,
                "n": self.array.n_rx,
                "f0_hz": self.array.f0,
                "delta_f_hz": self.array.delta_f,
                "d_t_m": self.array.d_t,
                "d_r_m": self.array.d_r,
            },
            "waveform": {"k_snapshots": self.k_snapshots, "f_d": self.f_d},
            "training": {"l_cells": self.l_cells},
            "target": {"range_m": self.target_range_m, "angle_deg": self.target_angle_deg},
            "jammers": [
                {
                    "kind": j.kind,
                    "angle_deg": math.degrees(j.angle),
                    "jnr_db": j.jnr_db,
                    **({"range_m": j.range_m} if j.range_m is not None else {}),
                }
                for j in self.jammers
            ],
            "noise_power": self.noise_power,
            "mc": {
                "pfa": self.mc.pfa,
                "trials_threshold": self.mc.resolved_trials_threshold,
                "trials_pd": self.mc.trials_pd,
                "seed": self.mc.seed,
                "workers": self.mc.workers,
            },
            "detectors": [k.value for k in self.detectors],
            "sweep": {
                "kind": self.sweep.kind,
                "grid": list(self.sweep.grid),
                "cos2_spatial": self.sweep.cos2_spatial,
                "cos2_doppler": self.sweep.cos2_doppler,
            },
        }


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _take(section: dict, key: str, path: str, *, required: bool = True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    return section.pop(key)


def _check_leftover(section: dict, path: str) -> None:
    if section:
        stray = sorted(section)[0]
        raise ConfigError(f"{path}.{stray}: unknown field")


def _number(value, path: str, *, minimum=None, maximum=None,
            exclusive_min=False, exclusive_max=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
    v = float(value)
    if minimum is not None and (v <= minimum if exclusive_min else v < minimum):
        op = ">" if exclusive_min else ">="
        raise ConfigError(f"{path}: must be {op} {minimum}")
    if maximum is not None and (v >= maximum if exclusive_max else v > maximum):
        op = "<" if exclusive_max else "<="
        raise ConfigError(f"{path}: must be {op} {maximum}")
    return v


def _integer(value, path: str, *, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}")
    return value


def _merge_sections(data: dict) -> dict:
    merged = {key: json.loads(json.dumps(val)) for key, val in DEFAULTS.items()}
    for key, value in data.items():
        if key not in DEFAULTS:
            raise ConfigError(f"{key}: unknown section")
        merged[key] = value
    return merged


def _parse_jammer(entry, path: str) -> Jammer:
    section = dict(_expect_mapping(entry, path))
    kind = _take(section, "kind", path)
    if kind not in ("deceptive", "suppressive"):
        raise ConfigError(f"{path}.kind: must be 'deceptive' or 'suppressive'")
    angle = _number(_take(section, "angle_deg", path), f"{path}.angle_deg",
                    minimum=-90.0, maximum=90.0)
    jnr = _number(_take(section, "jnr_db", path), f"{path}.jnr_db")
    range_m = None
    if kind == "deceptive":
        range_m = _number(_take(section, "range_m", path), f"{path}.range_m", minimum=0.0)
    elif "range_m" in section:
        raise ConfigError(f"{path}.range_m: suppressive jammers do not take a range")
    _check_leftover(section, path)
    return Jammer(kind=kind, angle=math.radians(angle), jnr_db=jnr, range_m=range_m)


def _default_workers():
    env = os.environ.get(WORKERS_ENV_VAR)
    if env is None:
        return 1
    if env == "auto":
        return "auto"
    try:
        return int(env)
    except ValueError as err:
        raise ConfigError(f"{WORKERS_ENV_VAR}: must be an integer or 'auto'") from err


def from_dict(data: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Build and validate a configuration from a parsed JSON document.

    ``overrides`` may carry ``seed``, ``pfa``, and ``workers`` (the CLI
    flags), which take precedence over the file.
    """
    overrides = overrides or {}
    merged = _merge_sections(_expect_mapping(data, "config"))

    arr = dict(_expect_mapping(merged["array"], "array"))
    array = None
    try:
        array = ArrayConfig(
            m_tx=_integer(_take(arr, "m", "array"), "array.m", minimum=1),
            n_rx=_integer(_take(arr, "n", "array"), "array.n", minimum=1),
            f0=_number(_take(arr, "f0_hz", "array"), "array.f0_hz", minimum=0.0,
                       exclusive_min=True),
            delta_f=_number(_take(arr, "delta_f_hz", "array"), "array.delta_f_hz",
                            minimum=0.0),
            d_t=_number(_take(arr, "d_t_m", "array"), "array.d_t_m", minimum=0.0,
                        exclusive_min=True),
            d_r=_number(_take(arr, "d_r_m", "array"), "array.d_r_m", minimum=0.0,
                        exclusive_min=True),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"array: {err}") from err
    _check_leftover(arr, "array")

    wave = dict(_expect_mapping(merged["waveform"], "waveform"))
    k_snapshots = _integer(_take(wave, "k_snapshots", "waveform"),
                           "waveform.k_snapshots", minimum=1)
    f_d = _number(_take(wave, "f_d", "waveform"), "waveform.f_d")
    _check_leftover(wave, "waveform")

    training = dict(_expect_mapping(merged["training"], "training"))
    l_cells = _integer(_take(training, "l_cells", "training"),
                       "training.l_cells", minimum=1)
    _check_leftover(training, "training")

    target = dict(_expect_mapping(merged["target"], "target"))
    target_range = _number(_take(target, "range_m", "target"), "target.range_m",
                           minimum=0.0)
    target_angle = _number(_take(target, "angle_deg", "target"), "target.angle_deg",
                           minimum=-90.0, maximum=90.0)
    _check_leftover(target, "target")

    jammers_raw = merged["jammers"]
    if not isinstance(jammers_raw, list):
        raise ConfigError("jammers: expected a list")
    jammers = tuple(
        _parse_jammer(entry, f"jammers[{i}]") for i, entry in enumerate(jammers_raw)
    )

    noise_power = _number(merged["noise_power"], "noise_power", minimum=0.0,
                          exclusive_min=True)

    mc_raw = dict(_expect_mapping(merged["mc"], "mc"))
    pfa = overrides.get("pfa")
    if pfa is None:
        pfa = _number(_take(mc_raw, "pfa", "mc"), "mc.pfa", minimum=0.0, maximum=1.0,
                      exclusive_min=True, exclusive_max=True)
    else:
        _take(mc_raw, "pfa", "mc", required=False)
    seed = overrides.get("seed")
    if seed is None:
        seed = _integer(_take(mc_raw, "seed", "mc"), "mc.seed", minimum=0)
    else:
        _take(mc_raw, "seed", "mc", required=False)
    trials_threshold = _take(mc_raw, "trials_threshold", "mc", required=False)
    if trials_threshold is not None:
        trials_threshold = _integer(trials_threshold, "mc.trials_threshold", minimum=1)
    trials_pd = _take(mc_raw, "trials_pd", "mc", required=False, default=10_000)
    trials_pd = _integer(trials_pd, "mc.trials_pd", minimum=1)
    workers = overrides.get("workers")
    if workers is None:
        workers = _take(mc_raw, "workers", "mc", required=False,
                        default=_default_workers())
    else:
        _take(mc_raw, "workers", "mc", required=False)
    if workers != "auto":
        workers = _integer(workers, "mc.workers", minimum=1)
    _check_leftover(mc_raw, "mc")
    try:
        mc = McConfig(pfa=float(pfa), trials_threshold=trials_threshold,
                      trials_pd=trials_pd, seed=int(seed), workers=workers)
    except ValueError as err:
        raise ConfigError(f"mc: {err}") from err

    det_raw = merged["detectors"]
    if not isinstance(det_raw, list) or not det_raw:
        raise ConfigError("detectors: expected a non-empty list of detector names")
    detectors = []
    valid = {k.value: k for k in DetectorKind}
    for i, name in enumerate(det_raw):
        if name not in valid:
            raise ConfigError(
                f"detectors[{i}]: unknown detector {name!r}; "
                f"choose from {sorted(valid)}"
            )
        detectors.append(valid[name])

    sweep_raw = dict(_expect_mapping(merged["sweep"], "sweep"))
    kind = _take(sweep_raw, "kind", "sweep")
    if kind not in SWEEP_KINDS:
        raise ConfigError(f"sweep.kind: must be one of {list(SWEEP_KINDS)}")
    grid_raw = _take(sweep_raw, "grid", "sweep")
    if not isinstance(grid_raw, list) or not grid_raw:
        raise ConfigError("sweep.grid: expected a non-empty list of numbers")
    grid = tuple(_number(v, f"sweep.grid[{i}]") for i, v in enumerate(grid_raw))
    if kind == "pfa":
        for i, v in enumerate(grid):
            if not 0.0 < v < 1.0:
                raise ConfigError(f"sweep.grid[{i}]: pfa values must lie in (0, 1)")
    cos2_spatial = _number(
        _take(sweep_raw, "cos2_spatial", "sweep", required=False, default=1.0),
        "sweep.cos2_spatial", minimum=0.0, maximum=1.0, exclusive_min=True,
    )
    cos2_doppler = _number(
        _take(sweep_raw, "cos2_doppler", "sweep", required=False, default=1.0),
        "sweep.cos2_doppler", minimum=0.0, maximum=1.0, exclusive_min=True,
    )
    _check_leftover(sweep_raw, "sweep")
    sweep = SweepSpec(kind=kind, grid=grid, cos2_spatial=cos2_spatial,
                      cos2_doppler=cos2_doppler)

    cfg = ExperimentConfig(
        array=array,
        k_snapshots=k_snapshots,
        f_d=f_d,
        l_cells=l_cells,
        target_range_m=target_range,
        target_angle_deg=target_angle,
        jammers=jammers,
        noise_power=noise_power,
        mc=mc,
        detectors=tuple(detectors),
        sweep=sweep,
    )
    _validate_cross_fields(cfg)
    return cfg


def _validate_cross_fields(cfg: ExperimentConfig) -> None:
    mn = cfg.array.mn
    if cfg.l_cells * cfg.k_snapshots <= mn:
        raise ConfigError(
            "training.l_cells: need l_cells * k_snapshots > m * n "
            f"({cfg.l_cells} * {cfg.k_snapshots} <= {mn})"
        )
    for kind in cfg.detectors:
        if not kind.uses_training and cfg.k_snapshots <= mn:
            raise ConfigError(
                f"detectors: {kind.value} needs waveform.k_snapshots > m * n "
                f"({cfg.k_snapshots} <= {mn})"
            )


def load(path: str | Path | None, overrides: dict | None = None) -> ExperimentConfig:
    """Load a configuration file (or the defaults when ``path`` is None)."""
    if path is None:
        return from_dict({}, overrides)
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config file {p}: {err}") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {p} is not valid JSON: {err}") from err
    return from_dict(data, overrides)
