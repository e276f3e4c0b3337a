"""Shared fixtures: the reference simulation setup and small random helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fdadetect.scenario import Jammer, Scenario
from fdadetect.steering import SPEED_OF_LIGHT, ArrayConfig

HALF_WAVELENGTH = SPEED_OF_LIGHT / (2.0 * 2e9)


def reference_array(m: int = 4, n: int = 3, delta_f: float = 1e6) -> ArrayConfig:
    return ArrayConfig(m_tx=m, n_rx=n, f0=2e9, delta_f=delta_f,
                       d_t=HALF_WAVELENGTH, d_r=HALF_WAVELENGTH)


def reference_jammers() -> tuple[Jammer, ...]:
    return (
        Jammer(kind="deceptive", angle=math.radians(30.0), jnr_db=20.0, range_m=15165.0),
        Jammer(kind="deceptive", angle=math.radians(28.0), jnr_db=20.0, range_m=30480.0),
        Jammer(kind="suppressive", angle=math.radians(-20.0), jnr_db=30.0),
    )


def reference_scenario(l_cells: int, k_snapshots: int, *, jammers=None,
                       delta_f: float = 1e6) -> Scenario:
    return Scenario(
        cfg=reference_array(delta_f=delta_f),
        k_snapshots=k_snapshots,
        l_cells=l_cells,
        target_range=15120.0,
        target_angle=math.radians(30.0),
        f_d=0.2,
        noise_power=1.0,
        jammers=reference_jammers() if jammers is None else jammers,
    )


def random_complex(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def random_pd(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = random_complex(rng, dim, 2 * dim + 2)
    return g @ g.conj().T + 0.1 * np.eye(dim)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xFDA)
