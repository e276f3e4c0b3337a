"""Deterministic signal-model vectors for a frequency-offset MIMO array.

The transmit array carries a small carrier offset ``delta_f`` between
adjacent elements, which makes the transmit steering vector depend on
target range as well as angle.  All functions here are pure and return
unit-modulus phase vectors (or projections built from them).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8
"""Propagation speed in m/s."""


@dataclass(frozen=True)
class ArrayConfig:
    """Geometry and carrier plan of the transmit/receive arrays.

    Attributes
    ----------
    m_tx, n_rx : int
        Number of transmit / receive elements.
    f0 : float
        Carrier frequency of the reference element in Hz.
    delta_f : float
        Carrier offset between adjacent transmit elements in Hz
        (``delta_f = 0`` reduces the model to a conventional MIMO array).
    d_t, d_r : float
        Transmit / receive element spacing in meters.
    c : float
        Propagation speed in m/s.
    """

    m_tx: int
    n_rx: int
    f0: float
    delta_f: float
    d_t: float
    d_r: float
    c: float = SPEED_OF_LIGHT

    def __post_init__(self) -> None:
        if self.m_tx < 1 or self.n_rx < 1:
            raise ValueError("m_tx and n_rx must be at least 1")
        if self.f0 <= 0.0:
            raise ValueError("f0 must be positive")
        if self.d_t <= 0.0 or self.d_r <= 0.0:
            raise ValueError("element spacings must be positive")
        if self.delta_f < 0.0:
            raise ValueError("delta_f must be nonnegative")
        if self.c <= 0.0:
            raise ValueError("propagation speed must be positive")

    @property
    def wavelength(self) -> float:
        return self.c / self.f0

    @property
    def mn(self) -> int:
        """Joint channel count (transmit x receive)."""
        return self.m_tx * self.n_rx


@dataclass(frozen=True)
class SteeringVector:
    """Complex unit-modulus array response vector."""

    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DopplerVector:
    """Slow-time phase ramp across snapshots.

    Entry ``k`` is ``exp(j 2 pi f_d k)`` for ``k = 0..K-1``, where ``f_d``
    is the normalized Doppler in cycles per pulse.
    """

    values: np.ndarray
    f_d: float

    def __len__(self) -> int:
        return len(self.values)


def vector_values(v) -> np.ndarray:
    """Unwrap SteeringVector/DopplerVector to a plain ndarray."""
    return np.asarray(getattr(v, "values", v))


def carrier_frequency(m: int, cfg: ArrayConfig) -> float:
    """Carrier of the ``m``-th transmit element (1-based): ``f0 + (m-1) delta_f``."""
    if not 1 <= m <= cfg.m_tx:
        raise ValueError(f"element index {m} outside 1..{cfg.m_tx}")
    return cfg.f0 + (m - 1) * cfg.delta_f


def receive_steering(theta: float, cfg: ArrayConfig) -> SteeringVector:
    """Receive steering vector of length ``n_rx``.

    Entry ``n`` (0-based) is ``exp(j 2 pi n d_r sin(theta) / wavelength)``.
    ``theta`` is in radians, |theta| < pi/2.
    """
    n = np.arange(cfg.n_rx)
    phase = 2.0 * np.pi * n * cfg.d_r * np.sin(theta) / cfg.wavelength
    return SteeringVector(np.exp(1j * phase))


def range_phase(r: float, cfg: ArrayConfig) -> np.ndarray:
    """Per-element phase ramp from the carrier offsets at round-trip range ``r``.

    Entry ``m`` is ``exp(j 2 pi m delta_f 2 r / c)``; the two-way delay
    ``2 r / c`` couples range into the transmit response when ``delta_f > 0``.
    """
    m = np.arange(cfg.m_tx)
    return np.exp(2j * np.pi * m * cfg.delta_f * 2.0 * r / cfg.c)


def transmit_steering(r: float, theta: float, cfg: ArrayConfig) -> SteeringVector:
    """Transmit steering vector of length ``m_tx`` at range ``r`` (m) and angle ``theta`` (rad).

    The angular ramp is multiplied elementwise by the range ramp evaluated
    at ``-r``, so a matched correlator sees unity phase at the true range.
    """
    m = np.arange(cfg.m_tx)
    angular = np.exp(2j * np.pi * m * cfg.d_t * np.sin(theta) / cfg.wavelength)
    return SteeringVector(angular * range_phase(-r, cfg))


def joint_steering(r: float, theta: float, cfg: ArrayConfig) -> SteeringVector:
    """Joint transmit-receive steering vector of length ``m_tx * n_rx``.

    Kronecker product of the transmit and receive responses; squared norm
    equals ``m_tx * n_rx`` since every entry has unit modulus.
    """
    a_t = transmit_steering(r, theta, cfg).values
    a_r = receive_steering(theta, cfg).values
    return SteeringVector(np.kron(a_t, a_r))


def doppler_vector(f_d: float, k_snapshots: int) -> DopplerVector:
    """Doppler phase ramp over ``k_snapshots`` pulses at normalized Doppler ``f_d``."""
    if k_snapshots < 1:
        raise ValueError("k_snapshots must be at least 1")
    k = np.arange(k_snapshots)
    return DopplerVector(np.exp(2j * np.pi * f_d * k), float(f_d))


def complement_projection(v) -> np.ndarray:
    """Orthogonal projection onto the complement of ``span{v}``.

    Returns ``I - v (v^H v)^{-1} v^H``: Hermitian, idempotent, rank
    ``len(v) - 1``, and annihilates ``v``.
    """
    vec = vector_values(v).astype(complex)
    norm_sq = np.real(np.vdot(vec, vec))
    if norm_sq == 0.0:
        raise ValueError("cannot project against the zero vector")
    return np.eye(len(vec)) - np.outer(vec, vec.conj()) / norm_sq
