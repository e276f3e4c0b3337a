"""Interference covariance models, data synthesis, and mismatch construction.

A :class:`Scenario` bundles the array geometry with the interference
environment (deceptive and suppressive jammers over a white-noise floor)
and the target hypothesis parameters.  :func:`synthesize` draws one
cell-under-test matrix plus training matrices from it; the mismatch helpers
build steering/Doppler vectors at a prescribed generalized-cosine distance
from the nominal ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import ConvergenceError
from .steering import (
    ArrayConfig,
    DopplerVector,
    SteeringVector,
    doppler_vector,
    joint_steering,
    receive_steering,
    vector_values,
)

DECEPTIVE = "deceptive"
SUPPRESSIVE = "suppressive"


@dataclass(frozen=True)
class Jammer:
    """One jamming source.

    Deceptive jammers repeat the waveform from a false range/angle and carry
    a ``range_m``; suppressive (barrage) jammers are noise-like over the
    receive aperture only and must not carry one.  ``jnr_db`` is the
    jammer-to-noise power ratio in dB.
    """

    kind: str
    angle: float
    jnr_db: float
    range_m: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (DECEPTIVE, SUPPRESSIVE):
            raise ValueError(f"unknown jammer kind {self.kind!r}")
        if not np.isfinite(self.jnr_db):
            raise ValueError("jnr_db must be finite")
        if self.kind == DECEPTIVE and self.range_m is None:
            raise ValueError("deceptive jammers require a range")
        if self.kind == SUPPRESSIVE and self.range_m is not None:
            raise ValueError("suppressive jammers do not take a range")

    @property
    def power(self) -> float:
        return 10.0 ** (self.jnr_db / 10.0)


@dataclass(frozen=True)
class Scenario:
    """Array, environment, and target description for one experiment."""

    cfg: ArrayConfig
    k_snapshots: int
    l_cells: int
    target_range: float
    target_angle: float
    f_d: float
    noise_power: float = 1.0
    jammers: tuple[Jammer, ...] = ()

    def __post_init__(self) -> None:
        if self.k_snapshots < 1 or self.l_cells < 1:
            raise ValueError("k_snapshots and l_cells must be at least 1")
        if self.noise_power <= 0.0:
            raise ValueError("noise_power must be positive")
        if self.l_cells * self.k_snapshots <= self.cfg.mn:
            raise ValueError(
                "need l_cells * k_snapshots > m_tx * n_rx for an invertible "
                f"sample covariance ({self.l_cells * self.k_snapshots} <= {self.cfg.mn})"
            )
        object.__setattr__(self, "jammers", tuple(self.jammers))

    def target_steering(self) -> SteeringVector:
        return joint_steering(self.target_range, self.target_angle, self.cfg)

    def doppler(self) -> DopplerVector:
        return doppler_vector(self.f_d, self.k_snapshots)


@dataclass(frozen=True)
class Amplitude:
    """Complex target amplitude; zero embeds the null hypothesis."""

    xi: complex


def build_covariance(scenario: Scenario) -> np.ndarray:
    """Interference-plus-noise covariance of one received column.

    Deceptive jammers contribute rank-one terms on the joint steering vector
    at their false location; suppressive jammers are coherent across receive
    elements only, i.e. rank one on ``ones(m_tx) kron a_r(angle)``.  Powers
    are linear JNRs over the white floor, the whole scaled by the noise
    power.  The result is Hermitian positive definite (identity floor).
    """
    cfg = scenario.cfg
    r = np.eye(cfg.mn, dtype=complex)
    for jam in scenario.jammers:
        if jam.kind == DECEPTIVE:
            v = joint_steering(jam.range_m, jam.angle, cfg).values
        else:
            v = np.kron(np.ones(cfg.m_tx), receive_steering(jam.angle, cfg).values)
        r += jam.power * np.outer(v, v.conj())
    r *= scenario.noise_power
    return 0.5 * (r + r.conj().T)


def amplitude_for_snr(snr_db: float, noise_power: float, phase: float = 0.0) -> Amplitude:
    """Amplitude with ``|xi|^2 = noise_power * 10^(snr_db/10)`` and the given phase."""
    if noise_power <= 0.0:
        raise ValueError("noise_power must be positive")
    if snr_db == -np.inf:
        return Amplitude(0j)
    mag = np.sqrt(noise_power * 10.0 ** (snr_db / 10.0))
    return Amplitude(mag * np.exp(1j * phase))


@dataclass(frozen=True)
class DataSet:
    """Cell under test plus training matrices, all ``mn x k_snapshots``."""

    z: np.ndarray
    training: tuple[np.ndarray, ...]


def standard_complex(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Standard complex normal draws: real and imaginary parts N(0, 1/2)."""
    g = rng.standard_normal((rows, cols, 2))
    return (g[..., 0] + 1j * g[..., 1]) * np.sqrt(0.5)


def synthesize(
    scenario: Scenario,
    xi: Amplitude | complex,
    hypothesis: str,
    rng: np.random.Generator,
    chol_r: np.ndarray | None = None,
    actual_steering=None,
    actual_doppler=None,
) -> DataSet:
    """Draw one trial of test and training data.

    Under ``"H1"`` the cell under test is ``xi * a w^T`` plus colored noise;
    under ``"H0"`` it is noise only.  Training matrices are always pure
    noise.  Noise columns are ``chol(R) @ g`` with ``g`` standard complex
    normal; pass ``chol_r`` to reuse a precomputed lower Cholesky factor.
    ``actual_steering`` / ``actual_doppler`` override the signal vectors used
    for data generation (the nominal scenario vectors otherwise), which is
    how mismatched-signal trials are produced.
    """
    if hypothesis not in ("H0", "H1"):
        raise ValueError(f"hypothesis must be 'H0' or 'H1', got {hypothesis!r}")
    cfg = scenario.cfg
    k = scenario.k_snapshots
    if chol_r is None:
        chol_r = np.linalg.cholesky(build_covariance(scenario))
    cols = (scenario.l_cells + 1) * k
    noise = chol_r @ standard_complex(rng, cfg.mn, cols)
    z = noise[:, :k]
    amp = complex(getattr(xi, "xi", xi))
    if hypothesis == "H1" and amp != 0j:
        a = vector_values(actual_steering) if actual_steering is not None \
            else scenario.target_steering().values
        w = vector_values(actual_doppler) if actual_doppler is not None \
            else scenario.doppler().values
        z = z + amp * np.outer(a, w)
    training = tuple(noise[:, (l + 1) * k:(l + 2) * k] for l in range(scenario.l_cells))
    return DataSet(z=z, training=training)


def _metric_inner(metric: np.ndarray, x: np.ndarray, y: np.ndarray) -> complex:
    """Inner product <x, y> = x^H metric^{-1} y."""
    return complex(x.conj() @ np.linalg.solve(metric, y))


def cos2_spatial(actual, nominal, r_inv_metric) -> float:
    """Generalized cosine-squared between two steering vectors.

    ``|a^H R^{-1} a0|^2 / ((a^H R^{-1} a)(a0^H R^{-1} a0))`` with ``R`` the
    (Hermitian positive definite) metric; invariant to rescaling either
    vector, equal to 1 iff the vectors are collinear.
    """
    a = vector_values(actual).astype(complex)
    a0 = vector_values(nominal).astype(complex)
    metric = np.asarray(getattr(r_inv_metric, "values", r_inv_metric))
    cross = _metric_inner(metric, a, a0)
    denom = np.real(_metric_inner(metric, a, a)) * np.real(_metric_inner(metric, a0, a0))
    if denom == 0.0:
        raise ValueError("cos2_spatial requires nonzero vectors")
    return float(np.clip(abs(cross) ** 2 / denom, 0.0, 1.0))


def cos2_doppler(f_d_actual: float, f_d_nominal: float, k_snapshots: int) -> float:
    """Cosine-squared between two Doppler ramps of length ``k_snapshots``.

    Equals the squared Dirichlet kernel ``|sum_k e^(j 2 pi (f1-f0) k)|^2 / K^2``;
    zero when the Dopplers sit on distinct DFT bins of spacing ``1/K``.
    """
    if k_snapshots < 1:
        raise ValueError("k_snapshots must be at least 1")
    w0 = doppler_vector(f_d_nominal, k_snapshots).values
    w1 = doppler_vector(f_d_actual, k_snapshots).values
    return float(np.clip(abs(np.vdot(w0, w1)) ** 2 / k_snapshots**2, 0.0, 1.0))


def make_mismatched_steering(nominal, cos2_target: float, metric) -> np.ndarray:
    """Vector at prescribed generalized-cosine distance from ``nominal``.

    Rotates the metric-normalized nominal direction toward a deterministic
    metric-orthonormal complement (Gram-Schmidt against the first canonical
    basis vector that is not parallel to the nominal), then rescales so the
    whitened power ``v^H R^{-1} v`` matches the nominal's.  The returned
    vector satisfies ``cos2_spatial(v, nominal, metric) == cos2_target`` to
    1e-10 but is generally not unit-modulus.
    """
    if not 0.0 < cos2_target <= 1.0:
        raise ValueError("cos2_target must lie in (0, 1]")
    a0 = vector_values(nominal).astype(complex)
    met = np.asarray(getattr(metric, "values", metric))
    norm0_sq = np.real(_metric_inner(met, a0, a0))
    if norm0_sq <= 0.0:
        raise ValueError("nominal vector must be nonzero")
    u = a0 / np.sqrt(norm0_sq)
    if cos2_target == 1.0:
        return a0.copy()
    dim = len(a0)
    u_perp = None
    for i in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[i] = 1.0
        w = e - u * _metric_inner(met, u, e)
        w_norm_sq = np.real(_metric_inner(met, w, w))
        if w_norm_sq > 1e-12 * np.real(_metric_inner(met, e, e)):
            u_perp = w / np.sqrt(w_norm_sq)
            break
    if u_perp is None:
        raise ValueError("no complement direction found; dimension must exceed 1")
    cos_phi = np.sqrt(cos2_target)
    sin_phi = np.sqrt(1.0 - cos2_target)
    return (cos_phi * u + sin_phi * u_perp) * np.sqrt(norm0_sq)


def find_mismatched_doppler(
    f_d_nominal: float, cos2_target: float, k_snapshots: int, tol: float = 1e-8
) -> float:
    """Normalized Doppler whose cosine-squared against the nominal hits the target.

    Bisects the offset on ``(0, 1/K)`` where the Dirichlet kernel decreases
    monotonically from 1 to 0; the returned Doppler satisfies
    ``cos2_doppler(f, f_d_nominal, K) == cos2_target`` to within ``tol``.
    """
    if not 0.0 < cos2_target <= 1.0:
        raise ValueError("cos2_target must lie in (0, 1]")
    if k_snapshots < 2:
        raise ValueError("k_snapshots must be at least 2")
    if cos2_target == 1.0:
        return float(f_d_nominal)
    lo, hi = 0.0, 1.0 / k_snapshots
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        value = cos2_doppler(f_d_nominal + mid, f_d_nominal, k_snapshots)
        if abs(value - cos2_target) <= tol:
            return float(f_d_nominal + mid)
        if value > cos2_target:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("bisection failed to reach the requested mismatch")
