"""Adaptive detection statistics for the cell under test.

Four training-based detectors (one-step GLRT, two-step GLRT, Rao score
test, and the AMF-form detector arising in the Rao decomposition) plus
three training-free comparators.  All statistics are computed in
unwhitened "solve" form against the relevant Gram matrices (one batched
factorization per Gram, no explicit inverses or matrix square roots), and
every routine accepts a leading batch dimension on the data.

Conventions
-----------
``z`` is the ``mn x k`` cell-under-test matrix (or a stack of them),
``s`` the training sample covariance, ``a`` the joint steering vector and
``omega`` the Doppler ramp.  Decisions compare a statistic against a
threshold with strict ``>``; thresholds come from the analysis or
montecarlo modules.  The one-step GLRT is reported on its natural scale
``lam >= 1``; its decision statistic (the scale on which false-alarm laws
are stated) is the shifted form ``lam - 1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .numerics import matrix_values
from .steering import vector_values


class DetectorKind(enum.Enum):
    """The seven detection statistics; ``*_NO`` variants ignore training data."""

    OGLRT = "oglrt"
    TGLRT = "tglrt"
    RAO = "rao"
    LHAMF = "lhamf"
    GLRT_NO = "glrt_no"
    RAO_NO = "rao_no"
    WALD_NO = "wald_no"

    @property
    def uses_training(self) -> bool:
        return self in (DetectorKind.OGLRT, DetectorKind.TGLRT,
                        DetectorKind.RAO, DetectorKind.LHAMF)


TRAINING_KINDS = (DetectorKind.OGLRT, DetectorKind.TGLRT,
                  DetectorKind.RAO, DetectorKind.LHAMF)
NO_TRAINING_KINDS = (DetectorKind.GLRT_NO, DetectorKind.RAO_NO, DetectorKind.WALD_NO)


@dataclass(frozen=True)
class DetectionOutcome:
    """All per-trial statistics plus the decomposition terms.

    ``lambda_prime`` in [0, 1) and ``lambda_dprime = lambda_prime /
    (1 - lambda_prime)`` are the equivalent forms of the one-step GLRT;
    ``loss_b`` in (0, 1] is the adaptivity loss factor tying the Rao and
    AMF-form statistics together (``rao = loss_b * lambda_dprime /
    (1 + lambda_dprime)``).
    """

    oglrt: float
    tglrt: float
    rao: float
    lhamf: float
    lambda_prime: float
    lambda_dprime: float
    loss_b: float


def doppler_power(omega) -> float:
    """``omega^T omega^*`` as a real scalar; exactly ``k`` for unit-modulus ramps."""
    w = vector_values(omega)
    mags = np.abs(w)
    if np.all(np.abs(mags - 1.0) < 1e-12):
        return float(len(w))
    return float(np.sum(mags**2))


def _batched(z) -> tuple[np.ndarray, tuple[int, ...]]:
    arr = np.asarray(z, dtype=complex)
    if arr.ndim < 2:
        raise ValueError("cell-under-test data must be at least 2-D (mn x k)")
    lead = arr.shape[:-2]
    return arr.reshape((-1,) + arr.shape[-2:]), lead


def _check_dims(z: np.ndarray, a: np.ndarray, omega: np.ndarray) -> None:
    mn, k = z.shape[-2:]
    if len(a) != mn:
        raise ValueError(f"steering length {len(a)} != data rows {mn}")
    if len(omega) != k:
        raise ValueError(f"Doppler length {len(omega)} != snapshot count {k}")


def _quadratic_forms(gram: np.ndarray, a: np.ndarray, z_om: np.ndarray):
    """Solve ``gram x = [a, z_om]`` batched; return a^H x_a, a^H x_z, z^H x_z."""
    batch = gram.shape[0]
    rhs = np.empty((batch, len(a), 2), dtype=complex)
    rhs[:, :, 0] = a
    rhs[:, :, 1] = z_om
    sol = np.linalg.solve(gram, rhs)
    qa = np.real(np.einsum("i,bi->b", a.conj(), sol[:, :, 0]))
    qz = np.einsum("i,bi->b", a.conj(), sol[:, :, 1])
    zz = np.real(np.einsum("bi,bi->b", z_om.conj(), sol[:, :, 1]))
    return qa, qz, zz


def compute_statistics(
    z,
    s,
    a,
    omega,
    with_training: bool = True,
    with_no_training: bool = False,
) -> dict[str, np.ndarray]:
    """Compute all requested statistics for a (batch of) trial(s).

    Returns a dict with keys ``oglrt`` (the raw ratio, >= 1), ``tglrt``,
    ``rao``, ``lhamf``, ``lambda_prime``, ``lambda_dprime``, ``loss_b`` and,
    when ``with_no_training`` is set, ``glrt_no``, ``rao_no``, ``wald_no``.
    Values are arrays matching the leading batch shape of ``z``.
    """
    zb, lead = _batched(z)
    a_vec = vector_values(a).astype(complex)
    w = vector_values(omega).astype(complex)
    _check_dims(zb, a_vec, w)
    mn, k = zb.shape[-2:]
    u = w.conj() / np.sqrt(doppler_power(omega))

    z_om = zb @ u
    zz = zb @ zb.conj().swapaxes(-1, -2)
    g_perp = zz - z_om[:, :, None] * z_om.conj()[:, None, :]

    out: dict[str, np.ndarray] = {}
    if with_training:
        if s is None:
            raise ValueError("training-based statistics need a sample covariance")
        sb = np.asarray(matrix_values(s), dtype=complex)
        if sb.ndim == 2:
            sb = np.broadcast_to(sb, (zb.shape[0],) + sb.shape)
        else:
            sb = sb.reshape((-1,) + sb.shape[-2:])
        if sb.shape[-1] != mn:
            raise ValueError(f"sample covariance dim {sb.shape[-1]} != data rows {mn}")
        q1, q2, q3 = _quadratic_forms(sb + g_perp, a_vec, z_om)
        p1, p2, _ = _quadratic_forms(sb + zz, a_vec, z_om)
        t1, t2, _ = _quadratic_forms(sb, a_vec, z_om)
        lhamf = np.abs(q2) ** 2 / q1
        lam_p = lhamf / (1.0 + q3)
        out["oglrt"] = q1 / p1
        out["tglrt"] = np.abs(t2) ** 2 / t1
        out["rao"] = np.abs(p2) ** 2 / p1
        out["lhamf"] = lhamf
        out["lambda_prime"] = lam_p
        out["lambda_dprime"] = lam_p / (1.0 - lam_p)
        out["loss_b"] = 1.0 / (1.0 + q3 - lhamf)
    if with_no_training:
        if k <= mn:
            raise ValueError(
                f"training-free statistics need more snapshots than channels "
                f"(k={k} <= mn={mn}); the data Gram matrices are singular"
            )
        f1, f2, _ = _quadratic_forms(zz, a_vec, z_om)
        g1, g2, _ = _quadratic_forms(g_perp, a_vec, z_om)
        out["glrt_no"] = g1 / f1
        out["rao_no"] = np.abs(f2) ** 2 / f1
        out["wald_no"] = np.abs(g2) ** 2 / g1
    return {key: val.reshape(lead) for key, val in out.items()}


def _require_pd(s) -> np.ndarray:
    mat = np.asarray(matrix_values(s), dtype=complex)
    np.linalg.cholesky(mat)  # raises LinAlgError if not positive definite
    return mat


def _scalar(stats: dict[str, np.ndarray], key: str) -> float:
    return float(stats[key])


def oglrt(z, s, a, omega) -> float:
    """One-step GLRT ratio, always >= 1.

    Ratio of the steering quadratic form under the signal-free augmented
    Gram (training plus Doppler-rejected test data) to the one under the
    full Gram (training plus all test data).
    """
    return _scalar(compute_statistics(z, _require_pd(s), a, omega), "oglrt")


def tglrt(z, s, a, omega) -> float:
    """Two-step GLRT: matched-filter power of the Doppler-compressed snapshot
    after whitening by the training covariance alone."""
    return _scalar(compute_statistics(z, _require_pd(s), a, omega), "tglrt")


def rao(z, s, a, omega) -> float:
    """Rao score statistic, in [0, 1): matched-filter power whitened by the
    pooled training-plus-test Gram matrix."""
    return _scalar(compute_statistics(z, _require_pd(s), a, omega), "rao")


def lhamf(z, s, a, omega) -> float:
    """AMF-form statistic whitened by the augmented (signal-free) Gram."""
    return _scalar(compute_statistics(z, _require_pd(s), a, omega), "lhamf")


def decomposition(z, s, a, omega) -> DetectionOutcome:
    """All four statistics plus the equivalent forms and the loss factor.

    The returned terms satisfy, to numerical precision: ``oglrt = 1 /
    (1 - lambda_prime)``, ``lambda_dprime = lambda_prime / (1 -
    lambda_prime)``, ``rao * lhamf = lambda_prime * lambda_dprime`` and
    ``rao = loss_b * lambda_dprime / (1 + lambda_dprime)``.
    """
    stats = compute_statistics(z, _require_pd(s), a, omega)
    lam_p = _scalar(stats, "lambda_prime")
    if lam_p >= 1.0:
        raise np.linalg.LinAlgError(
            f"lambda_prime = {lam_p} >= 1; the Gram solves are numerically invalid"
        )
    return DetectionOutcome(
        oglrt=_scalar(stats, "oglrt"),
        tglrt=_scalar(stats, "tglrt"),
        rao=_scalar(stats, "rao"),
        lhamf=_scalar(stats, "lhamf"),
        lambda_prime=lam_p,
        lambda_dprime=_scalar(stats, "lambda_dprime"),
        loss_b=_scalar(stats, "loss_b"),
    )


def glrt_no(z, a, omega, s=None) -> float:
    """Training-free GLRT ratio; needs more snapshots than channels.

    By default both quadratic forms use the raw data Grams.  Passing a
    training covariance ``s`` switches the denominator to the variant where
    the test data (but not the steering vector) is pre-whitened by its
    Cholesky factor; this mixed-scale variant exists only for comparison.
    """
    stats = compute_statistics(z, None, a, omega, with_training=False,
                               with_no_training=True)
    if s is None:
        return _scalar(stats, "glrt_no")
    a_vec = vector_values(a).astype(complex)
    w = vector_values(omega).astype(complex)
    zb, _ = _batched(z)
    _check_dims(zb, a_vec, w)
    u = w.conj() / np.sqrt(doppler_power(omega))
    z_om = zb @ u
    zz = zb @ zb.conj().swapaxes(-1, -2)
    g_perp = zz - z_om[:, :, None] * z_om.conj()[:, None, :]
    numer, _, _ = _quadratic_forms(g_perp, a_vec, z_om)
    chol = np.linalg.cholesky(np.asarray(matrix_values(s), dtype=complex))
    zt = np.linalg.solve(chol, zb)
    zzt = zt @ zt.conj().swapaxes(-1, -2)
    denom, _, _ = _quadratic_forms(zzt, a_vec, zt @ u)
    return float(numer[0] / denom[0])


def rao_no(z, a, omega) -> float:
    """Training-free Rao statistic; needs more snapshots than channels."""
    return _scalar(
        compute_statistics(z, None, a, omega, with_training=False,
                           with_no_training=True),
        "rao_no",
    )


def wald_no(z, a, omega) -> float:
    """Training-free Wald statistic; needs more snapshots than channels."""
    return _scalar(
        compute_statistics(z, None, a, omega, with_training=False,
                           with_no_training=True),
        "wald_no",
    )


def noncentrality_alpha(xi, omega, a, r) -> float:
    """Output-SNR noncentrality ``|xi|^2 (omega^T omega^*) (a^H R^{-1} a)``."""
    amp = complex(getattr(xi, "xi", xi))
    a_vec = vector_values(a).astype(complex)
    cov = np.asarray(getattr(r, "values", r), dtype=complex)
    whitened = float(np.real(a_vec.conj() @ np.linalg.solve(cov, a_vec)))
    return abs(amp) ** 2 * doppler_power(omega) * whitened


def decision_statistics(
    z, s, a, omega, kinds
) -> dict[DetectorKind, np.ndarray]:
    """Per-kind decision statistics for threshold comparison.

    The one-step GLRT is mapped to its shifted form ``oglrt - 1`` (equal to
    ``lambda_dprime``), the scale on which its false-alarm law and
    thresholds are stated; every other kind uses its raw statistic.
    """
    kinds = tuple(kinds)
    want_training = any(k.uses_training for k in kinds)
    want_free = any(not k.uses_training for k in kinds)
    stats = compute_statistics(z, s if want_training else None, a, omega,
                               with_training=want_training,
                               with_no_training=want_free)
    out = {}
    for kind in kinds:
        if kind is DetectorKind.OGLRT:
            out[kind] = stats["oglrt"] - 1.0
        else:
            out[kind] = stats[kind.value]
    return out
