"""Closed-form false-alarm and detection probabilities for the training-based detectors.

Every law here is stated on the detector's decision-statistic scale (for
the one-step GLRT that is the shifted form ``lam = ratio - 1``; see
:mod:`fdadetect.detectors`) and is free of the unknown covariance — the
constant-false-alarm-rate property.  The effective sample counts are
``l_cells * k`` pooled training columns for the plain sample covariance and
``(l_cells + 1) * k - 1`` for the augmented one (training plus the
Doppler-rejected test columns, which contribute one fewer independent
column than a full snapshot set).  The derived one-sided degree-of-freedom
counts below are validated against Monte Carlo quantiles by the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detectors import DetectorKind
from .numerics import ConvergenceError, integrate_unit_interval, loss_factor_pdf

PD_QUADRATURE_TOL = 1e-9
PFA_QUADRATURE_TOL = 1e-12
THRESHOLD_PFA_TOL = 1e-10


@dataclass(frozen=True)
class DofParams:
    """Degree-of-freedom bookkeeping for one (l_cells, k, mn) configuration.

    ``mm = (L+1)K - MN + 1`` and ``mm1 = LK - MN + 1`` are the conventional
    margin counts; ``lk1 = (L+1)K`` the pooled column count including the
    test cell; ``mn`` the channel dimension.
    """

    mm: int
    mm1: int
    mn: int
    lk1: int

    def __post_init__(self) -> None:
        if self.mm < 1 or self.mm1 < 1:
            raise ValueError("mm and mm1 must be at least 1 (not enough training data)")
        if self.mn < 1:
            raise ValueError("mn must be at least 1")
        if self.mm != self.lk1 - self.mn + 1:
            raise ValueError("inconsistent DofParams: mm != lk1 - mn + 1")
        if self.dof_augmented < 1:
            raise ValueError("need lk1 > mn for the augmented-whitening laws")

    @classmethod
    def from_counts(cls, l_cells: int, k_snapshots: int, mn: int) -> "DofParams":
        lk1 = (l_cells + 1) * k_snapshots
        return cls(mm=lk1 - mn + 1, mm1=l_cells * k_snapshots - mn + 1, mn=mn, lk1=lk1)

    @property
    def dof_augmented(self) -> int:
        """One-sided DoF after whitening by the augmented sample set: lk1 - mn."""
        return self.lk1 - self.mn

    @property
    def dof_plain(self) -> int:
        """One-sided DoF after whitening by the training-only sample set: mm1."""
        return self.mm1

    @property
    def dof_rao(self) -> int:
        """Exponent of the Rao false-alarm law: lk1 - 1."""
        return self.lk1 - 1


@dataclass(frozen=True)
class RocPoint:
    pfa: float
    threshold: float
    pd: float
    snr_db: float


def _logsumexp(arr: np.ndarray, axis: int) -> np.ndarray:
    peak = np.max(arr, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        return np.squeeze(peak, axis=axis) + np.log(
            np.sum(np.exp(arr - peak), axis=axis)
        )


def signal_cdf(gamma, m: int, delta):
    """Conditional CDF of the whitened matched-filter statistic at ``gamma``.

    ``m`` is the one-sided DoF count and ``delta`` the (conditional)
    noncentrality; ``delta = 0`` reduces to ``1 - (1 + gamma)^-m``.  The
    finite binomial-times-truncated-exponential sum is assembled entirely
    in the log domain so large ``m`` and ``delta`` cannot overflow.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    gamma_arr, delta_arr = np.broadcast_arrays(
        np.asarray(gamma, dtype=float), np.asarray(delta, dtype=float)
    )
    if np.any(gamma_arr < 0.0) or np.any(delta_arr < 0.0):
        raise ValueError("gamma and delta must be nonnegative")
    shape = gamma_arr.shape
    g = gamma_arr.ravel()
    hbar = delta_arr.ravel() / (1.0 + g)

    j = np.arange(m, dtype=float)
    lgamma_j1 = np.array([math.lgamma(x + 1.0) for x in j])
    with np.errstate(divide="ignore"):
        log_h = np.where(hbar > 0.0, np.log(np.where(hbar > 0.0, hbar, 1.0)), -np.inf)
        log_g = np.where(g > 0.0, np.log(np.where(g > 0.0, g, 1.0)), -np.inf)
    # log IG_{i+1}(hbar) as a running log-sum over the truncated series
    with np.errstate(invalid="ignore"):
        terms = -hbar[None, :] + j[:, None] * log_h[None, :] - lgamma_j1[:, None]
    terms = np.where((hbar[None, :] == 0.0) & (j[:, None] == 0.0), -hbar[None, :], terms)
    log_ig = np.logaddexp.accumulate(terms, axis=0)
    log_ig = np.minimum(log_ig, 0.0)

    lgm1 = math.lgamma(m + 1.0)
    log_coef = lgm1 - np.array([math.lgamma(i + 2.0) + math.lgamma(m - i) for i in range(m)])
    log_pow = (j[:, None] + 1.0) * log_g[None, :] - m * np.log1p(g)[None, :]
    total = _logsumexp(log_coef[:, None] + log_pow + log_ig, axis=0)
    out = np.where(g > 0.0, np.exp(total), 0.0)
    out = np.clip(out, 0.0, 1.0).reshape(shape)
    return float(out) if out.ndim == 0 else out


def _check_pfa(pfa: float) -> None:
    if not 0.0 < pfa < 1.0:
        raise ValueError("pfa must lie strictly between 0 and 1")


def pfa_oglrt(lam: float, dof: DofParams) -> float:
    """False-alarm probability of the one-step GLRT: ``(1 + lam)^-dof_augmented``."""
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    return float((1.0 + lam) ** (-dof.dof_augmented))


def threshold_oglrt(pfa: float, dof: DofParams) -> float:
    """Exact inverse of :func:`pfa_oglrt`."""
    _check_pfa(pfa)
    return float(pfa ** (-1.0 / dof.dof_augmented) - 1.0)


def pd_oglrt(lam: float, alpha: float, dof: DofParams, tol: float = PD_QUADRATURE_TOL) -> float:
    """Detection probability of the one-step GLRT at threshold ``lam``.

    Averages the conditional law over the adaptivity-loss density; the
    scalar-channel case (mn = 1) bypasses the quadrature since the loss is
    identically 1 there.
    """
    if lam < 0.0 or alpha < 0.0:
        raise ValueError("lam and alpha must be nonnegative")
    m = dof.dof_augmented
    if dof.mn == 1:
        return 1.0 - signal_cdf(lam, m, alpha)

    def integrand(b):
        return (1.0 - signal_cdf(lam, m, alpha * b)) * loss_factor_pdf(b, m, dof.mn)

    return float(np.clip(integrate_unit_interval(integrand, tol=tol), 0.0, 1.0))


def _amf_pfa(lam: float, m: int, mn: int) -> float:
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    if mn == 1:
        return float((1.0 + lam) ** (-m))

    def integrand(b):
        return (1.0 + lam * b) ** (-float(m)) * loss_factor_pdf(b, m, mn)

    return float(np.clip(integrate_unit_interval(integrand, tol=PFA_QUADRATURE_TOL), 0.0, 1.0))


def _amf_pd(lam: float, alpha: float, m: int, mn: int, tol: float) -> float:
    if lam < 0.0 or alpha < 0.0:
        raise ValueError("lam and alpha must be nonnegative")
    if mn == 1:
        return 1.0 - signal_cdf(lam, m, alpha)

    def integrand(b):
        return (1.0 - signal_cdf(lam * b, m, alpha * b)) * loss_factor_pdf(b, m, mn)

    return float(np.clip(integrate_unit_interval(integrand, tol=tol), 0.0, 1.0))


def _invert_decreasing(pfa_fn, pfa: float) -> float:
    """Bisection inverse of a strictly decreasing false-alarm law."""
    _check_pfa(pfa)
    hi = 1.0
    for _ in range(200):
        if pfa_fn(hi) < pfa:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("failed to bracket the threshold")
    lo = 0.0
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        value = pfa_fn(mid)
        if abs(value - pfa) <= THRESHOLD_PFA_TOL:
            return mid
        if value > pfa:
            lo = mid
        else:
            hi = mid
    raise ConvergenceError("threshold bisection did not converge")


def pfa_tglrt(lam: float, dof: DofParams) -> float:
    """False-alarm probability of the two-step GLRT (loss-averaged power law)."""
    return _amf_pfa(lam, dof.dof_plain, dof.mn)


def threshold_tglrt(pfa: float, dof: DofParams) -> float:
    return _invert_decreasing(lambda lam: pfa_tglrt(lam, dof), pfa)


def pd_tglrt(lam: float, alpha: float, dof: DofParams, tol: float = PD_QUADRATURE_TOL) -> float:
    return _amf_pd(lam, alpha, dof.dof_plain, dof.mn, tol)


def pfa_lhamf(lam: float, dof: DofParams) -> float:
    """False-alarm probability of the AMF-form detector on the augmented sample set."""
    return _amf_pfa(lam, dof.dof_augmented, dof.mn)


def threshold_lhamf(pfa: float, dof: DofParams) -> float:
    return _invert_decreasing(lambda lam: pfa_lhamf(lam, dof), pfa)


def pd_lhamf(lam: float, alpha: float, dof: DofParams, tol: float = PD_QUADRATURE_TOL) -> float:
    return _amf_pd(lam, alpha, dof.dof_augmented, dof.mn, tol)


def pfa_rao(lam: float, dof: DofParams) -> float:
    """False-alarm probability of the Rao test: ``(1 - lam)^(lk1 - 1)``."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("the Rao statistic lies in [0, 1); lam must too")
    return float((1.0 - lam) ** dof.dof_rao)


def threshold_rao(pfa: float, dof: DofParams) -> float:
    """Exact inverse of :func:`pfa_rao`."""
    _check_pfa(pfa)
    return float(1.0 - pfa ** (1.0 / dof.dof_rao))


def pd_rao(lam: float, alpha: float, dof: DofParams, tol: float = PD_QUADRATURE_TOL) -> float:
    """Detection probability of the Rao test at threshold ``lam``.

    The loss average runs over (lam, 1] only — below the threshold the
    conditional exceedance probability is zero; the integrand vanishes at
    the lower endpoint, which the interior-node quadrature tolerates.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("the Rao statistic lies in [0, 1); lam must too")
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    m = dof.dof_augmented
    if dof.mn == 1:
        return 1.0 - signal_cdf(lam / (1.0 - lam), m, alpha)

    def integrand(b):
        return (1.0 - signal_cdf(lam / (b - lam), m, alpha * b)) * loss_factor_pdf(
            b, m, dof.mn
        )

    return float(np.clip(integrate_unit_interval(integrand, tol=tol, lo=lam), 0.0, 1.0))


_THRESHOLD = {
    DetectorKind.OGLRT: threshold_oglrt,
    DetectorKind.TGLRT: threshold_tglrt,
    DetectorKind.RAO: threshold_rao,
    DetectorKind.LHAMF: threshold_lhamf,
}
_PFA = {
    DetectorKind.OGLRT: pfa_oglrt,
    DetectorKind.TGLRT: pfa_tglrt,
    DetectorKind.RAO: pfa_rao,
    DetectorKind.LHAMF: pfa_lhamf,
}
_PD = {
    DetectorKind.OGLRT: pd_oglrt,
    DetectorKind.TGLRT: pd_tglrt,
    DetectorKind.RAO: pd_rao,
    DetectorKind.LHAMF: pd_lhamf,
}


def has_closed_form(kind: DetectorKind) -> bool:
    return kind in _THRESHOLD


def threshold_for(kind: DetectorKind, pfa: float, dof: DofParams) -> float:
    """Closed-form threshold for one of the training-based detectors."""
    if kind not in _THRESHOLD:
        raise ValueError(f"no closed-form threshold for {kind.value}")
    return _THRESHOLD[kind](pfa, dof)


def pfa_for(kind: DetectorKind, lam: float, dof: DofParams) -> float:
    if kind not in _PFA:
        raise ValueError(f"no closed-form false-alarm law for {kind.value}")
    return _PFA[kind](lam, dof)


def pd_for(kind: DetectorKind, lam: float, alpha: float, dof: DofParams) -> float:
    if kind not in _PD:
        raise ValueError(f"no closed-form detection law for {kind.value}")
    return _PD[kind](lam, alpha, dof)


def roc_curve(
    detector: DetectorKind,
    dof: DofParams,
    alpha_grid,
    pfa: float,
    snr_db_grid=None,
) -> list[RocPoint]:
    """Threshold at the requested false-alarm level, then PD at each noncentrality."""
    threshold = threshold_for(detector, pfa, dof)
    alphas = np.atleast_1d(np.asarray(alpha_grid, dtype=float))
    if snr_db_grid is None:
        snrs = np.full(alphas.shape, np.nan)
    else:
        snrs = np.atleast_1d(np.asarray(snr_db_grid, dtype=float))
        if snrs.shape != alphas.shape:
            raise ValueError("snr_db_grid must match alpha_grid in length")
    return [
        RocPoint(pfa=pfa, threshold=threshold,
                 pd=pd_for(detector, threshold, float(alpha), dof), snr_db=float(snr))
        for alpha, snr in zip(alphas, snrs)
    ]
