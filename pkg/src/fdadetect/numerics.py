"""Shared numerical kernels: Hermitian linear algebra, special functions, quadrature.

Argument errors raise ``ValueError``; numerical failures (singular matrices,
non-convergence) raise ``numpy.linalg.LinAlgError`` or ``ConvergenceError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

HERMITIAN_RTOL = 1e-10
CONDITION_LIMIT = 1e14
MAX_QUADRATURE_NODES = 2 ** 14


class ConvergenceError(RuntimeError):
    """An iterative numerical procedure failed to reach its tolerance."""


@dataclass(frozen=True)
class HermitianMatrix:
    """Square complex matrix, conjugate-symmetric to within 1e-10 relative."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("HermitianMatrix requires a square matrix")
        scale = max(np.abs(v).max(), 1.0)
        if np.abs(v - v.conj().T).max() > HERMITIAN_RTOL * scale:
            raise ValueError("matrix is not Hermitian within tolerance")

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class WhitenFactor:
    """Matrix ``w`` with ``w^H w`` equal to the inverse of the factored matrix."""

    w: np.ndarray


def matrix_values(s) -> np.ndarray:
    """Unwrap HermitianMatrix to a plain ndarray."""
    return np.asarray(getattr(s, "values", s))


def sample_covariance(training) -> HermitianMatrix:
    """Unnormalized sample covariance of the stacked training columns.

    ``training`` is a sequence of complex matrices sharing the row dimension;
    the result is the sum of their Gram matrices.  The pooled column count
    must exceed the row dimension, otherwise the estimate is singular and is
    rejected.  A numerically singular result (condition number beyond 1e14)
    raises ``LinAlgError``.
    """
    mats = [np.asarray(t) for t in training]
    if not mats:
        raise ValueError("training data is empty")
    dim = mats[0].shape[0]
    total_cols = sum(t.shape[1] for t in mats)
    if any(t.shape[0] != dim for t in mats):
        raise ValueError("training matrices must share their row dimension")
    if total_cols <= dim:
        raise ValueError(
            f"need more pooled training columns than the dimension "
            f"({total_cols} <= {dim}); the sample covariance would be singular"
        )
    s = np.zeros((dim, dim), dtype=complex)
    for t in mats:
        s += t @ t.conj().T
    s = 0.5 * (s + s.conj().T)
    if np.linalg.cond(s) > CONDITION_LIMIT:
        raise np.linalg.LinAlgError("sample covariance is numerically singular")
    return HermitianMatrix(s)


def whiten_factor(s) -> WhitenFactor:
    """Inverse Cholesky factor ``w`` of a positive definite matrix.

    With ``s = L L^H`` (lower Cholesky), returns ``w = L^{-1}``, so that
    ``w^H w = s^{-1}`` and statistics of whitened data ``(w z, w a)`` agree
    with the corresponding unwhitened solve forms.
    """
    mat = matrix_values(s)
    chol = np.linalg.cholesky(mat)
    w = np.linalg.solve(chol, np.eye(mat.shape[0], dtype=complex))
    return WhitenFactor(w)


def incomplete_gamma(iota: int, h: float) -> float:
    """Truncated exponential series ``exp(-h) * sum_{j=0..iota} h^j / j!``.

    Equals the regularized upper incomplete gamma function with integer
    shape ``iota + 1``; lies in (0, 1], is nondecreasing in ``iota`` and
    nonincreasing in ``h``.  Terms are assembled in the log domain for
    ``h > 50`` to avoid overflow of ``h^j``.
    """
    if iota < 0:
        raise ValueError("iota must be a nonnegative integer")
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    if h == 0.0:
        return 1.0
    if h <= 50.0:
        term = 1.0
        total = 1.0
        for j in range(1, iota + 1):
            term *= h / j
            total += term
        return float(math.exp(-h) * total)
    j = np.arange(iota + 1)
    log_terms = -h + j * math.log(h) - np.cumsum(np.concatenate(([0.0], np.log(j[1:]))))
    peak = log_terms.max()
    return float(min(1.0, math.exp(peak) * np.exp(log_terms - peak).sum()))


def log_beta(a: float, b: float) -> float:
    """Natural log of the Euler beta function."""
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def loss_factor_pdf(b, mm: int, mn: int):
    """Density ``b^mm (1-b)^(mn-2) / beta(mm+1, mn-1)`` on [0, 1].

    This is the adaptivity-loss law for a whitening filter estimated from
    finite data: ``mm`` is the effective one-sided degree-of-freedom count
    and ``mn`` the channel dimension.  For ``mn < 2`` the distribution
    degenerates to a point mass at 1 and the density is undefined.
    """
    if mn < 2:
        raise ValueError("loss factor is identically 1 for mn < 2; no density exists")
    if mm < 0:
        raise ValueError("mm must be nonnegative")
    b_arr = np.asarray(b, dtype=float)
    if np.any(b_arr < 0.0) or np.any(b_arr > 1.0):
        raise ValueError("loss factor values must lie in [0, 1]")
    log_norm = log_beta(mm + 1.0, mn - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pdf = mm * np.log(b_arr) + (mn - 2) * np.log1p(-b_arr) - log_norm
        out = np.where(np.isnan(log_pdf), 0.0, np.exp(log_pdf))
    # endpoint conventions: b=0 with mm=0 and b=1 with mn=2 keep the finite limit
    if mm == 0:
        out = np.where(b_arr == 0.0, np.exp((mn - 2) * np.log1p(-b_arr) - log_norm), out)
    if mn == 2:
        out = np.where(b_arr == 1.0, np.exp(mm * np.log(np.maximum(b_arr, 1e-300)) - log_norm), out)
    return out if out.ndim else float(out)


def integrate_unit_interval(f, tol: float = 1e-9, lo: float = 0.0) -> float:
    """Adaptive Gauss-Legendre integral of ``f`` over [lo, 1].

    ``f`` must accept an ndarray of nodes and return values of the same
    shape.  Composite 16-point Gauss-Legendre panels double from one panel
    until two successive estimates differ by less than ``tol``; exceeding
    2**14 total nodes raises ``ConvergenceError``.  Nodes are strictly
    interior, so integrable endpoint behavior is tolerated.
    """
    if not 0.0 <= lo < 1.0:
        raise ValueError("lo must lie in [0, 1)")
    base_nodes, base_weights = leggauss(16)
    panels = 1
    previous = None
    while panels * 16 <= MAX_QUADRATURE_NODES:
        edges = np.linspace(lo, 1.0, panels + 1)
        half = 0.5 * (edges[1] - edges[0])
        mids = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mids[:, None] + half * base_nodes[None, :]).ravel()
        value = half * float(np.sum(f(nodes).reshape(panels, 16) @ base_weights))
        if previous is not None and abs(value - previous) < tol:
            return value
        previous = value
        panels *= 2
    raise ConvergenceError(
        f"quadrature did not converge to {tol} within {MAX_QUADRATURE_NODES} nodes"
    )


def log_binomial(n: int, k: int) -> float:
    """Natural log of the binomial coefficient C(n, k) via log-gamma."""
    if k < 0 or k > n:
        raise ValueError(f"k={k} outside 0..{n}")
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
