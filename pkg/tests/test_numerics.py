"""Numerical kernels against independent oracles (scipy, closed forms)."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special, stats

from fdadetect.detectors import compute_statistics
from fdadetect.numerics import (
    ConvergenceError,
    HermitianMatrix,
    incomplete_gamma,
    integrate_unit_interval,
    log_binomial,
    loss_factor_pdf,
    sample_covariance,
    whiten_factor,
)

from conftest import random_complex, random_pd


def test_hermitian_matrix_validation(rng):
    mat = random_pd(rng, 4)
    assert HermitianMatrix(mat).dim == 4
    skew = mat.copy()
    skew[0, 1] += 1.0
    with pytest.raises(ValueError):
        HermitianMatrix(skew)


def test_sample_covariance_preconditions(rng):
    y = random_complex(rng, 4, 1)
    with pytest.raises(ValueError):
        sample_covariance([y])  # rank one: fewer columns than dimension
    with pytest.raises(np.linalg.LinAlgError):
        sample_covariance([np.zeros((3, 8), dtype=complex)])


def test_sample_covariance_wishart_mean(rng):
    # E[S] = (total columns) * R; Monte Carlo moment check at R = I
    dim, l_cells, k = 4, 2, 3
    reps = 10_000
    acc = np.zeros((dim, dim), dtype=complex)
    for _ in range(reps):
        mats = [random_complex(rng, dim, k) for _ in range(l_cells)]
        acc += sample_covariance(mats).values
    mean = acc / reps
    expected = l_cells * k * np.eye(dim)
    rel = np.linalg.norm(mean - expected) / np.linalg.norm(expected)
    assert rel < 0.05


def test_whiten_factor(rng):
    assert_allclose(whiten_factor(np.eye(3, dtype=complex)).w, np.eye(3), atol=1e-14)
    assert_allclose(whiten_factor(4.0 * np.eye(2, dtype=complex)).w,
                    0.5 * np.eye(2), atol=1e-14)
    s = random_pd(rng, 6)
    w = whiten_factor(s).w
    assert np.linalg.norm(w.conj().T @ w @ s - np.eye(6)) < 1e-10
    with pytest.raises(np.linalg.LinAlgError):
        whiten_factor(-np.eye(3))


def test_whitening_invariance(rng):
    # statistics from (w z, w a) with identity training equal the solve forms
    mn, k, l = 6, 4, 3
    for _ in range(20):
        z = random_complex(rng, mn, k)
        s = random_pd(rng, mn)
        a = random_complex(rng, mn)
        omega = np.exp(2j * np.pi * 0.2 * np.arange(k))
        w = whiten_factor(s).w
        direct = compute_statistics(z, s, a, omega)
        white = compute_statistics(w @ z, np.eye(mn, dtype=complex), w @ a, omega)
        for key in ("oglrt", "tglrt", "rao", "lhamf", "lambda_prime", "loss_b"):
            assert_allclose(white[key], direct[key], rtol=1e-9)


def test_rank_one_update_identity(rng):
    # (I + Q + u u^H)^{-1} equals the downdated inverse of (I + Q)
    for _ in range(25):
        mn, k = 5, 4
        z = random_complex(rng, mn, k)
        omega = np.exp(2j * np.pi * 0.13 * np.arange(k))
        u = omega.conj() / np.sqrt(k)
        z_om = z @ u
        g_perp = z @ z.conj().T - np.outer(z_om, z_om.conj())
        lhs = np.linalg.inv(np.eye(mn) + z @ z.conj().T)
        base = np.linalg.inv(np.eye(mn) + g_perp)
        denom = 1.0 + z_om.conj() @ base @ z_om
        rhs = base - (base @ np.outer(z_om, z_om.conj()) @ base) / denom
        assert np.abs(lhs - rhs).max() / np.abs(lhs).max() < 1e-9


def test_incomplete_gamma_values():
    assert incomplete_gamma(0, 0.0) == 1.0
    assert_allclose(incomplete_gamma(1, 1.0), 2.0 / math.e, rtol=1e-12)
    assert_allclose(incomplete_gamma(500, 3.0), 1.0, rtol=1e-12)
    with pytest.raises(ValueError):
        incomplete_gamma(-1, 1.0)
    with pytest.raises(ValueError):
        incomplete_gamma(2, -0.5)


def test_incomplete_gamma_against_scipy():
    # equals the regularized upper incomplete gamma Q(iota+1, h)
    for iota in (0, 1, 3, 10, 40):
        for h in (0.0, 0.3, 1.0, 12.0, 49.9, 55.0, 120.0, 800.0):
            assert_allclose(incomplete_gamma(iota, h),
                            special.gammaincc(iota + 1, h), rtol=1e-10, atol=1e-300)


def test_incomplete_gamma_monotonicity():
    hs = [0.1, 1.0, 5.0, 30.0, 70.0]
    for h in hs:
        vals = [incomplete_gamma(i, h) for i in range(0, 25)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
    for iota in (0, 2, 7):
        vals = [incomplete_gamma(iota, h) for h in hs]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_loss_factor_pdf():
    assert_allclose(loss_factor_pdf(0.5, 1, 3), 1.5, rtol=1e-12)
    total = integrate_unit_interval(lambda b: loss_factor_pdf(b, 1, 3), tol=1e-12)
    assert_allclose(total, 1.0, atol=1e-10)
    with pytest.raises(ValueError):
        loss_factor_pdf(0.5, 1, 1)
    with pytest.raises(ValueError):
        loss_factor_pdf(1.5, 1, 3)


def test_loss_factor_pdf_mode_and_scipy():
    mm, mn = 6, 5
    mode = mm / (mm + mn - 2)
    eps = 1e-4
    peak = loss_factor_pdf(mode, mm, mn)
    assert peak > loss_factor_pdf(mode - eps, mm, mn)
    assert peak > loss_factor_pdf(mode + eps, mm, mn)
    b = np.linspace(0.0, 1.0, 21)
    assert_allclose(loss_factor_pdf(b, mm, mn), stats.beta.pdf(b, mm + 1, mn - 1),
                    rtol=1e-10, atol=1e-12)


def test_integrate_unit_interval():
    assert_allclose(integrate_unit_interval(lambda x: np.ones_like(x)), 1.0, atol=1e-12)
    assert_allclose(integrate_unit_interval(lambda x: 6.0 * x * (1 - x)), 1.0, atol=1e-10)
    assert_allclose(integrate_unit_interval(lambda x: x**2), 1.0 / 3.0, atol=1e-12)
    assert_allclose(integrate_unit_interval(lambda x: x**2, lo=0.5),
                    (1.0 - 0.125) / 3.0, atol=1e-12)
    with pytest.raises(ValueError):
        integrate_unit_interval(lambda x: x, lo=1.0)
    with pytest.raises(ConvergenceError):
        integrate_unit_interval(lambda x: (x > 1 / np.pi).astype(float), tol=1e-13)


def test_log_binomial():
    assert_allclose(math.exp(log_binomial(19, 1)), 19.0, rtol=1e-12)
    assert log_binomial(7, 0) == pytest.approx(0.0, abs=1e-12)
    assert_allclose(log_binomial(30, 8), log_binomial(30, 22), rtol=1e-12)
    for n, k in ((5, 2), (40, 17), (100, 3)):
        assert_allclose(math.exp(log_binomial(n, k)), math.comb(n, k), rtol=1e-10)
    with pytest.raises(ValueError):
        log_binomial(4, 5)
