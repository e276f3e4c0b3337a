"""Closed-form laws: exact inversions, consistency, and independent oracles."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats

from fdadetect import analysis
from fdadetect.analysis import DofParams, roc_curve, signal_cdf
from fdadetect.detectors import DetectorKind

REFERENCE_DOF = DofParams.from_counts(4, 6, 12)   # mm=19, mm1=13, mn=12, lk1=30

THRESHOLDS = {
    DetectorKind.OGLRT: analysis.threshold_oglrt,
    DetectorKind.TGLRT: analysis.threshold_tglrt,
    DetectorKind.RAO: analysis.threshold_rao,
    DetectorKind.LHAMF: analysis.threshold_lhamf,
}
PDS = {
    DetectorKind.OGLRT: analysis.pd_oglrt,
    DetectorKind.TGLRT: analysis.pd_tglrt,
    DetectorKind.RAO: analysis.pd_rao,
    DetectorKind.LHAMF: analysis.pd_lhamf,
}
PFAS = {
    DetectorKind.OGLRT: analysis.pfa_oglrt,
    DetectorKind.TGLRT: analysis.pfa_tglrt,
    DetectorKind.RAO: analysis.pfa_rao,
    DetectorKind.LHAMF: analysis.pfa_lhamf,
}


def test_dof_params():
    dof = REFERENCE_DOF
    assert (dof.mm, dof.mm1, dof.mn, dof.lk1) == (19, 13, 12, 30)
    assert dof.dof_augmented == 18
    assert dof.dof_plain == 13
    assert dof.dof_rao == 29
    with pytest.raises(ValueError):
        DofParams.from_counts(1, 6, 12)   # mm1 = 6 - 12 + 1 < 1
    with pytest.raises(ValueError):
        DofParams(mm=5, mm1=3, mn=4, lk1=10)  # inconsistent mm


def test_exact_threshold_inversions():
    dof = REFERENCE_DOF
    assert_allclose(analysis.threshold_oglrt(1e-3, dof), 10 ** (3 / 18) - 1, rtol=1e-14)
    assert_allclose(analysis.threshold_oglrt(1e-2, dof), 10 ** (2 / 18) - 1, rtol=1e-14)
    assert_allclose(analysis.threshold_rao(1e-3, dof), 1 - 10 ** (-3 / 29), rtol=1e-14)
    assert_allclose(analysis.threshold_rao(1e-3, dof), 0.2120, atol=1e-4)
    for pfa in (1e-1, 1e-2, 1e-3, 1e-4):
        assert_allclose(analysis.pfa_oglrt(analysis.threshold_oglrt(pfa, dof), dof),
                        pfa, rtol=1e-12)
        assert_allclose(analysis.pfa_rao(analysis.threshold_rao(pfa, dof), dof),
                        pfa, rtol=1e-12)


def test_pfa_limits_and_domains():
    dof = REFERENCE_DOF
    assert analysis.pfa_oglrt(0.0, dof) == 1.0
    assert analysis.pfa_tglrt(0.0, dof) == pytest.approx(1.0, abs=1e-12)
    assert analysis.pfa_lhamf(0.0, dof) == pytest.approx(1.0, abs=1e-12)
    assert analysis.pfa_rao(0.0, dof) == 1.0
    with pytest.raises(ValueError):
        analysis.pfa_rao(1.0, dof)
    with pytest.raises(ValueError):
        analysis.pfa_oglrt(-0.1, dof)
    with pytest.raises(ValueError):
        analysis.threshold_oglrt(0.0, dof)


def test_bisection_thresholds_round_trip():
    dof = REFERENCE_DOF
    for pfa in (1e-1, 1e-2, 1e-3):
        lam_t = analysis.threshold_tglrt(pfa, dof)
        assert abs(analysis.pfa_tglrt(lam_t, dof) - pfa) < 1e-9
        lam_l = analysis.threshold_lhamf(pfa, dof)
        assert abs(analysis.pfa_lhamf(lam_l, dof) - pfa) < 1e-9
        # the augmented sample set is larger, so its threshold sits lower
        assert lam_l < lam_t


def test_null_consistency_all_detectors():
    # pd at the threshold with zero signal recovers the false-alarm level
    dof = REFERENCE_DOF
    for kind in THRESHOLDS:
        for pfa in (1e-1, 1e-2, 1e-3):
            lam = THRESHOLDS[kind](pfa, dof)
            assert abs(PDS[kind](lam, 0.0, dof) - pfa) < 1e-6, kind


def test_signal_cdf_binomial_identity():
    # zero noncentrality collapses the sum to the central power law
    for m in (1, 5, 19):
        for gamma in (0.0, 0.2, 1.0, 7.5):
            assert_allclose(signal_cdf(gamma, m, 0.0),
                            1.0 - (1.0 + gamma) ** (-m), rtol=1e-12, atol=1e-15)


def test_signal_cdf_against_quadrature_oracle():
    # the statistic is a noncentral/central ratio: P(X <= gamma * Y) with
    # X ~ ncx2(2, 2*delta), Y ~ chi2(2m); evaluate by outer quadrature
    for m, gamma, delta in [(8, 0.5, 4.0), (8, 2.0, 4.0), (18, 0.47, 25.0),
                            (13, 1.0, 0.5), (5, 0.1, 60.0)]:
        oracle, err = integrate.quad(
            lambda y: stats.ncx2.cdf(gamma * y, 2, 2 * delta) * stats.chi2.pdf(y, 2 * m),
            0, np.inf, limit=200,
        )
        assert err < 1e-6
        assert_allclose(signal_cdf(gamma, m, delta), oracle, rtol=1e-6, atol=1e-8)


def test_signal_cdf_extremes():
    assert signal_cdf(0.0, 7, 3.0) == 0.0
    assert signal_cdf(1e9, 7, 3.0) == pytest.approx(1.0, abs=1e-9)
    # huge noncentrality pushes the statistic far above any fixed threshold
    assert signal_cdf(0.5, 7, 5000.0) == pytest.approx(0.0, abs=1e-12)
    big = signal_cdf(2.0, 700, 1e4)  # overflow-prone regime stays finite
    assert 0.0 <= big <= 1.0


def test_pd_monotone_in_alpha():
    dof = REFERENCE_DOF
    alphas = [0.0, 2.0, 8.0, 20.0, 60.0, 200.0]
    for kind in PDS:
        lam = THRESHOLDS[kind](1e-3, dof)
        vals = [PDS[kind](lam, a, dof) for a in alphas]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:])), kind
        assert vals[-1] > 0.99


def test_pfa_strictly_decreasing():
    dof = REFERENCE_DOF
    lams = [0.0, 0.05, 0.2, 0.5, 0.9]
    for kind, fn in PFAS.items():
        vals = [fn(l, dof) for l in lams]
        assert all(b < a for a, b in zip(vals, vals[1:])), kind


def test_scalar_channel_degenerate_forms():
    dof = DofParams.from_counts(2, 3, 1)   # lk1 = 9, mn = 1
    lam = 0.35
    assert_allclose(analysis.pfa_tglrt(lam, dof), (1 + lam) ** (-dof.mm1), rtol=1e-12)
    assert_allclose(analysis.pfa_lhamf(lam, dof), (1 + lam) ** (-8), rtol=1e-12)
    assert_allclose(analysis.pd_rao(0.2, 0.0, dof), analysis.pfa_rao(0.2, dof), rtol=1e-9)
    assert_allclose(analysis.pd_oglrt(lam, 0.0, dof),
                    analysis.pfa_oglrt(lam, dof), rtol=1e-10)


def test_roc_curve():
    dof = REFERENCE_DOF
    points = roc_curve(DetectorKind.OGLRT, dof, [0.0], 1e-2)
    assert len(points) == 1
    assert points[0].pd == pytest.approx(1e-2, abs=1e-6)
    assert points[0].threshold == pytest.approx(10 ** (2 / 18) - 1, rel=1e-12)
    # decreasing pfa raises the threshold, every detector
    for kind in THRESHOLDS:
        ts = [roc_curve(kind, dof, [10.0], pfa)[0].threshold
              for pfa in (1e-1, 1e-2, 1e-3)]
        assert ts[0] < ts[1] < ts[2], kind
    labeled = roc_curve(DetectorKind.RAO, dof, [5.0, 10.0], 1e-2,
                        snr_db_grid=[0.0, 3.0])
    assert [p.snr_db for p in labeled] == [0.0, 3.0]
    assert labeled[0].pd <= labeled[1].pd
    with pytest.raises(ValueError):
        roc_curve(DetectorKind.GLRT_NO, dof, [1.0], 1e-2)


def test_dispatch_helpers():
    dof = REFERENCE_DOF
    assert analysis.has_closed_form(DetectorKind.LHAMF)
    assert not analysis.has_closed_form(DetectorKind.WALD_NO)
    assert analysis.threshold_for(DetectorKind.RAO, 1e-2, dof) == pytest.approx(
        analysis.threshold_rao(1e-2, dof))
    assert analysis.pfa_for(DetectorKind.TGLRT, 0.3, dof) == pytest.approx(
        analysis.pfa_tglrt(0.3, dof))
    assert analysis.pd_for(DetectorKind.OGLRT, 0.3, 5.0, dof) == pytest.approx(
        analysis.pd_oglrt(0.3, 5.0, dof))
    with pytest.raises(ValueError):
        analysis.threshold_for(DetectorKind.RAO_NO, 1e-2, dof)
