"""Trial engine: determinism, threshold laws on a small case, sweep plumbing."""

import dataclasses

import numpy as np
import pytest

from fdadetect import analysis, montecarlo
from fdadetect.analysis import DofParams
from fdadetect.detectors import TRAINING_KINDS, DetectorKind, compute_statistics
from fdadetect.montecarlo import (
    McConfig,
    cfar_check,
    compare_fda_mimo,
    estimate_pd,
    estimate_threshold,
    estimate_thresholds,
    mismatch_sweep,
    pd_curve,
    simulate_statistics,
    threshold_sweep,
    trial_rng,
    wilson_interval,
)
from fdadetect.numerics import sample_covariance
from fdadetect.scenario import Amplitude, Scenario, synthesize
from fdadetect.steering import ArrayConfig

from conftest import HALF_WAVELENGTH


def small_scenario(l_cells: int = 2, k_snapshots: int = 3) -> Scenario:
    cfg = ArrayConfig(m_tx=2, n_rx=1, f0=2e9, delta_f=1e6,
                      d_t=HALF_WAVELENGTH, d_r=HALF_WAVELENGTH)
    return Scenario(cfg=cfg, k_snapshots=k_snapshots, l_cells=l_cells,
                    target_range=800.0, target_angle=0.35, f_d=0.2)


def test_mc_config_validation():
    with pytest.raises(ValueError):
        McConfig(pfa=0.0)
    with pytest.raises(ValueError):
        McConfig(pfa=1e-3, trials_threshold=500)  # 0.5 expected exceedances
    with pytest.raises(ValueError):
        McConfig(workers="many")
    with pytest.raises(ValueError):
        McConfig(workers=0)
    assert McConfig(pfa=1e-3).resolved_trials_threshold == 100_000
    assert McConfig(pfa=1e-2, trials_threshold=5000).resolved_trials_threshold == 5000


def test_trial_rng_is_keyed():
    a = trial_rng(7, "exp", 3).standard_normal(4)
    b = trial_rng(7, "exp", 3).standard_normal(4)
    c = trial_rng(7, "exp", 4).standard_normal(4)
    d = trial_rng(7, "other", 3).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_wilson_interval():
    lo, hi = wilson_interval(50, 1000)
    assert 0.0 <= lo < 0.05 < hi <= 1.0
    assert wilson_interval(0, 100)[0] == pytest.approx(0.0, abs=1e-12)
    assert wilson_interval(100, 100)[1] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        wilson_interval(1, 0)


def test_engine_matches_synthesize_path():
    scn = small_scenario()
    seed, tag = 123, "equiv:h0"
    spec = montecarlo._spec_for(scn)
    stats = simulate_statistics(spec, list(DetectorKind), 5, seed, tag)
    a = scn.target_steering()
    w = scn.doppler()
    for i in range(5):
        ds = synthesize(scn, Amplitude(0.0), "H0", trial_rng(seed, tag, i))
        s = sample_covariance(ds.training)
        single = compute_statistics(ds.z, s, a, w, with_no_training=True)
        for kind in DetectorKind:
            expected = single["oglrt"] - 1.0 if kind is DetectorKind.OGLRT \
                else single[kind.value]
            assert stats[kind][i] == pytest.approx(float(expected), rel=1e-10)


def test_threshold_determinism_and_workers():
    scn = small_scenario()
    mc = McConfig(pfa=1e-2, trials_threshold=9000, trials_pd=100, seed=99, workers=1)
    first = estimate_threshold(DetectorKind.OGLRT, scn, mc)
    second = estimate_threshold(DetectorKind.OGLRT, scn, mc)
    assert first == second
    mc2 = dataclasses.replace(mc, workers=2)
    parallel = estimate_threshold(DetectorKind.OGLRT, scn, mc2)
    assert parallel == first


def test_threshold_matches_analytic_laws():
    # small configuration: mn=2, lk1=9 -> exponents 7 (one-step) and 8 (Rao)
    scn = small_scenario()
    dof = DofParams.from_counts(2, 3, 2)
    mc = McConfig(pfa=1e-2, trials_threshold=30_000, trials_pd=100, seed=5)
    ests = estimate_thresholds(TRAINING_KINDS, scn, mc)
    for kind in TRAINING_KINDS:
        est = ests[kind]
        expected = analysis.threshold_for(kind, mc.pfa, dof)
        assert abs(est.value - expected) <= 3.0 * est.se, (kind, est.value, expected)
        assert est.ci_low <= est.value <= est.ci_high


def test_estimate_pd_extremes():
    scn = small_scenario()
    mc = McConfig(pfa=1e-2, trials_threshold=2000, trials_pd=4000, seed=17)
    thr = estimate_threshold(DetectorKind.RAO, scn, mc)
    quiet = estimate_pd(DetectorKind.RAO, thr, scn, -60.0, mc)
    assert quiet.ci_low <= mc.pfa <= quiet.ci_high + 0.005
    # the Rao statistic is capped by the loss factor, so its strong-signal
    # limit is P(B > threshold), a touch below one
    loud = estimate_pd(DetectorKind.RAO, thr, scn, 40.0, mc)
    dof = DofParams.from_counts(2, 3, 2)
    limit = analysis.pd_rao(thr, 1e9, dof)
    assert loud.ci_low <= limit <= loud.ci_high + 0.005
    assert loud.pd > 0.99
    # an unbounded statistic does reach one
    thr_o = estimate_threshold(DetectorKind.OGLRT, scn, mc)
    assert estimate_pd(DetectorKind.OGLRT, thr_o, scn, 40.0, mc).pd == 1.0
    with pytest.raises(ValueError):
        estimate_pd(DetectorKind.RAO, float("nan"), scn, 0.0, mc)


def test_pd_curve_monotone_and_closed_form():
    scn = small_scenario()
    mc = McConfig(pfa=1e-2, trials_threshold=20_000, trials_pd=3000, seed=31)
    grid = [-10.0, -4.0, 2.0, 8.0, 14.0]
    curves = pd_curve(scn, grid, mc)
    assert curves.x_kind == "snr_db"
    for series in curves.series:
        assert series.closed_form is not None
        assert np.all(series.estimates >= series.ci_low - 1e-12)
        assert np.all(series.estimates <= series.ci_high + 1e-12)
        # agreement with the closed form at moderate trial counts
        assert np.max(np.abs(series.estimates - series.closed_form)) < 0.05
        # monotone up to MC noise: isotonic-regression residual small
        fitted = _pava(series.estimates)
        pooled_se = np.mean(series.ci_high - series.ci_low) / (2 * 1.96)
        assert np.max(np.abs(series.estimates - fitted)) < 3 * pooled_se + 1e-9


def _pava(y):
    """Pool-adjacent-violators fit for a nondecreasing sequence."""
    values = list(map(float, y))
    weights = [1.0] * len(values)
    blocks = [[v, w, 1] for v, w in zip(values, weights)]
    merged = []
    for block in blocks:
        merged.append(block)
        while len(merged) > 1 and merged[-2][0] > merged[-1][0]:
            v2, w2, n2 = merged.pop()
            v1, w1, n1 = merged.pop()
            total = w1 + w2
            merged.append([(v1 * w1 + v2 * w2) / total, total, n1 + n2])
    out = []
    for value, _, count in merged:
        out.extend([value] * count)
    return np.asarray(out)


def test_mismatch_matched_limit_equals_pd_curve():
    scn = small_scenario()
    mc = McConfig(pfa=2e-2, trials_threshold=1500, trials_pd=800, seed=4)
    grid = [-5.0, 5.0]
    baseline = pd_curve(scn, grid, mc, with_closed_form=False, experiment="shared")
    matched = mismatch_sweep(scn, 1.0, 1.0, grid, mc, experiment="shared")
    for a, b in zip(baseline.series, matched.series):
        assert a.label == b.label
        assert np.array_equal(a.estimates, b.estimates)
        assert a.threshold == b.threshold


def test_mismatch_sweep_degrades():
    scn = small_scenario()
    mc = McConfig(pfa=2e-2, trials_threshold=3000, trials_pd=2500, seed=21)
    grid = [2.0]
    matched = mismatch_sweep(scn, 1.0, 1.0, grid, mc, experiment="mm")
    spatial = mismatch_sweep(scn, 0.3, 1.0, grid, mc, experiment="mm")
    for a, b in zip(matched.series, spatial.series):
        assert b.closed_form is None
        assert b.estimates[0] <= a.estimates[0] + 0.02


def test_compare_fda_mimo_zero_offset_coincides():
    scn = small_scenario()
    zero = dataclasses.replace(scn, cfg=dataclasses.replace(scn.cfg, delta_f=0.0))
    mc = McConfig(pfa=2e-2, trials_threshold=1500, trials_pd=600, seed=9)
    curves = compare_fda_mimo(zero, [0.0, 6.0], mc, kinds=[DetectorKind.OGLRT])
    by_label = {s.label: s for s in curves.series}
    assert set(by_label) == {"oglrt@fda", "oglrt@mimo"}
    assert np.array_equal(by_label["oglrt@fda"].estimates,
                          by_label["oglrt@mimo"].estimates)
    assert by_label["oglrt@fda"].threshold == by_label["oglrt@mimo"].threshold


def test_cfar_scale_invariance_is_exact():
    scn = small_scenario()
    mc = McConfig(pfa=1e-2, trials_threshold=5000, trials_pd=100, seed=13)
    eye = np.eye(scn.cfg.mn)
    report = cfar_check(TRAINING_KINDS, scn, [("identity", eye),
                                              ("scaled", 100.0 * eye)], mc)
    rates = {}
    for row in report.rows:
        rates.setdefault(row.detector, []).append(row.pfa_hat)
        assert row.passed, row
    for detector, values in rates.items():
        assert values[0] == values[1], detector  # shared streams + exact invariance
    assert report.all_passed


def test_threshold_sweep_monotone():
    scn = small_scenario()
    mc = McConfig(pfa=1e-2, trials_threshold=20_000, trials_pd=100, seed=2)
    grid = [0.1, 0.03, 0.01]
    sweep = threshold_sweep(TRAINING_KINDS, scn, mc, grid)
    for kind in TRAINING_KINDS:
        values = [est.value for est in sweep[kind]]
        assert values[0] < values[1] < values[2], kind
    with pytest.raises(ValueError):
        threshold_sweep(TRAINING_KINDS, scn, mc, [0.5, 2.0])
