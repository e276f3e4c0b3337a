"""Monte Carlo trial engine: thresholds, detection curves, CFAR and comparison sweeps.

Every trial draws its own random stream from ``(seed, experiment-tag,
trial-index)``, so results are a pure function of the configuration and
seed, independent of batching and worker count.  Trials are simulated in
vectorized batches; failures in any trial abort the experiment with
context — with valid configurations a singular sample covariance has
probability zero, so an occurrence indicates a bug, not bad luck.
"""

from __future__ import annotations

import dataclasses
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import analysis
from .analysis import DofParams
from .detectors import (
    TRAINING_KINDS,
    DetectorKind,
    decision_statistics,
    noncentrality_alpha,
)
from .scenario import (
    Scenario,
    amplitude_for_snr,
    build_covariance,
    make_mismatched_steering,
    find_mismatched_doppler,
    standard_complex,
)
from .steering import doppler_vector, vector_values

BATCH_SIZE = 4096
WILSON_Z95 = 1.959963984540054
WILSON_Z99 = 2.5758293035489004


@dataclass(frozen=True)
class McConfig:
    """Trial counts, seed, and parallelism for one experiment.

    ``trials_threshold`` defaults to ``ceil(100 / pfa)`` so the empirical
    quantile rests on about 100 exceedances; ``trials_threshold * pfa``
    must be at least 10 for quantile stability.
    """

    pfa: float = 1e-3
    trials_threshold: int | None = None
    trials_pd: int = 10_000
    seed: int = 0
    workers: int | str = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.pfa < 1.0:
            raise ValueError("pfa must lie strictly between 0 and 1")
        if self.trials_pd < 1:
            raise ValueError("trials_pd must be at least 1")
        n = self.resolved_trials_threshold
        if n < 1:
            raise ValueError("trials_threshold must be at least 1")
        if n * self.pfa < 10.0:
            raise ValueError(
                f"trials_threshold * pfa = {n * self.pfa:.2f} < 10; "
                "the empirical quantile would be unstable"
            )
        if isinstance(self.workers, str) and self.workers != "auto":
            raise ValueError("workers must be a positive integer or 'auto'")
        if isinstance(self.workers, int) and self.workers < 1:
            raise ValueError("workers must be a positive integer or 'auto'")

    @property
    def resolved_trials_threshold(self) -> int:
        if self.trials_threshold is not None:
            return self.trials_threshold
        return int(np.ceil(100.0 / self.pfa))

    @property
    def resolved_workers(self) -> int:
        if self.workers == "auto":
            return max(1, min(os.cpu_count() or 1, 8))
        return int(self.workers)


def trial_rng(seed: int, experiment: str, index: int) -> np.random.Generator:
    """Independent per-trial stream keyed on (seed, experiment tag, trial index)."""
    tag = zlib.crc32(experiment.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=(seed, tag, index)))


@dataclass(frozen=True)
class TrialSpec:
    """Everything a worker needs to simulate trials of one experiment."""

    chol_r: np.ndarray
    steering: np.ndarray          # used by the detectors
    doppler: np.ndarray           # used by the detectors
    signal_steering: np.ndarray   # used to generate target returns
    signal_doppler: np.ndarray
    xi: complex
    l_cells: int

    @property
    def mn(self) -> int:
        return self.chol_r.shape[0]

    @property
    def k(self) -> int:
        return len(self.doppler)


def _spec_for(
    scenario: Scenario,
    xi: complex = 0j,
    covariance: np.ndarray | None = None,
    actual_steering=None,
    actual_doppler=None,
) -> TrialSpec:
    r = build_covariance(scenario) if covariance is None else np.asarray(covariance)
    a = scenario.target_steering().values
    w = scenario.doppler().values
    sig_a = vector_values(actual_steering) if actual_steering is not None else a
    sig_w = vector_values(actual_doppler) if actual_doppler is not None else w
    return TrialSpec(
        chol_r=np.linalg.cholesky(r),
        steering=a,
        doppler=w,
        signal_steering=sig_a,
        signal_doppler=sig_w,
        xi=complex(xi),
        l_cells=scenario.l_cells,
    )


def _simulate_range(
    spec: TrialSpec,
    kinds: tuple[DetectorKind, ...],
    seed: int,
    experiment: str,
    start: int,
    stop: int,
) -> dict[DetectorKind, np.ndarray]:
    mn, k, l = spec.mn, spec.k, spec.l_cells
    cols = (l + 1) * k
    signal = spec.xi * np.outer(spec.signal_steering, spec.signal_doppler)
    chunks: dict[DetectorKind, list[np.ndarray]] = {kind: [] for kind in kinds}
    pos = start
    while pos < stop:
        nb = min(BATCH_SIZE, stop - pos)
        raw = np.empty((nb, mn, cols), dtype=complex)
        for i in range(nb):
            rng = trial_rng(seed, experiment, pos + i)
            raw[i] = standard_complex(rng, mn, cols)
        colored = spec.chol_r[None, :, :] @ raw
        z = colored[:, :, :k]
        if spec.xi != 0j:
            z = z + signal[None, :, :]
        training = colored[:, :, k:]
        s = training @ training.conj().swapaxes(-1, -2)
        try:
            stats = decision_statistics(z, s, spec.steering, spec.doppler, kinds)
        except np.linalg.LinAlgError as err:
            raise np.linalg.LinAlgError(
                f"trials [{pos}, {pos + nb}) of experiment {experiment!r} failed: {err}"
            ) from err
        for kind in kinds:
            chunks[kind].append(stats[kind])
        pos += nb
    return {kind: np.concatenate(parts) for kind, parts in chunks.items()}


def _simulate_task(args):
    return _simulate_range(*args)


def simulate_statistics(
    spec: TrialSpec,
    kinds,
    n_trials: int,
    seed: int,
    experiment: str,
    workers: int = 1,
) -> dict[DetectorKind, np.ndarray]:
    """Decision statistics of ``n_trials`` independent trials, in trial order."""
    kinds = tuple(kinds)
    if workers <= 1 or n_trials < 2 * BATCH_SIZE:
        return _simulate_range(spec, kinds, seed, experiment, 0, n_trials)
    bounds = np.linspace(0, n_trials, workers + 1).astype(int)
    tasks = [
        (spec, kinds, seed, experiment, int(lo), int(hi))
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_simulate_task, tasks))
    return {
        kind: np.concatenate([part[kind] for part in parts]) for kind in kinds
    }


def wilson_interval(successes: int, n: int, z: float = WILSON_Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise ValueError("n must be at least 1")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class ThresholdEstimate:
    """Empirical (1 - pfa)-quantile of a detector's null statistic."""

    value: float
    ci_low: float
    ci_high: float
    se: float
    n_trials: int
    pfa: float


def _threshold_from_stats(stats: np.ndarray, pfa: float) -> ThresholdEstimate:
    n = len(stats)
    ordered = np.sort(stats)[::-1]
    rank = int(np.ceil(n * pfa))          # 1-based; strict ">" decisions
    spread = np.sqrt(n * pfa * (1.0 - pfa))
    lo_rank = max(1, int(np.ceil(rank - WILSON_Z95 * spread)))
    hi_rank = min(n, int(np.ceil(rank + WILSON_Z95 * spread)))
    ci_high = float(ordered[lo_rank - 1])
    ci_low = float(ordered[hi_rank - 1])
    se = (ci_high - ci_low) / (2.0 * WILSON_Z95)
    return ThresholdEstimate(
        value=float(ordered[rank - 1]),
        ci_low=ci_low,
        ci_high=ci_high,
        se=se,
        n_trials=n,
        pfa=pfa,
    )


def estimate_thresholds(
    kinds,
    scenario: Scenario,
    mc: McConfig,
    experiment: str = "threshold",
) -> dict[DetectorKind, ThresholdEstimate]:
    """Empirical thresholds for several detectors from one shared H0 run."""
    kinds = tuple(kinds)
    spec = _spec_for(scenario)
    stats = simulate_statistics(
        spec, kinds, mc.resolved_trials_threshold, mc.seed, f"{experiment}:h0",
        mc.resolved_workers,
    )
    return {kind: _threshold_from_stats(stats[kind], mc.pfa) for kind in kinds}


def threshold_sweep(
    kinds,
    scenario: Scenario,
    mc: McConfig,
    pfa_grid,
    experiment: str = "threshold",
) -> dict[DetectorKind, list[ThresholdEstimate]]:
    """Empirical thresholds over a grid of false-alarm levels.

    One shared H0 run sized for the smallest level (at least 100 expected
    exceedances unless ``trials_threshold`` is set explicitly) supplies
    every quantile.
    """
    kinds = tuple(kinds)
    grid = [float(p) for p in pfa_grid]
    if not grid or any(not 0.0 < p < 1.0 for p in grid):
        raise ValueError("pfa grid values must lie strictly between 0 and 1")
    min_pfa = min(grid)
    if mc.trials_threshold is not None:
        n = mc.trials_threshold
    else:
        n = int(np.ceil(100.0 / min_pfa))
    if n * min_pfa < 10.0:
        raise ValueError(
            f"trials_threshold * min(pfa) = {n * min_pfa:.2f} < 10; "
            "the smallest-level quantile would be unstable"
        )
    spec = _spec_for(scenario)
    stats = simulate_statistics(
        spec, kinds, n, mc.seed, f"{experiment}:h0", mc.resolved_workers,
    )
    return {
        kind: [_threshold_from_stats(stats[kind], p) for p in grid] for kind in kinds
    }


def estimate_threshold(
    detector: DetectorKind,
    scenario: Scenario,
    mc: McConfig,
    experiment: str = "threshold",
) -> float:
    """Empirical (1 - pfa)-quantile of the detector's null decision statistic.

    Runs ``trials_threshold`` independent H0 trials (fresh noise and fresh
    training per trial), sorts the statistics in descending order and
    returns the ``ceil(trials * pfa)``-th largest.
    """
    return estimate_thresholds([detector], scenario, mc, experiment)[detector].value


@dataclass(frozen=True)
class PdEstimate:
    """Empirical detection probability with a Wilson 95% interval."""

    pd: float
    ci_low: float
    ci_high: float
    n_trials: int


def estimate_pds(
    kinds,
    thresholds: dict[DetectorKind, float],
    scenario: Scenario,
    snr_db: float,
    mc: McConfig,
    experiment: str = "pd",
    actual_steering=None,
    actual_doppler=None,
) -> dict[DetectorKind, PdEstimate]:
    """Empirical PD for several detectors from one shared H1 run."""
    kinds = tuple(kinds)
    xi = amplitude_for_snr(snr_db, scenario.noise_power).xi
    spec = _spec_for(scenario, xi=xi, actual_steering=actual_steering,
                     actual_doppler=actual_doppler)
    stats = simulate_statistics(
        spec, kinds, mc.trials_pd, mc.seed,
        f"{experiment}:h1:snr={snr_db:.10g}", mc.resolved_workers,
    )
    out = {}
    for kind in kinds:
        hits = int(np.count_nonzero(stats[kind] > thresholds[kind]))
        lo, hi = wilson_interval(hits, mc.trials_pd)
        out[kind] = PdEstimate(pd=hits / mc.trials_pd, ci_low=lo, ci_high=hi,
                               n_trials=mc.trials_pd)
    return out


def estimate_pd(
    detector: DetectorKind,
    threshold: float,
    scenario: Scenario,
    snr_db: float,
    mc: McConfig,
    experiment: str = "pd",
) -> PdEstimate:
    """Fraction of H1 trials whose statistic exceeds ``threshold`` (strict)."""
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    return estimate_pds([detector], {detector: threshold}, scenario, snr_db,
                        mc, experiment)[detector]


@dataclass(frozen=True)
class Series:
    """One detector's curve: MC estimates, intervals, optional closed form."""

    label: str
    threshold: float
    estimates: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    closed_form: np.ndarray | None = None


@dataclass(frozen=True)
class CurveSet:
    """A family of curves over a common sweep axis."""

    x_kind: str
    x_values: np.ndarray
    series: tuple[Series, ...]
    pfa: float
    seed: int


def _scenario_dof(scenario: Scenario) -> DofParams:
    return DofParams.from_counts(scenario.l_cells, scenario.k_snapshots, scenario.cfg.mn)


def _closed_form_pd_curve(
    kind: DetectorKind,
    scenario: Scenario,
    snr_grid: np.ndarray,
    pfa: float,
    covariance: np.ndarray,
) -> np.ndarray:
    dof = _scenario_dof(scenario)
    threshold = analysis.threshold_for(kind, pfa, dof)
    a = scenario.target_steering()
    omega = scenario.doppler()
    values = []
    for snr_db in snr_grid:
        xi = amplitude_for_snr(float(snr_db), scenario.noise_power)
        alpha = noncentrality_alpha(xi, omega, a, covariance)
        values.append(analysis.pd_for(kind, threshold, alpha, dof))
    return np.asarray(values)


def pd_curve(
    scenario: Scenario,
    snr_grid,
    mc: McConfig,
    kinds=TRAINING_KINDS,
    with_closed_form: bool = True,
    experiment: str = "pd",
    actual_steering=None,
    actual_doppler=None,
) -> CurveSet:
    """Detection-probability curves versus SNR for several detectors.

    Thresholds follow the standard protocol: estimated from
    ``trials_threshold`` H0 trials at the configured false-alarm level,
    then ``trials_pd`` H1 trials per grid point.  When
    ``actual_steering``/``actual_doppler`` are given, the data are
    generated with those vectors while the detectors keep the nominal
    ones (mismatched-signal operation; closed forms are suppressed).
    """
    kinds = tuple(kinds)
    snr_grid = np.asarray(snr_grid, dtype=float)
    mismatched = actual_steering is not None or actual_doppler is not None
    thresholds = estimate_thresholds(kinds, scenario, mc, experiment)
    per_kind = {kind: [] for kind in kinds}
    for snr_db in snr_grid:
        ests = estimate_pds(
            kinds, {k: thresholds[k].value for k in kinds}, scenario,
            float(snr_db), mc, experiment,
            actual_steering=actual_steering, actual_doppler=actual_doppler,
        )
        for kind in kinds:
            per_kind[kind].append(ests[kind])
    covariance = build_covariance(scenario)
    series = []
    for kind in kinds:
        closed = None
        if with_closed_form and not mismatched and analysis.has_closed_form(kind):
            closed = _closed_form_pd_curve(kind, scenario, snr_grid, mc.pfa, covariance)
        series.append(
            Series(
                label=kind.value,
                threshold=thresholds[kind].value,
                estimates=np.array([e.pd for e in per_kind[kind]]),
                ci_low=np.array([e.ci_low for e in per_kind[kind]]),
                ci_high=np.array([e.ci_high for e in per_kind[kind]]),
                closed_form=closed,
            )
        )
    return CurveSet(x_kind="snr_db", x_values=snr_grid, series=tuple(series),
                    pfa=mc.pfa, seed=mc.seed)


@dataclass(frozen=True)
class CfarRow:
    detector: str
    case: str
    threshold: float
    pfa_hat: float
    ci_low: float
    ci_high: float
    target: float
    passed: bool


@dataclass(frozen=True)
class CfarReport:
    rows: tuple[CfarRow, ...]
    pfa: float
    seed: int

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)


def cfar_check(
    kinds,
    scenario: Scenario,
    covariances,
    mc: McConfig,
    thresholds: dict[DetectorKind, float] | None = None,
    experiment: str = "cfar",
    z: float = WILSON_Z99,
) -> CfarReport:
    """Empirical false-alarm rate at fixed thresholds under alternative covariances.

    ``covariances`` is a sequence of ``(label, matrix)`` pairs.  Thresholds
    default to the closed-form values where one exists, and to an MC
    estimate under identity covariance otherwise.  All cases share trial
    streams, so exactly scale-invariant statistics produce exactly equal
    rates.  A case passes when the target false-alarm level lies inside the
    Wilson interval at the given ``z`` (default 99%).
    """
    kinds = tuple(kinds)
    dof = _scenario_dof(scenario)
    if thresholds is None:
        thresholds = {}
        need_mc = [k for k in kinds if not analysis.has_closed_form(k)]
        for kind in kinds:
            if analysis.has_closed_form(kind):
                thresholds[kind] = analysis.threshold_for(kind, mc.pfa, dof)
        if need_mc:
            white = _spec_for(scenario, covariance=np.eye(scenario.cfg.mn))
            stats = simulate_statistics(
                white, need_mc, mc.resolved_trials_threshold, mc.seed,
                f"{experiment}:h0ref", mc.resolved_workers,
            )
            for kind in need_mc:
                thresholds[kind] = _threshold_from_stats(stats[kind], mc.pfa).value
    n = mc.resolved_trials_threshold
    rows = []
    for label, cov in covariances:
        spec = _spec_for(scenario, covariance=np.asarray(cov))
        stats = simulate_statistics(
            spec, kinds, n, mc.seed, f"{experiment}:h0", mc.resolved_workers,
        )
        for kind in kinds:
            hits = int(np.count_nonzero(stats[kind] > thresholds[kind]))
            lo, hi = wilson_interval(hits, n, z=z)
            rows.append(
                CfarRow(
                    detector=kind.value,
                    case=label,
                    threshold=float(thresholds[kind]),
                    pfa_hat=hits / n,
                    ci_low=lo,
                    ci_high=hi,
                    target=mc.pfa,
                    passed=lo <= mc.pfa <= hi,
                )
            )
    return CfarReport(rows=tuple(rows), pfa=mc.pfa, seed=mc.seed)


def mismatch_sweep(
    scenario: Scenario,
    cos2_spatial_target: float,
    cos2_doppler_target: float,
    snr_grid,
    mc: McConfig,
    kinds=TRAINING_KINDS,
    experiment: str = "mismatch",
) -> CurveSet:
    """PD curves when the data carry a mismatched steering vector and/or Doppler.

    The data-generation vectors sit at the requested generalized-cosine
    targets (in the true-covariance metric for the spatial part, on the
    Doppler manifold for the slow-time part) while the detectors keep the
    nominal vectors.  No closed form exists under mismatch, so the curves
    are Monte Carlo only.  Targets of 1 reproduce the matched curves.
    """
    if not 0.0 < cos2_spatial_target <= 1.0 or not 0.0 < cos2_doppler_target <= 1.0:
        raise ValueError("cos2 targets must lie in (0, 1]")
    covariance = build_covariance(scenario)
    actual_a = None
    if cos2_spatial_target < 1.0:
        actual_a = make_mismatched_steering(
            scenario.target_steering(), cos2_spatial_target, covariance
        )
    actual_w = None
    if cos2_doppler_target < 1.0:
        f_actual = find_mismatched_doppler(
            scenario.f_d, cos2_doppler_target, scenario.k_snapshots
        )
        actual_w = doppler_vector(f_actual, scenario.k_snapshots)
    return pd_curve(
        scenario, snr_grid, mc, kinds=kinds, with_closed_form=False,
        experiment=experiment, actual_steering=actual_a, actual_doppler=actual_w,
    )


def compare_fda_mimo(
    scenario: Scenario,
    snr_grid,
    mc: McConfig,
    kinds=TRAINING_KINDS,
    experiment: str = "compare",
) -> CurveSet:
    """Identical detection protocol with the configured frequency offset and with zero offset.

    Zeroing the transmit frequency offset removes the range dependence of
    the steering vectors (plain MIMO operation), which collapses any
    deceptive jammer at the target angle onto the target's spatial
    signature.  Both variants share trial streams, so the comparison is
    paired and the two variants coincide exactly when the scenario already
    has zero offset.  Series labels carry ``@fda`` / ``@mimo`` suffixes.
    """
    snr_grid = np.asarray(snr_grid, dtype=float)
    mimo_cfg = dataclasses.replace(scenario.cfg, delta_f=0.0)
    mimo_scenario = dataclasses.replace(scenario, cfg=mimo_cfg)
    all_series = []
    for tag, scen in (("fda", scenario), ("mimo", mimo_scenario)):
        curves = pd_curve(scen, snr_grid, mc, kinds=kinds, experiment=experiment)
        for s in curves.series:
            all_series.append(dataclasses.replace(s, label=f"{s.label}@{tag}"))
    return CurveSet(x_kind="snr_db", x_values=snr_grid, series=tuple(all_series),
                    pfa=mc.pfa, seed=mc.seed)
