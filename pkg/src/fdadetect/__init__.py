"""Adaptive target detection for frequency-offset (FDA) MIMO radar.

Library layout:

- :mod:`fdadetect.steering` — array geometry and signal-model vectors
- :mod:`fdadetect.scenario` — interference covariances, data synthesis, mismatch
- :mod:`fdadetect.numerics` — Hermitian linear algebra, special functions, quadrature
- :mod:`fdadetect.detectors` — the seven detection statistics
- :mod:`fdadetect.analysis` — closed-form false-alarm/detection laws and thresholds
- :mod:`fdadetect.montecarlo` — reproducible trial engine and experiment sweeps
- :mod:`fdadetect.config` / :mod:`fdadetect.cli` — experiment runner surface
"""

from .analysis import DofParams, RocPoint, roc_curve
from .detectors import DetectorKind, DetectionOutcome, decomposition
from .montecarlo import CurveSet, McConfig, estimate_pd, estimate_threshold
from .scenario import Amplitude, DataSet, Jammer, Scenario, build_covariance, synthesize
from .steering import ArrayConfig, DopplerVector, SteeringVector, joint_steering

__version__ = "0.1.0"

__all__ = [
    "Amplitude",
    "ArrayConfig",
    "CurveSet",
    "DataSet",
    "DetectionOutcome",
    "DetectorKind",
    "DofParams",
    "DopplerVector",
    "Jammer",
    "McConfig",
    "RocPoint",
    "Scenario",
    "SteeringVector",
    "build_covariance",
    "decomposition",
    "estimate_pd",
    "estimate_threshold",
    "joint_steering",
    "roc_curve",
    "synthesize",
    "__version__",
]
