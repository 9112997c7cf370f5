"""Multiscale pyramid transforms for manifold-valued periodic sequences.

The package builds non-interpolating pyramid representations from a pair of
operators: B-spline subdivision for upsampling and a convolutional inverse of
the even-indexed sub-mask for downsampling.  The linear transform on flat
space carries over to Riemannian data (unit sphere, symmetric positive
definite matrices) by replacing affine averages with weighted Karcher means
and storing details as tangent vectors.  Applications include detail-decay
diagnostics, thresholding denoisers, and anomaly detection.
"""

from __future__ import annotations

from .applications import (
    Anomaly,
    AnomalyFlag,
    DecayReport,
    NoiseModel,
    add_noise,
    detect_anomalies,
    flower_curve,
    p_min_report,
    spd_curve,
    threshold_denoise,
    threshold_pyramid,
)
from .decimation import DecimationSolution, normalize, solve_decimation, truncate
from .errors import GeoPyramidError, MaskError, NumericalError, ValidationError
from .linear_pyramid import (
    BoundConstants,
    LinearPyramid,
    PeriodicSequence,
    analyze,
    bound_constants,
    decimate,
    decimation_cascade,
    subdivide,
    synthesize,
)
from .manifold_pyramid import (
    DetailLayer,
    ManifoldPyramid,
    ManifoldSequence,
    SafetyConstants,
    m_analyze,
    m_synthesize,
    manifold_cascade,
    safety_constants,
    t_subdivide,
    y_decimate,
)
from .manifolds import SPD, Euclidean, Manifold, MeanOptions, Sphere, get_manifold
from .masks import Mask, MaskConstants, bspline_mask, mask_constants

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Anomaly",
    "AnomalyFlag",
    "BoundConstants",
    "DecayReport",
    "DecimationSolution",
    "DetailLayer",
    "Euclidean",
    "GeoPyramidError",
    "LinearPyramid",
    "Manifold",
    "ManifoldPyramid",
    "ManifoldSequence",
    "Mask",
    "MaskConstants",
    "MaskError",
    "MeanOptions",
    "NoiseModel",
    "NumericalError",
    "PeriodicSequence",
    "SafetyConstants",
    "SPD",
    "Sphere",
    "ValidationError",
    "add_noise",
    "analyze",
    "bound_constants",
    "bspline_mask",
    "decimate",
    "decimation_cascade",
    "detect_anomalies",
    "flower_curve",
    "get_manifold",
    "m_analyze",
    "m_synthesize",
    "manifold_cascade",
    "mask_constants",
    "normalize",
    "p_min_report",
    "safety_constants",
    "solve_decimation",
    "spd_curve",
    "subdivide",
    "synthesize",
    "t_subdivide",
    "threshold_denoise",
    "threshold_pyramid",
    "truncate",
    "y_decimate",
]
