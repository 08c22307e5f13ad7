"""Quantum interference in multiport linear-optical devices.

Simulate quantum and classical multiphoton coincidence statistics through
arbitrary complex transition matrices, model HOM dip/peak traces with
temporal distinguishability, and recover an unknown device's complex
transition matrix from intensity magnitudes plus a measured two-photon
visibility matrix, with no phase-sensitive measurement.
"""

from .base import BaseEstimator
from .dips import (
    DipFit,
    DipFitter,
    DipTrace,
    SPEED_OF_LIGHT,
    SpectralSetup,
    calibrate_jitter_sigma,
    coherence_sigma,
    combined_coherence_sigma,
    correct_accidentals,
    dip_envelope_fwhm,
    fit_dip,
    jitter_visibility,
    synthesize_trace,
)
from .errors import (
    DegenerateDataError,
    FitFailureError,
    GaugeAnchorError,
    MultiportError,
    NotFittedError,
    ParseError,
    ReconstructionError,
    ShapeError,
    SizeLimitError,
    ValidationError,
)
from .interference import (
    ModePair,
    VisibilityMatrix,
    classical_coincidence,
    coincidence_grids,
    mode_pairs,
    output_distribution,
    quantum_coincidence,
    visibility,
    visibility_matrix,
)
from .matrices import (
    GaugeClass,
    TransitionMatrix,
    canonical_gauge,
    gauge_equivalent,
    ideal_2x2,
    ideal_4x4,
    make_transition_matrix,
    random_unitary,
)
from .permanents import permanent, permanent_bruteforce
from .reconstruction import (
    MagnitudeGrid,
    MatrixReconstructor,
    ReconstructionOptions,
    ReconstructionResult,
    ResidualRow,
    candidate_report,
    evaluate_candidate,
    objective,
    parameterize,
    reconstruct,
    residual_report,
)

__version__ = "0.1.0"

__all__ = [
    "BaseEstimator",
    "DegenerateDataError",
    "DipFit",
    "DipFitter",
    "DipTrace",
    "FitFailureError",
    "GaugeAnchorError",
    "GaugeClass",
    "MagnitudeGrid",
    "MatrixReconstructor",
    "ModePair",
    "MultiportError",
    "NotFittedError",
    "ParseError",
    "ReconstructionError",
    "ReconstructionOptions",
    "ReconstructionResult",
    "ResidualRow",
    "SPEED_OF_LIGHT",
    "ShapeError",
    "SizeLimitError",
    "SpectralSetup",
    "TransitionMatrix",
    "ValidationError",
    "VisibilityMatrix",
    "calibrate_jitter_sigma",
    "candidate_report",
    "canonical_gauge",
    "classical_coincidence",
    "coherence_sigma",
    "coincidence_grids",
    "combined_coherence_sigma",
    "correct_accidentals",
    "dip_envelope_fwhm",
    "evaluate_candidate",
    "fit_dip",
    "gauge_equivalent",
    "ideal_2x2",
    "ideal_4x4",
    "jitter_visibility",
    "make_transition_matrix",
    "mode_pairs",
    "objective",
    "output_distribution",
    "parameterize",
    "permanent",
    "permanent_bruteforce",
    "quantum_coincidence",
    "random_unitary",
    "reconstruct",
    "residual_report",
    "synthesize_trace",
    "visibility",
    "visibility_matrix",
]
