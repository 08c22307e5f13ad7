"""HOM dip/peak traces: spectral coherence model, synthesis, and fitting.

Delay axes are free-space path length in micrometers; spectral widths are
FWHM wavelength spreads. Photon spectra are modeled as Gaussians, for which
the two-photon interference envelope is analytic: with per-photon angular
frequency spreads sigma_1, sigma_2 the coincidence trace is

    counts(x) = scale * (C + gamma(x) * (Q - C)) + slope * x + accidentals

with gamma(x) = V_eff * exp(-(x/c)^2 * sigma_c^2) and the combined width
sigma_c^2 = 2 * sigma_1^2 * sigma_2^2 / (sigma_1^2 + sigma_2^2). Temporal
jitter in the multimode region suppresses V_eff; narrowing the filters
(lengthening the coherence time) restores it, which is the quantum-eraser
effect this module reproduces.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import least_squares

from .base import BaseEstimator
from .errors import FitFailureError, ValidationError
from .interference import ModePair, as_mode_pair, classical_coincidence, quantum_coincidence
from .matrices import TransitionMatrix
from .validation import check_finite_scalar

SPEED_OF_LIGHT = 2.99792458e8  # m/s, exact
_FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
MIN_FIT_SAMPLES = 8
DEFAULT_MAX_EVALUATIONS = 10_000


@dataclasses.dataclass(frozen=True)
class SpectralSetup:
    """Source wavelength and per-photon filter bandwidths, all in micrometers (FWHM)."""

    center_wavelength: float
    bandwidth_a: float
    bandwidth_b: float

    def __post_init__(self):
        for name in ("center_wavelength", "bandwidth_a", "bandwidth_b"):
            value = check_finite_scalar(name, getattr(self, name))
            if value <= 0:
                raise ValidationError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)
        if max(self.bandwidth_a, self.bandwidth_b) >= self.center_wavelength:
            raise ValidationError("bandwidths must be smaller than the center wavelength")


def coherence_sigma(setup: SpectralSetup) -> tuple[float, float]:
    """Per-photon angular-frequency RMS spreads (rad/s) for Gaussian spectra.

    A wavelength FWHM of dl at center wavelength l0 corresponds to
    sigma = 2*pi * (c * dl / l0^2) / (2*sqrt(2*ln 2)).
    """
    lam = setup.center_wavelength * 1e-6
    sigmas = []
    for bw in (setup.bandwidth_a, setup.bandwidth_b):
        dl = bw * 1e-6
        sigmas.append(2.0 * math.pi * (SPEED_OF_LIGHT * dl / lam**2) / _FWHM_PER_SIGMA)
    return (sigmas[0], sigmas[1])


def combined_coherence_sigma(setup: SpectralSetup) -> float:
    """Combined angular-frequency width sigma_c (rad/s) governing the dip envelope."""
    s1, s2 = coherence_sigma(setup)
    return math.sqrt(2.0 * s1**2 * s2**2 / (s1**2 + s2**2))


def dip_envelope_fwhm(setup: SpectralSetup) -> float:
    """FWHM of the interference envelope, in micrometers of path delay.

    In time the envelope exp(-(tau * sigma_c)^2) has FWHM 2*sqrt(ln 2)/sigma_c;
    multiplication by c converts to free-space path length.
    """
    sigma_c = combined_coherence_sigma(setup)
    return 2.0 * math.sqrt(math.log(2.0)) / sigma_c * SPEED_OF_LIGHT * 1e6


def jitter_visibility(v_source: float, jitter_sigma: float, setup: SpectralSetup) -> float:
    """Source visibility degraded by Gaussian time-of-flight jitter.

    Mode-dependent propagation in the multimode region spreads relative
    arrival times by ``jitter_sigma`` (seconds), tagging the photons with
    which-path timing information: V = v_source * exp(-jitter^2 * sigma_c^2 / 2).
    Narrower filters lower sigma_c and erase the timing information.
    """
    v = check_finite_scalar("v_source", v_source)
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"v_source must lie in [0, 1], got {v}")
    j = check_finite_scalar("jitter_sigma", jitter_sigma)
    if j < 0:
        raise ValidationError(f"jitter_sigma must be non-negative, got {j}")
    sigma_c = combined_coherence_sigma(setup)
    return v * math.exp(-(j**2) * sigma_c**2 / 2.0)


def calibrate_jitter_sigma(v_source: float, v_target: float, setup: SpectralSetup) -> float:
    """Jitter spread (seconds) that degrades ``v_source`` to ``v_target`` for ``setup``."""
    v = check_finite_scalar("v_source", v_source)
    t = check_finite_scalar("v_target", v_target)
    if not 0.0 < t <= v <= 1.0:
        raise ValidationError(f"need 0 < v_target <= v_source <= 1, got {t} and {v}")
    sigma_c = combined_coherence_sigma(setup)
    return math.sqrt(2.0 * math.log(v / t)) / sigma_c


@dataclasses.dataclass(frozen=True, eq=False)
class DipTrace:
    """Coincidence counts versus path delay, with optional accidental counts.

    Delays (micrometers) must be strictly increasing; counts are
    non-negative. ``input_pair``/``output_pair`` record which device cell the
    trace belongs to when known.
    """

    delays: NDArray[np.float64]
    coincidences: NDArray[np.float64]
    accidentals: NDArray[np.float64] | None = None
    input_pair: ModePair | None = None
    output_pair: ModePair | None = None

    def __post_init__(self):
        delays = np.asarray(self.delays, dtype=float)
        counts = np.asarray(self.coincidences, dtype=float)
        if delays.ndim != 1 or counts.shape != delays.shape:
            raise ValidationError("delays and coincidences must be 1-D arrays of equal length")
        if delays.size < 2:
            raise ValidationError("a trace needs at least 2 samples")
        if not np.all(np.isfinite(delays)) or not np.all(np.isfinite(counts)):
            raise ValidationError("trace samples must be finite")
        if np.any(np.diff(delays) <= 0):
            raise ValidationError("delays must be strictly increasing")
        if np.any(counts < 0):
            raise ValidationError("coincidence counts must be non-negative")
        acc = self.accidentals
        if acc is not None:
            acc = np.asarray(acc, dtype=float)
            if acc.shape != delays.shape:
                raise ValidationError("accidentals must match the sample count")
            if not np.all(np.isfinite(acc)) or np.any(acc < 0):
                raise ValidationError("accidental counts must be finite and non-negative")
            acc.setflags(write=False)
        delays.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "coincidences", counts)
        object.__setattr__(self, "accidentals", acc)
        if self.input_pair is not None:
            object.__setattr__(self, "input_pair", as_mode_pair(self.input_pair))
        if self.output_pair is not None:
            object.__setattr__(self, "output_pair", as_mode_pair(self.output_pair))

    @property
    def n_samples(self) -> int:
        return int(self.delays.size)


@dataclasses.dataclass(frozen=True)
class DipFit:
    """Fitted dip/peak parameters.

    ``visibility`` is the fitted interference contrast (positive = dip,
    negative = peak); it is an estimate and may fall slightly outside
    [-1, 1] for noisy data near full visibility. ``fwhm`` and ``center``
    are in micrometers of path delay; ``residual_rms`` is in counts.
    Standard errors come from the weighted-least-squares covariance.
    """

    visibility: float
    fwhm: float
    baseline: float
    slope: float
    center: float
    residual_rms: float
    visibility_stderr: float
    fwhm_stderr: float
    baseline_stderr: float
    slope_stderr: float
    center_stderr: float

    def __post_init__(self):
        for field in dataclasses.fields(self):
            check_finite_scalar(field.name, getattr(self, field.name))
        if self.fwhm <= 0:
            raise ValidationError(f"fwhm must be positive, got {self.fwhm}")


def synthesize_trace(
    matrix: TransitionMatrix,
    inputs,
    outputs,
    setup: SpectralSetup,
    delays,
    *,
    jitter_sigma: float = 0.0,
    source_visibility: float = 1.0,
    scale: float = 1000.0,
    slope: float = 0.0,
    accidental_rate: float = 0.0,
    noise_seed: int | None = None,
) -> DipTrace:
    """Synthesize a coincidence trace for one (input pair, output pair) cell.

    Expected counts at delay x are
    scale * (C + gamma(x) * (Q - C)) + slope * x + accidental_rate, where
    gamma(x) = source_visibility * jitter_visibility(1, jitter_sigma, setup)
    * exp(-(x/c)^2 * sigma_c^2). With ``noise_seed`` set, counts (and the
    accidental column when accidental_rate > 0) are Poisson draws from the
    expectations, deterministic per seed.
    """
    delays = np.asarray(delays, dtype=float)
    if delays.ndim != 1 or delays.size < 2:
        raise ValidationError("delays must be a 1-D array with at least 2 samples")
    if np.any(np.diff(delays) <= 0):
        raise ValidationError("delays must be strictly increasing")
    for name, value in (
        ("scale", scale),
        ("slope", slope),
        ("accidental_rate", accidental_rate),
    ):
        check_finite_scalar(name, value)
    if accidental_rate < 0:
        raise ValidationError(f"accidental_rate must be non-negative, got {accidental_rate}")
    v_src = check_finite_scalar("source_visibility", source_visibility)
    if not 0.0 <= v_src <= 1.0:
        raise ValidationError(f"source_visibility must lie in [0, 1], got {v_src}")

    q = quantum_coincidence(matrix, inputs, outputs)
    c = classical_coincidence(matrix, inputs, outputs)
    sigma_c = combined_coherence_sigma(setup)
    v_eff = v_src * jitter_visibility(1.0, jitter_sigma, setup)

    tau = delays * 1e-6 / SPEED_OF_LIGHT
    gamma = v_eff * np.exp(-((tau * sigma_c) ** 2))
    expected = scale * (c + gamma * (q - c)) + slope * delays + accidental_rate
    expected = np.clip(expected, 0.0, None)

    if noise_seed is None:
        counts = expected
        acc = np.full_like(delays, float(accidental_rate)) if accidental_rate > 0 else None
    else:
        rng = np.random.default_rng(noise_seed)
        counts = rng.poisson(expected).astype(float)
        acc = rng.poisson(accidental_rate, delays.size).astype(float) if accidental_rate > 0 else None

    return DipTrace(
        delays,
        counts,
        accidentals=acc,
        input_pair=as_mode_pair(inputs),
        output_pair=as_mode_pair(outputs),
    )


def correct_accidentals(trace: DipTrace) -> DipTrace:
    """Subtract accidental counts, flooring at zero and zeroing the column.

    Requires the accidental column on every sample. Idempotent: the returned
    trace carries an all-zero accidental column, so a second correction is
    the identity.
    """
    if trace.accidentals is None:
        raise ValidationError("trace has no accidental counts to correct")
    corrected = np.maximum(trace.coincidences - trace.accidentals, 0.0)
    return DipTrace(
        trace.delays,
        corrected,
        accidentals=np.zeros_like(trace.delays),
        input_pair=trace.input_pair,
        output_pair=trace.output_pair,
    )


def _dip_model(params, x):
    baseline, vis, center, width, slope = params
    return baseline * (1.0 - vis * np.exp(-((x - center) ** 2) / (2.0 * width**2))) + slope * x


def _initial_guess(x, y):
    # Linear trend from the outer quarter of samples at each end.
    n_edge = max(2, x.size // 4)
    xe = np.concatenate([x[:n_edge], x[-n_edge:]])
    ye = np.concatenate([y[:n_edge], y[-n_edge:]])
    slope0, intercept0 = np.polyfit(xe, ye, 1)
    detrended = y - slope0 * x
    baseline0 = float(np.median(np.concatenate([detrended[:n_edge], detrended[-n_edge:]])))
    if baseline0 == 0.0:
        baseline0 = max(float(np.max(np.abs(detrended))), 1.0)
    dev = detrended - baseline0
    i_ext = int(np.argmax(np.abs(dev)))
    center0 = float(x[i_ext])
    vis0 = float(np.clip(-dev[i_ext] / baseline0, -1.0, 1.0))
    # Width from the half-depth crossing around the extremum.
    half = np.abs(dev[i_ext]) / 2.0
    above = np.abs(dev) >= half
    left = i_ext
    while left > 0 and above[left - 1]:
        left -= 1
    right = i_ext
    while right < x.size - 1 and above[right + 1]:
        right += 1
    span = x[right] - x[left]
    width0 = span / _FWHM_PER_SIGMA if span > 0 else (x[-1] - x[0]) / 6.0
    return np.array([baseline0, vis0, center0, width0, slope0])


def fit_dip(
    trace: DipTrace,
    shape: str = "gaussian",
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> DipFit:
    """Fit baseline * (1 - V * exp(-(x-center)^2 / (2 w^2))) + slope * x.

    Weighted least squares with Poisson weights (per-sample variance
    max(count, 1)); FWHM = 2*sqrt(2 ln 2) * w. Deterministic given the data.
    The delays should span at least one expected FWHM, or the width is not
    identifiable from the data.

    Raises:
        ValidationError: unknown shape or fewer than 8 samples.
        FitFailureError: no convergence within ``max_evaluations`` model
            evaluations; carries the best residual RMS reached.
    """
    if shape != "gaussian":
        raise ValidationError(f"unsupported fit shape {shape!r}; only 'gaussian' is available")
    if trace.n_samples < MIN_FIT_SAMPLES:
        raise ValidationError(
            f"dip fitting needs at least {MIN_FIT_SAMPLES} samples, got {trace.n_samples}"
        )
    x = trace.delays
    y = trace.coincidences
    sigma = np.sqrt(np.maximum(y, 1.0))

    def residuals(params):
        return (_dip_model(params, x) - y) / sigma

    p0 = _initial_guess(x, y)
    result = least_squares(residuals, p0, method="lm", max_nfev=max_evaluations)
    if result.status <= 0 or not np.all(np.isfinite(result.x)):
        best_rms = float(np.sqrt(np.mean((_dip_model(result.x, x) - y) ** 2)))
        raise FitFailureError(
            f"dip fit did not converge within {max_evaluations} evaluations "
            f"(best residual RMS {best_rms:.6g} counts)",
            residual_rms=best_rms,
        )

    baseline, vis, center, width, slope = result.x
    jac = result.jac
    try:
        cov = np.linalg.inv(jac.T @ jac)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(jac.T @ jac)
    stderr = np.sqrt(np.maximum(np.diag(cov), 0.0))
    residual_rms = float(np.sqrt(np.mean((_dip_model(result.x, x) - y) ** 2)))

    return DipFit(
        visibility=float(vis),
        fwhm=float(_FWHM_PER_SIGMA * abs(width)),
        baseline=float(baseline),
        slope=float(slope),
        center=float(center),
        residual_rms=residual_rms,
        visibility_stderr=float(stderr[1]),
        fwhm_stderr=float(_FWHM_PER_SIGMA * stderr[3]),
        baseline_stderr=float(stderr[0]),
        slope_stderr=float(stderr[4]),
        center_stderr=float(stderr[2]),
    )


class DipFitter(BaseEstimator):
    """Estimator wrapper around :func:`fit_dip`.

    Parameters mirror the function; fitted values land in trailing-underscore
    attributes and ``predict`` evaluates the fitted model at new delays.

    >>> fitter = DipFitter().fit(trace)
    >>> fitter.visibility_, fitter.fwhm_
    """

    def __init__(self, shape: str = "gaussian", max_evaluations: int = DEFAULT_MAX_EVALUATIONS):
        self.shape = shape
        self.max_evaluations = max_evaluations

    def fit(self, trace: DipTrace, y=None):
        """Fit the dip model to a trace. ``y`` is ignored (API compatibility)."""
        fit = fit_dip(trace, shape=self.shape, max_evaluations=self.max_evaluations)
        self.fit_ = fit
        self.visibility_ = fit.visibility
        self.fwhm_ = fit.fwhm
        self.baseline_ = fit.baseline
        self.slope_ = fit.slope
        self.center_ = fit.center
        self.residual_rms_ = fit.residual_rms
        return self

    def predict(self, delays) -> np.ndarray:
        """Model counts at the given delays (micrometers) for the fitted parameters."""
        self._check_fitted("fit_")
        x = np.asarray(delays, dtype=float)
        f = self.fit_
        width = f.fwhm / _FWHM_PER_SIGMA
        return _dip_model(np.array([f.baseline, f.visibility, f.center, width, f.slope]), x)
