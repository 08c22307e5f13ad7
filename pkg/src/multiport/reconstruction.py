"""Phase-insensitive recovery of a complex transition matrix.

Entry magnitudes |M_ik| are directly measurable with classical light, but the
phases are not observable without interferometric stability. The two-photon
visibility matrix is phase-sensitive, gauge-invariant data: this module
searches for the matrix whose visibilities best match the measured ones, in
the RMS sense, over gauge-fixed phase coordinates (first-row and first-column
phases pinned to zero, leaving (N-1)(M-1) free interior phases).

The search is multi-start local descent: start 1 places all free phases at
zero (magnitudes alone are a good starting condition); further starts draw
phases uniformly from a seeded generator. Each descent is a Gauss-Newton
iteration on the residual vector with central-difference derivatives
(step 1e-6) and Armijo backtracking, falling back to steepest descent when
the Gauss-Newton direction fails to descend. Accepted steps never increase
the objective, and the whole procedure is deterministic for fixed inputs,
options, and seed, regardless of how many worker threads execute the starts.

In joint-refinement mode the magnitudes become additional parameters tied to
their measured values by a quadratic penalty, for use when the intensity
measurements themselves carry error.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.typing import NDArray

from .base import BaseEstimator
from .errors import (
    DegenerateDataError,
    ReconstructionError,
    ShapeError,
    ValidationError,
)
from .interference import (
    DEFAULT_C_MIN,
    VisibilityMatrix,
    coincidence_grids,
    mode_pairs,
    visibility_matrix,
)
from .matrices import TransitionMatrix, canonical_gauge
from .validation import as_real_grid

GRADIENT_STEP = 1e-6
ARMIJO_C1 = 1e-4
MIN_LINE_SEARCH_ALPHA = 1e-12
UNCERTAINTY_FLOOR = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class MagnitudeGrid:
    """Measured entry magnitudes |M_ik|, with optional per-entry uncertainties."""

    values: NDArray[np.float64]
    uncertainty: NDArray[np.float64] | None = None

    def __post_init__(self):
        vals = as_real_grid(self.values, non_negative=True)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if self.uncertainty is not None:
            unc = as_real_grid(self.uncertainty)
            if unc.shape != vals.shape:
                raise ShapeError(
                    f"uncertainty shape {unc.shape} does not match values shape {vals.shape}"
                )
            if np.any(unc <= 0):
                raise ValidationError("uncertainties must be positive")
            unc.setflags(write=False)
            object.__setattr__(self, "uncertainty", unc)

    @property
    def n_inputs(self) -> int:
        return self.values.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.values.shape[1]

    def effective_uncertainty(self) -> np.ndarray:
        """Given uncertainties, or the 5% default, floored away from zero."""
        if self.uncertainty is not None:
            return np.asarray(self.uncertainty)
        return np.maximum(0.05 * self.values, UNCERTAINTY_FLOOR)


def as_magnitude_grid(magnitudes) -> MagnitudeGrid:
    """Normalize a MagnitudeGrid, array, or TransitionMatrix to a MagnitudeGrid."""
    if isinstance(magnitudes, MagnitudeGrid):
        return magnitudes
    if isinstance(magnitudes, TransitionMatrix):
        return MagnitudeGrid(np.abs(magnitudes.entries))
    return MagnitudeGrid(magnitudes)


MODES = ("fixed-magnitudes", "joint-refinement")


@dataclasses.dataclass(frozen=True)
class ReconstructionOptions:
    """Knobs for the multi-start search. Defaults favor determinism and accuracy."""

    mode: str = "fixed-magnitudes"
    magnitude_penalty_weight: float = 1.0
    starts: int = 20
    seed: int = 0
    max_iterations: int = 10_000
    convergence_tol: float = 1e-12
    c_min: float = DEFAULT_C_MIN
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.starts < 1:
            raise ValidationError(f"starts must be >= 1, got {self.starts}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.convergence_tol > 0:
            raise ValidationError(f"convergence_tol must be positive, got {self.convergence_tol}")
        if self.c_min < 0:
            raise ValidationError(f"c_min must be non-negative, got {self.c_min}")
        if self.magnitude_penalty_weight < 0:
            raise ValidationError("magnitude_penalty_weight must be non-negative")
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")


@dataclasses.dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Best matrix found, reported in canonical gauge, with diagnostics.

    ``objective`` is the RMS distance between reconstructed and measured
    visibilities over included cells; ``residuals`` is the full pair grid of
    (reconstructed - measured) with NaN at excluded cells. Failed starts
    appear in ``per_start_objectives`` as +inf.
    """

    matrix: TransitionMatrix
    objective: float
    residuals: NDArray[np.float64]
    input_pairs: tuple
    output_pairs: tuple
    per_start_objectives: tuple[float, ...]
    iterations_used: int
    excluded_cells: tuple
    best_start: int
    conjugated: bool
    underdetermined: bool

    def __post_init__(self):
        res = np.asarray(self.residuals, dtype=float)
        included = np.isfinite(res)
        if np.any(included):
            rms = float(np.sqrt(np.mean(res[included] ** 2)))
            if abs(rms - self.objective) > 1e-12:
                raise ValidationError(
                    f"objective {self.objective} inconsistent with residual RMS {rms}"
                )
        res.setflags(write=False)
        object.__setattr__(self, "residuals", res)


def parameterize(magnitudes, phases) -> TransitionMatrix:
    """Matrix with the given magnitudes and gauge-fixed phases.

    Entry (i, k) is |M_ik| * exp(i phi_ik) with phi zero on the whole first
    row and first column; ``phases`` supplies the (N-1)(M-1) interior phases
    in row-major order.
    """
    grid = as_magnitude_grid(magnitudes)
    n, m = grid.values.shape
    phi = np.asarray(phases, dtype=float)
    expected = (n - 1) * (m - 1)
    if phi.shape != (expected,):
        raise ShapeError(
            f"phase vector must have length (N-1)(M-1) = {expected}, got shape {phi.shape}"
        )
    full = np.zeros((n, m))
    if expected:
        full[1:, 1:] = phi.reshape(n - 1, m - 1)
    return TransitionMatrix(grid.values * np.exp(1j * full))


def _check_pair_layout(measured: VisibilityMatrix, n_inputs: int, n_outputs: int) -> None:
    if n_inputs < 2 or n_outputs < 2:
        raise ShapeError(f"reconstruction needs at least 2x2 devices, got {n_inputs}x{n_outputs}")
    if measured.input_pairs != mode_pairs(n_inputs) or measured.output_pairs != mode_pairs(n_outputs):
        raise ShapeError(
            "measured visibility pair layout does not match the magnitude grid "
            f"({n_inputs} inputs, {n_outputs} outputs, lexicographic pair order)"
        )


def evaluate_candidate(
    candidate: TransitionMatrix, measured: VisibilityMatrix, c_min: float = DEFAULT_C_MIN
) -> tuple[float, np.ndarray]:
    """RMS objective and full residual grid (NaN at excluded cells) for a candidate.

    Raises:
        DegenerateDataError: no cell is included.
    """
    _check_pair_layout(measured, candidate.n_inputs, candidate.n_outputs)
    _, _, q, c = coincidence_grids(candidate)
    included = measured.defined_mask & (c > c_min)
    if not np.any(included):
        raise DegenerateDataError("no visibility cells usable: all excluded or undefined")
    residuals = np.full(q.shape, np.nan)
    residuals[included] = (c[included] - q[included]) / c[included] - measured.values[included]
    rms = float(np.sqrt(np.mean(residuals[included] ** 2)))
    return rms, residuals


def objective(
    candidate: TransitionMatrix, measured: VisibilityMatrix, c_min: float = DEFAULT_C_MIN
) -> tuple[float, list]:
    """RMS visibility distance of a candidate from measured data.

    Cells enter the mean only when the measurement is defined and the
    candidate's classical coincidence exceeds ``c_min``. Returns the RMS
    value together with the list of excluded (input pair, output pair)
    label tuples.

    Raises:
        DegenerateDataError: no cell is included.
    """
    rms, residuals = evaluate_candidate(candidate, measured, c_min)
    excluded = [
        (measured.input_pairs[r].labels(), measured.output_pairs[col].labels())
        for r in range(residuals.shape[0])
        for col in range(residuals.shape[1])
        if not np.isfinite(residuals[r, col])
    ]
    return rms, excluded


class _Problem:
    """Precomputed arrays for fast residual evaluation during descent."""

    def __init__(self, measured: VisibilityMatrix, magnitudes: MagnitudeGrid, options: ReconstructionOptions):
        n, m = magnitudes.values.shape
        _check_pair_layout(measured, n, m)
        self.n_inputs = n
        self.n_outputs = m
        self.magnitudes = magnitudes.values
        self.uncertainty = magnitudes.effective_uncertainty().ravel()
        self.measured = measured.values
        self.defined = measured.defined_mask
        self.options = options
        self.joint = options.mode == "joint-refinement"
        self.n_phases = (n - 1) * (m - 1)
        self.n_params = self.n_phases + (n * m if self.joint else 0)
        ipairs = measured.input_pairs
        opairs = measured.output_pairs
        self.i_idx = np.array([p.first - 1 for p in ipairs])
        self.j_idx = np.array([p.second - 1 for p in ipairs])
        self.k_idx = np.array([p.first - 1 for p in opairs])
        self.l_idx = np.array([p.second - 1 for p in opairs])
        self.penalty_scale = math.sqrt(options.magnitude_penalty_weight)

    def entries(self, params: np.ndarray) -> np.ndarray:
        if self.joint:
            mags = np.abs(params[self.n_phases :]).reshape(self.n_inputs, self.n_outputs)
        else:
            mags = self.magnitudes
        phase = np.zeros((self.n_inputs, self.n_outputs))
        if self.n_phases:
            phase[1:, 1:] = params[: self.n_phases].reshape(self.n_inputs - 1, self.n_outputs - 1)
        return mags * np.exp(1j * phase)

    def _coincidences(self, entries: np.ndarray):
        a1 = entries[self.i_idx[:, None], self.k_idx[None, :]] * entries[self.j_idx[:, None], self.l_idx[None, :]]
        a2 = entries[self.i_idx[:, None], self.l_idx[None, :]] * entries[self.j_idx[:, None], self.k_idx[None, :]]
        q = np.abs(a1 + a2) ** 2
        c = np.abs(a1) ** 2 + np.abs(a2) ** 2
        return q, c

    def residual_vector(self, params: np.ndarray, mask: np.ndarray | None = None):
        """Residuals scaled so their squared sum is MSE(visibility) + penalty.

        With ``mask`` given, that fixed inclusion set is used (needed for
        finite-difference Jacobians); otherwise the mask follows the
        candidate's classical coincidences.
        """
        entries = self.entries(params)
        q, c = self._coincidences(entries)
        if mask is None:
            mask = self.defined & (c > self.options.c_min)
        n_inc = int(np.count_nonzero(mask))
        if n_inc == 0:
            return None, mask
        # A frozen mask may keep cells whose C has drifted to ~0; the non-finite
        # residual is caught by the caller rather than warned about here.
        with np.errstate(divide="ignore", invalid="ignore"):
            v_r = (c[mask] - q[mask]) / c[mask]
        res = (v_r - self.measured[mask]) / math.sqrt(n_inc)
        if self.joint:
            mag_params = np.abs(params[self.n_phases :])
            pen = self.penalty_scale * (mag_params - self.magnitudes.ravel()) / self.uncertainty
            res = np.concatenate([res, pen])
        return res, mask


@dataclasses.dataclass(frozen=True)
class _StartOutcome:
    params: np.ndarray | None
    objective: float
    iterations: int
    history: tuple[float, ...]
    failed: bool


def _evaluate(problem: _Problem, params: np.ndarray, mask=None):
    res, used_mask = problem.residual_vector(params, mask)
    if res is None or not np.all(np.isfinite(res)):
        return None, None, used_mask
    return float(res @ res), res, used_mask


def _descend(problem: _Problem, x0: np.ndarray, max_iterations: int, convergence_tol: float) -> _StartOutcome:
    """One deterministic local descent; never accepts a non-improving step."""
    x = np.array(x0, dtype=float)
    f, r, mask = _evaluate(problem, x)
    if f is None:
        return _StartOutcome(None, math.inf, 0, (), failed=True)
    history = [math.sqrt(f)]
    iterations = 0
    h = GRADIENT_STEP

    for _ in range(max_iterations):
        jac = np.empty((r.size, x.size))
        finite = True
        for p in range(x.size):
            xp = x.copy()
            xp[p] += h
            xm = x.copy()
            xm[p] -= h
            rp, _ = problem.residual_vector(xp, mask)
            rm, _ = problem.residual_vector(xm, mask)
            if rp is None or rm is None:
                finite = False
                break
            jac[:, p] = (rp - rm) / (2.0 * h)
        if not finite or not np.all(np.isfinite(jac)):
            break

        step = np.linalg.lstsq(jac, -r, rcond=None)[0]
        gradient = 2.0 * (jac.T @ r)
        if not np.all(np.isfinite(step)):
            break
        directional = float(gradient @ step)
        if directional >= 0.0:
            step = -gradient
            directional = float(gradient @ step)
            if directional >= 0.0:
                break

        alpha = 1.0
        accepted = False
        while alpha >= MIN_LINE_SEARCH_ALPHA:
            f_new, r_new, mask_new = _evaluate(problem, x + alpha * step)
            if f_new is not None and f_new <= f + ARMIJO_C1 * alpha * directional:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break

        improvement = math.sqrt(f) - math.sqrt(f_new)
        x = x + alpha * step
        f, r, mask = f_new, r_new, mask_new
        iterations += 1
        history.append(math.sqrt(f))
        if f == 0.0 or improvement < convergence_tol:
            break

    return _StartOutcome(x, math.sqrt(f), iterations, tuple(history), failed=False)


def reconstruct(
    measured: VisibilityMatrix,
    magnitudes,
    options: ReconstructionOptions | None = None,
) -> ReconstructionResult:
    """Recover a transition matrix from magnitudes and measured visibilities.

    Start 1 sets every free phase to zero; starts 2..n draw phases uniformly
    in (-pi, pi] from a generator seeded with ``options.seed``. In
    joint-refinement mode the magnitudes are free parameters (initialized at
    their measured values for every start) with a quadratic penalty pulling
    them back. The best start wins by objective, ties broken by lowest start
    index; the winning matrix is reported in canonical gauge.

    Raises:
        DegenerateDataError: the measured matrix has no defined cells.
        ReconstructionError: every start hit a non-finite objective.
    """
    opts = options if options is not None else ReconstructionOptions()
    grid = as_magnitude_grid(magnitudes)
    problem = _Problem(measured, grid, opts)
    if not np.any(problem.defined):
        raise DegenerateDataError("measured visibility matrix has no defined cells")
    underdetermined = int(np.count_nonzero(problem.defined)) < problem.n_params

    mag0 = np.abs(grid.values).ravel()
    x0s = np.zeros((opts.starts, problem.n_params))
    if problem.joint:
        x0s[:, problem.n_phases :] = mag0
    if opts.starts > 1:
        rng = np.random.default_rng(opts.seed)
        x0s[1:, : problem.n_phases] = rng.uniform(-np.pi, np.pi, (opts.starts - 1, problem.n_phases))

    def run(start_index: int) -> _StartOutcome:
        return _descend(problem, x0s[start_index], opts.max_iterations, opts.convergence_tol)

    if opts.workers > 1 and opts.starts > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as pool:
            outcomes = list(pool.map(run, range(opts.starts)))
    else:
        outcomes = [run(s) for s in range(opts.starts)]

    best_start = min(range(opts.starts), key=lambda s: (outcomes[s].objective, s))
    best = outcomes[best_start]
    if best.failed:
        raise ReconstructionError("all reconstruction starts failed with non-finite objectives")

    gauge = canonical_gauge(TransitionMatrix(problem.entries(best.params)))
    final = gauge.representative
    final_objective, residuals = evaluate_candidate(final, measured, opts.c_min)

    ipairs = measured.input_pairs
    opairs = measured.output_pairs
    excluded = tuple(
        (ipairs[r].labels(), opairs[col].labels())
        for r in range(len(ipairs))
        for col in range(len(opairs))
        if not np.isfinite(residuals[r, col])
    )

    return ReconstructionResult(
        matrix=final,
        objective=final_objective,
        residuals=residuals,
        input_pairs=ipairs,
        output_pairs=opairs,
        per_start_objectives=tuple(o.objective for o in outcomes),
        iterations_used=best.iterations,
        excluded_cells=excluded,
        best_start=best_start,
        conjugated=gauge.conjugated,
        underdetermined=underdetermined,
    )


@dataclasses.dataclass(frozen=True)
class ResidualRow:
    """One cell of the residual report."""

    input_pair: tuple[int, int]
    output_pair: tuple[int, int]
    measured: float | None
    reconstructed: float | None
    residual: float | None
    included: bool


def _rows_from_grid(
    matrix: TransitionMatrix, measured: VisibilityMatrix, residuals: np.ndarray
) -> list[ResidualRow]:
    recon = visibility_matrix(matrix)
    rows = []
    for r, ip in enumerate(measured.input_pairs):
        for col, op in enumerate(measured.output_pairs):
            v_m = measured.values[r, col]
            v_r = recon.values[r, col]
            res = residuals[r, col]
            included = bool(np.isfinite(res))
            rows.append(
                ResidualRow(
                    input_pair=ip.labels(),
                    output_pair=op.labels(),
                    measured=float(v_m) if np.isfinite(v_m) else None,
                    reconstructed=float(v_r) if np.isfinite(v_r) else None,
                    residual=float(res) if included else None,
                    included=included,
                )
            )
    rows.sort(key=lambda row: -abs(row.residual) if row.residual is not None else 1.0)
    return rows


def residual_report(result: ReconstructionResult, measured: VisibilityMatrix) -> list[ResidualRow]:
    """Per-cell comparison table, sorted by |residual| descending.

    Cells without a residual (measurement undefined, or candidate classical
    coincidence below threshold) appear last with ``included`` False.
    """
    _check_pair_layout(measured, result.matrix.n_inputs, result.matrix.n_outputs)
    return _rows_from_grid(result.matrix, measured, result.residuals)


def candidate_report(
    candidate: TransitionMatrix, measured: VisibilityMatrix, c_min: float = DEFAULT_C_MIN
) -> tuple[float, list[ResidualRow]]:
    """Objective and residual table for any candidate matrix against measured data."""
    rms, residuals = evaluate_candidate(candidate, measured, c_min)
    return rms, _rows_from_grid(candidate, measured, residuals)


class MatrixReconstructor(BaseEstimator):
    """Estimator interface to :func:`reconstruct`.

    Constructor parameters mirror :class:`ReconstructionOptions`. After
    ``fit(visibilities, magnitudes)`` the recovered matrix is in ``matrix_``
    and the full diagnostics in ``result_``; ``predict()`` returns the
    fitted matrix's visibility grid and ``score(visibilities)`` the negative
    RMS distance (higher is better).
    """

    def __init__(
        self,
        mode: str = "fixed-magnitudes",
        starts: int = 20,
        seed: int = 0,
        max_iterations: int = 10_000,
        convergence_tol: float = 1e-12,
        c_min: float = DEFAULT_C_MIN,
        magnitude_penalty_weight: float = 1.0,
        workers: int = 1,
    ):
        self.mode = mode
        self.starts = starts
        self.seed = seed
        self.max_iterations = max_iterations
        self.convergence_tol = convergence_tol
        self.c_min = c_min
        self.magnitude_penalty_weight = magnitude_penalty_weight
        self.workers = workers

    def _options(self) -> ReconstructionOptions:
        return ReconstructionOptions(
            mode=self.mode,
            magnitude_penalty_weight=self.magnitude_penalty_weight,
            starts=self.starts,
            seed=self.seed,
            max_iterations=self.max_iterations,
            convergence_tol=self.convergence_tol,
            c_min=self.c_min,
            workers=self.workers,
        )

    def fit(self, visibilities: VisibilityMatrix, magnitudes):
        """Run the reconstruction; stores the result in fitted attributes."""
        result = reconstruct(visibilities, magnitudes, self._options())
        self.result_ = result
        self.matrix_ = result.matrix
        self.objective_ = result.objective
        self.residuals_ = result.residuals
        self.per_start_objectives_ = result.per_start_objectives
        self.excluded_cells_ = result.excluded_cells
        return self

    def predict(self, X=None) -> VisibilityMatrix:
        """Visibility matrix of the fitted transition matrix."""
        self._check_fitted("matrix_")
        return visibility_matrix(self.matrix_, c_min=self.c_min)

    def score(self, visibilities: VisibilityMatrix) -> float:
        """Negative RMS visibility distance of the fitted matrix from ``visibilities``."""
        self._check_fitted("matrix_")
        rms, _ = objective(self.matrix_, visibilities, c_min=self.c_min)
        return -rms
