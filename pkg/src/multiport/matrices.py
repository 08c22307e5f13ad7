"""Complex transition matrices of linear-optical multiport devices.

A transition matrix maps input-mode field amplitudes (rows) to output-mode
amplitudes (columns). Mode labels are 1-based everywhere in the public API
and in file formats; storage is 0-based. Lossy devices are allowed: no
sub-unitarity constraint is imposed unless the strict ``unitary`` flag is set.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from numpy.typing import NDArray

from .errors import GaugeAnchorError, ShapeError, ValidationError
from .validation import as_complex_grid, check_count, check_finite_scalar, check_mode_label

UNITARITY_TOL = 1e-10
GAUGE_ANCHOR_TOL = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Validated complex amplitude grid: rows = input modes, columns = output modes.

    Args:
        entries: rectangular complex grid, all entries finite.
        unitary: opt-in strict flag; when True, rows and columns must be
            orthonormal within 1e-10. Left False for lossy or reduced
            matrices, whose column norms may exceed 1.
    """

    entries: NDArray[np.complex128]
    unitary: bool = False

    def __post_init__(self):
        arr = as_complex_grid(self.entries)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)
        if self.unitary:
            _check_unitary(arr)

    @property
    def n_inputs(self) -> int:
        return self.entries.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.entries.shape[1]

    def amplitude(self, input_mode: int, output_mode: int) -> complex:
        """Entry for 1-based (input_mode, output_mode) labels."""
        i = check_mode_label("input_mode", input_mode, self.n_inputs)
        k = check_mode_label("output_mode", output_mode, self.n_outputs)
        return complex(self.entries[i - 1, k - 1])

    def conjugate(self) -> "TransitionMatrix":
        """Elementwise complex conjugate (same gauge class, flipped phases)."""
        return TransitionMatrix(np.conj(self.entries), unitary=self.unitary)


@dataclasses.dataclass(frozen=True, eq=False)
class GaugeClass:
    """Canonical representative of a gauge-equivalence class.

    ``representative`` has every first-row and first-column entry real and
    non-negative; ``conjugated`` records whether elementwise conjugation was
    applied to resolve the conjugation ambiguity.
    """

    representative: TransitionMatrix
    conjugated: bool


def _check_unitary(arr: np.ndarray) -> None:
    n, m = arr.shape
    if n != m:
        raise ValidationError(f"unitary flag requires a square matrix, got {n}x{m}")
    eye = np.eye(n)
    err = max(
        np.max(np.abs(arr @ arr.conj().T - eye)),
        np.max(np.abs(arr.conj().T @ arr - eye)),
    )
    if err > UNITARITY_TOL:
        raise ValidationError(f"matrix is not unitary within {UNITARITY_TOL:g} (error {err:.3e})")


def _wrap_phase(theta: np.ndarray) -> np.ndarray:
    """Wrap angles to (-pi, pi]."""
    wrapped = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def make_transition_matrix(entries, *, unitary: bool = False) -> TransitionMatrix:
    """Build a validated transition matrix from a rectangular complex grid.

    Args:
        entries: nested sequence or array of complex amplitudes.
        unitary: set the strict-unitary flag (checked at 1e-10).

    Raises:
        ShapeError: ragged or non-2-D grid.
        ValidationError: non-finite entry, or unitarity check failure.
    """
    return TransitionMatrix(entries, unitary=unitary)


def ideal_2x2() -> TransitionMatrix:
    """Balanced 2x2 splitter: (1/sqrt(2)) * [[1, i], [i, 1]]."""
    s = 1.0 / np.sqrt(2.0)
    return TransitionMatrix(np.array([[s, 1j * s], [1j * s, s]]), unitary=True)


def ideal_4x4(theta: float) -> TransitionMatrix:
    """Ideal symmetric 4x4 splitter with free internal phase ``theta``.

    Returns (1/2) * [[1, 1, 1, 1],
                     [1, e^{i theta}, -1, -e^{i theta}],
                     [1, -1, 1, -1],
                     [1, -e^{i theta}, -1, e^{i theta}]],
    unitary for every theta.
    """
    th = check_finite_scalar("theta", theta)
    e = np.exp(1j * th)
    grid = 0.5 * np.array(
        [
            [1, 1, 1, 1],
            [1, e, -1, -e],
            [1, -1, 1, -1],
            [1, -e, -1, e],
        ]
    )
    return TransitionMatrix(grid, unitary=True)


def canonical_gauge(matrix: TransitionMatrix) -> GaugeClass:
    """Canonicalize the unobservable external phases of a transition matrix.

    Multiplies rows and columns by unit-modulus phases so that the first row
    and first column become real non-negative, then resolves the remaining
    conjugation ambiguity (visibilities and intensities cannot distinguish a
    matrix from its elementwise conjugate) with a deterministic sign
    convention: the first interior entry, in row-major order, carrying at
    least half the maximal interior |imaginary part| must have a non-negative
    imaginary part, else the whole matrix is conjugated. The half-maximum
    rule keeps the fold stable when interior magnitudes tie exactly, as in
    ideal splitter families. Entry magnitudes are preserved exactly; the
    first row and column of the representative are exactly real.

    Raises:
        GaugeAnchorError: a first-row or first-column entry has magnitude
            <= 1e-12, so its phase cannot anchor the gauge.
    """
    a = matrix.entries
    mags = np.abs(a)
    for i in range(matrix.n_inputs):
        if mags[i, 0] <= GAUGE_ANCHOR_TOL:
            raise GaugeAnchorError(
                f"cannot anchor gauge: entry (input {i + 1}, output 1) has magnitude "
                f"{mags[i, 0]:.3e} <= {GAUGE_ANCHOR_TOL:g}"
            )
    for k in range(matrix.n_outputs):
        if mags[0, k] <= GAUGE_ANCHOR_TOL:
            raise GaugeAnchorError(
                f"cannot anchor gauge: entry (input 1, output {k + 1}) has magnitude "
                f"{mags[0, k]:.3e} <= {GAUGE_ANCHOR_TOL:g}"
            )

    theta = np.angle(a)
    adjusted = theta - theta[0:1, :] - theta[:, 0:1] + theta[0, 0]
    adjusted[0, :] = 0.0
    adjusted[:, 0] = 0.0
    adjusted = _wrap_phase(adjusted)

    conjugated = False
    if matrix.n_inputs > 1 and matrix.n_outputs > 1:
        interior_im = (mags * np.sin(adjusted))[1:, 1:]
        abs_im = np.abs(interior_im)
        peak = float(np.max(abs_im))
        if peak > 0.0:
            anchor = int(np.argmax(abs_im >= 0.5 * peak))
            r, c = np.unravel_index(anchor, abs_im.shape)
            if interior_im[r, c] < 0.0:
                adjusted = _wrap_phase(-adjusted)
                conjugated = True

    rep = mags * np.exp(1j * adjusted)
    rep[0, :] = mags[0, :]
    rep[:, 0] = mags[:, 0]
    return GaugeClass(TransitionMatrix(rep, unitary=matrix.unitary), conjugated)


def gauge_equivalent(a: TransitionMatrix, b: TransitionMatrix, tol: float) -> bool:
    """True iff the canonical representatives of ``a`` and ``b`` agree within ``tol``.

    Magnitudes are compared entrywise; phases are compared (mod 2 pi) only on
    entries where both magnitudes exceed ``tol``.

    Raises:
        ShapeError: dimension mismatch.
    """
    if a.entries.shape != b.entries.shape:
        raise ShapeError(f"dimension mismatch: {a.entries.shape} vs {b.entries.shape}")
    ra = canonical_gauge(a).representative.entries
    rb = canonical_gauge(b).representative.entries
    if np.max(np.abs(np.abs(ra) - np.abs(rb))) > tol:
        return False
    significant = (np.abs(ra) > tol) & (np.abs(rb) > tol)
    if not np.any(significant):
        return True
    dphi = _wrap_phase(np.angle(ra) - np.angle(rb))
    return bool(np.max(np.abs(dphi[significant])) <= tol)


def random_unitary(n: int, seed: int) -> TransitionMatrix:
    """Seeded Haar-approximate random n x n unitary.

    Orthonormalizes an i.i.d. complex-Gaussian grid (QR with the phase fix
    that makes the distribution Haar). Deterministic for a fixed seed.
    """
    n = check_count("n", n, minimum=1)
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return TransitionMatrix(q, unitary=True)
