"""Quantum and classical multiphoton coincidence statistics.

Two indistinguishable photons entering distinct inputs (i, j) and detected in
distinct outputs (k, l) interfere coherently:

    Q = |M_ik * M_jl + M_il * M_jk|^2

while distinguishable (classical) photons add incoherently:

    C = |M_ik * M_jl|^2 + |M_il * M_jk|^2

The visibility V = (C - Q) / C summarizes the interference: positive values
are dips, negative values are peaks. General n-photon output distributions
reduce to permanents of row/column-repeated submatrices.
"""

from __future__ import annotations

import dataclasses
from itertools import combinations, combinations_with_replacement
from math import factorial

import numpy as np
from numpy.typing import NDArray

from .errors import ShapeError, SizeLimitError, ValidationError
from .matrices import TransitionMatrix
from .permanents import permanent
from .validation import check_mode_label, check_occupations

DEFAULT_C_MIN = 1e-9
MAX_PHOTONS = 6
VISIBILITY_BOUND_SLACK = 1e-9


@dataclasses.dataclass(frozen=True)
class ModePair:
    """Ordered pair of distinct 1-based mode labels with first < second."""

    first: int
    second: int

    def __post_init__(self):
        if not (isinstance(self.first, int) and isinstance(self.second, int)):
            raise ValidationError("mode labels must be integers")
        if self.first < 1 or self.second < 1:
            raise ValidationError(f"mode labels are 1-based, got ({self.first}, {self.second})")
        if not self.first < self.second:
            raise ValidationError(
                f"mode pair must satisfy first < second, got ({self.first}, {self.second})"
            )

    def labels(self) -> tuple[int, int]:
        return (self.first, self.second)


def as_mode_pair(pair) -> ModePair:
    """Normalize a ModePair or a (first, second) tuple to a ModePair."""
    if isinstance(pair, ModePair):
        return pair
    try:
        first, second = pair
    except (TypeError, ValueError):
        raise ValidationError(f"expected a pair of mode labels, got {pair!r}") from None
    return ModePair(int(first), int(second))


def mode_pairs(n_modes: int) -> tuple[ModePair, ...]:
    """All C(n, 2) mode pairs in lexicographic order: (1,2), (1,3), ..."""
    if n_modes < 2:
        raise ValidationError(f"need at least 2 modes to form pairs, got {n_modes}")
    return tuple(ModePair(i, j) for i, j in combinations(range(1, n_modes + 1), 2))


def _pair_indices(matrix: TransitionMatrix, inputs, outputs):
    ip = as_mode_pair(inputs)
    op = as_mode_pair(outputs)
    i = check_mode_label("input pair first", ip.first, matrix.n_inputs) - 1
    j = check_mode_label("input pair second", ip.second, matrix.n_inputs) - 1
    k = check_mode_label("output pair first", op.first, matrix.n_outputs) - 1
    l = check_mode_label("output pair second", op.second, matrix.n_outputs) - 1
    return i, j, k, l


def quantum_coincidence(matrix: TransitionMatrix, inputs, outputs) -> float:
    """Coincidence probability for two indistinguishable photons.

    One photon enters each input of ``inputs`` and one photon is detected in
    each output of ``outputs``. The pair types enforce distinct labels, so
    the same-input Kronecker-delta normalization never applies.
    """
    i, j, k, l = _pair_indices(matrix, inputs, outputs)
    a = matrix.entries
    amp = a[i, k] * a[j, l] + a[i, l] * a[j, k]
    return float(abs(amp) ** 2)


def classical_coincidence(matrix: TransitionMatrix, inputs, outputs) -> float:
    """Coincidence probability for two distinguishable photons (no interference)."""
    i, j, k, l = _pair_indices(matrix, inputs, outputs)
    a = matrix.entries
    return float(abs(a[i, k] * a[j, l]) ** 2 + abs(a[i, l] * a[j, k]) ** 2)


def visibility(matrix: TransitionMatrix, inputs, outputs, c_min: float = DEFAULT_C_MIN):
    """Interference visibility (C - Q) / C, or None when C <= c_min.

    Positive values indicate a coincidence dip, negative values a peak.
    Undefined cells (classical coincidence at or below ``c_min``) return
    None rather than raising: near-zero amplitudes make the ratio
    ill-conditioned, not erroneous.
    """
    q = quantum_coincidence(matrix, inputs, outputs)
    c = classical_coincidence(matrix, inputs, outputs)
    if c <= c_min:
        return None
    return float((c - q) / c)


@dataclasses.dataclass(frozen=True, eq=False)
class VisibilityMatrix:
    """Grid of two-photon visibilities over all input and output mode pairs.

    Rows follow ``input_pairs``, columns follow ``output_pairs``, both in
    lexicographic order. Undefined cells (classical coincidence below
    threshold, or missing measurements) are stored as NaN and reported
    through ``defined_mask``.
    """

    input_pairs: tuple[ModePair, ...]
    output_pairs: tuple[ModePair, ...]
    values: NDArray[np.float64]

    def __post_init__(self):
        ipairs = tuple(as_mode_pair(p) for p in self.input_pairs)
        opairs = tuple(as_mode_pair(p) for p in self.output_pairs)
        vals = np.array(self.values, dtype=float)
        if vals.shape != (len(ipairs), len(opairs)):
            raise ShapeError(
                f"values shape {vals.shape} does not match "
                f"{len(ipairs)} input pairs x {len(opairs)} output pairs"
            )
        defined = np.isfinite(vals)
        if np.any(np.abs(vals[defined]) > 1.0 + VISIBILITY_BOUND_SLACK):
            worst = float(np.max(np.abs(vals[defined])))
            raise ValidationError(f"visibility values must lie in [-1, 1], got |V| = {worst}")
        vals.setflags(write=False)
        object.__setattr__(self, "input_pairs", ipairs)
        object.__setattr__(self, "output_pairs", opairs)
        object.__setattr__(self, "values", vals)

    @property
    def defined_mask(self) -> NDArray[np.bool_]:
        return np.isfinite(self.values)

    @property
    def n_inputs(self) -> int:
        return max(p.second for p in self.input_pairs)

    @property
    def n_outputs(self) -> int:
        return max(p.second for p in self.output_pairs)

    def value(self, inputs, outputs):
        """Visibility for one (input pair, output pair) cell, or None if undefined."""
        ip = as_mode_pair(inputs)
        op = as_mode_pair(outputs)
        try:
            r = self.input_pairs.index(ip)
            c = self.output_pairs.index(op)
        except ValueError:
            raise IndexError(f"no cell for pairs {ip.labels()} -> {op.labels()}") from None
        v = self.values[r, c]
        return float(v) if np.isfinite(v) else None


def _pair_index_arrays(pairs: tuple[ModePair, ...]):
    first = np.array([p.first - 1 for p in pairs])
    second = np.array([p.second - 1 for p in pairs])
    return first, second


def coincidence_grids(matrix: TransitionMatrix):
    """Quantum and classical coincidence probabilities over all pair combinations.

    Returns (input_pairs, output_pairs, Q, C) with Q and C of shape
    C(n_in, 2) x C(n_out, 2) in lexicographic pair order.
    """
    if matrix.n_inputs < 2 or matrix.n_outputs < 2:
        raise ValidationError(
            f"need at least 2 inputs and 2 outputs, got {matrix.n_inputs}x{matrix.n_outputs}"
        )
    ipairs = mode_pairs(matrix.n_inputs)
    opairs = mode_pairs(matrix.n_outputs)
    i, j = _pair_index_arrays(ipairs)
    k, l = _pair_index_arrays(opairs)
    a = matrix.entries
    amp_direct = a[i[:, None], k[None, :]] * a[j[:, None], l[None, :]]
    amp_swapped = a[i[:, None], l[None, :]] * a[j[:, None], k[None, :]]
    q = np.abs(amp_direct + amp_swapped) ** 2
    c = np.abs(amp_direct) ** 2 + np.abs(amp_swapped) ** 2
    return ipairs, opairs, q, c


def visibility_matrix(matrix: TransitionMatrix, c_min: float = DEFAULT_C_MIN) -> VisibilityMatrix:
    """Full visibility grid of a device over every two-photon input/output pair."""
    ipairs, opairs, q, c = coincidence_grids(matrix)
    values = np.full(q.shape, np.nan)
    defined = c > c_min
    values[defined] = (c[defined] - q[defined]) / c[defined]
    return VisibilityMatrix(ipairs, opairs, values)


def _output_configurations(n_photons: int, n_modes: int):
    for combo in combinations_with_replacement(range(n_modes), n_photons):
        yield tuple(int(x) for x in np.bincount(combo, minlength=n_modes))


def output_distribution(
    matrix: TransitionMatrix, input_config, mode: str = "quantum"
) -> dict[tuple[int, ...], float]:
    """Exact output-configuration distribution for an n-photon input.

    Args:
        matrix: device transition matrix.
        input_config: photon occupations per input mode (1-based mode order).
        mode: "quantum" for indistinguishable photons (coherent permanent of
            the row/column-repeated amplitude submatrix), "classical" for
            distinguishable photons (multinomial transport through the
            squared-magnitude grid).

    Returns:
        Mapping from output occupation tuple to probability. For a unitary
        matrix the probabilities sum to 1; for lossy matrices they need not.

    Raises:
        SizeLimitError: more than 6 photons (exhaustive enumeration bound).
    """
    occ = check_occupations(input_config, matrix.n_inputs)
    n_photons = sum(occ)
    if n_photons > MAX_PHOTONS:
        raise SizeLimitError(f"output_distribution supports at most {MAX_PHOTONS} photons, got {n_photons}")
    if mode not in ("quantum", "classical"):
        raise ValidationError(f"mode must be 'quantum' or 'classical', got {mode!r}")

    rows = np.repeat(np.arange(matrix.n_inputs), occ)
    s_fact = 1
    for s in occ:
        s_fact *= factorial(s)

    base = matrix.entries if mode == "quantum" else np.abs(matrix.entries) ** 2

    dist: dict[tuple[int, ...], float] = {}
    for config in _output_configurations(n_photons, matrix.n_outputs):
        cols = np.repeat(np.arange(matrix.n_outputs), config)
        sub = base[np.ix_(rows, cols)]
        perm = permanent(sub)
        t_fact = 1
        for t in config:
            t_fact *= factorial(t)
        if mode == "quantum":
            prob = abs(perm) ** 2 / (s_fact * t_fact)
        else:
            prob = perm.real / t_fact
        dist[config] = float(prob)
    return dist
