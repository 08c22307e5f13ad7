"""Matrix permanents.

`permanent` is the production path (Ryser's inclusion-exclusion formula with
Gray-code row-sum updates, O(2^n * n) work). `permanent_bruteforce` is the
independent permutation-sum oracle kept for cross-checking; the two share no
code beyond input validation.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np

from .errors import ShapeError, SizeLimitError
from .validation import as_complex_grid

RYSER_MAX = 30
BRUTEFORCE_MAX = 9


def _square(grid, limit, name):
    a = as_complex_grid(grid)
    n, m = a.shape
    if n != m:
        raise ShapeError(f"permanent requires a square grid, got {n}x{m}")
    if n > limit:
        raise SizeLimitError(f"{name} supports n <= {limit}, got n = {n}")
    return a


def permanent(grid) -> complex:
    """
    Compute the permanent of a square complex grid with Ryser's formula.

    Parameters
    ----------
    grid : square 2-D array-like, n <= 30
        Complex entries, all finite.

    Returns
    -------
    complex
        The permanent. Bit-reproducible for a fixed input: the Gray-code
        subset order is fixed, so the floating-point operation sequence is
        identical on every call.
    """
    a = _square(grid, RYSER_MAX, "permanent")
    n = a.shape[0]

    total = 0.0 + 0.0j
    row_sums = np.zeros(n, dtype=complex)
    gray_prev = 0
    popcount = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        changed = gray ^ gray_prev
        j = changed.bit_length() - 1
        if gray & changed:
            row_sums += a[:, j]
            popcount += 1
        else:
            row_sums -= a[:, j]
            popcount -= 1
        gray_prev = gray
        term = complex(np.prod(row_sums))
        if (n - popcount) % 2 == 0:
            total += term
        else:
            total -= term
    return total


def permanent_bruteforce(grid) -> complex:
    """
    Compute the permanent as the explicit sum over all n! permutations.

    Parameters
    ----------
    grid : square 2-D array-like, n <= 9
        Complex entries, all finite.

    Returns
    -------
    complex
        The permanent. Oracle implementation: O(n! * n), plain Python
        complex arithmetic, independent of the Ryser path.
    """
    a = _square(grid, BRUTEFORCE_MAX, "permanent_bruteforce")
    n = a.shape[0]
    rows = a.tolist()
    total = 0.0 + 0.0j
    for cols in permutations(range(n)):
        prod = 1.0 + 0.0j
        for i, j in enumerate(cols):
            prod *= rows[i][j]
        total += prod
    return total
