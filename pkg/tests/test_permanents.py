import math

import numpy as np
import pytest

import multiport as mp
from multiport.errors import ShapeError, SizeLimitError


def test_2x2_definition():
    rng = np.random.default_rng(1)
    a, b, c, d = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    assert mp.permanent([[a, b], [c, d]]) == pytest.approx(a * d + b * c)


def test_all_ones_counts_permutations():
    for n in range(1, 7):
        assert mp.permanent(np.ones((n, n))) == pytest.approx(math.factorial(n))


def test_identity():
    assert mp.permanent(np.eye(3)) == pytest.approx(1.0)
    assert mp.permanent_bruteforce(np.eye(3)) == pytest.approx(1.0)


def test_permutation_matrix():
    assert mp.permanent_bruteforce([[0, 1], [1, 0]]) == pytest.approx(1.0)


def test_small_integer_example():
    assert mp.permanent_bruteforce([[1, 2], [3, 4]]) == pytest.approx(10.0)
    assert mp.permanent([[1, 2], [3, 4]]) == pytest.approx(10.0)


def test_ryser_matches_bruteforce_oracle():
    rng = np.random.default_rng(20240502)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        grid = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        fast = mp.permanent(grid)
        slow = mp.permanent_bruteforce(grid)
        assert abs(fast - slow) <= 1e-10 * abs(slow)


def test_random_6x6_matches_oracle():
    rng = np.random.default_rng(6)
    grid = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    fast = mp.permanent(grid)
    slow = mp.permanent_bruteforce(grid)
    assert abs(fast - slow) <= 1e-10 * abs(slow)


def test_bit_reproducible():
    rng = np.random.default_rng(3)
    grid = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    assert mp.permanent(grid) == mp.permanent(grid)


def test_non_square_rejected():
    with pytest.raises(ShapeError):
        mp.permanent(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        mp.permanent_bruteforce(np.ones((2, 3)))


def test_size_limits():
    with pytest.raises(SizeLimitError):
        mp.permanent(np.ones((31, 31)))
    with pytest.raises(SizeLimitError):
        mp.permanent_bruteforce(np.ones((10, 10)))
