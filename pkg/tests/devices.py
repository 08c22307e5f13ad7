"""Shared test devices and helpers."""

import numpy as np

import multiport as mp


def polar(mag, phase):
    return mag * np.exp(1j * phase)


def characterized_mmi_4x4() -> mp.TransitionMatrix:
    """Reconstructed transition matrix of a fabricated 4x4 MMI splitter.

    Hardware characterization fixture: lossy (first-column squared norm
    ~1.34), first row and column real positive, one near-zero entry (0.03).
    """
    rows = [
        [0.72, 0.49, 0.43, 0.24],
        [0.62, polar(0.37, 0.06), -polar(0.52, -0.06), -polar(0.18, -0.41)],
        [0.56, -polar(0.60, -0.04), polar(0.03, -0.33), -polar(0.42, 0.22)],
        [0.35, -polar(0.21, -0.47), -polar(0.42, 0.22), polar(0.47, 0.41)],
    ]
    return mp.make_transition_matrix(rows)


def unitaries_with_anchors(count, n=4, min_anchor=0.05, seed_start=1):
    """First ``count`` seeded random unitaries whose first row/column entries
    all exceed ``min_anchor`` in magnitude (so the gauge is well anchored)."""
    found = []
    seed = seed_start
    while len(found) < count:
        u = mp.random_unitary(n, seed)
        a = np.abs(u.entries)
        if a[0, :].min() > min_anchor and a[:, 0].min() > min_anchor:
            found.append((seed, u))
        seed += 1
    return found


def random_lossy_matrix(rng, n=4, m=4):
    """Random non-unitary complex grid with entries of order one."""
    return mp.make_transition_matrix(
        rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    )
