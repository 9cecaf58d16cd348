"""Shared generators and small oracles for the test suite."""

import numpy as np

from ksurface import loops


def random_twisted(rng, trunc, support=None, scale=0.1, decay=0.6):
    """Random twisted loop with geometrically decaying coefficients.

    support restricts the populated degrees (an iterable of ints); by
    default every degree in the window is populated with its parity
    pattern (diagonal at even degrees, off-diagonal at odd ones).
    """
    coef = np.zeros((2 * trunc + 1, 2, 2), dtype=complex)
    degs = range(-trunc, trunc + 1) if support is None else support
    for k in degs:
        amp = scale * decay ** abs(k)
        z = amp * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
        m = np.zeros((2, 2), dtype=complex)
        if k % 2 == 0:
            m[0, 0], m[1, 1] = z
        else:
            m[0, 1], m[1, 0] = z
        coef[k + trunc] = m
    return loops.TwistedLoop(coef, trunc)


def random_near_identity(rng, trunc, support, scale=0.05, decay=0.45):
    """I plus a small random twisted perturbation on the given degrees.

    The default decay keeps products of perturbations that escape the
    truncation window far below the factorization residual tolerance.
    """
    pert = random_twisted(rng, trunc, support=support, scale=scale, decay=decay)
    coef = pert.coef.copy()
    coef[trunc] += loops.IDENTITY2
    return loops.TwistedLoop(coef, trunc)


def naive_evaluate(loop, lam):
    """Power-by-power summation, the independent evaluation oracle."""
    total = np.zeros((2, 2), dtype=complex)
    for k in range(-loop.trunc, loop.trunc + 1):
        total += loop.coefficient(k) * lam ** k
    return total


def exp_su2(matrix):
    """Matrix exponential of a 2x2 via eigendecomposition (test oracle)."""
    vals, vecs = np.linalg.eig(matrix)
    return (vecs * np.exp(vals)) @ np.linalg.inv(vecs)
