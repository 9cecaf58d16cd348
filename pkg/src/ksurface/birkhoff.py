"""Factorization of twisted loops into plus and minus parts.

For a loop g inside the dense factorizable set ("big cell") there is a
unique normalized M = I + sum_{k<0} m_k lambda^k making g*M free of
negative degrees; then

    g = P * M^{-1},   P = nonnegative part of g*M.

Matching coefficients of degrees -N..-1 turns the condition into a square
block-Toeplitz linear system for the m_k: for each k in [-N, -1],

    g_k + sum_{j=-N}^{-1} g_{k-j} m_j = 0.

Because the unknown blocks multiply g on the right, the two columns of the
m_j decouple and a single 2N x 2N complex solve recovers everything.  The
same matching at positive degrees, with the unknown acting on the left,
gives the opposite-order factorization g = P* * M with P* normalized at
degree zero.

Inputs already live in the truncated algebra, so coefficient matching is
exact at truncation order; no contour integrals are involved.  A singular
or ill-conditioned system means the loop sits outside the big cell, which
is reported as BigCellViolation and never papered over with a
least-squares pseudo-solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config
from .loops import (IDENTITY2, TwistedLoop, _stack_norm, invert_normalized_minus,
                    invert_normalized_plus, multiply, neumann_inverse, wiener_norm)


class BigCellViolation(RuntimeError):
    """The loop admits no stable factorization of the requested type."""


@dataclass(frozen=True)
class BirkhoffSplit:
    """Result of a factorization.

    opposite_order False: g = plus_factor * minus_factor^{-1}, minus factor
    normalized to I at its degree-zero coefficient.
    opposite_order True:  g = plus_factor * minus_factor, plus factor
    normalized instead.
    """

    plus_factor: TwistedLoop
    minus_factor: TwistedLoop
    residual: float
    condition_estimate: float
    opposite_order: bool = False

    def reconstruct(self) -> TwistedLoop:
        if self.opposite_order:
            return multiply(self.plus_factor, self.minus_factor)
        return multiply(self.plus_factor, _normalized_inverse(self.minus_factor))


def _normalized_inverse(m: TwistedLoop) -> TwistedLoop:
    """Inverse of a normalized one-sided loop, geometric series if safe.

    Both routes are exact within the window; the series route only needs
    the perturbation norm below one.
    """
    n = m.trunc
    pert = m.coef.copy()
    pert[n] -= IDENTITY2
    one_sided_minus = np.abs(pert[n:]).sum() == 0.0
    if _stack_norm(pert) < 1.0:
        return neumann_inverse(m)
    if one_sided_minus:
        return invert_normalized_minus(m)
    return invert_normalized_plus(m)


def _toeplitz_blocks(coef: np.ndarray, n: int, rows: range, cols: range,
                     transpose: bool) -> np.ndarray:
    """Dense matrix of 2x2 blocks g_{row-col} (optionally transposed)."""
    nr, nc = len(rows), len(cols)
    mat = np.zeros((2 * nr, 2 * nc), dtype=complex)
    for a, k in enumerate(rows):
        for b, j in enumerate(cols):
            blk = coef[k - j + n]
            mat[2 * a:2 * a + 2, 2 * b:2 * b + 2] = blk.T if transpose else blk
    return mat


def _solve_or_violate(mat: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, float]:
    cond = float(np.linalg.cond(mat))
    if not np.isfinite(cond) or cond > config.BIG_CELL_CONDITION_MAX:
        raise BigCellViolation(
            f"factorization system condition {cond:.3e} exceeds "
            f"{config.BIG_CELL_CONDITION_MAX:.0e}")
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise BigCellViolation(f"factorization system is singular: {exc}") from exc
    return sol, cond


def _full_product(ca: np.ndarray, cb: np.ndarray) -> np.ndarray:
    """Untruncated convolution of two coefficient stacks of equal width."""
    width = ca.shape[0]
    full = np.zeros((2 * width - 1, 2, 2), dtype=complex)
    for j in range(width):
        if np.abs(cb[j]).sum() == 0.0:
            continue
        full[j:j + width] += ca @ cb[j]
    return full


def split(g: TwistedLoop) -> BirkhoffSplit:
    """Factor g = plus * minus^{-1} with the minus factor normalized.

    The residual is the Wiener norm of whatever negative-degree mass
    survives in g*minus beyond the matched window; it vanishes up to
    roundoff for loops whose true factors decay inside the window.
    """
    n = g.trunc
    if n == 0:
        return BirkhoffSplit(g, TwistedLoop.identity(0), 0.0, 1.0)
    neg = range(-n, 0)
    if np.abs(np.stack([g.coefficient(k) for k in neg])).max() == 0.0:
        # already free of negative degrees
        return BirkhoffSplit(g, TwistedLoop.identity(n), 0.0, 1.0)
    mat = _toeplitz_blocks(g.coef, n, rows=neg, cols=neg, transpose=False)
    rhs = np.concatenate([-g.coefficient(k) for k in neg], axis=0)
    sol, cond = _solve_or_violate(mat, rhs)

    minus_coef = np.zeros_like(g.coef)
    minus_coef[n] = IDENTITY2
    for b, j in enumerate(neg):
        minus_coef[j + n] = sol[2 * b:2 * b + 2, :]
    minus = TwistedLoop(minus_coef, n)

    full = _full_product(g.coef, minus_coef)
    residual = _stack_norm(full[:2 * n])           # degrees below zero
    if residual > config.BIG_CELL_RESIDUAL_TOL:
        raise BigCellViolation(
            f"negative-degree residual {residual:.3e} exceeds "
            f"{config.BIG_CELL_RESIDUAL_TOL:.0e}")
    plus_coef = np.zeros_like(g.coef)
    plus_coef[n:] = full[2 * n:3 * n + 1]
    plus = TwistedLoop(plus_coef, n)
    return BirkhoffSplit(plus, minus, residual, cond)


def split_opposite(g: TwistedLoop) -> BirkhoffSplit:
    """Factor g = plus * minus with the plus factor normalized at degree 0.

    Solves for Q = plus^{-1} = I + positive degrees such that Q*g has no
    positive degrees; the unknown blocks multiply g on the left, so the
    system uses transposed blocks and decouples over the rows of the q_k.
    """
    n = g.trunc
    if n == 0:
        return BirkhoffSplit(TwistedLoop.identity(0), g, 0.0, 1.0,
                             opposite_order=True)
    pos = range(1, n + 1)
    if np.abs(np.stack([g.coefficient(k) for k in pos])).max() == 0.0:
        return BirkhoffSplit(TwistedLoop.identity(n), g, 0.0, 1.0,
                             opposite_order=True)
    mat = _toeplitz_blocks(g.coef, n, rows=pos, cols=pos, transpose=True)
    rhs = np.concatenate([-g.coefficient(k).T for k in pos], axis=0)
    sol, cond = _solve_or_violate(mat, rhs)

    q_coef = np.zeros_like(g.coef)
    q_coef[n] = IDENTITY2
    for b, j in enumerate(pos):
        q_coef[j + n] = sol[2 * b:2 * b + 2, :].T
    q = TwistedLoop(q_coef, n)

    full = _full_product(q_coef, g.coef)
    residual = _stack_norm(full[2 * n + 1:])       # degrees above zero
    if residual > config.BIG_CELL_RESIDUAL_TOL:
        raise BigCellViolation(
            f"positive-degree residual {residual:.3e} exceeds "
            f"{config.BIG_CELL_RESIDUAL_TOL:.0e}")
    minus_coef = np.zeros_like(g.coef)
    minus_coef[:n + 1] = full[n:2 * n + 1]
    minus = TwistedLoop(minus_coef, n)
    plus = invert_normalized_plus(q)
    return BirkhoffSplit(plus, minus, residual, cond, opposite_order=True)
