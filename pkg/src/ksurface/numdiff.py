"""Finite-difference stencils on uniform grids with invalid-node masks.

Weights come from Fornberg's recursion, so arbitrary (one-sided, offset)
windows are supported with the best order the window allows.  Stencils
never cross nodes marked invalid: each point gets the widest contiguous
valid window (up to 5 nodes) containing it, preferring a centered one.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def fd_weights(offsets: tuple[float, ...], order: int) -> np.ndarray:
    """Weights approximating the order-th derivative at 0 from `offsets`.

    Standard divided-difference recursion; the new row must be formed
    before the previous row is rescaled, hence the update order inside
    the inner loop.
    """
    x = np.asarray(offsets, dtype=float)
    n = x.size
    if order >= n:
        raise ValueError("need more nodes than the derivative order")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0]
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


@lru_cache(maxsize=None)
def _cached_weights(offsets: tuple[int, ...], order: int) -> np.ndarray:
    return fd_weights(tuple(float(o) for o in offsets), order)


def _runs(valid: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, stop) index ranges of consecutive True entries."""
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    stops = np.concatenate((idx[breaks] + 1, [idx[-1] + 1]))
    return list(zip(starts, stops))


def masked_derivative(values: np.ndarray, h: float, order: int = 1,
                      valid: np.ndarray | None = None,
                      width: int = 5) -> np.ndarray:
    """Derivative along axis 0, NaN where no admissible stencil exists.

    values: (n, ...) real or complex samples on a uniform grid of step h.
    valid:  (n,) bool mask; invalid nodes are neither differentiated nor
            used in any stencil.
    """
    n = values.shape[0]
    out = np.full(values.shape, np.nan, dtype=values.dtype)
    if valid is None:
        valid = np.ones(n, dtype=bool)
    for start, stop in _runs(np.asarray(valid, dtype=bool)):
        length = stop - start
        w = min(width, length)
        if w < order + 1:
            continue
        for i in range(start, stop):
            lo = min(max(i - (w - 1) // 2, start), stop - w)
            offs = tuple(range(lo - i, lo - i + w))
            wts = _cached_weights(offs, order)
            window = values[lo:lo + w]
            out[i] = np.tensordot(wts, window, axes=(0, 0)) / h ** order
    return out


def _uniform_derivative(values: np.ndarray, h: float, order: int,
                        width: int) -> np.ndarray:
    """Vectorized derivative along axis 0 of a hole-free uniform grid."""
    n = values.shape[0]
    w = min(width, n)
    if w < order + 1:
        return np.full(values.shape, np.nan, dtype=values.dtype)
    out = np.empty_like(values)
    half = (w - 1) // 2
    centered = tuple(range(-half, w - half))
    wts = _cached_weights(centered, order)
    interior = np.tensordot(
        wts, np.stack([values[half + o:n - (w - 1 - half) + o]
                       for o in centered]), axes=(0, 0))
    out[half:n - (w - 1 - half)] = interior
    for i in list(range(half)) + list(range(n - (w - 1 - half), n)):
        lo = min(max(i - half, 0), n - w)
        offs = tuple(range(lo - i, lo - i + w))
        out[i] = np.tensordot(_cached_weights(offs, order), values[lo:lo + w],
                              axes=(0, 0))
    return out / h ** order


def grid_derivative(field: np.ndarray, h: float, axis: int, order: int = 1,
                    valid: np.ndarray | None = None,
                    width: int = 5) -> np.ndarray:
    """Derivative along one axis of an (ni, nj, ...) field.

    With a validity mask the stencils are chosen line by line so they
    respect holes anywhere in the grid; without one a vectorized uniform
    path is used.
    """
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    if valid is not None and bool(np.all(valid)):
        valid = None
    f = field if axis == 0 else np.swapaxes(field, 0, 1)
    if valid is None:
        out = _uniform_derivative(f, h, order, width)
        return out if axis == 0 else np.swapaxes(out, 0, 1)
    v = valid if axis == 0 else valid.T
    out = np.empty_like(f)
    for j in range(f.shape[1]):
        out[:, j] = masked_derivative(f[:, j], h, order, v[:, j], width)
    return out if axis == 0 else np.swapaxes(out, 0, 1)


def mixed_derivative(field: np.ndarray, hx: float, hy: float,
                     valid: np.ndarray | None = None,
                     width: int = 5) -> np.ndarray:
    """Mixed second derivative d2/dxdy of a scalar grid field."""
    dx = grid_derivative(field, hx, axis=0, valid=valid, width=width)
    ok = np.isfinite(dx) if valid is None else (np.isfinite(dx) & valid)
    return grid_derivative(np.nan_to_num(dx), hy, axis=1, valid=ok, width=width)
