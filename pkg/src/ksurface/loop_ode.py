"""Loop-valued linear ODE integration along the two coordinate axes.

The plus path solves U'(x) = U * (-lambda * xi_x(x)) from the identity,
staying inside nonnegative loop degrees; the minus path solves
U'(y) = U * (-lambda^{-1} * xi_y(y)) inside nonpositive degrees.  Each
right multiplication shifts the degree by exactly +-1, so the degree-zero
coefficient never moves: it stays the identity along the whole path, which
is checked rather than assumed.

Classical fixed-step RK4 with the step equal to the potential grid step;
the potential phases are splined, so the half-step stage values keep the
exact off-diagonal modulus 1/2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import config
from .loops import IDENTITY2, TwistedLoop, evaluate, shift_product
from .potentials import PotentialForm


class TruncationSaturated(UserWarning):
    """Top-degree coefficient grew past the configured threshold."""


class UnitarityError(RuntimeError):
    """Evaluated path drifted too far from the unitary group."""


@dataclass(frozen=True)
class FrameFactorPath:
    """Per-node loop values of one axis factor.

    sign +1 marks the nonnegative-degree (x) factor, -1 the nonpositive
    (y) one.  values has shape (nodes, 2N+1, 2, 2).
    """

    direction: str
    grid: np.ndarray
    values: np.ndarray
    sign: int
    top_degree_norm: float

    def node(self, i: int) -> TwistedLoop:
        n = (self.values.shape[1] - 1) // 2
        return TwistedLoop(self.values[i], n)

    def to_records(self) -> list:
        return [{"coordinate": float(t), "loop": self.node(i).to_records()}
                for i, t in enumerate(self.grid)]


def _check_unitarity(values: np.ndarray, grid: np.ndarray,
                     lambda_samples) -> None:
    n = (values.shape[1] - 1) // 2
    worst = 0.0
    for lam in lambda_samples:
        powers = lam ** np.arange(-n, n + 1)
        evals = np.einsum("ikab,k->iab", values, powers)
        dev = np.abs(evals @ np.conj(np.swapaxes(evals, 1, 2)) - IDENTITY2)
        worst = max(worst, float(dev.max()))
    if worst > config.UNITARITY_ABORT:
        raise UnitarityError(
            f"path deviates from unitarity by {worst:.3e} (> "
            f"{config.UNITARITY_ABORT:.0e}); the truncation degree is too "
            "low for this domain")
    if worst > config.UNITARITY_WARN:
        warnings.warn(f"path unitarity drift {worst:.3e}", TruncationSaturated)


def _integrate(xi: PotentialForm, trunc: int, shift: int,
               lambda_samples) -> np.ndarray:
    grid = xi.grid
    h = float(grid[1] - grid[0])
    width = 2 * trunc + 1
    values = np.zeros((grid.size, width, 2, 2), dtype=complex)
    u = np.zeros((width, 2, 2), dtype=complex)
    u[trunc] = IDENTITY2
    values[0] = u

    def rhs(state, t):
        return shift_product(state, -xi.coefficient_at(t), shift)

    for i in range(grid.size - 1):
        t = grid[i]
        k1 = rhs(u, t)
        k2 = rhs(u + 0.5 * h * k1, t + 0.5 * h)
        k3 = rhs(u + 0.5 * h * k2, t + 0.5 * h)
        k4 = rhs(u + h * k3, t + h)
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        values[i + 1] = u
    return values


def _finish(xi: PotentialForm, values: np.ndarray, trunc: int, sign: int,
            lambda_samples) -> FrameFactorPath:
    top = trunc if sign > 0 else -trunc
    top_norm = float(np.abs(values[:, top + trunc]).sum(axis=(1, 2)).max())
    if top_norm > config.TOP_DEGREE_NORM_TOL:
        warnings.warn(
            f"top-degree coefficient norm {top_norm:.3e} exceeds "
            f"{config.TOP_DEGREE_NORM_TOL:.0e}; increase the truncation degree",
            TruncationSaturated)
    _check_unitarity(values, xi.grid, lambda_samples)
    return FrameFactorPath(xi.direction, xi.grid, values, sign, top_norm)


def integrate_plus(xi_x: PotentialForm,
                   trunc: int = config.TRUNCATION_DEGREE,
                   lambda_samples=config.LAMBDA_SAMPLES) -> FrameFactorPath:
    """Integrate the nonnegative-degree factor along x from the identity."""
    if xi_x.direction != "x" or xi_x.lambda_power != +1:
        raise ValueError("integrate_plus expects an x-direction potential")
    values = _integrate(xi_x, trunc, shift=+1, lambda_samples=lambda_samples)
    return _finish(xi_x, values, trunc, +1, lambda_samples)


def integrate_minus(xi_y: PotentialForm,
                    trunc: int = config.TRUNCATION_DEGREE,
                    lambda_samples=config.LAMBDA_SAMPLES) -> FrameFactorPath:
    """Integrate the nonpositive-degree factor along y from the identity."""
    if xi_y.direction != "y" or xi_y.lambda_power != -1:
        raise ValueError("integrate_minus expects a y-direction potential")
    values = _integrate(xi_y, trunc, shift=-1, lambda_samples=lambda_samples)
    return _finish(xi_y, values, trunc, -1, lambda_samples)
