"""Frame assembly on the grid, the immersion, and geometric diagnostics.

The frame at a node combines the two axis factors through a factorization:

    g(x, y) = Um(y)^{-1} * Up(x),   g = V_plus * V_minus^{-1},
    U(x, y) = Um(y) * V_plus(x, y).

Um and Up are the integrated axis paths brought into the frame-adapted
gauge first: the minus path is conjugated by the constant base rotation
exp(-(i/2) phi0 sigma3) (restoring the absolute phase its generator needs)
and the plus path by sigma1 (fixing the phase orientation of its
generator).  Both corrections are pinned by tests against the directly
integrated frame and the closed-form angle fields, not by convention
arguments; see the cross-validation suite.

The immersion is the loop-parameter derivative of the frame,

    psi = (lambda d/dlambda U) * U^{-1}  evaluated at lambda0,

mapped to 3-space by X = (i/2)(x1 s1 + x2 s2 + x3 s3) -> (x1, x2, x3)
with unit scale.  For lambda0 != 1 the family deformation rescales the
asymptotic arc lengths by lambda0 and 1/lambda0, so all derivative-based
diagnostics use the effective steps (lambda0*hx, hy/lambda0); node (i, j)
then corresponds to the same surface point across the family.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import config
from .birkhoff import BigCellViolation, split
from .loops import (SIGMA1, SIGMA2, SIGMA3, TwistedLoop, evaluate_stack,
                    invert_normalized_minus, multiply)
from .loop_ode import FrameFactorPath, UnitarityError
from .numdiff import grid_derivative, mixed_derivative
from .potentials import GaugeRotation

_PAULI = np.stack([SIGMA1, SIGMA2, SIGMA3])


class NodeFlag(IntEnum):
    REGULAR = 0
    BIG_CELL = 1
    ANGLE_SINGULAR = 2


@dataclass
class FrameGrid:
    """Loop-valued frame on the product grid, with per-node status flags."""

    xs: np.ndarray
    ys: np.ndarray
    coefs: np.ndarray          # (ni, nj, 2N+1, 2, 2)
    flags: np.ndarray          # (ni, nj) int8
    phi0: float
    trunc: int
    truncation_loss: float

    @property
    def hx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def hy(self) -> float:
        return float(self.ys[1] - self.ys[0])

    def loop_at(self, i: int, j: int) -> TwistedLoop:
        return TwistedLoop(self.coefs[i, j], self.trunc)


@dataclass
class SurfaceGrid:
    """Immersion points and first-order data for one family member.

    The normal field comes from the frame's own Gauss map when available,
    which stays smooth across the weak singularities where the tangent
    cross product vanishes.
    """

    xs: np.ndarray
    ys: np.ndarray
    points: np.ndarray         # (ni, nj, 3)
    tangents_x: np.ndarray
    tangents_y: np.ndarray
    normal: np.ndarray
    lambda0: float
    hx_eff: float
    hy_eff: float
    flags: np.ndarray
    phi0: float


@dataclass
class AngleField:
    """Recovered coordinate angle with its continuation flags."""

    values: np.ndarray
    source: str                # "from_geometry" or "from_connection"
    flags: np.ndarray


def assemble_frame(plus_path: FrameFactorPath, minus_path: FrameFactorPath,
                   r0: GaugeRotation) -> FrameGrid:
    """Combine the axis paths into the frame grid by nodewise factorization.

    Nodes whose factorization fails the big-cell test are flagged and
    skipped; the sweep never aborts on them.
    """
    if plus_path.sign != +1 or minus_path.sign != -1:
        raise ValueError("expected a plus path and a minus path")
    n = (plus_path.values.shape[1] - 1) // 2

    rm, rmi = r0.matrix, r0.inverse_matrix
    pv = np.einsum("ab,ikbc,cd->ikad", SIGMA1, plus_path.values, SIGMA1)
    mv = np.einsum("ab,ikbc,cd->ikad", rm, minus_path.values, rmi)

    ni, nj = plus_path.grid.size, minus_path.grid.size
    coefs = np.full((ni, nj, 2 * n + 1, 2, 2), np.nan, dtype=complex)
    flags = np.zeros((ni, nj), dtype=np.int8)
    loss = 0.0
    for j in range(nj):
        um = TwistedLoop(mv[j], n)
        um_inv = invert_normalized_minus(um)
        for i in range(ni):
            g = multiply(um_inv, TwistedLoop(pv[i], n))
            try:
                factors = split(g)
            except BigCellViolation:
                flags[i, j] = NodeFlag.BIG_CELL
                continue
            node = multiply(um, factors.plus_factor)
            coefs[i, j] = node.coef
            loss = max(loss, node.truncation_loss)
    phi0 = -2.0 * r0.theta0
    return FrameGrid(plus_path.grid, minus_path.grid, coefs, flags,
                     phi0, n, loss)


def su2_to_vector(x: np.ndarray) -> np.ndarray:
    """Components along (i/2) * (Pauli basis); works on stacks.

    The real part of the traces, which would signal a non-anti-Hermitian
    input, is discarded here and monitored by the callers' checks.
    """
    return np.einsum("...ab,kba->...k", x, _PAULI).imag


def build_surface_grid(points: np.ndarray, xs, ys, lambda0: float,
                       hx: float, hy: float, flags: np.ndarray,
                       phi0: float, normal: np.ndarray | None = None
                       ) -> SurfaceGrid:
    """Attach tangents and a normal field to an immersion on the grid.

    Derivatives are taken with respect to the family member's own arc
    length parameters (effective steps lambda0*hx and hy/lambda0) on
    stencils that avoid flagged nodes.  Without an externally supplied
    normal the (unreliable near angle singularities) tangent cross
    product is used.
    """
    hx_eff, hy_eff = lambda0 * hx, hy / lambda0
    valid = (flags != NodeFlag.BIG_CELL) & np.isfinite(points[..., 0])
    tx = grid_derivative(points, hx_eff, axis=0, valid=valid)
    ty = grid_derivative(points, hy_eff, axis=1, valid=valid)
    if normal is None:
        cross = np.cross(tx, ty)
        norm = np.linalg.norm(cross, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore"):
            normal = np.where(norm > 1e-12, cross / norm, np.nan)
    return SurfaceGrid(np.asarray(xs), np.asarray(ys), points, tx, ty, normal,
                       lambda0, hx_eff, hy_eff, flags.copy(), phi0)


def frame_normal(u_val: np.ndarray) -> np.ndarray:
    """Unit normal from evaluated frames: the direction of U i sigma3 U^-1.

    Commutes with the diagonal gauge freedom of the factorization, so it
    is well defined and smooth even where the immersion degenerates.
    """
    conj = u_val @ (1j * SIGMA3) @ np.conj(np.swapaxes(u_val, -1, -2))
    vec = su2_to_vector(conj)
    norm = np.linalg.norm(vec, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        return np.where(norm > 1e-12, vec / norm, np.nan)


def sym_immersion(frame: FrameGrid, lambda0: float) -> SurfaceGrid:
    """Immersion of one family member from the frame grid.

    Flagged nodes produce NaN points and are skipped by every downstream
    stencil.
    """
    if lambda0 <= 0:
        raise ValueError("family parameter must be positive")
    degs = np.arange(-frame.trunc, frame.trunc + 1, dtype=float)
    coefs = np.nan_to_num(frame.coefs)
    u_val = evaluate_stack(coefs, lambda0)
    d_val = evaluate_stack(coefs * degs[:, None, None], lambda0)

    regular = frame.flags == NodeFlag.REGULAR
    dets = np.linalg.det(u_val[regular])
    det_dev = float(np.abs(dets - 1.0).max()) if dets.size else 0.0
    if det_dev > config.UNITARITY_ABORT:
        raise UnitarityError(
            f"frame determinant drift {det_dev:.3e} at parameter {lambda0}")
    if det_dev > config.DET_TOL:
        warnings.warn(f"frame determinant drift {det_dev:.3e} at "
                      f"parameter {lambda0}")

    psi = su2_to_vector(d_val @ np.conj(np.swapaxes(u_val, -1, -2)))
    psi = psi - psi[0, 0]
    psi[frame.flags == NodeFlag.BIG_CELL] = np.nan
    normal = frame_normal(u_val)
    normal[frame.flags == NodeFlag.BIG_CELL] = np.nan
    return build_surface_grid(psi, frame.xs, frame.ys, lambda0,
                              frame.hx, frame.hy, frame.flags, frame.phi0,
                              normal=normal)


def associated_family_sweep(frame: FrameGrid, lambdas) -> list[SurfaceGrid]:
    """One surface per requested family parameter."""
    return [sym_immersion(frame, lam) for lam in lambdas]


def _branch_candidates(base: float, reference: float) -> float:
    k = round((reference - base) / (2.0 * np.pi))
    return base + 2.0 * np.pi * k


def _continue_branch(raw: np.ndarray, valid: np.ndarray, seed: float) -> np.ndarray:
    """Flood-fill 2-pi unwrapping of a signed principal-value angle field.

    raw holds values in (-pi, pi].  The origin is seeded with the winding
    closest to `seed`; remaining connected components are seeded from
    their nearest recovered axis value.
    """
    ni, nj = raw.shape
    values = np.full((ni, nj), np.nan)

    def bfs(start, start_value):
        values[start] = start_value
        queue = deque([start])
        while queue:
            i, j = queue.popleft()
            for i2, j2 in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                if 0 <= i2 < ni and 0 <= j2 < nj and valid[i2, j2] \
                        and np.isnan(values[i2, j2]):
                    values[i2, j2] = _branch_candidates(raw[i2, j2],
                                                        values[i, j])
                    queue.append((i2, j2))

    if valid[0, 0]:
        bfs((0, 0), _branch_candidates(raw[0, 0], seed))
    while True:
        left = np.argwhere(valid & np.isnan(values))
        if left.size == 0:
            break
        # component seed: the node nearest one of the axes, continued from
        # the already recovered value there (falling back to the origin seed)
        i, j = min(map(tuple, left), key=lambda t: min(t[0], t[1]))
        if j <= i and np.isfinite(values[i, 0]):
            ref = values[i, 0]
        elif np.isfinite(values[0, j]):
            ref = values[0, j]
        else:
            ref = seed
        bfs((i, j), _branch_candidates(raw[i, j], ref))
    return values


def recover_angle(surface: SurfaceGrid) -> AngleField:
    """Coordinate angle from the tangent fields.

    cos(angle) is the tangent dot product; the cross product projected on
    the normal field supplies a signed sin, so the principal value only
    needs 2-pi unwrapping by continuity from the base angle at the origin.
    Nodes with |sin| below the configured tolerance are marked
    angle-singular (but still receive a value; the angle field itself is
    smooth across those curves).
    """
    tx, ty = surface.tangents_x, surface.tangents_y
    nx = np.linalg.norm(tx, axis=-1)
    ny = np.linalg.norm(ty, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cosv = np.einsum("ijk,ijk->ij", tx, ty) / (nx * ny)
        sinv = np.einsum("ijk,ijk->ij", np.cross(tx, ty),
                         surface.normal) / (nx * ny)
    valid = np.isfinite(cosv) & np.isfinite(sinv)
    raw = np.arctan2(np.where(valid, sinv, 0.0), np.where(valid, cosv, 1.0))
    values = _continue_branch(raw, valid, surface.phi0)

    flags = surface.flags.copy()
    singular = valid & (np.abs(sinv) < config.ANGLE_SINGULAR_SIN_TOL) \
        & (flags == NodeFlag.REGULAR)
    flags[singular] = NodeFlag.ANGLE_SINGULAR
    return AngleField(values, "from_geometry", flags)


def _connection_coefficient(frame: FrameGrid, axis: int, degree: int,
                            valid: np.ndarray) -> np.ndarray:
    """Single loop coefficient of U^{-1} dU along one grid direction.

    The loop inverse is the coefficient-wise dagger, valid for unitary
    loops; the derivative uses flag-aware stencils.
    """
    h = frame.hx if axis == 0 else frame.hy
    coefs = np.nan_to_num(frame.coefs)
    dv = grid_derivative(coefs, h, axis=axis, valid=valid)
    dag = np.conj(np.swapaxes(coefs, -1, -2))
    n = frame.trunc
    width = 2 * n + 1
    out = np.zeros(frame.coefs.shape[:2] + (2, 2), dtype=complex)
    for p in range(width):
        q = degree - (p - n) + n
        if 0 <= q < width:
            out += np.einsum("ijab,ijbc->ijac", dag[:, :, p],
                             np.nan_to_num(dv[:, :, q]))
    return out


def recover_angle_from_connection(frame: FrameGrid) -> AngleField:
    """Second, independent angle estimate read off the frame's connection.

    In the frame-adapted gauge the connection's degree -1 (y-direction)
    and degree +1 (x-direction) coefficients are off-diagonal with phases
    e^{i angle} and a gauge phase respectively; their ratio

        e^{i angle} = -B_{-1}[2,1] / A_{+1}[2,1]

    cancels the node-dependent diagonal gauge freedom left over from the
    factorization normalization, so the extraction is gauge-invariant.
    The phase is then unwrapped by the same continuation as the geometric
    recovery.
    """
    valid = frame.flags != NodeFlag.BIG_CELL
    b_m1 = _connection_coefficient(frame, axis=1, degree=-1, valid=valid)
    a_p1 = _connection_coefficient(frame, axis=0, degree=+1, valid=valid)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = -b_m1[..., 1, 0] / a_p1[..., 1, 0]
        raw = np.angle(ratio)
    ok = valid & np.isfinite(ratio)
    values = _continue_branch(np.where(ok, raw, 0.0), ok, frame.phi0)
    flags = frame.flags.copy()
    sing = ok & (np.abs(np.sin(values)) < config.ANGLE_SINGULAR_SIN_TOL) \
        & (flags == NodeFlag.REGULAR)
    flags[sing] = NodeFlag.ANGLE_SINGULAR
    return AngleField(values, "from_connection", flags)


@dataclass
class FormReport:
    """First and second fundamental form coefficients per node."""

    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    gauss_curvature: np.ndarray
    conditioned: np.ndarray    # where the curvature estimate is trustworthy


def fundamental_forms(surface: SurfaceGrid, angle: AngleField) -> FormReport:
    """Form coefficients and the curvature estimate from finite differences.

    The curvature divides by sin^2(angle); nodes too close to the singular
    angle levels are reported NaN and excluded from the conditioned mask
    rather than polluting the estimate.
    """
    tx, ty = surface.tangents_x, surface.tangents_y
    e = np.einsum("ijk,ijk->ij", tx, tx)
    f = np.einsum("ijk,ijk->ij", tx, ty)
    g = np.einsum("ijk,ijk->ij", ty, ty)

    valid = (surface.flags != NodeFlag.BIG_CELL) \
        & np.isfinite(surface.points[..., 0])
    pxx = grid_derivative(surface.points, surface.hx_eff, axis=0, order=2,
                          valid=valid)
    pyy = grid_derivative(surface.points, surface.hy_eff, axis=1, order=2,
                          valid=valid)
    pxy = grid_derivative(np.nan_to_num(surface.tangents_x), surface.hy_eff,
                          axis=1, valid=valid & np.isfinite(tx[..., 0]))
    nrm = surface.normal
    el = np.einsum("ijk,ijk->ij", pxx, nrm)
    m = np.einsum("ijk,ijk->ij", pxy, nrm)
    nn = np.einsum("ijk,ijk->ij", pyy, nrm)

    denom = e * g - f * f
    conditioned = (np.abs(np.sin(angle.values)) >= config.FORM_CONDITION_SIN_MIN) \
        & np.isfinite(el) & np.isfinite(m) & np.isfinite(nn) \
        & (angle.flags == NodeFlag.REGULAR)
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(conditioned, (el * nn - m * m) / denom, np.nan)
    return FormReport(e, f, g, el, m, nn, k, conditioned)


def sine_gordon_residual(angle: AngleField, hx: float, hy: float,
                         interior: int = 2) -> float:
    """Max-norm defect of the recovered angle in the characteristic PDE.

    Mixed second difference minus sin(angle), taken over interior nodes:
    the outermost `interior` layers use one-sided stencils whose error
    constants are an order of magnitude worse and are excluded.
    """
    valid = np.isfinite(angle.values)
    mixed = mixed_derivative(np.nan_to_num(angle.values), hx, hy, valid=valid)
    resid = mixed - np.sin(angle.values)
    if interior > 0:
        resid = resid[interior:-interior, interior:-interior]
    ok = np.isfinite(resid)
    if not ok.any():
        return np.nan
    return float(np.abs(resid[ok]).max())
