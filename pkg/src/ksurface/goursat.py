"""Independent reference solvers used to validate the loop construction.

Three pieces, none of which touch the loop algebra:

* a characteristic-rectangle solver for u_xy = sin(u) with data on the
  axes, as a fixed-point iteration of the integral form
  u = alpha(x) + beta(y) - alpha(0) + double-integral of sin(u);
* direct integration of the frame's linear system at a fixed numeric
  loop parameter, with the parameter sensitivity propagated by the
  variational equations (no finite differencing in the parameter);
* the radial reduction for constant axis data, t h'' + h' = sin h,
  started at the regular-singular origin by its series expansion.

The fixed-point iteration runs on an internally refined grid; the
trapezoid rule is second order, so oracle-grade accuracy at desk scale
comes from refinement rather than a fancier scheme.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import RectBivariateSpline

from . import config
from .loops import SIGMA1, SIGMA3
from .potentials import AngleData
from .surface import SurfaceGrid, build_surface_grid, frame_normal, su2_to_vector


class FlatnessWarning(UserWarning):
    """Order of integration mattered more than the configured tolerance."""


@dataclass
class GoursatField:
    """Solution of the characteristic initial value problem on two grids.

    values lives on the requested output grid; the fine arrays keep the
    internal refinement for consumers that need smooth interpolation.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    fine_xs: np.ndarray
    fine_ys: np.ndarray
    fine_values: np.ndarray
    iterations: int
    final_change: float

    def interpolator(self) -> RectBivariateSpline:
        return RectBivariateSpline(self.fine_xs, self.fine_ys,
                                   self.fine_values)

    def pde_residual(self) -> float:
        """Interior max-norm of (mixed difference - sin u) on the fine grid."""
        from .numdiff import mixed_derivative

        hx = self.fine_xs[1] - self.fine_xs[0]
        hy = self.fine_ys[1] - self.fine_ys[0]
        mixed = mixed_derivative(self.fine_values, hx, hy)
        resid = np.abs(mixed - np.sin(self.fine_values))[2:-2, 2:-2]
        return float(resid.max())


def _cumulative_2d(f: np.ndarray, hx: float, hy: float) -> np.ndarray:
    once = cumulative_trapezoid(f, dx=hx, axis=0, initial=0.0)
    return cumulative_trapezoid(once, dx=hy, axis=1, initial=0.0)


def _trapezoid_fixed_point(data: AngleData, refine: int, tol: float,
                           max_iter: int):
    nx = (data.xs.size - 1) * refine + 1
    ny = (data.ys.size - 1) * refine + 1
    fx = np.linspace(data.xs[0], data.xs[-1], nx)
    fy = np.linspace(data.ys[0], data.ys[-1], ny)
    hx, hy = fx[1] - fx[0], fy[1] - fy[0]
    wave = data.alpha_at(fx)[:, None] + data.beta_at(fy)[None, :] - data.phi0

    u = wave.copy()
    change = np.inf
    for iteration in range(1, max_iter + 1):
        new = wave + _cumulative_2d(np.sin(u), hx, hy)
        change = float(np.abs(new - u).max())
        u = new
        if change < tol:
            break
    else:
        raise RuntimeError(
            f"fixed-point iteration stalled: last change {change:.3e} after "
            f"{max_iter} sweeps")
    return fx, fy, u, iteration, change


def solve_goursat(data: AngleData, refine: int = config.GOURSAT_REFINE,
                  tol: float = config.GOURSAT_TOL,
                  max_iter: int = config.GOURSAT_MAX_ITER,
                  extrapolate: bool = True) -> GoursatField:
    """Fixed point of the trapezoidal integral discretization.

    The iteration contracts factorially on bounded domains (the sine is
    1-Lipschitz and the double integral gains 1/(n!)^2), so convergence to
    1e-12 takes a couple dozen sweeps at desk scale.

    The quadrature itself is second order.  With extrapolate=True (the
    default) the fixed point is also computed on the half-step grid and
    the two are combined, cancelling the leading error term; the stored
    field is then fourth-order accurate, which the frame-integration
    consumers need for their flatness budget.
    """
    if refine < 1:
        raise ValueError("refinement factor must be at least 1")
    fx, fy, u, iteration, change = _trapezoid_fixed_point(
        data, refine, tol, max_iter)
    if extrapolate:
        _, _, u2, it2, change = _trapezoid_fixed_point(
            data, 2 * refine, tol, max_iter)
        u = (4.0 * u2[::2, ::2] - u) / 3.0
        iteration += it2
    return GoursatField(data.xs, data.ys, u[::refine, ::refine],
                        fx, fy, u, iteration, change)


@dataclass
class LaxFrameGrid:
    """Frames and their parameter sensitivities at a fixed loop parameter."""

    xs: np.ndarray
    ys: np.ndarray
    matrices: np.ndarray            # (ni, nj, 2, 2)
    sensitivities: np.ndarray       # (ni, nj, 2, 2), d(matrix)/d(parameter)
    lambda0: float
    flatness_defect: float
    phi0: float


def _a_matrix(phix, lam: float) -> np.ndarray:
    out = np.zeros(np.shape(phix) + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5j * phix
    out[..., 1, 1] = -0.5j * phix
    out[..., 0, 1] = -0.5j * lam
    out[..., 1, 0] = -0.5j * lam
    return out


def _b_matrix(phi, lam: float) -> np.ndarray:
    out = np.zeros(np.shape(phi) + (2, 2), dtype=complex)
    out[..., 0, 1] = 0.5j / lam * np.exp(-1j * np.asarray(phi))
    out[..., 1, 0] = 0.5j / lam * np.exp(1j * np.asarray(phi))
    return out


def _step_pair(u, s, pair_at, h):
    """One RK4 step of u' = u*c(t), s' = s*c(t) + u*c_lam(t).

    pair_at maps the stage abscissa in [0, 1] to (c, c_lam), batched to
    broadcast against the (..., 2, 2) states.
    """
    def rhs(uu, ss, tau):
        c, cl = pair_at(tau)
        return uu @ c, ss @ c + uu @ cl

    k1u, k1s = rhs(u, s, 0.0)
    k2u, k2s = rhs(u + 0.5 * h * k1u, s + 0.5 * h * k1s, 0.5)
    k3u, k3s = rhs(u + 0.5 * h * k2u, s + 0.5 * h * k2s, 0.5)
    k4u, k4s = rhs(u + h * k3u, s + h * k3s, 1.0)
    return (u + h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
            s + h / 6 * (k1s + 2 * k2s + 2 * k3s + k4s))


def _sweep(u, s, grid, substeps, pair_of_t):
    """March a batch of states through `grid`, recording at every node."""
    mats = np.empty((grid.size,) + u.shape, dtype=complex)
    sens = np.empty_like(mats)
    mats[0], sens[0] = u, s
    for k in range(grid.size - 1):
        h = (grid[k + 1] - grid[k]) / substeps
        for m in range(substeps):
            t0 = grid[k] + m * h
            u, s = _step_pair(u, s, lambda tau: pair_of_t(t0 + tau * h), h)
        mats[k + 1], sens[k + 1] = u, s
    return mats, sens


def _spline_at(spline, x, y) -> np.ndarray:
    xx, yy = np.broadcast_arrays(np.asarray(x, dtype=float),
                                 np.asarray(y, dtype=float))
    return spline(xx.ravel(), yy.ravel(), grid=False).reshape(xx.shape)


def _integrate_lax_ordered(phi_spline, phix_spline, xs, ys, lam,
                           substeps, x_first: bool):
    dlam_a = np.array([[0, -0.5j], [-0.5j, 0]], dtype=complex)
    ident = np.eye(2, dtype=complex)
    zero = np.zeros((2, 2), dtype=complex)

    def a_coeffs(x, y):
        c = _a_matrix(_spline_at(phix_spline, x, y), lam)
        return c, np.broadcast_to(dlam_a, c.shape)

    def b_coeffs(x, y):
        c = _b_matrix(_spline_at(phi_spline, x, y), lam)
        return c, -c / lam

    if x_first:
        row_m, row_s = _sweep(ident, zero, xs, substeps,
                              lambda x: a_coeffs(x, ys[0]))
        mats, sens = _sweep(row_m, row_s, ys, substeps,
                            lambda y: b_coeffs(xs, y))
        return mats.transpose(1, 0, 2, 3), sens.transpose(1, 0, 2, 3)
    col_m, col_s = _sweep(ident, zero, ys, substeps,
                          lambda y: b_coeffs(xs[0], y))
    mats, sens = _sweep(col_m, col_s, xs, substeps,
                        lambda x: a_coeffs(x, ys))
    return mats, sens


def integrate_lax(field: GoursatField, lambda0: float,
                  substeps: int = config.LAX_SUBSTEPS,
                  check_flatness: bool = True) -> LaxFrameGrid:
    """Frames at a fixed parameter by integrating along x, then up columns.

    The x-derivative of the angle enters the x-direction coefficient; it
    is formed by central differences on the solver's fine grid and then
    splined.  Integrating in the opposite order measures how flat the
    connection really is; a defect above the tolerance warns that the
    angle field does not satisfy the equation well enough.
    """
    if lambda0 <= 0:
        raise ValueError("parameter must be positive")
    from .numdiff import grid_derivative

    fhx = field.fine_xs[1] - field.fine_xs[0]
    phix_fine = grid_derivative(field.fine_values, fhx, axis=0)
    phi_spline = field.interpolator()
    phix_spline = RectBivariateSpline(field.fine_xs, field.fine_ys, phix_fine)

    mats, sens = _integrate_lax_ordered(phi_spline, phix_spline, field.xs,
                                        field.ys, lambda0, substeps, True)
    defect = 0.0
    if check_flatness:
        alt, _ = _integrate_lax_ordered(phi_spline, phix_spline, field.xs,
                                        field.ys, lambda0, substeps, False)
        defect = float(np.abs(mats - alt).max())
        if defect > config.FLATNESS_TOL:
            warnings.warn(
                f"integration order changed the frames by {defect:.3e}; "
                "the angle field violates the compatibility equation",
                FlatnessWarning)
    return LaxFrameGrid(field.xs, field.ys, mats, sens, lambda0, defect,
                        float(field.values[0, 0]))


def reference_immersion(frames: LaxFrameGrid,
                        lambda0: float | None = None) -> SurfaceGrid:
    """Immersion from directly integrated frames and their sensitivities.

    Same parameter-derivative formula and 3-space conventions as the main
    construction, so the two surfaces are directly comparable node by
    node (both frames are the identity at the origin).
    """
    if lambda0 is None:
        lambda0 = frames.lambda0
    if lambda0 != frames.lambda0:
        raise ValueError("frames were integrated at a different parameter")
    inv = np.conj(np.swapaxes(frames.matrices, -1, -2))
    psi = su2_to_vector(lambda0 * frames.sensitivities @ inv)
    psi = psi - psi[0, 0]
    flags = np.zeros(psi.shape[:2], dtype=np.int8)
    hx = float(frames.xs[1] - frames.xs[0])
    hy = float(frames.ys[1] - frames.ys[0])
    normal = frame_normal(frames.matrices)
    return build_surface_grid(psi, frames.xs, frames.ys, lambda0, hx, hy,
                              flags, phi0=frames.phi0, normal=normal)


@dataclass
class RadialSolution:
    """Angle profile h(t) for constant axis data, h(0) = base angle."""

    ts: np.ndarray
    values: np.ndarray
    _dense: object

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self._dense(np.clip(t, self.ts[0], None)))
        return out[0] if out.ndim > 0 else out


def solve_amsler_radial(phi0: float, t_max: float,
                        samples: int = 400) -> RadialSolution:
    """Integrate t h'' + h' = sin h from the regular-singular origin.

    The origin is handled by the series start
    h = phi0 + t sin(phi0) + t^2 sin(phi0) cos(phi0) / 4 + O(t^3),
    whose linear coefficient also pins h'(0) = sin(phi0).
    """
    if not 0.0 < phi0 < np.pi:
        raise ValueError("base angle must lie strictly between 0 and pi")
    t0 = 1e-8
    h0 = phi0 + t0 * np.sin(phi0) + t0 ** 2 * np.sin(phi0) * np.cos(phi0) / 4
    dh0 = np.sin(phi0) + t0 * np.sin(phi0) * np.cos(phi0) / 2

    def rhs(t, y):
        return [y[1], (np.sin(y[0]) - y[1]) / t]

    sol = solve_ivp(rhs, (t0, t_max), [h0, dh0], method="DOP853",
                    rtol=1e-11, atol=1e-12, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"radial integration failed: {sol.message} "
                           "(the profile approaches a singular angle level)")
    ts = np.linspace(t0, t_max, samples)
    values = sol.sol(ts)[0]
    return RadialSolution(ts, values, lambda t: sol.sol(t)[0])
