"""Axis angle data and the one-variable su(2) potential forms built from it.

Two smooth angle functions alpha(x), beta(y) with alpha(0) = beta(0) encode
a surface's coordinate angle along the axes.  They enter the construction
only through the symmetric potential pair

    xi_x = (i/2) [[0, e^{-i(alpha(x)-alpha(0))}], [e^{+i(...)}, 0]] dx
    xi_y = -(i/2) [[0, e^{-i(beta(y)-beta(0))}], [e^{+i(...)}, 0]] dy

attached to loop degrees +1 and -1 respectively.  A constant diagonal
rotation conjugates between this symmetric pair and the pair adapted to the
normalized frame; the sign convention of that rotation is pinned by tests,
not prose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline


class CompatibilityError(ValueError):
    """The two angle functions disagree at the shared origin."""


@dataclass(frozen=True)
class AngleData:
    """Sampled angle functions on [0, x0] x {0} and {0} x [0, y0]."""

    xs: np.ndarray
    alphas: np.ndarray
    ys: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        al = np.asarray(self.alphas, dtype=float)
        be = np.asarray(self.betas, dtype=float)
        if xs.shape != al.shape or ys.shape != be.shape:
            raise ValueError("sample counts do not match the declared grids")
        if xs.size < 2 or ys.size < 2:
            raise ValueError("need at least two samples per axis")
        for grid, name in ((xs, "x"), (ys, "y")):
            steps = np.diff(grid)
            if not np.allclose(steps, steps[0], rtol=0, atol=1e-12 * max(1.0, abs(grid[-1]))):
                raise ValueError(f"{name} grid is not uniform")
            if steps[0] <= 0:
                raise ValueError(f"{name} grid must increase")
        if abs(al[0] - be[0]) >= 1e-12:
            raise CompatibilityError(
                "initial angle functions must agree at the origin: "
                f"alpha(0) = {al[0]!r}, beta(0) = {be[0]!r}")
        for arr in (xs, ys, al, be):
            arr.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "alphas", al)
        object.__setattr__(self, "betas", be)
        object.__setattr__(self, "_alpha_spline", CubicSpline(xs, al))
        object.__setattr__(self, "_beta_spline", CubicSpline(ys, be))

    @classmethod
    def from_functions(cls, alpha, beta, x0: float, y0: float,
                       hx: float, hy: float) -> "AngleData":
        xs = _uniform_grid(x0, hx)
        ys = _uniform_grid(y0, hy)
        return cls(xs, np.asarray([alpha(x) for x in xs], dtype=float),
                   ys, np.asarray([beta(y) for y in ys], dtype=float))

    @property
    def phi0(self) -> float:
        return float(self.alphas[0])

    @property
    def hx(self) -> float:
        return float(self.xs[1] - self.xs[0])

    @property
    def hy(self) -> float:
        return float(self.ys[1] - self.ys[0])

    def alpha_at(self, x):
        """Cubic interpolation of alpha; the integrators need half steps."""
        return self._alpha_spline(x)

    def beta_at(self, y):
        return self._beta_spline(y)


def _uniform_grid(stop: float, step: float) -> np.ndarray:
    if step <= 0 or stop <= 0:
        raise ValueError("domain bound and step must be positive")
    n = round(stop / step)
    if abs(n * step - stop) > 1e-9 * max(1.0, stop):
        raise ValueError(f"step {step} does not divide the domain bound {stop}")
    return np.linspace(0.0, stop, n + 1)


def _phase_matrix(phase: float, sign: float) -> np.ndarray:
    """sign * (i/2) * offdiag(e^{-i phase}, e^{+i phase})."""
    return sign * 0.5j * np.array(
        [[0.0, np.exp(-1j * phase)], [np.exp(1j * phase), 0.0]], dtype=complex)


@dataclass(frozen=True)
class PotentialForm:
    """su(2)-valued one-form in a single coordinate, sampled on a grid.

    Every sample is off-diagonal with entries of modulus 1/2; the phases
    are stored separately so interpolation cannot break that structure.
    """

    direction: str                 # "x" or "y"
    grid: np.ndarray
    phases: np.ndarray             # phase per node
    sign: float                    # +1 for the x form, -1 for the y form
    lambda_power: int              # loop degree the form couples to

    def __post_init__(self):
        if self.direction not in ("x", "y"):
            raise ValueError("direction must be 'x' or 'y'")
        object.__setattr__(self, "_spline",
                           CubicSpline(self.grid, self.phases))

    @property
    def samples(self) -> np.ndarray:
        """Sample matrices at the grid nodes, shape (n, 2, 2)."""
        return np.stack([self.coefficient_at(t) for t in self.grid])

    def coefficient_at(self, t) -> np.ndarray:
        """Matrix coefficient of the form at parameter t (phases splined)."""
        return _phase_matrix(float(self._spline(t)), self.sign)


def build_symmetric_x(data: AngleData) -> PotentialForm:
    """x-direction symmetric potential from alpha, coupled to degree +1."""
    return PotentialForm("x", data.xs, data.alphas - data.alphas[0],
                         sign=+1.0, lambda_power=+1)


def build_symmetric_y(data: AngleData) -> PotentialForm:
    """y-direction symmetric potential from beta, coupled to degree -1."""
    return PotentialForm("y", data.ys, data.betas - data.betas[0],
                         sign=-1.0, lambda_power=-1)


@dataclass(frozen=True)
class GaugeRotation:
    """Diagonal phase rotation exp(i theta sigma3) about the third axis."""

    theta0: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[np.exp(1j * self.theta0), 0.0],
                         [0.0, np.exp(-1j * self.theta0)]], dtype=complex)

    @property
    def inverse_matrix(self) -> np.ndarray:
        return self.matrix.conj().T

    @classmethod
    def frame_base_rotation(cls, phi0: float) -> "GaugeRotation":
        """Rotation of angle -phi0/2 used to de-normalize the minus factor."""
        return cls(-phi0 / 2.0)


def gauge_conjugate(p: PotentialForm, r0: GaugeRotation) -> PotentialForm:
    """Conjugate every sample X -> R0^-1 X R0 by a constant diagonal rotation.

    For the off-diagonal forms here this only shifts the stored phase:
    with R0 = exp(i theta sigma3), the (1,2) entry picks up e^{-2i theta},
    i.e. the stored phase grows by 2 theta, and the modulus-1/2 structure
    survives exactly.
    """
    return PotentialForm(p.direction, p.grid, p.phases + 2.0 * r0.theta0,
                         sign=p.sign, lambda_power=p.lambda_power)


def normalized_y_potential(data: AngleData) -> PotentialForm:
    """The y potential adapted to the normalized frame.

    It carries the absolute phase beta(y) instead of the relative
    beta(y) - beta(0): conjugating the symmetric form by the rotation of
    angle +phi0/2 restores the absolute phase.
    """
    return gauge_conjugate(build_symmetric_y(data), GaugeRotation(data.phi0 / 2.0))


def normalized_x_potential(data: AngleData) -> PotentialForm:
    """The x potential adapted to the normalized frame.

    Identical to the symmetric form: its phase is already relative to
    alpha(0), which is what the normalized frame's initial condition
    forces on the x side.
    """
    return build_symmetric_x(data)


# ---------------------------------------------------------------------------
# presets

def amsler(phi0: float, x0: float = 2.0, y0: float = 2.0,
           hx: float = 0.05, hy: float = 0.05) -> AngleData:
    """Constant axis angle phi0 on both axes.

    phi0 must avoid the singular angles 0 and pi, where the coordinate
    velocities align and the parametrization stops being an immersion.
    """
    if not 0.0 < phi0 < np.pi:
        raise ValueError(
            f"base angle {phi0} outside (0, pi): the angle levels 0 and pi "
            "are singular for the parametrization (weak regularity fails)")
    return AngleData.from_functions(lambda x: phi0, lambda y: phi0,
                                    x0, y0, hx, hy)


def soliton(a: float = 1.0, shift: float = -2.0, x0: float = 2.0,
            y0: float = 2.0, hx: float = 0.05, hy: float = 0.05) -> AngleData:
    """Travelling-kink axis data 4*atan(exp(a x + shift)), 4*atan(exp(y/a + shift)).

    Without the shift the kink sits at the origin where the angle equals pi
    exactly, a singular level; the default shift = -2 moves the singular
    crossing into the interior of the default domain where it is flagged
    and jumped rather than seeding the construction.
    """
    if a <= 0:
        raise ValueError("kink steepness must be positive")
    return AngleData.from_functions(
        lambda x: 4.0 * np.arctan(np.exp(a * x + shift)),
        lambda y: 4.0 * np.arctan(np.exp(y / a + shift)),
        x0, y0, hx, hy)


def soliton_closed_form(x, y, a: float = 1.0, shift: float = -2.0):
    """Exact angle field of the soliton data: 4*atan(exp(a x + y/a + shift))."""
    return 4.0 * np.arctan(np.exp(a * np.asarray(x) + np.asarray(y) / a + shift))


def tabulated(xs, alphas, ys, betas) -> AngleData:
    """Angle data from explicit samples (e.g. parsed from CSV)."""
    return AngleData(np.asarray(xs, dtype=float), np.asarray(alphas, dtype=float),
                     np.asarray(ys, dtype=float), np.asarray(betas, dtype=float))


def load_axis_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column (coordinate, angle in radians) CSV file."""
    rows = np.loadtxt(path, delimiter=",", dtype=float, comments="#", ndmin=2)
    if rows.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns (coordinate, angle)")
    return rows[:, 0], rows[:, 1]
