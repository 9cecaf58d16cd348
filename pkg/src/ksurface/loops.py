"""Arithmetic on truncated twisted matrix Laurent polynomials.

A loop is a finite Laurent polynomial ``sum_{k=-N..N} C_k lambda^k`` with
complex 2x2 coefficient matrices.  The twist constraint ties matrix
structure to degree parity: diagonal entries may only appear at even
degrees and off-diagonal entries at odd degrees (equivalently
``X(-lambda) = sigma3 X(lambda) sigma3``).  Products, coefficient-wise
derivatives and inverses all preserve the constraint, and every
constructor checks it.

The Wiener norm (sum of moduli of all scalar coefficients) makes the set
a normed algebra: ``|AB| <= |A| |B|`` and ``|I| = 1``.  Truncating a
product drops out-of-range degrees; the Wiener mass of the dropped part
is carried on the result as ``truncation_loss`` instead of being silently
discarded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import config

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)


class LossOfUnitarity(RuntimeError):
    """An evaluated loop failed its determinant / unitarity check."""


def twist_violation(coef: np.ndarray) -> float:
    """Largest wrong-parity entry modulus in a dense coefficient stack.

    ``coef`` has shape (2N+1, 2, 2) with index k+N holding degree k.
    Even degrees must be diagonal, odd degrees off-diagonal.
    """
    width = coef.shape[0]
    n = (width - 1) // 2
    degs = np.arange(-n, n + 1)
    even = degs % 2 == 0
    off = np.abs(coef[even][:, [0, 1], [1, 0]]).max(initial=0.0)
    diag = np.abs(coef[~even][:, [0, 1], [0, 1]]).max(initial=0.0)
    return float(max(off, diag))


@dataclass(frozen=True)
class TwistedLoop:
    """Dense truncated twisted loop.

    coef holds degrees -trunc..trunc at index k+trunc.  Instances are
    immutable; the coefficient array is frozen on construction.
    """

    coef: np.ndarray
    trunc: int
    truncation_loss: float = 0.0
    twisted: bool = field(default=True, repr=False)

    def __post_init__(self):
        coef = np.array(self.coef, dtype=complex)   # private copy
        if coef.shape != (2 * self.trunc + 1, 2, 2):
            raise ValueError(f"coefficient stack has shape {coef.shape}, "
                             f"expected {(2 * self.trunc + 1, 2, 2)}")
        if not np.all(np.isfinite(coef)):
            raise ValueError("non-finite loop coefficient")
        if self.twisted:
            bad = twist_violation(coef)
            if bad > config.TWIST_TOL:
                raise ValueError(f"twist violation {bad:.3e} exceeds "
                                 f"{config.TWIST_TOL:.0e}")
        coef.setflags(write=False)
        object.__setattr__(self, "coef", coef)

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, trunc: int = config.TRUNCATION_DEGREE) -> "TwistedLoop":
        return cls(np.zeros((2 * trunc + 1, 2, 2), dtype=complex), trunc)

    @classmethod
    def identity(cls, trunc: int = config.TRUNCATION_DEGREE) -> "TwistedLoop":
        coef = np.zeros((2 * trunc + 1, 2, 2), dtype=complex)
        coef[trunc] = IDENTITY2
        return cls(coef, trunc)

    @classmethod
    def from_terms(cls, terms: dict[int, np.ndarray],
                   trunc: int = config.TRUNCATION_DEGREE) -> "TwistedLoop":
        """Build a loop from a {degree: 2x2 matrix} mapping."""
        coef = np.zeros((2 * trunc + 1, 2, 2), dtype=complex)
        for k, m in terms.items():
            if abs(k) > trunc:
                raise ValueError(f"degree {k} outside truncation window {trunc}")
            coef[k + trunc] += np.asarray(m, dtype=complex)
        return cls(coef, trunc)

    # -- accessors ------------------------------------------------------

    def coefficient(self, k: int) -> np.ndarray:
        if abs(k) > self.trunc:
            return np.zeros((2, 2), dtype=complex)
        return self.coef[k + self.trunc]

    @property
    def max_degree(self) -> int:
        """Largest |k| carrying a nonzero coefficient (0 for the zero loop)."""
        nz = np.nonzero(np.abs(self.coef).sum(axis=(1, 2)))[0]
        if nz.size == 0:
            return 0
        return int(max(abs(nz.min() - self.trunc), abs(nz.max() - self.trunc)))

    # -- serialization --------------------------------------------------

    def to_records(self) -> list:
        """Nonzero degrees as (degree, 8 reals) records."""
        recs = []
        for k in range(-self.trunc, self.trunc + 1):
            m = self.coefficient(k)
            if np.abs(m).sum() == 0.0:
                continue
            flat = m.reshape(-1)
            recs.append([k, [float(v) for z in flat for v in (z.real, z.imag)]])
        return recs

    @classmethod
    def from_records(cls, records: list,
                     trunc: int = config.TRUNCATION_DEGREE) -> "TwistedLoop":
        terms = {}
        for k, vals in records:
            re = np.asarray(vals[0::2], dtype=float)
            im = np.asarray(vals[1::2], dtype=float)
            terms[int(k)] = (re + 1j * im).reshape(2, 2)
        return cls.from_terms(terms, trunc)

    def to_json(self) -> str:
        return json.dumps({"trunc": self.trunc, "coefficients": self.to_records()})

    @classmethod
    def from_json(cls, text: str) -> "TwistedLoop":
        data = json.loads(text)
        return cls.from_records(data["coefficients"], trunc=data["trunc"])


def _embed(loop: TwistedLoop, trunc: int) -> np.ndarray:
    """Coefficient stack of `loop` widened to truncation `trunc`."""
    if loop.trunc == trunc:
        return loop.coef
    pad = trunc - loop.trunc
    out = np.zeros((2 * trunc + 1, 2, 2), dtype=complex)
    out[pad:pad + 2 * loop.trunc + 1] = loop.coef
    return out


def _stack_norm(stack: np.ndarray) -> float:
    """Wiener norm of a coefficient stack: largest row sum of entry series.

    The row-sum (induced) variant is used so the identity has norm one
    while submultiplicativity is kept; the plain sum over all four entries
    would give the identity norm two.
    """
    if stack.size == 0:
        return 0.0
    return float(np.abs(stack).sum(axis=0).sum(axis=1).max())


def multiply(a: TwistedLoop, b: TwistedLoop) -> TwistedLoop:
    """Cauchy product truncated to the larger of the two windows.

    The Wiener norm of the dropped out-of-range degrees is added to the
    truncation losses inherited from the operands.
    """
    n = max(a.trunc, b.trunc)
    ca, cb = _embed(a, n), _embed(b, n)
    width = 2 * n + 1
    full = np.zeros((2 * width - 1, 2, 2), dtype=complex)
    for j in range(width):
        bj = cb[j]
        if np.abs(bj).sum() == 0.0:
            continue
        full[j:j + width] += ca @ bj
    kept = full[n:n + width]
    dropped = _stack_norm(full[:n]) + _stack_norm(full[n + width:])
    loss = dropped + a.truncation_loss + b.truncation_loss
    return TwistedLoop(kept, n, truncation_loss=loss)


def evaluate(a: TwistedLoop, lambda0: float) -> np.ndarray:
    """Value of the loop at a nonzero real parameter (Horner in both tails)."""
    if lambda0 == 0.0:
        raise ValueError("loop evaluation requires a nonzero parameter")
    n = a.trunc
    pos = a.coef[n:]
    val = pos[-1].copy()
    for c in pos[-2::-1]:
        val = val * lambda0 + c
    if n > 0:
        mu = 1.0 / lambda0
        neg = a.coef[:n]           # degrees -n .. -1
        nv = neg[0].copy()         # degree -n outermost
        for c in neg[1:]:
            nv = nv * mu + c
        val = val + nv * mu
    return val


def evaluate_stack(coefs: np.ndarray, lambda0: float) -> np.ndarray:
    """Vectorized evaluation of a stack of loops.

    ``coefs`` has shape (..., 2N+1, 2, 2); returns (..., 2, 2).
    """
    if lambda0 == 0.0:
        raise ValueError("loop evaluation requires a nonzero parameter")
    width = coefs.shape[-3]
    n = (width - 1) // 2
    powers = lambda0 ** np.arange(-n, n + 1)
    return np.einsum("...kab,k->...ab", coefs, powers)


def lambda_scaled_derivative(a: TwistedLoop) -> TwistedLoop:
    """Degree-weighted derivative: coefficient k maps to k * C_k.

    This is d/dt along lambda = e^t, applied term by term.
    """
    degs = np.arange(-a.trunc, a.trunc + 1, dtype=float)
    return TwistedLoop(a.coef * degs[:, None, None], a.trunc,
                       truncation_loss=a.truncation_loss)


def wiener_norm(a: TwistedLoop) -> float:
    """Wiener norm of a matrix loop.

    Each entry contributes the sum of its coefficient moduli; rows are then
    combined by maximum, giving a submultiplicative norm with |I| = 1.
    """
    return _stack_norm(a.coef)


def unitary_inverse(g: TwistedLoop, sample_lambdas,
                    det_tol: float = config.DET_TOL) -> list[np.ndarray]:
    """Pointwise inverses of a unitary-valued loop at real samples.

    Uses the conjugate transpose, so it is only valid for loops that
    evaluate inside the unitary group; the determinant check guards that
    assumption and raises LossOfUnitarity when truncation has eroded it.
    """
    out = []
    for lam in sample_lambdas:
        m = evaluate(g, lam)
        det = np.linalg.det(m)
        if abs(det - 1.0) > det_tol:
            raise LossOfUnitarity(
                f"determinant {det:.6g} at parameter {lam} deviates from 1 "
                f"by more than {det_tol:.0e}; increase the truncation degree")
        out.append(m.conj().T)
    return out


def unitary_adjoint_loop(g: TwistedLoop) -> TwistedLoop:
    """Loop whose coefficients are the daggers of g's, degree by degree.

    For a loop that is unitary at every real parameter this is the inverse
    loop (both sides agree on the real axis, hence identically).
    """
    return TwistedLoop(np.conj(np.swapaxes(g.coef, -1, -2)), g.trunc,
                       truncation_loss=g.truncation_loss)


def shift_product(coef: np.ndarray, matrix: np.ndarray, shift: int) -> np.ndarray:
    """Raw-array product of a loop with ``matrix * lambda^shift`` on the right.

    Degrees pushed outside the window vanish; used by the path integrators
    where the right factor always has a single degree.
    """
    out = np.zeros_like(coef)
    if shift >= 0:
        out[shift:] = coef[:coef.shape[0] - shift] @ matrix
    else:
        out[:shift] = coef[-shift:] @ matrix
    return out


def _inverse_recursion(coef: np.ndarray, n: int, order: range) -> np.ndarray:
    inv = np.zeros_like(coef)
    inv[n] = IDENTITY2
    for k in order:
        acc = coef[k + n].copy()                  # j = 0 term uses inv_0 = I
        between = range(k + 1, 0) if k < 0 else range(1, k)
        for j in between:
            acc += coef[k - j + n] @ inv[j + n]
        inv[k + n] = -acc
    return inv


def invert_normalized_minus(m: TwistedLoop) -> TwistedLoop:
    """Inverse of a loop of the form I + (strictly negative degrees).

    The triangular recursion is exact at truncation order: the inverse's
    coefficients on the window coincide with those of the true inverse.
    """
    if np.abs(m.coefficient(0) - IDENTITY2).max() > config.TWIST_TOL \
            or np.abs(m.coef[m.trunc + 1:]).sum() > 0.0:
        raise ValueError("expected a normalized nonpositive-degree loop")
    inv = _inverse_recursion(m.coef, m.trunc, range(-1, -m.trunc - 1, -1))
    return TwistedLoop(inv, m.trunc)


def invert_normalized_plus(p: TwistedLoop) -> TwistedLoop:
    """Inverse of a loop of the form I + (strictly positive degrees)."""
    if np.abs(p.coefficient(0) - IDENTITY2).max() > config.TWIST_TOL \
            or np.abs(p.coef[:p.trunc]).sum() > 0.0:
        raise ValueError("expected a normalized nonnegative-degree loop")
    inv = _inverse_recursion(p.coef, p.trunc, range(1, p.trunc + 1))
    return TwistedLoop(inv, p.trunc)


def neumann_inverse(m: TwistedLoop) -> TwistedLoop:
    """Inverse of I + Y via the geometric series sum_n (-Y)^n.

    Y must have only strictly negative (or only strictly positive) degrees;
    the series then terminates within the truncation window, so the result
    is exact and agrees with the triangular recursion.
    """
    n = m.trunc
    y = m.coef.copy()
    y[n] -= IDENTITY2
    if np.abs(y[:n]).sum() > 0.0 and np.abs(y[n + 1:]).sum() > 0.0:
        raise ValueError("geometric-series inverse needs one-sided degrees")
    term = TwistedLoop.identity(n)
    total = term.coef.copy()
    minus_y = TwistedLoop(-y, n)
    for _ in range(n):
        term = multiply(term, minus_y)
        if np.abs(term.coef).sum() == 0.0:
            break
        total = total + term.coef
    return TwistedLoop(total, n)
