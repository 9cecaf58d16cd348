import numpy as np
import pytest

from ksurface import birkhoff, loops
from helpers import random_near_identity, random_twisted


def make_product_oracle(rng, trunc=16, scale=0.015):
    """Known factors (P, M) and the loop P * M^{-1} built first.

    The normalized-minus inverse is exact within the window and the
    matched degree range feels almost nothing of the dropped tail (only a
    third-order-in-scale echo), so factoring recovers P and M far inside
    the 1e-8 target.
    """
    p = random_near_identity(rng, trunc, support=range(1, trunc + 1), scale=scale)
    m = random_near_identity(rng, trunc, support=range(-trunc, 0), scale=scale)
    g = loops.multiply(p, loops.invert_normalized_minus(m))
    return p, m, g


def test_plus_only_input_is_fixed_point():
    rng = np.random.default_rng(2)
    p = random_near_identity(rng, 8, support=range(1, 9), scale=0.2)
    res = birkhoff.split(p)
    assert np.abs(res.plus_factor.coef - p.coef).max() < 1e-14
    assert np.abs(res.minus_factor.coef
                  - loops.TwistedLoop.identity(8).coef).max() == 0.0
    assert res.residual == 0.0


def test_identity_splits_trivially():
    res = birkhoff.split(loops.TwistedLoop.identity(8))
    assert np.allclose(res.plus_factor.coef, loops.TwistedLoop.identity(8).coef)
    assert np.allclose(res.minus_factor.coef, loops.TwistedLoop.identity(8).coef)
    assert res.residual == 0.0


def test_constructive_oracle_recovers_both_factors():
    rng = np.random.default_rng(101)
    for _ in range(100):
        p, m, g = make_product_oracle(rng)
        res = birkhoff.split(g)
        assert np.abs(res.plus_factor.coef - p.coef).max() < 1e-8
        assert np.abs(res.minus_factor.coef - m.coef).max() < 1e-8
        assert res.residual < 1e-8


def test_split_is_deterministic_byte_for_byte():
    rng = np.random.default_rng(55)
    _, _, g = make_product_oracle(rng)
    a = birkhoff.split(g)
    b = birkhoff.split(g)
    assert a.plus_factor.coef.tobytes() == b.plus_factor.coef.tobytes()
    assert a.minus_factor.coef.tobytes() == b.minus_factor.coef.tobytes()
    assert a.residual == b.residual and a.condition_estimate == b.condition_estimate


def test_minus_normalization_is_exact():
    rng = np.random.default_rng(77)
    for _ in range(10):
        _, _, g = make_product_oracle(rng)
        res = birkhoff.split(g)
        assert np.array_equal(res.minus_factor.coefficient(0), np.eye(2))
        # no positive degrees in the minus factor at all
        n = res.minus_factor.trunc
        assert np.abs(res.minus_factor.coef[n + 1:]).max() == 0.0


def test_reconstruction_within_tolerance():
    rng = np.random.default_rng(303)
    for _ in range(20):
        _, _, g = make_product_oracle(rng)
        back = birkhoff.split(g).reconstruct()
        assert loops.wiener_norm(
            loops.TwistedLoop(back.coef - g.coef, g.trunc, twisted=False)) < 1e-8


def test_factors_are_twisted():
    rng = np.random.default_rng(42)
    _, _, g = make_product_oracle(rng)
    res = birkhoff.split(g)
    assert loops.twist_violation(res.plus_factor.coef) <= 1e-12
    assert loops.twist_violation(res.minus_factor.coef) <= 1e-12


def test_near_identity_contraction_bound():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(60):
        pert = random_twisted(rng, 16, scale=0.02, decay=0.45)
        coef = pert.coef.copy()
        coef[16] += loops.IDENTITY2
        g = loops.TwistedLoop(coef, 16)
        dist = loops.wiener_norm(pert)
        if dist >= 0.1:
            continue
        checked += 1
        res = birkhoff.split(g)
        minus_dev = res.minus_factor.coef.copy()
        minus_dev[16] -= loops.IDENTITY2
        dev = loops.wiener_norm(loops.TwistedLoop(minus_dev, 16))
        assert dev <= 2.0 * dist
    assert checked >= 30


def test_opposite_split_minus_only_fixed_point():
    rng = np.random.default_rng(6)
    m = random_near_identity(rng, 8, support=range(-8, 0), scale=0.2)
    res = birkhoff.split_opposite(m)
    assert res.opposite_order
    assert np.abs(res.minus_factor.coef - m.coef).max() < 1e-14
    assert np.allclose(res.plus_factor.coef, loops.TwistedLoop.identity(8).coef)


def test_opposite_split_constructive_oracle():
    rng = np.random.default_rng(202)
    for _ in range(100):
        # here the exact product lives inside the window: no tail at all
        p = random_near_identity(rng, 16, support=range(1, 17), scale=0.03)
        m = random_near_identity(rng, 16, support=range(-16, 0), scale=0.03)
        g = loops.multiply(p, m)
        assert g.truncation_loss == 0.0
        res = birkhoff.split_opposite(g)
        assert np.abs(res.plus_factor.coef - p.coef).max() < 1e-8
        assert np.abs(res.minus_factor.coef - m.coef).max() < 1e-8


def test_two_factorizations_agree_pointwise():
    rng = np.random.default_rng(9)
    _, _, g = make_product_oracle(rng, trunc=16)
    first = birkhoff.split(g)
    second = birkhoff.split_opposite(g)
    target = loops.evaluate(g, 1.0)
    a = loops.evaluate(first.plus_factor, 1.0) @ np.linalg.inv(
        loops.evaluate(first.minus_factor, 1.0))
    b = loops.evaluate(second.plus_factor, 1.0) @ loops.evaluate(
        second.minus_factor, 1.0)
    assert np.abs(a - target).max() < 1e-8
    assert np.abs(b - target).max() < 1e-8


def test_outside_big_cell_raises():
    # antidiagonal(lambda, -1/lambda) admits no factorization of this type:
    # the matching system's matrix is exactly singular
    g = loops.TwistedLoop.from_terms(
        {1: np.array([[0, 1], [0, 0]], dtype=complex),
         -1: np.array([[0, 0], [-1, 0]], dtype=complex)}, trunc=4)
    with pytest.raises(birkhoff.BigCellViolation):
        birkhoff.split(g)


def test_no_pseudo_solution_for_singular_systems():
    # the degenerate input must raise, not return a least-squares answer
    g = loops.TwistedLoop.from_terms(
        {1: np.array([[0, 1], [0, 0]], dtype=complex)}, trunc=3)
    coef = g.coef.copy()
    coef[3] = 0.0   # kill the identity so the system is singular
    g = loops.TwistedLoop(coef, 3)
    with pytest.raises(birkhoff.BigCellViolation):
        birkhoff.split_opposite(g)
