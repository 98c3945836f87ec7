import math

import numpy as np
import pytest

from lvt import (
    Direction,
    InvalidInputError,
    legendre,
    quantum_joint,
    quantum_marginal,
    sphere_quadrature,
)


def test_direction_renormalizes_small_drift():
    d = Direction(1.0 + 5e-10, 0.0, 0.0)
    assert math.isclose(np.linalg.norm(d.as_array()), 1.0, abs_tol=1e-15)


def test_direction_rejects_non_unit():
    with pytest.raises(InvalidInputError):
        Direction(1.0, 1.0, 0.0)
    with pytest.raises(InvalidInputError):
        Direction(0.0, 0.0, 0.0)


def test_direction_random_is_unit_and_seeded():
    rng = np.random.default_rng(7)
    samples = [Direction.random(rng) for _ in range(50)]
    for d in samples:
        assert abs(np.linalg.norm(d.as_array()) - 1.0) < 1e-12
    again = [Direction.random(np.random.default_rng(7)) for _ in range(1)][0]
    assert np.allclose(again.as_array(), samples[0].as_array())


def test_joint_perfect_anticorrelation_vanishes():
    a = Direction(0.0, 0.0, 1.0)
    assert quantum_joint(1, 1, a, a, 1.0) == 0.0


def test_joint_opposite_outcomes_at_third_visibility():
    a = Direction(0.0, 0.0, 1.0)
    assert abs(quantum_joint(1, -1, a, a, 1.0 / 3.0) - 1.0 / 3.0) < 1e-15


def test_joint_outcomes_sum_to_one():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a = Direction.random(rng)
        b = Direction.random(rng)
        v = rng.uniform(0.0, 1.0)
        total = sum(quantum_joint(m, mp, a, b, v) for m in (1, -1) for mp in (1, -1))
        assert abs(total - 1.0) < 1e-14


def test_joint_validates_inputs():
    a = Direction(0.0, 0.0, 1.0)
    with pytest.raises(InvalidInputError):
        quantum_joint(2, 1, a, a, 0.5)
    with pytest.raises(InvalidInputError):
        quantum_joint(1, 1, a, a, 1.5)
    with pytest.raises(InvalidInputError):
        quantum_joint(1, 1, a, a, -0.1)


def test_marginal_is_half_everywhere():
    a = Direction(1.0, 0.0, 0.0)
    assert quantum_marginal(1, a, 0.9) == 0.5
    assert quantum_marginal(-1, a, 0.0) == 0.5


def test_legendre_known_value():
    assert abs(legendre(3, 0.5) - (-0.4375)) < 1e-15


def test_legendre_at_unit_argument():
    for j in range(7):
        assert abs(legendre(j, 1.0) - 1.0) < 1e-14
        assert abs(legendre(j, -1.0) - (-1.0) ** j) < 1e-14


def test_legendre_matches_explicit_quartic():
    xs = np.linspace(-1.0, 1.0, 101)
    explicit = (35.0 * xs**4 - 30.0 * xs**2 + 3.0) / 8.0
    assert np.max(np.abs(legendre(4, xs) - explicit)) < 1e-13


def test_legendre_accepts_arrays():
    xs = np.linspace(-1.0, 1.0, 11)
    out = legendre(2, xs)
    assert out.shape == xs.shape
    assert abs(out[0] - 1.0) < 1e-14


def test_quadrature_normalization():
    assert abs(sphere_quadrature(lambda d: 1.0, 4) - 1.0) < 1e-14


def test_quadrature_product_identity():
    rng = np.random.default_rng(11)
    u = Direction.random(rng).as_array()
    v = Direction.random(rng).as_array()

    def product(d):
        x = d.as_array()
        return legendre(2, float(x @ u)) * legendre(2, float(x @ v))

    value = sphere_quadrature(product, 8)
    assert abs(value - legendre(2, float(u @ v)) / 5.0) < 1e-13
