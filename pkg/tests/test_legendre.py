import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from commuting_actions.errors import SingularJacobian
from commuting_actions.legendre import (
    check_nondegeneracy,
    hamiltonian_of,
    legendre_pair,
    momentum_of_velocity,
    velocity_of_momentum,
)
from commuting_actions.numerics import DifferentiableScalarField
from commuting_actions.systems import ConfigSpace, LagrangianSystem, builtin

coords = st.floats(-2, 2, allow_nan=False)


def test_momentum_examples(free, quartic):
    assert momentum_of_velocity(free, 0.0, 3.0)[0] == pytest.approx(3.0)
    assert momentum_of_velocity(builtin("free_particle", mass=2.0), 0.0, 3.0)[0] == pytest.approx(6.0)
    assert momentum_of_velocity(quartic, 0.0, 8.0)[0] == pytest.approx(2.0)


def test_velocity_examples(free, quartic, harmonic):
    assert velocity_of_momentum(free, 0.0, 3.0)[0] == pytest.approx(3.0)
    assert velocity_of_momentum(quartic, 0.0, 2.0, qdot_guess=1.0)[0] == pytest.approx(8.0, abs=1e-9)
    for q in (-1.0, 0.0, 2.5):
        assert velocity_of_momentum(harmonic, q, 1.0)[0] == pytest.approx(1.0)


def test_hamiltonian_examples(free, harmonic, free2):
    assert hamiltonian_of(free)(0.0, 2.0) == pytest.approx(2.0)
    assert hamiltonian_of(harmonic)(1.0, 1.0) == pytest.approx(1.0)
    assert hamiltonian_of(free2)(0.0, 2.0) == pytest.approx(1.0)


def _indefinite():
    def f(x):
        return 0.5 * (x[..., 2] ** 2 - x[..., 3] ** 2)

    return LagrangianSystem(ConfigSpace(2), DifferentiableScalarField(4, f), name="indefinite")


def test_nondegeneracy_examples(free, quartic):
    det, ok = check_nondegeneracy(free, 0.0, 1.0)
    assert det == pytest.approx(1.0) and ok
    assert check_nondegeneracy(quartic, 0.0, 1e-6)[1] is False
    det, ok = check_nondegeneracy(_indefinite(), np.zeros(2), np.array([0.3, 0.2]))
    assert det == pytest.approx(-1.0, abs=1e-6) and ok


def test_singular_inversion_raises():
    flat = LagrangianSystem(ConfigSpace(1), DifferentiableScalarField(2, lambda x: x[..., 1]), name="linear")
    with pytest.raises(SingularJacobian):
        velocity_of_momentum(flat, 0.0, 2.0)


@pytest.mark.parametrize("name", ["free_particle", "harmonic", "quartic_kinetic"])
def test_round_trip_and_identity(name):
    L = builtin(name, dimension=2)
    pair = legendre_pair(L)
    rng = np.random.default_rng(11)
    for _ in range(100):
        q = rng.uniform(-2, 2, 2)
        v = rng.uniform(-2, 2, 2)
        if not check_nondegeneracy(L, q, v)[1]:
            continue
        p = momentum_of_velocity(L, q, v)
        assert np.max(np.abs(pair.velocity(q, p) - v)) <= 1e-8
        assert pair.hamiltonian(q, p) + L(q, v) == pytest.approx(p @ v, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3), st.floats(0.2, 3), coords, coords)
def test_quadratic_hamiltonian_closed_form(mass, omega, q, p):
    H = hamiltonian_of(builtin("harmonic", mass=mass, omega=omega))
    assert H(q, p) == pytest.approx(p * p / (2 * mass) + mass * omega**2 * q * q / 2, abs=1e-8)
    grad = H.H.gradient(np.array([q, p]))
    np.testing.assert_allclose(grad, [mass * omega**2 * q, p / mass], atol=1e-8)


def test_hamiltonian_hessian(harmonic):
    H = hamiltonian_of(harmonic)
    np.testing.assert_allclose(H.H.hessian(np.array([0.3, -0.4])), np.eye(2), atol=1e-6)
