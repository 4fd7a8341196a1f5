import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import HARMONIC_S_0_1_1, free_action, harmonic_action
from commuting_actions.errors import FlowBlowUp, ResolutionCapExceeded, TimeHorizonError
from commuting_actions.legendre import hamiltonian_of, momentum_of_velocity
from commuting_actions.numerics import DifferentiableScalarField
from commuting_actions.systems import ConfigSpace, HamiltonianSystem, builtin
from commuting_actions.trajectories import (
    DiscretePath,
    euler_lagrange_residual,
    hj_check,
    integrate_flow,
    minimize_action,
    principal_action,
)


def test_free_minimize_action(free):
    res = minimize_action(free, 0.0, 1.0, 1.0, 20)
    assert res.value == pytest.approx(0.5, abs=1e-14)
    assert res.p_start[0] == pytest.approx(1.0) and res.p_end[0] == pytest.approx(1.0)
    assert res.is_minimum
    assert math.isinf(res.error_estimate)


def test_harmonic_rest(harmonic):
    res = minimize_action(harmonic, 0.0, 0.0, 1.0, 20)
    assert res.value == 0.0
    assert np.all(res.path.points == 0.0)


def test_harmonic_quarter_period(harmonic):
    assert minimize_action(harmonic, 0.0, 1.0, math.pi / 2, 200).value == pytest.approx(0.0, abs=2e-4)


def test_principal_action_examples(free, harmonic):
    assert principal_action(free, 0.0, 1.0, 1.0, 1e-10).value == pytest.approx(0.5, abs=1e-10)
    assert principal_action(builtin("free_particle", mass=2.0), 0.0, 1.0, 1.0, 1e-10).value == pytest.approx(1.0, abs=1e-10)
    res = principal_action(harmonic, 0.0, 1.0, 1.0, 1e-8)
    assert res.value == pytest.approx(HARMONIC_S_0_1_1, abs=1e-8)
    assert res.value == pytest.approx(harmonic_action(0.0, 1.0, 1.0), abs=1e-8)
    assert res.error_estimate <= 1e-8


def test_convergence_order(harmonic):
    exact = harmonic_action(0.0, 1.0, 1.0)
    errs = [abs(minimize_action(harmonic, 0.0, 1.0, 1.0, N).value - exact) for N in (50, 100, 200, 400)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


def test_resolution_cap(harmonic):
    with pytest.raises(ResolutionCapExceeded) as info:
        principal_action(harmonic, 0.0, 1.0, 1.0, 1e-14, cap=800)
    assert info.value.best.resolution <= 800


def test_time_horizon(harmonic):
    with pytest.raises(TimeHorizonError):
        principal_action(harmonic, 0.0, 1.0, 3.0)


def test_periodic_endpoint_lifted():
    L = builtin("free_particle", periodic=(True,))
    assert principal_action(L, 0.0, 2 * math.pi - 0.5, 1.0).value == pytest.approx(0.125, abs=1e-12)


def test_two_dimensional(harmonic):
    L2 = builtin("harmonic", dimension=2)
    res = principal_action(L2, [0.0, 0.2], [1.0, -0.3], 1.0)
    exact = harmonic_action(0.0, 1.0, 1.0) + harmonic_action(0.2, -0.3, 1.0)
    assert res.value == pytest.approx(exact, abs=1e-8)


def test_euler_lagrange_residual(free):
    line = DiscretePath(np.linspace(0.0, 1.0, 11), 0.0, 1.0)
    assert euler_lagrange_residual(free, line) <= 1e-12
    bent = line.points.copy()
    bent[5] += 0.1
    assert euler_lagrange_residual(free, DiscretePath(bent, 0.0, 1.0)) > 1e-2
    res = minimize_action(builtin("harmonic"), 0.0, 1.0, 1.0, 40)
    assert euler_lagrange_residual(builtin("harmonic"), res.path) <= 1e-10


def test_boundary_momenta_match_segment_velocity(harmonic):
    errs = []
    for N in (40, 80):
        res = minimize_action(harmonic, 0.0, 1.0, 1.0, N)
        pts, h = res.path.points, 1.0 / N
        p0 = momentum_of_velocity(harmonic, (pts[0] + pts[1]) / 2, (pts[1] - pts[0]) / h)
        errs.append(abs(res.p_start[0] - p0[0]))
    assert errs[1] < errs[0] / 3  # O(h^2) shrinkage
    assert errs[0] < 1e-2


@settings(max_examples=15, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 1.5), st.floats(0.2, 0.8))
def test_semigroup(qa, qb, t, frac):
    # the midpoint minimum is reached at the true path's intermediate point
    L = builtin("harmonic")
    s = frac * t
    qm = (qa * math.sin(t - s) + qb * math.sin(s)) / math.sin(t)
    total = principal_action(L, qa, qb, t).value
    split = principal_action(L, qa, qm, s).value + principal_action(L, qm, qb, t - s).value
    assert split == pytest.approx(total, abs=1e-7)
    assert split == pytest.approx(harmonic_action(qa, qb, t), abs=1e-7)


@settings(max_examples=15, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 2.0), st.floats(0.5, 3.0))
def test_free_action_exact(qa, qb, t, mass):
    L = builtin("free_particle", mass=mass)
    assert principal_action(L, qa, qb, t).value == pytest.approx(free_action(qa, qb, t, mass), abs=1e-10)


def test_flow_examples(free, harmonic):
    Hf, Hh = hamiltonian_of(free), hamiltonian_of(harmonic)
    np.testing.assert_allclose(integrate_flow(Hf, [0.0, 1.0], 1.0).final, [1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(integrate_flow(Hh, [0.0, 1.0], math.pi / 2, 100).final, [1.0, 0.0], atol=1e-8)
    x0 = np.array([0.3, -0.7])
    assert np.array_equal(integrate_flow(Hh, x0, 0.0).final, x0)


def test_energy_conservation():
    quad = HamiltonianSystem(
        ConfigSpace(1),
        DifferentiableScalarField(
            2, lambda x: 0.5 * (x[..., 0] ** 2 + x[..., 1] ** 2), lambda x: np.asarray(x, dtype=float)
        ),
    )
    path = integrate_flow(quad, [1.0, 0.5], 10.0, 1000)
    energy = 0.5 * np.sum(path.states**2, axis=1)
    assert np.max(np.abs(energy - energy[0])) <= 1e-10


def test_flow_blow_up():
    # H = p^2/2 - q^4 overflows from a large start
    H = HamiltonianSystem(
        ConfigSpace(1),
        DifferentiableScalarField(
            2,
            lambda x: 0.5 * x[..., 1] ** 2 - x[..., 0] ** 4,
            lambda x: np.stack([-4 * x[..., 0] ** 3, x[..., 1]], -1),
        ),
    )
    with pytest.raises(FlowBlowUp):
        integrate_flow(H, [1e80, 0.0], 1.0, 10)


def test_hj_examples(free):
    res = hj_check(free, 0.0, 1.0, 1.0)
    assert res.max_abs <= 1e-6
    assert res.center.p_start[0] == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["free_particle", "harmonic"])
def test_hj_identities(name):
    L = builtin(name)
    H = hamiltonian_of(L)
    for qa, qb, t in [(-0.5, 0.5, 0.5), (0.0, 0.5, 1.0), (0.5, -0.5, 1.0)]:
        assert hj_check(L, qa, qb, t, H=H).max_abs <= 1e-5


def test_non_minimum_is_flagged_not_fatal():
    # L = -qdot^2 / 2: the straight line is a maximum of the action
    from commuting_actions.systems import catalog_lookup, parse_system_spec

    L = catalog_lookup(parse_system_spec('{"kind":"polynomial","name":"lagrangian","params":{"c_0_2":-0.5}}'))
    res = principal_action(L, 0.0, 1.0, 1.0)
    assert res.value == pytest.approx(-0.5, abs=1e-10)
    assert not res.is_minimum
    assert principal_action(builtin("free_particle"), 0.0, 1.0, 1.0).is_minimum
