"""Shared fixtures and frozen oracle values.

Oracle numbers were computed independently with mpmath at 30 digits from
closed forms (quadratic actions, minimized over the junction point in
closed form) and from a scalar scan plus Newton solve for the kicked map.
"""

import math

import pytest

from commuting_actions.systems import builtin

# harmonic oscillator (omega = 1) action S(0, 1, 1) = cos(1) / (2 sin(1))
HARMONIC_S_0_1_1 = 0.321046307967165

# free(1) then harmonic(1), (q0, q12, t1, t2) = (0, 1, 1, 1)
FREE_HARM_S12 = -0.108979049230431
FREE_HARM_S21 = 0.195510475384785
FREE_HARM_DELTA = -0.304489524615215
FREE_HARM_Q1 = 0.723707721626858
FREE_HARM_Q2 = 0.608979049230431
FREE_HARM_P_START = 0.723707721626858
FREE_HARM_P_END_12 = -0.217958098460862
FREE_HARM_P_END_21 = 0.391020950769569
FREE_HARM_RH1 = 0.185427741200800
FREE_HARM_RH2 = -0.261876433171169

# discrete quadratic(h=1) vs kicked(h=1, K=0.3) at (q0, q12) = (0, 1)
KICKED_S12 = 0.412090691760442
KICKED_S21 = 0.507333242936131
KICKED_DELTA = -0.0952425511756886
KICKED_Q1 = 0.5
KICKED_Q2 = 0.582519442179454
KICKED_E0 = 0.0825194421794544
KICKED_E12 = 0.169921853262915

# free flow (0, 1) for 1/2, then rotation for 1/2, against the other order
FLOW_COMMUTATOR_FREE_HARM = 0.23971


def harmonic_action(qa, qb, t, omega=1.0, mass=1.0):
    return mass * omega * ((qa * qa + qb * qb) * math.cos(omega * t) - 2 * qa * qb) / (2 * math.sin(omega * t))


def free_action(qa, qb, t, mass=1.0):
    return mass * (qb - qa) ** 2 / (2 * t)


@pytest.fixture(scope="session")
def free():
    return builtin("free_particle")


@pytest.fixture(scope="session")
def free2():
    return builtin("free_particle", mass=2.0)


@pytest.fixture(scope="session")
def harmonic():
    return builtin("harmonic")


@pytest.fixture(scope="session")
def quartic():
    return builtin("quartic_kinetic")


@pytest.fixture(scope="session")
def dquad1():
    return builtin("discrete_quadratic", h=1.0)


@pytest.fixture(scope="session")
def dquad2():
    return builtin("discrete_quadratic", h=2.0)


@pytest.fixture(scope="session")
def kicked():
    return builtin("discrete_kicked", h=1.0, K=0.3)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":").split("(")[0])):
            terminalreporter.write_line(line)
