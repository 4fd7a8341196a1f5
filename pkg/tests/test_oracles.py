"""Recompute the frozen oracle values in conftest with mpmath.

Everything here is closed form or a scalar root solve, independent of the
package's solvers.
"""

import pytest

import conftest as oracle

mp = pytest.importorskip("mpmath")
mp.mp.dps = 30


def _harm(qa, qb, t):
    return ((qa * qa + qb * qb) * mp.cos(t) - 2 * qa * qb) / (2 * mp.sin(t))


def _free(qa, qb, t):
    return (qb - qa) ** 2 / (2 * t)


def _composed(first, second):
    # minimize first(0, q, 1) + second(q, 1, 1) over the junction q
    total = lambda q: first(0, q, 1) + second(q, 1, 1)  # noqa: E731
    q = mp.findroot(lambda q: mp.diff(total, q), 0.5)
    return q, total(q)


def test_harmonic_action():
    assert float(_harm(0, 1, 1)) == pytest.approx(oracle.HARMONIC_S_0_1_1, abs=1e-15)


def test_free_harmonic_composition():
    q1, s12 = _composed(_free, _harm)
    q2, s21 = _composed(_harm, _free)
    assert float(q1) == pytest.approx(oracle.FREE_HARM_Q1, abs=1e-14)
    assert float(q2) == pytest.approx(oracle.FREE_HARM_Q2, abs=1e-14)
    assert float(s12) == pytest.approx(oracle.FREE_HARM_S12, abs=1e-14)
    assert float(s21) == pytest.approx(oracle.FREE_HARM_S21, abs=1e-14)
    assert float(s12 - s21) == pytest.approx(oracle.FREE_HARM_DELTA, abs=1e-14)


def test_free_harmonic_momenta_and_energies():
    q1, _ = _composed(_free, _harm)
    q2, _ = _composed(_harm, _free)
    # start momentum -dS/dq0, end momentum dS/dq12 of the last piece
    p_start_12 = -mp.diff(lambda a: _free(a, q1, 1), 0)
    p_end_12 = mp.diff(lambda b: _harm(q1, b, 1), 1)
    p_start_21 = -mp.diff(lambda a: _harm(a, q2, 1), 0)
    p_end_21 = mp.diff(lambda b: _free(q2, b, 1), 1)
    assert float(p_start_12) == pytest.approx(oracle.FREE_HARM_P_START, abs=1e-14)
    assert float(p_start_21) == pytest.approx(oracle.FREE_HARM_P_START, abs=1e-14)
    assert float(p_end_12) == pytest.approx(oracle.FREE_HARM_P_END_12, abs=1e-14)
    assert float(p_end_21) == pytest.approx(oracle.FREE_HARM_P_END_21, abs=1e-14)
    H1 = lambda q, p: p * p / 2  # noqa: E731
    H2 = lambda q, p: (p * p + q * q) / 2  # noqa: E731
    assert float(H1(0, p_start_12) - H1(1, p_end_21)) == pytest.approx(oracle.FREE_HARM_RH1, abs=1e-14)
    assert float(H2(0, p_start_21) - H2(1, p_end_12)) == pytest.approx(oracle.FREE_HARM_RH2, abs=1e-14)


def test_kicked_corner():
    K = mp.mpf("0.3")
    quad = lambda a, b: (b - a) ** 2 / 2  # noqa: E731
    kicked = lambda a, b: (b - a) ** 2 / 2 + K * mp.cos(b)  # noqa: E731

    def corner(first, second):
        total = lambda q: first(0, q) + second(q, 1)  # noqa: E731
        # scan for the bracketing sign change, then polish
        grid = [mp.mpf(i) / 100 for i in range(-100, 201)]
        d = [mp.diff(total, g) for g in grid]
        i = next(i for i in range(len(d) - 1) if d[i] * d[i + 1] <= 0)
        q = mp.findroot(lambda x: mp.diff(total, x), grid[i])
        return q, total(q)

    q1, s12 = corner(quad, kicked)
    q2, s21 = corner(kicked, quad)
    assert float(q1) == pytest.approx(oracle.KICKED_Q1, abs=1e-14)
    assert float(q2) == pytest.approx(oracle.KICKED_Q2, abs=1e-14)
    assert float(s12) == pytest.approx(oracle.KICKED_S12, abs=1e-14)
    assert float(s21) == pytest.approx(oracle.KICKED_S21, abs=1e-14)
    assert float(s12 - s21) == pytest.approx(oracle.KICKED_DELTA, abs=1e-14)


def test_flow_commutator():
    # free flow (q + t p, p), rotation (q cos t + p sin t, -q sin t + p cos t)
    free = lambda x, t: (x[0] + t * x[1], x[1])  # noqa: E731
    rot = lambda x, t: (x[0] * mp.cos(t) + x[1] * mp.sin(t), -x[0] * mp.sin(t) + x[1] * mp.cos(t))  # noqa: E731
    x0 = (mp.mpf(0), mp.mpf(1))
    a = rot(free(x0, mp.mpf("0.5")), mp.mpf("0.5"))
    b = free(rot(x0, mp.mpf("0.5")), mp.mpf("0.5"))
    norm = max(abs(a[0] - b[0]), abs(a[1] - b[1]))
    assert float(norm) == pytest.approx(oracle.FLOW_COMMUTATOR_FREE_HARM, abs=1e-5)
