import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqvidx.ode import ChartGeodesic, ConeGeodesic, profile_systems
from eqvidx.orbit_models import BALL4, SPHERE4, direction


@given(st.floats(0.05, 1.5))
@settings(max_examples=50, deadline=None)
def test_equator_is_a_geodesic(a):
    sys = ChartGeodesic(SPHERE4)
    x = ChartGeodesic.from_chart(a, 0.0, a, math.pi / 2)
    assert sys.dphi(x) == pytest.approx(0.0, abs=1e-14)
    assert sys.kappa(x) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(sys(0.0, x), [0.0, 1.0, 0.0, 1.0], atol=1e-14)


@given(st.floats(0.05, 1.5), st.integers(-6, 6))
@settings(max_examples=100, deadline=None)
def test_equator_rate_vanishes_exactly(a, k):
    sys = ChartGeodesic(SPHERE4)
    x = ChartGeodesic.from_chart(0.0, 0.0, a, math.pi / 2)
    assert sys(0.0, x)[0] == 0.0 and sys(0.0, x)[2] == 0.0
    c, s = direction(k * (math.pi / 2))
    assert (abs(c), abs(s)) in ((0.0, 1.0), (1.0, 0.0))


@given(st.floats(-20.0, 20.0))
@settings(max_examples=200, deadline=None)
def test_direction_matches_trig(phi):
    c, s = direction(phi)
    assert c == pytest.approx(math.cos(phi), abs=1e-14)
    assert s == pytest.approx(math.sin(phi), abs=1e-14)


@given(st.floats(-1.4, 1.4))
@settings(max_examples=50, deadline=None)
def test_clifford_cone_line_is_a_geodesic(s):
    sys = ChartGeodesic(SPHERE4)
    assert sys.dphi(ChartGeodesic.from_chart(0.0, s, math.pi / 4, 0.0)) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0.1, 50.0))
@settings(max_examples=50, deadline=None)
def test_diagonal_ray_is_a_geodesic(r):
    chart = ChartGeodesic(BALL4)
    cone = ConeGeodesic()
    assert chart.dphi(ChartGeodesic.from_chart(0.0, r, r, math.pi / 4)) == pytest.approx(0.0, abs=1e-12)
    assert cone.dphi(ConeGeodesic.from_chart(0.0, r, r, math.pi / 4)) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(-3.0, 3.0))
@settings(max_examples=200, deadline=None)
def test_cone_and_chart_agree(u1, u2, phi):
    chart, cone = ChartGeodesic(BALL4), ConeGeodesic()
    xc = ChartGeodesic.from_chart(0.7, u1, u2, phi)
    xk = ConeGeodesic.from_chart(0.7, u1, u2, phi)
    assert cone.dphi(xk) == pytest.approx(chart.dphi(xc), rel=1e-9, abs=1e-9)
    assert cone.kappa(xk) == pytest.approx(chart.kappa(xc), rel=1e-9, abs=1e-9)
    assert cone.theta(xk) == pytest.approx(chart.theta(xc), abs=1e-12)
    assert np.sign(cone.theta_rate(xk)) == np.sign(chart.theta_rate(xc)) or abs(chart.theta_rate(xc)) < 1e-12
    for edge in (1, 2):
        assert cone.relative_edge_distance(edge, xk) == pytest.approx(chart.relative_edge_distance(edge, xc), rel=1e-9)


@given(st.floats(-1.5, 1.5), st.floats(0.05, 1.5), st.floats(-3.0, 3.0))
@settings(max_examples=100, deadline=None)
def test_chart_step_is_conformal(s, a, phi):
    sys = ChartGeodesic(SPHERE4)
    du1, du2, _, dt = sys(0.0, ChartGeodesic.from_chart(0.0, s, a, phi))
    # unit speed in g after dividing by dt/dtau = G
    assert dt == pytest.approx(math.cos(s))
    assert (du1 / dt) ** 2 + (math.cos(s) * du2 / dt) ** 2 == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(-3.0, 3.0), st.floats(0.0, 10.0))
@settings(max_examples=100, deadline=None)
def test_from_chart_round_trip(u1, u2, phi, t):
    for system in (ConeGeodesic(), ChartGeodesic(BALL4)):
        x = system.from_chart(t, u1, u2, phi)
        assert np.allclose(system.chart_state(x), (u1, u2, phi), rtol=1e-12, atol=1e-12)
        assert system.arclength(0.0, x) == t


def test_sample_row():
    sys = ChartGeodesic(SPHERE4)
    t, u1, u2, tau1, tau2, kappa = sys.sample(0.0, ChartGeodesic.from_chart(0.25, 0.0, 0.4, math.pi / 2))
    assert (t, u1, u2) == (0.25, 0.0, 0.4)
    assert tau1 == 0.0 and tau2 == pytest.approx(1.0)
    assert kappa == pytest.approx(0.0, abs=1e-14)


def test_registry():
    assert profile_systems == {'chart': ChartGeodesic, 'cone': ConeGeodesic}
    assert ConeGeodesic().os is BALL4
