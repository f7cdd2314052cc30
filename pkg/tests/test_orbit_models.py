import math

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from eqvidx.errors import DomainError, UndefinedPointError
from eqvidx.orbit_models import (BALL4, SPHERE4, TWO_PI_SQ, Edge, Model, QuotientPoint,
                                 get_orbit_space, metric_len, orbit_volume, orbit_spaces,
                                 theta, wrap_angle)

s_interior = st.floats(-1.5, 1.5)
a_interior = st.floats(0.05, math.pi / 2 - 0.05)
rho = st.floats(0.05, 20.0)


def test_orbit_volume_examples():
    assert orbit_volume(SPHERE4, QuotientPoint(0.0, math.pi / 4)) == pytest.approx(2 * math.pi ** 2, rel=1e-14)
    assert orbit_volume(SPHERE4, (0.0, 0.0)) == 0.0
    assert orbit_volume(BALL4, (2.0, 3.0)) == pytest.approx(TWO_PI_SQ * 6.0, rel=1e-14)


def test_orbit_volume_vanishes_on_feature_loci():
    for s in np.linspace(-1.4, 1.4, 9):
        assert orbit_volume(SPHERE4, (s, 0.0)) == 0.0
        assert orbit_volume(SPHERE4, (s, math.pi / 2)) == 0.0
    for a in np.linspace(0.0, math.pi / 2, 9):
        assert orbit_volume(SPHERE4, (math.pi / 2, a)) == 0.0
        assert orbit_volume(SPHERE4, (-math.pi / 2, a)) == 0.0
    for r in (0.5, 1.0, 4.0):
        assert orbit_volume(BALL4, (r, 0.0)) == 0.0
        assert orbit_volume(BALL4, (0.0, r)) == 0.0


def test_torch_radii_vanish_on_edges():
    s = np.linspace(-1.4, 1.4, 9)
    u = torch.as_tensor(np.concatenate([np.stack([s, np.zeros(9)], 1), np.stack([s, np.full(9, math.pi / 2)], 1)]),
                        dtype=torch.float64)
    r = SPHERE4.radii_torch(u).numpy()
    assert np.all(r[:9, 1] == 0.0)
    assert np.all(r[9:, 0] == 0.0)
    assert np.all(r[:9, 0] > 0) and np.all(r[9:, 1] > 0)


def test_orbit_volume_outside_chart():
    with pytest.raises(DomainError):
        orbit_volume(SPHERE4, (2.0, 0.3))
    with pytest.raises(DomainError):
        orbit_volume(BALL4, (-1.0, 1.0))
    with pytest.raises(DomainError):
        orbit_volume(BALL4, (float('nan'), 1.0))


@given(s_interior, a_interior)
@settings(max_examples=200, deadline=None)
def test_sphere_radii_identity(s, a):
    r1, r2 = SPHERE4.radii(s, a)
    assert r1 >= 0 and r2 >= 0
    assert r1 ** 2 + r2 ** 2 + math.sin(s) ** 2 == pytest.approx(1.0, abs=1e-15)
    assert orbit_volume(SPHERE4, (s, a)) > 0


def test_theta_examples():
    for s in (-1.0, 0.0, 0.7):
        assert theta(SPHERE4, (s, math.pi / 4)) == pytest.approx(0.0, abs=1e-15)
        assert theta(SPHERE4, (s, math.pi / 2)) == pytest.approx(math.pi / 4)
    assert theta(BALL4, (1.0, 1.0)) == pytest.approx(0.0, abs=1e-15)


def test_theta_undefined_at_pole_and_origin():
    with pytest.raises(UndefinedPointError):
        theta(SPHERE4, (math.pi / 2, 0.3))
    with pytest.raises(UndefinedPointError):
        theta(BALL4, (0.0, 0.0))


@given(rho, rho, st.floats(0.1, 100.0))
@settings(max_examples=200, deadline=None)
def test_theta_constant_on_rays(r1, r2, lam):
    assert theta(BALL4, (lam * r1, lam * r2)) == pytest.approx(theta(BALL4, (r1, r2)), abs=1e-12)
    assert -math.pi / 4 <= theta(BALL4, (r1, r2)) <= math.pi / 4


@given(s_interior, a_interior)
@settings(max_examples=100, deadline=None)
def test_theta_increases_toward_edge2(s, a):
    h = 1e-6
    assert theta(SPHERE4, (s, a + h)) > theta(SPHERE4, (s, a - h))


def test_metric_len_examples():
    assert metric_len(SPHERE4, (0.0, 0.4), (0.0, 1.0)) == pytest.approx(1.0)
    assert metric_len(SPHERE4, (math.pi / 3, 0.4), (0.0, 1.0)) == pytest.approx(0.5)
    assert metric_len(BALL4, (0.3, 7.0), (3.0, 4.0)) == pytest.approx(5.0)


@given(st.sampled_from([SPHERE4, BALL4]), st.floats(0.1, 1.2), st.floats(0.1, 1.2))
@settings(max_examples=100, deadline=None)
def test_closed_form_log_gradients_match_autograd(os, u1, u2):
    auto = os.dlog_radii_autograd([[u1, u2]])
    closed = np.array(os.dlog_radii(u1, u2))
    assert np.allclose(auto[:, 0, :], closed, rtol=1e-12, atol=1e-12)
    assert np.allclose(auto[:, 0, :].sum(axis=0), os.dlog_volume(u1, u2), rtol=1e-12, atol=1e-12)


@given(st.sampled_from([SPHERE4, BALL4]), st.floats(0.1, 1.2), st.floats(0.1, 1.2), st.floats(-3.0, 3.0))
@settings(max_examples=100, deadline=None)
def test_tangent_and_normal_are_orthonormal(os, u1, u2, phi):
    tau = os.tangent_chart(u1, phi)
    n = os.normal_chart(u1, phi)
    g11, g22 = os.metric_diag(u1, u2)
    assert metric_len(os, (u1, u2), tau) == pytest.approx(1.0)
    assert metric_len(os, (u1, u2), n) == pytest.approx(1.0)
    assert g11 * tau[0] * n[0] + g22 * tau[1] * n[1] == pytest.approx(0.0, abs=1e-12)
    assert os.phi_from_tangent(u1, *tau) == pytest.approx(wrap_angle(phi), abs=1e-12)


def test_ball_edge_series_matches_rotation_solution():
    # the profile through (1, 0) satisfies rho1 = 1 + rho2^2 / 4 + O(rho2^4)
    for delta in (1e-4, 1e-3):
        u1, u2, phi = BALL4.edge_series(Edge.EDGE1, 1.0, delta)
        assert u2 == delta
        assert u1 == pytest.approx(1.0 + delta ** 2 / 4, abs=1e-15)
        assert phi == pytest.approx(math.pi / 2 - 0.5 * delta)


def test_sphere_edge_series_equator():
    u1, u2, phi = SPHERE4.edge_series(Edge.EDGE1, 0.0, 1e-4)
    assert (u1, u2, phi) == (0.0, 1e-4, math.pi / 2)


@given(st.sampled_from([Edge.EDGE1, Edge.EDGE2]), st.floats(-1.2, 1.2), st.floats(1e-5, 1e-4))
@settings(max_examples=100, deadline=None)
def test_edge_foot_inverts_series(edge, u0, delta):
    u1, u2, phi = SPHERE4.edge_series(edge, u0, delta)
    foot, d = SPHERE4.edge_foot(edge, u1, u2)
    assert foot == pytest.approx(u0, abs=1e-9)
    assert SPHERE4.arrival_defect(edge, u1, u2, phi + math.pi) == pytest.approx(0.0, abs=1e-8)


@given(st.floats(-1.2, 1.2))
@settings(max_examples=50, deadline=None)
def test_edge_curvature_matches_series(u0):
    # series direction pi/2 + 1.5 tan(s0) t gives kappa = -(phi' - tan(s0)) = -tan(s0)/2
    assert SPHERE4.edge_curvature(Edge.EDGE1, u0, math.pi / 2) == pytest.approx(-0.5 * math.tan(u0), abs=1e-9)


def test_wrap_angle_range():
    for x in (-7.0, -math.pi, 0.0, math.pi, 3 * math.pi, 10.0):
        y = wrap_angle(x)
        assert -math.pi < y <= math.pi
        assert math.cos(y) == pytest.approx(math.cos(x))


def test_registry():
    assert get_orbit_space('sphere4') is SPHERE4
    assert get_orbit_space(Model.BALL4) is BALL4
    assert get_orbit_space(BALL4) is BALL4
    assert set(orbit_spaces) == {'sphere4', 'ball4'}
    assert SPHERE4.ambient_ricci == 3.0 and BALL4.ambient_ricci == 0.0
