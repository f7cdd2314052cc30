import math

import numpy as np
import pytest

from eqvidx.errors import InvalidBCError, OperatorMismatchError, PreconditionError
from eqvidx.jacobi_reduce import (DIRICHLET, NATURAL, NEUMANN, BC, BCKind, FieldTag, JacobiFieldSamples,
                                  ReducedOperator, equator_weight, field_eigenvalue, known_field,
                                  minimality_trace, orbit_volumes, principal_curvatures, reduce_jacobi,
                                  second_fundamental)
from eqvidx.orbit_models import BALL4, SPHERE4, TWO_PI_SQ, Edge
from eqvidx.profile_solver import (StopConditions, edge_launch, integrate_profile, interior_state, solve_alencar,
                                   truncate_rescale)


@pytest.fixture(scope='module')
def equator():
    init = edge_launch(SPHERE4, Edge.EDGE1, 0.0)
    return integrate_profile(SPHERE4, init, StopConditions())


@pytest.fixture(scope='module')
def annulus():
    return truncate_rescale(solve_alencar(2), 1)


def test_equator_operator(equator):
    op = reduce_jacobi(SPHERE4, equator)
    assert op.bc_left == NATURAL and op.bc_right == NATURAL
    assert op.a == 0.0 and op.b == pytest.approx(math.pi / 2, abs=1e-8)
    t = np.linspace(op.a, op.b, 101)
    assert np.allclose(op.q(t), 3.0, atol=1e-6)
    assert np.allclose(op.V(t), equator_weight(t), atol=1e-6 * TWO_PI_SQ)
    assert np.all(op.V(t) >= 0.0)
    assert op.provenance == 'curve-'


def test_equator_is_totally_geodesic(equator):
    curv = principal_curvatures(equator)
    assert curv.shape == (3, len(equator.t))
    assert np.allclose(curv, 0.0, rtol=0.0, atol=1e-10)
    assert minimality_trace(equator) < 1e-9
    assert second_fundamental(SPHERE4, equator, 0.7) == pytest.approx((0.0, 0.0, 0.0), abs=1e-10)
    assert second_fundamental(SPHERE4, equator, -1.0) == pytest.approx((0.0, 0.0, 0.0), abs=1e-10)


def test_equator_nu5_is_constant(equator):
    nu5 = known_field(SPHERE4, equator, FieldTag.NU5)
    assert np.allclose(nu5.values, 1.0, atol=1e-10)
    assert len(nu5.zeros()) == 0
    assert field_eigenvalue('nu5') == -3.0 and field_eigenvalue(FieldTag.X_DOT_NU) == 0.0


def test_orbit_volumes_vanish_at_collapsed_ends(equator):
    V = orbit_volumes(equator)
    assert V[0] == pytest.approx(0.0, abs=1e-12) and V[-1] == pytest.approx(0.0, abs=1e-8)
    assert np.max(V) == pytest.approx(TWO_PI_SQ / 2, rel=1e-5)


def test_collapsed_ends_only_take_natural(equator):
    with pytest.raises(InvalidBCError):
        reduce_jacobi(SPHERE4, equator, (DIRICHLET, None))
    op = reduce_jacobi(SPHERE4, equator, (NATURAL, NATURAL))
    assert op.bc_left == NATURAL


def test_free_end_defaults_to_robin(annulus):
    op = reduce_jacobi(BALL4, annulus)
    assert op.bc_left == NATURAL
    assert op.bc_right == BC.robin(1.0)
    assert str(op.bc_right) == 'robin(1)'
    assert op.meta['family'] == 'fbms' and op.provenance == 'fbms-1'
    assert reduce_jacobi(BALL4, annulus, (None, DIRICHLET)).bc_right == DIRICHLET
    with pytest.raises(InvalidBCError):
        reduce_jacobi(BALL4, annulus, (None, NATURAL))


def test_minimality_on_annulus(annulus):
    assert minimality_trace(annulus) < 1e-8


def test_support_function_at_launch():
    curve = solve_alencar(1)
    field = known_field(BALL4, curve, 'x_dot_nu')
    assert abs(field.values[0]) == pytest.approx(1.0, rel=1e-6)


def test_known_field_mismatch(equator):
    with pytest.raises(PreconditionError):
        known_field(BALL4, equator, FieldTag.NU5)
    with pytest.raises(PreconditionError):
        known_field(SPHERE4, equator, FieldTag.X_DOT_NU)


def test_field_sample_zeros():
    t = np.linspace(0.0, 2 * math.pi, 401)
    samples = JacobiFieldSamples(FieldTag.NU5, t, np.cos(t))
    assert samples.zeros() == pytest.approx([math.pi / 2, 3 * math.pi / 2], abs=1e-4)
    assert samples(0.5) == pytest.approx(math.cos(0.5), abs=1e-8)


def test_restrict_and_same_data():
    op = ReducedOperator.from_functions(lambda t: 1.0 + t, 2.0, 0.0, 3.0)
    op = op.with_breakpoints([0.5, 1.5, 3.0, -1.0])
    assert op.breakpoints == (0.5, 1.5)
    piece = op.restrict(1.0, 3.0, DIRICHLET, NEUMANN)
    assert (piece.a, piece.b, piece.breakpoints) == (1.0, 3.0, (1.5,))
    assert piece.bc_left.kind == BCKind.DIRICHLET
    assert np.allclose(piece.q(np.array([1.2, 2.2])), 2.0)
    assert op.same_data(op.with_bc(DIRICHLET, DIRICHLET))
    assert not op.same_data(piece)
    other = ReducedOperator.from_functions(lambda t: 1.0 + t, 2.0, 0.0, 3.0)
    assert not op.same_data(other)
    with pytest.raises(OperatorMismatchError):
        op.check_same_data(other)
    with pytest.raises(AssertionError):
        op.restrict(-1.0, 1.0, DIRICHLET, DIRICHLET)


def test_football_principal_curvatures():
    init = interior_state(SPHERE4, -0.5, math.pi / 4, 0.0)
    curve = integrate_profile(SPHERE4, init, StopConditions(edges=(), max_length=1.0, length_is_stop=True))
    kappa, h1, h2 = second_fundamental(SPHERE4, curve, 0.5)
    assert (kappa, h1, h2) == pytest.approx((0.0, -1.0, 1.0), abs=1e-8)
    assert minimality_trace(curve) < 1e-9
