import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqvidx.errors import DomainError, OperatorMismatchError
from eqvidx.jacobi_reduce import DIRICHLET, NEUMANN, BC, BCKind, ReducedOperator
from eqvidx.partition_bounds import mr_bounds, robin_dirichlet_compare, split, split_mixed


def interval():
    return ReducedOperator.from_functions(1.0, 2.0, 0.0, math.pi, DIRICHLET, DIRICHLET)


def test_split_kinds():
    op = interval()
    parts = split(op, [1.0, 2.0])
    assert [(p.a, p.b) for p in parts['D']] == [(0.0, 1.0), (1.0, 2.0), (2.0, math.pi)]
    assert [p.bc_right.kind for p in parts['D']] == [BCKind.DIRICHLET] * 3
    assert [p.bc_left.kind for p in parts['N']] == [BCKind.DIRICHLET, BCKind.NEUMANN, BCKind.NEUMANN]
    assert parts['N'][-1].bc_right == DIRICHLET
    assert split(op, []) == {'D': [op], 'N': [op]}


def test_split_mixed():
    pieces = split_mixed(interval(), [2.0], [1.0])
    assert [(p.bc_left.kind, p.bc_right.kind) for p in pieces] == [
        (BCKind.DIRICHLET, BCKind.DIRICHLET), (BCKind.DIRICHLET, BCKind.NEUMANN), (BCKind.NEUMANN, BCKind.DIRICHLET)]


@pytest.mark.parametrize('cuts', [[2.0, 1.0], [1.0, 1.0], [0.0], [math.pi], [4.0]])
def test_bad_cuts(cuts):
    with pytest.raises(DomainError):
        split(interval(), cuts)
    with pytest.raises(DomainError):
        mr_bounds(interval(), cuts, 0.0)


def test_half_interval_example():
    report = mr_bounds(interval(), [math.pi / 2], 0.0)
    assert (report.mr_lower, report.full_strict, report.full_nonstrict, report.mr_upper) == (0, 1, 1, 2)
    assert report.sandwich_ok
    first = report.pieces[0]
    assert (first.dirichlet_strict, first.neumann_strict) == (0, 1)
    assert report.mesh_size >= 400


def test_piece_choice_is_optimal():
    report = mr_bounds(interval(), [1.0, 2.0], 0.5)
    assert report.mr_lower >= report.mr_lower_piece1
    assert report.mr_upper <= report.mr_upper_piece1


@given(st.floats(1.0, 4.0), st.floats(-3.0, 8.0), st.floats(0.1, 0.9), st.floats(-10.0, 20.0),
       st.sampled_from([DIRICHLET, NEUMANN, BC.robin(1.0), BC.robin(-0.5)]))
@settings(max_examples=50, deadline=None)
def test_sandwich_holds(length, c, frac, t, outer):
    op = ReducedOperator.from_functions(lambda x: 1.0 + 0.5 * np.sin(3 * x), lambda x: c + np.cos(x) * 4,
                                        0.0, length, outer, outer)
    report = mr_bounds(op, [frac * length], t, n=80, gap=0.0)
    assert report.mr_lower <= report.full_strict <= report.full_nonstrict <= report.mr_upper


def test_robin_dominates_dirichlet():
    rob = ReducedOperator.from_functions(lambda x: 1.0 + x, 1.5, 0.0, 2.0, NEUMANN, BC.robin(1.0))
    for r in (1.0, -2.0):
        rob_r = rob.with_bc(right=BC.robin(r))
        report = robin_dirichlet_compare(rob_r.with_bc(right=DIRICHLET), rob_r, n=200)
        assert report.passed, report.violations
        assert report.r == r
        assert len(report.lambdas) == 50
        assert np.all(report.robin_strict >= report.dirichlet_nonstrict)


def test_compare_on_left_end():
    rob = ReducedOperator.from_functions(1.0, 0.0, 0.0, 1.0, BC.robin(0.7), NEUMANN)
    report = robin_dirichlet_compare(rob.with_bc(left=DIRICHLET), rob, lambdas=[-1.0, 0.0, 3.0], n=100)
    assert report.passed and report.r == 0.7


def test_compare_mismatch():
    rob = ReducedOperator.from_functions(1.0, 0.0, 0.0, 1.0, NEUMANN, BC.robin(1.0))
    other = ReducedOperator.from_functions(1.0, 0.0, 0.0, 1.0, NEUMANN, DIRICHLET)
    with pytest.raises(OperatorMismatchError):
        robin_dirichlet_compare(other, rob)
    with pytest.raises(OperatorMismatchError):
        robin_dirichlet_compare(rob.with_bc(right=DIRICHLET), rob.with_bc(right=DIRICHLET))
    with pytest.raises(OperatorMismatchError):
        robin_dirichlet_compare(rob.with_bc(left=DIRICHLET, right=DIRICHLET), rob)
