import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import brentq

from eqvidx.errors import AmbiguityError, DegenerateFunctionError, MeshError, PreconditionError
from eqvidx.jacobi_reduce import DIRICHLET, NATURAL, NEUMANN, BC, ReducedOperator
from eqvidx.sturm_spectral import (DENSE_SIZE, Mesh, assemble, build_mesh, count_below, eigen_residual,
                                   eigenpairs, eigenvalues_by_index, inertia, lower_bound, lowest_eigenvalue,
                                   lowest_pairs, nodal_domains)


def dirichlet_line():
    return ReducedOperator.from_functions(1.0, 0.0, 0.0, math.pi, DIRICHLET, DIRICHLET)


def test_dirichlet_line_spectrum():
    res = eigenpairs(dirichlet_line(), count=3, target_tol=1e-5)
    assert res.eigenvalues == pytest.approx([1.0, 4.0, 9.0], abs=1e-6)
    assert np.all(res.raw >= res.eigenvalues)
    assert res.nodal_counts == [1, 2, 3]
    assert np.allclose(res.gram(), np.eye(3), atol=1e-8)
    assert res.count(2.0) == 1 and res.count(4.5) == 2
    assert all(res.is_simple(i) for i in range(3))
    assert res.nearest(3.9) == 1


def test_dirichlet_eigenfunctions_vanish_at_ends():
    res = eigenpairs(dirichlet_line(), count=2, target_tol=1e-5)
    assert np.all(res.eigenfunctions[:, 0] == 0.0) and np.all(res.eigenfunctions[:, -1] == 0.0)
    # leading sign is positive
    assert res.eigenfunctions[0, len(res.nodes) // 2] > 0


def test_second_order_convergence():
    errors = [lowest_eigenvalue(dirichlet_line(), n=n) - 1.0 for n in (100, 200)]
    assert errors[0] > errors[1] > 0
    assert 1.9 < math.log2(errors[0] / errors[1]) < 2.1


def test_count_examples():
    op = dirichlet_line()
    assert count_below(op, 0.5) == 0
    assert count_below(op, 5.0) == 2
    assert count_below(op, 5.0, strict=False) == 2
    with pytest.raises(AmbiguityError):
        count_below(op, 4.0)
    assert count_below(op, 4.0, on_threshold='snap') == 1
    assert count_below(op, 4.0, strict=False, on_threshold='snap') == 2
    with pytest.raises(PreconditionError):
        count_below(op, float('nan'))


def test_robin_ends_have_one_negative_eigenvalue():
    op = ReducedOperator.from_functions(1.0, 0.0, 0.0, 1.0, BC.robin(1.0), BC.robin(1.0))
    k = brentq(lambda k: k * math.tanh(k / 2) - 1.0, 0.5, 3.0)
    assert k == pytest.approx(1.5434, abs=1e-4)
    res = eigenpairs(op, count=2, target_tol=1e-7)
    assert res.eigenvalues[0] == pytest.approx(-k ** 2, abs=1e-6)
    assert res.eigenvalues[1] > 0
    assert count_below(op, 0.0) == 1


def test_natural_end_with_vanishing_weight():
    op = ReducedOperator.from_functions(lambda t: t, 1.0, 0.0, 1.0, NATURAL, NEUMANN)
    assert lowest_eigenvalue(op) == pytest.approx(-1.0, abs=1e-10)
    res = eigenpairs(op, count=1)
    assert np.allclose(res.eigenfunctions[0], res.eigenfunctions[0][0], rtol=1e-6)


@given(st.floats(0.5, 5.0), st.floats(-3.0, 3.0), st.floats(0.1, 3.0))
@settings(max_examples=50, deadline=None)
def test_boundary_conditions_are_ordered(length, c, r):
    base = ReducedOperator.from_functions(lambda t: 1.0 + t, c, 0.0, length, NEUMANN, NEUMANN)
    mesh = build_mesh(base, 60)
    lam = [lowest_eigenvalue(base.with_bc(bc, bc), mesh=mesh) for bc in (DIRICHLET, NEUMANN, BC.robin(r))]
    assert lam[0] >= lam[1] - 1e-12
    assert lam[1] >= lam[2] - 1e-12


@given(st.floats(-5.0, 60.0))
@settings(max_examples=100, deadline=None)
def test_inertia_matches_dense_eigensolver(shift):
    op = ReducedOperator.from_functions(lambda t: 2.0 + np.sin(t), lambda t: t, 0.0, 3.0, DIRICHLET, BC.robin(0.5))
    pencil = assemble(op, build_mesh(op, 20))
    vals = scipy.linalg.eigh(pencil.stiffness().toarray(), pencil.mass().toarray(), eigvals_only=True)
    assume(np.min(np.abs(vals - shift)) > 1e-8)
    assert inertia(pencil, shift) == np.count_nonzero(vals < shift)
    i0, i1 = inertia(pencil, [-10.0, 60.0])
    found = eigenvalues_by_index(pencil, i0, i1)
    inside = vals[(vals >= -10.0) & (vals < 60.0)]
    assert found == pytest.approx(inside, rel=1e-10, abs=1e-10)


random_weight = st.lists(st.floats(-0.4, 0.4), min_size=3, max_size=3)
random_potential = st.lists(st.floats(-4.0, 4.0), min_size=3, max_size=3)


def _trig(c, offset=0.0):
    return lambda t: offset + c[0] + c[1] * np.sin(t) + c[2] * np.cos(2.0 * t)


@given(random_weight, random_potential, st.floats(0.5, 4.0), st.floats(0.05, 3.0))
@settings(max_examples=40, deadline=None)
def test_boundary_conditions_are_ordered_for_every_index(cv, cq, length, r):
    base = ReducedOperator.from_functions(_trig(cv, offset=1.5), _trig(cq), 0.0, length, NEUMANN, NEUMANN)
    mesh = build_mesh(base, 80)
    lam = [eigenvalues_by_index(assemble(base.with_bc(bc, bc), mesh), 0, 6)
           for bc in (DIRICHLET, NEUMANN, BC.robin(r))]
    slack = 1e-10 * np.maximum(1.0, np.abs(lam[1]))
    assert np.all(lam[0] >= lam[1] - slack)
    assert np.all(lam[1] >= lam[2] - slack)


def test_lanczos_matches_dense_solve():
    op = ReducedOperator.from_functions(lambda t: 2.0 + np.sin(t), lambda t: 5.0 * np.cos(t), 0.0, 6.0,
                                        NEUMANN, BC.robin(0.5))
    pencil = assemble(op, build_mesh(op, 2 * DENSE_SIZE))
    assert pencil.size > DENSE_SIZE
    vals, vecs = lowest_pairs(pencil, 5)
    dense = scipy.linalg.eigh(pencil.stiffness().toarray(), pencil.mass().toarray(), eigvals_only=True,
                              subset_by_index=[0, 4])
    assert vals == pytest.approx(dense, rel=1e-9, abs=1e-9)
    gram = vecs @ np.array([pencil.mass_dot(v) for v in vecs]).T
    assert np.allclose(gram, np.eye(5), atol=1e-8)
    assert inertia(pencil, lower_bound(pencil)) == 0


def test_curve_operators_are_meshed_by_sample_index():
    grid = np.concatenate([[0.0], np.geomspace(1e-6, 1.0, 400)])
    V = grid * (1.0 + grid)
    op = ReducedOperator(0.0, 1.0, lambda t: np.interp(t, grid, V), lambda t: np.zeros_like(t),
                         grid=grid, V_samples=V, q_samples=np.zeros_like(V)).with_breakpoints([0.01])
    mesh = build_mesh(op, 50)
    assert mesh.nodes[0] == 0.0 and mesh.nodes[-1] == 1.0
    assert np.any(mesh.nodes == 0.01)
    assert np.all(np.diff(mesh.nodes) > 0)
    # geometric samples give elements far below the uniform size near t = 0
    assert np.diff(mesh.nodes)[1] < 1e-3 / 50


def test_mesh_contains_breakpoints():
    op = dirichlet_line().with_breakpoints([1.0, 2.0])
    mesh = build_mesh(op, 50)
    assert mesh.nodes[0] == 0.0 and mesh.nodes[-1] == math.pi
    assert np.any(np.abs(mesh.nodes - 1.0) < 1e-14) and np.any(np.abs(mesh.nodes - 2.0) < 1e-14)
    piece = mesh.restrict(1.0, 2.0)
    assert piece.nodes[0] == pytest.approx(1.0) and piece.nodes[-1] == pytest.approx(2.0)
    assert mesh.refine().n_elements == 2 * mesh.n_elements
    with pytest.raises(MeshError):
        mesh.restrict(1.0, 1.0 + 1e-3)
    with pytest.raises(MeshError):
        build_mesh(op, 1)


def test_natural_ends_are_graded():
    op = ReducedOperator.from_functions(lambda t: t * (1 - t), 0.0, 0.0, 1.0)
    mesh = build_mesh(op, 100)
    steps = np.diff(mesh.nodes)
    assert steps[0] == pytest.approx(0.01 / 20) and steps[-1] == pytest.approx(0.01 / 20)
    assert np.max(steps) <= 0.01 + 1e-12


def test_assemble_rejects_foreign_mesh():
    with pytest.raises(MeshError):
        assemble(dirichlet_line(), Mesh(np.linspace(0.0, 1.0, 10)))


def test_nodal_domains():
    t = np.linspace(0.0, 1.0, 101)
    assert nodal_domains(np.sin(3 * math.pi * t)) == 3
    assert nodal_domains(np.ones(5)) == 1
    with pytest.raises(DegenerateFunctionError):
        nodal_domains(np.zeros(5))


def test_eigen_residual_order():
    out = eigen_residual(dirichlet_line(), np.sin, 1.0, n=50, levels=3)
    assert len(out['residual']) == 3 and len(out['order']) == 2
    assert out['residual'][0] > out['residual'][-1]
    assert min(out['order']) >= 1.9
