"""
Partition bounds for eigenvalue counts of interval operators.

Cutting [a, b] at interior points and imposing DIRICHLET at the cuts (D-internalization)
or NEUMANN (N-internalization) brackets the counts of the whole interval:

    lower_j = #(< t) of D-piece j + sum over i != j of #(<= t) of D-piece i  <=  #(< t) of [a, b]
    #(<= t) of [a, b]  <=  #(<= t) of N-piece j + sum over i != j of #(< t) of N-piece i  = upper_j

Cuts are inserted as mesh nodes and the pieces are meshed by restriction, so the
discrete spaces nest exactly and the bounds hold for the discrete counts too.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from eqvidx.errors import DomainError, OperatorMismatchError
from eqvidx.jacobi_reduce import DIRICHLET, NEUMANN, BCKind
from eqvidx.sturm_spectral import build_mesh, count_below, lowest_eigenvalue


def _check_cuts(op, cuts):
    cuts = [float(c) for c in cuts]
    if any(b <= a for a, b in zip(cuts[:-1], cuts[1:])):
        raise DomainError(f'cuts {cuts} are not sorted and distinct')
    for c in cuts:
        if not op.a < c < op.b:
            raise DomainError(f'cut {c} is not strictly inside [{op.a}, {op.b}]')
    return cuts


def _pieces(op, cuts, kinds):
    ends = [op.a, *cuts, op.b]
    lefts = [op.bc_left, *kinds]
    rights = [*kinds, op.bc_right]
    return [op.restrict(a, b, l, r) for a, b, l, r in zip(ends[:-1], ends[1:], lefts, rights)]


def split(op, cuts):
    """
    :return: dict {'D': pieces, 'N': pieces}; with no cuts both are [op]
    """
    cuts = _check_cuts(op, cuts)
    if not cuts:
        return {'D': [op], 'N': [op]}
    return {'D': _pieces(op, cuts, [DIRICHLET] * len(cuts)),
            'N': _pieces(op, cuts, [NEUMANN] * len(cuts))}


def split_mixed(op, neumann_cuts, dirichlet_cuts):
    """Pieces with NEUMANN at every cut of the first family and DIRICHLET at the second."""
    tagged = sorted([(float(c), NEUMANN) for c in neumann_cuts] + [(float(c), DIRICHLET) for c in dirichlet_cuts])
    cuts = _check_cuts(op, [c for c, _ in tagged])
    return _pieces(op, cuts, [bc for _, bc in tagged])


@dataclass
class PieceCounts:
    a: float
    b: float
    dirichlet_strict: int
    dirichlet_nonstrict: int
    neumann_strict: int
    neumann_nonstrict: int


@dataclass
class PartitionReport:
    cuts: List[float]
    threshold: float
    pieces: List[PieceCounts]
    mr_lower: int
    mr_upper: int
    mr_lower_piece1: int
    mr_upper_piece1: int
    full_strict: int
    full_nonstrict: int
    mesh_size: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def sandwich_ok(self):
        return self.mr_lower <= self.full_strict and self.full_nonstrict <= self.mr_upper


def mr_bounds(op, cuts, t, n=400, on_threshold='raise', gap=None):
    """
    Assemble partition bounds at threshold t, choosing the distinguished piece to
    maximize the lower bound and minimize the upper one (piece-1 values are kept too).

    :return: PartitionReport
    """
    cuts = _check_cuts(op, cuts)
    whole = op.with_breakpoints(cuts)
    mesh = build_mesh(whole, n)
    counts = dict(on_threshold=on_threshold, gap=gap)

    def both(piece, piece_mesh):
        return (count_below(piece, t, True, piece_mesh, **counts),
                count_below(piece, t, False, piece_mesh, **counts))

    full_strict, full_nonstrict = both(whole, mesh)
    parts = split(whole, cuts)
    pieces = []
    for d_piece, n_piece in zip(parts['D'], parts['N']):
        sub = mesh.restrict(d_piece.a, d_piece.b)
        pieces.append(PieceCounts(d_piece.a, d_piece.b, *both(d_piece, sub), *both(n_piece, sub)))
    d_strict = np.array([p.dirichlet_strict for p in pieces])
    d_non = np.array([p.dirichlet_nonstrict for p in pieces])
    n_strict = np.array([p.neumann_strict for p in pieces])
    n_non = np.array([p.neumann_nonstrict for p in pieces])
    lower = d_strict + d_non.sum() - d_non
    upper = n_non + n_strict.sum() - n_strict
    return PartitionReport(cuts=cuts, threshold=float(t), pieces=pieces,
                           mr_lower=int(lower.max()), mr_upper=int(upper.min()),
                           mr_lower_piece1=int(lower[0]), mr_upper_piece1=int(upper[0]),
                           full_strict=full_strict, full_nonstrict=full_nonstrict,
                           mesh_size=mesh.n_elements)


@dataclass
class ComparisonReport:
    lambdas: np.ndarray
    robin_strict: np.ndarray
    dirichlet_nonstrict: np.ndarray
    r: float
    violations: List[float]

    @property
    def passed(self):
        return not self.violations


def _compared_side(op_dir, op_rob):
    for side in ('right', 'left'):
        d, r = op_dir.bc(side), op_rob.bc(side)
        if d.kind == BCKind.DIRICHLET and r.kind == BCKind.ROBIN:
            other = 'left' if side == 'right' else 'right'
            if op_dir.bc(other) != op_rob.bc(other):
                raise OperatorMismatchError(f'operators also differ at the {other} end')
            return side, r.r
    raise OperatorMismatchError('expected a DIRICHLET end facing a ROBIN end')


def robin_dirichlet_compare(op_dir, op_rob, lambdas=None, n_points=50, n=400):
    """
    Check #(< lam) for the Robin problem >= #(<= lam) for the Dirichlet problem on a grid
    of lam. The coefficient r may have either sign.

    :param lambdas: grid; defaults to n_points values on [lam_min - 1, lam_min + 10]
    :return: ComparisonReport listing every violating lam
    """
    op_dir.check_same_data(op_rob)
    _, r = _compared_side(op_dir, op_rob)
    mesh = build_mesh(op_rob, n)
    if lambdas is None:
        lam_min = min(lowest_eigenvalue(op_rob, mesh=mesh), lowest_eigenvalue(op_dir, mesh=mesh))
        lambdas = np.linspace(lam_min - 1.0, lam_min + 10.0, n_points)
    lambdas = np.asarray(lambdas, dtype=float)
    rob = np.array([count_below(op_rob, lam, True, mesh, on_threshold='snap') for lam in lambdas])
    dirichlet = np.array([count_below(op_dir, lam, False, mesh, on_threshold='snap') for lam in lambdas])
    violations = [float(lam) for lam, a, b in zip(lambdas, rob, dirichlet) if a < b]
    return ComparisonReport(lambdas, rob, dirichlet, r, violations)
