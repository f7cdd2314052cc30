"""
Weighted Sturm-Liouville eigenproblems by conforming piecewise-linear elements.

The form Q(u) = int (u'^2 - q u^2) V dt (+ Robin terms) and the mass int u^2 V dt are
assembled with two-point Gauss quadrature into a symmetric tridiagonal pencil (K, M).
Eigenvalue counts come from the inertia of K - lam M (Sylvester), computed by an LDL^T
pivot sweep vectorized over many shifts at once. Eigenpairs come from shift-invert
Lanczos (ARPACK through scipy) below the spectrum, or from a dense solve on small pencils.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.linalg import solveh_banded
from scipy.sparse.linalg import eigsh

from eqvidx.errors import (AmbiguityError, BudgetExceededError, DegenerateFunctionError,
                           MeshError, PreconditionError)
from eqvidx.jacobi_reduce import BCKind

_GAUSS = 0.5 / math.sqrt(3.0)
_PA, _PB = 0.5 + _GAUSS, 0.5 - _GAUSS
DENSE_SIZE = 600


@dataclass
class Mesh:
    nodes: np.ndarray

    @property
    def n_elements(self):
        return len(self.nodes) - 1

    @property
    def h(self):
        return float(np.max(np.diff(self.nodes)))

    def refine(self):
        """Nested halving: every element is split at its midpoint."""
        nodes = np.empty(2 * len(self.nodes) - 1)
        nodes[0::2] = self.nodes
        nodes[1::2] = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return Mesh(nodes)

    def restrict(self, a, b):
        """Sub-mesh on [a, b]; both ends must already be nodes."""
        tol = 1e-12 * max(1.0, abs(a), abs(b))
        i = int(np.argmin(np.abs(self.nodes - a)))
        j = int(np.argmin(np.abs(self.nodes - b)))
        if j <= i or abs(self.nodes[i] - a) > tol or abs(self.nodes[j] - b) > tol:
            raise MeshError(f'[{a}, {b}] is not spanned by mesh nodes')
        return Mesh(self.nodes[i:j + 1].copy())


def _graded(length, h, ratio, h_min):
    steps, step, total = [], h_min, 0.0
    while step < h and total + step < 0.5 * length:
        steps.append(step)
        total += step
        step *= ratio
    return np.array(steps)


def _segment(x0, x1, h, grade_left, grade_right, ratio, refine_factor):
    length = x1 - x0
    left = _graded(length, h, ratio, h / refine_factor) if grade_left else np.zeros(0)
    right = _graded(length, h, ratio, h / refine_factor) if grade_right else np.zeros(0)
    rest = length - left.sum() - right.sum()
    k = max(1, int(math.ceil(rest / h - 1e-9)))
    steps = np.concatenate([left, np.full(k, rest / k), right[::-1]])
    nodes = x0 + np.concatenate([[0.0], np.cumsum(steps)])
    nodes[-1] = x1
    return nodes


def _piecewise(points, h, grade_left, grade_right, grading, refine_factor):
    pieces = []
    for k, (x0, x1) in enumerate(zip(points[:-1], points[1:])):
        seg = _segment(x0, x1, min(h, x1 - x0), grade_left and k == 0, grade_right and k == len(points) - 2,
                       grading, refine_factor)
        pieces.append(seg if k == 0 else seg[1:])
    return np.concatenate(pieces)


def build_mesh(op, n=400, grading=1.05, refine_factor=20.0, per_sample=8):
    """
    Mesh of [op.a, op.b] with about n elements, containing every breakpoint of op as a
    node and graded geometrically from h / refine_factor up to h toward NATURAL ends,
    where V vanishes.

    Operators reduced from a curve are meshed uniformly in the sample index rather than
    in arclength, so nodes follow the integrator's conformal step near a pole or the
    origin, with at least one element per ``per_sample`` samples.
    """
    if n < 2:
        raise MeshError(f'at least two elements required, got {n}')
    grade_left = op.bc_left.kind == BCKind.NATURAL
    grade_right = op.bc_right.kind == BCKind.NATURAL
    points = np.array([op.a, *op.breakpoints, op.b])
    if op.grid is None or len(op.grid) < 3:
        return Mesh(_piecewise(points, op.length / n, grade_left, grade_right, grading, refine_factor))
    index = np.arange(len(op.grid), dtype=float)
    at = np.interp(points, op.grid, index)
    n = max(n, int((at[-1] - at[0]) // per_sample))
    nodes = np.interp(_piecewise(at, (at[-1] - at[0]) / n, grade_left, grade_right, grading, refine_factor),
                      index, op.grid)
    for p in points:
        nodes[int(np.argmin(np.abs(nodes - p)))] = p
    return Mesh(nodes)


@dataclass
class Pencil:
    """
    Symmetric tridiagonal pair on the free nodes of a mesh.

    :param kd, ke: stiffness diagonal and off-diagonal
    :param md, me: mass diagonal and off-diagonal
    :param free: indices of the unknowns among mesh.nodes
    """
    mesh: Mesh
    kd: np.ndarray
    ke: np.ndarray
    md: np.ndarray
    me: np.ndarray
    free: np.ndarray

    @property
    def size(self):
        return len(self.kd)

    def stiffness(self):
        return sparse.diags([self.ke, self.kd, self.ke], [-1, 0, 1], format='csr')

    def mass(self):
        return sparse.diags([self.me, self.md, self.me], [-1, 0, 1], format='csr')

    def shifted(self, lam):
        return self.kd - lam * self.md, self.ke - lam * self.me

    def mass_dot(self, x):
        y = self.md * x
        y[:-1] += self.me * x[1:]
        y[1:] += self.me * x[:-1]
        return y

    def stiffness_dot(self, x):
        y = self.kd * x
        y[:-1] += self.ke * x[1:]
        y[1:] += self.ke * x[:-1]
        return y


def assemble(op, mesh):
    """
    :param op: ReducedOperator
    :param mesh: Mesh spanning [op.a, op.b]
    :return: Pencil; DIRICHLET ends are eliminated, ROBIN(r) ends add -r V to the end diagonal
    """
    x = mesh.nodes
    if abs(x[0] - op.a) > 1e-12 * max(1.0, abs(op.a)) or abs(x[-1] - op.b) > 1e-12 * max(1.0, abs(op.b)):
        raise MeshError(f'mesh [{x[0]}, {x[-1]}] does not span [{op.a}, {op.b}]')
    l = np.diff(x)
    if np.any(l <= 0):
        raise MeshError('mesh nodes are not strictly increasing')
    mid, g, w = 0.5 * (x[:-1] + x[1:]), _GAUSS * l, 0.5 * l
    xg = np.stack([mid - g, mid + g])
    V = op.V(xg)
    qV = op.q(xg) * V
    intV = w * (V[0] + V[1])
    qLL = w * (qV[0] * _PA ** 2 + qV[1] * _PB ** 2)
    qRR = w * (qV[0] * _PB ** 2 + qV[1] * _PA ** 2)
    qLR = w * (qV[0] + qV[1]) * _PA * _PB
    mLL = w * (V[0] * _PA ** 2 + V[1] * _PB ** 2)
    mRR = w * (V[0] * _PB ** 2 + V[1] * _PA ** 2)
    mLR = intV * _PA * _PB

    n = len(x)
    kd, md = np.zeros(n), np.zeros(n)
    kd[:-1] += intV / l ** 2 - qLL
    kd[1:] += intV / l ** 2 - qRR
    md[:-1] += mLL
    md[1:] += mRR
    ke = -intV / l ** 2 - qLR
    me = mLR

    for bc, i, end in ((op.bc_left, 0, op.a), (op.bc_right, n - 1, op.b)):
        if bc.kind == BCKind.ROBIN:
            kd[i] -= bc.r * float(op.V(np.array([end]))[0])
    free = np.arange(n)
    if op.bc_left.kind == BCKind.DIRICHLET:
        free = free[1:]
    if op.bc_right.kind == BCKind.DIRICHLET:
        free = free[:-1]
    if len(free) == 0:
        raise MeshError('no unknowns left after eliminating Dirichlet ends')
    lo, hi = free[0], free[-1]
    pencil = Pencil(mesh, kd[lo:hi + 1], ke[lo:hi], md[lo:hi + 1], me[lo:hi], free)
    if np.any(pencil.md <= 0):
        raise MeshError(f'non-positive mass diagonal at {np.count_nonzero(pencil.md <= 0)} node(s); weight underflow')
    return pencil


def inertia(pencil, shifts):
    """
    Number of eigenvalues strictly below each shift: negative pivots of the LDL^T
    factorization of K - shift M, with zero pivots pushed to -pivmin.

    :param shifts: float or array of floats
    :return: int or np.ndarray of int
    """
    scalar = np.isscalar(shifts)
    s = np.atleast_1d(np.asarray(shifts, dtype=float))
    if len(s) <= 4:
        count = np.array([_pivot_count(pencil, x) for x in s])
        return int(count[0]) if scalar else count
    d = pencil.kd[:, None] - s[None, :] * pencil.md[:, None]
    e2 = (pencil.ke[:, None] - s[None, :] * pencil.me[:, None]) ** 2
    pivmin = np.finfo(float).tiny * max(1.0, float(np.max(np.abs(d))))
    piv = d[0].copy()
    piv[np.abs(piv) < pivmin] = -pivmin
    count = (piv < 0).astype(int)
    for i in range(1, pencil.size):
        piv = d[i] - e2[i - 1] / piv
        piv[np.abs(piv) < pivmin] = -pivmin
        count += piv < 0
    return int(count[0]) if scalar else count


def _pivot_count(pencil, shift):
    # single shift: the same sweep on Python floats
    d, e = pencil.shifted(shift)
    pivmin = np.finfo(float).tiny * max(1.0, float(np.max(np.abs(d))))
    count, piv = 0, None
    for di, ei in zip(d.tolist(), [0.0] + (e ** 2).tolist()):
        piv = di if piv is None else di - ei / piv
        if abs(piv) < pivmin:
            piv = -pivmin
        count += piv < 0
    return count


def lower_bound(pencil):
    """The largest -2^j, j >= 0, with no eigenvalue below it, from one sweep over all j."""
    shifts = -np.power(2.0, np.arange(64))
    clear = np.flatnonzero(inertia(pencil, shifts) == 0)
    if not len(clear):
        raise MeshError('pencil has eigenvalues below -2^63')
    return float(shifts[clear[0]])


def lowest_pairs(pencil, k):
    """
    The k lowest eigenpairs, ascending, eigenvectors as M-orthonormal rows. Small pencils
    are solved densely, larger ones by shift-invert Lanczos about a shift below the spectrum.
    """
    if k > pencil.size:
        raise MeshError(f'{k} eigenvalues requested from a pencil of size {pencil.size}')
    if k == 0:
        return np.zeros(0), np.zeros((0, pencil.size))
    if pencil.size <= DENSE_SIZE or 2 * k >= pencil.size:
        vals, vecs = scipy.linalg.eigh(pencil.stiffness().toarray(), pencil.mass().toarray(),
                                       subset_by_index=[0, k - 1])
    else:
        sigma = 2.0 * lower_bound(pencil)
        vals, vecs = eigsh(pencil.stiffness().tocsc(), k=k, M=pencil.mass().tocsc(), sigma=sigma,
                           which='LM', v0=np.ones(pencil.size))
    order = np.argsort(vals)
    vecs = vecs[:, order].T
    norms = np.sqrt(np.einsum('ki,ki->k', vecs, np.array([pencil.mass_dot(v) for v in vecs])))
    return vals[order], vecs / norms[:, None]


def eigenvalues_by_index(pencil, i0, i1):
    """Eigenvalues number i0, ..., i1 - 1 (zero based, ascending)."""
    if i1 <= i0:
        return np.zeros(0)
    return lowest_pairs(pencil, i1)[0][i0:i1]


def threshold_band(op, pencil, lam, window=1e-3, floor=1e-6):
    """
    Half-width of the band around lam inside which a discrete eigenvalue cannot be told
    apart from lam: 100 times the Richardson error estimate of the eigenvalues near lam,
    at least ``floor``.
    """
    w = window * max(1.0, abs(lam))
    i0, i1 = inertia(pencil, [lam - w, lam + w])
    if i0 == i1:
        return floor
    coarse = eigenvalues_by_index(pencil, i0, i1)
    fine = eigenvalues_by_index(assemble(op, pencil.mesh.refine()), i0, i1)
    return max(floor, 100.0 * float(np.max(np.abs(fine - coarse))) / 3.0)


def count_below(op, lam, strict=True, mesh=None, n=400, gap=None, on_threshold='raise'):
    """
    Number of eigenvalues below lam (strict) or at most lam (non-strict).

    :param gap: (float or None) threshold band; None derives it from error estimates
    :param on_threshold: 'raise' for an AmbiguityError when an eigenvalue sits inside the
                         band, 'snap' to count it as equal to lam
    """
    assert on_threshold in ('raise', 'snap'), f'unknown threshold policy {on_threshold}'
    if not np.isfinite(lam):
        raise PreconditionError(f'threshold {lam} is not finite')
    pencil = assemble(op, mesh if mesh is not None else build_mesh(op, n))
    band = gap if gap is not None else threshold_band(op, pencil, lam)
    below, above = inertia(pencil, [lam - band, lam + band])
    if below == above:
        return int(below)
    if on_threshold == 'snap':
        return int(below if strict else above)
    raise AmbiguityError(f'{above - below} eigenvalue(s) within {band:.3g} of {lam}; refine the mesh')


@dataclass
class SpectralResult:
    """
    :param eigenvalues: Richardson-extrapolated eigenvalues, ascending
    :param raw: eigenvalues on the finest mesh
    :param error_estimate: |lam_{h/2} - lam_h| / 3 per eigenvalue
    :param eigenfunctions: (np.ndarray, [k, nodes]) mass-orthonormal, zero at Dirichlet ends
    :param first_index: global index of the first eigenvalue
    """
    eigenvalues: np.ndarray
    raw: np.ndarray
    error_estimate: np.ndarray
    eigenfunctions: np.ndarray
    nodes: np.ndarray
    nodal_counts: List[int]
    mesh_size: int
    h: float
    first_index: int = 0
    pencil: Optional[Pencil] = field(default=None, repr=False)

    def gram(self):
        U = self.eigenfunctions[:, self.pencil.free]
        return np.array([[u @ self.pencil.mass_dot(v) for v in U] for u in U])

    def clusters(self):
        """[(value, multiplicity, member indices)] merging values within max(1e-8, 10 err)."""
        out = []
        for i, lam in enumerate(self.eigenvalues):
            tol = max(1e-8, 10.0 * self.error_estimate[i])
            if out and lam - out[-1][0] <= tol:
                out[-1][2].append(i)
                members = out[-1][2]
                out[-1] = (float(np.mean(self.eigenvalues[members])), len(members), members)
            else:
                out.append((float(lam), 1, [i]))
        return out

    def cluster_of(self, i):
        return next(c for c in self.clusters() if i in c[2])

    def is_simple(self, i):
        """Multiplicity one and every neighbouring cluster at least 100 err away."""
        value, mult, _ = self.cluster_of(i)
        if mult != 1:
            return False
        gap = 100.0 * self.error_estimate[i]
        others = [c[0] for c in self.clusters() if i not in c[2]]
        return all(abs(c - value) >= gap for c in others)

    def nearest(self, lam):
        return int(np.argmin(np.abs(self.eigenvalues - lam)))

    def count(self, lam, strict=True):
        vals = self.eigenvalues
        return int(np.count_nonzero(vals < lam if strict else vals <= lam)) + self.first_index


def _leading_positive(x):
    lead = np.flatnonzero(np.abs(x) > 1e-3 * np.max(np.abs(x)))[0]
    return x if x[lead] > 0 else -x


def eigenpairs(op, window=None, count=None, target_tol=1e-7, n=400, max_refinements=6, mesh=None):
    """
    Eigenpairs in a window [lo, hi) or the lowest ``count`` ones, with the mesh doubled
    until the Richardson error estimate of every eigenvalue is at most
    target_tol * max(1, |lam|). The fine values of one level are the coarse values of the next.

    :return: SpectralResult on the finest mesh used
    """
    assert (window is None) != (count is None), 'give exactly one of window and count'
    if window is not None and not all(np.isfinite(window)):
        raise PreconditionError(f'window {window} is not bounded')
    mesh = mesh if mesh is not None else build_mesh(op, n)
    pencil = assemble(op, mesh)
    known, coarse_vals = None, None
    for _ in range(max_refinements + 1):
        fine_mesh = mesh.refine()
        fine = assemble(op, fine_mesh)
        i0, i1 = tuple(inertia(fine, list(window))) if window is not None else (0, count)
        if i1 > pencil.size:
            raise MeshError(f'coarse mesh has {pencil.size} unknowns, {i1} eigenvalues requested')
        if known != (i0, i1):
            coarse_vals = eigenvalues_by_index(pencil, i0, i1)
        vals, vecs = lowest_pairs(fine, i1)
        fine_vals, fine_vecs = vals[i0:i1], vecs[i0:i1]
        err = np.abs(fine_vals - coarse_vals) / 3.0
        scale = np.maximum(1.0, np.abs(fine_vals))
        if i1 == i0 or np.all(err <= target_tol * scale):
            break
        mesh, pencil = fine_mesh, fine
        known, coarse_vals = (i0, i1), fine_vals
    else:
        raise BudgetExceededError(f'Richardson estimate {np.max(err / scale):.3g} (relative) above {target_tol:.3g} '
                                  f'after {max_refinements} refinements')
    full = np.zeros((len(fine_vecs), len(fine_mesh.nodes)))
    for k, v in enumerate(fine_vecs):
        full[k, fine.free] = _leading_positive(v)
    return SpectralResult(eigenvalues=(4.0 * fine_vals - coarse_vals) / 3.0, raw=fine_vals, error_estimate=err,
                          eigenfunctions=full, nodes=fine_mesh.nodes, nodal_counts=[nodal_domains(u) for u in full],
                          mesh_size=fine_mesh.n_elements, h=fine_mesh.h, first_index=int(i0), pencil=fine)


def lowest_eigenvalue(op, n=400, mesh=None):
    pencil = assemble(op, mesh if mesh is not None else build_mesh(op, n))
    return float(eigenvalues_by_index(pencil, 0, 1)[0])


def nodal_domains(u, threshold=1e-7):
    """1 + number of sign changes among samples above threshold * max|u|."""
    u = np.asarray(u, dtype=float)
    scale = np.max(np.abs(u)) if u.size else 0.0
    kept = u[np.abs(u) > threshold * scale] if scale > 0 else np.zeros(0)
    if kept.size == 0:
        raise DegenerateFunctionError('function vanishes to within the nodal threshold')
    return 1 + int(np.count_nonzero(np.sign(kept[1:]) != np.sign(kept[:-1])))


def eigen_residual(op, fn, lam, n=400, levels=3, mesh=None):
    """
    Discrete eigen-residual of the nodal interpolant of fn at eigenvalue lam on ``levels``
    nested meshes, measured in the norm dual to the energy of K - sigma M, sigma below
    the spectrum:

        sqrt(r^T (K - sigma M)^-1 r) / ||u||_M,    r = (K - lam M) u.

    :return: dict with mesh sizes h, residuals and observed orders between levels
    """
    mesh = mesh if mesh is not None else build_mesh(op, n)
    hs, res = [], []
    for _ in range(levels):
        pencil = assemble(op, mesh)
        u = np.asarray(fn(mesh.nodes), dtype=float)[pencil.free]
        r = pencil.stiffness_dot(u) - lam * pencil.mass_dot(u)
        d, e = pencil.shifted(lower_bound(pencil) - 1.0)
        ab = np.zeros((2, len(d)))
        ab[0, 1:], ab[1] = e, d
        dual = solveh_banded(ab, r)
        hs.append(mesh.h)
        res.append(math.sqrt(max(r @ dual, 0.0)) / math.sqrt(u @ pencil.mass_dot(u)))
        mesh = mesh.refine()
    orders = [math.log2(a / b) if b > 0 else float('inf') for a, b in zip(res[:-1], res[1:])]
    return {'h': hs, 'residual': res, 'order': orders}
