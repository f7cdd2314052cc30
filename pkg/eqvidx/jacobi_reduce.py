"""
Reduction of the Jacobi operator of an invariant hypersurface to a weighted
Sturm-Liouville problem on the profile.

For invariant functions u(t) the index form is

    Q(u) = int (u'^2 - q u^2) V dt - sum over ROBIN ends of r u^2 V

with V the orbit volume and q = |A|^2 + Ric(nu, nu). The principal curvatures are the
profile curvature kappa and h_i = d_n log radius_i; minimality is kappa + h1 + h2 = 0.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np
import torch

from eqvidx.errors import InvalidBCError, OperatorMismatchError, PreconditionError
from eqvidx.interpolation import SplineInterp
from eqvidx.orbit_models import TWO_PI_SQ, Edge, Model, get_orbit_space


class BCKind(Enum):
    NATURAL = 'natural'
    DIRICHLET = 'dirichlet'
    NEUMANN = 'neumann'
    ROBIN = 'robin'


@dataclass(frozen=True)
class BC:
    kind: BCKind
    r: float = 0.0

    @classmethod
    def robin(cls, r):
        return cls(BCKind.ROBIN, float(r))

    def __str__(self):
        return f'robin({self.r:g})' if self.kind == BCKind.ROBIN else self.kind.value


NATURAL = BC(BCKind.NATURAL)
DIRICHLET = BC(BCKind.DIRICHLET)
NEUMANN = BC(BCKind.NEUMANN)


class FieldTag(Enum):
    NU5 = 'nu5'
    X_DOT_NU = 'x_dot_nu'


def _as_function(f):
    if callable(f):
        return f
    c = float(f)
    return lambda t: np.full_like(np.asarray(t, dtype=float), c)


@dataclass
class ReducedOperator:
    """
    Weighted Sturm-Liouville datum on [a, b].

    :param V: callable weight, vectorized over t
    :param q: callable potential, vectorized over t
    :param breakpoints: interior arclengths every mesh of this operator must contain
    :param grid, V_samples, q_samples: source samples when reduced from a curve
    """
    a: float
    b: float
    V: Callable
    q: Callable
    bc_left: BC = NATURAL
    bc_right: BC = NATURAL
    breakpoints: Tuple[float, ...] = ()
    grid: Optional[np.ndarray] = None
    V_samples: Optional[np.ndarray] = None
    q_samples: Optional[np.ndarray] = None
    provenance: str = ''
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_functions(cls, V, q, a, b, bc_left=NATURAL, bc_right=NATURAL, provenance='analytic'):
        assert b > a, f'empty interval [{a}, {b}]'
        return cls(a, b, _as_function(V), _as_function(q), bc_left, bc_right, provenance=provenance)

    @property
    def length(self):
        return self.b - self.a

    def bc(self, side):
        return self.bc_left if side == 'left' else self.bc_right

    def with_bc(self, left=None, right=None):
        return replace(self, bc_left=left or self.bc_left, bc_right=right or self.bc_right)

    def with_breakpoints(self, points):
        inside = sorted({float(p) for p in points if self.a < p < self.b} | set(self.breakpoints))
        return replace(self, breakpoints=tuple(inside))

    def restrict(self, a, b, bc_left, bc_right):
        """Same V and q on the subinterval [a, b] with new end conditions."""
        assert self.a <= a < b <= self.b, f'[{a}, {b}] is not inside [{self.a}, {self.b}]'
        return replace(self, a=a, b=b, bc_left=bc_left, bc_right=bc_right,
                       breakpoints=tuple(p for p in self.breakpoints if a < p < b))

    def same_data(self, other):
        if (self.a, self.b) != (other.a, other.b):
            return False
        if self.V is other.V and self.q is other.q:
            return True
        return (self.grid is not None and other.grid is not None
                and np.array_equal(self.grid, other.grid)
                and np.array_equal(self.V_samples, other.V_samples)
                and np.array_equal(self.q_samples, other.q_samples))

    def check_same_data(self, other):
        if not self.same_data(other):
            raise OperatorMismatchError(f'operators {self.provenance!r} and {other.provenance!r} differ in V, q or interval')


@dataclass
class JacobiFieldSamples:
    tag: FieldTag
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self._interp = SplineInterp(self.t, self.values)

    def __call__(self, tq):
        return self._interp(tq)

    def zeros(self):
        """Linear-interpolated sign changes of the samples."""
        v, t = self.values, self.t
        idx = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
        return t[idx] - v[idx] * (t[idx + 1] - t[idx]) / (v[idx + 1] - v[idx])


def _collapsed(curve, side):
    end = curve.endpoints[0 if side == 'left' else 1]
    return end.kind in ('edge1', 'edge2')


def principal_curvatures(curve):
    """
    (kappa, h1, h2) at every sample. Interior values use torch autograd log-gradients of
    the radius functions; at a collapsed end the collapsing circle shares the profile
    curvature, so h_collapsed = kappa and h_other = -2 kappa up to the edge value of
    d_n log(radius_other).

    :return: (np.ndarray, shape [3, N])
    """
    os, rows = curve.os, curve.samples
    n = curve.normals()
    kappa = rows[:, 5].copy()
    h = np.zeros((2, len(rows)))
    inner = np.arange(len(rows))
    ends = {'left': 0, 'right': len(rows) - 1}
    collapsed = {side: i for side, i in ends.items() if _collapsed(curve, side)}
    inner = np.setdiff1d(inner, list(collapsed.values()))
    grads = os.dlog_radii_autograd(rows[inner, 1:3])
    h[:, inner] = np.einsum('rpk,pk->rp', grads, n[inner])
    for side, i in collapsed.items():
        end = curve.endpoints[0 if side == 'left' else 1]
        edge = Edge(int(end.kind[-1]))
        u0 = rows[i, 1] if os.along[edge] == 0 else rows[i, 2]
        phi = os.phi_from_tangent(rows[i, 1], rows[i, 3], rows[i, 4])
        other = 0 if edge == Edge.EDGE1 else 1
        h[other, i] = os.edge_dlog_other(edge, u0, phi)
        h[1 - other, i] = -kappa[i] - h[other, i]
    return np.vstack([kappa[None, :], h])


def second_fundamental(os, curve, t):
    """
    Principal curvatures (kappa, h1, h2) at arclength t, interpolated from the samples.
    At a collapsed end the one-sided limit is returned.
    """
    os = get_orbit_space(os)
    assert os.model == curve.os.model, 'curve lives in a different orbit space'
    curv = principal_curvatures(curve)
    if t <= curve.t[0]:
        return tuple(float(c) for c in curv[:, 0])
    if t >= curve.t[-1]:
        return tuple(float(c) for c in curv[:, -1])
    interp = SplineInterp(curve.t, curv.T)
    return tuple(float(c) for c in interp(t))


def minimality_trace(curve, trim=1):
    """max |kappa + h1 + h2| over interior samples."""
    curv = principal_curvatures(curve)[:, trim:len(curve.t) - trim]
    return float(np.max(np.abs(curv.sum(axis=0))))


def orbit_volumes(curve):
    r = curve.os.radii_torch(torch.as_tensor(curve.samples[:, 1:3], dtype=torch.float64)).numpy()
    return TWO_PI_SQ * np.clip(r[:, 0], 0.0, None) * np.clip(r[:, 1], 0.0, None)


def _resolve_bc(curve, side, spec):
    if _collapsed(curve, side):
        if spec is not None and spec.kind != BCKind.NATURAL:
            raise InvalidBCError(f'{spec} assigned to the collapsed {side} end')
        return NATURAL
    if spec is None:
        # free boundary of a hypersurface in the ball: index form carries r = 1
        return BC.robin(1.0)
    if spec.kind == BCKind.NATURAL:
        raise InvalidBCError(f'natural condition assigned to the non-collapsed {side} end')
    return spec


def reduce_jacobi(os, curve, bc_spec=None):
    """
    :param os: OrbitSpace of the curve
    :param curve: ProfileCurve
    :param bc_spec: (BC or None, BC or None) for the left and right ends; collapsed ends
                    are always NATURAL, free ends default to ROBIN(1)
    :return: ReducedOperator with q = |A|^2 + ambient Ricci
    """
    os = get_orbit_space(os)
    assert os.model == curve.os.model, 'curve lives in a different orbit space'
    left_spec, right_spec = bc_spec if bc_spec is not None else (None, None)
    bc_left = _resolve_bc(curve, 'left', left_spec)
    bc_right = _resolve_bc(curve, 'right', right_spec)
    t = curve.t
    curv = principal_curvatures(curve)
    A2 = np.sum(curv ** 2, axis=0)
    q = A2 + os.ambient_ricci
    V = orbit_volumes(curve)
    V_interp, q_interp = SplineInterp(t, V), SplineInterp(t, q)
    meta = {k: curve.meta[k] for k in ('family', 'parameter', 'tol') if k in curve.meta}
    return ReducedOperator(float(t[0]), float(t[-1]),
                           lambda tq: np.clip(V_interp(tq), 0.0, None), q_interp,
                           bc_left, bc_right, grid=t.copy(), V_samples=V, q_samples=q,
                           provenance=f"{meta.get('family', 'curve')}-{meta.get('parameter', '')}",
                           meta=meta)


def known_field(os, curve, tag):
    """
    Samples of the Jacobi field known in closed form: the fifth normal component on
    SPHERE4 (eigenvalue -3) or the support function x . nu on BALL4 (eigenvalue 0).
    The normal is fixed so that NU5 > 0 on the launch-side nodal interval.
    """
    os, tag = get_orbit_space(os), FieldTag(tag)
    expected = Model.SPHERE4 if tag == FieldTag.NU5 else Model.BALL4
    if os.model != expected or curve.os.model != expected:
        raise PreconditionError(f'{tag.value} is defined on {expected.value} curves only')
    return JacobiFieldSamples(tag, curve.t.copy(), curve.field())


def field_eigenvalue(tag):
    return -3.0 if FieldTag(tag) == FieldTag.NU5 else 0.0


def equator_weight(t):
    """V along the equator s = 0, where arclength is the angle a."""
    return TWO_PI_SQ * np.cos(t) * np.sin(t)
