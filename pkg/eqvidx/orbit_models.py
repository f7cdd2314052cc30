"""
Orbit spaces of O(2)xO(2) acting on the round S^4 and on R^4.

Both quotients are two dimensional with a diagonal chart metric du1^2 + G(u1)^2 du2^2:

    SPHERE4: (s, a) in [-pi/2, pi/2] x [0, pi/2], G = cos s,
             radius1 = cos s cos a, radius2 = cos s sin a
    BALL4:   (rho1, rho2) in [0, inf)^2, G = 1,
             radius1 = rho1, radius2 = rho2

Tangent directions are described by an angle phi against the orthonormal frame
e1 = d/du1, e2 = G^-1 d/du2, so a unit tangent has chart components
(cos phi, sin phi / G) and the normal n (tangent rotated by +pi/2) has chart
components (-sin phi, cos phi / G).

Edges are where an orbit circle collapses: edge 1 = {radius2 = 0}, edge 2 = {radius1 = 0}.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np
import torch

from eqvidx import gradients
from eqvidx.errors import DomainError, UndefinedPointError

_EPS = 1e-12
TWO_PI_SQ = (2.0 * math.pi) ** 2


class Model(Enum):
    SPHERE4 = 'sphere4'
    BALL4 = 'ball4'


class Edge(IntEnum):
    EDGE1 = 1
    EDGE2 = 2


@dataclass(frozen=True)
class QuotientPoint:
    u1: float
    u2: float

    def __iter__(self):
        yield self.u1
        yield self.u2


def direction(phi):
    """
    (cos phi, sin phi) with the components exactly 0 and +-1 at multiples of pi/2, so
    that profiles along a coordinate line stay on it.
    """
    if not math.isfinite(phi):
        return math.cos(phi), math.sin(phi)
    k = round(phi / (math.pi / 2))
    r = phi - k * (math.pi / 2)
    c, s = math.cos(r), math.sin(r)
    for _ in range(k % 4):
        c, s = -s, c
    return c, s


def wrap_angle(x):
    """Map an angle to (-pi, pi]."""
    y = math.fmod(x + math.pi, 2.0 * math.pi)
    if y <= 0.0:
        y += 2.0 * math.pi
    return y - math.pi


class OrbitSpace(ABC):
    """
    Quotient geometry shared by the two models. Subclasses supply the radius functions
    (in torch, so autograd gives reference derivatives) together with closed forms of
    their log-gradients used on the integration hot path.
    """
    model: Model
    ambient_ricci: float
    # chart coordinate running along each edge
    along = {Edge.EDGE1: 0, Edge.EDGE2: 0}

    # ------------------------------------------------------------ geometry
    @abstractmethod
    def radii_torch(self, u):
        """
        :param u: (torch.Tensor, shape [batch, 2], float64) chart points
        :return: (torch.Tensor, shape [batch, 2]) orbit radii
        """
        pass

    @abstractmethod
    def G(self, u1):
        pass

    @abstractmethod
    def G_vec(self, u1):
        """G evaluated elementwise on an array."""
        pass

    @abstractmethod
    def dlogG(self, u1):
        pass

    @abstractmethod
    def dlog_radii(self, u1, u2):
        """Closed form ((d1 log r1, d2 log r1), (d1 log r2, d2 log r2)) at an interior point."""
        pass

    @abstractmethod
    def contains(self, u1, u2):
        pass

    @abstractmethod
    def is_singular(self, u1, u2):
        """Pole (SPHERE4) or origin (BALL4), where theta is undefined."""
        pass

    @abstractmethod
    def edge_distance(self, edge, u1, u2):
        """Distance to an edge, accurate to second order near that edge."""
        pass

    @abstractmethod
    def local_scale(self, u1, u2):
        """Distance to the pole (SPHERE4) or the origin (BALL4), to leading order."""
        pass

    @abstractmethod
    def edge_point(self, edge, u0):
        pass

    @abstractmethod
    def edge_series(self, edge, u0, delta):
        """
        Second-order expansion of the profile leaving ``edge`` orthogonally at ``u0``.

        :return: (u1, u2, phi) at arclength ``delta``
        """
        pass

    @abstractmethod
    def theta_rate(self, u1, u2, phi):
        """A function with the sign of d(theta)/dt along a unit-speed curve."""
        pass

    @abstractmethod
    def known_field(self, u1, u2, n1, n2):
        """
        The Jacobi field known in closed form, for the hypersurface normal lifted from -n:
        SPHERE4 the fifth normal component, BALL4 the support function x . normal.
        """
        pass

    @abstractmethod
    def known_field_rate(self, u1, u2, phi, dphi):
        """d/dt of known_field along a unit-speed curve with direction phi and phi' = dphi."""
        pass

    def radii(self, u1, u2):
        r = self.radii_torch(torch.tensor([[u1, u2]], dtype=torch.float64))
        return float(r[0, 0]), float(r[0, 1])

    def metric_diag(self, u1, u2=None):
        return 1.0, self.G(u1) ** 2

    def dlog_volume(self, u1, u2):
        (a1, a2), (b1, b2) = self.dlog_radii(u1, u2)
        return a1 + b1, a2 + b2

    def dlog_radii_autograd(self, points):
        """
        Reference log-gradients of both radii by torch autograd.

        :param points: (array-like, shape [batch, 2])
        :return: (np.ndarray, shape [2, batch, 2]) indexed [radius, point, chart direction]
        """
        g1 = gradients.log_gradient(lambda x: self.radii_torch(x)[:, 0], points)
        g2 = gradients.log_gradient(lambda x: self.radii_torch(x)[:, 1], points)
        return np.stack([g1, g2])

    def theta_value(self, u1, u2):
        r1, r2 = self.radii(u1, u2)
        return math.asin(min(1.0, r2 / math.hypot(r1, r2))) - math.pi / 4

    def normal_chart(self, u1, phi):
        c, s = direction(phi)
        return -s, c / self.G(u1)

    def tangent_chart(self, u1, phi):
        c, s = direction(phi)
        return c, s / self.G(u1)

    def phi_from_tangent(self, u1, tau1, tau2):
        return math.atan2(self.G(u1) * tau2, tau1)

    def dlog_volume_normal(self, u1, u2, phi):
        """d_n log V for the normal attached to direction phi."""
        d1, d2 = self.dlog_volume(u1, u2)
        c, s = direction(phi)
        return -s * d1 + c * d2 / self.G(u1)

    def edge_curvature(self, edge, u0, phi):
        """
        Profile curvature where the curve meets ``edge`` (orthogonally, direction phi).
        The profile and the collapsing circle share a principal curvature there, so
        minimality gives kappa = -(1/2) d_n log(non-collapsing radius).
        """
        return -0.5 * self.edge_dlog_other(edge, u0, phi)

    def edge_dlog_other(self, edge, u0, phi):
        """d_n log of the radius that does not collapse on ``edge``, at the edge point u0."""
        p = self.edge_point(edge, u0)
        n1, n2 = self.normal_chart(p.u1, phi)
        other = 0 if edge == Edge.EDGE1 else 1
        d = self.dlog_radii(*self._nudge(edge, p))[other]
        return n1 * d[0] + n2 * d[1]

    def _nudge(self, edge, p):
        # points exactly on an edge make the collapsed log-radius singular; only the
        # non-collapsing one is used, which is continuous, so step inside by _EPS
        u = [p.u1, p.u2]
        u[1 - self.along[edge]] += _EPS if self._edge_coord_at_zero(edge) else -_EPS
        return u[0], u[1]

    def _edge_coord_at_zero(self, edge):
        return True

    def edge_foot(self, edge, u1, u2):
        """
        Invert edge_series: the edge position u0 and offset d of a profile leaving the
        edge orthogonally through (u1, u2).
        """
        d = self.edge_distance(edge, u1, u2)
        k = self.along[edge]
        target = (u1, u2)[k]
        u0 = target
        for _ in range(3):
            pred = self.edge_series(edge, u0, d)
            u0 += target - pred[k]
        return u0, d

    def arrival_defect(self, edge, u1, u2, phi):
        """
        Signed angle between the reversed arriving direction and the direction of the
        orthogonal profile through the same point. Zero iff the curve lands orthogonally.
        """
        u0, d = self.edge_foot(edge, u1, u2)
        expected = self.edge_series(edge, u0, d)[2]
        return wrap_angle(phi + math.pi - expected)

    def check(self, p):
        u1, u2 = p
        if not (math.isfinite(u1) and math.isfinite(u2)) or not self.contains(u1, u2):
            raise DomainError(f'{(u1, u2)} lies outside the {self.model.value} chart')
        return u1, u2


class Sphere4(OrbitSpace):
    model = Model.SPHERE4
    ambient_ricci = 3.0
    along = {Edge.EDGE1: 0, Edge.EDGE2: 0}

    def radii_torch(self, u):
        c = torch.where(torch.abs(u[:, 0]).ge(math.pi / 2 - _EPS), torch.zeros_like(u[:, 0]), torch.cos(u[:, 0]))
        r1 = torch.where(torch.abs(u[:, 1] - math.pi / 2).le(_EPS), torch.zeros_like(c), c * torch.cos(u[:, 1]))
        r2 = torch.where(u[:, 1].le(_EPS), torch.zeros_like(c), c * torch.sin(u[:, 1]))
        return torch.stack([r1, r2], dim=-1)

    def radii(self, u1, u2):
        # snapped so that the orbit volume vanishes exactly on edges and at the poles
        c = 0.0 if abs(u1) >= math.pi / 2 - _EPS else math.cos(u1)
        r1 = 0.0 if abs(u2 - math.pi / 2) <= _EPS else c * math.cos(u2)
        r2 = 0.0 if u2 <= _EPS else c * math.sin(u2)
        return r1, r2

    def G(self, u1):
        return math.cos(u1)

    def G_vec(self, u1):
        return np.cos(u1)

    def dlogG(self, u1):
        return -math.tan(u1)

    def dlog_radii(self, u1, u2):
        ts = math.tan(u1)
        return (-ts, -math.tan(u2)), (-ts, 1.0 / math.tan(u2))

    def dlog_volume(self, u1, u2):
        return -2.0 * math.tan(u1), 2.0 / math.tan(2.0 * u2)

    def contains(self, u1, u2):
        h = math.pi / 2 + _EPS
        return -h <= u1 <= h and -_EPS <= u2 <= h

    def is_singular(self, u1, u2):
        return abs(abs(u1) - math.pi / 2) < _EPS

    def theta_value(self, u1, u2):
        return min(max(u2, 0.0), math.pi / 2) - math.pi / 4

    def theta_rate(self, u1, u2, phi):
        return direction(phi)[1]

    def known_field(self, u1, u2, n1, n2):
        # x5 = sin s, so only the s-component of the normal contributes
        return -n1 * np.cos(u1)

    def known_field_rate(self, u1, u2, phi, dphi):
        c, s = direction(phi)
        return c * (dphi * math.cos(u1) - s * math.sin(u1))

    def local_scale(self, u1, u2):
        return math.cos(u1)

    def edge_distance(self, edge, u1, u2):
        c = math.cos(u1)
        return u2 * c if edge == Edge.EDGE1 else (math.pi / 2 - u2) * c

    def edge_point(self, edge, u0):
        return QuotientPoint(u0, 0.0 if edge == Edge.EDGE1 else math.pi / 2)

    def _edge_coord_at_zero(self, edge):
        return edge == Edge.EDGE1

    def edge_series(self, edge, u0, delta):
        k = 1.5 * math.tan(u0)
        s = u0 - 0.5 * k * delta ** 2
        if edge == Edge.EDGE1:
            return s, delta / math.cos(u0), math.pi / 2 + k * delta
        # reflection a -> pi/2 - a sends phi -> -phi
        return s, math.pi / 2 - delta / math.cos(u0), -math.pi / 2 - k * delta


class Ball4(OrbitSpace):
    model = Model.BALL4
    ambient_ricci = 0.0
    along = {Edge.EDGE1: 0, Edge.EDGE2: 1}

    def radii_torch(self, u):
        return u.clone()

    def radii(self, u1, u2):
        return u1, u2

    def G(self, u1):
        return 1.0

    def G_vec(self, u1):
        return np.ones_like(np.asarray(u1, dtype=float))

    def dlogG(self, u1):
        return 0.0

    def dlog_radii(self, u1, u2):
        return (1.0 / u1, 0.0), (0.0, 1.0 / u2)

    def dlog_volume(self, u1, u2):
        return 1.0 / u1, 1.0 / u2

    def contains(self, u1, u2):
        return u1 >= -_EPS and u2 >= -_EPS

    def is_singular(self, u1, u2):
        return math.hypot(u1, u2) < _EPS

    def theta_value(self, u1, u2):
        return math.atan2(max(u2, 0.0), max(u1, 0.0)) - math.pi / 4

    def theta_rate(self, u1, u2, phi):
        c, s = direction(phi)
        return u1 * s - u2 * c

    def known_field(self, u1, u2, n1, n2):
        return -(u1 * n1 + u2 * n2)

    def known_field_rate(self, u1, u2, phi, dphi):
        c, s = direction(phi)
        return dphi * (u1 * c + u2 * s)

    def local_scale(self, u1, u2):
        return math.hypot(u1, u2)

    def edge_distance(self, edge, u1, u2):
        return u2 if edge == Edge.EDGE1 else u1

    def edge_point(self, edge, u0):
        return QuotientPoint(u0, 0.0) if edge == Edge.EDGE1 else QuotientPoint(0.0, u0)

    def edge_series(self, edge, u0, delta):
        k = -0.5 / u0
        along = u0 - 0.5 * k * delta ** 2
        if edge == Edge.EDGE1:
            return along, delta, math.pi / 2 + k * delta
        # reflection across the diagonal sends phi -> pi/2 - phi
        return delta, along, -k * delta


SPHERE4 = Sphere4()
BALL4 = Ball4()

orbit_spaces = {'sphere4': SPHERE4, 'ball4': BALL4}


def get_orbit_space(model):
    if isinstance(model, OrbitSpace):
        return model
    return orbit_spaces[Model(model).value]


def orbit_volume(os, p):
    """(2 pi)^2 radius1 radius2: the torus orbit volume per unit profile length."""
    u1, u2 = os.check(p)
    r1, r2 = os.radii(u1, u2)
    return TWO_PI_SQ * max(r1, 0.0) * max(r2, 0.0)


def theta(os, p):
    """Signed angular offset from the midline, in [-pi/4, pi/4]."""
    u1, u2 = os.check(p)
    if os.is_singular(u1, u2):
        raise UndefinedPointError(f'theta is undefined at {(u1, u2)} in {os.model.value}')
    return os.theta_value(u1, u2)


def metric_len(os, p, v):
    u1, u2 = p
    g11, g22 = os.metric_diag(u1, u2)
    return math.sqrt(g11 * v[0] ** 2 + g22 * v[1] ** 2)
