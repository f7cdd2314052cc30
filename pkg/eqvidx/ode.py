"""
Right-hand sides of the reduced minimal-hypersurface equation.

An O(2)xO(2)-invariant hypersurface is minimal iff its profile is a geodesic of V^2 g,
V the orbit volume. For a unit-speed profile with direction angle phi this reads

    kappa_g = d_n log V,    kappa_g = phi' + (G'/G) sin phi,

with n the +pi/2 rotation of the tangent. The profile curvature reported downstream is
kappa = -kappa_g, the sign for which kappa + h1 + h2 = 0 with h_i = d_n log radius_i.

Both systems step in a variable conformal to the chart near the pole or the origin, so
that a fixed step resolves the profile at every distance from it.
"""

import math
from abc import ABC, abstractmethod

import numpy as np

from eqvidx.orbit_models import BALL4, direction


class ProfileODE(ABC):
    """
    Class for defining the RHS of a profile system together with the maps from its
    state to chart quantities, so that events and samples can be read off uniformly.
    The last state component is always the quotient arclength.
    """
    nx: int

    def __init__(self, os):
        self.os = os

    @abstractmethod
    def ode_equations(self, t, x):
        pass

    def __call__(self, t, x):
        return self.ode_equations(t, x)

    @abstractmethod
    def chart_state(self, x):
        """
        :return: (u1, u2, phi)
        """
        pass

    @abstractmethod
    def dphi(self, x):
        """Derivative of the chart direction angle with respect to quotient arclength."""
        pass

    @staticmethod
    @abstractmethod
    def from_chart(t, u1, u2, phi):
        """State vector at quotient arclength t, chart point (u1, u2) and direction phi."""
        pass

    def kappa(self, x):
        u1, _, phi = self.chart_state(x)
        return -(self.dphi(x) + self.os.dlogG(u1) * direction(phi)[1])

    def theta(self, x):
        u1, u2, _ = self.chart_state(x)
        return self.os.theta_value(u1, u2)

    def theta_rate(self, x):
        u1, u2, phi = self.chart_state(x)
        return self.os.theta_rate(u1, u2, phi)

    def field_rate(self, x):
        u1, u2, phi = self.chart_state(x)
        return self.os.known_field_rate(u1, u2, phi, self.dphi(x))

    def edge_distance(self, edge, x):
        u1, u2, _ = self.chart_state(x)
        return self.os.edge_distance(edge, u1, u2)

    def relative_edge_distance(self, edge, x):
        """Edge distance in units of the distance to the pole or origin."""
        u1, u2, _ = self.chart_state(x)
        return self.os.edge_distance(edge, u1, u2) / self.os.local_scale(u1, u2)

    def arclength(self, s, x):
        return x[-1]

    def sample(self, s, x):
        """
        :return: (t, u1, u2, tau1, tau2, kappa) with the tangent in chart components
        """
        u1, u2, phi = self.chart_state(x)
        tau1, tau2 = self.os.tangent_chart(u1, phi)
        return self.arclength(s, x), u1, u2, tau1, tau2, self.kappa(x)


class ChartGeodesic(ProfileODE):
    """
    State x = (u1, u2, phi, t) in the chart. The independent variable is arclength of
    g / G^2 = du1^2 / G^2 + du2^2, so dt = G dtau; on SPHERE4 it is the Mercator
    coordinate, logarithmic in the distance to the pole.
    """
    nx = 4

    def ode_equations(self, tau, x):
        u1, u2, phi = x[0], x[1], x[2]
        g = self.os.G(u1)
        c, s = direction(phi)
        return np.array([g * c, s, g * self._dphi(u1, u2, phi), g])

    def _dphi(self, u1, u2, phi):
        return self.os.dlog_volume_normal(u1, u2, phi) - self.os.dlogG(u1) * direction(phi)[1]

    def chart_state(self, x):
        return x[0], x[1], x[2]

    def dphi(self, x):
        return self._dphi(x[0], x[1], x[2])

    @staticmethod
    def from_chart(t, u1, u2, phi):
        return np.array([u1, u2, phi, t])


class ConeGeodesic(ProfileODE):
    """
    BALL4 profile in log-polar variables x = (sigma, alpha, psi, t):
    sigma = log|x|, alpha the polar angle, psi the direction against the radial ray and
    t the quotient arclength. The independent variable is arclength of the flat metric
    d sigma^2 + d alpha^2, in which V^2 g is conformal to e^{6 sigma} sin^2(2 alpha) times
    the flat metric, so the system does not depend on sigma and steps stay uniform as
    the radius grows geometrically.
    """
    nx = 4

    def __init__(self, os=BALL4):
        super().__init__(os)

    def ode_equations(self, tau, x):
        sigma, alpha, psi = x[0], x[1], x[2]
        c, s = direction(psi)
        return np.array([c, s, self._dpsi(alpha, psi), math.exp(sigma)])

    @staticmethod
    def _dpsi(alpha, psi):
        c, s = direction(psi)
        return -3.0 * s + 2.0 * c / math.tan(2.0 * alpha)

    def chart_state(self, x):
        r = math.exp(x[0])
        return r * math.cos(x[1]), r * math.sin(x[1]), x[2] + x[1]

    def dphi(self, x):
        return (self._dpsi(x[1], x[2]) + direction(x[2])[1]) * math.exp(-x[0])

    def theta(self, x):
        return x[1] - math.pi / 4

    def theta_rate(self, x):
        return direction(x[2])[1]

    def relative_edge_distance(self, edge, x):
        return math.sin(x[1]) if int(edge) == 1 else math.cos(x[1])

    @staticmethod
    def from_chart(t, u1, u2, phi):
        alpha = math.atan2(u2, u1)
        return np.array([math.log(math.hypot(u1, u2)), alpha, phi - alpha, t])


profile_systems = {'chart': ChartGeodesic,
                   'cone': ConeGeodesic}
