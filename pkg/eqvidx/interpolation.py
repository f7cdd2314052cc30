from abc import ABC, abstractmethod

import numpy as np
from scipy.interpolate import CubicSpline


class Interpolation(ABC):
    def __init__(self):
        super().__init__()

    @abstractmethod
    def interpolation(self, tq):
        pass

    def __call__(self, tq):
        return self.interpolation(tq)


class SplineInterp(Interpolation):

    def __init__(self, t, u, min_gap=1e-12):
        """
        Cubic spline through arclength samples of a profile quantity

        :param t: (np.ndarray, shape [N]) ascending sample locations
        :param u: (np.ndarray, shape [N] or [N, k]) sample values
        :param min_gap: (float) samples closer than this to their predecessor are dropped
        """
        super().__init__()
        t = np.asarray(t, dtype=float)
        u = np.asarray(u, dtype=float)
        assert t.ndim == 1, 't should be a 1D array'
        assert u.shape[0] == t.shape[0], 'Mismatched number of samples in t and u'
        assert np.all(np.diff(t) >= 0), 't should be ascending order'
        keep = np.concatenate([[True], np.diff(t) > min_gap])
        self.t, self.u = t[keep], u[keep]
        self.spline = CubicSpline(self.t, self.u, axis=0, bc_type='not-a-knot')

    @property
    def domain(self):
        return self.t[0], self.t[-1]

    def interpolation(self, tq):
        return self.spline(tq)

    def derivative(self, order=1):
        return self.spline.derivative(order)

