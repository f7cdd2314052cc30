"""
Adaptive Runge-Kutta integration with dense output and event location.

Steps are taken with a scipy ``OdeSolver``; after every step each event function is
evaluated at the step end, sign changes are bracketed on the step and the root is
refined with Brent's method on the dense interpolant. Samples on a uniform grid of
the independent variable are read off the same interpolant.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.integrate import DOP853, RK45, Radau, LSODA
from scipy.optimize import brentq

from eqvidx.errors import BudgetExceededError, SingularityError


@dataclass
class Event:
    """
    :param name: (str) label used in IntegrationResult.events
    :param fn: callable g(t, x); the event is the zero set of g
    :param terminal: (int) stop at the n-th accepted root; 0 records roots without stopping
    :param direction: (int) +1 only upward crossings, -1 only downward, 0 both
    :param accept: optional predicate accept(t, x) filtering located roots
    """
    name: str
    fn: Callable
    terminal: int = 0
    direction: int = 0
    accept: Optional[Callable] = None

    def crossed(self, g0, g1):
        up = g0 < 0.0 <= g1
        down = g0 > 0.0 >= g1
        if self.direction > 0:
            return up
        if self.direction < 0:
            return down
        return up or down


@dataclass
class IntegrationResult:
    ts: np.ndarray = None
    xs: np.ndarray = None
    events: List[Tuple[str, float, np.ndarray]] = field(default_factory=list)
    status: str = 'bound'
    t_end: float = 0.0
    x_end: Optional[np.ndarray] = None
    nsteps: int = 0

    def event_times(self, name):
        return [t for n, t, _ in self.events if n == name]

    def event_states(self, name):
        return [x for n, _, x in self.events if n == name]

    def count(self, name):
        return sum(1 for n, _, _ in self.events if n == name)


class EventIntegrator:

    def __init__(self, method='DOP853', rtol=1e-10, atol=1e-12, max_steps=200000,
                 event_xtol=1e-14):
        """
        :param method: (str) key of the ``integrators`` registry
        :param rtol: (float) relative local error tolerance
        :param atol: (float) absolute local error tolerance
        :param max_steps: (int) step budget; exceeding it raises BudgetExceededError
        :param event_xtol: (float) root tolerance for event location
        """
        assert method in integrators, f'Unknown integrator {method}, choose from {list(integrators)}'
        self.method = method
        self.rtol, self.atol = rtol, atol
        self.max_steps = max_steps
        self.event_xtol = event_xtol

    def _solver(self, fun, t0, x0, t_bound, first_step):
        kwargs = dict(rtol=self.rtol, atol=self.atol)
        if first_step is not None:
            kwargs['first_step'] = first_step
        return integrators[self.method](fun, t0, x0, t_bound, **kwargs)

    def _locate(self, ev, sol, t_old, t_new):
        g = lambda s: ev.fn(s, sol(s))
        try:
            return brentq(g, t_old, t_new, xtol=self.event_xtol)
        except ValueError:
            # sign change lost to roundoff in the interpolant at an end of the step
            return t_old if abs(g(t_old)) <= abs(g(t_new)) else t_new

    def integrate(self, fun, t0, x0, t_bound, events=(), sample_step=None, first_step=None):
        """
        :param fun: callable f(t, x) -> dx/dt
        :param t0: (float) initial value of the independent variable
        :param x0: (array-like) initial state
        :param t_bound: (float) integration stops here at the latest
        :param events: (list of Event)
        :param sample_step: (float or None) spacing of the returned samples; None keeps
                            only the initial and final states
        :param first_step: (float or None) initial step size
        :return: IntegrationResult
        """
        x0 = np.asarray(x0, dtype=float)
        solver = self._solver(_guarded(fun), t0, x0, t_bound, first_step)
        g_prev = [ev.fn(t0, x0) for ev in events]
        counts = [0 for _ in events]
        ts, xs = [t0], [x0.copy()]
        next_sample = t0 + sample_step if sample_step else np.inf
        result = IntegrationResult()
        t_end, x_end = t0, x0
        while solver.status == 'running':
            message = solver.step()
            if solver.status == 'failed':
                raise SingularityError(f'{self.method} failed at t={solver.t:.6g}: {message}')
            result.nsteps += 1
            if result.nsteps > self.max_steps:
                raise BudgetExceededError(f'step budget of {self.max_steps} exhausted at t={solver.t:.6g}')
            t_old, t_new = solver.t_old, solver.t
            g_new = [ev.fn(t_new, solver.y) for ev in events]
            crossed = [i for i, ev in enumerate(events) if ev.crossed(g_prev[i], g_new[i])]
            sol = solver.dense_output() if crossed or next_sample <= t_new else None
            found = sorted((self._locate(events[i], sol, t_old, t_new), i) for i in crossed)
            stop = None
            for root, i in found:
                ev, x = events[i], sol(root)
                if ev.accept is not None and not ev.accept(root, x):
                    continue
                result.events.append((ev.name, root, x))
                counts[i] += 1
                if ev.terminal and counts[i] >= ev.terminal:
                    stop = (root, ev.name, x)
                    break
            t_last = stop[0] if stop else t_new
            while next_sample <= t_last:
                ts.append(next_sample)
                xs.append(sol(next_sample))
                next_sample += sample_step
            if stop is not None:
                t_end, result.status, x_end = stop
                break
            t_end, x_end = t_new, solver.y.copy()
            g_prev = g_new
        if ts[-1] < t_end:
            ts.append(t_end)
            xs.append(np.asarray(x_end, dtype=float))
        result.ts, result.xs = np.array(ts), np.array(xs)
        result.t_end, result.x_end = t_end, np.asarray(x_end, dtype=float)
        return result


def _guarded(fun):
    def rhs(t, x):
        try:
            dx = fun(t, x)
        except (ZeroDivisionError, ValueError, OverflowError) as e:
            raise SingularityError(f'right-hand side undefined at t={t:.6g}: {e}')
        return dx
    return rhs


integrators = {'DOP853': DOP853,
               'RK45': RK45,
               'Radau': Radau,
               'LSODA': LSODA}
