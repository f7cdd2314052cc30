import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eqvidx.errors import BudgetExceededError, SingularityError
from eqvidx.integrators import Event, EventIntegrator, integrators

methods = list(integrators)


def oscillator(t, x):
    return np.array([x[1], -x[0]])


@given(st.sampled_from(methods))
@settings(max_examples=8, deadline=None)
def test_event_roots_of_oscillator(method):
    res = EventIntegrator(method).integrate(oscillator, 0.0, [1.0, 0.0], 5.0,
                                            events=[Event('zero', lambda t, x: x[0])])
    assert res.status == 'bound'
    assert res.t_end == pytest.approx(5.0)
    assert np.allclose(res.event_times('zero'), [math.pi / 2, 3 * math.pi / 2], atol=1e-6)
    for x in res.event_states('zero'):
        assert abs(x[0]) < 1e-6


def test_terminal_direction_and_accept():
    integ = EventIntegrator()
    up = Event('up', lambda t, x: x[0], terminal=1, direction=1)
    res = integ.integrate(oscillator, 0.0, [1.0, 0.0], 10.0, events=[up])
    assert res.status == 'up'
    assert res.t_end == pytest.approx(3 * math.pi / 2, abs=1e-8)
    assert res.count('up') == 1

    late = Event('late', lambda t, x: x[0], terminal=1, accept=lambda t, x: t > 2.0)
    res = integ.integrate(oscillator, 0.0, [1.0, 0.0], 10.0, events=[late])
    assert res.event_times('late') == pytest.approx([3 * math.pi / 2], abs=1e-8)


def test_uniform_samples_follow_solution():
    res = EventIntegrator().integrate(oscillator, 0.0, [1.0, 0.0], 1.0, sample_step=0.1)
    assert res.ts[0] == 0.0 and res.ts[-1] == pytest.approx(1.0)
    assert np.all(np.diff(res.ts) <= 0.1 + 1e-12)
    assert np.allclose(res.xs[:, 0], np.cos(res.ts), atol=1e-9)
    assert np.allclose(res.xs[:, 1], -np.sin(res.ts), atol=1e-9)


def test_step_budget():
    with pytest.raises(BudgetExceededError):
        EventIntegrator(max_steps=5).integrate(oscillator, 0.0, [1.0, 0.0], 1000.0)


def test_singular_rhs():
    with pytest.raises(SingularityError):
        EventIntegrator().integrate(lambda t, x: np.array([1.0 / 0.0]), 0.0, [1.0], 1.0)


def test_unknown_method():
    with pytest.raises(AssertionError):
        EventIntegrator('Euler')
