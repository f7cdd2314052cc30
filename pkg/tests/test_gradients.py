import numpy as np
import torch
from hypothesis import given, settings, strategies as st

from eqvidx.gradients import gradient, log_gradient


@given(st.integers(1, 10))
@settings(max_examples=50, deadline=None)
def test_gradient_of_squared_norm(n):
    x = torch.randn(n, dtype=torch.float64, requires_grad=True)
    y = (x ** 2).sum()
    assert torch.allclose(gradient(y, x), 2 * x.detach())


def test_log_gradient_of_product():
    pts = np.array([[0.5, 2.0], [3.0, 0.25]])
    g = log_gradient(lambda x: x[:, 0] * x[:, 1] ** 2, pts)
    assert g.shape == (2, 2)
    assert np.allclose(g, np.stack([1 / pts[:, 0], 2 / pts[:, 1]], axis=1))
