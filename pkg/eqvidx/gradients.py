"""
Support functions for differentiating the orbit-space geometry with torch autograd.

The closed-form derivatives used inside the profile ODE are checked against these.
"""

import numpy as np
import torch


def gradient(y, x, grad_outputs=None, create_graph=False):
    """
    Compute gradients dy/dx

    :param y: (torch.Tensor) outputs
    :param x: (torch.Tensor) inputs with requires_grad=True
    :param grad_outputs: (torch.Tensor) vector in the vector-Jacobian product, defaults to ones
    :param create_graph: (bool) keep the graph for higher derivatives
    :return: (torch.Tensor) same shape as x
    """
    if grad_outputs is None:
        grad_outputs = torch.ones_like(y)
    grad = torch.autograd.grad(y, [x], grad_outputs=grad_outputs,
                               create_graph=create_graph)[0]
    return grad


def log_gradient(fn, points):
    """
    Batched chart gradient of log(fn) at a set of chart points.

    :param fn: callable mapping a [batch, 2] float64 tensor to a [batch] tensor of positive values
    :param points: (array-like, shape [batch, 2]) chart coordinates
    :return: (np.ndarray, shape [batch, 2]) rows d/du1 log fn, d/du2 log fn
    """
    x = torch.as_tensor(np.asarray(points, dtype=np.float64)).clone().requires_grad_(True)
    y = torch.log(fn(x))
    return gradient(y, x).detach().numpy()
