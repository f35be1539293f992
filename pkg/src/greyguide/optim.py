"""Adam optimizer over named parameter tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)  # first-moment accumulators
    v: dict = field(default_factory=dict)  # second-moment accumulators


def adam_step(params: dict, grads: dict, state: AdamState) -> AdamState:
    """One bias-corrected Adam update, applied to params in place."""
    state.step += 1
    bc1 = 1.0 - state.beta1**state.step
    bc2 = 1.0 - state.beta2**state.step
    for name, tensor in params.items():
        g = grads[name]
        if g.shape != tensor.data.shape:
            raise ValueError(
                f"gradient shape {g.shape} != parameter shape {tensor.data.shape} ({name})"
            )
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        tensor.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return state


class Adam:
    """Convenience wrapper reading gradients off the parameter tensors."""

    def __init__(self, params: dict, lr=1e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self):
        for tensor in self.params.values():
            tensor.zero_grad()

    def step(self, grads: dict | None = None):
        if grads is None:
            grads = {
                name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                for name, t in self.params.items()
            }
        adam_step(self.params, grads, self.state)
