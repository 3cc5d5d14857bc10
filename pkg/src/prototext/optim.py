"""Adam optimizer and the plateau-based learning-rate schedule."""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError


class AdamState:
    """First/second moment accumulators, one pair per named parameter."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam step, in place.

    Weight decay is added to the gradient (wd * param) before the moment
    updates. Parameters absent from `grads` are left untouched and their
    moments idle.
    """
    state.t += 1
    for name, grad in grads.items():
        param = params[name]
        if grad.shape != param.shape:
            raise ShapeMismatchError(
                f"{name}: gradient shape {grad.shape} != parameter shape {param.shape}"
            )
        g = grad + weight_decay * param
        if name not in state.m:
            state.m[name] = np.zeros_like(param)
            state.v[name] = np.zeros_like(param)
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[name] / (1.0 - state.beta1 ** state.t)
        v_hat = state.v[name] / (1.0 - state.beta2 ** state.t)
        param -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params, state


def lr_schedule(val_losses: list[float], current_lr: float, patience: int, factor: float) -> float:
    """Halve-on-plateau: at each multiple of `patience` completed epochs,
    decay unless the best validation loss of the last window improved on
    the best before the window (first epoch's value when the window covers
    the whole history)."""
    e = len(val_losses)
    if e == 0 or e % patience != 0:
        return current_lr
    window = val_losses[e - patience:]
    before = val_losses[: e - patience]
    baseline = min(before) if before else val_losses[0]
    if min(window) < baseline:
        return current_lr
    return current_lr * factor
