"""Dense float64 layers with hand-written backward passes, Adam, and a finite-difference checker."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from forgesat import rng


def _check_same(a: np.ndarray, b: np.ndarray, what: str):
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    return a @ b


def matmul_backward(a: np.ndarray, b: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return g @ b.T, a.T @ g


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same(a, b, "add")
    return a + b


def add_backward(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return g, g


def scale(a: np.ndarray, s: float) -> np.ndarray:
    return a * s


def scale_backward(g: np.ndarray, s: float) -> np.ndarray:
    return g * s


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, g: np.ndarray) -> np.ndarray:
    # subgradient 0 at x == 0
    return g * (x > 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(y: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``y`` is the forward output."""
    return g * y * (1.0 - y)


def mse_loss(pred: np.ndarray, target: np.ndarray, mask: np.ndarray | None = None) -> tuple[float, np.ndarray]:
    """Mean squared error over all (or the masked) entries, with its gradient."""
    _check_same(pred, target, "mse_loss")
    diff = pred - target
    if mask is None:
        count = diff.size
    else:
        _check_same(pred, mask, "mse_loss mask")
        diff = np.where(mask, diff, 0.0)
        count = int(mask.sum())
    if count == 0:
        return 0.0, np.zeros_like(pred)
    return float(np.sum(diff * diff) / count), 2.0 * diff / count


def bce_logits_loss(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy on logits, via ``max(x,0) - x*y + log1p(exp(-|x|))``."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if logits.shape != labels.shape:
        raise ValueError(f"bce_logits_loss: length mismatch {logits.shape} vs {labels.shape}")
    n = logits.size
    if n == 0:
        return 0.0, np.zeros_like(logits)
    per = np.maximum(logits, 0.0) - logits * labels + np.log1p(np.exp(-np.abs(logits)))
    return float(per.sum() / n), (sigmoid(logits) - labels) / n


@dataclass
class Parameter:
    value: np.ndarray
    grad: np.ndarray = field(default=None)

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        _check_same(self.value, self.grad, "Parameter")

    def zero_grad(self):
        self.grad[...] = 0.0


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: Sequence[Parameter]) -> "AdamState":
        return cls([np.zeros_like(p.value) for p in params], [np.zeros_like(p.value) for p in params])


def adam_step(
    params: Sequence[Parameter],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Bias-corrected Adam update in place; gradients are zeroed afterwards."""
    if len(params) != len(state.m):
        raise ValueError("parameter count changed between Adam steps")
    state.t += 1
    c1 = 1.0 - beta1**state.t
    c2 = 1.0 - beta2**state.t
    for p, m, v in zip(params, state.m, state.v):
        if m.shape != p.value.shape:
            raise ValueError(f"parameter shape drifted: {m.shape} -> {p.value.shape}")
        m *= beta1
        m += (1.0 - beta1) * p.grad
        v *= beta2
        v += (1.0 - beta2) * p.grad * p.grad
        p.value -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
        p.zero_grad()


def numeric_grad(loss_fn: Callable[[], float], param: Parameter, eps: float = 1e-5, idx=None) -> np.ndarray:
    """Central differences of ``loss_fn`` at the flat coordinates ``idx`` (default: all)."""
    flat = param.value.reshape(-1)
    idx = np.arange(flat.size) if idx is None else idx
    out = np.empty(len(idx))
    for j, i in enumerate(idx):
        old = flat[i]
        flat[i] = old + eps
        up = loss_fn()
        flat[i] = old - eps
        down = loss_fn()
        flat[i] = old
        out[j] = (up - down) / (2 * eps)
    return out


def finite_diff_check(
    loss_fn: Callable[[], float],
    params: Sequence[Parameter],
    eps: float = 1e-5,
    max_coords: int | None = None,
    seed: int = 0,
    floor: float = 1e-7,
) -> float:
    """Largest relative error between ``p.grad`` and central differences of ``loss_fn``.

    ``loss_fn`` reads the current parameter values.  Per coordinate the error
    is ``|analytic - numeric| / max(|analytic|, |numeric|, floor)``.  With
    ``max_coords`` each parameter is probed at a seeded random subset.
    """
    worst = 0.0
    gen = rng.stream(seed, "finite-diff")
    for p in params:
        size = p.value.size
        idx = np.arange(size)
        if max_coords is not None and size > max_coords:
            idx = np.sort(gen.choice(size, size=max_coords, replace=False))
        num = numeric_grad(loss_fn, p, eps, idx)
        ana = p.grad.reshape(-1)[idx]
        err = np.abs(ana - num) / np.maximum(np.maximum(np.abs(ana), np.abs(num)), floor)
        worst = max(worst, float(err.max(initial=0.0)))
    return worst


def group_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Norm-wise relative error ``|a - n| / max(|a|, |n|)`` of one parameter group."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    return 0.0 if scale == 0 else float(np.linalg.norm(analytic - numeric) / scale)


def glorot(gen: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return gen.uniform(-lim, lim, size=(fan_in, fan_out))
