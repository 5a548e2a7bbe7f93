"""Small dense-network toolkit: forward/backward passes, Adam, gradient checks.

Everything runs in float64 numpy.  Keeping the whole stack in-process (no
autograd framework) is what makes bit-for-bit checkpoint/resume and the
finite-difference gradient audit possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

_ACTIVATIONS = ("relu", "tanh", "identity")


def _act_forward(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_backward(name: str, z: np.ndarray, out: np.ndarray, grad: np.ndarray) -> np.ndarray:
    if name == "relu":
        return grad * (z > 0.0)
    if name == "tanh":
        return grad * (1.0 - out * out)
    return grad


class Approximator:
    """Fully connected network with per-layer activations and cached backprop.

    forward(x, train=True) caches intermediates; backward(grad_out) then
    fills .grad_w/.grad_b and returns the gradient w.r.t. the input batch.
    """

    def __init__(
        self,
        layer_sizes: list[int],
        hidden_activation: str = "relu",
        output_activation: str = "identity",
        rng: np.random.Generator | None = None,
    ):
        if len(layer_sizes) < 2:
            raise InvalidParameterError("need at least input and output sizes")
        for act in (hidden_activation, output_activation):
            if act not in _ACTIVATIONS:
                raise InvalidParameterError(f"unknown activation {act!r}")
        rng = rng if rng is not None else np.random.default_rng()
        self.layer_sizes = list(layer_sizes)
        self.activations = [hidden_activation] * (len(layer_sizes) - 2) + [output_activation]
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))
        self.grad_w = [np.zeros_like(w) for w in self.weights]
        self.grad_b = [np.zeros_like(b) for b in self.biases]
        self._cache = None

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        pre, post = [], [x]
        out = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            z = out @ w + b
            out = _act_forward(act, z)
            if train:
                pre.append(z)
                post.append(out)
        self._cache = (pre, post) if train else None
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        """Backprop a gradient of shape (batch, out_dim); returns grad w.r.t. input."""
        if self._cache is None:
            raise InvalidParameterError("backward() requires a forward(train=True) pass")
        pre, post = self._cache
        grad = np.asarray(grad_out, dtype=np.float64)
        for layer in range(len(self.weights) - 1, -1, -1):
            grad = _act_backward(self.activations[layer], pre[layer], post[layer + 1], grad)
            self.grad_w[layer] = post[layer].T @ grad
            self.grad_b[layer] = grad.sum(axis=0)
            grad = grad @ self.weights[layer].T
        return grad

    def copy_weights_from(self, other: "Approximator"):
        for i, (w, b) in enumerate(zip(other.weights, other.biases)):
            self.weights[i] = w.copy()
            self.biases[i] = b.copy()

    def clone(self) -> "Approximator":
        dup = Approximator.__new__(Approximator)
        dup.layer_sizes = list(self.layer_sizes)
        dup.activations = list(self.activations)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        dup.grad_w = [np.zeros_like(w) for w in self.weights]
        dup.grad_b = [np.zeros_like(b) for b in self.biases]
        dup._cache = None
        return dup

    def num_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


class Adam:
    """Adaptive-moment gradient descent over one Approximator's parameters."""

    def __init__(self, net: Approximator, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.net = net
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(w) for w in net.weights] + [np.zeros_like(b) for b in net.biases]
        self.v = [np.zeros_like(w) for w in net.weights] + [np.zeros_like(b) for b in net.biases]
        self.t = 0

    def _params_grads(self):
        return (
            list(self.net.weights) + list(self.net.biases),
            list(self.net.grad_w) + list(self.net.grad_b),
        )

    def step(self):
        self.t += 1
        params, grads = self._params_grads()
        correct1 = 1.0 - self.beta1**self.t
        correct2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)


def soft_update(target: Approximator, online: Approximator, tau: float):
    """target <- tau * online + (1 - tau) * target, element-wise."""
    for tw, w in zip(target.weights, online.weights):
        tw *= 1.0 - tau
        tw += tau * w
    for tb, b in zip(target.biases, online.biases):
        tb *= 1.0 - tau
        tb += tau * b


@dataclass
class GradCheckReport:
    checked: int
    max_rel_err: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance


def grad_check(
    net: Approximator,
    inputs: np.ndarray,
    targets: np.ndarray,
    *,
    n_weights: int = 120,
    fd_step: float = 1e-5,
    tolerance: float = 1e-3,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare analytic gradients of a mean-squared-error loss to central differences.

    Samples n_weights parameter coordinates (weights and biases) and checks
    |analytic - fd| / max(|analytic|, |fd|, 1e-8) <= tolerance for each.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))

    def loss() -> float:
        out = net.forward(inputs)
        return float(np.mean((out - targets) ** 2))

    out = net.forward(inputs, train=True)
    scale = 2.0 / out.size
    net.backward(scale * (out - targets))
    analytic = list(net.grad_w) + list(net.grad_b)
    params = list(net.weights) + list(net.biases)

    total = sum(p.size for p in params)
    n = min(n_weights, total)
    picks = rng.choice(total, size=n, replace=False)
    offsets = np.cumsum([0] + [p.size for p in params])

    max_rel = 0.0
    for flat_index in picks:
        which = int(np.searchsorted(offsets, flat_index, side="right")) - 1
        local = int(flat_index - offsets[which])
        param = params[which].reshape(-1)
        saved = param[local]
        param[local] = saved + fd_step
        up = loss()
        param[local] = saved - fd_step
        down = loss()
        param[local] = saved
        fd = (up - down) / (2.0 * fd_step)
        a = float(analytic[which].reshape(-1)[local])
        rel = abs(a - fd) / max(abs(a), abs(fd), 1e-8)
        max_rel = max(max_rel, rel)
    return GradCheckReport(checked=n, max_rel_err=max_rel, tolerance=tolerance)
