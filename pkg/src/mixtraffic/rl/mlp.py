"""Small fully connected networks with hand-written backprop."""
from __future__ import annotations

from typing import List, Sequence

import numpy as np


class Mlp:
    """Feed-forward network with ReLU hidden layers.

    Parameters
    ----------
    sizes : sequence of int
        layer widths including input and output, e.g. ``(4, 256, 256, 1)``
    out_activation : {"identity", "tanh"}
    rng : numpy.random.Generator
        initialisation stream
    final_scale : float
        half-width of the uniform init of the last layer
    """

    def __init__(self, sizes: Sequence[int], out_activation: str = "identity",
                 rng: np.random.Generator = None, final_scale: float = 3e-3):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        if out_activation not in ("identity", "tanh"):
            raise ValueError(f"unknown activation {out_activation!r}")
        rng = np.random.default_rng(0) if rng is None else rng
        self.sizes = tuple(int(s) for s in sizes)
        self.out_activation = out_activation
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        n_layers = len(self.sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            bound = final_scale if i == n_layers - 1 else 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def params(self) -> List[np.ndarray]:
        return self.weights + self.biases

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)

    def copy(self) -> "Mlp":
        new = Mlp.__new__(Mlp)
        new.sizes = self.sizes
        new.out_activation = self.out_activation
        new.weights = [w.copy() for w in self.weights]
        new.biases = [b.copy() for b in self.biases]
        return new

    def forward(self, x: np.ndarray, keep: bool = False):
        """Evaluate the network on a batch ``x`` of shape ``(n, in)``.

        With ``keep=True`` also returns the activations needed by
        :meth:`backward`.
        """
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            elif self.out_activation == "tanh":
                h = np.tanh(h)
            acts.append(h)
        return (h, acts) if keep else h

    def backward(self, acts: List[np.ndarray], grad_out: np.ndarray):
        """Backpropagate ``dL/d(output)``.

        Returns ``(grads, grad_input)`` with ``grads`` ordered like
        :attr:`params` (all weights, then all biases).
        """
        g = grad_out
        if self.out_activation == "tanh":
            g = g * (1.0 - acts[-1] ** 2)
        n_layers = len(self.weights)
        gw = [None] * n_layers
        gb = [None] * n_layers
        for i in range(n_layers - 1, -1, -1):
            gw[i] = acts[i].T @ g
            gb[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (acts[i] > 0)
        return gw + gb, g

    def soft_update(self, source: "Mlp", tau: float) -> None:
        """Polyak step ``self <- tau*source + (1-tau)*self``."""
        for p, q in zip(self.params, source.params):
            p *= 1.0 - tau
            p += tau * q

    def state_dict(self) -> dict:
        d = {f"w{i}": w for i, w in enumerate(self.weights)}
        d.update({f"b{i}": b for i, b in enumerate(self.biases)})
        return d

    @classmethod
    def from_state(cls, sizes, out_activation, state: dict) -> "Mlp":
        net = cls.__new__(cls)
        net.sizes = tuple(int(s) for s in sizes)
        net.out_activation = out_activation
        n = len(net.sizes) - 1
        net.weights = [np.array(state[f"w{i}"], dtype=float) for i in range(n)]
        net.biases = [np.array(state[f"b{i}"], dtype=float) for i in range(n)]
        return net


class Adam:
    """Adam optimiser over a list of arrays updated in place."""

    def __init__(self, params: List[np.ndarray], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: List[np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
