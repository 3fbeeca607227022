"""A small dense network with hand-written backprop, float64 throughout."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Layer", "DenseNet", "forward", "backward", "mse_loss", "init_net", "ACTIVATIONS"]


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z, a):
    return (z > 0).astype(z.dtype)


def _tanh_grad(z, a):
    return 1.0 - a * a


def _linear_grad(z, a):
    return np.ones_like(z)


ACTIVATIONS = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "linear": (lambda z: z, _linear_grad),
}


@dataclass
class Layer:
    weight: np.ndarray  # d1 x d2
    bias: np.ndarray  # d2
    activation: str = "linear"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ValueError(f"bias {self.bias.shape} does not match weight {self.weight.shape}")

    def copy(self) -> "Layer":
        return Layer(self.weight.copy(), self.bias.copy(), self.activation)


@dataclass
class DenseNet:
    layers: list[Layer] = field(default_factory=list)

    def __post_init__(self):
        for i in range(1, len(self.layers)):
            if self.layers[i - 1].weight.shape[1] != self.layers[i].weight.shape[0]:
                raise ValueError(f"layer {i} input does not chain with layer {i - 1} output")

    @property
    def d_in(self) -> int:
        return self.layers[0].weight.shape[0]

    def copy(self) -> "DenseNet":
        return DenseNet([layer.copy() for layer in self.layers])

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return forward(self, x)[0]


def init_net(sizes: list[int], activation: str, rng: np.random.Generator) -> DenseNet:
    """Glorot-uniform weights, zero biases; the last layer is linear."""
    layers = []
    for i, (d1, d2) in enumerate(zip(sizes[:-1], sizes[1:])):
        lim = np.sqrt(6.0 / (d1 + d2))
        act = "linear" if i == len(sizes) - 2 else activation
        layers.append(Layer(rng.uniform(-lim, lim, (d1, d2)), np.zeros(d2), act))
    return DenseNet(layers)


def forward(net: DenseNet, batch) -> tuple[np.ndarray, list[np.ndarray]]:
    """Return ``(outputs, inputs)`` where ``inputs[l]`` is what layer ``l`` multiplies."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.d_in:
        raise ValueError(f"batch shape {x.shape} does not match d_in={net.d_in}")
    inputs = []
    for layer in net.layers:
        inputs.append(x)
        x = ACTIVATIONS[layer.activation][0](x @ layer.weight + layer.bias)
    return x, inputs


def mse_loss(outputs: np.ndarray, targets: np.ndarray) -> float:
    """Squared error summed over features, averaged over samples."""
    diff = outputs - targets
    return float(np.einsum("ij,ij->", diff, diff) / len(diff))


def backward(net: DenseNet, batch, targets) -> tuple[list[tuple[np.ndarray, np.ndarray]], float]:
    """Exact gradients of :func:`mse_loss` for every ``(weight, bias)`` pair.

    Returns ``(grads, loss)`` with ``grads[l] = (dW_l, db_l)``.
    """
    x = np.asarray(batch, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    pre, post, inputs = [], [], []
    for layer in net.layers:
        if x.shape[1] != layer.weight.shape[0]:
            raise ValueError(f"batch shape {x.shape} does not match layer input {layer.weight.shape[0]}")
        inputs.append(x)
        z = x @ layer.weight + layer.bias
        x = ACTIVATIONS[layer.activation][0](z)
        pre.append(z)
        post.append(x)
    if y.shape != x.shape:
        raise ValueError(f"targets {y.shape} do not match outputs {x.shape}")

    n = len(x)
    delta = 2.0 * (x - y) / n
    loss = float(np.einsum("ij,ij->", x - y, x - y) / n)
    grads = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        delta = delta * ACTIVATIONS[layer.activation][1](pre[i], post[i])
        grads[i] = (inputs[i].T @ delta, delta.sum(axis=0))
        if i:
            delta = delta @ layer.weight.T
    return grads, loss
