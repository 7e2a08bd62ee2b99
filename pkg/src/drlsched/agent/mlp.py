"""Fully connected networks with hand-derived backpropagation.

Inputs are row batches: ``x`` has shape (batch, in). A 1-D input is treated
as a batch of one and the output is squeezed back to 1-D.
"""
import numpy as np

from ..errors import ContractViolation

SOFTMAX = "softmax"
IDENTITY = "identity"


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class Mlp:
    def __init__(self, layer_sizes, output_activation=IDENTITY, rng=None):
        if len(layer_sizes) < 2:
            raise ContractViolation("an MLP needs at least input and output sizes")
        if output_activation not in (SOFTMAX, IDENTITY):
            raise ContractViolation(f"unknown output activation {output_activation!r}")
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        self.output_activation = output_activation
        self.weights = []
        self.biases = []
        rng = rng if rng is not None else np.random.default_rng()
        for fan_in, fan_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))

    @property
    def params(self):
        """Flat list of parameter arrays, weights and biases interleaved per layer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self):
        other = Mlp.__new__(Mlp)
        other.layer_sizes = self.layer_sizes
        other.output_activation = self.output_activation
        other.weights = [w.copy() for w in self.weights]
        other.biases = [b.copy() for b in self.biases]
        return other

    def all_finite(self):
        return all(np.isfinite(p).all() for p in self.params)

    def flat(self):
        return np.concatenate([p.ravel() for p in self.params])

    def load_flat(self, vec):
        vec = np.asarray(vec, dtype=float)
        i = 0
        for p in self.params:
            n = p.size
            if i + n > vec.size:
                raise ContractViolation("flat parameter vector too short")
            p[...] = vec[i:i + n].reshape(p.shape)
            i += n
        if i != vec.size:
            raise ContractViolation("flat parameter vector too long")

    def __call__(self, x):
        return mlp_forward(self, x)[0]


def mlp_forward(net, x):
    """Return ``(y, cache)``; cache holds each layer's input and pre-activation."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    if a.shape[1] != net.layer_sizes[0]:
        raise ContractViolation(f"input width {a.shape[1]} != {net.layer_sizes[0]}")
    inputs, pre = [], []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        inputs.append(a)
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0) if i < last else z
    y = softmax(a) if net.output_activation == SOFTMAX else a
    cache = {"inputs": inputs, "pre": pre, "y": y, "squeeze": squeeze}
    return (y[0] if squeeze else y), cache


def mlp_backward(net, cache, dy, dlogits=None):
    """Backpropagate upstream gradient ``dy`` (dL/dy) through ``net``.

    ``dlogits`` is an optional extra gradient on the output pre-activation
    (before softmax), e.g. from a penalty on the logits. Returns ``(grads,
    dx)`` where ``grads`` matches ``net.params`` and ``dx`` is dL/dx.
    Parameter gradients are summed over the batch.
    """
    dy = np.asarray(dy, dtype=float)
    if cache["squeeze"]:
        dy = dy[None, :] if dy.ndim == 1 else dy
    y = cache["y"]
    if dy.shape != y.shape:
        raise ContractViolation(f"upstream gradient shape {dy.shape} != output shape {y.shape}")
    if net.output_activation == SOFTMAX:
        # softmax Jacobian-vector product: y * (dy - <dy, y>)
        dz = y * (dy - np.sum(dy * y, axis=1, keepdims=True))
    else:
        dz = dy
    if dlogits is not None:
        dz = dz + np.asarray(dlogits, dtype=float).reshape(dz.shape)
    grads = [None] * (2 * len(net.weights))
    for i in range(len(net.weights) - 1, -1, -1):
        a_in = cache["inputs"][i]
        grads[2 * i] = a_in.T @ dz
        grads[2 * i + 1] = dz.sum(axis=0)
        da = dz @ net.weights[i].T
        if i > 0:
            dz = da * (cache["pre"][i - 1] > 0.0)
    dx = da[0] if cache["squeeze"] else da
    return grads, dx
