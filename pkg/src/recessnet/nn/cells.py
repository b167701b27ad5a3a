"""Single-step cell equations and a plain dense forward pass.

These operate on one instance at a time and mirror the textbook gate
equations directly; the batched :class:`~recessnet.nn.network.Network`
is the path used for training.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import StructuralError
from .activations import Activation, activation, clip_probability, sigmoid


@dataclass
class DenseParams:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: Activation = Activation.ReLU


@dataclass
class LstmParams:
    W_f: np.ndarray
    b_f: np.ndarray
    W_i: np.ndarray
    b_i: np.ndarray
    W_C: np.ndarray
    b_C: np.ndarray
    W_o: np.ndarray
    b_o: np.ndarray

    @classmethod
    def zeros(cls, units, input_width):
        w = lambda: np.zeros((units, units + input_width))  # noqa: E731
        b = lambda: np.zeros(units)  # noqa: E731
        return cls(w(), b(), w(), b(), w(), b(), w(), b())


@dataclass
class GruParams:
    W_r: np.ndarray
    b_r: np.ndarray
    W_z: np.ndarray
    b_z: np.ndarray
    W_h: np.ndarray
    b_h: np.ndarray

    @classmethod
    def zeros(cls, units, input_width):
        w = lambda: np.zeros((units, units + input_width))  # noqa: E731
        b = lambda: np.zeros(units)  # noqa: E731
        return cls(w(), b(), w(), b(), w(), b())


def _concat(h_prev, x_t, W):
    v = np.concatenate([np.asarray(h_prev, dtype=float), np.asarray(x_t, dtype=float)])
    if W.shape[1] != v.size or W.shape[0] != len(h_prev):
        raise StructuralError(f"gate weight {W.shape} does not fit [h, x] of width {v.size}")
    return v


def lstm_cell_step(x_t, h_prev, C_prev, params):
    """One LSTM step; returns ``(h_t, C_t)``."""
    v = _concat(h_prev, x_t, params.W_f)
    f = sigmoid(params.W_f @ v + params.b_f)
    i = sigmoid(params.W_i @ v + params.b_i)
    C_tilde = np.tanh(params.W_C @ v + params.b_C)
    C_t = f * np.asarray(C_prev, dtype=float) + i * C_tilde
    o = sigmoid(params.W_o @ v + params.b_o)
    return o * np.tanh(C_t), C_t


def gru_cell_step(x_t, h_prev, params):
    """One GRU step; returns ``h_t``."""
    h_prev = np.asarray(h_prev, dtype=float)
    v = _concat(h_prev, x_t, params.W_r)
    r = sigmoid(params.W_r @ v + params.b_r)
    z = sigmoid(params.W_z @ v + params.b_z)
    h_tilde = np.tanh(params.W_h @ _concat(r * h_prev, x_t, params.W_h) + params.b_h)
    return (1.0 - z) * h_prev + z * h_tilde


def ffn_forward(x, hidden, output):
    """Probability from dense hidden layers and a one-unit sigmoid head."""
    if output.weights.shape[0] != 1 or Activation(output.activation) is not Activation.Sigmoid:
        raise StructuralError("output layer must have one sigmoid unit")
    a = np.asarray(x, dtype=float)
    for layer in list(hidden) + [output]:
        if layer.weights.shape[1] != a.shape[-1] or layer.weights.shape[0] != layer.bias.shape[0]:
            raise StructuralError(
                f"dense layer {layer.weights.shape} cannot take input of width {a.shape[-1]}"
            )
        a = activation(layer.activation, a @ layer.weights.T + layer.bias)
    return clip_probability(a[..., 0])
