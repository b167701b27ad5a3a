import enum

import numpy as np


class Activation(enum.Enum):
    ReLU = "relu"
    Sigmoid = "sigmoid"
    Tanh = "tanh"


def sigmoid(x):
    """Logistic function without overflow for large ``|x|``."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def relu(x):
    return np.maximum(np.asarray(x, dtype=float), 0.0)


def activation(kind, x):
    kind = Activation(kind) if not isinstance(kind, Activation) else kind
    if kind is Activation.Sigmoid:
        return sigmoid(x)
    if kind is Activation.Tanh:
        return np.tanh(np.asarray(x, dtype=float))
    return relu(x)


def activation_grad(kind, y):
    """Derivative expressed through the activation output ``y``."""
    kind = Activation(kind) if not isinstance(kind, Activation) else kind
    if kind is Activation.Sigmoid:
        return y * (1.0 - y)
    if kind is Activation.Tanh:
        return 1.0 - y * y
    return (y > 0).astype(float)


_P_LO = np.finfo(float).tiny
_P_HI = 1.0 - np.finfo(float).epsneg


def clip_probability(p):
    """Keep sigmoid outputs strictly inside (0, 1)."""
    return np.clip(p, _P_LO, _P_HI)
