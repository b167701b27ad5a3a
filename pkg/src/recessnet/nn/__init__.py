"""Neural network core: activations, cells, dropout, batched networks."""

from . import kernels
from .activations import Activation, activation, sigmoid
from .cells import DenseParams, GruParams, LstmParams, ffn_forward, gru_cell_step, lstm_cell_step
from .dropout import apply_dropout
from .network import ForwardCache, Network, sequence_forward
from .serialize import load_network, network_bytes, network_from_bytes, save_network

__all__ = [
    "Activation",
    "DenseParams",
    "ForwardCache",
    "GruParams",
    "LstmParams",
    "Network",
    "activation",
    "apply_dropout",
    "ffn_forward",
    "gru_cell_step",
    "kernels",
    "load_network",
    "lstm_cell_step",
    "network_bytes",
    "network_from_bytes",
    "save_network",
    "sequence_forward",
    "sigmoid",
]
