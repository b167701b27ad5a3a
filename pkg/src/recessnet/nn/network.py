"""Batched FFN / stacked LSTM / stacked GRU classifiers with exact gradients."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import StructuralError
from . import kernels
from .activations import clip_probability, sigmoid
from .dropout import check_rate, dropout_mask

KINDS = ("ffn", "lstm", "gru")
GATES = {"lstm": ("f", "i", "C", "o"), "gru": ("r", "z", "h")}


def glorot_uniform(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


@dataclass
class ForwardCache:
    """Everything the backward pass needs, tied to one parameter version."""

    kind: str
    version: int
    prob: np.ndarray
    logit: np.ndarray
    layers: list = field(default_factory=list)
    top: np.ndarray = None
    x: np.ndarray = None


class Network:
    """A binary classifier with sigmoid output.

    ``kind`` is ``"ffn"`` (ReLU hidden layers over the flattened window) or
    ``"lstm"``/``"gru"`` (``layers`` stacked recurrent layers unrolled over
    the 12 timesteps, sigmoid dense head on the last hidden state).
    Inputs are ``(batch, features, timesteps)``; FFNs also accept
    ``(batch, features * timesteps)``.
    """

    def __init__(self, kind, n_features, units, layers=1, dropout=0.0,
                 recurrent_dropout=0.0, lookback=12, seed=0, params=None):
        if kind not in KINDS:
            raise StructuralError(f"unknown network kind {kind!r}")
        if layers not in (1, 2):
            raise StructuralError(f"layers must be 1 or 2, got {layers}")
        check_rate(dropout)
        check_rate(recurrent_dropout)
        self.kind = kind
        self.n_features = int(n_features)
        self.units = int(units)
        self.layers = int(layers)
        self.dropout = float(dropout)
        self.recurrent_dropout = float(recurrent_dropout)
        self.lookback = int(lookback)
        self.seed = seed
        self.version = 0
        if params is None:
            params = self.init_params(np.random.default_rng(seed))
        self.params = {k: np.array(v, dtype=float) for k, v in params.items()}
        self._check_shapes()

    # -- parameters -------------------------------------------------------

    def shapes(self):
        U = self.units
        out = {}
        if self.kind == "ffn":
            width = self.n_features * self.lookback
            for l in range(self.layers):
                out[f"h{l}.W"] = (U, width)
                out[f"h{l}.b"] = (U,)
                width = U
        else:
            width = self.n_features
            for l in range(self.layers):
                for g in GATES[self.kind]:
                    out[f"l{l}.W_{g}"] = (U, U + width)
                    out[f"l{l}.b_{g}"] = (U,)
                width = U
        out["out.W"] = (1, U)
        out["out.b"] = (1,)
        return out

    def init_params(self, rng):
        params = {}
        for key, shape in self.shapes().items():
            if len(shape) == 2:
                params[key] = glorot_uniform(rng, *shape)
            elif self.kind == "lstm" and key.endswith(".b_f"):
                params[key] = np.ones(shape)
            else:
                params[key] = np.zeros(shape)
        return params

    def _check_shapes(self):
        want = self.shapes()
        if set(want) != set(self.params):
            raise StructuralError(f"parameter keys {sorted(self.params)} != {sorted(want)}")
        for k, s in want.items():
            if self.params[k].shape != s:
                raise StructuralError(f"{k}: shape {self.params[k].shape}, expected {s}")
            if not np.all(np.isfinite(self.params[k])):
                raise StructuralError(f"{k}: non-finite entries")

    @property
    def weight_keys(self):
        """Keys subject to L2 weight decay (biases excluded)."""
        return [k for k in self.params if ".W" in k]

    def n_params(self):
        return int(sum(v.size for v in self.params.values()))

    def touch(self):
        """Mark parameters as changed, invalidating earlier caches."""
        self.version += 1

    def set_params(self, params):
        self.params = {k: np.array(v, dtype=float) for k, v in params.items()}
        self._check_shapes()
        self.touch()

    def copy_params(self):
        return {k: v.copy() for k, v in self.params.items()}

    def config(self):
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "units": self.units,
            "layers": self.layers,
            "dropout": self.dropout,
            "recurrent_dropout": self.recurrent_dropout,
            "lookback": self.lookback,
            "seed": self.seed,
        }

    # -- forward ----------------------------------------------------------

    def _as_input(self, x):
        x = np.asarray(x, dtype=float)
        F, L = self.n_features, self.lookback
        if self.kind == "ffn":
            if x.ndim == 3 and x.shape[1:] == (F, L):
                return x.reshape(len(x), F * L)
            if x.ndim == 2 and x.shape[1] == F * L:
                return x
        elif x.ndim == 3 and x.shape[1:] == (F, L):
            return np.ascontiguousarray(x.transpose(2, 0, 1))
        raise StructuralError(f"{self.kind} expects (batch, {F}, {L}) input, got {x.shape}")

    def forward(self, x, training=False, rng=None):
        """Probabilities and cache; dropout is active only when ``training``."""
        xin = self._as_input(x)
        if training and rng is None:
            rng = np.random.default_rng()
        if self.kind == "ffn":
            return self._ffn_forward(xin, training, rng)
        return self._rnn_forward(xin, training, rng)

    def predict(self, x, chunk=8192):
        x = np.asarray(x, dtype=float)
        out = np.empty(len(x))
        for s in range(0, len(x), chunk):
            out[s : s + chunk] = self.forward(x[s : s + chunk]).prob
        return out

    def _head(self, top):
        logit = top @ self.params["out.W"][0] + self.params["out.b"][0]
        return logit, clip_probability(sigmoid(logit))

    def _ffn_forward(self, x, training, rng):
        layers = []
        a = x
        for l in range(self.layers):
            z = a @ self.params[f"h{l}.W"].T + self.params[f"h{l}.b"]
            h = np.maximum(z, 0.0)
            mask = None
            if training and self.dropout > 0:
                mask = dropout_mask(h.shape, self.dropout, rng)
                h = h * mask
            layers.append({"input": a, "pre": z, "mask": mask})
            a = h
        logit, prob = self._head(a)
        return ForwardCache("ffn", self.version, prob, logit, layers, top=a, x=x)

    def _packed(self, l):
        gates = GATES[self.kind]
        W = np.concatenate([self.params[f"l{l}.W_{g}"] for g in gates], axis=0)
        b = np.concatenate([self.params[f"l{l}.b_{g}"] for g in gates])
        U = self.units
        return np.ascontiguousarray(W[:, :U]), np.ascontiguousarray(W[:, U:]), b

    def _rnn_forward(self, x, training, rng):
        T, B, _ = x.shape
        U = self.units
        layers = []
        seq = x
        for l in range(self.layers):
            wh, wx, b = self._packed(l)
            in_mask = rec_mask = None
            if training and self.dropout > 0:
                in_mask = dropout_mask((B, seq.shape[2]), self.dropout, rng)
            if training and self.recurrent_dropout > 0:
                rec_mask = dropout_mask((B, U), self.recurrent_dropout, rng)
            xd = seq * in_mask if in_mask is not None else seq
            # one 2-D gemm for all timesteps
            xproj = (xd.reshape(T * B, -1) @ wx.T + b).reshape(T, B, -1)
            m = rec_mask if rec_mask is not None else np.ones((B, U))
            if self.kind == "gru":
                H, R, Z, HC, HD, RHD = kernels.gru_forward(xproj, wh, m)
                state = {"H": H, "R": R, "Z": Z, "HC": HC, "HD": HD, "RHD": RHD}
            else:
                H, C, G, HD = kernels.lstm_forward(xproj, wh, m)
                state = {"H": H, "C": C, "G": G, "HD": HD}
            state.update(xd=xd, in_mask=in_mask, rec_mask=m, wh=wh, wx=wx)
            layers.append(state)
            seq = np.asarray(H)[1:]
        top = np.asarray(layers[-1]["H"])[-1]
        logit, prob = self._head(top)
        return ForwardCache(self.kind, self.version, prob, logit, layers, top=top, x=x)

    # -- backward ---------------------------------------------------------

    def backward(self, cache, d_prob=None, d_logit=None):
        """Gradients of a loss w.r.t. every parameter.

        Pass either ``d_prob`` (dL/dp per instance) or ``d_logit`` (dL/dz,
        the numerically safer choice for cross-entropy).
        """
        if cache.kind != self.kind or cache.version != self.version:
            raise StructuralError("forward cache does not match current parameters")
        if d_logit is None:
            if d_prob is None:
                raise StructuralError("need d_prob or d_logit")
            p = cache.prob
            d_logit = np.asarray(d_prob, dtype=float) * p * (1.0 - p)
        d_logit = np.asarray(d_logit, dtype=float).reshape(-1)
        if d_logit.shape[0] != cache.prob.shape[0]:
            raise StructuralError("upstream gradient length differs from batch size")
        grads = {
            "out.W": (d_logit @ cache.top)[None, :],
            "out.b": np.array([d_logit.sum()]),
        }
        d_top = np.outer(d_logit, self.params["out.W"][0])
        if self.kind == "ffn":
            self._ffn_backward(cache, d_top, grads)
        else:
            self._rnn_backward(cache, d_top, grads)
        return grads

    def _ffn_backward(self, cache, d_a, grads):
        for l in range(self.layers - 1, -1, -1):
            st = cache.layers[l]
            if st["mask"] is not None:
                d_a = d_a * st["mask"]
            dz = d_a * (st["pre"] > 0)
            grads[f"h{l}.W"] = dz.T @ st["input"]
            grads[f"h{l}.b"] = dz.sum(axis=0)
            d_a = dz @ self.params[f"h{l}.W"]

    def _rnn_backward(self, cache, d_top, grads):
        U = self.units
        gates = GATES[self.kind]
        T = cache.x.shape[0]
        dH = np.zeros((T, d_top.shape[0], U))
        dH[-1] = d_top
        for l in range(self.layers - 1, -1, -1):
            st = cache.layers[l]
            if self.kind == "gru":
                dA = kernels.gru_backward(
                    dH, st["wh"], st["rec_mask"], st["H"], st["R"], st["Z"], st["HC"], st["HD"]
                )
            else:
                dA = kernels.lstm_backward(dH, st["wh"], st["rec_mask"], st["C"], st["G"])
            dA = np.asarray(dA)
            G = dA.shape[2]
            flat = dA.reshape(-1, G)
            xd = st["xd"].reshape(-1, st["xd"].shape[2])
            dWx = flat.T @ xd
            if self.kind == "gru":
                HD = np.asarray(st["HD"]).reshape(-1, U)
                RHD = np.asarray(st["RHD"]).reshape(-1, U)
                dWh = np.concatenate([flat[:, : 2 * U].T @ HD, flat[:, 2 * U :].T @ RHD])
            else:
                dWh = flat.T @ np.asarray(st["HD"]).reshape(-1, U)
            db = flat.sum(axis=0)
            for k, g in enumerate(gates):
                rows = slice(k * U, (k + 1) * U)
                grads[f"l{l}.W_{g}"] = np.concatenate([dWh[rows], dWx[rows]], axis=1)
                grads[f"l{l}.b_{g}"] = db[rows]
            if l > 0:
                dH = (flat @ st["wx"]).reshape(T, -1, st["wx"].shape[1])
                if st["in_mask"] is not None:
                    dH = dH * st["in_mask"]


def sequence_forward(net, instance):
    """Probability for one ``(features, 12)`` instance, plus its cache."""
    cache = net.forward(np.asarray(instance, dtype=float)[None])
    return float(cache.prob[0]), cache
