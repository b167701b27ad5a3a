import numpy as np

from ..errors import ParameterError


def check_rate(rate):
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must lie in [0, 1), got {rate}")


def dropout_mask(shape, rate, rng):
    """Inverted-dropout mask: Bernoulli(1 - rate) scaled by 1 / (1 - rate)."""
    check_rate(rate)
    if rate == 0.0:
        return np.ones(shape)
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def apply_dropout(values, rate, mask_seed=None, training=True, mode="input"):
    """Drop units of ``values``; returns ``(masked values, mask)``.

    ``mode="recurrent"`` expects ``(batch, timesteps, units)`` and draws one
    mask per sequence, shared by every timestep. Inference is the identity.
    """
    check_rate(rate)
    values = np.asarray(values, dtype=float)
    if not training or rate == 0.0:
        return values.copy(), np.ones_like(values)
    rng = np.random.default_rng(mask_seed)
    if mode == "recurrent":
        if values.ndim != 3:
            raise ParameterError("recurrent dropout expects (batch, timesteps, units)")
        mask = dropout_mask((values.shape[0], values.shape[2]), rate, rng)[:, None, :]
        mask = np.broadcast_to(mask, values.shape).copy()
    elif mode == "input":
        mask = dropout_mask(values.shape, rate, rng)
    else:
        raise ParameterError(f"unknown dropout mode {mode!r}")
    return values * mask, mask
