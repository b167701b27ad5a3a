"""Pure-numpy recurrent kernels (fallback backend).

All arrays are time-major and C-contiguous float64. ``xproj`` holds the
input projections plus biases for every timestep, so only the recurrent
matrix products remain inside the time loop. Gate order: GRU ``[r, z, h]``,
LSTM ``[f, i, c, o]``. ``wh`` is the hidden-state block of the packed gate
weights, shape ``(gates * units, units)``.
"""

import numpy as np


def _sigmoid(x):
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def gru_forward(xproj, wh, mask):
    T, B, G = xproj.shape
    U = G // 3
    wrz = wh[: 2 * U]
    wc = wh[2 * U :]
    H = np.zeros((T + 1, B, U))
    R = np.empty((T, B, U))
    Z = np.empty((T, B, U))
    HC = np.empty((T, B, U))
    HD = np.empty((T, B, U))
    RHD = np.empty((T, B, U))
    for t in range(T):
        hd = H[t] * mask
        a_rz = xproj[t, :, : 2 * U] + hd @ wrz.T
        rz = _sigmoid(a_rz)
        r = rz[:, :U]
        z = rz[:, U:]
        rhd = r * hd
        hc = np.tanh(xproj[t, :, 2 * U :] + rhd @ wc.T)
        H[t + 1] = (1.0 - z) * H[t] + z * hc
        R[t], Z[t], HC[t], HD[t], RHD[t] = r, z, hc, hd, rhd
    return H, R, Z, HC, HD, RHD


def gru_backward(dH, wh, mask, H, R, Z, HC, HD):
    """Gate pre-activation gradients ``(T, B, 3U)`` given ``dL/dH[1:]``."""
    T, B, U = dH.shape
    wrz = wh[: 2 * U]
    wc = wh[2 * U :]
    dA = np.empty((T, B, 3 * U))
    carry = np.zeros((B, U))
    for t in range(T - 1, -1, -1):
        dh = dH[t] + carry
        z, hc, r, hd = Z[t], HC[t], R[t], HD[t]
        da_h = dh * z * (1.0 - hc * hc)
        dz = dh * (hc - H[t])
        d_rhd = da_h @ wc
        da_r = d_rhd * hd * r * (1.0 - r)
        da_z = dz * z * (1.0 - z)
        dA[t, :, :U] = da_r
        dA[t, :, U : 2 * U] = da_z
        dA[t, :, 2 * U :] = da_h
        dhd = d_rhd * r + dA[t, :, : 2 * U] @ wrz
        carry = dh * (1.0 - z) + dhd * mask
    return dA


def lstm_forward(xproj, wh, mask):
    T, B, G = xproj.shape
    U = G // 4
    H = np.zeros((T + 1, B, U))
    C = np.zeros((T + 1, B, U))
    GATES = np.empty((T, B, 4 * U))
    HD = np.empty((T, B, U))
    for t in range(T):
        hd = H[t] * mask
        a = xproj[t] + hd @ wh.T
        g = GATES[t]
        g[:, : 2 * U] = _sigmoid(a[:, : 2 * U])
        g[:, 2 * U : 3 * U] = np.tanh(a[:, 2 * U : 3 * U])
        g[:, 3 * U :] = _sigmoid(a[:, 3 * U :])
        C[t + 1] = g[:, :U] * C[t] + g[:, U : 2 * U] * g[:, 2 * U : 3 * U]
        H[t + 1] = g[:, 3 * U :] * np.tanh(C[t + 1])
        HD[t] = hd
    return H, C, GATES, HD


def lstm_backward(dH, wh, mask, C, GATES):
    T, B, U = dH.shape
    dA = np.empty((T, B, 4 * U))
    carry_h = np.zeros((B, U))
    carry_c = np.zeros((B, U))
    for t in range(T - 1, -1, -1):
        g = GATES[t]
        f, i, c, o = g[:, :U], g[:, U : 2 * U], g[:, 2 * U : 3 * U], g[:, 3 * U :]
        dh = dH[t] + carry_h
        tc = np.tanh(C[t + 1])
        dc = carry_c + dh * o * (1.0 - tc * tc)
        dA[t, :, :U] = dc * C[t] * f * (1.0 - f)
        dA[t, :, U : 2 * U] = dc * c * i * (1.0 - i)
        dA[t, :, 2 * U : 3 * U] = dc * i * (1.0 - c * c)
        dA[t, :, 3 * U :] = dh * tc * o * (1.0 - o)
        carry_c = dc * f
        carry_h = (dA[t] @ wh) * mask
    return dA
