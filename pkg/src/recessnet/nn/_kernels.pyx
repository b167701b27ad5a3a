# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recurrent kernels; same contract as ``_kernels_py``.

Inner loops walk contiguous rows through raw pointers so the compiler can
vectorize them (including the SIMD ``exp``/``tanh`` from libmvec).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, fmax, fmin
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef inline void _mm_bt(int M, int N, int K, double *a, int lda, double *w, int ldw,
                        double beta, double *c, int ldc) noexcept nogil:
    # C[M,N] (row-major, ld=ldc) = beta*C + A[M,K] @ W[N,K]^T
    cdef char tn = b'T'
    cdef char nn = b'N'
    cdef double one = 1.0
    dgemm(&tn, &nn, &N, &M, &K, &one, w, &ldw, a, &lda, &beta, c, &ldc)


cdef inline void _mm(int M, int N, int K, double *a, int lda, double *w, int ldw,
                     double beta, double *c, int ldc) noexcept nogil:
    # C[M,N] = beta*C + A[M,K] @ W[K,N]
    cdef char nn = b'N'
    cdef double one = 1.0
    dgemm(&nn, &nn, &N, &M, &K, &one, w, &ldw, a, &lda, &beta, c, &ldc)


cdef inline void _sigmoid_inplace(double *x, int n) noexcept nogil:
    cdef int k
    for k in range(n):
        # clamp keeps exp finite under -ffast-math
        x[k] = 1.0 / (1.0 + exp(-fmax(x[k], -500.0)))


cdef inline void _tanh_inplace(double *x, int n) noexcept nogil:
    # libmvec's vector tanh is far slower than its vector expm1
    cdef int k
    cdef double e
    for k in range(n):
        e = expm1(2.0 * fmin(fmax(x[k], -40.0), 40.0))
        x[k] = e / (e + 2.0)


def gru_forward(double[:, :, ::1] xproj, double[:, ::1] wh, double[:, ::1] mask):
    cdef int T = xproj.shape[0], B = xproj.shape[1], G = xproj.shape[2]
    cdef int U = G // 3
    cdef int t, b, u, BU = B * U
    H_ = np.zeros((T + 1, B, U))
    R_ = np.empty((T, B, U))
    Z_ = np.empty((T, B, U))
    HC_ = np.empty((T, B, U))
    HD_ = np.empty((T, B, U))
    RHD_ = np.empty((T, B, U))
    A_ = np.empty((B, G))
    cdef double[:, :, ::1] H = H_, R = R_, Z = Z_, HC = HC_, HD = HD_, RHD = RHD_
    cdef double[:, ::1] A = A_
    cdef double *h
    cdef double *hn
    cdef double *hd
    cdef double *m
    cdef double *a
    cdef double *r
    cdef double *z
    cdef double *rhd
    cdef double *hc
    with nogil:
        for t in range(T):
            h = &H[t, 0, 0]
            hd = &HD[t, 0, 0]
            m = &mask[0, 0]
            for u in range(BU):
                hd[u] = h[u] * m[u]
            memcpy(&A[0, 0], &xproj[t, 0, 0], B * G * sizeof(double))
            _mm_bt(B, 2 * U, U, hd, U, &wh[0, 0], U, 1.0, &A[0, 0], G)
            for b in range(B):
                a = &A[b, 0]
                _sigmoid_inplace(a, 2 * U)
                r = &R[t, b, 0]
                z = &Z[t, b, 0]
                rhd = &RHD[t, b, 0]
                for u in range(U):
                    r[u] = a[u]
                    z[u] = a[U + u]
                    rhd[u] = a[u] * hd[b * U + u]
            _mm_bt(B, U, U, &RHD[t, 0, 0], U, &wh[2 * U, 0], U, 1.0, &A[0, 2 * U], G)
            hn = &H[t + 1, 0, 0]
            for b in range(B):
                a = &A[b, 2 * U]
                _tanh_inplace(a, U)
                hc = &HC[t, b, 0]
                z = &Z[t, b, 0]
                for u in range(U):
                    hc[u] = a[u]
                    hn[b * U + u] = (1.0 - z[u]) * h[b * U + u] + z[u] * a[u]
    return H_, R_, Z_, HC_, HD_, RHD_


def gru_backward(double[:, :, ::1] dH, double[:, ::1] wh, double[:, ::1] mask,
                 double[:, :, ::1] H, double[:, :, ::1] R, double[:, :, ::1] Z,
                 double[:, :, ::1] HC, double[:, :, ::1] HD):
    cdef int T = dH.shape[0], B = dH.shape[1], U = dH.shape[2]
    cdef int G = 3 * U
    cdef int t, b, u, k
    cdef double dh, z, hc, r
    dA_ = np.empty((T, B, G))
    carry_ = np.zeros((B, U))
    dh_ = np.empty((B, U))
    drhd_ = np.empty((B, U))
    dhd_ = np.empty((B, U))
    cdef double[:, :, ::1] dA = dA_
    cdef double[:, ::1] carry = carry_, dhv = dh_, drhd = drhd_, dhd = dhd_
    cdef double *da
    with nogil:
        for t in range(T - 1, -1, -1):
            for b in range(B):
                da = &dA[t, b, 0]
                for u in range(U):
                    k = b * U + u
                    dh = (&dH[t, 0, 0])[k] + (&carry[0, 0])[k]
                    (&dhv[0, 0])[k] = dh
                    z = (&Z[t, 0, 0])[k]
                    hc = (&HC[t, 0, 0])[k]
                    da[2 * U + u] = dh * z * (1.0 - hc * hc)
                    da[U + u] = dh * (hc - (&H[t, 0, 0])[k]) * z * (1.0 - z)
            _mm(B, U, U, &dA[t, 0, 2 * U], G, &wh[2 * U, 0], U, 0.0, &drhd[0, 0], U)
            for b in range(B):
                da = &dA[t, b, 0]
                for u in range(U):
                    k = b * U + u
                    r = (&R[t, 0, 0])[k]
                    da[u] = (&drhd[0, 0])[k] * (&HD[t, 0, 0])[k] * r * (1.0 - r)
                    (&dhd[0, 0])[k] = (&drhd[0, 0])[k] * r
            _mm(B, U, 2 * U, &dA[t, 0, 0], G, &wh[0, 0], U, 1.0, &dhd[0, 0], U)
            for k in range(B * U):
                (&carry[0, 0])[k] = ((&dhv[0, 0])[k] * (1.0 - (&Z[t, 0, 0])[k])
                                     + (&dhd[0, 0])[k] * (&mask[0, 0])[k])
    return dA_


def lstm_forward(double[:, :, ::1] xproj, double[:, ::1] wh, double[:, ::1] mask):
    cdef int T = xproj.shape[0], B = xproj.shape[1], G = xproj.shape[2]
    cdef int U = G // 4
    cdef int t, b, u, BU = B * U
    H_ = np.zeros((T + 1, B, U))
    C_ = np.zeros((T + 1, B, U))
    GATES_ = np.empty((T, B, G))
    HD_ = np.empty((T, B, U))
    TC_ = np.empty((B, U))
    cdef double[:, :, ::1] H = H_, C = C_, GATES = GATES_, HD = HD_
    cdef double[:, ::1] TC = TC_
    cdef double *g
    cdef double *c
    cdef double *cn
    cdef double *tc
    cdef double *hn
    cdef double *hd
    cdef double *h
    cdef double *m
    with nogil:
        for t in range(T):
            h = &H[t, 0, 0]
            hd = &HD[t, 0, 0]
            m = &mask[0, 0]
            for u in range(BU):
                hd[u] = h[u] * m[u]
            memcpy(&GATES[t, 0, 0], &xproj[t, 0, 0], B * G * sizeof(double))
            _mm_bt(B, G, U, hd, U, &wh[0, 0], U, 1.0, &GATES[t, 0, 0], G)
            c = &C[t, 0, 0]
            cn = &C[t + 1, 0, 0]
            hn = &H[t + 1, 0, 0]
            for b in range(B):
                g = &GATES[t, b, 0]
                _sigmoid_inplace(g, 2 * U)
                _tanh_inplace(&g[2 * U], U)
                _sigmoid_inplace(&g[3 * U], U)
                tc = &TC[b, 0]
                for u in range(U):
                    cn[b * U + u] = g[u] * c[b * U + u] + g[U + u] * g[2 * U + u]
                    tc[u] = cn[b * U + u]
                _tanh_inplace(tc, U)
                for u in range(U):
                    hn[b * U + u] = g[3 * U + u] * tc[u]
    return H_, C_, GATES_, HD_


def lstm_backward(double[:, :, ::1] dH, double[:, ::1] wh, double[:, ::1] mask,
                  double[:, :, ::1] C, double[:, :, ::1] GATES):
    cdef int T = dH.shape[0], B = dH.shape[1], U = dH.shape[2]
    cdef int G = 4 * U
    cdef int t, b, u, k
    cdef double f, i, g, o, dh, tc, dc
    dA_ = np.empty((T, B, G))
    carry_h_ = np.zeros((B, U))
    carry_c_ = np.zeros((B, U))
    tmp_ = np.empty((B, U))
    TC_ = np.empty((B, U))
    cdef double[:, :, ::1] dA = dA_
    cdef double[:, ::1] carry_h = carry_h_, carry_c = carry_c_, tmp = tmp_, TCv = TC_
    cdef double *gt
    cdef double *da
    cdef double *tcp
    with nogil:
        for t in range(T - 1, -1, -1):
            tcp = &TCv[0, 0]
            for k in range(B * U):
                tcp[k] = (&C[t + 1, 0, 0])[k]
            _tanh_inplace(tcp, B * U)
            for b in range(B):
                gt = &GATES[t, b, 0]
                da = &dA[t, b, 0]
                for u in range(U):
                    k = b * U + u
                    f = gt[u]
                    i = gt[U + u]
                    g = gt[2 * U + u]
                    o = gt[3 * U + u]
                    dh = (&dH[t, 0, 0])[k] + (&carry_h[0, 0])[k]
                    tc = tcp[k]
                    dc = (&carry_c[0, 0])[k] + dh * o * (1.0 - tc * tc)
                    da[u] = dc * (&C[t, 0, 0])[k] * f * (1.0 - f)
                    da[U + u] = dc * g * i * (1.0 - i)
                    da[2 * U + u] = dc * i * (1.0 - g * g)
                    da[3 * U + u] = dh * tc * o * (1.0 - o)
                    (&carry_c[0, 0])[k] = dc * f
            _mm(B, U, G, &dA[t, 0, 0], G, &wh[0, 0], U, 0.0, &tmp[0, 0], U)
            for k in range(B * U):
                (&carry_h[0, 0])[k] = (&tmp[0, 0])[k] * (&mask[0, 0])[k]
    return dA_
