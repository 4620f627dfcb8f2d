# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM sequence kernels.

Same contract as _kernels_py: gate layout (input, forget, output, candidate)
along the 4H axis, post-activation gate values cached for backward.
"""

from libc.math cimport exp, tanh


cdef inline double _sigmoid(double z) nogil:
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    cdef double ez = exp(z)
    return ez / (1.0 + ez)


def lstm_forward_kernel(double[:, :, ::1] x,
                        double[:, ::1] wx,
                        double[:, ::1] wh,
                        double[::1] b,
                        double[:, :, ::1] gates,
                        double[:, :, ::1] c,
                        double[:, :, ::1] h):
    cdef Py_ssize_t B = x.shape[0]
    cdef Py_ssize_t T = x.shape[1]
    cdef Py_ssize_t I = x.shape[2]
    cdef Py_ssize_t H = wh.shape[1]
    cdef Py_ssize_t n, t, j, k
    cdef double a, i_g, f_g, o_g, g_g, c_prev, c_t

    with nogil:
        for n in range(B):
            for t in range(T):
                for j in range(4 * H):
                    a = b[j]
                    for k in range(I):
                        a += wx[j, k] * x[n, t, k]
                    if t > 0:
                        for k in range(H):
                            a += wh[j, k] * h[n, t - 1, k]
                    gates[n, t, j] = a
                for j in range(H):
                    i_g = _sigmoid(gates[n, t, j])
                    f_g = _sigmoid(gates[n, t, H + j])
                    o_g = _sigmoid(gates[n, t, 2 * H + j])
                    g_g = tanh(gates[n, t, 3 * H + j])
                    c_prev = c[n, t - 1, j] if t > 0 else 0.0
                    c_t = f_g * c_prev + i_g * g_g
                    gates[n, t, j] = i_g
                    gates[n, t, H + j] = f_g
                    gates[n, t, 2 * H + j] = o_g
                    gates[n, t, 3 * H + j] = g_g
                    c[n, t, j] = c_t
                    h[n, t, j] = o_g * tanh(c_t)


def lstm_backward_kernel(double[:, :, ::1] x,
                         double[:, ::1] wx,
                         double[:, ::1] wh,
                         double[:, :, ::1] gates,
                         double[:, :, ::1] c,
                         double[:, :, ::1] h,
                         double[:, ::1] dh_final,
                         double[:, ::1] dwx,
                         double[:, ::1] dwh,
                         double[::1] db,
                         double[:, :, ::1] dx):
    cdef Py_ssize_t B = x.shape[0]
    cdef Py_ssize_t T = x.shape[1]
    cdef Py_ssize_t I = x.shape[2]
    cdef Py_ssize_t H = wh.shape[1]
    cdef Py_ssize_t n, t, j, k
    cdef double i_g, f_g, o_g, g_g, tanh_c, c_prev, h_prev
    cdef double dh_j, dc_j, do, di, dg, df, da_j

    # per-sample scratch (H is small; stack-size arrays via malloc would be
    # overkill, use python-level buffers instead)
    import numpy as np
    dh_buf = np.empty(H)
    dc_buf = np.empty(H)
    da_buf = np.empty(4 * H)
    cdef double[::1] dh = dh_buf
    cdef double[::1] dc = dc_buf
    cdef double[::1] da = da_buf

    for n in range(B):
        with nogil:
            for j in range(H):
                dh[j] = dh_final[n, j]
                dc[j] = 0.0
            for t in range(T - 1, -1, -1):
                for j in range(H):
                    i_g = gates[n, t, j]
                    f_g = gates[n, t, H + j]
                    o_g = gates[n, t, 2 * H + j]
                    g_g = gates[n, t, 3 * H + j]
                    c_prev = c[n, t - 1, j] if t > 0 else 0.0
                    tanh_c = tanh(c[n, t, j])

                    do = dh[j] * tanh_c
                    dc_j = dc[j] + dh[j] * o_g * (1.0 - tanh_c * tanh_c)
                    di = dc_j * g_g
                    dg = dc_j * i_g
                    df = dc_j * c_prev

                    da[j] = di * i_g * (1.0 - i_g)
                    da[H + j] = df * f_g * (1.0 - f_g)
                    da[2 * H + j] = do * o_g * (1.0 - o_g)
                    da[3 * H + j] = dg * (1.0 - g_g * g_g)
                    dc[j] = dc_j * f_g

                for j in range(4 * H):
                    da_j = da[j]
                    db[j] += da_j
                    for k in range(I):
                        dwx[j, k] += da_j * x[n, t, k]
                    if t > 0:
                        for k in range(H):
                            dwh[j, k] += da_j * h[n, t - 1, k]
                for k in range(I):
                    dx[n, t, k] = 0.0
                    for j in range(4 * H):
                        dx[n, t, k] += da[j] * wx[j, k]
                for j in range(H):
                    dh[j] = 0.0
                    for k in range(4 * H):
                        dh[j] += da[k] * wh[k, j]
