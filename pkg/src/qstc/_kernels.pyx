# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation hot loops; drop-in for ``qstc._kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

NAME = "cython"


cdef inline void matvec(const double[:, ::1] M, const double[::1] v, double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(M.shape[0]):
        acc = 0.0
        for j in range(M.shape[1]):
            acc += M[i, j] * v[j]
        out[i] = acc


cdef inline void observer(const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] K,
                          const double[:, ::1] L, const double[:, ::1] C, const double[::1] xh,
                          const double[::1] q, bint correct, double[::1] u, double[::1] innov,
                          double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    matvec(K, xh, u)
    if correct:
        for i in range(C.shape[0]):
            acc = 0.0
            for j in range(C.shape[1]):
                acc += C[i, j] * xh[j]
            innov[i] = q[i] - acc
    for i in range(A.shape[0]):
        acc = 0.0
        for j in range(A.shape[1]):
            acc += A[i, j] * xh[j]
        for j in range(B.shape[1]):
            acc += B[i, j] * u[j]
        if correct:
            for j in range(L.shape[1]):
                acc += L[i, j] * innov[j]
        out[i] = acc


def trigger_scan(const double[::1] coefE, const double[:, :, ::1] Gx, const double[:, :, ::1] Gq,
                 const double[::1] xhat, const double[::1] q, double E, double sigma, int tau_max):
    """First tau in [1, tau_max] with g(tau) > sigma*E, else tau_max."""
    cdef Py_ssize_t ny = Gq.shape[1], nx = Gx.shape[2]
    cdef Py_ssize_t i, j
    cdef int tau
    cdef double acc, vmax, thresh = sigma * E
    cdef int result = tau_max
    with nogil:
        for tau in range(1, tau_max + 1):
            vmax = 0.0
            for i in range(ny):
                acc = 0.0
                for j in range(nx):
                    acc += Gx[tau, i, j] * xhat[j]
                for j in range(ny):
                    acc += Gq[tau, i, j] * q[j]
                if fabs(acc) > vmax:
                    vmax = fabs(acc)
            if coefE[tau] * E + vmax > thresh:
                result = tau
                break
    return result


def g_values(const double[::1] coefE, const double[:, :, ::1] Gx, const double[:, :, ::1] Gq,
             const double[::1] xhat, const double[::1] q, double E):
    cdef Py_ssize_t T = coefE.shape[0], ny = Gq.shape[1], nx = Gx.shape[2]
    cdef Py_ssize_t t, i, j
    cdef double acc, vmax
    out = np.empty(T)
    cdef double[::1] o = out
    with nogil:
        for t in range(T):
            vmax = 0.0
            for i in range(ny):
                acc = 0.0
                for j in range(nx):
                    acc += Gx[t, i, j] * xhat[j]
                for j in range(ny):
                    acc += Gq[t, i, j] * q[j]
                if fabs(acc) > vmax:
                    vmax = fabs(acc)
            o[t] = coefE[t] * E + vmax
    return out


def advance_standard(const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] K,
                     const double[:, ::1] L, const double[:, ::1] C, x0, xhat0,
                     const double[::1] q, bint correct, int steps):
    cdef Py_ssize_t nx = A.shape[0], nu = B.shape[1], ny = C.shape[0]
    cdef Py_ssize_t p, i, j
    cdef double acc
    X = np.empty((steps, nx))
    XH = np.empty((steps, nx))
    U = np.empty((steps, nu))
    Y = np.empty((steps, ny))
    x_arr = np.array(x0, dtype=float)
    xh_arr = np.array(xhat0, dtype=float)
    nxt_arr = np.empty(nx)
    xn_arr = np.empty(nx)
    u_arr = np.empty(nu)
    innov_arr = np.empty(ny)
    cdef double[:, ::1] Xv = X, XHv = XH, Uv = U, Yv = Y
    cdef double[::1] x = x_arr, xh = xh_arr, nxt = nxt_arr, xn = xn_arr, u = u_arr, innov = innov_arr
    with nogil:
        for p in range(steps):
            for i in range(nx):
                Xv[p, i] = x[i]
                XHv[p, i] = xh[i]
            matvec(C, x, Yv[p])
            observer(A, B, K, L, C, xh, q, correct, u, innov, nxt)
            for i in range(nu):
                Uv[p, i] = u[i]
            for i in range(nx):
                acc = 0.0
                for j in range(nx):
                    acc += A[i, j] * x[j]
                for j in range(nu):
                    acc += B[i, j] * u[j]
                xn[i] = acc
            for i in range(nx):
                x[i] = xn[i]
                xh[i] = nxt[i]
    return X, XH, U, Y, x_arr, xh_arr


def advance_observer(const double[:, ::1] A, const double[:, ::1] B, const double[:, ::1] K,
                     const double[:, ::1] L, const double[:, ::1] C, xhat0,
                     const double[::1] q, bint correct, int steps):
    cdef Py_ssize_t nx = A.shape[0], nu = B.shape[1], ny = C.shape[0]
    cdef Py_ssize_t p, i
    XH = np.empty((steps, nx))
    xh_arr = np.array(xhat0, dtype=float)
    nxt_arr = np.empty(nx)
    u_arr = np.empty(nu)
    innov_arr = np.empty(ny)
    cdef double[:, ::1] XHv = XH
    cdef double[::1] xh = xh_arr, nxt = nxt_arr, u = u_arr, innov = innov_arr
    with nogil:
        for p in range(steps):
            for i in range(nx):
                XHv[p, i] = xh[i]
            observer(A, B, K, L, C, xh, q, correct, u, innov, nxt)
            for i in range(nx):
                xh[i] = nxt[i]
    return XH, xh_arr


def advance_deadbeat(const double[:, ::1] At, const double[:, ::1] Bt, const double[:, ::1] K,
                     const double[:, ::1] M, const double[:, ::1] C, int eta, x0, xhat_end0,
                     const double[::1] q, bint correct, int steps):
    cdef Py_ssize_t nx = At.shape[0], nu = Bt.shape[1], ny = C.shape[0]
    cdef Py_ssize_t s, k, i, j, r = 0
    cdef double acc, acc2
    X = np.empty((steps * eta, nx))
    XH = np.empty((steps * eta, nx))
    U = np.empty((steps * eta, nu))
    Y = np.empty((steps * eta, ny))
    x_arr = np.array(x0, dtype=float)
    xh_arr = np.array(xhat_end0, dtype=float)
    xn_arr = np.empty(nx)
    xhn_arr = np.empty(nx)
    u_arr = np.empty(nu)
    innov_arr = np.empty(ny)
    cdef double[:, ::1] Xv = X, XHv = XH, Uv = U, Yv = Y
    cdef double[::1] x = x_arr, xh = xh_arr, xn = xn_arr, xhn = xhn_arr, u = u_arr, innov = innov_arr
    with nogil:
        for s in range(steps):
            if correct:
                for i in range(ny):
                    acc = 0.0
                    for j in range(nx):
                        acc += C[i, j] * xh[j]
                    innov[i] = q[i] - acc
                for i in range(nx):
                    acc = 0.0
                    for j in range(ny):
                        acc += M[i, j] * innov[j]
                    xh[i] = xh[i] + acc
            for k in range(eta):
                matvec(K, xh, u)
                for i in range(nx):
                    Xv[r, i] = x[i]
                    XHv[r, i] = xh[i]
                for i in range(nu):
                    Uv[r, i] = u[i]
                matvec(C, x, Yv[r])
                for i in range(nx):
                    acc = 0.0
                    acc2 = 0.0
                    for j in range(nx):
                        acc += At[i, j] * x[j]
                        acc2 += At[i, j] * xh[j]
                    for j in range(nu):
                        acc += Bt[i, j] * u[j]
                        acc2 += Bt[i, j] * u[j]
                    xn[i] = acc
                    xhn[i] = acc2
                for i in range(nx):
                    x[i] = xn[i]
                    xh[i] = xhn[i]
                r += 1
    return X, XH, U, Y, x_arr, xh_arr
