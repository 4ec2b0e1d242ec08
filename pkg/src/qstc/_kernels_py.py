"""Pure numpy implementation of the simulation hot loops.

Signatures mirror the compiled ``_kernels`` extension exactly; see
``qstc.kernels`` for how one of the two is chosen.
"""
import numpy as np

NAME = "python"


def trigger_scan(coefE, Gx, Gq, xhat, q, E, sigma, tau_max):
    """First tau in [1, tau_max] with g(tau) > sigma*E, else tau_max."""
    thresh = sigma * E
    for tau in range(1, tau_max + 1):
        v = Gx[tau] @ xhat + Gq[tau] @ q
        g = coefE[tau] * E + np.max(np.abs(v))
        if g > thresh:
            return tau
    return tau_max


def g_values(coefE, Gx, Gq, xhat, q, E):
    v = np.einsum("tij,j->ti", Gx, xhat) + np.einsum("tij,j->ti", Gq, q)
    return coefE * E + np.max(np.abs(v), axis=1)


def _observer(A, B, K, L, C, xh, q, correct):
    u = K @ xh
    nxt = A @ xh + B @ u
    if correct:
        nxt = nxt + L @ (q - C @ xh)
    return nxt, u


def advance_standard(A, B, K, L, C, x, xhat, q, correct, steps):
    nx, nu, ny = A.shape[0], B.shape[1], C.shape[0]
    X = np.empty((steps, nx))
    XH = np.empty((steps, nx))
    U = np.empty((steps, nu))
    Y = np.empty((steps, ny))
    x = np.array(x, dtype=float)
    xh = np.array(xhat, dtype=float)
    for p in range(steps):
        X[p] = x
        XH[p] = xh
        Y[p] = C @ x
        xh_next, u = _observer(A, B, K, L, C, xh, q, correct)
        U[p] = u
        x = A @ x + B @ u
        xh = xh_next
    return X, XH, U, Y, x, xh


def advance_observer(A, B, K, L, C, xhat, q, correct, steps):
    XH = np.empty((steps, A.shape[0]))
    xh = np.array(xhat, dtype=float)
    for p in range(steps):
        XH[p] = xh
        xh, _ = _observer(A, B, K, L, C, xh, q, correct)
    return XH, xh


def advance_deadbeat(At, Bt, K, M, C, eta, x, xhat_end, q, correct, steps):
    nx, nu, ny = At.shape[0], Bt.shape[1], C.shape[0]
    rows = steps * eta
    X = np.empty((rows, nx))
    XH = np.empty((rows, nx))
    U = np.empty((rows, nu))
    Y = np.empty((rows, ny))
    x = np.array(x, dtype=float)
    xh = np.array(xhat_end, dtype=float)
    r = 0
    for _ in range(steps):
        if correct:
            xh = xh + M @ (q - C @ xh)
        for _k in range(eta):
            u = K @ xh
            X[r] = x
            XH[r] = xh
            U[r] = u
            Y[r] = C @ x
            x = At @ x + Bt @ u
            xh = At @ xh + Bt @ u
            r += 1
    return X, XH, U, Y, x, xh
