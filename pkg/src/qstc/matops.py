"""Small dense-matrix numerics and decay/growth certificates.

Every routine works on float64 numpy arrays.  Norms are the induced
infinity norms used throughout the package (max absolute row sum).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NonConvergence, NotControllable, NotSchur

SCHUR_TOL = 1e-9
RANK_RTOL = 1e-9
SCAN_CAP = 1000
GROWTH_SLACK = 1e-9
ZOH_TOL = 1e-12


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-D float64 array (vectors become one column)."""
    arr = np.array(M, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite entries")
    return arr


def inf_norm(M) -> float:
    """Induced infinity norm; for vectors, the max absolute entry."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    if M.ndim == 1:
        return float(np.abs(M).max())
    return float(np.abs(M).sum(axis=1).max())


def discretize_zoh(A_cont, B_cont, h: float):
    """Zero-order-hold discretization ``(exp(A h), int_0^h exp(A t) dt B)``.

    Uses a scaled-and-squared Taylor series of the augmented matrix
    ``[[A, B], [0, 0]] h``.  The truncation error is tracked through the
    squaring phase and must stay below 1e-12 in the infinity norm.
    """
    A = as_matrix(A_cont, "A_cont")
    B = as_matrix(B_cont, "B_cont")
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionError(f"A_cont must be square, got {A.shape}")
    if B.shape[0] != n:
        raise DimensionError(f"B_cont has {B.shape[0]} rows, expected {n}")
    if not h > 0:
        raise DimensionError(f"step length must be positive, got {h}")
    m = B.shape[1]
    Z = np.zeros((n + m, n + m))
    Z[:n, :n] = A * h
    Z[:n, n:] = B * h

    znorm = inf_norm(Z)
    squarings = 0
    if znorm > 0.5:
        squarings = int(math.ceil(math.log2(znorm / 0.5)))
    Zs = Z / (2.0 ** squarings)
    zs = znorm / (2.0 ** squarings)

    S = np.eye(n + m)
    term = np.eye(n + m)
    err = math.inf
    for k in range(1, 60):
        term = term @ Zs / k
        S = S + term
        # tail of the exponential series after term k
        tnorm = inf_norm(term)
        err = tnorm * zs / (k + 1) / (1.0 - zs / (k + 2))
        if err < 1e-18:
            break
    for _ in range(squarings):
        err = 2.0 * inf_norm(S) * err + err * err
        S = S @ S
    if err > ZOH_TOL:
        raise NonConvergence(f"ZOH series truncation bound {err:.3e} exceeds {ZOH_TOL}")
    return S[:n, :n].copy(), S[:n, n:].copy()


def spectral_radius(M) -> float:
    """Upper estimate of the spectral radius by repeated squaring.

    ``||M^(2^k)||^(1/2^k)`` decreases towards rho(M) and is always an upper
    bound.  Powers are renormalized at every squaring so nothing overflows.
    """
    M = as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionError("spectral radius needs a square matrix")
    nrm = inf_norm(M)
    if nrm == 0.0:
        return 0.0
    P = M / nrm
    log_norm = math.log(nrm)
    best = nrm
    for k in range(1, 64):
        P = P @ P
        nrm = inf_norm(P)
        if nrm == 0.0:
            return 0.0
        log_norm = 2.0 * log_norm + math.log(nrm)
        P = P / nrm
        est = math.exp(log_norm / 2.0 ** k)
        best = min(best, est)
    return best


def is_schur(M, tol: float = SCHUR_TOL) -> bool:
    """True iff the spectral radius is certified below ``1 - tol``."""
    M = as_matrix(M, "M")
    if M.shape[0] != M.shape[1]:
        raise DimensionError("is_schur needs a square matrix")
    return spectral_radius(M) < 1.0 - tol


@dataclass(frozen=True)
class DecayCertificate:
    """``||G^s|| <= Gamma * gamma**s`` for every s >= 0."""

    gamma: float
    Gamma: float
    rho: float = float("nan")
    horizon: int = 0


@dataclass(frozen=True)
class GrowthCertificate:
    """``Gamma * ||A^s|| <= omega_a**s`` for every s >= 1."""

    omega_a: float
    horizon: int = 0


def fit_decay(G, margin: float = 0.5, gamma: float | None = None, cap: int = SCAN_CAP) -> DecayCertificate:
    """Fit a decay certificate for a Schur matrix.

    ``gamma`` defaults to ``rho + margin * (1 - rho)``.  Gamma is the max of
    ``||G^s|| / gamma^s`` over a scan that stops once the ratio has been
    strictly below one for ``n`` consecutive powers; submultiplicativity
    then bounds every later power.
    """
    G = as_matrix(G, "G")
    n = G.shape[0]
    if G.shape[1] != n:
        raise DimensionError("fit_decay needs a square matrix")
    rho = spectral_radius(G)
    if rho >= 1.0 - SCHUR_TOL:
        raise NotSchur(f"spectral radius estimate {rho:.12g} is not below 1")
    if gamma is None:
        if not 0.0 < margin < 1.0:
            raise ValueError(f"margin must lie in (0, 1), got {margin}")
        gamma = rho + margin * (1.0 - rho)
    elif not rho < gamma < 1.0:
        raise ValueError(f"gamma={gamma} must lie in (rho={rho}, 1)")

    Gamma = 1.0
    run = 0
    P = np.eye(n)
    scale = 1.0  # gamma**s
    for s in range(cap + 1):
        ratio = inf_norm(P) / scale
        Gamma = max(Gamma, ratio)
        run = run + 1 if ratio < 1.0 else 0
        if run >= n:
            return DecayCertificate(gamma=float(gamma), Gamma=float(Gamma), rho=rho, horizon=s)
        P = P @ G
        scale *= gamma
        if scale == 0.0:
            break
    raise NonConvergence(f"decay scan did not settle within {cap} powers (gamma={gamma})")


def fit_growth(A, Gamma: float, slack: float = GROWTH_SLACK, cap: int = SCAN_CAP) -> GrowthCertificate:
    """Smallest scanned ``omega_a`` with ``Gamma ||A^s|| <= omega_a^s`` for s >= 1.

    The scan stops once ``||A^s|| <= w^s`` (without the Gamma factor) holds
    for ``n`` consecutive powers, which extends the bound to every later
    power.  Rates at or below one are clamped to ``1 + slack``.
    """
    A = as_matrix(A, "A")
    n = A.shape[0]
    if A.shape[1] != n:
        raise DimensionError("fit_growth needs a square matrix")
    if Gamma < 1.0:
        raise ValueError(f"Gamma must be >= 1, got {Gamma}")
    w = 0.0
    run = 0
    P = np.eye(n)
    for s in range(1, cap + 1):
        P = P @ A
        pn = inf_norm(P)
        if Gamma * pn > 0.0:
            w = max(w, (Gamma * pn) ** (1.0 / s))
        plateau = pn == 0.0 or (w > 0.0 and math.log(pn) <= s * math.log(w))
        run = run + 1 if plateau else 0
        if run >= n:
            omega_a = max(w * (1.0 + slack), 1.0 + slack)
            return GrowthCertificate(omega_a=omega_a, horizon=s)
    raise NonConvergence(f"growth scan did not plateau within {cap} powers")


def _pivoted_rank(M, rtol: float = RANK_RTOL) -> int:
    """Rank by Gaussian elimination with complete pivoting."""
    W = np.array(M, dtype=float)
    if W.size == 0:
        return 0
    thresh = rtol * float(np.max(np.abs(W)))
    if thresh == 0.0:
        return 0
    rows, cols = W.shape
    rank = 0
    for r in range(min(rows, cols)):
        sub = np.abs(W[r:, r:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        if sub[i, j] < thresh:
            break
        i += r
        j += r
        W[[r, i], :] = W[[i, r], :]
        W[:, [r, j]] = W[:, [j, r]]
        W[r + 1:, r:] -= np.outer(W[r + 1:, r] / W[r, r], W[r, r:])
        rank += 1
    return rank


def krylov_blocks(At, Bt, count: int):
    """``[B, A B, ..., A^(count-1) B]``."""
    blocks = [Bt]
    for _ in range(count - 1):
        blocks.append(At @ blocks[-1])
    return np.hstack(blocks)


def controllability_index(At, Bt, rtol: float = RANK_RTOL) -> int:
    """Smallest block count making ``[B, AB, ..., A^(k-1) B]`` full row rank."""
    At = as_matrix(At, "At")
    Bt = as_matrix(Bt, "Bt")
    n = At.shape[0]
    if At.shape[1] != n or Bt.shape[0] != n:
        raise DimensionError(f"inconsistent shapes {At.shape} and {Bt.shape}")
    for k in range(1, n + 1):
        if _pivoted_rank(krylov_blocks(At, Bt, k), rtol) == n:
            return k
    raise NotControllable("controllability matrix never reaches full rank")


def is_controllable(A, B) -> bool:
    try:
        controllability_index(A, B)
    except NotControllable:
        return False
    return True


def is_observable(C, A) -> bool:
    return is_controllable(np.asarray(A, dtype=float).T, np.asarray(C, dtype=float).T)


def weighted_norm(G, cert: DecayCertificate, x, cap: int = 100 * SCAN_CAP) -> float:
    """``sup_s ||gamma^-s G^s x||`` evaluated exactly.

    For t >= s, ``gamma^-t ||G^t x|| <= Gamma gamma^-s ||G^s x||``, so the
    scan stops once that tail bound drops to the running maximum.
    """
    G = np.asarray(G, dtype=float)
    v = np.asarray(x, dtype=float).ravel()
    best = 0.0
    scale = 1.0  # gamma**-s
    for _ in range(cap):
        cur = inf_norm(v) * scale
        best = max(best, cur)
        if cert.Gamma * cur <= best:
            return best
        v = G @ v
        scale /= cert.gamma
    raise NonConvergence("weighted norm tail bound did not settle")
