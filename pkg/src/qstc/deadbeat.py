"""Deadbeat variant: the actuator runs ``eta`` sub-steps per sensor step.

With ``(At + Bt K)^eta = 0`` the estimate returns to the origin at the end
of every sensor step, so the quantization center is always zero and the
encoder no longer needs a copy of the controller.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import matops
from .errors import DimensionError, NotControllable, SynthesisFailed
from .plant import SystemModel
from .standard import DEADBEAT_RTOL, EncoderState, GainSet, TriggerConfig, contraction

PHI_TOL = 1e-9


def verify_deadbeat_gain(At, Bt, K, eta: int) -> float:
    """``||(At + Bt K)^eta||``."""
    Acl = np.asarray(At, dtype=float) + np.asarray(Bt, dtype=float) @ np.asarray(K, dtype=float)
    return matops.inf_norm(np.linalg.matrix_power(Acl, int(eta)))


def _chains(At, Bt):
    """Chain lengths of the Krylov basis picked in the order b1..bm, A b1..A bm, ..."""
    n, m = Bt.shape
    basis = []
    lengths = [0] * m
    alive = [True] * m
    v = [Bt[:, i].copy() for i in range(m)]
    scale = max(1.0, float(np.max(np.abs(matops.krylov_blocks(At, Bt, n)))))
    for _ in range(n):
        for i in range(m):
            if not alive[i] or len(basis) == n:
                continue
            trial = np.column_stack(basis + [v[i]])
            # tiny columns relative to the whole Krylov matrix count as dependent
            if np.max(np.abs(v[i])) > matops.RANK_RTOL * scale and \
                    matops._pivoted_rank(trial, matops.RANK_RTOL) > len(basis):
                basis.append(v[i])
                lengths[i] += 1
                v[i] = At @ v[i]
            else:
                alive[i] = False
    if len(basis) < n:
        raise NotControllable("(At, Bt) is not controllable")
    return lengths


def design_deadbeat_gain(At, Bt, order: int | None = None) -> np.ndarray:
    """State feedback ``K`` with ``(At + Bt K)^order = 0``.

    Built in Luenberger controllable canonical coordinates: the Krylov
    columns are grouped into one chain per input, and ``K`` cancels the
    last row of every chain, which leaves a nilpotent closed loop whose
    index is the longest chain, i.e. the controllability index.
    """
    At = matops.as_matrix(At, "At")
    Bt = matops.as_matrix(Bt, "Bt")
    n, m = Bt.shape
    if At.shape != (n, n):
        raise DimensionError("At and Bt shapes disagree")
    lengths = _chains(At, Bt)
    eta = max(lengths)
    order = eta if order is None else int(order)
    if order < eta:
        raise SynthesisFailed(f"nilpotency order {order} is below the controllability index {eta}")
    if order > n:
        raise DimensionError(f"nilpotency order {order} exceeds n_x = {n}")
    used = [i for i in range(m) if lengths[i] > 0]
    cols = []
    for i in used:
        v = Bt[:, i]
        for _ in range(lengths[i]):
            cols.append(v)
            v = At @ v
    T = np.column_stack(cols)
    Tinv = np.linalg.inv(T)
    ends = np.cumsum([lengths[i] for i in used]) - 1
    Am = np.vstack([Tinv[e] @ np.linalg.matrix_power(At, lengths[i]) for e, i in zip(ends, used)])
    Bm = np.vstack([Tinv[e] @ np.linalg.matrix_power(At, lengths[i] - 1) @ Bt for e, i in zip(ends, used)])
    # inputs whose chain is empty get zero gain
    K = np.zeros((m, n))
    Bsub = Bm[:, used]
    K[used] = -np.linalg.solve(Bsub, Am)
    res = verify_deadbeat_gain(At, Bt, K, order)
    if not res <= DEADBEAT_RTOL * max(1.0, matops.inf_norm(At) ** order):
        raise SynthesisFailed(f"synthesized gain leaves residual {res:.3e}")
    return K


def phi_A(At, Bt, K, eta: int) -> np.ndarray:
    """``-sum_{i<eta} (At + Bt K)^i Bt K At^(eta-i-1)``."""
    Acl = At + Bt @ K
    out = np.zeros_like(At)
    P = np.eye(At.shape[0])
    for i in range(eta):
        out -= P @ Bt @ K @ np.linalg.matrix_power(At, eta - i - 1)
        P = P @ Acl
    return out


def M_from_Mbar(model: SystemModel, Mbar) -> np.ndarray:
    """``M = (At^eta)^-1 Mbar`` so that ``At^eta (I - MC) = A - Mbar C``."""
    Mbar = matops.as_matrix(Mbar, "Mbar")
    if np.linalg.cond(model.A) > 1e12:
        raise DimensionError("At^eta is numerically singular; supply M directly")
    return np.linalg.solve(model.A, Mbar)


@dataclass(frozen=True, eq=False)
class DeadbeatArtifacts:
    PhiA: np.ndarray
    Abar_cl: np.ndarray
    cert_bar: matops.DecayCertificate
    alpha_bar: float


@lru_cache(maxsize=64)
def build_artifacts(model: SystemModel, gains: GainSet, margin: float = 0.5) -> DeadbeatArtifacts:
    PhiA = phi_A(model.At, model.Bt, gains.K, model.eta)
    # cross-check against the closed form At^eta - (At + Bt K)^eta
    alt = model.A - np.linalg.matrix_power(model.At + model.Bt @ gains.K, model.eta)
    if np.max(np.abs(PhiA - alt)) > PHI_TOL * max(1.0, matops.inf_norm(PhiA)):
        raise SynthesisFailed("Phi_A disagrees with its closed form")
    Abar = model.A @ (np.eye(model.n_x) - gains.M @ model.C)
    cert = matops.fit_decay(Abar, margin=margin)
    alpha_bar = cert.Gamma * matops.inf_norm(model.A @ gains.M) * model.c_norm / (1.0 - cert.gamma)
    return DeadbeatArtifacts(PhiA=PhiA, Abar_cl=Abar, cert_bar=cert, alpha_bar=alpha_bar)


def db_step(model: SystemModel, gains: GainSet, est, q_held=None, phase: str = "substep") -> np.ndarray:
    """One sub-step ``xhat <- (At + Bt K) xhat`` or the sensor-step correction."""
    est = np.asarray(est, dtype=float)
    if phase == "substep":
        return model.At @ est + model.Bt @ (gains.K @ est)
    if phase == "boundary":
        return est + gains.M @ (np.asarray(q_held, dtype=float) - model.C @ est)
    raise ValueError(f"unknown phase {phase!r}")


@dataclass(frozen=True)
class BarTables:
    coefE: np.ndarray   # indexed 0..tau_max, entry 0 unused
    Gq: np.ndarray


@lru_cache(maxsize=64)
def _bar_tables(model: SystemModel, gains: GainSet, arts: DeadbeatArtifacts, N: int, tau_max: int) -> BarTables:
    C, M, A = model.C, gains.M, model.A
    CP = C @ arts.PhiA
    cn = model.c_norm
    ny = model.n_y
    IMC = np.eye(model.n_x) - M @ C
    coefE = np.full(tau_max + 1, np.nan)
    Gq = np.empty((tau_max + 1, ny, ny))
    Gq[0] = 0.0
    Ap = np.eye(model.n_x)     # A^(tau-1)
    acc = np.zeros_like(M)     # sum_{i <= tau-2} A^i M
    for tau in range(1, tau_max + 1):
        # A^(tau-2) Abar_cl = A^(tau-1) (I - MC), which is also the tau = 1 form
        coefE[tau] = matops.inf_norm(CP @ Ap @ IMC) / cn + matops.inf_norm(CP @ Ap @ M) / N
        Gq[tau] = CP @ acc + np.eye(ny)
        acc = acc + Ap @ M
        Ap = Ap @ A
    for arr in (coefE, Gq):
        arr.setflags(write=False)
    return BarTables(coefE, Gq)


def bar_tables(model, gains, arts, cfg: TriggerConfig) -> BarTables:
    return _bar_tables(model, gains, arts, cfg.N, cfg.tau_max)


def g_bar_eval(model, gains, arts, cfg: TriggerConfig, q, E: float, tau: int) -> float:
    """Worst-case output drift ``tau`` sensor steps after a sample; needs no center."""
    if tau < 1:
        raise ValueError("tau must be >= 1")
    tabs = _bar_tables(model, gains, arts, cfg.N, max(cfg.tau_max, tau))
    return float(tabs.coefE[tau] * E + np.max(np.abs(tabs.Gq[tau] @ np.asarray(q, dtype=float))))


def db_next_sample(model, gains, arts, cfg: TriggerConfig, q, E: float) -> int:
    tabs = bar_tables(model, gains, arts, cfg)
    thresh = cfg.sigma * E
    q = np.asarray(q, dtype=float)
    for tau in range(1, cfg.tau_max + 1):
        if tabs.coefE[tau] * E + np.max(np.abs(tabs.Gq[tau] @ q)) > thresh:
            return tau
    return cfg.tau_max


def db_E_update(cfg: TriggerConfig, state: EncoderState, gap: int) -> EncoderState:
    """Same blend as the standard variant, with the deadbeat certificate in ``cfg``."""
    if gap < 1:
        raise ValueError(f"gap must be >= 1, got {gap}")
    Ex = contraction(cfg.gamma, cfg.alpha * cfg.sigma_eff, gap) * state.Ex
    return replace(state, Ex=Ex, E=cfg.c_norm * Ex)
