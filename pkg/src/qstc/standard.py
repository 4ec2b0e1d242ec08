"""Observer-based self-triggered controller with a quantized output.

The controller runs the Luenberger observer

    xhat+ = A xhat + B K xhat + L (q - C xhat)

with ``q`` the most recent quantized sample, held between samples.  The
encoder runs an identical copy of the observer, so both sides know the
quantization center ``C xhat`` at every sample.  The next sampling time is
the first step at which the worst-case output drift ``g`` can exceed
``sigma * E``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import kernels, matops
from .errors import DimensionError, DomainError, Infeasible, NotSchur
from .plant import SystemModel

DEADBEAT_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class GainSet:
    """Controller gain ``K`` and observer gain ``L``; ``M`` only for the deadbeat variant."""

    K: np.ndarray
    L: np.ndarray | None = None
    M: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "K", matops.as_matrix(self.K, "K"))
        if self.L is not None:
            object.__setattr__(self, "L", matops.as_matrix(self.L, "L"))
        if self.M is not None:
            object.__setattr__(self, "M", matops.as_matrix(self.M, "M"))


def check_gains(model: SystemModel, gains: GainSet, variant: str = "standard") -> None:
    """Raise unless the gains satisfy the stability requirements of ``variant``."""
    n, m, p = model.n_x, model.n_u, model.n_y
    if gains.K.shape != (m, n):
        raise DimensionError(f"K must be {m}x{n}, got {gains.K.shape}")
    if variant == "standard":
        if gains.L is None or gains.L.shape != (n, p):
            raise DimensionError(f"L must be {n}x{p}")
        if not matops.is_schur(model.A + model.B @ gains.K):
            raise NotSchur("A + BK is not Schur stable")
        if not matops.is_schur(model.A - gains.L @ model.C):
            raise NotSchur("A - LC is not Schur stable")
    elif variant == "deadbeat":
        from .deadbeat import verify_deadbeat_gain

        if not model.has_substeps:
            raise DimensionError("deadbeat variant needs the sub-step matrices")
        if gains.M is None or gains.M.shape != (n, p):
            raise DimensionError(f"M must be {n}x{p}")
        res = verify_deadbeat_gain(model.At, model.Bt, gains.K, model.eta)
        scale = max(1.0, matops.inf_norm(model.At) ** model.eta)
        if res > DEADBEAT_RTOL * scale:
            raise NotSchur(f"(At + Bt K)^eta has norm {res:.3e}, not deadbeat")
        Acl = model.A @ (np.eye(n) - gains.M @ model.C)
        if not matops.is_schur(Acl):
            raise NotSchur("At^eta (I - MC) is not Schur stable")
    else:
        raise ValueError(f"unknown variant {variant!r}")


def sigma_interval(N: int, alpha: float):
    """Admissible trigger thresholds ``[1/N, 1/alpha)``."""
    if N < 2:
        raise DimensionError(f"N must be >= 2, got {N}")
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    lo, hi = 1.0 / N, 1.0 / alpha
    if lo >= hi:
        raise Infeasible(f"1/N = {lo:.6g} is not below 1/alpha = {hi:.6g}; N >= {math.floor(alpha) + 1} needed",
                         min_N=math.floor(alpha) + 1)
    return lo, hi


def contraction(gamma: float, a_sigma: float, gap: int) -> float:
    """Per-sample range factor ``gamma^gap (1 - a sigma) + a sigma``."""
    return gamma ** gap * (1.0 - a_sigma) + a_sigma


@dataclass(frozen=True)
class TriggerConfig:
    """Trigger parameters plus the certificate constants they are checked against.

    ``sigma_eff`` is ``max(sigma, 1/N)``: the bound the sampled-output error
    actually obeys.  It equals ``sigma`` whenever the strict interval holds.
    """

    sigma: float
    tau_max: int
    N: int
    E_in: float
    alpha: float
    gamma: float
    Gamma: float
    c_norm: float

    @property
    def sigma_eff(self) -> float:
        return max(self.sigma, 1.0 / self.N)

    @property
    def omega1(self) -> float:
        return contraction(self.gamma, self.alpha * self.sigma_eff, self.tau_max) ** (1.0 / self.tau_max)

    @property
    def Ex0(self) -> float:
        return self.Gamma * self.E_in


def make_trigger(sigma, tau_max, N, E_in, alpha, cert: matops.DecayCertificate, c_norm,
                 strict: bool = True) -> TriggerConfig:
    """Validate the trigger parameters against ``1/N <= sigma < 1/alpha``.

    With ``strict=False`` a threshold below ``1/N`` is accepted; the range
    sequence is then driven by ``1/N`` instead (every step is sampled, so
    the quantization error alone sets the bound).
    """
    tau_max = int(tau_max)
    if tau_max < 1:
        raise DimensionError(f"tau_max must be >= 1, got {tau_max}")
    if E_in < 0:
        raise DomainError(f"E_in must be >= 0, got {E_in}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    lo, hi = sigma_interval(int(N), alpha)
    if sigma >= hi or (strict and sigma < lo):
        raise Infeasible(f"sigma = {sigma:.6g} outside [{lo:.6g}, {hi:.6g})", min_N=math.floor(alpha) + 1)
    return TriggerConfig(sigma=float(sigma), tau_max=tau_max, N=int(N), E_in=float(E_in), alpha=float(alpha),
                         gamma=cert.gamma, Gamma=cert.Gamma, c_norm=float(c_norm))


def observer_matrix(model: SystemModel, gains: GainSet) -> np.ndarray:
    return model.A + model.B @ gains.K - gains.L @ model.C


@lru_cache(maxsize=64)
def certify(model: SystemModel, gains: GainSet, margin: float = 0.5) -> matops.DecayCertificate:
    """Decay certificate of the estimation-error matrix ``A - LC``."""
    return matops.fit_decay(model.A - gains.L @ model.C, margin=margin)


def alpha_of(model: SystemModel, gains: GainSet, cert: matops.DecayCertificate) -> float:
    return cert.Gamma * matops.inf_norm(gains.L) * model.c_norm / (1.0 - cert.gamma)


def observer_step(model: SystemModel, gains: GainSet, est, q_held, attacked: bool = False) -> np.ndarray:
    """One step of the observer; an attacked step drops the innovation term."""
    est = np.asarray(est, dtype=float)
    nxt = model.A @ est + model.B @ (gains.K @ est)
    if not attacked:
        nxt = nxt + gains.L @ (np.asarray(q_held, dtype=float) - model.C @ est)
    return nxt


@dataclass(frozen=True)
class TriggerTables:
    """Per-tau coefficients of ``g``, indexed ``0 .. tau_max``."""

    coefE: np.ndarray
    Gx: np.ndarray
    Gq: np.ndarray


@lru_cache(maxsize=64)
def _tables(model: SystemModel, gains: GainSet, N: int, tau_max: int) -> TriggerTables:
    A, B, C, K, L = model.A, model.B, model.C, gains.K, gains.L
    n = model.n_x
    F = observer_matrix(model, gains)
    BK = B @ K
    cn = model.c_norm
    coefE = np.empty(tau_max + 1)
    Gx = np.empty((tau_max + 1, model.n_y, n))
    Gq = np.empty((tau_max + 1, model.n_y, model.n_y))
    Ap = np.eye(n)                       # A^tau
    Sx = np.zeros((n, n))                # sum_i A^i BK F^(tau-i-1)
    Xq = np.zeros((n, model.n_y))        # plant response to a held unit q
    Hq = np.zeros((n, model.n_y))        # observer response to a held unit q
    I = np.eye(n)
    for tau in range(tau_max + 1):
        coefE[tau] = matops.inf_norm(C @ (Ap - I)) / cn + 1.0 / N
        Gx[tau] = C @ (Ap - I + Sx)
        Gq[tau] = C @ Xq
        Sx = Sx @ F + Ap @ BK
        Xq = A @ Xq + BK @ Hq
        Hq = F @ Hq + L
        Ap = Ap @ A
    for arr in (coefE, Gx, Gq):
        arr.setflags(write=False)
    return TriggerTables(coefE, Gx, Gq)


def trigger_tables(model: SystemModel, gains: GainSet, cfg: TriggerConfig) -> TriggerTables:
    return _tables(model, gains, cfg.N, cfg.tau_max)


def g_eval(model, gains, cfg: TriggerConfig, q, E: float, xhat, tau: int) -> float:
    """Worst-case output drift ``tau`` steps after a sample (``tau=0`` gives ``E/N``)."""
    if tau < 0:
        raise DomainError("tau must be >= 0")
    tabs = _tables(model, gains, cfg.N, max(cfg.tau_max, tau))
    v = tabs.Gx[tau] @ np.asarray(xhat, dtype=float) + tabs.Gq[tau] @ np.asarray(q, dtype=float)
    return float(tabs.coefE[tau] * E + np.max(np.abs(v)))


def next_sample(model, gains, cfg: TriggerConfig, q, E: float, xhat) -> int:
    """Inter-sample gap chosen by the self-trigger, in ``[1, tau_max]``."""
    tabs = trigger_tables(model, gains, cfg)
    return int(kernels.trigger_scan(tabs.coefE, tabs.Gx, tabs.Gq, np.ascontiguousarray(xhat, dtype=float),
                                    np.ascontiguousarray(q, dtype=float), float(E), cfg.sigma, cfg.tau_max))


@dataclass(frozen=True)
class EncoderState:
    xhat: np.ndarray
    Ex: float
    E: float
    s_last: int = 0
    q_held: np.ndarray | None = None


def initial_encoder(cfg: TriggerConfig, n_x: int, n_y: int) -> EncoderState:
    Ex = cfg.Ex0
    return EncoderState(xhat=np.zeros(n_x), Ex=Ex, E=cfg.c_norm * Ex, s_last=0, q_held=np.zeros(n_y))


def E_update(cfg: TriggerConfig, state: EncoderState, gap: int) -> EncoderState:
    """Shrink the range after an inter-sample gap of ``gap`` steps."""
    if gap < 1:
        raise DomainError(f"gap must be >= 1, got {gap}")
    Ex = contraction(cfg.gamma, cfg.alpha * cfg.sigma_eff, gap) * state.Ex
    return replace(state, Ex=Ex, E=cfg.c_norm * Ex)
