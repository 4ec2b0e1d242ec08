"""Discrete-time LTI plant at the sensor time step and the actuator sub-step."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import matops
from .errors import DimensionError, NotControllable, NotObservable

CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SystemModel:
    """Plant matrices at both time scales.

    ``A, B`` advance one sensor-channel step of length ``Delta``; ``At, Bt``
    advance one actuator sub-step of length ``delta = Delta / eta``.  When
    the sub-step pair is present, ``A = At^eta`` and
    ``B = sum_i At^i Bt`` hold to 1e-9.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    At: np.ndarray | None = None
    Bt: np.ndarray | None = None
    eta: int = 1
    Delta: float = 1.0
    A_cont: np.ndarray | None = field(default=None, repr=False)
    B_cont: np.ndarray | None = field(default=None, repr=False)

    @property
    def delta(self) -> float:
        return self.Delta / self.eta

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def has_substeps(self) -> bool:
        return self.At is not None

    @property
    def c_norm(self) -> float:
        return matops.inf_norm(self.C)


def _check_dims(A, B, C):
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError(f"A must be square, got {A.shape}")
    if B.shape[0] != n:
        raise DimensionError(f"B has {B.shape[0]} rows, expected {n}")
    if C.shape[1] != n:
        raise DimensionError(f"C has {C.shape[1]} columns, expected {n}")


def _check_assumptions(model: SystemModel):
    if not matops.is_controllable(model.A, model.B):
        raise NotControllable("(A, B) is not controllable")
    if not matops.is_observable(model.C, model.A):
        raise NotObservable("(C, A) is not observable")
    if model.has_substeps and not matops.is_controllable(model.At, model.Bt):
        raise NotControllable("(At, Bt) is not controllable")


def substep_consistency(At, Bt, eta):
    """``(At^eta, sum_{i<eta} At^i Bt)``."""
    A = np.eye(At.shape[0])
    B = np.zeros_like(Bt)
    for _ in range(eta):
        B = B + A @ Bt
        A = A @ At
    return A, B


def resolve_eta(A_cont, B_cont, Delta, max_eta=None):
    """First eta whose sub-step discretization at Delta/eta has controllability index eta."""
    A_cont = matops.as_matrix(A_cont, "A_cont")
    n = A_cont.shape[0]
    for eta in range(1, (max_eta or n) + 1):
        At, Bt = matops.discretize_zoh(A_cont, B_cont, Delta / eta)
        if matops.controllability_index(At, Bt) == eta:
            return eta
    raise NotControllable("no consistent controllability index found")


def from_continuous(A_cont, B_cont, C, Delta, eta=None, check=True) -> SystemModel:
    """Build a model by ZOH discretization.

    The sub-step pair is discretized at ``Delta / eta`` and the coarse pair
    is derived from it, so the two time scales agree by construction.
    ``eta=None`` selects the controllability index.
    """
    A_cont = matops.as_matrix(A_cont, "A_cont")
    B_cont = matops.as_matrix(B_cont, "B_cont")
    C = matops.as_matrix(C, "C")
    _check_dims(A_cont, B_cont, C)
    if eta is None:
        eta = resolve_eta(A_cont, B_cont, Delta)
    eta = int(eta)
    if eta < 1:
        raise DimensionError(f"eta must be >= 1, got {eta}")
    At, Bt = matops.discretize_zoh(A_cont, B_cont, Delta / eta)
    A, B = substep_consistency(At, Bt, eta)
    model = SystemModel(A=A, B=B, C=C, At=At, Bt=Bt, eta=eta, Delta=float(Delta),
                        A_cont=A_cont, B_cont=B_cont)
    if check:
        _check_assumptions(model)
    return model


def from_discrete(A, B, C, At=None, Bt=None, eta=1, Delta=1.0, check=True) -> SystemModel:
    """Build a model from discrete matrices, verifying sub-step consistency."""
    A = matops.as_matrix(A, "A")
    B = matops.as_matrix(B, "B")
    C = matops.as_matrix(C, "C")
    _check_dims(A, B, C)
    if (At is None) != (Bt is None):
        raise DimensionError("At and Bt must be given together")
    if At is not None:
        At = matops.as_matrix(At, "At")
        Bt = matops.as_matrix(Bt, "Bt")
        if At.shape != A.shape or Bt.shape != B.shape:
            raise DimensionError("sub-step matrices must match the coarse shapes")
        Ae, Be = substep_consistency(At, Bt, int(eta))
        scale = max(1.0, matops.inf_norm(A), matops.inf_norm(B))
        if np.max(np.abs(Ae - A)) > CONSISTENCY_TOL * scale or np.max(np.abs(Be - B)) > CONSISTENCY_TOL * scale:
            raise DimensionError("A != At^eta or B != sum At^i Bt within 1e-9")
    model = SystemModel(A=A, B=B, C=C, At=At, Bt=Bt, eta=int(eta), Delta=float(Delta))
    if check:
        _check_assumptions(model)
    return model


@dataclass(frozen=True)
class PlantState:
    x: np.ndarray
    s: int = 0
    k: int = 0


def plant_step(model: SystemModel, st: PlantState, u, substep: bool = False) -> PlantState:
    """Advance one coarse step, or one sub-step with rollover at ``eta``."""
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("control input must be finite")
    if not substep:
        return replace(st, x=model.A @ st.x + model.B @ u, s=st.s + 1, k=0)
    if not model.has_substeps:
        raise DimensionError("model has no sub-step matrices")
    x = model.At @ st.x + model.Bt @ u
    k = st.k + 1
    if k == model.eta:
        return PlantState(x=x, s=st.s + 1, k=0)
    return PlantState(x=x, s=st.s, k=k)


def output(model: SystemModel, st: PlantState) -> np.ndarray:
    return model.C @ st.x
