"""Random stabilized scenarios for property tests (rejection sampled)."""
import numpy as np
from scipy.signal import place_poles

from qstc import deadbeat, plant, simkernel, standard
from qstc.errors import QSTCError
from qstc.standard import GainSet


def _poles(rng, n, lo, hi):
    """Continuous-time decay rates, negated."""
    return -rng.uniform(lo, hi, n)


def _distinct(p, tol):
    return np.min(np.abs(np.subtract.outer(p, p)) + np.eye(len(p))) > tol


def _try(rng, variant):
    n = int(rng.integers(2, 4))
    m = int(rng.integers(1, 3))
    ny = int(rng.integers(1, min(n, 2) + 1))
    Ac = rng.normal(size=(n, n))
    Bc = rng.normal(size=(n, m))
    C = rng.normal(size=(ny, n))
    Delta = float(rng.choice([0.01, 0.02, 0.05]))
    model = plant.from_continuous(Ac, Bc, C, Delta, eta=1 if variant == "standard" else None)
    pl = np.exp(Delta * _poles(rng, n, 2.0, 6.0))
    if not _distinct(pl, 1e-4):
        return None
    L = place_poles(model.A.T, model.C.T, pl).gain_matrix.T
    if variant == "standard":
        pk = np.exp(Delta * _poles(rng, n, 1.0, 4.0))
        if not _distinct(pk, 1e-4):
            return None
        gains = GainSet(K=-place_poles(model.A, model.B, pk).gain_matrix, L=L)
    else:
        K = deadbeat.design_deadbeat_gain(model.At, model.Bt)
        gains = GainSet(K=K, M=deadbeat.M_from_Mbar(model, L))
    if variant == "standard":
        alpha = standard.alpha_of(model, gains, standard.certify(model, gains))
    else:
        alpha = deadbeat.build_artifacts(model, gains).alpha_bar
    if not alpha < 500:
        return None
    N = int(np.ceil(alpha * rng.uniform(2.0, 20.0))) + 1
    sigma = rng.uniform(1.0 / N, 1.0 / alpha)
    x0 = rng.uniform(-1, 1, n)
    E_in = float(np.max(np.abs(x0))) * rng.uniform(1.0, 2.0)
    return simkernel.Scenario(model=model, gains=gains, sigma=sigma, tau_max=int(rng.integers(1, 20)), N=N,
                              E_in=E_in, x0=x0, horizon=int(rng.integers(30, 60)), variant=variant,
                              check_invariants=True)


def random_scenario(rng, variant="standard", tries=200):
    for _ in range(tries):
        try:
            sc = _try(rng, variant)
        except (QSTCError, ValueError, np.linalg.LinAlgError):
            continue
        if sc is not None:
            return sc
    raise RuntimeError("rejection sampling failed")
