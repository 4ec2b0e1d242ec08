"""Search an observer gain L for the batch reactor.

No observer gain is given for the reactor, so one is chosen here.  The
objective is the per-step range contraction gamma + sigma*alpha*(1 - gamma)
of the standard trigger, with alpha = Gamma ||L|| ||C|| / (1 - gamma) and
(gamma, Gamma) the decay certificate of A - LC at the given margin.  The
certificate scan mirrors qstc.matops.fit_decay (same stop rule and cap), so
every point the search accepts is certifiable by the package.

    python3 tools/design_gains.py --delta 0.005 --sigma 0.0343

Prints the objective, L (row-major) and the margin.  Needs scipy.
"""
import argparse

import numpy as np
from scipy.linalg import expm
from scipy.optimize import differential_evolution

AC = np.array([[1.38, -0.2077, 6.715, -5.676], [-0.5814, -4.29, 0.0, 0.675],
               [1.067, 4.273, -6.654, 5.893], [0.048, 4.273, -1.343, -2.104]])
C = np.array([[1.0, 0.0, 1.0, -1.0], [0.0, 1.0, 0.0, 0.0]])
CAP = 1000


def norm(X):
    return np.abs(X).sum(axis=1).max()


def big_gamma(G, gamma):
    P, best, run = np.eye(len(G)), 1.0, 0
    for s in range(CAP + 1):
        r = norm(P) / gamma ** s
        best = max(best, r)
        run = run + 1 if r < 1 else 0
        if run >= len(G):
            return best
        P = P @ G
    return None


def objective(z, A, sigma):
    L, margin = z[:8].reshape(4, 2), z[8]
    G = A - L @ C
    rho = np.abs(np.linalg.eigvals(G)).max()
    if rho >= 1:
        return 1e9 + rho
    gamma = rho + margin * (1 - rho)
    Gam = big_gamma(G, gamma)
    if Gam is None:
        return 1e6
    alpha = Gam * norm(L) * norm(C) / (1 - gamma)
    if alpha * sigma >= 1:
        return 2 + alpha * sigma
    return gamma + sigma * alpha * (1 - gamma)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=0.005)
    ap.add_argument("--sigma", type=float, default=0.0343)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--maxiter", type=int, default=300)
    args = ap.parse_args()
    A = expm(AC * args.delta)
    bounds = [(-0.5, 0.5)] * 8 + [(0.02, 0.95)]
    r = differential_evolution(objective, bounds, args=(A, args.sigma), seed=args.seed, maxiter=args.maxiter,
                               popsize=30, tol=1e-12, polish=True)
    print("objective", r.fun)
    print("L", r.x[:8].reshape(4, 2).tolist())
    print("margin", r.x[8])


if __name__ == "__main__":
    main()
