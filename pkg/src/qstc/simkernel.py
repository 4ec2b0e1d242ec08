"""Closed-loop simulation: plant, encoder, channel, controller.

Within a sampling step the order is fixed: the sensor reads ``y``, the
encoder quantizes it in the current frame, the channel applies the attack
indicator, the controller updates (the encoder learns the outcome through
the ACK), both sides compute the next sampling time and range, and the
plant advances under the held input until the next sample.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import deadbeat, dos, kernels, matops, quantizer, standard
from .errors import DegenerateTrace, DomainError, FrameBreach, Infeasible, InvariantBreach, OutOfRange
from .plant import SystemModel
from .standard import GainSet, TriggerConfig

VARIANTS = ("standard", "deadbeat")
CHECK_RTOL = 1e-9
CHECK_ATOL = 1e-12
DEADBEAT_ZERO_RTOL = 1e-7


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything a run needs; certificates are derived at construction."""

    model: SystemModel
    gains: GainSet
    sigma: float
    tau_max: int
    N: int
    E_in: float
    x0: np.ndarray
    horizon: int
    variant: str = "standard"
    dos: dos.DosModel = field(default_factory=dos.DosModel)
    margin: float = 0.5
    strict_sigma: bool = True
    check_invariants: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.horizon < 1:
            raise DomainError(f"horizon must be >= 1, got {self.horizon}")
        x0 = np.asarray(self.x0, dtype=float).ravel()
        if x0.shape != (self.model.n_x,):
            raise DomainError(f"x0 must have {self.model.n_x} entries")
        if matops.inf_norm(x0) > self.E_in * (1.0 + CHECK_RTOL):
            raise DomainError(f"||x0|| = {matops.inf_norm(x0):.6g} exceeds E_in = {self.E_in:.6g}")
        object.__setattr__(self, "x0", x0)
        standard.check_gains(self.model, self.gains, self.variant)
        arts = None
        if self.variant == "standard":
            cert = standard.certify(self.model, self.gains, self.margin)
            alpha = standard.alpha_of(self.model, self.gains, cert)
        else:
            arts = deadbeat.build_artifacts(self.model, self.gains, self.margin)
            cert, alpha = arts.cert_bar, arts.alpha_bar
        trig = standard.make_trigger(self.sigma, self.tau_max, self.N, self.E_in, alpha, cert,
                                     self.model.c_norm, strict=self.strict_sigma)
        growth = None
        if self.dos.mode != "none":
            growth = matops.fit_growth(self.model.A, cert.Gamma)
        object.__setattr__(self, "cert", cert)
        object.__setattr__(self, "arts", arts)
        object.__setattr__(self, "trigger", trig)
        object.__setattr__(self, "growth", growth)
        object.__setattr__(self, "qspec", quantizer.QuantizerSpec(int(self.N), self.model.n_y))

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)

    @property
    def omega_a(self) -> float:
        if self.growth is None:
            return matops.fit_growth(self.model.A, self.cert.Gamma).omega_a
        return self.growth.omega_a

    def bounds(self) -> dict:
        """Certificate constants for reports."""
        t = self.trigger
        lo, hi = standard.sigma_interval(t.N, t.alpha)
        out = {
            "variant": self.variant,
            "gamma": t.gamma,
            "Gamma": t.Gamma,
            "alpha": t.alpha,
            "sigma": t.sigma,
            "sigma_eff": t.sigma_eff,
            "sigma_lo": lo,
            "sigma_hi": hi,
            "omega1": t.omega1,
            "omega_a": self.omega_a,
        }
        try:
            out["dos_bound"] = dos.dos_bound(t.omega1, out["omega_a"])
        except DomainError:
            out["dos_bound"] = None
        return out


@dataclass
class SimTrace:
    """Per-step record; deadbeat runs carry ``eta`` sub-rows per sensor step."""

    n_x: int
    n_u: int
    n_y: int
    E_in: float
    s: np.ndarray
    k: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    y: np.ndarray
    q_index: np.ndarray
    q: np.ndarray
    E: np.ndarray
    Ex: np.ndarray
    sampled: np.ndarray
    h: np.ndarray
    ack: np.ndarray
    samples: list = field(default_factory=list)      # (s, E, ||y - yhat||) per sample
    breach: str | None = None

    @property
    def sample_count(self) -> int:
        return int(np.count_nonzero(self.sampled))

    @property
    def effective_attacks(self) -> int:
        return int(np.count_nonzero(self.sampled & (self.h == 1)))

    def state_norms(self) -> np.ndarray:
        """``||x_s||`` at the start of every sensor step."""
        rows = self.k == 0
        return np.max(np.abs(self.x[rows]), axis=1)

    def header(self) -> list:
        cols = ["s", "k"]
        for name, n in (("x", self.n_x), ("xhat", self.n_x), ("u", self.n_u), ("y", self.n_y)):
            cols += [f"{name}{i}" for i in range(n)]
        cols.append("q_index")
        cols += [f"q{i}" for i in range(self.n_y)]
        cols += ["E", "Ex", "sampled", "h", "ack"]
        return cols

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for r in range(len(self.s)):
            row = [int(self.s[r]), int(self.k[r])]
            for arr in (self.x, self.xhat, self.u, self.y):
                row += [repr(float(v)) for v in arr[r]]
            row.append(int(self.q_index[r]))
            row += [repr(float(v)) for v in self.q[r]]
            row += [repr(float(self.E[r])), repr(float(self.Ex[r])),
                    int(self.sampled[r]), int(self.h[r]), int(self.ack[r])]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


class _Recorder:
    def __init__(self):
        self.parts = {k: [] for k in ("s", "k", "x", "xhat", "u", "y", "q_index", "q", "E", "Ex",
                                      "sampled", "h", "ack")}

    def add(self, s0, eta, X, XH, U, Y, idx, q, E, Ex, h_seq, sampled_first, ack):
        rows = X.shape[0]
        steps = rows // eta
        self.parts["s"].append(np.repeat(np.arange(s0, s0 + steps), eta))
        self.parts["k"].append(np.tile(np.arange(eta), steps))
        self.parts["x"].append(X)
        self.parts["xhat"].append(XH)
        self.parts["u"].append(U)
        self.parts["y"].append(Y)
        first = np.zeros(rows, dtype=bool)
        if sampled_first:
            first[0] = True
        qi = np.zeros(rows, dtype=np.uint64)
        qi[0] = idx if sampled_first else 0
        self.parts["q_index"].append(qi)
        self.parts["q"].append(np.tile(q, (rows, 1)))
        self.parts["E"].append(np.full(rows, E))
        self.parts["Ex"].append(np.full(rows, Ex))
        self.parts["sampled"].append(first)
        self.parts["h"].append(np.repeat(np.asarray(h_seq, dtype=np.int8), eta))
        a = np.zeros(rows, dtype=bool)
        a[0] = ack
        self.parts["ack"].append(a)

    def build(self, sc: Scenario, samples, breach=None) -> SimTrace:
        m = sc.model
        cat = {}
        for key, chunks in self.parts.items():
            if chunks:
                cat[key] = np.concatenate(chunks)
            else:
                width = {"x": m.n_x, "xhat": m.n_x, "u": m.n_u, "y": m.n_y, "q": m.n_y}.get(key)
                cat[key] = np.zeros((0, width)) if width else np.zeros(0)
        return SimTrace(n_x=m.n_x, n_u=m.n_u, n_y=m.n_y, E_in=sc.E_in, samples=samples, breach=breach, **cat)


def _c(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=float)


def run_closed_loop(sc: Scenario) -> SimTrace:
    """Simulate ``sc.horizon`` sensor steps and return the full trace."""
    m, g, cfg = sc.model, sc.gains, sc.trigger
    db = sc.variant == "deadbeat"
    eta = m.eta if db else 1
    rec = _Recorder()
    samples = []
    adv = dos.Adversary(sc.dos)
    omega_a = sc.growth.omega_a if sc.growth is not None else None
    update = deadbeat.db_E_update if db else standard.E_update

    A, B, C, K = _c(m.A), _c(m.B), _c(m.C), _c(g.K)
    if db:
        At, Bt, M = _c(m.At), _c(m.Bt), _c(g.M)
    else:
        L = _c(g.L)
        tabs = standard.trigger_tables(m, g, cfg)
    enc = standard.initial_encoder(cfg, m.n_x, m.n_y)
    x = sc.x0.copy()
    xh = np.zeros(m.n_x)          # controller estimate (deadbeat: end of previous step)
    xh_enc = np.zeros(m.n_x)      # encoder replica (standard only)
    q_held = np.zeros(m.n_y)
    attacks_eff = 0
    checks = sc.check_invariants
    Gamma1 = cfg.c_norm * cfg.Gamma
    s = 0
    while s < sc.horizon:
        y = C @ x
        center = np.zeros(m.n_y) if db else C @ xh_enc
        frame = quantizer.QuantizationFrame(center=center, range=enc.E)
        try:
            idx, qv = quantizer.quantize(sc.qspec, frame, y)
        except OutOfRange as exc:
            msg = f"frame breach at s={s}: {exc}"
            raise FrameBreach(msg, trace=rec.build(sc, samples, breach=msg)) from None
        samples.append((s, enc.E, float(np.max(np.abs(y - center)))))
        if checks:
            bound = Gamma1 * sc.E_in * cfg.omega1 ** (s - attacks_eff) * (omega_a or 1.0) ** attacks_eff
            if enc.E > bound * (1.0 + CHECK_RTOL) + CHECK_ATOL:
                raise InvariantBreach(f"E = {enc.E:.6g} above its certified envelope {bound:.6g} at s={s}")
        h0 = adv.decide(s, True)
        attacked = bool(h0)
        if attacked:
            attacks_eff += 1
        else:
            q_held = qv
        if attacked:
            gap = 1
        elif db:
            gap = deadbeat.db_next_sample(m, g, sc.arts, cfg, q_held, enc.E)
        else:
            gap = int(kernels.trigger_scan(tabs.coefE, tabs.Gx, tabs.Gq, xh_enc, q_held, float(enc.E),
                                           cfg.sigma, cfg.tau_max))
        steps = min(gap, sc.horizon - s)
        h_seq = [h0] + [adv.decide(s + i, False) for i in range(1, steps)]
        correct = not attacked
        if db:
            X, XH, U, Y, x, xh = kernels.advance_deadbeat(At, Bt, K, M, C, eta, x, xh, q_held, correct, steps)
            if checks:
                lim = DEADBEAT_ZERO_RTOL * max(1.0, float(np.max(np.abs(XH))))
                if np.max(np.abs(xh)) > lim:
                    raise InvariantBreach(f"deadbeat estimate not zero at the end of step {s + steps - 1}")
        else:
            X, XH, U, Y, x, xh = kernels.advance_standard(A, B, K, L, C, x, xh, q_held, correct, steps)
            XE, xh_enc = kernels.advance_observer(A, B, K, L, C, xh_enc, q_held, correct, steps)
            if not np.array_equal(XE, XH):
                raise InvariantBreach(f"encoder and controller estimates diverged after s={s}")
        if checks and not attacked:
            ys = Y[::eta]
            err = np.max(np.abs(ys - q_held), axis=1)
            lim = cfg.sigma_eff * enc.E * (1.0 + CHECK_RTOL) + CHECK_ATOL
            if np.any(err > lim):
                bad = int(np.argmax(err > lim))
                raise InvariantBreach(f"sampled-output drift {err[bad]:.6g} above sigma*E = {lim:.6g} "
                                      f"at s={s + bad}")
        rec.add(s, eta, X, XH, U, Y, idx, q_held, enc.E, enc.Ex, h_seq, True, not attacked)
        if attacked:
            enc = dos.resilient_E_update(cfg, enc, 1, True, omega_a, update)
        else:
            enc = update(cfg, enc, gap)
        enc = replace(enc, s_last=s, q_held=q_held)
        s += gap
    return rec.build(sc, samples)


@dataclass(frozen=True)
class DecayFit:
    Omega_hat: float
    omega_hat: float


def fit_envelope(norms, E_in: float = 1.0, burn_in: float = 0.1) -> DecayFit:
    """Log-linear fit of the non-increasing envelope of ``norms``."""
    v = np.asarray(norms, dtype=float)
    if v.size < 20 or np.count_nonzero(v) < 20:
        raise DegenerateTrace("need at least 20 steps with a nonzero state")
    if not E_in > 0:
        raise DomainError("E_in must be positive")
    env = np.maximum.accumulate(v[::-1])[::-1]
    s = np.arange(env.size)
    start = int(math.floor(burn_in * env.size))
    win = slice(start, int(np.count_nonzero(env > 0)))
    ss, ee = s[win], env[win]
    if ss.size < 2:
        raise DegenerateTrace("fit window too short")
    slope, _ = np.polyfit(ss, np.log(ee), 1)
    omega = float(math.exp(slope))
    Omega = float(np.max(ee / (E_in * omega ** ss.astype(float))))
    return DecayFit(Omega_hat=Omega, omega_hat=omega)


def estimate_decay(trace: SimTrace) -> DecayFit:
    return fit_envelope(trace.state_norms(), trace.E_in)


def summarize(sc: Scenario, trace: SimTrace) -> dict:
    out = dict(sc.bounds())
    try:
        fit = estimate_decay(trace)
        out["Omega_hat"], out["omega_hat"] = fit.Omega_hat, fit.omega_hat
    except DegenerateTrace:
        out["Omega_hat"] = out["omega_hat"] = None
    norms = trace.state_norms()
    out.update({
        "horizon": sc.horizon,
        "N": sc.N,
        "tau_max": sc.tau_max,
        "E_in": sc.E_in,
        "sample_count": trace.sample_count,
        "effective_attacks": trace.effective_attacks,
        "attack_steps": int(np.count_nonzero(trace.h[trace.k == 0])),
        "x0_norm": float(norms[0]),
        "x_final_norm": float(norms[-1]),
        "kernel_backend": kernels.BACKEND,
    })
    return out


def summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def _threads() -> int:
    raw = os.environ.get("STC_LOOP_THREADS", "").strip()
    n = int(raw) if raw else 0
    return n if n > 0 else (os.cpu_count() or 1)


def _sweep_point(base: Scenario, sigma, N, tau_max) -> dict:
    row = {"sigma": sigma, "N": N, "tau_max": tau_max}
    try:
        sc = base.with_(sigma=sigma, N=N, tau_max=tau_max, dos=dos.DosModel())
    except Infeasible as exc:
        row.update(feasible=False, reason=str(exc))
        return row
    tr = run_closed_loop(sc)
    b = sc.bounds()
    row.update(feasible=True, omega1=b["omega1"], omega_a=b["omega_a"], dos_bound=b["dos_bound"],
               sample_count=tr.sample_count)
    try:
        row["omega_hat"] = estimate_decay(tr).omega_hat
    except DegenerateTrace:
        row["omega_hat"] = None
    return row


def sweep_tradeoff(base: Scenario, sigma_grid, N_grid, tau_max_grid, threads: int | None = None) -> list:
    """One DoS-free run per grid point, rows in ``(sigma, N, tau_max)`` product order."""
    points = list(itertools.product(sigma_grid, N_grid, tau_max_grid))
    workers = min(threads or _threads(), max(1, len(points)))
    if workers == 1:
        return [_sweep_point(base, *p) for p in points]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: _sweep_point(base, *p), points))
