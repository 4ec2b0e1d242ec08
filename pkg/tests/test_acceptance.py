"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest -v tests/test_acceptance.py``; the summary lines are
also collected at the end of the pytest report.
"""
import time

import numpy as np
import pytest

from qstc import config, deadbeat, dos, matops, plant, quantizer, simkernel
from qstc.cli import data_path
from conftest import AC, BC, CY, record
from scenarios import random_scenario

DELTA = 0.005
SHIPPED = [f"reactor_{v}_N{N}" for v in ("standard", "deadbeat") for N in (11, 31, 101)]


def _scenario(name, **changes):
    sc = config.build_scenario(config.load_config(data_path(f"{name}.yaml")))
    return sc.with_(**changes) if changes else sc


def test_criterion_1_controllability_index():
    t = time.perf_counter()
    eta = plant.resolve_eta(AC, BC, DELTA)
    At, Bt = matops.discretize_zoh(AC, BC, DELTA / eta)
    idx = matops.controllability_index(At, Bt)
    dt = time.perf_counter() - t
    ok = eta == 2 and idx == 2 and dt < 1.0
    record(1, ok, f"eta scan = {eta}, controllability index = {idx}, {dt:.3f}s")
    assert ok


def test_criterion_2_deadbeat_synthesis():
    t = time.perf_counter()
    At, Bt = matops.discretize_zoh(AC, BC, DELTA / 2)
    K = deadbeat.design_deadbeat_gain(At, Bt)
    res = deadbeat.verify_deadbeat_gain(At, Bt, K, 2)
    lim = 1e-8 * matops.inf_norm(At) ** 2
    dt = time.perf_counter() - t
    ok = res <= lim and dt < 1.0
    record(2, ok, f"||(At + Bt K)^2|| = {res:.2e} <= {lim:.2e}, {dt:.3f}s")
    assert ok


def test_criterion_3_quantizer_bound():
    t = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = -np.inf
    per = 25_000
    for N in (2, 3, 11, 101):
        n_y = 2
        c = rng.normal(size=(per, n_y)) * 10
        E = rng.exponential(2.0, size=per)
        y = c + rng.uniform(-1, 1, size=(per, n_y)) * E[:, None]
        q = quantizer.quantize_many(N, c, E, y)
        worst = max(worst, float(np.max(np.max(np.abs(y - q), axis=1) - E / N)))
        # the scalar encode/decode path on a subset
        spec = quantizer.QuantizerSpec(N, n_y)
        for i in range(0, per, 50):
            _, v = quantizer.quantize(spec, quantizer.QuantizationFrame(c[i], float(E[i])), y[i])
            worst = max(worst, float(np.max(np.abs(y[i] - v)) - E[i] / N))
    dt = time.perf_counter() - t
    ok = worst <= 1e-12 and dt < 5.0
    record(3, ok, f"1e5 draws, max(||y - Q(y)|| - E/N) = {worst:.2e}, {dt:.2f}s")
    assert ok


RANDOM_RUNS = 1000


def _check_run(sc, tr):
    """Independent replay of the trigger and range properties from a trace."""
    cfg = sc.trigger
    G1 = cfg.c_norm * cfg.Gamma
    eta = sc.model.eta if sc.variant == "deadbeat" else 1
    drift, dom = 0.0, 0.0
    s_rows = tr.k == 0
    y, q, E = tr.y[s_rows], tr.q[s_rows], tr.E[s_rows]
    sampled = tr.sampled[s_rows].astype(bool)
    samp_idx = np.flatnonzero(sampled)
    for j, s0 in enumerate(samp_idx):
        s1 = samp_idx[j + 1] if j + 1 < len(samp_idx) else len(y)
        err = np.max(np.abs(y[s0:s1] - q[s0]), axis=1)
        drift = max(drift, float(np.max(err / (cfg.sigma_eff * E[s0]))) if E[s0] > 0 else 0.0)
    for s, Es, dev in tr.samples:
        dom = max(dom, dev / Es if Es > 0 else 0.0, Es / (G1 * sc.E_in * cfg.omega1 ** s))
    del eta
    return drift, dom


@pytest.fixture(scope="module")
def random_runs():
    out = {}
    for variant in ("standard", "deadbeat"):
        rng = np.random.default_rng({"standard": 11, "deadbeat": 12}[variant])
        t = time.perf_counter()
        drift = dom = 0.0
        failures = 0
        gaps = 0
        for _ in range(RANDOM_RUNS):
            sc = random_scenario(rng, variant)
            try:
                tr = simkernel.run_closed_loop(sc)
            except Exception:
                failures += 1
                continue
            d, m = _check_run(sc, tr)
            drift, dom = max(drift, d), max(dom, m)
            gaps += sc.horizon - tr.sample_count
        out[variant] = dict(time=time.perf_counter() - t, drift=drift, dom=dom, failures=failures, skipped=gaps)
    return out


def test_criterion_4_trigger_guarantee(random_runs):
    r = random_runs
    dt = sum(v["time"] for v in r.values())
    ok = all(v["failures"] == 0 and v["drift"] <= 1 + 1e-9 for v in r.values()) and dt < 60
    detail = "; ".join(f"{k}: {RANDOM_RUNS} runs, breaches {v['failures']}, max drift/(sigma E) = {v['drift']:.4f}, "
                       f"skipped samples {v['skipped']}" for k, v in r.items())
    record(4, ok, f"{detail}, {dt:.1f}s")
    assert ok


def test_criterion_5_range_domination(random_runs):
    r = random_runs
    ok = all(v["failures"] == 0 and v["dom"] <= 1 + 1e-9 for v in r.values())
    record(5, ok, "; ".join(f"{k}: max of ||y - yhat||/E and E/(Gamma1 E_in omega1^s) = {v['dom']:.4f}"
                            for k, v in r.items()))
    assert ok


def test_criterion_6_reactor_convergence():
    t = time.perf_counter()
    lines, ok = [], True
    for name in SHIPPED:
        sc = _scenario(name)
        assert sc.sigma == 0.0343 and sc.tau_max == 20 and sc.model.Delta == DELTA and sc.horizon == 400
        tr = simkernel.run_closed_loop(sc)
        norms = tr.state_norms()
        hit = np.flatnonzero(norms < 1e-3 * norms[0])
        fit = simkernel.estimate_decay(tr)
        good = hit.size > 0 and fit.omega_hat < 1
        if sc.variant == "deadbeat":
            good &= fit.omega_hat <= sc.trigger.omega1 + 0.02
        ok &= bool(good)
        first = int(hit[0]) if hit.size else None
        lines.append(f"{name}: min |x|/|x0| = {norms.min() / norms[0]:.2e}, first below 1e-3 at {first}, "
                     f"omega_hat = {fit.omega_hat:.4f}, omega1 = {sc.trigger.omega1:.4f}")
    dt = time.perf_counter() - t
    ok &= dt < 10
    record(6, ok, "; ".join(lines) + f"; {dt:.2f}s")
    assert ok


def test_criterion_7_resilience():
    t = time.perf_counter()
    lines, ok = [], True
    for variant in ("standard", "deadbeat"):
        base = _scenario(f"reactor_{variant}_N101")
        bound = base.bounds()
        frac = 0.9 * bound["dos_bound"]
        worst = 0.0
        attacks = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x0 = rng.uniform(-1, 1, 4)
            x0 /= np.max(np.abs(x0))
            sc = base.with_(x0=x0, dos=dos.DosModel(kappa_d=1.0, nu_d=1.0 / frac, mode="worst-case", seed=seed))
            tr = simkernel.run_closed_loop(sc)
            assert dos.duration_ok(tr.h[tr.k == 0], 1.0, 1.0 / frac)
            worst = max(worst, simkernel.estimate_decay(tr).omega_hat)
            attacks.append(tr.effective_attacks)
        ok &= worst < 1
        lines.append(f"{variant}: dos_bound = {bound['dos_bound']:.4f} (omega1 = {bound['omega1']:.5f}, "
                     f"omega_a = {bound['omega_a']:.4f}), 1/nu_d = {frac:.4f}, attacks {min(attacks)}-{max(attacks)}"
                     f", worst omega_hat = {worst:.4f}")
    dt = time.perf_counter() - t
    ok &= dt < 30
    record(7, ok, "; ".join(lines) + f"; {dt:.1f}s")
    assert ok


def test_criterion_8_tradeoff():
    t = time.perf_counter()
    lines, ok = [], True
    for variant in ("standard", "deadbeat"):
        base = _scenario(f"reactor_{variant}_N101")
        cfg = base.trigger
        lo, hi = 1.0 / cfg.N, 1.0 / cfg.alpha
        grid = np.linspace(lo, hi, 41)[:-1]
        omega_a = base.omega_a
        vals = []
        for s in grid:
            trig = base.with_(sigma=float(s)).trigger
            vals.append(dos.dos_bound(trig.omega1, omega_a))
        mono = bool(np.all(np.diff(vals) < 0))
        n1 = simkernel.run_closed_loop(base.with_(sigma=0.0193)).sample_count
        n2 = simkernel.run_closed_loop(base.with_(sigma=0.0343)).sample_count
        ok &= mono and n2 <= n1
        lines.append(f"{variant}: dos_bound strictly decreasing over {len(grid)} sigmas = {mono} "
                     f"({vals[0]:.4f} -> {vals[-1]:.4f}), samples at 0.0193/0.0343 = {n1}/{n2}")
    dt = time.perf_counter() - t
    ok &= dt < 30
    record(8, ok, "; ".join(lines) + f"; {dt:.1f}s")
    assert ok


def test_criterion_9_reduction(tmp_path):
    from qstc import cli
    ok = True
    for name in SHIPPED + ["fig5_standard_dos", "fig5_deadbeat_dos"]:
        sc = _scenario(name)
        a = simkernel.run_closed_loop(sc).to_csv()
        ok &= a == simkernel.run_closed_loop(sc).to_csv()
        if sc.dos.mode == "none":
            zero = sc.with_(dos=dos.DosModel(mode="scripted", schedule=(0,) * sc.horizon))
            ok &= a == simkernel.run_closed_loop(zero).to_csv()
    outs = []
    for i in range(2):
        d = tmp_path / str(i)
        cli.main(["simulate", "--config", str(data_path("fig5_standard_dos.yaml")), "--out", str(d)])
        outs.append([(d / f).read_bytes() for f in ("trace.csv", "summary.json", "resolved_config.yaml")])
    d = tmp_path / "echo"
    cli.main(["simulate", "--config", str(tmp_path / "0" / "resolved_config.yaml"), "--out", str(d)])
    outs.append([(d / f).read_bytes() for f in ("trace.csv", "summary.json", "resolved_config.yaml")])
    ok &= outs[0] == outs[1] == outs[2]
    record(9, ok, "none vs all-zero schedule identical, reruns and config echo byte-identical" if ok
           else "trace mismatch")
    assert ok
