import numpy as np
import pytest

from qstc import dos, kernels, plant, simkernel
from qstc.standard import GainSet
from qstc.errors import DegenerateTrace, DomainError
from scenarios import random_scenario


@pytest.fixture(scope="module")
def sc_std():
    return random_scenario(np.random.default_rng(3), "standard")


@pytest.fixture(scope="module")
def sc_db():
    return random_scenario(np.random.default_rng(4), "deadbeat")


@pytest.mark.parametrize("which", ["sc_std", "sc_db"])
def test_zero_initial_state(which, request):
    base = request.getfixturevalue(which)
    # odd N puts a reconstruction level on the center, so the zero output is quantized exactly
    sc = base.with_(x0=np.zeros(base.model.n_x), N=base.N | 1)
    tr = simkernel.run_closed_loop(sc)
    assert not tr.x.any() and not tr.u.any() and not tr.q.any()


def test_zero_state_hits_cap():
    """Integrator with A = 1: the drift bound is E/N, below sigma*E, so every gap is tau_max."""
    m = plant.from_discrete([[1.0]], [[1.0]], [[1.0]])
    g = GainSet(K=[[-0.5]], L=[[0.5]])
    sc = simkernel.Scenario(model=m, gains=g, sigma=0.2, tau_max=7, N=11, E_in=1.0, x0=[0.0], horizon=50)
    tr = simkernel.run_closed_loop(sc)
    assert not tr.x.any() and not tr.u.any()
    assert np.array_equal(tr.s[tr.sampled == 1], np.arange(0, 50, 7))


@pytest.mark.parametrize("which", ["sc_std", "sc_db"])
def test_deterministic(which, request):
    sc = request.getfixturevalue(which)
    assert simkernel.run_closed_loop(sc).to_csv() == simkernel.run_closed_loop(sc).to_csv()


@pytest.mark.parametrize("which", ["sc_std", "sc_db"])
def test_none_equals_zero_schedule(which, request):
    sc = request.getfixturevalue(which)
    zero = sc.with_(dos=dos.DosModel(mode="scripted", schedule=(0,) * sc.horizon))
    assert simkernel.run_closed_loop(sc).to_csv() == simkernel.run_closed_loop(zero).to_csv()


def test_trace_shape(sc_std, sc_db):
    for sc in (sc_std, sc_db):
        tr = simkernel.run_closed_loop(sc)
        eta = sc.model.eta if sc.variant == "deadbeat" else 1
        assert len(tr.s) == sc.horizon * eta
        assert tr.state_norms().shape == (sc.horizon,)
        assert tr.header()[:3] == ["s", "k", "x0"]
        assert tr.to_csv().count("\n") == len(tr.s) + 1
        assert tr.sampled[0] == 1


def test_deadbeat_estimate_returns_to_zero(sc_db):
    tr = simkernel.run_closed_loop(sc_db)
    eta = sc_db.model.eta
    # the row after the last sub-step of each step carries the next start, which must be M q
    starts = tr.xhat[::eta]
    q = tr.q[::eta]
    np.testing.assert_allclose(starts[1:], (sc_db.gains.M @ q[1:].T).T, atol=1e-9)


def test_attacked_run_records_losses(sc_std):
    h = [1 if s % 5 == 0 else 0 for s in range(sc_std.horizon)]
    sc = sc_std.with_(dos=dos.DosModel(kappa_d=1, nu_d=4, mode="scripted", schedule=tuple(h)))
    tr = simkernel.run_closed_loop(sc)
    assert np.array_equal(tr.ack, 1 - tr.h) or np.all(tr.ack[tr.sampled == 1] == 1 - tr.h[tr.sampled == 1])
    lost = np.flatnonzero(tr.sampled & tr.h)
    for i in lost:
        assert tr.sampled[i + 1] == 1 if i + 1 < len(tr.s) else True
        if i + 1 < len(tr.s):
            assert tr.Ex[i + 1] == pytest.approx(sc.omega_a * tr.Ex[i])


def test_x0_above_E_in(sc_std):
    with pytest.raises(DomainError):
        sc_std.with_(x0=np.full(sc_std.model.n_x, 10.0 * sc_std.E_in))


def test_fit_envelope_synthetic():
    s = np.arange(200)
    fit = simkernel.fit_envelope(2.0 * 0.9 ** s, E_in=1.0)
    assert fit.omega_hat == pytest.approx(0.9, rel=1e-9)
    assert fit.Omega_hat == pytest.approx(2.0, rel=1e-6)
    fit = simkernel.fit_envelope(np.full(100, 0.5))
    assert fit.omega_hat == pytest.approx(1.0)
    with pytest.raises(DegenerateTrace):
        simkernel.fit_envelope(np.zeros(100))
    with pytest.raises(DegenerateTrace):
        simkernel.fit_envelope(np.ones(5))


def test_envelope_dominates():
    rng = np.random.default_rng(0)
    v = 0.95 ** np.arange(300) * rng.uniform(0.2, 1.0, 300)
    fit = simkernel.fit_envelope(v)
    env = np.maximum.accumulate(v[::-1])[::-1]
    s = np.arange(300)[30:]
    assert np.all(env[30:] <= fit.Omega_hat * fit.omega_hat ** s * (1 + 1e-12))


def test_sweep_single_point_matches(sc_std):
    rows = simkernel.sweep_tradeoff(sc_std, [sc_std.sigma], [sc_std.N], [sc_std.tau_max], threads=1)
    tr = simkernel.run_closed_loop(sc_std)
    b = sc_std.bounds()
    assert rows[0]["sample_count"] == tr.sample_count
    assert rows[0]["omega1"] == b["omega1"] and rows[0]["dos_bound"] == b["dos_bound"]
    assert rows[0]["omega_hat"] == simkernel.estimate_decay(tr).omega_hat


def test_sweep_threads_agree(sc_std):
    lo, hi = 1.0 / sc_std.N, 1.0 / sc_std.trigger.alpha
    grid = list(np.linspace(lo, hi * 0.99, 4)) + [hi * 1.5]
    a = simkernel.sweep_tradeoff(sc_std, grid, [sc_std.N], [5], threads=1)
    b = simkernel.sweep_tradeoff(sc_std, grid, [sc_std.N], [5], threads=3)
    assert a == b
    assert a[-1]["feasible"] is False
    bounds = [r["dos_bound"] for r in a if r["feasible"] and r["dos_bound"] is not None]
    assert all(x > y for x, y in zip(bounds, bounds[1:]))


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
