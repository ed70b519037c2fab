import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crimedelay import (BlowUpError, ConfigError, DomainError, HistoryFunction, IntegratorConfig, LawEnforcement,
                        ModelParams, PositivityError, convergence_order, integrate, solve_dde)
from crimedelay.equilibria import coexistence
from crimedelay.integrator import Trajectory

from oracles import logistic_exact, surrogate_exact


def fig_params(eta=0.1, le=0.51, tau=2.0, **kw):
    base = dict(phi=1.0, nu=0.9, sigma=0.4, gamma=1.4, eta=eta, tau=tau,
                enforcement=LawEnforcement.constant(le))
    base.update(kw)
    return ModelParams(**base)


def surrogate(t, x, xd):
    return -xd


def unit_history(s):
    return np.ones((np.size(s), 1)) if np.ndim(s) else np.array([1.0])


def test_surrogate_closed_form_first_two_intervals():
    tr = solve_dde(surrogate, unit_history, 1.0, 2.0, 1 / 8)
    ts = np.linspace(0, 2, 161)
    assert np.max(np.abs(tr.evaluate(ts)[:, 0] - surrogate_exact(ts))) <= 1e-10
    t1 = np.linspace(0, 1, 11)
    assert np.allclose(tr.evaluate(t1)[:, 0], 1 - t1, atol=1e-14)
    t2 = np.linspace(1, 2, 11)
    assert np.allclose(tr.evaluate(t2)[:, 0], 1 - t2 + (t2 - 1) ** 2 / 2, atol=1e-14)


def test_evaluate_exact_at_nodes_and_endpoint():
    p = fig_params(eta=0.4)
    tr = integrate(p, HistoryFunction.constant(0.3, 1.0), IntegratorConfig(step=0.05, t_end=10))
    t, x = tr.solution
    assert np.array_equal(tr.evaluate(t[::7]), x[::7])
    assert np.array_equal(tr.evaluate(tr.t1), tr.final_state)
    with pytest.raises(DomainError):
        tr.evaluate(10.5)
    with pytest.raises(DomainError):
        tr.evaluate(-2.5)


def test_hermite_reproduces_cubics():
    mesh = np.array([0.0, 0.3, 1.0, 1.7])
    poly = lambda t: 2 - t + 0.5 * t ** 2 - 0.25 * t ** 3
    dpoly = lambda t: -1 + t - 0.75 * t ** 2
    tr = Trajectory(t0=0.0, t1=1.7, tau=0.0, step=0.3, mesh=mesh, states=poly(mesh)[:, None],
                    derivs=dpoly(mesh)[:, None], start_index=0)
    ts = np.linspace(0, 1.7, 101)
    assert np.max(np.abs(tr.evaluate(ts)[:, 0] - poly(ts))) <= 1e-14


def test_breaking_points_on_mesh():
    p = fig_params(tau=1.3)
    tr = integrate(p, HistoryFunction.constant(0.5, 0.5), IntegratorConfig(step=0.07, t_end=20))
    t, _ = tr.solution
    for k in range(math.ceil(20 / 1.3)):
        assert k * 1.3 in set(t.tolist())
    assert t[-1] == 20.0
    assert np.all(np.diff(tr.mesh) > 0)
    assert tr.mesh[0] == pytest.approx(-1.3)


def test_mesh_step_divides_tau():
    cfg = IntegratorConfig(step=0.07)
    h = cfg.mesh_step(2.0)
    assert (2.0 / h) == pytest.approx(round(2.0 / h), abs=1e-12)
    assert round(2.0 / h) >= 4
    assert IntegratorConfig(step=5.0).mesh_step(2.0) == 0.5
    assert cfg.mesh_step(0.0) == 0.07


def test_equilibrium_history_is_fixed_point():
    p = fig_params()
    n, c = coexistence(p).candidate
    tr = integrate(p, HistoryFunction.constant(n, c), IntegratorConfig(step=0.05, t_end=100))
    _, x = tr.solution
    assert np.max(np.abs(x - [n, c])) <= 1e-9


def test_convergence_order_surrogate():
    r = convergence_order(surrogate, unit_history, [1 / 8, 1 / 16, 1 / 32], 6.0, tau=1.0,
                          exact=lambda g: surrogate_exact(g)[:, None])
    assert r.order == pytest.approx(4.0, abs=0.3)
    assert r.monotone


def test_convergence_order_logistic_ode():
    p = fig_params(tau=0.0)
    hist = lambda s: np.array([0.2, 0.0]) if np.ndim(s) == 0 else np.tile([0.2, 0.0], (np.size(s), 1))
    exact = lambda g: np.column_stack([logistic_exact(g, 1.0, 1.0, 0.2), np.zeros_like(g)])
    r = convergence_order(p, hist, [0.4, 0.2, 0.1], 8.0, exact=exact, window_start=0.0)
    assert r.order == pytest.approx(4.0, abs=0.3)


def test_convergence_order_equilibrium_is_exact():
    p = fig_params()
    n, c = coexistence(p).candidate
    r = convergence_order(p, HistoryFunction.constant(n, c), [0.5, 0.25, 0.125], 10.0)
    assert r.exact and r.order is None


def test_convergence_order_rejects_bad_steps():
    with pytest.raises(ConfigError):
        convergence_order(surrogate, unit_history, [1 / 8, 1 / 16], 4.0, tau=1.0)
    with pytest.raises(ConfigError):
        convergence_order(surrogate, unit_history, [0.3, 0.15, 0.075], 4.0, tau=1.0)


def test_invalid_history_rejected():
    p = fig_params()
    h = HistoryFunction.sampled([-1.0, 0.0], [[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ConfigError):
        integrate(p, h, IntegratorConfig(step=0.05, t_end=1))


def test_blow_up_guard():
    p = fig_params()
    with pytest.raises(BlowUpError):
        integrate(p, HistoryFunction.constant(0.5, 0.5), IntegratorConfig(step=0.05, t_end=50, max_norm=1.0))


def test_reject_mode_flags_undershoot():
    # forward Euler-like overshoot: huge step on a fast decaying C
    p = fig_params(tau=0.0, eta=40.0)
    with pytest.raises(PositivityError):
        integrate(p, HistoryFunction.constant(0.5, 0.5), IntegratorConfig(step=0.2, t_end=5, positivity_mode="reject"))


def test_determinism_bitwise():
    p = fig_params(enforcement=LawEnforcement.sinusoidal(0.2, 4, 0.5))
    cfg = IntegratorConfig(step=0.05, t_end=40)
    a = integrate(p, HistoryFunction.constant(1.5, 1.5), cfg)
    b = integrate(p, HistoryFunction.constant(1.5, 1.5), cfg)
    assert np.array_equal(a.states, b.states)


def test_continuation_matches_single_run():
    p = fig_params()
    cfg = IntegratorConfig(step=0.05, t_end=30)
    full = integrate(p, HistoryFunction.constant(1.5, 1.5), cfg)
    first = integrate(p, HistoryFunction.constant(1.5, 1.5), IntegratorConfig(step=0.05, t_end=10))
    rest = integrate(p, first.tail_history(), IntegratorConfig(step=0.05, t_end=20), t0=10.0)
    assert np.max(np.abs(rest.final_state - full.final_state)) <= 1e-10


def test_csv_export(tmp_path):
    p = fig_params(eta=0.4)
    tr = integrate(p, HistoryFunction.constant(0.3, 1.0), IntegratorConfig(step=0.5, t_end=2))
    path = tmp_path / "t.csv"
    tr.to_csv(path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "t,N,C"
    t, n, c = (float(v) for v in lines[-1].split(","))
    assert (n, c) == tuple(tr.final_state)


def test_tiny_delay_rejected():
    # the step is tau/m, so a vanishing delay would need an unbounded number of steps
    with pytest.raises(ConfigError):
        integrate(fig_params(tau=1e-100), HistoryFunction.constant(1.0, 1.0), IntegratorConfig(step=0.05, t_end=15))


@settings(max_examples=25, deadline=None)
@given(eta=st.floats(0.05, 1.0), le=st.floats(0.0, 1.0), gamma=st.floats(0.2, 2.5),
       sigma_frac=st.floats(0.0, 0.999), tau=st.just(0.0) | st.floats(0.05, 3.0),
       n0=st.floats(0.01, 3.0), c0=st.floats(0.01, 3.0))
def test_positivity_and_envelope_property(eta, le, gamma, sigma_frac, tau, n0, c0):
    # sigma below phi/(nu + N_max) keeps N in [0, N_max], the bounded regime
    sigma = sigma_frac * 1.0 / (0.9 + max(1.0, n0))
    p = fig_params(eta=eta, le=le, gamma=gamma, sigma=sigma, tau=tau)
    tr = integrate(p, HistoryFunction.constant(n0, c0), IntegratorConfig(step=0.05, t_end=15))
    assert tr.min_raw >= -1e-10
    t, x = tr.solution
    assert np.all(x >= 0)
    assert np.all(x[:, 1] <= 1.05 * c0 * np.exp(gamma * t) + 1e-12)
    assert tr.diagnostics["n_envelope_ok"]
