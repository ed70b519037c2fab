"""Acceptance suite: one test per numbered criterion.

Each test is tagged with ``criterion(n)``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import math
import time
import timeit
from decimal import Decimal, getcontext
from fractions import Fraction as Fr
from pathlib import Path

import numpy as np
import pytest

from crimedelay import (GrowthFunction, HistoryFunction, IntegratorConfig, LawEnforcement, ModelParams, Regime,
                        analyze, characteristic_coeffs, convergence_order, crossings, find_periodic, integrate,
                        ledger, linearize, root_scan)
from crimedelay.cli import main
from crimedelay.config import bundled_scenarios, load_scenario
from crimedelay.equilibria import coexistence
from crimedelay.periodic import Applicable, average_identity_check, delayed_average_identity_check
from crimedelay.stability import EPS_CLS, RootLabel, classify_hF0
from crimedelay.sweep import sweep

from oracles import coexistence_exact, criminal_free_coeffs_exact, hF0, quartic_positive_roots, surrogate_exact


def fig_params(eta=0.1, le=0.51, tau=2.0, **kw):
    base = dict(phi=1.0, nu=0.9, sigma=0.4, gamma=1.4, eta=eta, tau=tau,
                enforcement=LawEnforcement.constant(le))
    base.update(kw)
    return ModelParams(**base)


def best_time(fn, number):
    return min(timeit.repeat(fn, number=number, repeat=5)) / number


@pytest.mark.criterion(1)
def test_c01_coexistence_equilibrium():
    p = fig_params()
    n, c = coexistence(p).point
    assert abs(n - 0.6949) <= 1e-3 and abs(c - 1.344) <= 1e-3
    ne, ce = coexistence_exact(Fr(1, 10), Fr(51, 100))
    assert (n, c) == pytest.approx((float(ne), float(ce)), abs=1e-14)
    assert best_time(lambda: coexistence(p), 200) < 1e-3


@pytest.mark.criterion(2)
def test_c02_criminal_free_stability_flip():
    t = time.perf_counter()
    p = fig_params(eta=0.4)
    cf = {a.equilibrium: a for a in analyze(p)}["criminal_free"]
    assert cf.verdict.regime is Regime.STABLE_ALL_TAU
    tr = integrate(p, HistoryFunction.constant(0.3, 1.0), IntegratorConfig(step=0.05, t_end=200))
    assert np.max(np.abs(tr.final_state - [1.0, 0.0])) <= 1e-3
    assert time.perf_counter() - t < 1.0

    t = time.perf_counter()
    p = fig_params(eta=0.1)
    cf = {a.equilibrium: a for a in analyze(p)}["criminal_free"]
    assert cf.verdict.regime is Regime.UNSTABLE_ALL_TAU
    tr = integrate(p, HistoryFunction.constant(1.1, 0.1), IntegratorConfig(step=0.05, t_end=200))
    _, x = tr.solution
    assert np.max(np.hypot(x[:, 0] - 1.0, x[:, 1])) > 5e-2
    assert time.perf_counter() - t < 1.0


def _random_problem(rng):
    """A valid parameter set and history in the bounded regime.

    The counteroffensive rate is kept below phi/(nu+N_max) so the uptake
    term dominates for every N the trajectory can reach.
    """
    phi, nu, m = rng.uniform(0.5, 2), rng.uniform(0.3, 2), rng.uniform(0.5, 2)
    tau = rng.uniform(0, 3)
    if rng.random() < 0.5:
        hist = HistoryFunction.constant(rng.uniform(0.01, 3), rng.uniform(0.01, 3))
        n_max = max(m, hist.n0)
    else:
        grid = np.linspace(-max(tau, 1e-3), 0, 9)
        vals = rng.uniform(0, 3, (9, 2))
        vals[-1] = rng.uniform(0.01, 3, 2)
        hist = HistoryFunction.sampled(grid, vals)
        n_max = max(m, vals[:, 0].max() * 1.1)
    if rng.random() < 0.5:
        enf = LawEnforcement.constant(rng.uniform(0, 1))
    else:
        enf = LawEnforcement.sinusoidal(0.2, rng.uniform(1, 5), rng.uniform(0.2, 1))
    p = ModelParams(phi=phi, nu=nu, sigma=rng.uniform(0, 1) * phi / (nu + n_max), eta=rng.uniform(0.05, 1),
                    gamma=rng.uniform(0.2, 2.5), tau=tau, growth=GrowthFunction.logistic(rng.uniform(0.5, 2), m),
                    enforcement=enf)
    return p, hist


@pytest.mark.criterion(3)
def test_c03_positivity_random_draws():
    rng = np.random.default_rng(20240601)
    t = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        p, hist = _random_problem(rng)
        tr = integrate(p, hist, IntegratorConfig(step=0.05, t_end=20))
        worst = min(worst, tr.min_raw)
        assert np.all(np.isfinite(tr.states))
    assert worst >= -1e-10
    assert time.perf_counter() - t < 60


@pytest.mark.criterion(4)
def test_c04_integrator_order():
    t = time.perf_counter()
    r = convergence_order(lambda t, x, xd: -xd, lambda s: np.ones((np.size(s), 1)) if np.ndim(s) else np.ones(1),
                          [1 / 8, 1 / 16, 1 / 32], 6.0, tau=1.0, exact=lambda g: surrogate_exact(g)[:, None])
    assert abs(r.order - 4.0) <= 0.3
    assert time.perf_counter() - t < 1.0


@pytest.mark.criterion(5)
def test_c05_classifier_vs_quartic_roots():
    rng = np.random.default_rng(5)
    draws = rng.uniform(-10, 10, (10_000, 2))
    # a slice of draws concentrated near the boundaries
    draws[:1000, 1] = draws[:1000, 0] ** 2 / 4 + rng.normal(0, 1e-3, 1000)
    draws[1000:2000, 1] = rng.normal(0, 1e-3, 1000)
    t = time.perf_counter()
    mismatches, checked = [], 0
    for h, F0 in draws:
        if abs(h) <= EPS_CLS or abs(F0) <= EPS_CLS or abs(h * h - 4 * F0) <= 4 * EPS_CLS:
            continue
        checked += 1
        rc = classify_hF0(h, F0)
        roots = quartic_positive_roots(h, F0)
        expect = {0: RootLabel.NO_POSITIVE_ROOTS, 1: RootLabel.ONE_TRANSVERSAL_ROOT, 2: RootLabel.TWO_ROOTS}
        if rc.label is not expect[len(roots)] or not np.allclose(rc.roots, roots, rtol=1e-5, atol=1e-7):
            mismatches.append((h, F0, rc.label, roots))
    elapsed = time.perf_counter() - t
    assert checked > 9_900
    assert not mismatches, mismatches[:5]
    assert elapsed < 10


def _sqrt_decimal(x: Fr, digits=40) -> Decimal:
    getcontext().prec = digits
    return (Decimal(x.numerator) / Decimal(x.denominator)).sqrt()


@pytest.mark.criterion(6)
def test_c06_crossing_fig1b():
    t = time.perf_counter()
    # rational oracle: s^2 = (-h + sqrt(h^2 - 4 F0)) / 2 with exact h, F0
    h, F0 = hF0(*criminal_free_coeffs_exact(Fr(1, 10), Fr(51, 100)))
    disc = h * h - 4 * F0
    getcontext().prec = 40
    s2 = (-Decimal(h.numerator) / Decimal(h.denominator) + _sqrt_decimal(disc)) / 2
    lam_oracle = float(s2.sqrt())
    assert lam_oracle == pytest.approx(0.41333, abs=1e-4)

    c = characteristic_coeffs(*linearize((1.0, 0.0), fig_params(eta=0.1)))
    e = crossings(c).by_index(2)
    assert e is not None
    assert abs(e.lambda2k - 0.41333) <= 1e-4
    assert e.lambda2k == pytest.approx(lam_oracle, abs=1e-12)
    assert abs(c.P(1j * e.lambda2k, e.tauk)) <= 1e-9
    roots = root_scan(c, e.tauk, (-0.1, 0.1, 0.3, 0.5))
    assert len(roots) == 1 and abs(roots[0] - 1j * e.lambda2k) <= 1e-8
    assert time.perf_counter() - t < 5


def fig5(tau):
    return fig_params(tau=tau, enforcement=LawEnforcement.sinusoidal(0.2, 4.0, 0.5))


@pytest.mark.criterion(7)
def test_c07_periodic_orbits_fig5():
    t = time.perf_counter()
    failures = []
    orbits = {}
    for tau in (0.0, 2.0):
        p = fig5(tau)
        res = find_periodic(p, HistoryFunction.constant(1.5, 1.5))
        orbits[tau] = res
        if not (res.converged and res.positive and min(res.min_state) > 0):
            failures.append(f"tau={tau}: not a positive converged orbit")
        if not res.residual <= 1e-8:
            failures.append(f"tau={tau}: return residual {res.residual:.3g} > 1e-8")
        ident = average_identity_check(res, p)
        if not ident <= 1e-6:
            failures.append(f"tau={tau}: average identity residual {ident:.3g} > 1e-6 "
                            f"(delayed-argument form {delayed_average_identity_check(res, p):.3g})")
    # sup-distance over a common window of one forcing period (orbit phase is fixed by the forcing)
    T = 8 * math.pi
    s = np.linspace(0.0, T, 2001)
    a, b = orbits[0.0], orbits[2.0]
    d = np.max(np.abs(a.orbit.evaluate(a.orbit.t0 + s) - b.orbit.evaluate(b.orbit.t0 + s)))
    if not d > 1e-3:
        failures.append(f"orbits coincide (sup-distance {d:.3g})")
    elapsed = time.perf_counter() - t
    if not elapsed < 60:
        failures.append(f"runtime {elapsed:.1f}s")
    assert not failures, "; ".join(failures)


@pytest.mark.criterion(8)
def test_c08_condition_ledger():
    p = fig5(2.0)
    led = ledger(p)
    d = Fr(1, 10) + Fr(1, 2)
    lam = d / Fr(7, 5)
    K = lam * Fr(9, 10) / (1 - lam)
    assert abs(led.Lambda - float(lam)) <= 1e-12 and abs(led.Lambda - 0.428571) < 1e-6
    assert abs(led.K - float(K)) <= 1e-12 and abs(led.K - 0.675) < 1e-12
    assert abs(led.le_mean - 0.5) <= 1e-12
    assert abs(led.sigma_small.lhs - float(1 / (Fr(9, 10) + K))) <= 1e-12
    assert led.sigma_small.holds and led.k_small.holds and led.gamma_gt.holds
    assert abs(led.gamma_gt.margin - float(Fr(7, 5) - d)) <= 1e-12
    assert abs(led.removal_large.rhs - float(Fr(7, 5) / Fr(19, 10))) <= 1e-12
    assert led.applicable is Applicable.THM2
    assert best_time(lambda: ledger(p), 200) < 1e-3


@pytest.mark.criterion(9)
def test_c09_sweep_boundary():
    sc = load_scenario("fig1_sweep")
    t = time.perf_counter()
    header, rows = sweep(sc.params, sc.sweep_axes, sc.sweep_equilibria, threads=4)
    elapsed = time.perf_counter() - t
    etas, les = np.array(sc.sweep_axes[0].values), np.array(sc.sweep_axes[1].values)
    assert (len(etas), len(les)) == (60, 60)
    iv = header.index("verdict")
    stable = np.array([r[iv] == "StableAllTau" for r in rows]).reshape(60, 60)
    assert stable.any() and not stable.all()
    # analytic: stable iff N_dag (gamma - d) < nu d, with N_dag = 1
    d = etas[:, None] + les[None, :]
    g = 1.0 * (1.4 - d) - 0.9 * d
    cell = (etas[1] - etas[0]) + (les[1] - les[0])
    wrong = (stable != (g < 0))
    # any disagreement must sit within one grid cell of the curve
    d_star = 1.4 / 1.9
    assert np.all(np.abs(d[wrong] - d_star) <= cell)
    # and the verdict changes only across the curve
    for axis in (0, 1):
        flips = np.argwhere(np.diff(stable.astype(int), axis=axis) != 0)
        for i, j in flips:
            i2, j2 = (i + 1, j) if axis == 0 else (i, j + 1)
            lo, hi = sorted((d[i, j], d[i2, j2]))
            assert lo - cell <= d_star <= hi + cell
    assert elapsed < 30


@pytest.mark.criterion(10)
def test_c10_determinism(tmp_path):
    names = bundled_scenarios()
    assert {"fig1a", "fig1b", "fig3", "fig5_tau0", "fig5_tau2"} <= set(names)
    for name in names:
        outs = []
        for run in (1, 2):
            out = tmp_path / f"{name}_{run}"
            assert main(["run", name, "--out", str(out)]) == 0
            outs.append({f.name: f.read_bytes() for f in sorted(Path(out).iterdir())})
        assert outs[0].keys() == outs[1].keys()
        for f in outs[0]:
            assert outs[0][f] == outs[1][f], f"{name}/{f} differs between runs"
