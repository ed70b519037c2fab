"""Periodic forcing: existence-condition ledgers and a periodic-orbit finder.

With a ``T``-periodic enforcement signal the model has no equilibria, but it
may have positive ``T``-periodic solutions.  This module

* evaluates the inequalities under which such solutions are known to exist,
* evaluates the averaged map ``Phi`` and the sign of its Jacobian at the zero,
* locates attracting periodic orbits numerically by iterating the
  period map (with Newton acceleration when there is no delay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from .equilibria import criminal_free_level
from .errors import ConfigError, ConvergenceError, DegenerateCertificateError, NumericalFault, PositivityError
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import HistoryFunction, ModelParams, StateVec

PERIODIC_TOL = 1e-8
SECTION_SAMPLES = 64
NOMINAL_PERIOD = 10.0


# ---------------------------------------------------------------------------
# condition ledger
# ---------------------------------------------------------------------------


class Applicable(str, Enum):
    THM1 = "Thm1"
    THM2 = "Thm2"
    NEITHER = "Neither"


@dataclass(frozen=True)
class Condition:
    """A strict inequality ``lhs > rhs`` with its margin ``lhs - rhs``."""

    name: str
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return bool(self.lhs > self.rhs)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin, "holds": self.holds}


@dataclass(frozen=True)
class ConditionLedger:
    le_mean: float
    Lambda: float
    K: float
    n_dagger: float
    gamma_gt: Condition
    sigma_large: Condition
    removal_large: Condition
    f_unbounded_below: bool
    sigma_small: Condition
    k_small: Condition
    applicable: Applicable
    notes: Tuple[str, ...] = ()

    @property
    def thm1(self) -> Dict[str, bool]:
        return {"sigma_gt_phi_over_nu": self.sigma_large.holds,
                "removal_gt_uptake_at_n_dagger": self.removal_large.holds,
                "f_to_minus_infinity": self.f_unbounded_below}

    @property
    def thm2(self) -> Dict[str, bool]:
        return {"sigma_lt_phi_over_nu_plus_K": self.sigma_small.holds, "K_lt_n_dagger": self.k_small.holds}

    def to_dict(self) -> dict:
        return {
            "le_mean": self.le_mean, "Lambda": self.Lambda, "K": self.K, "n_dagger": self.n_dagger,
            "gamma_gt": self.gamma_gt.to_dict(),
            "thm1": [self.sigma_large.to_dict(), self.removal_large.to_dict(),
                     {"name": "f -> -inf", "holds": self.f_unbounded_below}],
            "thm2": [self.sigma_small.to_dict(), self.k_small.to_dict()],
            "applicable": self.applicable.value,
            "notes": list(self.notes),
        }


def ledger(p: ModelParams) -> ConditionLedger:
    """Evaluate both sets of sufficient conditions for a positive periodic solution."""
    lbar = p.le_mean
    d = p.eta + lbar
    n_dag = criminal_free_level(p.growth)
    lam = d / p.gamma
    notes = []
    if lam < 1:
        K = lam * p.nu / (1.0 - lam)
    else:
        K = math.inf
        notes.append("Lambda >= 1: necessary condition gamma > eta + mean(le) fails")
    gamma_gt = Condition("gamma > eta + mean(le)", p.gamma, d)
    sigma_large = Condition("sigma > phi/nu", p.sigma, p.phi / p.nu)
    removal_large = Condition("eta + mean(le) > gamma N_dag/(nu + N_dag)", d, p.gamma * n_dag / (p.nu + n_dag))
    sigma_small = Condition("phi/(nu + K) > sigma", p.phi / (p.nu + K), p.sigma)
    k_small = Condition("N_dag > K", n_dag, K)
    if gamma_gt.holds and sigma_large.holds and removal_large.holds:
        applicable = Applicable.THM1
    elif gamma_gt.holds and sigma_small.holds and k_small.holds:
        applicable = Applicable.THM2
    else:
        applicable = Applicable.NEITHER
    if applicable is Applicable.THM1 and not p.growth.unbounded_below:
        notes.append("growth function does not tend to -inf; stronger Thm1 hypothesis not verified")
    return ConditionLedger(lbar, lam, K, n_dag, gamma_gt, sigma_large, removal_large,
                           bool(p.growth.unbounded_below), sigma_small, k_small, applicable, tuple(notes))


# ---------------------------------------------------------------------------
# averaged map
# ---------------------------------------------------------------------------


def phi_map(u: float, v: float, p: ModelParams) -> np.ndarray:
    """Averaged vector field in log-coordinates ``N = e**u``, ``C = e**v``."""
    n, c = math.exp(u), math.exp(v)
    d = p.eta + p.le_mean
    return np.array([
        float(p.growth.f(n)) + (p.sigma - p.phi / (p.nu + n)) * c,
        p.gamma * n / (p.nu + n) - d,
    ])


def phi_jacobian(u: float, v: float, p: ModelParams) -> np.ndarray:
    n, c = math.exp(u), math.exp(v)
    return np.array([
        [float(p.growth.df(n)) * n + p.phi * n * c / (p.nu + n) ** 2, (p.sigma - p.phi / (p.nu + n)) * c],
        [p.gamma * p.nu * n / (p.nu + n) ** 2, 0.0],
    ])


def phi_zero(p: ModelParams) -> Tuple[float, float]:
    """The unique zero ``(log K, log C_K)`` of :func:`phi_map`."""
    led = ledger(p)
    if not led.gamma_gt.holds:
        raise ConfigError("Phi has no zero: gamma <= eta + mean(le)")
    K = led.K
    gap = p.phi / (p.nu + K) - p.sigma
    fK = float(p.growth.f(K))
    if gap == 0.0 or fK == 0.0 or fK / gap <= 0:
        raise DegenerateCertificateError(
            f"Phi has no zero in the open quadrant (f(K) = {fK:.6g}, phi/(nu+K) - sigma = {gap:.6g})")
    return math.log(K), math.log(fK / gap)


@dataclass(frozen=True)
class DegreeCertificate:
    sign: int
    det: float
    zero: Tuple[float, float]
    jacobian: np.ndarray

    def to_dict(self) -> dict:
        return {"sign": self.sign, "det": self.det, "zero": {"K": math.exp(self.zero[0]), "C": math.exp(self.zero[1])},
                "jacobian": self.jacobian.tolist()}


def degree_certificate(p: ModelParams) -> DegreeCertificate:
    """Sign of ``det D Phi`` at its zero (nonzero sign certifies the degree argument)."""
    led = ledger(p)
    if led.gamma_gt.holds:
        gap = p.phi / (p.nu + led.K) - p.sigma
        if abs(gap) <= 1e-12 * max(1.0, abs(p.sigma)):
            raise DegenerateCertificateError("sigma = phi/(nu + K): the off-diagonal entry of D Phi vanishes")
    if led.applicable is not Applicable.THM2:
        raise ConfigError(f"degree certificate needs the Thm2 branch (applicable: {led.applicable.value})")
    u, v = phi_zero(p)
    J = phi_jacobian(u, v, p)
    det = -J[0, 1] * J[1, 0]
    if abs(det) < 1e-12:
        raise DegenerateCertificateError(f"|det D Phi| = {abs(det):.3g} < 1e-12")
    return DegreeCertificate(int(np.sign(det)), float(det), (u, v), J)


# ---------------------------------------------------------------------------
# periodic orbit finder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodicOrbitResult:
    """Outcome of :func:`find_periodic`.

    ``period`` is the forcing period; the orbit found repeats after
    ``multiple * period`` (``multiple > 1`` for subharmonic responses).
    ``orbit`` covers one full repetition starting on the section.
    """

    fixed_point: StateVec
    orbit: Optional[Trajectory]
    period: float
    multiple: int
    residual: float
    positive: bool
    converged: bool
    iterations: int
    method: str
    min_state: Tuple[float, float] = (math.nan, math.nan)
    history: list = field(default_factory=list)

    @property
    def orbit_period(self) -> float:
        return self.multiple * self.period

    def to_dict(self) -> dict:
        return {"fixed_point": {"N": self.fixed_point[0], "C": self.fixed_point[1]},
                "period": self.period, "multiple": self.multiple, "orbit_period": self.orbit_period,
                "residual": self.residual, "positive": self.positive, "converged": self.converged,
                "iterations": self.iterations, "method": self.method,
                "min_state": {"N": self.min_state[0], "C": self.min_state[1]}}


def forcing_period(p: ModelParams, period: Optional[float] = None) -> float:
    if p.enforcement.is_periodic:
        T = p.enforcement.period
        if period is not None and abs(period - T) > 1e-12 * T:
            raise ConfigError(f"period {period} disagrees with the enforcement period {T}")
        return T
    return float(period) if period is not None else NOMINAL_PERIOD


def _section_points(tau: float) -> np.ndarray:
    if tau == 0:
        return np.zeros(1)
    return np.linspace(-tau, 0.0, SECTION_SAMPLES)


def _advance(p: ModelParams, hist: HistoryFunction, t0: float, length: float, step: float, T: float) -> Trajectory:
    cfg = IntegratorConfig(step=step, t_end=length)
    return integrate(p, hist, cfg, t0=t0, period_alignment=T)


def _return_residual(traj: Trajectory, t_end: float, shift: float, tau: float) -> float:
    s = _section_points(tau)
    a = traj.evaluate(t_end + s)
    b = traj.evaluate(t_end - shift + s)
    return float(np.max(np.abs(a - b)))


def _finish(p, hist, t_sec, T, k, step, iterations, method, hist_log) -> PeriodicOrbitResult:
    orbit = _advance(p, hist, t_sec, k * T, step, T)
    res = _return_residual(orbit, orbit.t1, k * T, 0.0) if p.tau == 0 else \
        float(np.max(np.abs(orbit.evaluate(orbit.t1 + _section_points(p.tau)) - hist(_section_points(p.tau)))))
    _, x = orbit.solution
    mins = (float(x[:, 0].min()), float(x[:, 1].min()))
    positive = mins[0] > 0 and mins[1] > 0
    if not positive:
        raise PositivityError(f"periodic orbit left the positive quadrant (min N, C = {mins})")
    x0 = orbit.evaluate(t_sec)
    return PeriodicOrbitResult(StateVec(float(x0[0]), float(x0[1])), orbit, T, k, res, positive,
                               res <= PERIODIC_TOL, iterations, method, mins, hist_log)


def find_periodic(p: ModelParams, guess: HistoryFunction, transient: Optional[float] = None,
                  max_iter: int = 500, step: float = 0.05, tol: float = PERIODIC_TOL,
                  max_multiple: int = 4, period: Optional[float] = None) -> PeriodicOrbitResult:
    """Locate an attracting periodic orbit of the forced system.

    The state is first carried through ``transient`` time units (default:
    50 periods).  Without delay, the period map on ``(N, C)`` is then solved
    by Newton's method with a finite-difference Jacobian, falling back to
    plain iteration.  With delay the section state is the history segment
    (sampled at 64 points) and the period map is iterated until a Cauchy
    test passes for some multiple ``k <= max_multiple`` of the period.

    Raises :class:`ConvergenceError` (carrying the last iterate as
    ``.result``) after ``max_iter`` periods without convergence.
    """
    T = forcing_period(p, period)
    if transient is None:
        transient = 50 * T
    if max_iter < 1:
        raise ConfigError("max_iter must be positive")
    # start on the section: transient rounded up to whole periods
    n_trans = max(0, math.ceil(transient / T - 1e-9))
    t_sec = 0.0
    hist = guess
    if n_trans:
        traj = _advance(p, hist, 0.0, n_trans * T, step, T)
        hist, t_sec = traj.tail_history(), traj.t1
    if p.tau == 0:
        return _find_ode(p, hist, t_sec, T, max_iter, step, tol)
    return _find_dde(p, hist, t_sec, T, max_iter, step, tol, max_multiple)


def _find_ode(p, hist, t_sec, T, max_iter, step, tol) -> PeriodicOrbitResult:
    # the phase on the section is fixed; translate time so t_sec is a multiple of T
    x = np.array([hist.n0, hist.c0])
    log = []

    def period_map(y):
        tr = _advance(p, HistoryFunction.constant(*y), t_sec, T, step, T)
        return tr.final_state

    it = 0
    method = "newton"
    while it < max_iter:
        fx = period_map(x)
        it += 1
        r = fx - x
        res = float(np.max(np.abs(r)))
        log.append(res)
        if res <= tol:
            break
        J = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = 1e-6 * max(1.0, abs(x[j]))
            J[:, j] = (period_map(x + e) - period_map(x - e)) / (2 * e[j])
        try:
            dx = np.linalg.solve(J - np.eye(2), -r)
        except np.linalg.LinAlgError:
            dx = None
        cand = x + dx if dx is not None else None
        if cand is None or not np.all(np.isfinite(cand)) or np.any(cand <= 0) \
                or np.max(np.abs(dx)) > 0.5 * max(1.0, float(np.max(np.abs(x)))):
            method = "newton+iteration"
            x = fx
        else:
            x = cand
    out = _finish(p, HistoryFunction.constant(*x), t_sec, T, 1, step, it, method, log)
    if not out.converged:
        err = ConvergenceError(f"period map did not converge in {max_iter} iterations (residual {out.residual:.3g})")
        err.result = out
        raise err
    return out


def _find_dde(p, hist, t_sec, T, max_iter, step, tol, max_multiple) -> PeriodicOrbitResult:
    chunk = max_multiple + 1
    done = 0
    log = []
    while done < max_iter:
        n = min(chunk, max_iter - done)
        traj = _advance(p, hist, t_sec, n * T, step, T)
        done += n
        t_sec = traj.t1
        for k in range(1, max_multiple + 1):
            if traj.t1 - k * T - p.tau < traj.t0 - p.tau - 1e-9:
                break
            res = _return_residual(traj, traj.t1, k * T, p.tau)
            if k == 1:
                log.append(res)
            if res <= tol:
                out = _finish(p, traj.tail_history(), t_sec, T, k, step, done, "iteration", log)
                if out.converged:
                    return out
                break
        hist = traj.tail_history()
    res = _return_residual(traj, traj.t1, T, p.tau)
    x = traj.final_state
    _, xs = traj.solution
    mins = (float(xs[:, 0].min()), float(xs[:, 1].min()))
    result = PeriodicOrbitResult(StateVec(float(x[0]), float(x[1])), traj, T, 1, res,
                                 mins[0] > 0 and mins[1] > 0, False, done, "iteration", mins, log)
    err = ConvergenceError(f"period map did not converge in {max_iter} periods (residual {res:.3g})")
    err.result = result
    raise err


# ---------------------------------------------------------------------------
# averaged identities
# ---------------------------------------------------------------------------


def average_identity_check(orbit: PeriodicOrbitResult, p: ModelParams) -> float:
    """``|(gamma/P) int N/(nu+N) dt - (eta + mean(le))|`` over one orbit period ``P``."""
    tr = orbit.orbit
    if tr is None:
        raise ConfigError("no orbit to check")
    P = orbit.orbit_period
    a = tr.t0
    avg = p.gamma / P * tr.integrate(lambda y: y[:, 0] / (p.nu + y[:, 0]), a, a + P)
    return abs(avg - (p.eta + p.le_mean))


def delayed_average_identity_check(orbit: PeriodicOrbitResult, p: ModelParams) -> float:
    """Same identity with the delayed uptake: ``(1/P) int gamma N_tau C_tau/((nu+N_tau) C) dt``."""
    tr = orbit.orbit
    if tr is None:
        raise ConfigError("no orbit to check")
    P = orbit.orbit_period
    a = tr.t0
    # integrate on the orbit mesh, evaluating the delayed state by shifting time
    knots = tr.mesh[(tr.mesh >= a) & (tr.mesh <= a + P)]
    if knots[0] > a:
        knots = np.concatenate(([a], knots))
    if knots[-1] < a + P:
        knots = np.concatenate((knots, [a + P]))
    gx, gw = np.polynomial.legendre.leggauss(6)
    gx, gw = 0.5 * (gx + 1.0), 0.5 * gw
    widths = np.diff(knots)
    ts = (knots[:-1, None] + widths[:, None] * gx[None, :]).ravel()
    y = tr.evaluate(ts)
    if p.tau > 0:
        extra = tr.evaluate(np.maximum(ts - p.tau, tr.t0 - p.tau))
    else:
        extra = y
    g = p.gamma * extra[:, 0] * extra[:, 1] / ((p.nu + extra[:, 0]) * y[:, 1])
    val = float(np.sum(g.reshape(widths.size, gx.size) @ gw * widths)) / P
    return abs(val - (p.eta + p.le_mean))
