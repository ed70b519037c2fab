"""Fixed-step method-of-steps integration for constant-delay DDEs.

Classical RK4 with cubic Hermite dense output.  The step divides the delay,
so every delayed lookup hits an already completed step and every breaking
point ``t0 + k*tau`` is a mesh node.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import BlowUpError, ConfigError, DomainError, NumericalFault, PositivityError
from .model import CLAMP_TOL, HistoryFunction, ModelParams, vector_field

# 4-point Gauss-Legendre rule on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

MAX_STEPS = 10_000_000


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 0.01
    t_end: float = 100.0
    positivity_mode: str = "clamp"
    max_norm: float = 1e12

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ConfigError(f"integrator step must be positive (got {self.step})")
        if not self.t_end >= 0:
            raise ConfigError(f"t_end must be nonnegative (got {self.t_end})")
        if self.positivity_mode not in ("clamp", "reject"):
            raise ConfigError(f"positivity_mode must be 'clamp' or 'reject' (got {self.positivity_mode!r})")
        if not self.max_norm > 0:
            raise ConfigError("max_norm must be positive")

    def mesh_step(self, tau: float, period: Optional[float] = None) -> float:
        """Actual step used for a given delay.

        Without ``period`` the step is ``tau/m`` with ``m = max(4, ceil(tau/step))``
        (or ``step`` itself when ``tau == 0``).  With ``period`` the step divides
        the period instead and is kept ``<= tau``; delayed lookups then fall
        between nodes and are served by the dense output.
        """
        if period is None:
            if tau == 0:
                return self.step
            m = max(4, math.ceil(tau / self.step - 1e-9))
            return tau / m
        h = period / math.ceil(period / self.step - 1e-9)
        if tau > 0 and h > tau:
            h = period / math.ceil(period / tau - 1e-9)
        return h


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Dense solution history on ``[t0 - tau, t1]``.

    ``mesh``/``states``/``derivs`` hold the nodes (history samples first, then
    the computed solution); between nodes the solution is the cubic Hermite
    interpolant of the node values and derivatives.  On ``[t0 - tau, t0)`` the
    original history function is used directly when it is available.
    """

    t0: float
    t1: float
    tau: float
    step: float
    mesh: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    start_index: int
    history: Optional[Callable] = None
    min_raw: float = math.inf
    diagnostics: dict = field(default_factory=dict)

    @property
    def t(self) -> np.ndarray:
        return self.mesh

    @property
    def n(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def c(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    @property
    def solution(self) -> "tuple[np.ndarray, np.ndarray]":
        """Mesh and states restricted to ``[t0, t1]``."""
        return self.mesh[self.start_index:], self.states[self.start_index:]

    def evaluate(self, t):
        """State at time(s) ``t`` in ``[t0 - tau, t1]``."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.t0 - self.tau, self.t1
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(ts < lo - slack) or np.any(ts > hi + slack) or np.any(np.isnan(ts)):
            raise DomainError(f"evaluation time outside [{lo}, {hi}]")
        out = np.empty((ts.size, self.states.shape[1]))
        in_hist = ts < self.t0
        if self.history is not None and np.any(in_hist):
            out[in_hist] = np.asarray(self.history(ts[in_hist] - self.t0)).reshape(-1, self.states.shape[1])
            sel = ~in_hist
        else:
            sel = np.ones(ts.size, dtype=bool)
        if np.any(sel):
            out[sel] = self._hermite(ts[sel])
        return out[0] if np.ndim(t) == 0 else out

    def _hermite(self, ts: np.ndarray) -> np.ndarray:
        mesh = self.mesh
        idx = np.clip(np.searchsorted(mesh, ts, side="right") - 1, 0, mesh.size - 2)
        t_a = mesh[idx]
        h = mesh[idx + 1] - t_a
        th = ((ts - t_a) / h)[:, None]
        th2, th3 = th * th, th * th * th
        hh = h[:, None]
        return ((2 * th3 - 3 * th2 + 1) * self.states[idx]
                + (th3 - 2 * th2 + th) * hh * self.derivs[idx]
                + (-2 * th3 + 3 * th2) * self.states[idx + 1]
                + (th3 - th2) * hh * self.derivs[idx + 1])

    def integrate(self, func: Callable, a: float, b: float) -> float:
        """``int_a^b func(x(s)) ds`` for ``func`` mapping an (k, d) array to (k,).

        Gauss-Legendre on each mesh interval inside ``[a, b]``.
        """
        if b < a:
            return -self.integrate(func, b, a)
        if b == a:
            return 0.0
        inner = self.mesh[(self.mesh > a) & (self.mesh < b)]
        knots = np.concatenate(([a], inner, [b]))
        widths = np.diff(knots)
        nodes = (knots[:-1, None] + widths[:, None] * _GL_X[None, :]).ravel()
        vals = np.asarray(func(self.evaluate(nodes)), dtype=float).reshape(widths.size, _GL_X.size)
        return float(np.sum(vals @ _GL_W * widths))

    def window(self, a: float, b: float, num: int) -> "tuple[np.ndarray, np.ndarray]":
        ts = np.linspace(a, b, num)
        return ts, self.evaluate(ts)

    def tail_history(self) -> HistoryFunction:
        """The last ``tau`` of this trajectory as a history for continuing it."""
        if self.tau == 0:
            n, c = self.states[-1]
            return HistoryFunction.constant(max(n, 0.0), max(c, 0.0))
        sel = self.mesh >= self.t1 - self.tau - 1.5 * self.step
        sel[: self.start_index] = False
        grid = self.mesh[sel] - self.t1
        grid[-1] = 0.0
        return HistoryFunction.sampled(grid, self.states[sel], derivs=self.derivs[sel])

    def to_csv(self, path, extra: Optional[dict] = None, include_history: bool = True,
               labels: Sequence[str] = ("N", "C")) -> None:
        """Write ``t,N,C[,extra...]`` with 17 significant digits and LF endings."""
        start = 0 if include_history else self.start_index
        cols = [self.mesh[start:]] + [self.states[start:, k] for k in range(self.states.shape[1])]
        header = ["t", *labels]
        for name, values in (extra or {}).items():
            header.append(name)
            cols.append(np.asarray(values)[start:] if len(values) == self.mesh.size else np.asarray(values))
        write_columns(path, header, cols)


def write_columns(path, header: Sequence[str], cols: Sequence[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([format_float(v) for v in row])


def format_float(v) -> str:
    return f"{float(v):.17g}"


HistoryLike = Union[HistoryFunction, Callable]


def solve_dde(
    func: Callable,
    history: HistoryLike,
    tau: float,
    t_end: float,
    step: float,
    t0: float = 0.0,
    positivity: Optional[str] = None,
    max_norm: float = 1e12,
    history_derivative: Optional[Callable] = None,
) -> Trajectory:
    """Integrate ``x'(t) = func(t, x(t), x(t - tau))`` from ``t0`` to ``t_end``.

    ``history(s)`` gives ``x(t0 + s)`` for ``s`` in ``[-tau, 0]``.  The step must
    not exceed ``tau`` (when ``tau > 0``); the last step is shortened to land
    on ``t_end``.  ``positivity`` is ``None`` (no checks), ``"clamp"`` or
    ``"reject"``.
    """
    if tau < 0:
        raise ConfigError("delay must be nonnegative")
    if not step > 0:
        raise ConfigError("step must be positive")
    if tau > 0 and step > tau * (1 + 1e-12):
        raise ConfigError(f"step {step} exceeds the delay {tau}; the scheme would become implicit")
    if t_end < t0:
        raise ConfigError("t_end precedes t0")
    if history_derivative is None:
        history_derivative = getattr(history, "derivative", None)

    x0 = np.atleast_1d(np.asarray(history(0.0), dtype=float)).copy()
    dim = x0.size
    n_steps = max(1, math.ceil((t_end - t0) / step - 1e-9)) if t_end > t0 else 0
    if n_steps > MAX_STEPS:
        raise ConfigError(f"{(t_end - t0) / step:.3g} steps of size {step:.3g} exceed the limit {MAX_STEPS}; "
                          "a tiny delay forces a tiny step")
    idx = np.arange(n_steps + 1)
    m_tau = round(tau / step) if tau > 0 else 0
    if m_tau and abs(m_tau * step - tau) <= 1e-12 * tau:
        # build nodes per delay interval so every t0 + k*tau is hit exactly
        ts = t0 + tau * (idx // m_tau) + step * (idx % m_tau)
    else:
        ts = t0 + step * idx
    ts[-1] = t_end if n_steps else t0
    X = np.empty((n_steps + 1, dim))
    D = np.empty((n_steps + 1, dim))
    X[0] = x0
    min_raw = float(x0.min())

    def delayed(s: float, i: int) -> np.ndarray:
        sd = s - tau
        if sd <= t0:
            return np.atleast_1d(np.asarray(history(sd - t0), dtype=float))
        j = min(int((sd - t0) / step), i - 1)
        if j > 0 and sd < ts[j]:
            j -= 1
        elif j < i - 1 and sd > ts[j + 1]:
            j += 1
        hj = ts[j + 1] - ts[j]
        th = (sd - ts[j]) / hj
        if th == 0.0:
            return X[j]
        if th == 1.0:
            return X[j + 1]
        th2 = th * th
        th3 = th2 * th
        return ((2 * th3 - 3 * th2 + 1) * X[j] + (th3 - 2 * th2 + th) * hj * D[j]
                + (-2 * th3 + 3 * th2) * X[j + 1] + (th3 - th2) * hj * D[j + 1])

    clamp = positivity is not None
    if tau == 0:
        D[0] = func(t0, x0, x0)
    else:
        D[0] = func(t0, x0, delayed(t0, 0))
    for i in range(n_steps):
        t = ts[i]
        h = ts[i + 1] - t
        x = X[i]
        k1 = D[i]
        th = t + 0.5 * h
        if tau == 0:
            y = x + 0.5 * h * k1
            k2 = func(th, y, y)
            y = x + 0.5 * h * k2
            k3 = func(th, y, y)
            y = x + h * k3
            k4 = func(ts[i + 1], y, y)
        else:
            xd_half = delayed(th, i)
            xd_full = delayed(ts[i + 1], i)
            k2 = func(th, x + 0.5 * h * k1, xd_half)
            k3 = func(th, x + 0.5 * h * k2, xd_half)
            k4 = func(ts[i + 1], x + h * k3, xd_full)
        xn = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(xn)) or np.max(np.abs(xn)) > max_norm:
            raise BlowUpError(f"solution left the ball |x| <= {max_norm:g} at t={ts[i + 1]:.6g}")
        if clamp:
            lo = float(xn.min())
            if lo < 0.0:
                min_raw = min(min_raw, lo)
                if positivity == "reject" or lo < -CLAMP_TOL:
                    raise PositivityError(f"negative state {lo!r} at t={ts[i + 1]:.6g}")
                xn = np.maximum(xn, 0.0)
        X[i + 1] = xn
        if tau == 0:
            D[i + 1] = func(ts[i + 1], xn, xn)
        else:
            D[i + 1] = func(ts[i + 1], xn, delayed(ts[i + 1], i + 1))

    if clamp:
        min_raw = min(min_raw, float(X.min()))

    # history nodes, for export and for interpolation when no callable is kept
    if tau > 0:
        m_hist = max(1, round(tau / step))
        hs = np.linspace(-tau, 0.0, m_hist + 1)[:-1]
        hx = np.asarray(history(hs), dtype=float).reshape(hs.size, dim)
        if history_derivative is not None:
            hd = np.asarray(history_derivative(hs), dtype=float).reshape(hs.size, dim)
        else:
            hd = np.gradient(hx, hs, axis=0) if hs.size > 1 else np.zeros_like(hx)
        mesh = np.concatenate((t0 + hs, ts))
        states = np.vstack((hx, X))
        derivs = np.vstack((hd, D))
        start = hs.size
    else:
        mesh, states, derivs, start = ts, X, D, 0
    return Trajectory(t0=float(t0), t1=float(ts[-1]), tau=float(tau), step=float(step), mesh=mesh,
                      states=states, derivs=derivs, start_index=start, history=history,
                      min_raw=min_raw)


def integrate(p: ModelParams, history: HistoryFunction, cfg: IntegratorConfig,
              t0: float = 0.0, period_alignment: Optional[float] = None) -> Trajectory:
    """Solve the model from ``t0`` to ``cfg.t_end`` for the given history.

    Raises :class:`BlowUpError` if the solution leaves ``|x| <= cfg.max_norm``
    or breaks the a-priori envelope ``C(t) <= max(C_hist) exp(gamma (t - t0))``.
    """
    if not isinstance(history, HistoryFunction):
        raise ConfigError("history must be a HistoryFunction")
    history.validate()
    if history.kind == "sampled" and history.start > -p.tau + 1e-12 * max(1.0, p.tau):
        raise ConfigError(f"sampled history starts at {history.start}, must cover [-{p.tau}, 0]")
    h = cfg.mesh_step(p.tau, period_alignment)
    traj = solve_dde(vector_field(p), history, p.tau, t0 + cfg.t_end, h, t0=t0,
                     positivity=cfg.positivity_mode, max_norm=cfg.max_norm)
    _check_envelopes(traj, p, history)
    return traj


def _check_envelopes(traj: Trajectory, p: ModelParams, history: HistoryFunction) -> None:
    t, x = traj.solution
    if history.kind == "constant":
        c_hist = history.c0
    else:
        c_hist = float(np.max(history.values[:, 1]))
    c = x[:, 1]
    pos = c > 0
    if np.any(pos) and c_hist > 0:
        log_bound = math.log(1.05 * c_hist) + p.gamma * (t[pos] - traj.t0)
        if np.any(np.log(c[pos]) > log_bound + 1e-12):
            raise BlowUpError("criminal population exceeded its exponential envelope")
    # N' <= (sigma C + max f) N; reported, not enforced
    n = x[:, 0]
    rate = p.sigma * c + p.growth.max_value
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(t))))
    with np.errstate(divide="ignore"):
        slack = np.log(n[0]) + cum + 1e-6 - np.log(np.maximum(n, 1e-300))
    traj.diagnostics["n_envelope_ok"] = bool(np.all(slack >= 0))
    traj.diagnostics["min_raw"] = traj.min_raw


@dataclass(frozen=True)
class ConvergenceReport:
    steps: tuple
    errors: tuple
    order: Optional[float]
    exact: bool
    monotone: bool
    reference: str


def convergence_order(
    system: Union[ModelParams, Callable],
    history: HistoryLike,
    steps: Sequence[float],
    t_end: float,
    tau: Optional[float] = None,
    exact: Optional[Callable] = None,
    window_start: Optional[float] = None,
) -> ConvergenceReport:
    """Empirical order of the integrator from a sequence of step sizes.

    Errors are measured at the nodes of the coarsest mesh on
    ``[window_start, t_end]`` (default: from the first breaking point on),
    against ``exact`` when given, else against the finest-step solution.
    """
    steps = sorted((float(h) for h in steps), reverse=True)
    if len(steps) < 3:
        raise ConfigError("convergence_order needs at least three step sizes")
    if isinstance(system, ModelParams):
        func, tau = vector_field(system), system.tau
        positivity = "clamp"
    else:
        if tau is None:
            raise ConfigError("tau is required for a bare vector field")
        func, positivity = system, None
    if tau > 0:
        for h in steps:
            if abs(tau / h - round(tau / h)) > 1e-9:
                raise ConfigError(f"step {h} does not divide tau={tau}")
    if window_start is None:
        window_start = tau
    trajs = [solve_dde(func, history, tau, t_end, h, positivity=positivity) for h in steps]
    grid = np.arange(window_start, t_end + 0.5 * steps[0], steps[0])
    grid = grid[grid <= t_end]
    sols = [tr.evaluate(grid) for tr in trajs]
    if exact is not None:
        ref = np.asarray(exact(grid), dtype=float).reshape(sols[0].shape)
        used, reference = steps, "exact"
    else:
        ref = sols[-1]
        sols, used, reference = sols[:-1], steps[:-1], "finest"
    errors = [float(np.max(np.abs(s - ref))) for s in sols]
    scale = max(1.0, float(np.max(np.abs(ref))))
    if max(errors) <= 1e-13 * scale:
        return ConvergenceReport(tuple(used), tuple(errors), None, True, True, reference)
    monotone = all(e1 > e2 for e1, e2 in zip(errors, errors[1:]))
    slope = np.polyfit(np.log(used), np.log(np.maximum(errors, 1e-300)), 1)[0]
    return ConvergenceReport(tuple(used), tuple(errors), float(slope), False, monotone, reference)
