"""Domain types and right-hand side of the delayed criminal/non-criminal model.

The state is ``(N, C)``: the non-criminal and criminal populations.  The
system integrated everywhere in this package is::

    N'(t) = N f(N) - phi N C / (nu + N) + sigma N C
    C'(t) = -eta C - le(t) C + gamma N(t - tau) C(t - tau) / (nu + N(t - tau))

All quantities are dimensionless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import ConfigError, DomainError, NumericalFault, PositivityError

if TYPE_CHECKING:
    from .integrator import Trajectory

#: inputs this close below zero are treated as floating-point dust
CLAMP_TOL = 1e-12


class StateVec(NamedTuple):
    n: float
    c: float


# ---------------------------------------------------------------------------
# growth function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFunction:
    """Relative growth rate ``f`` of the non-criminal population.

    Use :meth:`logistic` for ``f(N) = mu (m - N)`` or :meth:`custom` to
    supply ``f`` together with its derivative (the linearization needs it).
    """

    kind: str
    mu: float = 1.0
    m: float = 1.0
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    dfunc: Optional[Callable] = field(default=None, compare=False, repr=False)
    unbounded_below: bool = True
    name: str = ""

    @classmethod
    def logistic(cls, mu: float = 1.0, m: float = 1.0) -> "GrowthFunction":
        if not (mu > 0 and m > 0):
            raise ConfigError(f"logistic growth needs mu > 0 and m > 0 (got mu={mu}, m={m})")
        return cls(kind="logistic", mu=float(mu), m=float(m), name=f"{mu:g}*({m:g}-N)")

    @classmethod
    def custom(
        cls,
        func: Callable,
        dfunc: Callable,
        unbounded_below: Optional[bool] = None,
        name: str = "custom",
    ) -> "GrowthFunction":
        """Wrap a user growth function.

        ``unbounded_below`` records whether ``f(N) -> -inf`` as ``N -> inf``;
        when omitted it is guessed from ``f(1e8)``.
        """
        if unbounded_below is None:
            with np.errstate(all="ignore"):
                unbounded_below = bool(func(1e8) < -1e4)
        g = cls(kind="custom", func=func, dfunc=dfunc, unbounded_below=unbounded_below, name=name)
        g.validate()
        return g

    def f(self, n):
        if self.kind == "logistic":
            return self.mu * (self.m - n)
        return self.func(n)

    def df(self, n):
        if self.kind == "logistic":
            return -self.mu + 0.0 * n
        return self.dfunc(n)

    def __call__(self, n):
        return self.f(n)

    @property
    def max_value(self) -> float:
        """``max f`` over ``N >= 0``, which is ``f(0)`` for a decreasing ``f``."""
        return float(self.f(0.0))

    def validate(self, grid: Optional[np.ndarray] = None) -> None:
        f0 = float(self.f(0.0))
        if not f0 > 0:
            raise ConfigError(f"growth function must satisfy f(0) > 0 (got {f0})")
        if grid is None:
            grid = np.geomspace(1e-6, 1e3, 400)
        d = np.array([float(self.df(s)) for s in grid])
        if not np.all(d < 0):
            bad = grid[np.argmax(~(d < 0))]
            raise ConfigError(f"growth function must be strictly decreasing; f'({bad:g}) >= 0")


# ---------------------------------------------------------------------------
# law enforcement
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LawEnforcement:
    """Law-enforcement intensity ``le(t)``, constant or ``T``-periodic."""

    kind: str
    value: float = 0.0
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    period: float = math.inf
    mean: float = 0.0
    label: str = ""

    @classmethod
    def constant(cls, value: float) -> "LawEnforcement":
        if not value >= 0:
            raise ConfigError(f"law enforcement must be nonnegative (got {value})")
        return cls(kind="constant", value=float(value), mean=float(value), label=f"{value:g}")

    @classmethod
    def periodic(cls, func: Callable, period: float, mean: Optional[float] = None,
                 label: str = "periodic") -> "LawEnforcement":
        if not (period > 0 and math.isfinite(period)):
            raise ConfigError(f"period must be positive and finite (got {period})")
        if mean is None:
            mean = _periodic_mean(func, period)
        le = cls(kind="periodic", func=func, period=float(period), mean=float(mean), label=label)
        le.validate()
        return le

    @classmethod
    def sinusoidal(cls, a: float, b: float, c: float) -> "LawEnforcement":
        """``a*sin(t/b) + c`` with period ``2*pi*b`` and mean ``c``."""
        if b <= 0:
            raise ConfigError(f"sinusoidal enforcement needs b > 0 (got {b})")
        if c < abs(a):
            raise ConfigError(f"a*sin(t/b)+c goes negative unless c >= |a| (a={a}, c={c})")
        a, b, c = float(a), float(b), float(c)

        def func(t):
            return a * np.sin(t / b) + c

        return cls.periodic(func, 2.0 * math.pi * b, mean=c, label=f"{a:g}*sin(t/{b:g})+{c:g}")

    @classmethod
    def tabulated(cls, times, values, period: Optional[float] = None) -> "LawEnforcement":
        """Linear interpolation of samples, repeated with the given period.

        Without ``period`` the samples are taken to span exactly one period.
        """
        t = np.asarray(times, dtype=float)
        y = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != y.shape or t.size < 2:
            raise ConfigError("tabulated enforcement needs matching 1-d time/value arrays")
        if np.any(np.diff(t) <= 0):
            raise ConfigError("tabulated enforcement times must be strictly increasing")
        if np.any(y < 0):
            raise ConfigError("tabulated enforcement values must be nonnegative")
        if period is None:
            period = float(t[-1] - t[0])
            t, y = t[:-1], y[:-1]
        tm = np.mod(t - t[0], period) + t[0]
        order = np.argsort(tm)
        tm, ym = tm[order], y[order]
        # closed polyline over one period; the trapezoid rule is exact for it
        xs = np.append(tm, tm[0] + period)
        ys = np.append(ym, ym[0])
        mean = float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)) / period)

        def func(s):
            return np.interp(s, tm, ym, period=period)

        return cls.periodic(func, period, mean=mean, label=f"tabulated[{t.size} pts]")

    def __call__(self, t):
        if self.kind == "constant":
            return np.full(np.shape(t), self.value) if np.ndim(t) else self.value
        return self.func(t)

    @property
    def is_periodic(self) -> bool:
        return self.kind == "periodic"

    def validate(self, samples: int = 1024) -> None:
        if self.kind == "constant":
            return
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        v = np.asarray(self.func(ts), dtype=float)
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ConfigError("law enforcement must be finite and nonnegative")
        shifted = np.asarray(self.func(ts + self.period), dtype=float)
        if np.max(np.abs(shifted - v)) > 1e-9 * max(1.0, np.max(np.abs(v))):
            raise ConfigError("law enforcement is not periodic with the given period")


def _periodic_mean(func: Callable, period: float) -> float:
    from scipy.integrate import quad

    val, _ = quad(lambda s: float(func(s)), 0.0, period, limit=400, epsabs=1e-13, epsrel=1e-13)
    return val / period


# ---------------------------------------------------------------------------
# parameters, history
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    phi: float
    nu: float
    sigma: float
    eta: float
    gamma: float
    tau: float
    growth: GrowthFunction = field(default_factory=GrowthFunction.logistic)
    enforcement: LawEnforcement = field(default_factory=lambda: LawEnforcement.constant(0.0))

    def __post_init__(self):
        checks = [
            ("phi", self.phi > 0),
            ("nu", self.nu > 0),
            ("sigma", self.sigma >= 0),
            ("eta", self.eta > 0),
            ("gamma", self.gamma > 0),
            ("tau", self.tau >= 0),
        ]
        for name, ok in checks:
            val = getattr(self, name)
            if not ok or not math.isfinite(val):
                raise ConfigError(f"invalid parameter {name}={val}")

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    @property
    def le_mean(self) -> float:
        return self.enforcement.mean

    def le_constant(self) -> float:
        """The constant enforcement level; periodic signals must be frozen first."""
        if self.enforcement.kind != "constant":
            raise ConfigError(
                "autonomous analysis needs constant law enforcement; "
                "freeze it first, e.g. params.frozen()"
            )
        return self.enforcement.value

    def frozen(self, level: Optional[float] = None) -> "ModelParams":
        """Copy with enforcement frozen at ``level`` (default: its mean)."""
        return replace(self, enforcement=LawEnforcement.constant(self.le_mean if level is None else level))


@dataclass(frozen=True)
class HistoryFunction:
    """Initial data on ``[-tau, 0]``.

    ``constant`` histories are exact.  ``sampled`` histories interpolate their
    samples with a monotone PCHIP curve, or with cubic Hermite pieces when
    derivatives are supplied (that is how a trajectory tail is handed on).
    """

    kind: str
    n0: float = 0.0
    c0: float = 0.0
    grid: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    values: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    interp: Optional[Callable] = field(default=None, compare=False, repr=False)

    @classmethod
    def constant(cls, n0: float, c0: float) -> "HistoryFunction":
        h = cls(kind="constant", n0=float(n0), c0=float(c0))
        h.validate()
        return h

    @classmethod
    def sampled(cls, grid, values, derivs=None) -> "HistoryFunction":
        g = np.asarray(grid, dtype=float)
        v = np.asarray(values, dtype=float)
        if g.ndim != 1 or v.shape != (g.size, 2) or g.size < 2:
            raise ConfigError("sampled history needs a 1-d grid and an (n, 2) value array")
        if np.any(np.diff(g) <= 0):
            raise ConfigError("sampled history grid must be strictly increasing")
        if derivs is None:
            interp = PchipInterpolator(g, v, axis=0)
        else:
            interp = CubicHermiteSpline(g, v, np.asarray(derivs, dtype=float), axis=0)
        h = cls(kind="sampled", n0=float(v[-1, 0]), c0=float(v[-1, 1]), grid=g, values=v, interp=interp)
        h.validate()
        return h

    @property
    def start(self) -> float:
        return -math.inf if self.kind == "constant" else float(self.grid[0])

    def __call__(self, s):
        if self.kind == "constant":
            if np.ndim(s):
                out = np.empty((np.size(s), 2))
                out[:, 0], out[:, 1] = self.n0, self.c0
                return out
            return np.array([self.n0, self.c0])
        return self.interp(s)

    def derivative(self, s):
        if self.kind == "constant":
            return np.zeros((np.size(s), 2)) if np.ndim(s) else np.zeros(2)
        return self.interp(s, 1)

    def validate(self) -> None:
        if self.kind == "constant":
            vals = np.array([[self.n0, self.c0]])
        else:
            if self.grid[-1] != 0.0:
                raise ConfigError("sampled history grid must end at s = 0")
            fine = np.linspace(self.grid[0], 0.0, 8 * self.grid.size + 1)
            vals = np.vstack([self.values, self.interp(fine)])
        if not np.all(np.isfinite(vals)):
            raise ConfigError("history contains non-finite values")
        if np.any(vals < -CLAMP_TOL):
            raise ConfigError("history must be nonnegative on [-tau, 0]")
        if not (self.n0 > 0 and self.c0 > 0):
            raise ConfigError(f"history must be positive at s = 0 (got N={self.n0}, C={self.c0})")


# ---------------------------------------------------------------------------
# rates and right-hand side
# ---------------------------------------------------------------------------


def holling(s, nu, n):
    """Holling type II per-capita rate ``s / (nu + n)``."""
    denom = np.asarray(nu + n, dtype=float)
    if np.any(denom <= 0):
        raise DomainError(f"holling rate undefined for nu + n <= 0 (nu={nu}, n={n})")
    out = s / denom
    return float(out) if np.ndim(out) == 0 else out


def _clamped(value: float, what: str) -> float:
    if value >= 0.0:
        return value
    if value >= -CLAMP_TOL:
        return 0.0
    raise PositivityError(f"{what} = {value!r} is negative beyond the clamp tolerance")


def rhs(t: float, x, x_delayed, p: ModelParams) -> StateVec:
    """Time derivative of ``(N, C)`` given the current and delayed states."""
    n = _clamped(float(x[0]), "N")
    c = _clamped(float(x[1]), "C")
    nd = _clamped(float(x_delayed[0]), "N(t - tau)")
    cd = _clamped(float(x_delayed[1]), "C(t - tau)")
    le = float(p.enforcement(t))
    dn = n * p.growth.f(n) - p.phi * n * c / (p.nu + n) + p.sigma * n * c
    dc = -p.eta * c - le * c + p.gamma * nd * cd / (p.nu + nd)
    if not (math.isfinite(dn) and math.isfinite(dc)):
        raise NumericalFault(f"non-finite derivative at t={t}: ({dn}, {dc})")
    return StateVec(float(dn), float(dc))


def vector_field(p: ModelParams) -> Callable:
    """Array version of :func:`rhs` for the integrator (inputs already clamped)."""
    f, phi, nu, sigma, eta, gamma = p.growth.f, p.phi, p.nu, p.sigma, p.eta, p.gamma
    enforcement = p.enforcement
    if enforcement.kind == "constant":
        decay = eta + enforcement.value

        def field_const(t, x, xd):
            n, c = x[0], x[1]
            nd = xd[0]
            return np.array([
                n * f(n) - phi * n * c / (nu + n) + sigma * n * c,
                -decay * c + gamma * nd * xd[1] / (nu + nd),
            ])

        return field_const

    le = enforcement.func

    def field_periodic(t, x, xd):
        n, c = x[0], x[1]
        nd = xd[0]
        return np.array([
            n * f(n) - phi * n * c / (nu + n) + sigma * n * c,
            -(eta + le(t)) * c + gamma * nd * xd[1] / (nu + nd),
        ])

    return field_periodic


def exposed_population(traj: "Trajectory", p: ModelParams, t: float) -> float:
    """Size of the exposed (contacted, not yet criminal) group at time ``t``.

    ``E(t) = int_{-tau}^{t-tau} (phi - gamma) h + int_{t-tau}^{t} phi h`` with
    ``h = N C / (nu + N)``, integrated over the dense trajectory.
    """
    tau = traj.tau
    if tau == 0:
        return 0.0
    if t < traj.t0 or t > traj.t1:
        raise DomainError(f"t={t} outside the trajectory window [{traj.t0}, {traj.t1}]")

    def contact(y):
        return y[:, 0] * y[:, 1] / (p.nu + y[:, 0])

    a = traj.t0 - tau
    return ((p.phi - p.gamma) * traj.integrate(contact, a, t - tau)
            + p.phi * traj.integrate(contact, t - tau, t))
