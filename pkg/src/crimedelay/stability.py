"""Delay-dependent linear stability of the equilibria.

For a 2x2 linear system ``Z' = A Z + B Z(t - tau)`` with singular ``B`` the
characteristic function is::

    P(lam, tau) = lam**2 - nu1 lam + nu2 + (sig1 - sig2 lam) exp(-lam tau)

Purely imaginary roots ``i s`` can only occur at positive zeros of
``F(s) = s**4 + h s**2 + F0``; those zeros give the crossing frequencies and
the critical delays at which stability may switch.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .equilibria import Admissibility, coexistence, criminal_free_level, equilibria, residual
from .errors import ConfigError, InconsistencyError, NotEquilibriumError, NumericalFault
from .model import ModelParams, StateVec

EPS_CLS = 1e-10
CROSSING_TOL = 1e-9
CROSSING_FAULT_TOL = 1e-6
EQUILIBRIUM_TOL = 1e-8


# ---------------------------------------------------------------------------
# linearization and coefficients
# ---------------------------------------------------------------------------


def linearize(eq, p: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """Jacobians of the vector field at ``eq`` w.r.t. the current and delayed states."""
    n, c = float(eq[0]), float(eq[1])
    res = residual(p, (n, c))
    if res > EQUILIBRIUM_TOL:
        raise NotEquilibriumError(f"({n}, {c}) is not an equilibrium (residual {res:.3g})")
    d = p.eta + p.le_constant()
    f, df = float(p.growth.f(n)), float(p.growth.df(n))
    g_phi = p.phi / (p.nu + n)
    dg_phi = -p.phi / (p.nu + n) ** 2
    g_gam = p.gamma / (p.nu + n)
    dg_gam = -p.gamma / (p.nu + n) ** 2
    A = np.array([
        [f + c * (p.sigma - g_phi) + n * (df - c * dg_phi), n * (p.sigma - g_phi)],
        [0.0, -d],
    ])
    B = np.array([
        [0.0, 0.0],
        [(dg_gam * n + g_gam) * c, g_gam * n],
    ])
    return A, B


@dataclass(frozen=True)
class CharacteristicCoefficients:
    nu1: float
    nu2: float
    sig1: float
    sig2: float

    @property
    def h(self) -> float:
        return self.nu1 ** 2 - 2.0 * self.nu2 - self.sig2 ** 2

    @property
    def F0(self) -> float:
        return self.nu2 ** 2 - self.sig1 ** 2

    def p(self, lam):
        return lam * lam - self.nu1 * lam + self.nu2

    def q(self, lam):
        return self.sig1 - self.sig2 * lam

    def P(self, lam, tau: float):
        return self.p(lam) + self.q(lam) * np.exp(-lam * tau)

    def dP(self, lam, tau: float):
        e = np.exp(-lam * tau)
        return 2.0 * lam - self.nu1 - self.sig2 * e - tau * self.q(lam) * e

    def F(self, s):
        s2 = s * s
        return s2 * s2 + self.h * s2 + self.F0

    def dF(self, s):
        return 2.0 * s * (2.0 * s * s + self.h)

    def tau_zero_roots(self) -> Tuple[complex, complex]:
        """Roots of ``lam**2 - (nu1 + sig2) lam + (nu2 + sig1)``."""
        b = self.nu1 + self.sig2
        disc = cmath.sqrt(b * b - 4.0 * (self.nu2 + self.sig1))
        return (b - disc) / 2.0, (b + disc) / 2.0

    def to_dict(self) -> dict:
        return {"nu1": self.nu1, "nu2": self.nu2, "sig1": self.sig1, "sig2": self.sig2,
                "h": self.h, "F0": self.F0}


def characteristic_coeffs(A, B) -> CharacteristicCoefficients:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != (2, 2) or B.shape != (2, 2):
        raise ConfigError("A and B must be 2x2")
    if abs(np.linalg.det(B)) > 1e-12:
        raise ConfigError(f"B must be singular (det B = {np.linalg.det(B):.3g})")
    sig1 = (A[0, 0] * B[1, 1] - A[1, 0] * B[0, 1]) + (B[0, 0] * A[1, 1] - B[1, 0] * A[0, 1])
    return CharacteristicCoefficients(
        nu1=float(np.trace(A)),
        nu2=float(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]),
        sig1=float(sig1),
        sig2=float(np.trace(B)),
    )


# ---------------------------------------------------------------------------
# F(s) root classification
# ---------------------------------------------------------------------------


class RootLabel(str, Enum):
    NO_POSITIVE_ROOTS = "NoPositiveRoots"
    ONE_TANGENT_ROOT = "OneTangentRoot"
    TWO_ROOTS = "TwoRoots"
    ONE_TRANSVERSAL_ROOT = "OneTransversalRoot"
    ONE_ROOT_F0_ZERO = "OneRootF0Zero"


#: how many positive roots of F each label carries (tangent root counted once)
ROOT_COUNT = {
    RootLabel.NO_POSITIVE_ROOTS: 0,
    RootLabel.ONE_TANGENT_ROOT: 1,
    RootLabel.TWO_ROOTS: 2,
    RootLabel.ONE_TRANSVERSAL_ROOT: 1,
    RootLabel.ONE_ROOT_F0_ZERO: 1,
}


@dataclass(frozen=True)
class RootClass:
    label: RootLabel
    roots: Tuple[float, ...] = ()
    signs: Tuple[int, ...] = ()
    indices: Tuple[int, ...] = ()
    boundary: bool = False
    boundary_reason: str = ""
    region: str = ""

    def to_dict(self) -> dict:
        return {"label": self.label.value, "region": self.region, "roots": list(self.roots),
                "dF_signs": list(self.signs), "indices": list(self.indices),
                "boundary": self.boundary, "boundary_reason": self.boundary_reason}


def classify_hF0(h: float, F0: float, eps: float = EPS_CLS) -> RootClass:
    """Positive roots of ``s**4 + h s**2 + F0`` by the signs of ``h`` and ``F0``.

    Values within ``eps`` of a boundary (``h = 0``, ``F0 = 0``,
    ``F0 = h**2/4``) are snapped onto it and flagged.
    """
    reasons = []
    if abs(h) <= eps:
        reasons.append("h ~ 0")
    if abs(F0) <= eps:
        reasons.append("F0 ~ 0")
    disc = h * h - 4.0 * F0
    if h < 0 and abs(disc) <= 4.0 * eps:
        reasons.append("F0 ~ h^2/4")
    boundary = bool(reasons)
    reason = ", ".join(reasons)

    def s_k(k: int) -> float:
        root = math.sqrt(max(disc, 0.0))
        return math.sqrt(max((-h + (-1) ** k * root) / 2.0, 0.0))

    if F0 < -eps:
        return RootClass(RootLabel.ONE_TRANSVERSAL_ROOT, (s_k(2),), (1,), (2,), boundary, reason, "III")
    if abs(F0) <= eps:
        if h < -eps:
            return RootClass(RootLabel.ONE_ROOT_F0_ZERO, (math.sqrt(-h),), (1,), (2,), boundary, reason,
                             "II:F0=0")
        return RootClass(RootLabel.NO_POSITIVE_ROOTS, (), (), (), boundary, reason, "I")
    # F0 > eps
    if h >= -eps:
        return RootClass(RootLabel.NO_POSITIVE_ROOTS, (), (), (), boundary, reason, "I")
    if abs(disc) <= 4.0 * eps:
        return RootClass(RootLabel.ONE_TANGENT_ROOT, (math.sqrt(-h / 2.0),), (0,), (1,), boundary, reason,
                         "II:tangent")
    if disc > 0:
        return RootClass(RootLabel.TWO_ROOTS, (s_k(1), s_k(2)), (-1, 1), (1, 2), boundary, reason, "II:two")
    return RootClass(RootLabel.NO_POSITIVE_ROOTS, (), (), (), boundary, reason, "II:none")


def classify_F(coeffs: CharacteristicCoefficients, eps: float = EPS_CLS) -> RootClass:
    return classify_hF0(coeffs.h, coeffs.F0, eps)


# ---------------------------------------------------------------------------
# crossings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Crossing:
    k: int
    lambda2k: float
    tauk: float
    direction: int
    residual: float

    def to_dict(self) -> dict:
        return {"k": self.k, "lambda2k": self.lambda2k, "tauk": self.tauk,
                "direction": self.direction, "residual": self.residual}


@dataclass(frozen=True)
class CrossingList:
    entries: Tuple[Crossing, ...] = ()

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def by_index(self, k: int) -> Optional[Crossing]:
        for e in self.entries:
            if e.k == k:
                return e
        return None

    def to_list(self) -> list:
        return [e.to_dict() for e in self.entries]


def crossing_angle(coeffs: CharacteristicCoefficients, w: float) -> Tuple[float, float]:
    """``sin`` and ``cos`` of ``tau*w`` at a purely imaginary root ``i w``."""
    s1, s2, n1, n2 = coeffs.sig1, coeffs.sig2, coeffs.nu1, coeffs.nu2
    den = (s2 * w) ** 2 + s1 ** 2
    sin_v = -w * (s2 * w * w + n1 * s1 - n2 * s2) / den
    cos_v = ((s1 - n1 * s2) * w * w - s1 * n2) / den
    return sin_v, cos_v


def _polish_crossing(coeffs: CharacteristicCoefficients, w: float, tau: float) -> Tuple[float, float]:
    """Newton on the complex equation ``P(i w, tau) = 0`` in the unknowns ``(w, tau)``."""
    for _ in range(20):
        lam = 1j * w
        r = coeffs.P(lam, tau)
        if abs(r) <= 1e-15:
            break
        dw = 1j * coeffs.dP(lam, tau)
        dt = -lam * coeffs.q(lam) * cmath.exp(-lam * tau)
        J = np.array([[dw.real, dt.real], [dw.imag, dt.imag]])
        try:
            step = np.linalg.solve(J, [-r.real, -r.imag])
        except np.linalg.LinAlgError:
            break
        w, tau = w + step[0], tau + step[1]
    return w, tau


def crossings(coeffs: CharacteristicCoefficients, root_class: Optional[RootClass] = None) -> CrossingList:
    """Crossing frequencies and first critical delays for every positive zero of ``F``."""
    rc = root_class or classify_F(coeffs)
    out = []
    for k, s, sign in zip(rc.indices, rc.roots, rc.signs):
        if s <= 0:
            continue
        den = (coeffs.sig2 * s) ** 2 + coeffs.sig1 ** 2
        if den == 0.0:
            # q vanishes identically on the axis: i s is a root for every tau
            res = abs(coeffs.p(1j * s))
            out.append(Crossing(k, s, 0.0, sign, res))
            continue
        sin_v, cos_v = crossing_angle(coeffs, s)
        theta = math.atan2(sin_v, cos_v) % (2.0 * math.pi)
        tau = theta / s
        res = abs(coeffs.P(1j * s, tau))
        if res > CROSSING_TOL:
            w2, tau2 = _polish_crossing(coeffs, s, tau)
            res2 = abs(coeffs.P(1j * w2, tau2))
            if res2 < res and tau2 >= 0:
                s, tau, res = w2, tau2, res2
        if res > CROSSING_FAULT_TOL:
            raise InconsistencyError(f"crossing at s={s} fails verification (|P| = {res:.3g})")
        out.append(Crossing(k, float(s), float(tau), sign, float(res)))
    out.sort(key=lambda e: e.lambda2k)
    return CrossingList(tuple(out))


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


class Regime(str, Enum):
    STABLE_ALL_TAU = "StableAllTau"
    UNSTABLE_ALL_TAU = "UnstableAllTau"
    SWITCHES_AT = "SwitchesAt"
    STABLE_UNTIL = "StableUntil"


@dataclass(frozen=True)
class StabilityVerdict:
    equilibrium: str
    tau_zero_stable: Optional[bool]
    regime: Regime
    taus: Tuple[float, ...] = ()
    notes: Tuple[str, ...] = ()
    proposition: Dict = field(default_factory=dict)

    @property
    def inconclusive(self) -> bool:
        return any("inconclusive" in n for n in self.notes)

    def label(self) -> str:
        if self.regime is Regime.STABLE_UNTIL:
            return f"StableUntil({self.taus[0]:.10g})"
        if self.regime is Regime.SWITCHES_AT:
            return "SwitchesAt(" + ";".join(f"{t:.10g}" for t in self.taus) + ")"
        return self.regime.value

    def stable_at(self, tau: float) -> Optional[bool]:
        """Linear stability at a given delay (``None`` when not determined)."""
        if self.regime is Regime.STABLE_ALL_TAU:
            return True
        if self.regime is Regime.UNSTABLE_ALL_TAU:
            return False
        if self.regime is Regime.STABLE_UNTIL:
            return tau < self.taus[0] if tau != self.taus[0] else None
        if tau < min(self.taus):
            return self.tau_zero_stable
        return None

    def to_dict(self) -> dict:
        return {"equilibrium": self.equilibrium, "tau_zero_stable": self.tau_zero_stable,
                "regime": self.regime.value, "label": self.label(), "taus": list(self.taus),
                "notes": list(self.notes), "proposition": self.proposition}


def _tau_zero_stability(coeffs: CharacteristicCoefficients, eps: float = EPS_CLS) -> Tuple[Optional[bool], str]:
    trace = coeffs.nu1 + coeffs.sig2
    det = coeffs.nu2 + coeffs.sig1
    if abs(det) <= eps or (det > 0 and abs(trace) <= eps):
        return None, "tau = 0 stability inconclusive near threshold (nu1+sig2 or nu2+sig1 ~ 0)"
    return (trace < 0 and det > 0), ""


def _generic_regime(coeffs: CharacteristicCoefficients, rc: RootClass, cl: CrossingList):
    stable0, note = _tau_zero_stability(coeffs)
    notes = [note] if note else []
    if rc.boundary:
        notes.append(f"root classification inconclusive near threshold ({rc.boundary_reason})")
    if coeffs.nu2 + coeffs.sig1 < -EPS_CLS:
        # P(0, tau) < 0 and P -> +inf along the real axis: a positive real root for every tau
        return stable0, Regime.UNSTABLE_ALL_TAU, (), notes
    label = rc.label
    if label in (RootLabel.NO_POSITIVE_ROOTS, RootLabel.ONE_TANGENT_ROOT):
        if label is RootLabel.ONE_TANGENT_ROOT:
            notes.append("tangent root of F: imaginary root touches the axis without crossing")
        regime = Regime.STABLE_ALL_TAU if stable0 else Regime.UNSTABLE_ALL_TAU
        return stable0, regime, (), notes
    if label in (RootLabel.ONE_TRANSVERSAL_ROOT, RootLabel.ONE_ROOT_F0_ZERO):
        if stable0:
            return stable0, Regime.STABLE_UNTIL, (cl.entries[0].tauk,), notes
        return stable0, Regime.UNSTABLE_ALL_TAU, (), notes
    taus = tuple(sorted(e.tauk for e in cl.entries))
    notes.append("two crossing frequencies; only first critical delays reported")
    return stable0, Regime.SWITCHES_AT, taus, notes


def _criminal_free_proposition(p: ModelParams) -> Tuple[dict, Optional[Regime]]:
    d = p.eta + p.le_constant()
    n_dag = criminal_free_level(p.growth)
    lhs, rhs_ = n_dag * (p.gamma - d), p.nu * d
    info = {"threshold_lhs": lhs, "threshold_rhs": rhs_, "margin": rhs_ - lhs}
    if abs(lhs - rhs_) <= 1e-12 * max(1.0, abs(rhs_)):
        info["claim"] = "at threshold"
        return info, None
    if lhs > rhs_:
        info["claim"] = "unstable for all tau"
        return info, Regime.UNSTABLE_ALL_TAU
    info["claim"] = "asymptotically stable for all tau"
    return info, Regime.STABLE_ALL_TAU


def _coexistence_proposition(p: ModelParams, point) -> dict:
    d = p.eta + p.le_constant()
    n, c = float(point[0]), float(point[1])
    fp = float(p.growth.df(n))
    g_phi = p.phi / (p.nu + n)
    dg_phi = -p.phi / (p.nu + n) ** 2
    co = coexistence(p)
    case_i = co.case is Admissibility.CASE_I
    case_ii = co.case is Admissibility.CASE_II
    triangle = 2 * n * fp + c / (p.nu + n) * (p.phi / p.gamma * (p.gamma + d) - p.sigma * p.nu)
    cond_a = fp < c * dg_phi
    cond_c_printed = fp < c * g_phi
    info = {
        "case": co.case.value,
        "triangle": triangle,
        "fprime_lt_C_dgphi": cond_a,
        "fprime_lt_C_gphi_as_printed": cond_c_printed,
        "claims": [],
    }
    if case_i and cond_a:
        info["claims"].append("a: locally asymptotically stable for small tau")
    if case_ii:
        info["claims"].append("b: unstable for small tau")
        if triangle > 0:
            info["claims"].append("b: unstable for all tau")
    if case_i and triangle > 0:
        if cond_c_printed:
            info["claims"].append("c (printed g_phi): stable for tau < tau_2, unstable beyond")
        if cond_a:
            info["claims"].append("c (with g_phi'): stable for tau < tau_2, unstable beyond")
    return info


def verdict(eq_id: str, coeffs: CharacteristicCoefficients, crossing_list: Optional[CrossingList] = None,
            root_class: Optional[RootClass] = None, params: Optional[ModelParams] = None,
            point=None) -> StabilityVerdict:
    """Stability of an equilibrium as a function of the delay.

    The regime is derived from the coefficients; when ``params`` are given the
    threshold statements for the named equilibria are evaluated alongside and
    any disagreement is noted.
    """
    rc = root_class or classify_F(coeffs)
    cl = crossing_list if crossing_list is not None else crossings(coeffs, rc)
    stable0, regime, taus, notes = _generic_regime(coeffs, rc, cl)
    prop: dict = {}
    if eq_id == "trivial":
        if regime is not Regime.UNSTABLE_ALL_TAU:
            notes.append("trivial equilibrium forced unstable (saddle: nu2 + sig1 < 0)")
        regime, taus = Regime.UNSTABLE_ALL_TAU, ()
    elif eq_id == "criminal_free" and params is not None:
        prop, claimed = _criminal_free_proposition(params)
        if claimed is None:
            notes.append("criminal-free verdict inconclusive near threshold N_dag(gamma-eta-le) = nu(eta+le)")
        elif claimed is not regime:
            notes.append(f"threshold statement says {claimed.value}, coefficients give {regime.value}")
    elif eq_id == "coexistence" and params is not None and point is not None:
        prop = _coexistence_proposition(params, point)
    return StabilityVerdict(eq_id, stable0, regime, tuple(taus), tuple(notes), prop)


# ---------------------------------------------------------------------------
# argument-principle root scan
# ---------------------------------------------------------------------------


class _ContourHit(Exception):
    pass


def _winding(func: Callable, box: Sequence[float], max_points: int = 1 << 15) -> int:
    x0, x1, y0, y1 = box
    n = 64
    while True:
        s = np.linspace(0.0, 1.0, n, endpoint=False)
        z = np.concatenate((
            x0 + (x1 - x0) * s + 1j * y0,
            x1 + 1j * (y0 + (y1 - y0) * s),
            x1 - (x1 - x0) * s + 1j * y1,
            x0 + 1j * (y1 - (y1 - y0) * s),
        ))
        v = func(z)
        mag = np.abs(v)
        if not np.all(np.isfinite(v)):
            raise NumericalFault("characteristic function not finite on contour")
        if mag.min() <= 1e-14 * max(1.0, float(np.median(mag))):
            raise _ContourHit
        dth = np.angle(np.roll(v, -1) / v)
        if np.max(np.abs(dth)) < 0.5:
            return int(round(dth.sum() / (2.0 * math.pi)))
        n *= 2
        if n > max_points:
            raise _ContourHit


def _newton(coeffs: CharacteristicCoefficients, tau: float, z: complex, tol: float = 1e-14) -> Optional[complex]:
    for _ in range(60):
        v = coeffs.P(z, tau)
        dv = coeffs.dP(z, tau)
        if dv == 0:
            return None
        step = v / dv
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            return complex(z)
    return complex(z) if abs(coeffs.P(z, tau)) < 1e-10 else None


def root_scan(coeffs: CharacteristicCoefficients, tau: float, box: Sequence[float],
              min_cell: float = 1e-3, max_retries: int = 5) -> List[complex]:
    """Roots of ``P(., tau)`` inside ``box = (re_min, re_max, im_min, im_max)``.

    Cells with nonzero winding number are quartered until their diameter is
    at most ``min_cell``, then each is polished by Newton's method.  Results
    are sorted lexicographically by (real, imag).
    """
    if tau < 0:
        raise ConfigError("tau must be nonnegative")
    x0, x1, y0, y1 = map(float, box)
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("box must have positive width and height")
    func = lambda z: coeffs.P(z, tau)
    roots: List[complex] = []

    def search(cell, count):
        cx0, cx1, cy0, cy1 = cell
        if count == 0:
            return
        if math.hypot(cx1 - cx0, cy1 - cy0) <= min_cell:
            starts = [complex(0.5 * (cx0 + cx1), 0.5 * (cy0 + cy1))]
            if count > 1:
                starts += [complex(cx0, cy0), complex(cx1, cy1), complex(cx0, cy1), complex(cx1, cy0)]
            for z0 in starts:
                z = _newton(coeffs, tau, z0)
                if z is not None:
                    roots.append(z)
            return
        for frac in (0.5, 0.5 + 1.234567e-3, 0.5 - 2.345678e-3, 0.5 + 7.654321e-3, 0.5 - 1.1e-2):
            mx = cx0 + frac * (cx1 - cx0)
            my = cy0 + frac * (cy1 - cy0)
            cells = [(cx0, mx, cy0, my), (mx, cx1, cy0, my), (cx0, mx, my, cy1), (mx, cx1, my, cy1)]
            try:
                counts = [_winding(func, c) for c in cells]
            except _ContourHit:
                continue
            for c, k in zip(cells, counts):
                search(c, k)
            return
        raise NumericalFault("could not subdivide cell without hitting a root")

    for attempt in range(max_retries + 1):
        grow = attempt * 1e-7 * max(1.0, x1 - x0, y1 - y0)
        outer = (x0 - grow, x1 + grow, y0 - grow, y1 + grow)
        try:
            total = _winding(func, outer)
        except _ContourHit:
            continue
        search(outer, total)
        break
    else:
        raise NumericalFault("contour passes through a root after all retries")

    unique: List[complex] = []
    for z in sorted(roots, key=lambda z: (z.real, z.imag)):
        if not any(abs(z - u) <= 1e-8 * max(1.0, abs(z)) for u in unique):
            unique.append(z)
    return unique


def unstable_bound(coeffs: CharacteristicCoefficients) -> float:
    """Radius containing every root with ``Re lam >= 0``, for any ``tau``."""
    a = abs(coeffs.nu1) + abs(coeffs.sig2)
    b = abs(coeffs.nu2) + abs(coeffs.sig1)
    return 0.5 * (a + math.sqrt(a * a + 4.0 * b)) + 1.0


def count_unstable(coeffs: CharacteristicCoefficients, tau: float) -> int:
    """Number of characteristic roots with positive real part (with multiplicity)."""
    r = unstable_bound(coeffs)
    func = lambda z: coeffs.P(z, tau)
    for shift in (0.0, 1e-9, 1e-8, 1e-7):
        try:
            return _winding(func, (shift, r, -r, r))
        except _ContourHit:
            continue
    raise NumericalFault("a characteristic root lies on the imaginary axis")


# ---------------------------------------------------------------------------
# full analysis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CharacteristicAnalysis:
    equilibrium: str
    point: StateVec
    A: np.ndarray
    B: np.ndarray
    coeffs: CharacteristicCoefficients
    root_class: RootClass
    crossings: CrossingList
    verdict: StabilityVerdict

    def to_dict(self) -> dict:
        return {
            "equilibrium": self.equilibrium,
            "point": {"N": self.point[0], "C": self.point[1]},
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "coefficients": self.coeffs.to_dict(),
            "root_class": self.root_class.to_dict(),
            "crossings": self.crossings.to_list(),
            "verdict": self.verdict.to_dict(),
        }


def analyze_point(eq_id: str, point, p: ModelParams) -> CharacteristicAnalysis:
    A, B = linearize(point, p)
    coeffs = characteristic_coeffs(A, B)
    rc = classify_F(coeffs)
    cl = crossings(coeffs, rc)
    v = verdict(eq_id, coeffs, cl, rc, params=p, point=point)
    return CharacteristicAnalysis(eq_id, StateVec(float(point[0]), float(point[1])), A, B, coeffs, rc, cl, v)


def analyze(p: ModelParams) -> List[CharacteristicAnalysis]:
    """Stability analysis of every admissible equilibrium of ``p``."""
    return [analyze_point(name, pt, p) for name, pt in equilibria(p).admissible().items()]
