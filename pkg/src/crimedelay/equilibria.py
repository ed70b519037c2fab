"""Equilibria of the autonomous system (constant law enforcement)."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, NumericalFault
from .model import GrowthFunction, ModelParams, StateVec, rhs

BOUNDARY_TOL = 1e-12
RESONANCE_TOL = 1e-14


class Admissibility(str, Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    INADMISSIBLE = "Inadmissible"


@dataclass(frozen=True)
class Coexistence:
    """Coexistence equilibrium with its admissibility label.

    ``candidate`` is the formal solution ``(N_hat, C_hat)`` whenever the
    formulas can be evaluated; ``point`` is set only for admissible cases.
    """

    case: Admissibility
    reason: str
    candidate: Optional[StateVec] = None

    @property
    def point(self) -> Optional[StateVec]:
        return None if self.case is Admissibility.INADMISSIBLE else self.candidate

    @property
    def admissible(self) -> bool:
        return self.case is not Admissibility.INADMISSIBLE


@dataclass(frozen=True)
class EquilibriumSet:
    trivial: StateVec
    criminal_free: StateVec
    coexistence: Coexistence

    def admissible(self) -> Dict[str, StateVec]:
        out = {"trivial": self.trivial, "criminal_free": self.criminal_free}
        if self.coexistence.admissible:
            out["coexistence"] = self.coexistence.point
        return out


def criminal_free_level(growth: GrowthFunction) -> float:
    """Unique positive zero ``N_dagger`` of the growth function."""
    if growth.kind == "logistic":
        return growth.m
    f = lambda s: float(growth.f(s))
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if f(hi) <= 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConfigError("growth function has no sign change on (0, 2**200]; no positive zero")
    if f(hi) == 0.0:
        return hi
    root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    # Newton polish; keep whichever iterate has the smaller residual
    best = root
    x = root
    for _ in range(3):
        d = float(growth.df(x))
        if d == 0.0:
            break
        x = x - f(x) / d
        if abs(f(x)) < abs(f(best)):
            best = x
    scale = max(1.0, abs(f(0.0)))
    if abs(f(best)) > 1e-12 * scale:
        raise NumericalFault(f"could not certify the zero of f: |f({best})| = {abs(f(best)):.3g}")
    return float(best)


def coexistence(p: ModelParams) -> Coexistence:
    le = p.le_constant()
    d = p.eta + le
    if p.gamma <= d:
        return Coexistence(Admissibility.INADMISSIBLE, "gamma <= eta + le")
    excess = p.gamma - d
    n_hat = p.nu * d / excess
    denom = p.phi * excess - p.sigma * p.gamma * p.nu
    if abs(denom) <= RESONANCE_TOL:
        return Coexistence(Admissibility.INADMISSIBLE, "sigma-resonance: phi (gamma - eta - le) = sigma gamma nu")
    c_hat = p.nu * p.gamma * float(p.growth.f(n_hat)) / denom
    cand = StateVec(float(n_hat), float(c_hat))

    n_dag = criminal_free_level(p.growth)
    ratio_lhs, ratio_rhs = p.phi / p.gamma, p.sigma * p.nu / excess
    if abs(n_hat - n_dag) <= BOUNDARY_TOL * max(1.0, n_dag):
        return Coexistence(Admissibility.INADMISSIBLE, "boundary: N_hat = N_dagger", cand)
    if abs(ratio_lhs - ratio_rhs) <= BOUNDARY_TOL * max(1.0, abs(ratio_rhs)):
        return Coexistence(Admissibility.INADMISSIBLE, "boundary: phi/gamma = sigma nu/(gamma - eta - le)", cand)
    if n_hat < n_dag and ratio_lhs > ratio_rhs:
        case = Admissibility.CASE_I
    elif n_hat > n_dag and ratio_lhs < ratio_rhs:
        case = Admissibility.CASE_II
    else:
        return Coexistence(Admissibility.INADMISSIBLE, "mixed inequalities (C_hat < 0)", cand)
    if c_hat <= 0:
        return Coexistence(Admissibility.INADMISSIBLE, f"C_hat = {c_hat:.6g} <= 0", cand)
    return Coexistence(case, "N_hat < N_dagger, phi/gamma > sigma nu/(gamma-eta-le)"
                       if case is Admissibility.CASE_I else
                       "N_hat > N_dagger, phi/gamma < sigma nu/(gamma-eta-le)", cand)


def equilibria(p: ModelParams) -> EquilibriumSet:
    p.le_constant()
    n_dag = criminal_free_level(p.growth)
    return EquilibriumSet(StateVec(0.0, 0.0), StateVec(n_dag, 0.0), coexistence(p))


def residual(p: ModelParams, point) -> float:
    """Max-norm of the vector field at ``point`` with equal current and delayed states."""
    v = rhs(0.0, point, point, p)
    return max(abs(v.n), abs(v.c))
