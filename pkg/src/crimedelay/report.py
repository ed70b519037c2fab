"""Policy-facing summary of the two control thresholds."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

from .equilibria import criminal_free_level
from .model import ModelParams

THRESHOLD_TOL = 1e-12


@dataclass(frozen=True)
class Threshold:
    name: str
    lhs: float
    rhs: float
    margin: float
    at_threshold: bool
    verdict: str

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin,
                "at_threshold": self.at_threshold, "verdict": self.verdict}


@dataclass(frozen=True)
class StrategyReport:
    crime_control_threshold: Threshold
    persistence_threshold: Threshold
    narrative: Tuple[str, ...]

    def to_dict(self) -> dict:
        return {"crime_control_threshold": self.crime_control_threshold.to_dict(),
                "persistence_threshold": self.persistence_threshold.to_dict(),
                "narrative": list(self.narrative)}

    def to_text(self) -> str:
        out = []
        for t in (self.crime_control_threshold, self.persistence_threshold):
            out.append(f"{t.name}: {t.lhs:.6g} vs {t.rhs:.6g} (margin {t.margin:.6g}) -> {t.verdict}")
        out.extend(self.narrative)
        return "\n".join(out) + "\n"


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= THRESHOLD_TOL * max(1.0, abs(a), abs(b))


def strategy_report(p: ModelParams) -> StrategyReport:
    """Evaluate both thresholds from scratch for ``p``.

    The crime-control threshold compares ``N_dag (gamma - eta - le)`` with
    ``nu (eta + le)`` (mean enforcement when it is periodic); the persistence
    threshold compares ``gamma`` with ``eta + mean(le)``.
    """
    le = p.le_mean
    d = p.eta + le
    n_dag = criminal_free_level(p.growth)
    lhs, rhs = n_dag * (p.gamma - d), p.nu * d
    at = _near(lhs, rhs)
    if at:
        v1 = "at threshold"
    elif lhs < rhs:
        v1 = "crime-free attainable"
    else:
        v1 = "crime-free not attainable"
    cc = Threshold("N_dag*(gamma-(eta+le)) < nu*(eta+le)", lhs, rhs, rhs - lhs, at, v1)

    at2 = _near(p.gamma, d)
    if at2:
        v2 = "at threshold"
    elif p.gamma > d:
        v2 = "periodic persistence likely"
    else:
        v2 = "criminal extinction expected"
    ps = Threshold("gamma > eta + mean(le)", p.gamma, d, p.gamma - d, at2, v2)

    lines = []
    if v1 == "crime-free attainable":
        lines.append(f"Removal rate eta+le = {d:.6g} is high enough: the crime-free state is stable for every delay.")
    elif v1 == "crime-free not attainable":
        lines.append(f"Raise eta+le above {p.gamma * n_dag / (p.nu + n_dag):.6g} "
                     f"(currently {d:.6g}) to make the crime-free state stable.")
    else:
        lines.append("Crime-control threshold is met with equality; stability of the crime-free state is marginal.")
    if v2 == "periodic persistence likely":
        lines.append(f"Criminalization rate gamma = {p.gamma:.6g} exceeds total removal {d:.6g}: "
                     "criminal activity can persist.")
    elif v2 == "criminal extinction expected":
        lines.append(f"Criminalization rate gamma = {p.gamma:.6g} is below total removal {d:.6g}: "
                     "the criminal population dies out.")
    else:
        lines.append("Criminalization rate equals total removal; persistence is marginal.")
    if at2:
        lines.append("Both thresholds must be re-examined: gamma sits exactly at eta + mean(le).")
    return StrategyReport(cc, ps, tuple(lines))
