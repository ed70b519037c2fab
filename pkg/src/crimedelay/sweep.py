"""Parameter sweeps producing long-format stability maps."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Sequence, Tuple

from .config import SYNTHETIC_AXES, SweepAxis
from .errors import CrimeDelayError
from .equilibria import equilibria
from .model import GrowthFunction, LawEnforcement, ModelParams
from .stability import analyze_point, classify_hF0

EQUILIBRIA = ("trivial", "criminal_free", "coexistence")


def with_value(p: ModelParams, name: str, value: float) -> ModelParams:
    """``p`` with one sweepable parameter changed."""
    if name == "le":
        return p.replace(enforcement=LawEnforcement.constant(value))
    if name in ("mu", "m"):
        g = p.growth
        if g.kind != "logistic":
            raise ValueError("mu/m sweeps need logistic growth")
        mu, m = (value, g.m) if name == "mu" else (g.mu, value)
        return p.replace(growth=GrowthFunction.logistic(mu, m))
    return p.replace(**{name: value})


def _fmt_tau(cl, k: int) -> str:
    e = cl.by_index(k)
    return "" if e is None else f"{e.tauk:.17g}"


def _point_rows(base: ModelParams, names: Sequence[str], values: Tuple[float, ...],
                eq_ids: Sequence[str]) -> List[List[str]]:
    lead = [f"{v:.17g}" for v in values]
    try:
        p = base
        for n, v in zip(names, values):
            p = with_value(p, n, v)
        eqs = equilibria(p)
        pts = eqs.admissible()
    except (CrimeDelayError, ValueError) as exc:
        return [lead + [eq, "", "", "", "", str(exc)] for eq in eq_ids]
    rows = []
    for eq in eq_ids:
        if eq not in pts:
            rows.append(lead + [eq, "", "Inadmissible", "", "", ""])
            continue
        try:
            a = analyze_point(eq, pts[eq], p)
        except (CrimeDelayError, ValueError) as exc:
            rows.append(lead + [eq, "", "", "", "", str(exc)])
            continue
        rows.append(lead + [eq, a.root_class.label.value, a.verdict.label(),
                            _fmt_tau(a.crossings, 1), _fmt_tau(a.crossings, 2), ""])
    return rows


def _synthetic_rows(h: float, F0: float) -> List[List[str]]:
    rc = classify_hF0(h, F0)
    return [[f"{h:.17g}", f"{F0:.17g}", rc.label.value, rc.region, str(rc.boundary).lower()]]


def sweep(base: ModelParams, axes: Sequence[SweepAxis], eq_ids: Sequence[str] = EQUILIBRIA,
          threads: int = 1) -> Tuple[List[str], List[List[str]]]:
    """Evaluate every grid point; rows come back in grid order whatever the thread count.

    Per-point failures are recorded in the ``error`` column.
    """
    names = [a.param for a in axes]
    grid = list(itertools.product(*(a.values for a in axes)))
    if set(names) == set(SYNTHETIC_AXES):
        order = [names.index("h"), names.index("F0")]
        header = ["h", "F0", "class", "region", "boundary"]
        work = lambda pt: _synthetic_rows(pt[order[0]], pt[order[1]])
    else:
        header = names + ["equilibrium", "class", "verdict", "tau_hat_1", "tau_hat_2", "error"]
        work = lambda pt: _point_rows(base, names, pt, eq_ids)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, grid))
    else:
        chunks = [work(pt) for pt in grid]
    return header, [row for chunk in chunks for row in chunk]


def rows_as_records(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[Dict[str, str]]:
    return [dict(zip(header, r)) for r in rows]
