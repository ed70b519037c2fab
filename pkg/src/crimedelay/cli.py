"""Command-line front end.

    crimedelay {simulate,equilibria,stability,periodic,sweep,report,run} CONFIG
               [--out DIR] [--format csv|json] [--threads N]

``CONFIG`` is a TOML/JSON scenario file or the name of a bundled scenario
(``crimedelay scenarios`` lists them).  Exit status: 0 on success, 2 for
configuration errors, 3 for numerical faults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .config import Scenario, apply_env, bundled_scenarios, load_scenario
from .equilibria import equilibria
from .errors import ConfigError, ConvergenceError, CrimeDelayError, NumericalFault
from .integrator import format_float, integrate, write_columns
from .model import exposed_population
from .periodic import (Applicable, average_identity_check, degree_certificate, delayed_average_identity_check,
                       find_periodic, forcing_period, ledger)
from .report import strategy_report
from .stability import analyze
from .sweep import sweep

log = logging.getLogger("crimedelay")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
COMMANDS = ("simulate", "equilibria", "stability", "periodic", "sweep", "report")


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


class Outputs:
    """Collects artifacts written for one run."""

    def __init__(self, root: Path, fmt: str):
        self.root, self.fmt = root, fmt
        self.files: List[Path] = []
        root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        p = self.root / name
        self.files.append(p)
        return p

    def table(self, stem: str, header: Sequence[str], cols: Sequence) -> None:
        if self.fmt == "json":
            _write_json(self.path(stem + ".json"), {h: list(np.asarray(c).tolist()) for h, c in zip(header, cols)})
        else:
            write_columns(self.path(stem + ".csv"), header, cols)

    def rows(self, stem: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        if self.fmt == "json":
            _write_json(self.path(stem + ".json"), [dict(zip(header, r)) for r in rows])
        else:
            with open(self.path(stem + ".csv"), "w", newline="") as fh:
                fh.write(",".join(header) + "\n")
                for r in rows:
                    fh.write(",".join(_cell(v) for v in r) + "\n")

    def json(self, name: str, obj) -> None:
        _write_json(self.path(name), obj)

    def text(self, name: str, body: str) -> None:
        self.path(name).write_text(body, encoding="utf-8")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def _gnuplot(data: str, title: str, xcol: int = 1, cols=((2, "N"), (3, "C"))) -> str:
    plots = ", \\\n     ".join(f"'{data}' using {xcol}:{c} with lines title '{t}'" for c, t in cols)
    return (f"# gnuplot script: gnuplot -p {Path(data).stem}.gp\n"
            "set datafile separator ','\nset key autotitle columnhead\n"
            f"set title '{title}'\nset xlabel 't'\n"
            f"plot {plots}\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(sc: Scenario, out: Outputs, threads: int) -> Dict[str, Any]:
    p = sc.params
    traj = integrate(p, sc.history, sc.integrator)
    include_history = bool(sc.output.get("history", True))
    header, cols = ["t", "N", "C"], [traj.mesh, traj.n, traj.c]
    start = 0 if include_history else traj.start_index
    if sc.output.get("exposed", False) and p.tau > 0:
        start = traj.start_index
        ts = traj.mesh[start:]
        e = np.array([exposed_population(traj, p, t) for t in ts])
        header.append("E")
        cols = [c[start:] for c in cols] + [e]
    else:
        cols = [c[start:] for c in cols]
    out.table("trajectory", header, cols)
    if out.fmt == "csv":
        out.text("trajectory.gp", _gnuplot("trajectory.csv", sc.name))
    x = traj.final_state
    summary = {"t_end": traj.t1, "final_state": {"N": x[0], "C": x[1]}, "step": traj.step,
               "min_raw": traj.min_raw, "diagnostics": traj.diagnostics}
    out.json("summary.json", summary)
    return summary


def cmd_equilibria(sc: Scenario, out: Outputs, threads: int) -> Dict[str, Any]:
    eqs = equilibria(sc.params)
    co = eqs.coexistence
    cand = co.candidate
    rows = [
        ["trivial", eqs.trivial.n, eqs.trivial.c, "admissible", ""],
        ["criminal_free", eqs.criminal_free.n, eqs.criminal_free.c, "admissible", ""],
        ["coexistence", cand.n if cand else math.nan, cand.c if cand else math.nan, co.case.value, co.reason],
    ]
    out.rows("equilibria", ["equilibrium", "N", "C", "status", "reason"], rows)
    return {"equilibria": [dict(zip(["equilibrium", "N", "C", "status", "reason"], r)) for r in rows]}


def cmd_stability(sc: Scenario, out: Outputs, threads: int) -> Dict[str, Any]:
    results = analyze(sc.params)
    doc = {"tau": sc.params.tau, "analyses": [a.to_dict() for a in results]}
    out.json("stability.json", doc)
    header = ["equilibrium", "N", "C", "nu1", "nu2", "sig1", "sig2", "h", "F0", "class", "verdict",
              "tau_zero_stable", "tau_hat_1", "tau_hat_2", "stable_at_tau"]
    rows = []
    for a in results:
        c1, c2 = a.crossings.by_index(1), a.crossings.by_index(2)
        st = a.verdict.stable_at(sc.params.tau)
        rows.append([a.equilibrium, a.point.n, a.point.c, a.coeffs.nu1, a.coeffs.nu2, a.coeffs.sig1,
                     a.coeffs.sig2, a.coeffs.h, a.coeffs.F0, a.root_class.label.value, a.verdict.label(),
                     a.verdict.tau_zero_stable, c1.tauk if c1 else "", c2.tauk if c2 else "",
                     "" if st is None else st])
    if out.fmt == "csv":
        out.rows("stability", header, rows)
    return doc


def cmd_periodic(sc: Scenario, out: Outputs, threads: int) -> Dict[str, Any]:
    p = sc.params
    cfg = sc.periodic
    T = forcing_period(p, cfg.get("period"))
    led = ledger(p)
    doc: Dict[str, Any] = {"ledger": led.to_dict()}
    if led.applicable is Applicable.THM2:
        doc["degree_certificate"] = degree_certificate(p).to_dict()
    out.json("ledger.json", doc)
    transient = cfg.get("transient_periods", 50) * T
    res = find_periodic(p, sc.history, transient=transient, max_iter=int(cfg.get("max_iter", 500)),
                        step=float(cfg.get("step", sc.integrator.step)),
                        max_multiple=int(cfg.get("max_multiple", 4)), period=cfg.get("period"))
    orbit = res.orbit
    t, x = orbit.solution
    out.table("orbit", ["t", "N", "C"], [t, x[:, 0], x[:, 1]])
    if out.fmt == "csv":
        out.text("orbit.gp", _gnuplot("orbit.csv", f"{sc.name} periodic orbit"))
    summary = res.to_dict()
    summary["average_identity_residual"] = average_identity_check(res, p)
    summary["delayed_average_identity_residual"] = delayed_average_identity_check(res, p)
    out.json("periodic.json", summary)
    doc["orbit"] = summary
    return doc


def cmd_sweep(sc: Scenario, out: Outputs, threads: int) -> Dict[str, Any]:
    header, rows = sweep(sc.params, sc.sweep_axes, sc.sweep_equilibria, threads=threads)
    out.rows("sweep", header, rows)
    return {"points": len(rows)}


def cmd_report(sc: Scenario, out: Outputs, threads: int) -> Dict[str, Any]:
    rep = strategy_report(sc.params)
    out.json("strategy.json", rep.to_dict())
    out.text("strategy.txt", rep.to_text())
    return rep.to_dict()


HANDLERS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "stability": cmd_stability,
    "periodic": cmd_periodic,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def run_scenario(ref: str, command: Optional[str] = None, out_dir: Optional[str] = None,
                 fmt: str = "csv", threads: int = 1, environ: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """Load a scenario, run it and write artifacts plus ``manifest.json``.

    Raises :class:`ConfigError` or :class:`NumericalFault` on failure.
    """
    sc = load_scenario(ref, environ)
    cmd = command or sc.run
    root = Path(out_dir) if out_dir else Path("crimedelay-out") / sc.name
    out = Outputs(root, fmt)
    result = HANDLERS[cmd](sc, out, threads)
    env_used = apply_env({}, environ) if environ is not None else apply_env({})
    manifest = {
        "tool": "crimedelay",
        "version": __version__,
        "command": cmd,
        "scenario": sc.name,
        "source": sc.source,
        "config_sha256": sc.sha256,
        "config": sc.data,
        "env_overrides": env_used,
        "format": fmt,
        "artifacts": [
            {"file": f.name, "sha256": hashlib.sha256(f.read_bytes()).hexdigest(), "config_sha256": sc.sha256}
            for f in out.files
        ],
    }
    _write_json(root / "manifest.json", manifest)
    return {"out": str(root), "result": result}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crimedelay",
                                     description="Delayed criminal/non-criminal population model toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"simulate": "integrate the system and write the trajectory",
             "equilibria": "list equilibria with admissibility",
             "stability": "characteristic-equation analysis of each equilibrium",
             "periodic": "condition ledger and periodic orbit search",
             "sweep": "stability map over a parameter grid",
             "report": "policy thresholds in plain language",
             "run": "run the command named in [scenario] run"}
    for name in COMMANDS + ("run",):
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("config", help="scenario file (TOML or JSON) or bundled scenario name")
        sp.add_argument("--out", default=None, help="output directory (default crimedelay-out/<name>)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
        sp.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    sub.add_parser("scenarios", help="list bundled scenarios")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    if args.command == "scenarios":
        print("\n".join(bundled_scenarios()))
        return EXIT_OK
    if args.threads < 1:
        print("crimedelay: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    command = None if args.command == "run" else args.command
    try:
        info = run_scenario(args.config, command, args.out, args.format, args.threads)
    except ConfigError as exc:
        print(f"crimedelay: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFault as exc:
        kind = "no convergence" if isinstance(exc, ConvergenceError) else "numerical fault"
        print(f"crimedelay: {kind}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CrimeDelayError as exc:
        print(f"crimedelay: numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("wrote %s", info["out"])
    print(info["out"])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
