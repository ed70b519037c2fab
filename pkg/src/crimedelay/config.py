"""Scenario files: parsing, validation and construction of model objects.

Scenarios are TOML documents (JSON is accepted with the same layout)::

    [scenario]
    name = "fig3"
    run = "simulate"

    [params]
    phi = 1.0
    nu = 0.9
    ...

Every key may be overridden from the environment with
``CRIMEDELAY_<SECTION>__<KEY>=value`` (value parsed as a TOML literal).
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .integrator import IntegratorConfig
from .model import GrowthFunction, HistoryFunction, LawEnforcement, ModelParams

ENV_PREFIX = "CRIMEDELAY_"
RUN_KINDS = ("simulate", "equilibria", "stability", "periodic", "sweep", "report")
SWEEP_PARAMS = ("phi", "nu", "sigma", "eta", "gamma", "tau", "le", "mu", "m")
SYNTHETIC_AXES = ("h", "F0")

_NUM = (int, float)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "scenario": {"name": (str,), "run": (str,), "description": (str,)},
    "params": {k: _NUM for k in ("phi", "nu", "sigma", "eta", "gamma", "tau")},
    "growth": {"kind": (str,), "mu": _NUM, "m": _NUM},
    "enforcement": {"kind": (str,), "value": _NUM, "a": _NUM, "b": _NUM, "c": _NUM,
                    "file": (str,), "times": (list,), "values": (list,), "period": _NUM},
    "history": {"kind": (str,), "n0": _NUM, "c0": _NUM, "file": (str,), "grid": (list,), "values": (list,)},
    "integrator": {"step": _NUM, "t_end": _NUM, "positivity_mode": (str,), "max_norm": _NUM},
    "periodic": {"transient_periods": _NUM, "max_iter": (int,), "max_multiple": (int,), "step": _NUM,
                 "period": _NUM},
    "sweep": {"axes": (list,), "equilibria": (list,)},
    "output": {"exposed": (bool,), "history": (bool,)},
}
REQUIRED = {"params": ("phi", "nu", "sigma", "eta", "gamma", "tau")}


class ConfigLocationError(ConfigError):
    """Configuration error with an optional ``file:line:col`` location."""

    def __init__(self, message: str, source: str = "<config>", line: Optional[int] = None,
                 col: Optional[int] = None):
        self.source, self.line, self.col = source, line, col
        where = source if line is None else f"{source}:{line}:{col or 1}"
        super().__init__(f"{where}: {message}")


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def bundled_scenarios() -> List[str]:
    root = resources.files("crimedelay") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_path(ref: str) -> Tuple[str, str]:
    """Return ``(source label, text)`` for a file path or bundled scenario name."""
    path = Path(ref)
    if path.is_file():
        return str(path), path.read_text(encoding="utf-8")
    if ref in bundled_scenarios():
        res = resources.files("crimedelay") / "scenarios" / f"{ref}.toml"
        return f"<bundled:{ref}>", res.read_text(encoding="utf-8")
    raise ConfigLocationError(f"no such config file or bundled scenario: {ref!r}", source=ref)


def _locate(text: str, section: str, key: Optional[str] = None) -> Tuple[Optional[int], Optional[int]]:
    """Best-effort line/column of ``[section]`` or of ``key`` inside it."""
    lines = text.splitlines()
    start = 0
    sec_re = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]")
    json_sec = re.compile(r'"' + re.escape(section) + r'"\s*:')
    found = None
    for i, ln in enumerate(lines):
        if sec_re.match(ln) or json_sec.search(ln):
            found, start = i, i
            break
    if key is None:
        return (found + 1, 1) if found is not None else (None, None)
    key_re = re.compile(r'(^|[\s{,])"?(' + re.escape(key) + r')"?\s*[=:]')
    for i in range(start, len(lines)):
        m = key_re.search(lines[i])
        if m:
            return i + 1, m.start(2) + 1
    return (found + 1, 1) if found is not None else (None, None)


def parse_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    stripped = text.lstrip()
    if source.endswith(".json") or stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigLocationError(exc.msg, source, exc.lineno, exc.colno) from None
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            m = re.search(r"\(at line (\d+), column (\d+)\)", str(exc))
            msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
            raise ConfigLocationError(msg, source, line, col) from None
    if not isinstance(data, dict):
        raise ConfigLocationError("top level must be a table", source, 1, 1)
    return data


def _parse_literal(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_env(data: Dict[str, Any], environ: Optional[Dict[str, str]] = None) -> List[str]:
    """Apply ``CRIMEDELAY_SECTION__KEY`` overrides in place; returns the names used."""
    env = os.environ if environ is None else environ
    used = []
    for name in sorted(env):
        if not name.startswith(ENV_PREFIX) or "__" not in name[len(ENV_PREFIX):]:
            continue
        section, key = name[len(ENV_PREFIX):].lower().split("__", 1)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigLocationError(f"unknown override target {section}.{key}", source=f"${name}")
        data.setdefault(section, {})[key] = _parse_literal(env[name])
        used.append(name)
    return used


def validate(data: Dict[str, Any], text: str = "", source: str = "<config>") -> None:
    """Check section names, keys and value types against the schema."""
    for section, body in data.items():
        if section not in SCHEMA:
            line, col = _locate(text, section)
            raise ConfigLocationError(f"unknown section [{section}]", source, line, col)
        if not isinstance(body, dict):
            line, col = _locate(text, section)
            raise ConfigLocationError(f"[{section}] must be a table", source, line, col)
        for key, value in body.items():
            if key not in SCHEMA[section]:
                line, col = _locate(text, section, key)
                raise ConfigLocationError(f"unknown key '{key}' in [{section}]", source, line, col)
            types = SCHEMA[section][key]
            if isinstance(value, bool) and bool not in types or not isinstance(value, types):
                line, col = _locate(text, section, key)
                want = "/".join(t.__name__ for t in types)
                raise ConfigLocationError(f"{section}.{key} must be {want} (got {value!r})", source, line, col)
            if isinstance(value, float) and not math.isfinite(value):
                line, col = _locate(text, section, key)
                raise ConfigLocationError(f"{section}.{key} must be finite", source, line, col)
    for section, keys in REQUIRED.items():
        for key in keys:
            if key not in data.get(section, {}):
                line, col = _locate(text, section)
                raise ConfigLocationError(f"missing required key {section}.{key}", source, line, col)
    run = data.get("scenario", {}).get("run", "simulate")
    if run not in RUN_KINDS:
        line, col = _locate(text, "scenario", "run")
        raise ConfigLocationError(f"scenario.run must be one of {', '.join(RUN_KINDS)} (got {run!r})",
                                  source, line, col)


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepAxis:
    param: str
    values: Tuple[float, ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    run: str
    params: ModelParams
    history: HistoryFunction
    integrator: IntegratorConfig
    periodic: Dict[str, Any]
    sweep_axes: Tuple[SweepAxis, ...]
    sweep_equilibria: Tuple[str, ...]
    output: Dict[str, Any]
    data: Dict[str, Any]
    source: str
    sha256: str


def _read_table(path: Path) -> np.ndarray:
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except ValueError:
        arr = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
    return arr


def _rel(source: str, name: str) -> Path:
    p = Path(name)
    if not p.is_absolute() and not source.startswith("<"):
        p = Path(source).parent / p
    return p


def _guard(fn, text, source, section):
    try:
        return fn()
    except ConfigLocationError:
        raise
    except (ConfigError, ValueError, TypeError, OSError) as exc:
        m = re.search(r"parameter (\w+)", str(exc))
        line, col = _locate(text, section, m.group(1) if m else None)
        raise ConfigLocationError(f"[{section}] {exc}", source, line, col) from None


def build_growth(g: Dict[str, Any]) -> GrowthFunction:
    kind = g.get("kind", "logistic")
    if kind != "logistic":
        raise ConfigError(f"growth.kind must be 'logistic' (got {kind!r}); custom growth is API-only")
    return GrowthFunction.logistic(float(g.get("mu", 1.0)), float(g.get("m", 1.0)))


def build_enforcement(e: Dict[str, Any], source: str = "<config>") -> LawEnforcement:
    kind = e.get("kind", "constant")
    if kind == "constant":
        return LawEnforcement.constant(float(e.get("value", 0.0)))
    if kind == "sinusoidal":
        for k in ("a", "b", "c"):
            if k not in e:
                raise ConfigError(f"sinusoidal enforcement needs '{k}'")
        return LawEnforcement.sinusoidal(float(e["a"]), float(e["b"]), float(e["c"]))
    if kind == "tabulated":
        if "file" in e:
            arr = _read_table(_rel(source, e["file"]))
            times, values = arr[:, 0], arr[:, 1]
        elif "times" in e and "values" in e:
            times, values = e["times"], e["values"]
        else:
            raise ConfigError("tabulated enforcement needs 'file' or 'times'/'values'")
        return LawEnforcement.tabulated(times, values, e.get("period"))
    raise ConfigError(f"enforcement.kind must be constant, sinusoidal or tabulated (got {kind!r})")


def build_history(h: Dict[str, Any], source: str = "<config>") -> HistoryFunction:
    kind = h.get("kind", "constant")
    if kind == "constant":
        return HistoryFunction.constant(float(h.get("n0", 1.0)), float(h.get("c0", 1.0)))
    if kind == "sampled":
        if "file" in h:
            arr = _read_table(_rel(source, h["file"]))
            return HistoryFunction.sampled(arr[:, 0], arr[:, 1:3])
        if "grid" in h and "values" in h:
            return HistoryFunction.sampled(h["grid"], h["values"])
        raise ConfigError("sampled history needs 'file' or 'grid'/'values'")
    raise ConfigError(f"history.kind must be constant or sampled (got {kind!r})")


def build_params(data: Dict[str, Any], source: str = "<config>") -> ModelParams:
    p = data["params"]
    return ModelParams(
        phi=float(p["phi"]), nu=float(p["nu"]), sigma=float(p["sigma"]), eta=float(p["eta"]),
        gamma=float(p["gamma"]), tau=float(p["tau"]),
        growth=build_growth(data.get("growth", {})),
        enforcement=build_enforcement(data.get("enforcement", {}), source),
    )


def _build_axes(raw: list) -> Tuple[SweepAxis, ...]:
    axes = []
    for ax in raw:
        if not isinstance(ax, dict) or "param" not in ax:
            raise ConfigError("each sweep axis needs a 'param' and either 'values' or start/stop/num")
        name = ax["param"]
        if name not in SWEEP_PARAMS + SYNTHETIC_AXES:
            raise ConfigError(f"unknown sweep parameter {name!r}")
        if "values" in ax:
            vals = tuple(float(v) for v in ax["values"])
        else:
            try:
                vals = tuple(float(v) for v in np.linspace(ax["start"], ax["stop"], int(ax["num"])))
            except KeyError as exc:
                raise ConfigError(f"sweep axis {name!r} missing {exc.args[0]!r}") from None
        if len(vals) < 1:
            raise ConfigError(f"sweep axis {name!r} is empty")
        axes.append(SweepAxis(name, vals))
    names = [a.param for a in axes]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate sweep axis")
    synth = [n for n in names if n in SYNTHETIC_AXES]
    if synth and sorted(names) != sorted(SYNTHETIC_AXES):
        raise ConfigError("synthetic axes h and F0 must be swept together and alone")
    return tuple(axes)


def load_scenario(ref: str, environ: Optional[Dict[str, str]] = None) -> Scenario:
    source, text = resolve_path(ref)
    data = parse_text(text, source)
    apply_env(data, environ)
    validate(data, text, source)
    resolved = copy.deepcopy(data)
    sha = hashlib.sha256(json.dumps(resolved, sort_keys=True, separators=(",", ":")).encode()).hexdigest()
    scen = data.get("scenario", {})
    name = scen.get("name", Path(ref).stem)
    run = scen.get("run", "simulate")
    params = _guard(lambda: build_params(data, source), text, source, "params")
    history = _guard(lambda: build_history(data.get("history", {}), source), text, source, "history")
    integ = _guard(lambda: IntegratorConfig(**{k: (float(v) if k != "positivity_mode" else v)
                                              for k, v in data.get("integrator", {}).items()}),
                   text, source, "integrator")
    sweep = data.get("sweep", {})
    axes = _guard(lambda: _build_axes(sweep.get("axes", [])), text, source, "sweep")
    eqs = tuple(sweep.get("equilibria", ["trivial", "criminal_free", "coexistence"]))
    for e in eqs:
        if e not in ("trivial", "criminal_free", "coexistence"):
            line, col = _locate(text, "sweep", "equilibria")
            raise ConfigLocationError(f"unknown equilibrium {e!r}", source, line, col)
    if run == "sweep" and not axes:
        line, col = _locate(text, "sweep")
        raise ConfigLocationError("sweep run needs at least one axis", source, line, col)
    return Scenario(name, run, params, history, integ, dict(data.get("periodic", {})), axes, eqs,
                    dict(data.get("output", {})), resolved, source, sha)
