import csv
import hashlib
import json
import math

import numpy as np
import pytest

from crimedelay import LawEnforcement, ModelParams, strategy_report
from crimedelay.cli import main
from crimedelay.config import ConfigLocationError, SweepAxis, bundled_scenarios, load_scenario
from crimedelay.sweep import sweep


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def fig_params(eta=0.1, le=0.51, tau=2.0, **kw):
    base = dict(phi=1.0, nu=0.9, sigma=0.4, gamma=1.4, eta=eta, tau=tau,
                enforcement=LawEnforcement.constant(le))
    base.update(kw)
    return ModelParams(**base)


def write(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(body)
    return str(p)


BASE_TOML = """
[scenario]
name = "t"
run = "stability"

[params]
phi = 1.0
nu = 0.9
sigma = 0.4
eta = 0.1
gamma = 1.4
tau = 2.0

[enforcement]
kind = "constant"
value = 0.51
"""


def test_bundled_list():
    names = bundled_scenarios()
    for n in ("fig1a", "fig1b", "fig3", "fig5_tau0", "fig5_tau2"):
        assert n in names


def test_simulate_fig1a(tmp_path):
    assert main(["simulate", "fig1a", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    last = rows[-1]
    assert float(last["t"]) == 200.0
    assert abs(float(last["N"]) - 1) < 1e-3 and abs(float(last["C"])) < 1e-3
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert {a["file"] for a in man["artifacts"]} >= {"trajectory.csv", "summary.json"}
    for a in man["artifacts"]:
        assert a["config_sha256"] == man["config_sha256"]
        assert a["sha256"] == hashlib.sha256((tmp_path / a["file"]).read_bytes()).hexdigest()


def test_simulate_fig3(tmp_path):
    assert main(["run", "fig3", "--out", str(tmp_path)]) == 0
    last = read_csv(tmp_path / "trajectory.csv")[-1]
    assert abs(float(last["N"]) - 0.6949) < 1e-2 and abs(float(last["C"]) - 1.344) < 1e-2


def test_simulate_exposed_column(tmp_path):
    cfg = write(tmp_path, "e.toml", BASE_TOML + "\n[output]\nexposed = true\n[integrator]\nt_end = 5.0\nstep = 0.1\n")
    assert main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "trajectory.csv")
    assert list(rows[0]) == ["t", "N", "C", "E"]


def test_json_format(tmp_path):
    assert main(["equilibria", "fig3", "--out", str(tmp_path), "--format", "json"]) == 0
    data = json.loads((tmp_path / "equilibria.json").read_text())
    co = [r for r in data if r["equilibrium"] == "coexistence"][0]
    assert co["status"] == "CaseI"
    assert abs(co["N"] - 0.6949) < 1e-3


def test_stability_report(tmp_path):
    cfg = write(tmp_path, "s.toml", BASE_TOML)
    assert main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
    doc = json.loads((tmp_path / "o" / "stability.json").read_text())
    names = {a["equilibrium"]: a for a in doc["analyses"]}
    assert names["criminal_free"]["verdict"]["regime"] == "UnstableAllTau"
    assert names["criminal_free"]["root_class"]["label"] == "OneTransversalRoot"
    assert names["criminal_free"]["crossings"][0]["lambda2k"] == pytest.approx(0.41333, abs=1e-4)


def test_periodic_command(tmp_path):
    assert main(["periodic", "fig5_tau0", "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "periodic.json").read_text())
    assert res["converged"] and res["residual"] <= 1e-8
    led = json.loads((tmp_path / "ledger.json").read_text())
    assert led["ledger"]["applicable"] == "Thm2"
    assert led["degree_certificate"]["sign"] == 1
    assert read_csv(tmp_path / "orbit.csv")


def test_report_command(tmp_path):
    assert main(["report", "fig1a", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "strategy.json").read_text())
    assert rep["crime_control_threshold"]["verdict"] == "crime-free attainable"


# -- errors --------------------------------------------------------------------

def test_unknown_key_exit_2_with_location(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", BASE_TOML.replace("sigma = 0.4", "sigam = 0.4"))
    assert main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "bad.toml:9:1" in err and "sigam" in err


def test_syntax_error_exit_2_with_location(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", "[params]\nphi = = 1\n")
    assert main(["simulate", cfg]) == 2
    assert "bad.toml:2:" in capsys.readouterr().err


def test_json_syntax_error(tmp_path, capsys):
    cfg = write(tmp_path, "bad.json", '{"params": {"phi": 1,}}')
    assert main(["simulate", cfg]) == 2
    assert "bad.json:1:" in capsys.readouterr().err


def test_invalid_value_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", BASE_TOML.replace("eta = 0.1", "eta = -0.1"))
    assert main(["stability", cfg]) == 2
    assert "bad.toml:10:" in capsys.readouterr().err


def test_wrong_type_exit_2(tmp_path):
    cfg = write(tmp_path, "bad.toml", BASE_TOML.replace("eta = 0.1", 'eta = "x"'))
    assert main(["stability", cfg]) == 2


def test_missing_file_exit_2():
    assert main(["simulate", "/nonexistent/cfg.toml"]) == 2


def test_numeric_fault_exit_3(tmp_path, monkeypatch):
    monkeypatch.setenv("CRIMEDELAY_PERIODIC__MAX_ITER", "1")
    monkeypatch.setenv("CRIMEDELAY_PERIODIC__TRANSIENT_PERIODS", "0")
    assert main(["periodic", "fig5_tau2", "--out", str(tmp_path)]) == 3


def test_blowup_exit_3(tmp_path):
    cfg = write(tmp_path, "b.toml", BASE_TOML + "\n[integrator]\nmax_norm = 1.0\nt_end = 50.0\n")
    assert main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 3


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("CRIMEDELAY_PARAMS__ETA", "0.4")
    sc = load_scenario("fig1b")
    assert sc.params.eta == 0.4
    monkeypatch.setenv("CRIMEDELAY_PARAMS__BOGUS", "1")
    with pytest.raises(ConfigLocationError):
        load_scenario("fig1b")


def test_argparse_errors_exit_2():
    assert main(["frobnicate", "x"]) == 2
    assert main(["simulate", "fig1a", "--format", "xml"]) == 2


# -- sweep --------------------------------------------------------------------

def test_one_point_sweep_matches_stability(tmp_path):
    header, rows = sweep(fig_params(), [SweepAxis("eta", (0.1,))])
    assert main(["stability", "fig3", "--out", str(tmp_path)]) == 0
    single = {r["equilibrium"]: r for r in read_csv(tmp_path / "stability.csv")}
    for r in rows:
        rec = dict(zip(header, r))
        assert rec["verdict"] == single[rec["equilibrium"]]["verdict"]
        assert rec["class"] == single[rec["equilibrium"]]["class"]


def test_sweep_thread_order_deterministic():
    axes = [SweepAxis("eta", tuple(np.linspace(0.05, 0.6, 7))), SweepAxis("le", tuple(np.linspace(0.1, 0.9, 5)))]
    a = sweep(fig_params(), axes, threads=1)
    b = sweep(fig_params(), axes, threads=4)
    assert a == b


def test_sweep_records_errors():
    _, rows = sweep(fig_params(), [SweepAxis("nu", (0.9, -1.0))], ["criminal_free"])
    assert rows[0][-1] == ""
    assert rows[1][-1] != ""


def test_synthetic_region_diagram():
    axes = [SweepAxis("h", tuple(np.linspace(-4, 4, 41))), SweepAxis("F0", tuple(np.linspace(-2, 4, 31)))]
    header, rows = sweep(fig_params(), axes)
    recs = [dict(zip(header, r)) for r in rows]
    labels = {r["class"] for r in recs if r["boundary"] == "false"}
    assert labels == {"NoPositiveRoots", "TwoRoots", "OneTransversalRoot"}
    for r in recs:
        h, F0 = float(r["h"]), float(r["F0"])
        if r["boundary"] == "true":
            continue
        if F0 < 0:
            assert r["class"] == "OneTransversalRoot"
        elif h < 0 and F0 < h * h / 4:
            assert r["class"] == "TwoRoots"
        else:
            assert r["class"] == "NoPositiveRoots"
    # the parabola F0 = h^2/4 carries the tangent label
    assert {r["class"] for r in recs if r["boundary"] == "true" and float(r["h"]) < 0
            and abs(float(r["F0"]) - float(r["h"]) ** 2 / 4) < 1e-9} <= {"OneTangentRoot"}
    tang = [r for r in recs if r["class"] == "OneTangentRoot"]
    assert tang


# -- strategy report ------------------------------------------------------------

def test_strategy_fig1a():
    rep = strategy_report(fig_params(eta=0.4))
    cc = rep.crime_control_threshold
    assert cc.verdict == "crime-free attainable"
    assert cc.margin == pytest.approx(0.329, abs=1e-12)


def test_strategy_fig5():
    p = fig_params(enforcement=LawEnforcement.sinusoidal(0.2, 4, 0.5))
    ps = strategy_report(p).persistence_threshold
    assert ps.verdict == "periodic persistence likely"
    assert ps.margin == pytest.approx(0.8, abs=1e-12)


def test_strategy_at_threshold():
    rep = strategy_report(fig_params(gamma=0.61))
    assert rep.persistence_threshold.at_threshold
    assert rep.persistence_threshold.verdict == "at threshold"
    assert any("exactly" in line for line in rep.narrative)


def test_strategy_recomputed_per_params():
    a = strategy_report(fig_params(eta=0.4)).crime_control_threshold
    b = strategy_report(fig_params(eta=0.1)).crime_control_threshold
    assert a.verdict != b.verdict
