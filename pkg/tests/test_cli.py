"""End-to-end checks of the command-line front end."""
import csv
import json
import math

import numpy as np
import pytest

from zenocool import __version__
from zenocool.cli import EXIT_CONFIG, EXIT_FLAGGED, EXIT_OK, main
from zenocool.kernels import RATE_NAMES, transition_rates
from zenocool.spectrum import BathParams, ModifiedLorentzian

REF = ["--set", "protocol.rho_ee0=0.15", "--set", "protocol.tau=2.5",
        "--set", "protocol.n_meas=40"]


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def diagnostics(out):
    return json.loads((out / "diagnostics.json").read_text())


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_rates_zero_row_and_values(tmp_path):
    code, out = run(tmp_path, "rates", "--set", "grid.t_max=200", "--set", "grid.t_step=50")
    assert code == EXIT_OK
    table = rows(out / "rates.csv")
    assert list(table[0])[:9] == ["t", *RATE_NAMES]
    assert all(float(table[0][n]) == 0.0 for n in RATE_NAMES)
    # t = 200 row is the library value, printed with 17 significant digits
    ref = transition_rates(ModifiedLorentzian(0.01, 0.25, 1.5), BathParams(2.0), 200.0)
    last = table[-1]
    assert float(last["t"]) == 200.0
    np.testing.assert_allclose([float(last[n]) for n in RATE_NAMES], ref.as_array(), rtol=1e-15)
    assert (out / "rates.svg").read_text().startswith("<svg")
    diag = diagnostics(out)
    assert diag["exit_code"] == 0 and diag["flags"] == []


def test_rates_zero_temperature(tmp_path):
    # super-Ohmic bath: G0 vanishes below omega_a faster than the sinc^2 tail of the Lorentzian
    code, out = run(tmp_path, "rates", "--set", "model.kind=super_ohmic", "--set", "bath.beta=1e3",
                    "--set", "grid.t_max=50", "--set", "grid.t_step=5")
    assert code == EXIT_OK
    assert max(abs(float(r["gamma_plus_r"])) for r in rows(out / "rates.csv")) <= 1e-10


def test_evolve_reference_point(tmp_path):
    code, out = run(tmp_path, "evolve", *REF)
    assert code == EXIT_OK
    summary = json.loads((out / "evolve.json").read_text())
    assert summary["measured_final"] < 0.119203
    assert summary["envelope_max_deviation"] <= 0.01
    svg = (out / "evolve.svg").read_text()
    for label in ("free (exact)", "free (Markovian)", "adiabatic", "measured (exact)", "envelope"):
        assert label in svg
    assert (out / "trajectory_measured.csv").exists()


def test_evolve_without_measurements_is_free(tmp_path):
    code, out = run(tmp_path, "evolve", "--set", "protocol.n_meas=0",
                    "--set", "protocol.horizon=20")
    assert code == EXIT_OK
    assert not (out / "trajectory_measured.csv").exists()
    free = rows(out / "trajectory_free.csv")
    assert float(free[0]["rho_ee"]) == 0.15


def test_mfactor(tmp_path):
    code, out = run(tmp_path, "mfactor", "--set", "grid.tau_min=0.5", "--set", "grid.tau_max=40",
                    "--set", "grid.tau_step=0.25")
    assert code == EXIT_OK
    table = rows(out / "mfactor.csv")
    m = [float(r["m_exact"]) for r in table]
    assert min(m) < 0
    assert abs(m[-1]) <= 0.05
    report = json.loads((out / "report.json").read_text())
    # refined optimum is never worse than the best grid point
    assert report["m_min"] <= min(m) + 1e-12


def test_mfactor_debye_s1_nonnegative(tmp_path):
    code, out = run(tmp_path, "mfactor", "--set", "model.kind=super_ohmic", "--set", "model.s=1",
                    "--set", "grid.tau_min=0.1", "--set", "grid.tau_max=20",
                    "--set", "grid.tau_step=0.1")
    assert code == EXIT_OK
    assert min(float(r["m_exact"]) for r in rows(out / "mfactor.csv")) >= 0


def test_cooldomain(tmp_path):
    code, out = run(tmp_path, "cooldomain", "--set", "grid.tau_min=1", "--set", "grid.tau_max=50",
                    "--set", "grid.tau_step=0.5")
    assert code == EXIT_OK
    table = rows(out / "cooldomain.csv")
    at2 = next(r for r in table if float(r["tau"]) == 2.0)
    assert float(at2["cr_zero"]) == pytest.approx(2.14159, abs=1e-5)
    for r in table:
        if r["domain_flag"] == "empty":
            assert r["omega1"] == "" and r["omega2"] == ""
        else:
            assert float(r["omega1"]) < float(r["omega2"])
    assert float(table[-1]["omega2"]) == pytest.approx(2.0827, rel=0.10)


def test_optimize_deterministic_across_threads(tmp_path):
    args = ["optimize", "--set", "grid.omega0_list=1.5,2.0", "--set", "grid.tau_min=0.5",
            "--set", "grid.tau_max=8"]
    c1, o1 = run(tmp_path, *args, "--threads", "1", name="t1")
    c4, o4 = run(tmp_path, *args, "--threads", "4", name="t4")
    c1b, o1b = run(tmp_path, *args, "--threads", "1", name="t1b")
    assert c1 == c4 == c1b == EXIT_OK
    a = (o1 / "optimize.csv").read_bytes()
    assert a == (o4 / "optimize.csv").read_bytes() == (o1b / "optimize.csv").read_bytes()
    assert (o1 / "optimize.svg").read_bytes() == (o4 / "optimize.svg").read_bytes()
    for r in rows(o1 / "optimize.csv"):
        assert float(r["tau_min"]) == pytest.approx(float(r["reference"]), rel=0.2)


def test_rates_threads_env(tmp_path, monkeypatch):
    args = ["rates", "--set", "grid.t_max=20", "--set", "grid.t_step=2"]
    monkeypatch.setenv("ZENOCOOL_THREADS", "3")
    _, a = run(tmp_path, *args, name="env")
    monkeypatch.delenv("ZENOCOOL_THREADS")
    _, b = run(tmp_path, *args, name="serial")
    assert (a / "rates.csv").read_bytes() == (b / "rates.csv").read_bytes()
    assert diagnostics(a)["config"]["output"]["threads"] == ""


def test_classify_reference_point(tmp_path, capsys):
    code, out = run(tmp_path, "classify", "--set", "protocol.tau=2.5")
    assert code == EXIT_OK
    s = json.loads((out / "classify.json").read_text())
    assert s["criterion_pass"] and s["m_exact"] < 0 and s["m_sign"] == "cooling"
    assert "criterion:" in capsys.readouterr().out


def test_classify_alpha_invariant(tmp_path):
    verdicts = []
    for k, alpha in enumerate(("0.01", "0.0001")):
        code, out = run(tmp_path, "classify", "--set", f"model.alpha={alpha}", name=f"a{k}")
        assert code == EXIT_OK
        s = json.loads((out / "classify.json").read_text())
        verdicts.append((s["criterion_pass"], s["zeno_class"], s["m_sign"],
                         s["qaze_cooling_agree"]))
        verdicts.append(s["m_exact"])
    assert verdicts[0] == verdicts[2]
    assert verdicts[1] == pytest.approx(verdicts[3], rel=1e-8)


def test_classify_one_over_f_fails_criterion(tmp_path):
    w = np.linspace(0.01, 8.0, 4000)
    table = tmp_path / "one_over_f.txt"
    np.savetxt(table, np.column_stack([w, 0.01 / w]), header="omega G0")
    code, out = run(tmp_path, "classify", "--set", "model.kind=tabulated",
                    "--set", f"model.file={table}", "--set", "model.cutoff=8")
    assert code in (EXIT_OK, EXIT_FLAGGED)
    assert not json.loads((out / "classify.json").read_text())["criterion_pass"]


def test_config_file_and_set_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[bath]\nbeta = 1.0\n\n[grid]\nt_max = 4  # short\nt_step = 2\n")
    code, out = run(tmp_path, "rates", "--config", str(cfg), "--set", "bath.beta=3",
                    "--set", "bath.beta=2.5")
    assert code == EXIT_OK
    raw = diagnostics(out)["config"]
    assert raw["bath"]["beta"] == "2.5" and raw["grid"]["t_max"] == "4"
    assert len(rows(out / "rates.csv")) == 3


@pytest.mark.parametrize("extra", [
    ["--config", "/nonexistent/run.cfg"],
    ["--set", "bath.nope=1"],
    ["--set", "beta=2"],
    ["--set", "bath.beta"],
    ["--format", "csv,png"],
    ["--set", "protocol.rho_ee0=1.5"],
    ["--set", "model.kind=tabulated"],
    ["--set", "model.kind=tabulated", "--set", "model.file=/nonexistent.txt"],
    ["--set", "grid.t_step=0"],
    ["--set", "bath.beta=-1"],
])
def test_config_errors(tmp_path, extra, capsys):
    code, _ = run(tmp_path, "rates", *extra)
    assert code == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_unknown_section_in_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[plot]\ncolor = red\n")
    assert run(tmp_path, "rates", "--config", str(cfg))[0] == EXIT_CONFIG


def test_flagged_run_sets_exit_code(tmp_path):
    # beta omega_a above the Boltzmann-factor cap: computation refused, flagged
    code, out = run(tmp_path, "classify", "--set", "bath.beta=800")
    assert code == EXIT_FLAGGED
    diag = diagnostics(out)
    assert diag["exit_code"] == EXIT_FLAGGED and diag["flags"]


def test_format_subset(tmp_path):
    code, out = run(tmp_path, "cooldomain", "--format", "json", "--set", "grid.tau_min=1",
                    "--set", "grid.tau_max=2", "--set", "grid.tau_step=0.5")
    assert code == EXIT_OK
    assert not (out / "cooldomain.csv").exists() and not (out / "cooldomain.svg").exists()
    assert math.isfinite(diagnostics(out)["summary"]["w2_estimate"])
