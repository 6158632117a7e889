import json
import math

import numpy as np
import pytest

from ctma.cli import main
from ctma.simulate import read_csv

OU_GAUSS = """
seed = 11
[levy]
family = "gaussian"
b = 1.0
[kernel]
family = "ou"
lambda = 1.0
[grid]
dt = 0.01
n = 2000
"""

CP = """
[levy]
family = "compound_poisson"
rate = 1.0
atoms = [[1.0, 1.0]]
centered = true
"""


def run(tmp_path, text, *args, name="cfg.toml"):
    cfg = tmp_path / name
    cfg.write_text(text)
    out = tmp_path / "out"
    code = main(["--config", str(cfg), "--out", str(out), *args])
    return code, out


def load(path):
    return json.loads(path.read_text())


# -- check ------------------------------------------------------------------------------


def test_check_ou_gaussian_exit_0(tmp_path):
    code, out = run(tmp_path, OU_GAUSS, "check")
    assert code == 0
    rep = load(out / "check.json")
    assert rep["integrability"]["member_of_L_psi"] and rep["invertibility"]["invertible"]
    assert load(out / "manifest.json")["command"] == "check"


def test_check_gamma_gaussian_exit_2(tmp_path):
    text = '[levy]\nfamily = "gaussian"\nb = 1.0\n[kernel]\nfamily = "gamma"\nalpha = -0.5\n'
    assert run(tmp_path, text, "check")[0] == 2


@pytest.mark.parametrize("a, b", [([3.0, 3.0, 1.0], [1.0, 0.0, 1.0]), ([3.0, 2.0], [0.0, 1.0])],
                         ids=["b_roots_pm_i", "b_root_0"])
def test_check_carma_imaginary_axis_root_exit_1(tmp_path, a, b):
    text = CP + f'[kernel]\nfamily = "carma"\na = {a}\nb = {b}\n'
    code, out = run(tmp_path, text, "check")
    assert code == 1
    assert load(out / "check.json")["integrability"]["member_of_L_psi"]


def test_flags_after_subcommand(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text(OU_GAUSS)
    assert main(["check", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "check.json").exists()


# -- config errors --------------------------------------------------------------------------


def test_unknown_key_exit_64(tmp_path, capsys):
    assert run(tmp_path, OU_GAUSS + "bogus = 1\n", "check")[0] == 64
    assert "bogus" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [["--set", "kernel.speed=2"], ["--set", "grid.n=abc"],
                                   ["--set", "noequals"]])
def test_bad_overrides_exit_64(tmp_path, extra):
    assert run(tmp_path, OU_GAUSS, "check", *extra)[0] == 64


def test_missing_config_and_bad_usage_exit_64(tmp_path):
    assert main(["--config", str(tmp_path / "nope.toml"), "check"]) == 64
    assert main(["frobnicate"]) == 64


def test_set_override_changes_result(tmp_path):
    text = OU_GAUSS.replace('family = "gaussian"\nb = 1.0', 'family = "gaussian"\nb = 0.0\ngamma = 1.0')
    code, out = run(tmp_path, text, "simulate", "--set", "kernel.lambda=2")
    assert code == 0
    assert load(out / "manifest.json")["config"]["kernel"]["lambda"] == 2


# -- simulate ---------------------------------------------------------------------------------


def test_simulate_drift_window_constant(tmp_path):
    text = """
[levy]
family = "gaussian"
b = 0.0
gamma = 0.7
[kernel]
family = "indicator"
a = 0.0
b = 1.0
[grid]
dt = 0.01
n = 500
"""
    code, out = run(tmp_path, text, "simulate")
    assert code == 0
    v = read_csv(out / "path.csv").values
    np.testing.assert_allclose(v, 0.7, rtol=1e-12)


def test_simulate_manifest_round_trip_byte_identical(tmp_path):
    code, out = run(tmp_path, OU_GAUSS, "simulate")
    assert code == 0
    man = load(out / "manifest.json")
    for key in ("config_hash", "seed", "dt", "n", "warmup", "scheme", "version"):
        assert key in man
    out2 = tmp_path / "again"
    assert main(["simulate", "--config", str(out / "manifest.json"), "--out", str(out2)]) == 0
    for name in ("increments.csv", "path.csv"):
        assert (out / name).read_bytes() == (out2 / name).read_bytes()
    assert load(out2 / "manifest.json")["config_hash"] == man["config_hash"]


def test_simulate_seed_changes_output(tmp_path):
    _, out = run(tmp_path, OU_GAUSS, "simulate")
    out2 = tmp_path / "s2"
    main(["simulate", "--config", str(tmp_path / "cfg.toml"), "--seed", "12", "--out", str(out2)])
    assert (out / "path.csv").read_bytes() != (out2 / "path.csv").read_bytes()


def test_simulate_ou_variance(tmp_path):
    text = OU_GAUSS.replace("n = 2000", "n = 1000000")
    code, out = run(tmp_path, text, "simulate")
    assert code == 0
    v = read_csv(out / "path.csv").values
    assert np.var(v) == pytest.approx(0.5, rel=0.05)


def test_simulate_refuses_non_integrable(tmp_path):
    text = ('[levy]\nfamily = "gaussian"\nb = 1.0\n[kernel]\nfamily = "gamma"\nalpha = -0.5\n'
            '[grid]\ndt = 0.01\nn = 100\nwarmup = 30.0\n')
    code, out = run(tmp_path, text, "simulate")
    assert code == 2 and not (out / "path.csv").exists()
    code, out = run(tmp_path, text, "simulate", "--force")
    assert code == 0 and load(out / "manifest.json")["forced"] is True


# -- invert ---------------------------------------------------------------------------------------


def test_invert_langevin_zero_path(tmp_path):
    t = np.arange(200) * 0.01
    (tmp_path / "zero.csv").write_text("t,value\n" + "".join(f"{a:.17g},0\n" for a in t))
    text = '[invert]\nmethod = "langevin"\nlambda = 1.5\npath = "zero.csv"\n'
    code, out = run(tmp_path, text, "invert")
    assert code == 0
    assert np.all(read_csv(out / "recovered.csv").values == 0.0)


def test_invert_langevin_recovers_simulated_path(tmp_path):
    code, out = run(tmp_path, OU_GAUSS, "invert")
    assert code == 0
    rep = load(out / "invert.json")
    assert rep["rmse_over_scale"] < 0.05


def test_invert_gamma_positive_alpha_exit_65(tmp_path):
    text = CP + '[kernel]\nfamily = "gamma"\nalpha = 0.3\n[invert]\nmethod = "gamma"\nalpha = 0.3\n'
    assert run(tmp_path, text, "invert")[0] == 65


def test_invert_gamma_short_path_exit_3(tmp_path, capsys):
    t = np.arange(100) * 0.01
    (tmp_path / "short.csv").write_text("t,value\n" + "".join(f"{a:.17g},1\n" for a in t))
    text = '[invert]\nmethod = "gamma"\nalpha = -0.5\nhorizon = 40.0\npath = "short.csv"\n'
    assert run(tmp_path, text, "invert")[0] == 3
    assert "40" in capsys.readouterr().err


def test_invert_missing_alpha_exit_64(tmp_path):
    t = np.arange(100) * 0.01
    (tmp_path / "p.csv").write_text("t,value\n" + "".join(f"{a:.17g},1\n" for a in t))
    assert run(tmp_path, '[invert]\nmethod = "gamma"\npath = "p.csv"\n', "invert")[0] == 64


@pytest.mark.slow
def test_invert_gamma_acceptance_config(tmp_path):
    text = "seed = 3\n" + CP + """
[kernel]
family = "gamma"
alpha = -0.5
[grid]
t0 = -50.0
dt = 0.001
n = 70001
warmup = 40.0
[invert]
method = "gamma"
alpha = -0.5
horizon = 40.0
window = [0.0, 20.0]
"""
    code, out = run(tmp_path, text, "invert")
    assert code == 0
    assert load(out / "invert.json")["rmse_over_scale"] <= 0.07


# -- verify -------------------------------------------------------------------------------------


def test_verify_cf_theta_zero(tmp_path):
    text = OU_GAUSS + "[verify]\nn_paths = 2000\n"
    code, out = run(tmp_path, text, "verify", "cf")
    assert code == 0
    rows = np.loadtxt(out / "cf.csv", delimiter=",", skiprows=1)
    row = rows[rows[:, 0] == 0.0][0]
    assert row[1] == 1.0 and row[3] == 1.0


def test_verify_density_target_in_span(tmp_path):
    text = """
[kernel]
family = "ou"
lambda = 1.0
[grid]
t0 = -10.0
dt = 0.001
n = 20001
[verify]
target = {family = "anticipating_ou", lambda = 1.0}
shifts = [0.0, 0.5]
shift_counts = [1, 2]
"""
    code, out = run(tmp_path, text, "verify", "density")
    assert code == 0
    rep = load(out / "residual.json")
    assert rep["residual_norms"][0] < 1e-10


def test_verify_fubini(tmp_path):
    code, out = run(tmp_path, CP, "verify", "fubini")
    assert code == 0
    rep = load(out / "fubini.json")
    assert rep["holds"] and rep["mu_mass"] == pytest.approx(math.sqrt(math.pi), rel=1e-8)
    code, out = run(tmp_path, CP + "[verify]\nalpha = 0.5\n", "verify", "fubini")
    rep = load(out / "fubini.json")
    assert not rep["holds"] and rep["mu_mass_diagnostic"]["diverges"]


def test_verify_gamma_identity_k_alpha(tmp_path):
    text = "seed = 2\n" + CP + "[grid]\ndt = 0.004\n[verify]\nwindow = [0.0, 5.0]\n"
    code, out = run(tmp_path, text, "verify", "gamma-identity")
    assert code == 0
    rep = load(out / "gamma_identity.json")
    assert rep["k_alpha"] == pytest.approx(math.pi, abs=1e-8)
    assert rep["k_alpha_quadrature"] == pytest.approx(math.pi, abs=1e-8)
    assert rep["relative_rmse"] < 0.1
    assert read_csv(out / "gamma_to_ou.csv").grid.n == read_csv(out / "ou.csv").grid.n
