"""Unit tests for experiment recipes, CSV determinism, and the CLI."""
from __future__ import annotations

import numpy as np
import pytest

from chirpsim import cli, harness, propagate
from chirpsim.harness import ExperimentConfig, SCHEMA_HEADER, ValidationFailure

# frozen baseline endpoint values (oracle cross-checked at build time)
BASE_FIDELITY = 0.7030342800557106
BASE_BOUND = 1.2881103615488234


# -- config --

def test_config_rejects_bad_inputs():
    with pytest.raises(ValidationFailure):
        ExperimentConfig(experiment="nope")
    with pytest.raises(ValidationFailure):
        ExperimentConfig(N0=0)
    with pytest.raises(ValidationFailure):
        ExperimentConfig(grid_n1=0)
    with pytest.raises(ValidationFailure):
        ExperimentConfig(eps_list=())
    with pytest.raises(ValidationFailure):
        ExperimentConfig(eps1_range=(0.0, 0.4))


def test_workers_env_override(monkeypatch):
    monkeypatch.setenv(harness.WORKERS_ENV, "3")
    assert harness.default_workers() == 3
    assert ExperimentConfig(workers=2).n_workers() == 2
    assert ExperimentConfig().n_workers() == 3


def test_write_csv_schema_and_formatting(tmp_path):
    path = tmp_path / "out.csv"
    text = harness.write_csv(("a", "b"), [(1, 0.1), (2, float("nan"))],
                             path, comments=("hello",))
    lines = text.splitlines()
    assert lines[0] == SCHEMA_HEADER
    assert lines[1] == "# hello"
    assert lines[2] == "a,b"
    assert lines[3] == "1,0.1"
    assert path.read_text() == text


# -- single runs --

def test_run_single_baseline():
    row = harness.run_single(ExperimentConfig())
    assert row.status == "ok"
    assert row.fidelity == pytest.approx(BASE_FIDELITY, abs=1e-9)
    assert row.bound == pytest.approx(BASE_BOUND, abs=1e-9)
    assert row.distance == pytest.approx(
        np.sqrt(2 * (1 - row.fidelity)), abs=1e-12)
    assert 0.0 < row.dropped_mass < 0.5
    assert row.wall_time > 0.0


def test_run_single_rejects_invalid_spec():
    with pytest.raises(ValidationFailure):
        harness.run_single(ExperimentConfig(alpha=-1.5))


def test_run_single_rejects_certificate_failure():
    with pytest.raises(ValidationFailure):
        harness.run_single(ExperimentConfig(E=0.75, eps1=1.0, alpha=0.25))


def test_guarded_single_isolates_failures():
    row = harness._guarded_single((ExperimentConfig(), 0.5, 0.1, -1.5))
    assert row.status == "error:ValidationFailure"
    assert np.isnan(row.fidelity)


# -- sweeps --

def test_sweep2d_single_cell_reduces_to_run_single():
    cfg = ExperimentConfig(experiment="sweep2d", grid_n1=1, grid_n2=1,
                           eps1_range=(0.5, 0.5), eps2_range=(0.1, 0.1),
                           workers=1)
    text = harness.sweep2d(cfg)
    row = text.splitlines()[3].split(",")
    assert float(row[4]) == pytest.approx(BASE_FIDELITY, abs=1e-9)
    assert row[-1] == "ok"


def test_sweep2d_rerun_is_identical():
    cfg = ExperimentConfig(experiment="sweep2d", grid_n1=2, grid_n2=1,
                           eps1_range=(0.3, 0.5), eps2_range=(0.1, 0.1),
                           workers=1)
    assert harness.sweep2d(cfg) == harness.sweep2d(cfg)


def test_sweep_alpha_flags_failed_cells():
    cfg = ExperimentConfig(experiment="sweep-alpha", alpha_range=(-1.5, 0.0),
                           alpha_n=2, eps1=0.5, eps2=0.2, workers=1)
    lines = harness.sweep_alpha(cfg).splitlines()
    assert lines[3].endswith("error:ValidationFailure")
    assert lines[4].endswith("ok")


def test_scaling_study_requires_high_order():
    with pytest.raises(ValidationFailure):
        harness.scaling_study(ExperimentConfig(experiment="scaling", N0=2))


# -- comparisons --

def test_compare_identical_dynamics_gives_zero_difference():
    """The two comparison code paths agree exactly when fed the same
    real-valued drive."""
    def w(t):
        return 0.1 * np.sin(np.asarray(t, dtype=float))

    H_r = harness._prop1_hamiltonian(w, 1.0, real=True)
    H_c = harness._prop1_hamiltonian(w, 1.0, real=False)
    psi_r = propagate.propagate(H_r, propagate.GROUND, 0.0, 5.0, omega=4.0)
    psi_c = propagate.propagate(H_c, propagate.GROUND, 0.0, 5.0, omega=4.0)
    assert np.linalg.norm(psi_r - psi_c) < 1e-14


def test_compare_unknown_mode_rejected():
    bad = ExperimentConfig(experiment="compare", mode="nope")
    with pytest.raises(ValidationFailure):
        harness.compare_real_complex(bad)


def test_rwa_only_swapped_regime_converges():
    cfg = ExperimentConfig(experiment="rwa-only", scheme="s0",
                           eps_list=(0.2, 0.1, 0.05))
    _, rows = harness.rwa_only_study(cfg, swapped=True)
    fids = [r[2] for r in rows]
    assert fids[-1] > 0.99
    assert fids[0] < fids[-1]
    for (e2, e1, _) in rows:
        assert e1 == pytest.approx(np.sqrt(e2))


def test_adiabatic_demo_rejects_bad_alpha():
    with pytest.raises(ValidationFailure):
        harness.adiabatic_demo(ExperimentConfig(experiment="adiabatic-demo",
                                                alpha=1.5))


def test_trajectory_dump_emits_plot_script(tmp_path):
    out = tmp_path / "traj.csv"
    cfg = ExperimentConfig(experiment="trajectory", n_samples=40,
                           output=str(out))
    text = harness.trajectory_dump(cfg)
    assert out.read_text() == text
    assert (tmp_path / "traj.plot.py").exists()
    first = text.splitlines()[3].split(",")
    assert float(first[2]) == 0.0  # fidelity 0 at s=0 for ground start


def test_eliminate_dump_header():
    text = harness.eliminate_dump(ExperimentConfig(experiment="eliminate-dump",
                                                   N0=1))
    lines = text.splitlines()
    assert lines[0] == SCHEMA_HEADER
    assert "generators=" in lines[1]
    assert lines[2].startswith("(1,0) A 0")


# -- CLI --

def test_cli_validate_ok(capsys):
    assert cli.run(["validate"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "theorem_ok: False" in out
    assert "certificate_ok: True" in out


def test_cli_validate_failure(capsys):
    code = cli.run(["validate", "--E", "0.75", "--eps1", "1", "--alpha",
                    "0.25"])
    assert code == cli.EXIT_VALIDATION


def test_cli_single(capsys):
    assert cli.run(["single"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert f"fidelity: {BASE_FIDELITY}" in out


def test_cli_invalid_parameters_exit_code(capsys):
    code = cli.run(["single", "--E", "0.75", "--eps1", "1", "--alpha", "0.25"])
    assert code == cli.EXIT_VALIDATION  # certificate rejected before numerics
    code = cli.run(["single", "--alpha", "-1.5"])
    assert code == cli.EXIT_VALIDATION


def test_cli_config_file_and_overrides(tmp_path, capsys):
    cfgfile = tmp_path / "exp.cfg"
    cfgfile.write_text("E = 1\nv0 = -0.5\nv1 = 0.5\neps1 = 0.5\n"
                       "eps2 = 0.1\nalpha = 0\nscheme = remark5\nN0 = 3\n")
    assert cli.run(["validate", "--config", str(cfgfile)]) == cli.EXIT_OK
    assert cli.run(["validate", "--config", str(cfgfile),
                    "--alpha", "-1.5"]) == cli.EXIT_VALIDATION


def test_cli_eliminate_dump(capsys):
    assert cli.run(["eliminate-dump", "--N0", "1"]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith(SCHEMA_HEADER)
