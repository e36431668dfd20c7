import json

import numpy as np
import pytest

from thinfilm import read_grid_csv, write_grid_csv
from thinfilm.cli import main


def run(*argv):
    return main([str(a) for a in argv])


class TestSteadyCommand:
    def test_compact_support_output(self, tmp_path):
        out = tmp_path / "run"
        assert run("steady", "--alpha", 1, "--mass", 6.2832, "--grid", 1024,
                   "--out", out, "--no-figures") == 0
        state = json.loads((out / "steady_state.json").read_text())
        assert state["regime"] == "CompactSupport"
        assert state["tau"] < np.pi
        cert = json.loads((out / "steady_certificate.json").read_text())
        assert cert["euler_lagrange_residual"] < 1e-10
        assert abs(cert["contact_angle"]) < 1e-10
        assert cert["mass_error_relative"] < 1e-6
        assert (out / "profile.csv").exists()

    def test_positive_regime_min_value(self, tmp_path):
        out = tmp_path / "run"
        assert run("steady", "--alpha", 0.5, "--mass", 20, "--out", out,
                   "--no-figures") == 0
        f = read_grid_csv(out / "profile.csv")
        assert f.values.min() == pytest.approx(10 / np.pi - 4 / 3, abs=1e-3)

    def test_alpha_zero_rejected(self, tmp_path, capsys):
        code = run("steady", "--alpha", 0, "--mass", 1, "--out", tmp_path,
                   "--no-figures")
        assert code == 2
        assert "alpha" in capsys.readouterr().err

    def test_figures_rendered(self, tmp_path):
        out = tmp_path / "run"
        assert run("steady", "--alpha", 1, "--mass", 3.0, "--grid", 256,
                   "--out", out) == 0
        assert (out / "profile.png").exists()

    def test_deterministic_output(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            run("steady", "--alpha", 1, "--mass", 2.5, "--grid", 512,
                "--out", out, "--no-figures")
            outs.append((out / "profile.csv").read_bytes())
        assert outs[0] == outs[1]


class TestEvolveCommand:
    def test_uniform_film_run(self, tmp_path):
        out = tmp_path / "run"
        assert run("evolve", "--alpha", 1, "--n", 3, "--u0", "const:1",
                   "--tfinal", 0.5, "--grid", 128, "--dt-max", 0.05,
                   "--out", out, "--no-figures") == 0
        rows = (out / "series.csv").read_text().splitlines()
        assert rows[0] == "t,energy,entropy,mass,dt"
        data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
        assert np.all(np.diff(data[:, 1]) <= 1e-9 * (1 + np.abs(data[:-1, 1])))
        np.testing.assert_allclose(data[:, 3], 2 * np.pi, rtol=1e-9)
        payload = json.loads((out / "run.json").read_text())
        assert payload["failed"] is False
        assert (out / "rates.csv").exists()
        assert (out / "snapshot_0.csv").exists()

    def test_zero_tfinal_single_snapshot(self, tmp_path):
        out = tmp_path / "run"
        assert run("evolve", "--alpha", 1, "--u0", "const:1", "--tfinal", 0,
                   "--grid", 64, "--out", out, "--no-figures") == 0
        rows = (out / "series.csv").read_text().splitlines()
        assert len(rows) == 2  # header + initial state
        assert (out / "snapshot_0.csv").exists()

    def test_steady_initial_condition_near_stationary(self, tmp_path):
        out = tmp_path / "run"
        assert run("evolve", "--alpha", 1, "--mass", 2 * np.pi, "--u0", "steady",
                   "--tfinal", 0.5, "--grid", 128, "--eps", 0, "--dt-max", 0.05,
                   "--out", out, "--no-figures") == 0
        rows = (out / "series.csv").read_text().splitlines()[1:]
        energies = np.array([float(r.split(",")[1]) for r in rows])
        assert np.max(np.abs(energies - energies[0])) < 1e-4

    def test_file_initial_condition(self, tmp_path):
        from thinfilm import PeriodicGrid, grid_function

        seed_file = tmp_path / "u0.csv"
        g = PeriodicGrid(64)
        write_grid_csv(seed_file, grid_function(g, lambda th: 1 + 0.2 * np.cos(th)))
        out = tmp_path / "run"
        assert run("evolve", "--alpha", 0.5, "--u0", f"file:{seed_file}",
                   "--tfinal", 0.01, "--out", out, "--no-figures") == 0

    def test_perturbed_steady_requires_mass(self, tmp_path):
        with pytest.raises(SystemExit):
            run("evolve", "--alpha", 0.5, "--u0", "steady+perturb:0.5",
                "--tfinal", 0.01, "--out", tmp_path, "--no-figures")


class TestVerifyCommand:
    def test_passes_and_writes_report(self, tmp_path):
        out = tmp_path / "v"
        assert run("verify", "--seed", 0, "--out", out, "--no-figures") == 0
        report = json.loads((out / "verify_report.json").read_text())
        assert report["passed"] is True
        assert {g["name"] for g in report["groups"]} == {
            "steady-state", "energy", "entropy", "evolution", "rates",
        }

    def test_seed_insensitive_verdicts(self, tmp_path):
        verdicts = []
        for seed in (1, 2):
            out = tmp_path / f"v{seed}"
            code = run("verify", "--seed", seed, "--out", out, "--no-figures")
            report = json.loads((out / "verify_report.json").read_text())
            verdicts.append((code, [g["passed"] for g in report["groups"]]))
        assert verdicts[0] == verdicts[1]

    def test_negative_control_fails(self, tmp_path):
        out = tmp_path / "v"
        code = run("verify", "--seed", 0, "--inject-perturbation", 0.1,
                   "--out", out, "--no-figures")
        assert code == 1
        report = json.loads((out / "verify_report.json").read_text())
        steady = next(g for g in report["groups"] if g["name"] == "steady-state")
        assert steady["passed"] is False
        failing = [c for c in steady["checks"] if not c["passed"]]
        assert any("el_residual" in c["name"] for c in failing)


class TestSweepCommand:
    def test_nested_profiles(self, tmp_path):
        out = tmp_path / "sweep"
        assert run("sweep", "--alpha", "1", "--mass", f"{np.pi},{2 * np.pi},{4 * np.pi}",
                   "--grid", 256, "--workers", 1, "--out", out, "--no-figures") == 0
        summary = json.loads((out / "sweep_summary.json").read_text())
        assert len(summary["cells"]) == 3
        taus = [c["tau"] for c in summary["cells"]]
        assert taus[0] < taus[1] < taus[2]
        profiles = [
            read_grid_csv(out / f"alpha_1_mass_{m:g}" / "profile.csv").values
            for m in (np.pi, 2 * np.pi, 4 * np.pi)
        ]
        inside = profiles[0] > 0
        assert np.all(profiles[0][inside] < profiles[1][inside])
        assert np.all(profiles[1][inside] < profiles[2][inside])

    def test_cell_failure_recorded_without_abort(self, tmp_path):
        out = tmp_path / "sweep"
        code = run("sweep", "--alpha", "1,-1", "--mass", "3.0", "--workers", 1,
                   "--out", out, "--no-figures")
        assert code == 1
        summary = json.loads((out / "sweep_summary.json").read_text())
        oks = {(c["alpha"]): c["ok"] for c in summary["cells"]}
        assert oks[1.0] is True
        assert oks[-1.0] is False

    def test_empty_list_noop(self, tmp_path, capsys):
        assert run("sweep", "--alpha", "", "--mass", "1.0",
                   "--out", tmp_path, "--no-figures") == 0
        assert "nothing to do" in capsys.readouterr().err

    def test_parallel_workers_match_serial(self, tmp_path):
        outs = {}
        for label, workers in (("serial", 1), ("parallel", 2)):
            out = tmp_path / label
            assert run("sweep", "--alpha", "0.5,1", "--mass", "3.0", "--grid", 128,
                       "--workers", workers, "--out", out, "--no-figures") == 0
            outs[label] = (out / "sweep_summary.json").read_bytes()
        assert outs["serial"] == outs["parallel"]


class TestMassTauCommand:
    def test_three_curves(self, tmp_path):
        out = tmp_path / "mt"
        assert run("mass-tau", "--alpha", "0.5,1,2", "--samples", 50,
                   "--out", out, "--no-figures") == 0
        for alpha in ("0.5", "1", "2"):
            rows = (out / f"mass_tau_alpha_{alpha}.csv").read_text().splitlines()
            assert rows[0] == "tau,mass"
            data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
            assert np.all(np.diff(data[:, 0]) > 0)
            assert np.all(np.diff(data[:, 1]) > 0)

    def test_empty_alpha_noop(self, tmp_path, capsys):
        assert run("mass-tau", "--alpha", "", "--out", tmp_path,
                   "--no-figures") == 0
        assert "nothing to do" in capsys.readouterr().err

    def test_figure_rendered(self, tmp_path):
        out = tmp_path / "mt"
        assert run("mass-tau", "--alpha", "1", "--samples", 20, "--out", out) == 0
        assert (out / "mass_tau.png").exists()


class TestConfigHandling:
    def test_config_file_supplies_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha=1.0\nmass=3.0\ngrid=256\nfigures=false\n")
        out = tmp_path / "out"
        assert run("steady", "--config", cfg, "--out", out) == 0
        assert (out / "steady_state.json").exists()
        assert not (out / "profile.png").exists()

    def test_cli_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha=1.0\nmass=3.0\n")
        out = tmp_path / "out"
        assert run("steady", "--config", cfg, "--mass", 20.0, "--alpha", 0.5,
                   "--out", out, "--no-figures") == 0
        state = json.loads((out / "steady_state.json").read_text())
        assert state["regime"] == "Positive"

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        monkeypatch.setenv("THINFILM_OUTPUT_DIR", str(tmp_path / "envout"))
        assert run("steady", "--alpha", 1, "--mass", 2.0, "--grid", 128,
                   "--no-figures") == 0
        assert (tmp_path / "envout" / "steady_state.json").exists()
