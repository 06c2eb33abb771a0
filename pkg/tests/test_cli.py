"""Command-line interface: parsing, outputs, exit codes, determinism."""

import os

import numpy as np
import pytest

from diffkern.cli import main
from diffkern.harness import SimConfig
from diffkern.presets import full_scale, preset

FAST = [
    "--set", "n_nodes=12", "--set", "radius=0.5", "--set", "iterations=30",
    "--set", "trials=2", "--set", "nmse_resolution=12",
]


class TestParsing:
    def test_no_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--bogus"])
        assert exc.value.code == 2

    def test_run_requires_preset_or_config(self, tmp_path):
        assert main(["run", "--out", str(tmp_path)]) == 2

    def test_preset_and_config_conflict(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text(SimConfig().to_flat())
        code = main(
            ["run", "--preset", "multi-gauss", "--config", str(cfg), "--out", str(tmp_path)]
        )
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.txt"),
                     "--out", str(tmp_path)]) == 2

    def test_bad_override(self, tmp_path):
        assert main(["run", "--preset", "multi-gauss", "--set", "bogus=1",
                     "--out", str(tmp_path)]) == 2

    def test_unknown_preset_rejected_by_argparse(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--preset", "unknown"])
        assert exc.value.code == 2


class TestPresets:
    def test_multi_gauss_table(self):
        cfg = preset("multi-gauss", "dchypass")
        assert cfg.n_nodes == 60 and cfg.radius == 0.3
        assert cfg.mu == 0.2 and cfg.epsilon == 0.0
        assert cfg.tau == 0.95 and cfg.bandwidths == (0.1, 0.3)
        assert cfg.noise_var == 0.3
        assert preset("multi-gauss", "dmklms").mu == 0.1
        fatc = preset("multi-gauss", "fatc-klms")
        assert fatc.mu == 0.07 and fatc.tau == 0.9 and fatc.bandwidths == (0.2,)
        rff = preset("multi-gauss", "rff-dklms")
        assert rff.mu == 0.1 and rff.r_rff == 100 and rff.bandwidths == (0.2,)
        assert preset("multi-gauss", "central").mu == pytest.approx(3.3e-3)

    def test_altitude_table(self):
        cfg = preset("altitude", "dchypass")
        assert cfg.n_nodes == 200 and cfg.radius == 0.2
        assert cfg.mu == 0.5 and cfg.tau == 0.85
        assert cfg.bandwidths == (0.06, 0.1)
        assert preset("altitude", "dmklms").mu == 0.05
        fatc = preset("altitude", "fatc-klms")
        assert fatc.tau == 0.78 and fatc.bandwidths == (0.08,)
        assert preset("altitude", "rff-dklms").r_rff == 200

    def test_time_varying_table(self):
        cfg = preset("time-varying", "dchypass")
        assert cfg.n_nodes == 80 and cfg.mu == 0.5
        assert cfg.tau == 0.95 and cfg.bandwidths == (0.1, 0.3)
        assert cfg.field == "time-varying"
        assert preset("time-varying", "dmklms").mu == 0.1

    def test_unsupported_combination(self):
        with pytest.raises(ValueError):
            preset("time-varying", "fatc-klms")
        with pytest.raises(ValueError):
            preset("bogus")

    def test_full_scale(self):
        cfg = full_scale(preset("multi-gauss"))
        assert cfg.trials == 200 and cfg.iterations == 15000


class TestRunCommand:
    def test_outputs_and_figures(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "--preset", "multi-gauss", "--seed", "7",
                     "--out", str(out), *FAST])
        assert code == 0
        for name in ("config.txt", "nmse_curve.csv", "updates.csv",
                     "field_grid.csv", "nmse_curve.png", "field_contour.png"):
            assert (out / name).exists(), name
        config_text = (out / "config.txt").read_text()
        assert "seed=7" in config_text
        assert "n_nodes=12" in config_text

    def test_dedicated_flags_override(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "--preset", "multi-gauss", "--trials", "1",
                     "--iters", "20", "--seed", "3", "--out", str(out),
                     "--set", "n_nodes=10", "--set", "radius=0.5",
                     "--set", "nmse_resolution=10"])
        assert code == 0
        lines = (out / "nmse_curve.csv").read_text().strip().splitlines()
        assert len(lines) == 21

    def test_set_overrides_last_win(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "--preset", "multi-gauss", "--out", str(out),
                     *FAST, "--set", "mu=0.4", "--set", "mu=0.6"])
        assert code == 0
        assert "mu=0.6" in (out / "config.txt").read_text()

    def test_config_file_run(self, tmp_path):
        cfg_path = tmp_path / "c.txt"
        cfg = SimConfig(n_nodes=10, radius=0.5, iterations=20, trials=1,
                        nmse_resolution=10, seed=1)
        cfg_path.write_text(cfg.to_flat())
        out = tmp_path / "run"
        assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        assert (out / "nmse_curve.csv").exists()

    def test_algo_flag_selects_row(self, tmp_path):
        out = tmp_path / "run"
        code = main(["run", "--preset", "multi-gauss", "--algo", "dmklms",
                     "--out", str(out), *FAST])
        assert code == 0
        text = (out / "config.txt").read_text()
        assert "algorithm=dmklms" in text and "mu=0.1" in text

    def test_byte_identical_reruns(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = ["run", "--preset", "multi-gauss", "--seed", "5", *FAST]
        assert main([*args, "--out", str(out1)]) == 0
        assert main([*args, "--out", str(out2)]) == 0
        for name in ("nmse_curve.csv", "updates.csv", "field_grid.csv", "config.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestSweepCommand:
    def test_sweep_outputs(self, tmp_path):
        out = tmp_path / "sweep"
        code = main(["sweep", "--preset", "multi-gauss", "--eps", "0,0.5",
                     "--mus", "0.2,0.5", "--out", str(out), *FAST])
        assert code == 0
        lines = (out / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == "epsilon,mean_updates,steady_nmse_db"
        assert len(lines) == 3
        assert (out / "sweep.png").exists()

    def test_bad_eps_list(self, tmp_path):
        assert main(["sweep", "--preset", "multi-gauss", "--eps", "a,b",
                     "--out", str(tmp_path)]) == 2


class TestComplexityCommand:
    def test_reference_invocation(self, tmp_path, capsys):
        out = tmp_path / "cx"
        code = main(["complexity", "--J", "60", "--edges", "300", "--r", "33",
                     "--Q", "2", "--L", "2", "--s", "7", "--out", str(out)])
        assert code == 0
        lines = (out / "complexity.csv").read_text().strip().splitlines()
        assert "dchypass,194160,3960" in lines
        assert "fatc-klms,31740,1980" in lines
        assert (out / "complexity.png").exists()
        assert "mkdice" in capsys.readouterr().out

    def test_bad_parameters(self, tmp_path):
        assert main(["complexity", "--J", "0", "--out", str(tmp_path)]) == 2


class TestValidateConsensusCommand:
    def test_valid_cases(self, tmp_path, capsys):
        out = tmp_path / "val"
        code = main(["validate-consensus", "--J", "6", "--count", "4",
                     "--out", str(out)])
        assert code == 0
        lines = (out / "consensus_report.csv").read_text().strip().splitlines()
        assert len(lines) == 5
        assert "all valid" in capsys.readouterr().out


class TestExportDictCommand:
    def test_export_matches_trial_zero(self, tmp_path):
        out = tmp_path / "exp"
        code = main(["export-dict", "--preset", "multi-gauss", "--seed", "11",
                     "--out", str(out), "--set", "n_nodes=15", "--set", "radius=0.5"])
        assert code == 0
        from diffkern.harness import trial_network

        cfg = preset("multi-gauss").with_overrides(
            {"seed": "11", "n_nodes": "15", "radius": "0.5"}
        )
        graph, _, dictionary, _ = trial_network(cfg, trial=0)
        exported = np.loadtxt(out / "dictionary.csv", delimiter=",", ndmin=2)
        np.testing.assert_array_equal(exported, dictionary.centers)
        pos_lines = (out / "positions.csv").read_text().strip().splitlines()
        assert len(pos_lines) == 16
        assert (out / "edges.csv").exists()


class TestRuntimeErrors:
    def test_disconnected_graph_exit_code(self, tmp_path):
        # radius too small for connectivity within the retry budget
        code = main(["run", "--preset", "multi-gauss", "--out", str(tmp_path),
                     "--set", "n_nodes=40", "--set", "radius=0.02",
                     "--set", "iterations=5", "--set", "trials=1"])
        assert code == 3

    def test_missing_grid_file(self, tmp_path):
        code = main(["run", "--preset", "altitude", "--grid",
                     str(tmp_path / "missing.grid"), "--out", str(tmp_path),
                     "--set", "n_nodes=10", "--set", "radius=0.6",
                     "--set", "iterations=5", "--set", "trials=1"])
        assert code == 3
