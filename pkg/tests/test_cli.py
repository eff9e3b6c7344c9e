"""End-to-end tests for the command line interface."""

import json

import pytest

from unsurecrowd import cli

SMALL_TOML = """
[experiment]
tasks = 30
labels_per_task = [3]
seed = 11

[[crowds]]
name = "pm"
dist = "point_mass"
theta = 0.7

[[mechanisms]]
name = "SA"
kind = "simple"
"""


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestBounds:
    def test_simple_bound_json(self, capsys):
        code, out, _ = run(["bounds", "--mu", "0.75", "--delta", "0.05"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert abs(payload["required_cost"] - 31.9544775845759) < 1e-9

    def test_quality_bound_selected_by_flags(self, capsys):
        code, out, _ = run(["bounds", "--T", "0.8", "--eta", "0.3"], capsys)
        assert code == 0
        assert json.loads(out)["required_cost"] > 0

    def test_plan_mode_reports_threshold(self, capsys):
        code, out, _ = run(["bounds", "--mu", "0.5238095238", "--sigma2", "0.048",
                            "--gamma", "1.0"], capsys)
        assert code == 0
        assert abs(json.loads(out)["threshold"] - 0.68279) < 5e-4

    def test_missing_flags_exit_2(self, capsys):
        code, _, err = run(["bounds"], capsys)
        assert code == 2
        assert "error:" in err

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "b.json"
        code, _, _ = run(["bounds", "--mu", "0.75", "--out", str(path)], capsys)
        assert code == 0
        assert "required_cost" in json.loads(path.read_text())


class TestSimulate:
    def test_simple_task_summary(self, capsys):
        code, out, _ = run(["simulate", "--dist", "point_mass", "--theta", "0.9",
                            "--labels", "5", "--seed", "3"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert len(payload["labels"]) == 5
        assert payload["estimate"] in (-1, 1)
        assert payload["total_payment"] == 5.0

    def test_unsure_needs_threshold(self, capsys):
        code, _, err = run(["simulate", "--mechanism", "unsure", "--labels", "3"],
                           capsys)
        assert code == 2
        assert "threshold" in err

    def test_exactly_one_stopping_rule(self, capsys):
        code, _, _ = run(["simulate", "--labels", "3", "--workers", "5"], capsys)
        assert code == 2


class TestSweep:
    def test_sweep_is_byte_deterministic(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(SMALL_TOML)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(["sweep", "--config", str(cfg), "--out", str(p1)], capsys)[0] == 0
        assert run(["sweep", "--config", str(cfg), "--out", str(p2)], capsys)[0] == 0
        assert p1.read_bytes() == p2.read_bytes()

    def test_tasks_override(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(SMALL_TOML)
        out = tmp_path / "c.csv"
        code, stdout, _ = run(["sweep", "--config", str(cfg), "--tasks", "10",
                               "--out", str(out)], capsys)
        assert code == 0
        assert "wrote 1 rows" in stdout

    def test_bad_config_exit_2(self, capsys, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text("[experiment\n")
        code, _, err = run(["sweep", "--config", str(cfg)], capsys)
        assert code == 2
        assert "error:" in err


class TestOluAndPlot:
    def test_olu_trace(self, capsys, tmp_path):
        out = tmp_path / "trace.csv"
        code, stdout, _ = run(["olu", "--dist", "point_mass", "--theta", "0.85",
                               "--rounds", "200", "--seed", "5",
                               "--candidates", "0.6", "0.8", "--out", str(out)],
                              capsys)
        assert code == 0
        assert "most-pulled threshold" in stdout
        lines = out.read_text().splitlines()
        assert lines[0] == "round,arm_threshold,reward,cumulative_mean"
        assert len(lines) == 201

    def test_plot_round_trip(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(SMALL_TOML)
        csv_path, svg_path = tmp_path / "r.csv", tmp_path / "r.svg"
        assert run(["sweep", "--config", str(cfg), "--out", str(csv_path)],
                   capsys)[0] == 0
        code, _, _ = run(["plot", str(csv_path), "--out", str(svg_path)], capsys)
        assert code == 0
        assert svg_path.read_text().startswith("<svg")

    def test_plot_missing_file_exit_1(self, capsys, tmp_path):
        code, _, err = run(["plot", str(tmp_path / "missing.csv")], capsys)
        assert code == 1
        assert "error:" in err


class TestParser:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["bounds", "--nope"])
        assert exc.value.code == 2

    @pytest.mark.parametrize("sub", ["bounds", "simulate", "sweep", "olu", "plot"])
    def test_help_per_subcommand(self, sub, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([sub, "--help"])
        assert exc.value.code == 0
        assert "usage" in capsys.readouterr().out
