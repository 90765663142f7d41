import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from thermosafe import cli
from thermosafe.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


class TestConfigResolution:
    def test_defaults_filled_from_preset(self):
        cfg = cli.resolve_campaign_config({"plant": "demo1", "preset": "demo1"})
        assert cfg["algorithm"]["safety_threshold"] == 4.0
        assert cfg["algorithm"]["beta"] == 2.0
        assert cfg["grid"]["counts"] == [200]
        assert cfg["objective_kernel"]["prior_mean"] is None
        assert cfg["init_points"] == [[1.6], [2.0], [2.4]]

    def test_overrides(self):
        cfg = cli.resolve_campaign_config({"plant": "demo1", "preset": "demo1"}, seed=5,
                                          algo_override="stageopt", iterations=7)
        assert cfg["seed"] == 5 and cfg["algorithm"]["max_iterations"] == 7
        assert cfg["algorithm"]["name"] == "stageopt"

    @pytest.mark.parametrize("raw", [
        {"plant": "demo1", "preset": "demo1", "colour": "red"},
        {"plant": "demo1", "preset": "demo1", "algorithm": {"name": "safeOpt", "gamma": 1}},
        {"plant": "demo1", "preset": "demo1", "objective_kernel": {"amplitude": -1}},
        {"plant": "demo1", "grid": {"bounds": [[0, 10]], "counts": [50]}},
        {"preset": "nrpd-2d"},
        {"plant": "demo1", "preset": "demo1", "algorithm": {"name": "shrinkAlgo"}},
    ])
    def test_invalid(self, raw):
        with pytest.raises(ConfigError):
            cli.resolve_campaign_config(raw)

    def test_config_hash_is_order_independent(self):
        assert cli.config_hash({"a": 1, "b": [1, 2]}) == cli.config_hash({"b": [1, 2], "a": 1})
        assert cli.config_hash({"a": 1}) != cli.config_hash({"a": 2})


class TestOptimize:
    def test_artifacts(self, tmp_path, capsys):
        assert run("optimize", "--config", CONFIGS / "demo1.yaml", "--out", tmp_path,
                   "--iterations", 6) == cli.EXIT_OK
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["history.csv", "manifest.json", "summary.json", "surfaces.jsonl"]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["seed"] == 0 and len(manifest["config_hash"]) == 64
        assert manifest["config"]["algorithm"]["max_iterations"] == 6
        assert manifest["versions"]["numpy"]
        rows = list(csv.reader((tmp_path / "history.csv").open()))
        assert len(rows) == 1 + 3 + 6
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["true_violations"] == 0 and summary["iterations"] == 6
        assert "best point" in capsys.readouterr().out

    def test_rerun_is_byte_identical(self, tmp_path):
        for k in range(2):
            run("optimize", "--config", CONFIGS / "demo1.yaml", "--out", tmp_path / str(k),
                "--iterations", 5, "--seed", 3)
        for name in ("history.csv", "surfaces.jsonl"):
            assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()

    def test_invalid_algorithm_writes_nothing(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = run("optimize", "--config", CONFIGS / "demo1.yaml", "--out", out,
                   "--algo-override", "ucb")
        assert code == cli.EXIT_CONFIG
        assert not out.exists()
        assert "unknown algorithm" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert run("optimize", "--config", tmp_path / "none.yaml", "--out", tmp_path) \
            == cli.EXIT_CONFIG

    def test_campaign_error_keeps_partial_history(self, tmp_path):
        cfg = write(tmp_path, "c.yaml", {"plant": "demo1", "preset": "demo1",
                                         "init_points": [[0.1], [9.9]]})
        code = run("optimize", "--config", cfg, "--out", tmp_path / "o")
        assert code == cli.EXIT_CAMPAIGN
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["error_type"] == "CampaignError"

    def test_plant_error(self, tmp_path):
        script = tmp_path / "plant.py"
        script.write_text("import sys\nfor line in sys.stdin:\n    print('ERR broken', flush=True)\n")
        cfg = write(tmp_path, "c.yaml", {
            "plant": {"type": "external", "command": f"{sys.executable} {script}", "timeout": 10},
            "preset": "demo1"})
        assert run("optimize", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_PLANT

    def test_algo_override(self, tmp_path):
        assert run("optimize", "--config", CONFIGS / "demo1_shrink.yaml", "--out", tmp_path,
                   "--iterations", 12) == cli.EXIT_OK
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config"]["algorithm"]["objective_threshold"] == 450.0

    def test_external_plant_campaign(self, tmp_path):
        script = tmp_path / "plant.py"
        script.write_text(
            "import sys\nsys.path.insert(0, %r)\n" % str(ROOT / "src")
            + "from thermosafe.benchmarks import demo1_eval, parse_request\n"
            "for line in sys.stdin:\n"
            "    p, _ = parse_request(line)\n"
            "    o, c = demo1_eval(p[0])\n"
            "    print(f'OK {o!r} {c!r}', flush=True)\n")
        cfg = write(tmp_path, "c.yaml", {"plant": f"external:{sys.executable} {script}",
                                         "preset": "demo1",
                                         "algorithm": {"max_iterations": 4}})
        assert run("optimize", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_OK


class TestNetworkCommands:
    def test_eigmap(self, tmp_path):
        assert run("eigmap", "--n", 0, 2, 3, "--tau", 1, 2, 2, "--out", tmp_path) == cli.EXIT_OK
        rows = list(csv.DictReader((tmp_path / "eigmap.csv").open()))
        assert {r["n"] for r in rows} == {"0", "1", "2"}
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["points"] == 6

    def test_eigmap_empty_range(self, tmp_path):
        assert run("eigmap", "--n", 0, 2, 0, "--out", tmp_path / "o") == cli.EXIT_CONFIG
        assert not (tmp_path / "o").exists()

    def test_eigmap_bad_network(self, tmp_path):
        cfg = write(tmp_path, "n.yaml", {"fs": 100, "elements": []})
        assert run("eigmap", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_CONFIG

    def test_simulate(self, tmp_path):
        code = run("simulate", "--n", 0, "--duration", 1.0, "--warmup", 0.2, "--psd",
                   "--segment", 1024, "--out", tmp_path)
        assert code == cli.EXIT_OK
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["rms_voltage_v"] == 0.0
        assert abs(summary["peak_frequency_hz"] - 200.0) < 15.0
        lines = (tmp_path / "trace.csv").read_text().splitlines()
        assert len(lines) == 10001

    def test_simulate_deterministic(self, tmp_path):
        for k in range(2):
            run("simulate", "--n", 1.0, "--tau", 2.0, "--duration", 0.3, "--warmup", 0.1,
                "--seed", 4, "--out", tmp_path / str(k))
        assert (tmp_path / "0" / "trace.csv").read_bytes() == \
            (tmp_path / "1" / "trace.csv").read_bytes()

    def test_simulate_bad_duration(self, tmp_path):
        assert run("simulate", "--duration", 0, "--out", tmp_path) == cli.EXIT_CONFIG


class TestContextChain:
    def test_chain(self, tmp_path, capsys):
        code = run("context-chain", "--config", CONFIGS / "context_chain.yaml", "--out", tmp_path)
        assert code == cli.EXIT_OK
        rows = list(csv.DictReader((tmp_path / "transfer_report.csv").open()))
        assert len(rows) == 2
        assert float(rows[1]["factor_objective"]) == pytest.approx(0.788163281944, abs=1e-9)
        assert rows[1]["seed_evaluations"] == "3" and rows[1]["iterations"] == "12"
        hist = list(csv.DictReader((tmp_path / "stage2_history.csv").open()))
        assert "z1" in hist[0] and len(hist) == 33 + 15

    def test_chain_needs_two_stages(self, tmp_path):
        cfg = write(tmp_path, "c.yaml", {"campaign": {"plant": "demo1", "preset": "demo1"},
                                         "context_length_scales": [0.1],
                                         "stages": [{"context": 0.5, "iterations": 3}]})
        assert run("context-chain", "--config", cfg, "--out", tmp_path / "o") == cli.EXIT_CONFIG


class TestPresetsAndUsage:
    def test_list(self, capsys):
        assert run("presets") == cli.EXIT_OK
        assert "sim-2d-table" in capsys.readouterr().out

    def test_show(self, capsys):
        assert run("presets", "--show", "sim-2d") == cli.EXIT_OK
        data = yaml.safe_load(capsys.readouterr().out)
        assert data["constraint_kernel"]["length_scales"] == [0.4, 1.0]

    def test_show_unknown(self):
        assert run("presets", "--show", "nope") == cli.EXIT_CONFIG

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            run("frobnicate")
        assert info.value.code == cli.EXIT_USAGE

    def test_exit_codes_distinct(self):
        codes = [cli.EXIT_OK, cli.EXIT_UNEXPECTED, cli.EXIT_USAGE, cli.EXIT_CONFIG,
                 cli.EXIT_PLANT, cli.EXIT_CAMPAIGN, cli.EXIT_SIMULATION]
        assert len(set(codes)) == len(codes)

    def test_console_script(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "thermosafe.cli", "presets"],
                              capture_output=True, text=True, cwd=tmp_path)
        assert proc.returncode == 0 and "demo1" in proc.stdout
