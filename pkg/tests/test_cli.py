import json
import os
import subprocess
import sys

import pytest

from krrlab.cli import main
from krrlab.config import ConfigError, load_config
from krrlab.report import read_report_csv

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")

MINI_RATES = """
experiment = "rates"
seed = 42

[model]
basis = "trigonometric"
N = 64
decay = 0.5

[index_functions]
phi = {family = "power", rho = 0.75}
psi = {family = "power", rho = 0.5}
s = {family = "power", rho = 1.0, T = 1e18}

[target]
decay = 0.5
norm = 1.0

[noise]
sigma_bar = 0.5

[rates]
n_grid = [32, 64, 128, 256]
trials = 10
"""


@pytest.fixture()
def mini_config(tmp_path):
    path = tmp_path / "mini.toml"
    path.write_text(MINI_RATES)
    return str(path)


class TestConfig:
    def test_load_and_digest(self, mini_config):
        cfg = load_config(mini_config)
        assert cfg.experiment == "rates"
        assert cfg.seed == 42
        assert len(cfg.digest) == 16

    def test_malformed_toml(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("experiment = [unclosed")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_unknown_experiment(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('experiment = "nope"\n')
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_index_function(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text('experiment = "rates"\n')
        cfg = load_config(str(path))
        with pytest.raises(ConfigError):
            cfg.index_function("phi")

    def test_seed_override(self, mini_config):
        cfg = load_config(mini_config, seed_override=7)
        assert cfg.seed == 7


class TestRunCommand:
    def test_mini_rates_run(self, mini_config, tmp_path, capsys):
        out = tmp_path / "artifacts"
        code = main(["run", mini_config, "--out", str(out)])
        captured = capsys.readouterr().out
        assert code == 0
        assert "PASS schedule balance" in captured
        for name in ("rates.csv", "rates.json", "rates.svg"):
            assert (out / name).exists()
        payload = json.loads((out / "rates.json").read_text())
        assert payload["config_digest"]
        assert payload["version"]

    def test_malformed_config_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("experiment = [unclosed")
        code = main(["run", str(bad)])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_reversed_exponents_exit_1(self, tmp_path, capsys):
        cfg = tmp_path / "rev.toml"
        cfg.write_text("""
experiment = "assumptions"
seed = 1

[model]
basis = "trigonometric"
N = 16
decay = 0.5

[index_functions]
phi = {family = "power", rho = 0.5}
psi = {family = "power", rho = 0.75}
""")
        code = main(["run", str(cfg), "--out", str(tmp_path / "o")])
        out = capsys.readouterr().out
        assert code == 1
        assert "FAIL growth: phi/psi nondecreasing" in out
        assert "witness" in out

    def test_determinism_byte_identical(self, mini_config, tmp_path, capsys):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["run", mini_config, "--out", str(out_a)]) == 0
        assert main(["run", mini_config, "--out", str(out_b)]) == 0
        capsys.readouterr()
        for name in ("rates.csv", "rates.json", "rates.svg"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_seed_env_override_changes_results(self, mini_config, tmp_path,
                                               capsys, monkeypatch):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["run", mini_config, "--out", str(out_a)])
        monkeypatch.setenv("KRRLAB_SEED", "777")
        main(["run", mini_config, "--out", str(out_b)])
        capsys.readouterr()
        assert (out_a / "rates.csv").read_bytes() != \
            (out_b / "rates.csv").read_bytes()


class TestPlotCommand:
    def test_plot_from_report(self, mini_config, tmp_path, capsys):
        out = tmp_path / "artifacts"
        main(["run", mini_config, "--out", str(out)])
        svg_path = tmp_path / "chart.svg"
        code = main(["plot", str(out / "rates.csv"), "--out", str(svg_path)])
        capsys.readouterr()
        assert code == 0
        content = svg_path.read_text()
        assert content.startswith("<svg")
        assert "empirical" in content and "predicted" in content
        assert "slope" in content

    def test_plot_deterministic(self, mini_config, tmp_path, capsys):
        out = tmp_path / "artifacts"
        main(["run", mini_config, "--out", str(out)])
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        main(["plot", str(out / "rates.csv"), "--out", str(a)])
        main(["plot", str(out / "rates.csv"), "--out", str(b)])
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_plot_missing_columns(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        code = main(["plot", str(bad)])
        assert code == 1
        assert "plot error" in capsys.readouterr().err

    def test_plot_empty_report(self, tmp_path, capsys):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        assert main(["plot", str(bad)]) == 1
        capsys.readouterr()


class TestReportHelpers:
    def test_read_report_skips_stamp(self, mini_config, tmp_path, capsys):
        out = tmp_path / "artifacts"
        main(["run", mini_config, "--out", str(out)])
        capsys.readouterr()
        rows = read_report_csv(out / "rates.csv")
        assert len(rows) == 4
        assert all(r["mean_err"] > 0 for r in rows)

    def test_console_entrypoint(self, mini_config, tmp_path):
        out = tmp_path / "artifacts"
        proc = subprocess.run(
            [sys.executable, "-m", "krrlab.cli", "run", mini_config,
             "--out", str(out)],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "checks passed" in proc.stdout
