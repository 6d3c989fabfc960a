import json

import pytest

from sase import cli, harness
from sase.errors import NumericalError


class TestCli:
    def test_run_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code = cli.main(["run", "--sweep", "snr", "--trials", "2", "--seed", "42", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(harness.CSV_COLUMNS)
        assert len(lines) == 10

    def test_run_json_with_config(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("trials = 2\nsnr_db_grid = 0, 10\nmode = unconstrained\n")
        out = tmp_path / "r.json"
        assert cli.main(["run", "--config", str(cfg), "--format", "json", "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["config"]["mode"] == "unconstrained"
        assert len(data["rows"]) == 2

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("seed = 1\n")
        assert cli.main(["show-config", "--config", str(cfg), "--seed", "5"]) == 0
        assert "seed = 5" in capsys.readouterr().out

    def test_output_dir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SASE_OUTPUT_DIR", str(tmp_path))
        assert cli.main(["run", "--trials", "1", "--snr-grid", "10"]) == 0
        assert (tmp_path / "sase_snr.csv").exists()

    def test_config_error_exit(self, capsys):
        assert cli.main(["run", "--channel-uses", "245"]) == 2
        assert "244" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "absent.cfg")]) == 2

    def test_numerical_failure_exit(self, monkeypatch):
        def boom(*a, **k):
            raise NumericalError("ill-conditioned")

        monkeypatch.setattr(harness, "run_sweep", boom)
        assert cli.main(["run", "--trials", "1"]) == 3

    def test_rank_check(self, capsys):
        assert cli.main(["rank-check", "--trials", "10"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "m,rank_min,rank_mean,rank_max,trials"
        assert all(line.split(",")[1] == "4" for line in out[1:])

    def test_budget_table(self, capsys):
        assert cli.main(["budget-table", "--arnoldi-iters", "4"]) == 0
        out = capsys.readouterr().out
        assert "Arnoldi,192.0,true" in out
        assert "SASE,244.0,true" in out

    def test_requires_subcommand(self):
        with pytest.raises(SystemExit):
            cli.main([])
