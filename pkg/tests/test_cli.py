import json

import pytest

from calojump.cli import build_parser, main


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code, _, err = run_cli(["rates", "--k", "0", "--n-osc", "10",
                                "--grid", "0:50", "--out", str(out)], capsys)
        assert code == 0
        assert err == ""
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 52
        # gamma_up[n] = n*kappa at k = 0
        assert float(lines[4].split(",")[2]) == pytest.approx(0.003)

    def test_usage_error_is_1(self, capsys):
        code, _, err = run_cli(["rates", "--grid", "nonsense"], capsys)
        assert code == 1
        assert err.startswith("error_code=usage")

    def test_unknown_flag_is_1(self, capsys):
        code, _, err = run_cli(["rates", "--frobnicate", "3"], capsys)
        assert code == 1
        assert err.startswith("error_code=usage")

    def test_domain_error_is_2(self, tmp_path, capsys):
        # negative grid floor with perfect measurement is a domain error
        code, _, err = run_cli(["rates", "--k", "0", "--grid=-5:5",
                                "--out", str(tmp_path / "r.csv")], capsys)
        assert code == 2
        assert err.startswith("error_code=domain")

    def test_numerical_guard_is_2(self, tmp_path, capsys):
        code, _, err = run_cli(["trajectory", "--dt", "1000", "--t-final", "2000",
                                "--out", str(tmp_path / "t.csv")], capsys)
        assert code == 2
        assert err.startswith("error_code=refusal")


class TestConfigFile:
    def test_config_supplies_values_flags_win(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kappa": 0.002, "grid": "0:3"}))
        out = tmp_path / "r.csv"
        code, _, _ = run_cli(["rates", "--config", str(cfg), "--k", "0",
                              "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 5  # grid from config file
        assert float(lines[2].split(",")[2]) == pytest.approx(0.002)  # kappa too

        code, _, _ = run_cli(["rates", "--config", str(cfg), "--k", "0",
                              "--kappa", "0.004", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert float(lines[2].split(",")[2]) == pytest.approx(0.004)  # flag wins

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"kapa": 0.002}))
        code, _, err = run_cli(["rates", "--config", str(cfg)], capsys)
        assert code == 1
        assert "kapa" in err

    def test_invalid_json_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        code, _, err = run_cli(["rates", "--config", str(cfg)], capsys)
        assert code == 1


class TestSubcommands:
    def test_trajectory_no_dynamics(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code, stdout, _ = run_cli(["trajectory", "--kappa", "0", "--lambda", "0",
                                   "--t-final", "100", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines == ["seed,t_omega,kind,e_index_after"]

    def test_ensemble_summary(self, tmp_path, capsys):
        out = tmp_path / "e.csv"
        code, _, _ = run_cli(["ensemble", "--t-final", "30", "--n-traj", "10",
                              "--psi", "excited", "--grid", "0:10",
                              "--sample-every", "500", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("t_omega,mean_excited")
        assert len(lines) == 4

    def test_master_eq_series(self, tmp_path, capsys):
        out = tmp_path / "m.csv"
        dist = tmp_path / "d.csv"
        code, _, _ = run_cli(["master-eq", "--t-final", "30", "--psi", "excited",
                              "--grid", "0:5", "--record-every", "500",
                              "--out", str(out), "--dist-out", str(dist)], capsys)
        assert code == 0
        assert out.read_text().startswith("t_omega,total_trace")
        assert dist.read_text().startswith("t_omega,n,prob")

    def test_fig2_outputs(self, tmp_path, capsys):
        code, _, _ = run_cli(["fig2", "--out-dir", str(tmp_path),
                              "--k-values", "0.01,1,100"], capsys)
        assert code == 0
        assert (tmp_path / "fig2_rates.csv").exists()
        code, _, _ = run_cli(["fig2", "--out-dir", str(tmp_path), "--inset"], capsys)
        assert code == 0
        assert (tmp_path / "fig2_inset.csv").exists()

    def test_fig3_determinism(self, tmp_path, capsys):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        args = ["fig3", "--seed", "42", "--n-traj", "25", "--periods", "2",
                "--k-values", "0,4"]
        assert run_cli(args + ["--out-dir", str(d1)], capsys)[0] == 0
        assert run_cli(args + ["--out-dir", str(d2)], capsys)[0] == 0
        f1 = (d1 / "fig3_transfer.csv").read_bytes()
        f2 = (d2 / "fig3_transfer.csv").read_bytes()
        assert f1 == f2

    def test_help_lists_flags(self, capsys):
        parser = build_parser()
        with pytest.raises(SystemExit) as exc:
            parser.parse_args(["fig3", "--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--kappa", "--lambda", "--n-osc", "--k", "--n-cutoff",
                     "--gamma", "--seed", "--config", "--out-dir", "--n-traj",
                     "--periods", "--workers"):
            assert flag in text
        assert "omega" in text  # units documented

    def test_every_subcommand_has_help(self, capsys):
        parser = build_parser()
        for cmd in ("rates", "trajectory", "ensemble", "master-eq", "fig2",
                    "fig3", "fig4"):
            with pytest.raises(SystemExit) as exc:
                parser.parse_args([cmd, "--help"])
            assert exc.value.code == 0
            capsys.readouterr()
