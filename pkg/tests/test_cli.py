"""End-to-end tests of the command-line interface."""

import csv
import hashlib
import json
import math

import pytest

from dckrr import cli, rates, simlab
from dckrr.cli import EXIT_CONFIG, EXIT_EXPERIMENT, EXIT_OK, main


def _write_config(tmp_path, **overrides):
    cfg = {
        "model": "spline1d",
        "c": 1.0,
        "N_list": [128],
        "rho_list": [0.3],
        "replications": 3,
        "base_seed": 7,
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def _sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestSweepCommand:
    def test_minimal_run(self, tmp_path, capsys):
        cfg = _write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
        rows = list(csv.DictReader((out / "sweep.csv").open()))
        assert len(rows) == 1
        row = rows[0]
        assert row["N"] == "128"
        assert int(row["s"]) == max(1, math.floor(128**0.3 + 0.5))
        assert int(row["n"]) == 128 // int(row["s"])
        assert row["reps"] == "3"
        assert 0.0 <= float(row["reject_rate"]) <= 1.0
        assert float(row["mse_mean"]) > 0

    def test_manifest_hash_matches_output(self, tmp_path):
        cfg = _write_config(tmp_path)
        out = tmp_path / "out"
        main(["sweep", "--config", cfg, "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["outputs"]["sweep.csv"]["sha256"] == _sha256(out / "sweep.csv")
        assert manifest["seed"] == 7
        assert manifest["config"]["base_seed"] == 7

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = _write_config(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["sweep", "--config", cfg, "--out", str(out1)])
        main(["sweep", "--config", cfg, "--out", str(out2)])
        assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()

    def test_worker_flag_does_not_change_output(self, tmp_path):
        cfg = _write_config(tmp_path, replications=4)
        outs = []
        for w in (1, 2, 8):
            out = tmp_path / f"w{w}"
            assert main(["sweep", "--config", cfg, "--out", str(out), "--workers", str(w)]) == EXIT_OK
            outs.append((out / "sweep.csv").read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_seed_override(self, tmp_path):
        cfg = _write_config(tmp_path)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        main(["sweep", "--config", cfg, "--out", str(out1), "--seed", "1"])
        main(["sweep", "--config", cfg, "--out", str(out2), "--seed", "2"])
        assert (out1 / "sweep.csv").read_bytes() != (out2 / "sweep.csv").read_bytes()

    def test_missing_config_is_config_error(self, tmp_path, capsys):
        assert main(["sweep", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_bad_json_is_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_invalid_values_are_config_error(self, tmp_path, capsys):
        cfg = _write_config(tmp_path, rho_list=[1.5])
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_experiment_failure_exit_code(self, tmp_path, monkeypatch, capsys):
        def boom(cfg):
            raise simlab.SweepError("synthetic")

        monkeypatch.setattr(simlab, "run_sweep", boom)
        cfg = _write_config(tmp_path)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == EXIT_EXPERIMENT
        assert "experiment failure" in capsys.readouterr().err

    def test_presets_are_well_formed(self):
        for name, preset in cli.PRESETS.items():
            assert len(preset["N_list"]) == 5
            assert len(preset["rho_list"]) == 8
            assert preset["replications"] == 50
            assert name in cli.PAPER_SCALE_REPS

    def test_unknown_preset(self, tmp_path, capsys):
        assert main(["sweep", "--preset", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG


class TestRatesCommand:
    def test_spline_example_row(self, capsys):
        assert main(["rates", "--family", "spline", "--N", "4096", "--task", "estimation"]) == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "family,task,m,d,N,lambda,s_max,rho_max,rate"
        fields = out[1].split(",")
        assert fields[0] == "spline" and fields[4] == "4096"
        assert int(fields[6]) == 93
        assert float(fields[7]) == pytest.approx(math.log(93) / math.log(4096), rel=1e-12)

    def test_exponent_comment_printed(self, capsys):
        main(["rates", "--family", "spline", "--N", "4096", "--task", "testing"])
        out = capsys.readouterr().out
        assert "# exponents:" in out

    def test_invalid_parameters_exit_config(self, capsys):
        assert main(["rates", "--family", "thin_plate", "--m", "1", "--d", "2", "--N", "1024"]) == EXIT_CONFIG

    def test_matches_library(self, capsys):
        main(["rates", "--family", "gaussian", "--d", "2", "--N", "8192", "--task", "testing"])
        fields = capsys.readouterr().out.splitlines()[1].split(",")
        rx = rates.prescribe("gaussian", 2, 2, 8192, "testing")
        assert float(fields[5]) == pytest.approx(rx.lam, rel=1e-15)
        assert int(fields[6]) == rx.s_max


class TestDiagnoseCommand:
    def test_default_report(self, tmp_path):
        out = tmp_path / "d"
        cfg = tmp_path / "diag.json"
        cfg.write_text(json.dumps({"lambda_grid": [1e-2, 1e-3, 1e-4]}))
        assert main(["diagnose", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "diagnostics.json").read_text())
        assert report["family"] == "periodic_sobolev"
        assert 0 < report["tail_sum_sup"] < 1.2
        ratios = list(report["prop31_ratios"].values())
        assert all(0.2 <= r <= 1.0 for r in ratios)
        assert report["kernel_bound"]["ok"] is True
        manifest = json.loads((out / "manifest.json").read_text())
        assert "diagnostics.json" in manifest["outputs"]

    def test_xi_summary(self, tmp_path):
        out = tmp_path / "d"
        cfg = tmp_path / "diag.json"
        cfg.write_text(json.dumps({
            "lambda_grid": [1e-2],
            "xi": {"N": 256, "s": 2, "lambda": 1e-2, "seed": 0},
        }))
        assert main(["diagnose", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "diagnostics.json").read_text())
        assert report["xi"]["max"] >= report["xi"]["median"] >= 0

    def test_xi_rejected_for_thin_plate(self, tmp_path, capsys):
        cfg = tmp_path / "diag.json"
        cfg.write_text(json.dumps({
            "spectrum": {"family": "thin_plate", "m": 2, "d": 2, "M": 512},
            "lambda_grid": [1e-2],
            "xi": {"N": 64, "s": 2},
        }))
        assert main(["diagnose", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "unsupported" in capsys.readouterr().err

    def test_unknown_family_is_config_error(self, tmp_path, capsys):
        cfg = tmp_path / "diag.json"
        cfg.write_text(json.dumps({"spectrum": {"family": "bogus"}}))
        assert main(["diagnose", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
