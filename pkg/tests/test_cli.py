import csv
import json

import numpy as np
import pytest

from gradcp.cli import run


@pytest.fixture
def jump_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 200
    u = np.arange(1, n + 1) / n
    x = (u > 0.5) + 0.25 * rng.standard_normal(n)
    path = tmp_path / "series.csv"
    np.savetxt(path, x, delimiter=",")
    return path


def read_data_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    return list(csv.reader(lines))


class TestDetectCommand:
    def test_writes_artifacts(self, tmp_path, jump_csv, capsys):
        out = tmp_path / "out"
        status = run(["detect", "--input", str(jump_csv), "--feature", "mean",
                      "--alpha", "0.1", "--sims", "300", "--seed", "3",
                      "--sigma-method", "diff", "--out", str(out)])
        assert status == 0
        payload = json.loads((out / "detection.json").read_text())
        for key in ("u_hat", "u_hat_prelim", "tau_prelim", "tau_refined", "alpha",
                    "direction", "feature", "T", "grid_size", "seed", "config"):
            assert key in payload
        assert (out / "surface.csv").exists()
        assert (out / "quantiles.csv").exists()
        # files carry the config for replay
        first = (out / "surface.csv").read_text().splitlines()[0]
        assert first.startswith("# config:")

    def test_surface_round_trip(self, tmp_path, jump_csv):
        # recomputing dsup offline from the same CSV reproduces the file
        out = tmp_path / "out"
        assert run(["surface", "--input", str(jump_csv), "--feature", "mean",
                    "--out", str(out)]) == 0
        rows = read_data_csv(out / "surface.csv")
        assert rows[0] == ["u", "dsup", "dmax", "argmax_v", "argmax_f"]
        from gradcp import build_prefix_sums, dsup_profile, load_series, make_family

        sample = load_series(jump_csv)
        fam = make_family("mean")
        surface = dsup_profile(build_prefix_sums(sample, fam), fam)
        got = np.array([float(r[1]) for r in rows[1:]])
        assert np.max(np.abs(got - surface.dsup)) <= 1e-12

    def test_reverse_variance_flags(self, tmp_path, jump_csv):
        out = tmp_path / "rev"
        status = run(["detect", "--input", str(jump_csv), "--feature", "variance",
                      "--alpha", "0.1", "--reverse", "--hac-bandwidth", "0",
                      "--sims", "200", "--seed", "1", "--out", str(out)])
        assert status == 0
        payload = json.loads((out / "detection.json").read_text())
        assert payload["direction"] == "reverse"

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        assert run(["detect", "--input", str(tmp_path / "nope.csv")]) == 2
        assert "data error" in capsys.readouterr().err

    def test_bad_cell_identifies_location(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1\nxyz\n3\n")
        assert run(["detect", "--input", str(bad)]) == 2
        assert "row 2" in capsys.readouterr().err


class TestSimulateCommand:
    def test_study_artifacts(self, tmp_path, capsys):
        out = tmp_path / "study"
        status = run(["simulate", "--model", "mu1", "--T", "150", "--N", "3",
                      "--seed", "7", "--defaults", "--sims", "200", "--out", str(out)])
        assert status == 0
        payload = json.loads((out / "study.json").read_text())
        assert payload["model"] == "mu1"
        assert payload["N"] == 3
        assert len(payload["estimates"]) == 3
        rows = read_data_csv(out / "histogram.csv")
        assert rows[0] == ["bin_left", "bin_right", "count"]
        counts = sum(int(r[2]) for r in rows[1:])
        assert counts == 3

    def test_unknown_model_usage_error(self, capsys):
        assert run(["simulate", "--model", "mu9", "--T", "100", "--N", "2"]) == 1


class TestQuantilesCommand:
    def test_pivotal_curve(self, tmp_path):
        out = tmp_path / "q"
        status = run(["quantiles", "--pivotal", "--grid-size", "32",
                      "--sims", "200", "--seed", "5", "--out", str(out)])
        assert status == 0
        rows = read_data_csv(out / "quantiles.csv")
        assert rows[0] == ["u", "q"]
        q = np.array([float(r[1]) for r in rows[1:]])
        assert q.shape == (32,)
        assert np.all(np.diff(q) >= 0)

    def test_estimated_curve_from_csv(self, tmp_path, jump_csv):
        out = tmp_path / "q2"
        status = run(["quantiles", "--input", str(jump_csv), "--feature", "variance",
                      "--hac-bandwidth", "0", "--sims", "150", "--seed", "5",
                      "--grid-size", "40", "--out", str(out)])
        assert status == 0
        rows = read_data_csv(out / "quantiles.csv")
        assert len(rows) == 41


class TestUsageErrors:
    def test_no_command(self, capsys):
        assert run([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert run(["frobnicate"]) == 1

    def test_missing_required(self, capsys):
        assert run(["detect"]) == 1


class TestSeedEnvOverride:
    def test_env_overrides_flag(self, tmp_path, jump_csv, monkeypatch):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        monkeypatch.setenv("GRADCP_SEED", "99")
        assert run(["detect", "--input", str(jump_csv), "--sims", "200",
                    "--sigma-method", "diff", "--seed", "1", "--out", str(out_a)]) == 0
        monkeypatch.delenv("GRADCP_SEED")
        assert run(["detect", "--input", str(jump_csv), "--sims", "200",
                    "--sigma-method", "diff", "--seed", "99", "--out", str(out_b)]) == 0
        a = json.loads((out_a / "detection.json").read_text())
        b = json.loads((out_b / "detection.json").read_text())
        assert a["seed"] == 99
        assert a["u_hat"] == b["u_hat"]

    def test_bad_env_seed(self, jump_csv, monkeypatch, capsys):
        monkeypatch.setenv("GRADCP_SEED", "abc")
        assert run(["detect", "--input", str(jump_csv)]) == 1
