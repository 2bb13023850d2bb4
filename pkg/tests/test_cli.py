"""End-to-end tests of the command-line client.

Runs ``main`` against the in-process service and checks the artifacts
each command leaves behind: file layout, documented CSV columns, the
embedded resolved config, determinism, and exit codes.
"""

import json

import numpy as np
import pytest

from dlet.cli import main
from dlet.serialize import dumps_json, read_json, read_table_csv, \
    strip_timing


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Shared expansion and cache artifacts for the client commands.

    The deep six-level expansion serves the terminal identity; commands
    at tau > 0 use three levels so every level fits the cache horizon.
    """
    root = tmp_path_factory.mktemp("cli")
    assert main(["decompose", "--preset", "gaussian_bump", "--levels",
                 "6", "--out", str(root / "dec6")]) == 0
    assert main(["decompose", "--preset", "gaussian_bump", "--levels",
                 "3", "--out", str(root / "dec3")]) == 0
    assert main(["cache", "--lambda", "0", "--sigma", "1", "--tau-max",
                 "1", "--tau-min", "0.0625", "--out",
                 str(root / "cache")]) == 0
    return root


@pytest.fixture()
def expansion6_path(workspace):
    return str(workspace / "dec6" / "expansion.json")


@pytest.fixture()
def expansion_path(workspace):
    return str(workspace / "dec3" / "expansion.json")


@pytest.fixture()
def cache_path(workspace):
    return str(workspace / "cache" / "cache.npz")


class TestBasis:

    def test_artifacts(self, tmp_path):
        out = tmp_path / "basis"
        assert main(["basis", "--order", "4", "--out", str(out)]) == 0
        father = read_table_csv(out / "father.csv", 2)
        mother = read_table_csv(out / "mother.csv", 2)
        assert father.shape == mother.shape
        report = read_json(out / "filter_report.json")
        assert report["kind"] == "basis"
        assert report["filter_report"]["moment_residual"] < 1e-10
        assert report["config"]["order"] == 4

    def test_haar_step_function(self, tmp_path):
        out = tmp_path / "haar"
        assert main(["basis", "--order", "1", "--out", str(out)]) == 0
        father = read_table_csv(out / "father.csv", 2)
        step = father[1, 0] - father[0, 0]
        assert np.all(np.isin(father[:, 1], (0.0, 1.0)))
        assert np.sum(father[:, 1]) * step == pytest.approx(1.0, abs=1e-3)

    def test_unsupported_order_fails(self, tmp_path, capsys):
        assert main(["basis", "--order", "0",
                     "--out", str(tmp_path)]) == 1
        assert "failed" in capsys.readouterr().err


class TestDecompose:

    def test_constant_input_zero_betas(self, tmp_path):
        out = tmp_path / "const"
        assert main(["decompose", "--preset", "linear_payoff(0, 1)",
                     "--out", str(out)]) == 0
        doc = read_json(out / "expansion.json")
        betas = [v for _, _, v in doc["expansion"]["beta"]]
        assert np.max(np.abs(betas)) < 1e-10
        assert doc["round_trip_error"] < 1e-10

    def test_csv_input_round_trip(self, tmp_path):
        x = np.arange(64) / 8.0
        vals = np.exp(-0.5 * (x - 4.0) ** 2)
        src = tmp_path / "input.csv"
        np.savetxt(src, np.column_stack([x, vals]), delimiter=",",
                   header="x,value", comments="")
        out = tmp_path / "dec"
        assert main(["decompose", "--preset", f"csv:{src}", "--levels",
                     "3", "--out", str(out)]) == 0
        doc = read_json(out / "expansion.json")
        assert doc["round_trip_error"] < 1e-10
        assert doc["preset"]["name"] == "csv"


class TestSolve:

    def test_json_artifact(self, tmp_path):
        out = tmp_path / "sol"
        assert main(["solve", "--lambda", "0", "--sigma", "1",
                     "--preset", "gaussian_bump", "--x-lo", "-4",
                     "--x-hi", "12", "--horizon", "1", "--nx", "129",
                     "--nt", "32", "--taus", "0.5,1", "--out",
                     str(out)]) == 0
        doc = read_json(out / "solution.json")
        assert doc["taus"] == [0.5, 1.0]
        assert len(doc["rows"]) == 2
        assert len(doc["rows"][0]) == 129
        assert doc["config"]["nt"] == 32

    def test_csv_artifact(self, tmp_path):
        out = tmp_path / "solcsv"
        assert main(["solve", "--lambda", "0", "--sigma", "1",
                     "--preset", "gaussian_bump", "--x-lo", "-4",
                     "--x-hi", "12", "--horizon", "1", "--nx", "65",
                     "--nt", "16", "--format", "csv", "--out",
                     str(out)]) == 0
        rows = read_table_csv(out / "solution.csv", 3)
        assert rows.shape == (65, 3)
        doc = read_json(out / "solution.json")
        assert doc["artifact"] == "solution.csv"

    def test_deterministic_excluding_timing(self, tmp_path):
        args = ["solve", "--lambda", "0", "--sigma", "1", "--preset",
                "gaussian_bump", "--x-lo", "-4", "--x-hi", "12",
                "--horizon", "1", "--nx", "65", "--nt", "16"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        a = strip_timing(read_json(tmp_path / "a" / "solution.json"))
        b = strip_timing(read_json(tmp_path / "b" / "solution.json"))
        assert dumps_json(a) == dumps_json(b)


class TestCacheAndReconstruct:

    def test_cache_artifacts(self, workspace):
        meta = read_json(workspace / "cache" / "cache.json")
        assert meta["artifact"] == "cache.npz"
        assert meta["meta"]["mode"] == "fast"
        assert (workspace / "cache" / "cache.npz").exists()

    def test_terminal_identity(self, tmp_path, cache_path,
                               expansion6_path):
        out = tmp_path / "rec"
        assert main(["reconstruct", "--cache", cache_path,
                     "--expansion", expansion6_path, "--tau", "0",
                     "--x-lo", "0", "--x-hi", "8", "--nx", "65",
                     "--format", "csv", "--out", str(out)]) == 0
        rows = read_table_csv(out / "reconstruction.csv", 2)
        bump = np.exp(-0.5 * ((rows[:, 0] - 4.0) / 0.6) ** 2)
        assert np.max(np.abs(rows[:, 1] - bump)) < 1e-6

    def test_truncation_flag(self, tmp_path, cache_path, expansion_path):
        out = tmp_path / "trunc"
        assert main(["reconstruct", "--cache", cache_path,
                     "--expansion", expansion_path, "--tau", "0.0625",
                     "--x-lo", "0", "--x-hi", "8", "--nx", "33",
                     "--epsilon", "1e-3", "--out", str(out)]) == 0
        doc = read_json(out / "reconstruction.json")
        assert doc["epsilon"] == 1e-3
        assert doc["terms_used"] >= 1

    def test_horizon_error_exit(self, tmp_path, cache_path,
                                expansion_path, capsys):
        code = main(["reconstruct", "--cache", cache_path,
                     "--expansion", expansion_path, "--tau", "9",
                     "--x-lo", "0", "--x-hi", "8", "--nx", "9",
                     "--out", str(tmp_path)])
        assert code == 1
        assert "rebuild with tau_max" in capsys.readouterr().err


class TestVarianceAndCovariance:

    def test_zero_gamma_field_is_zero(self, tmp_path, cache_path,
                                      expansion_path):
        out = tmp_path / "var0"
        assert main(["variance", "--cache", cache_path, "--expansion",
                     expansion_path, "--taus", "0,0.0625", "--x-lo", "3",
                     "--x-hi", "5", "--nx", "3", "--gamma-c", "0",
                     "--format", "csv", "--out", str(out)]) == 0
        rows = read_table_csv(out / "variance.csv", 3)
        assert rows.shape == (6, 3)
        np.testing.assert_array_equal(rows[:, 2], 0.0)

    def test_covariance_diagonal_matches_variance(self, tmp_path,
                                                  cache_path,
                                                  expansion_path):
        var_out = tmp_path / "var"
        cov_out = tmp_path / "cov"
        assert main(["variance", "--cache", cache_path, "--expansion",
                     expansion_path, "--taus", "0.0625", "--x-lo", "4",
                     "--x-hi", "4", "--nx", "1", "--format", "csv",
                     "--out", str(var_out)]) == 0
        assert main(["covariance", "--cache", cache_path, "--expansion",
                     expansion_path, "--pairs", "0.0625,4,0.0625,4",
                     "--format", "csv", "--out", str(cov_out)]) == 0
        var = read_table_csv(var_out / "variance.csv", 3)[0, 2]
        cov = read_table_csv(cov_out / "covariance.csv", 5)[0, 4]
        assert cov == var


class TestValidate:

    def test_passing_suite(self, tmp_path, capsys):
        out = tmp_path / "val"
        assert main(["validate", "--suite", "filters", "--out",
                     str(out)]) == 0
        printed = capsys.readouterr().out
        assert "suite filters: pass" in printed
        doc = read_json(out / "validation.json")
        assert doc["report"]["status"] == "pass"

    def test_unknown_suite_fails(self, tmp_path, capsys):
        assert main(["validate", "--suite", "nosuch", "--out",
                     str(tmp_path)]) == 1
        assert "unknown suite" in capsys.readouterr().err


class TestConfigResolution:

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lambda = 0\nsigma = 1\npreset = gaussian_bump\n"
                       "x_lo = -4\nx_hi = 12\nhorizon = 1\n"
                       "nx = 65\nnt = 16\n# trailing comment\n")
        out = tmp_path / "sol"
        assert main(["solve", "--config", str(cfg), "--nt", "8",
                     "--out", str(out)]) == 0
        doc = read_json(out / "solution.json")
        assert doc["config"]["nx"] == 65
        assert doc["config"]["nt"] == 8

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("order = 4\nwhatever = 3\n")
        assert main(["basis", "--config", str(cfg), "--out",
                     str(tmp_path)]) == 1
        assert "whatever" in capsys.readouterr().err

    def test_missing_required_rejected(self, tmp_path, capsys):
        assert main(["solve", "--out", str(tmp_path)]) == 1
        assert "missing required" in capsys.readouterr().err

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 2
        assert "COMMAND" in capsys.readouterr().out

    def test_resolved_config_embeds_seed_and_format(self, tmp_path):
        out = tmp_path / "basis"
        assert main(["basis", "--seed", "7", "--out", str(out)]) == 0
        doc = read_json(out / "filter_report.json")
        assert doc["config"]["seed"] == 7
        assert doc["config"]["command"] == "basis"
