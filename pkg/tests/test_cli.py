import json
import os

import numpy as np
import pytest

from srsmine import load_statin_table
from srsmine.cli import (
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_USAGE,
    EXIT_VALIDATION,
    main,
    read_draws_archive,
    write_draws_archive,
)
from srsmine.dp_mcmc import ModelConfig, run_chain
from srsmine.stochastic import RngStream
from srsmine.tables import table_to_csv


@pytest.fixture(scope="module")
def table_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "small.csv"
    counts = load_statin_table().counts[:8, :4].copy()
    from srsmine.tables import ContingencyTable

    t = ContingencyTable(
        counts,
        load_statin_table().ae_names[:8],
        load_statin_table().drug_names[:4],
    )
    path.write_text(table_to_csv(t))
    return str(path)


def run_cli(*argv):
    return main(list(argv))


class TestArchive:
    def test_round_trip(self, tmp_path, small_table):
        draws = run_chain(small_table, ModelConfig(truncation=2, n_burn=5, n_keep=12),
                          RngStream(3))
        path = tmp_path / "draws.bin"
        write_draws_archive(path, draws)
        back = read_draws_archive(path)
        assert np.array_equal(back, draws.lambda_draws)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"NOTDRAWS" + b"\x00" * 32)
        with pytest.raises(ValueError):
            read_draws_archive(path)


class TestFitDetect:
    def test_pipeline_and_manifest(self, table_csv, tmp_path):
        out_fit = str(tmp_path / "fit")
        code = run_cli(
            "fit", "--table", table_csv, "--out", out_fit,
            "--burnin", "30", "--draws", "60", "--seed", "9", "--K", "3",
        )
        assert code == 0
        for name in ("posterior_summary.csv", "hyperparameters.csv",
                      "draws.bin", "manifest.json"):
            assert os.path.exists(os.path.join(out_fit, name))
        manifest = json.load(open(os.path.join(out_fit, "manifest.json")))
        assert manifest["seed"] == 9
        assert manifest["config"]["burnin"] == 30
        assert "mcmc" in manifest["timings"]

        out_det = str(tmp_path / "det")
        code = run_cli(
            "detect", "--draws", os.path.join(out_fit, "draws.bin"),
            "--table", table_csv, "--out", out_det, "--alpha", "0.05",
        )
        assert code == 0
        signals = open(os.path.join(out_det, "signals.csv")).read().splitlines()
        assert len(signals) == 9  # header + 8 rows
        assert os.path.exists(os.path.join(out_det, "manifest.json"))

    def test_fit_deterministic(self, table_csv, tmp_path):
        outs = []
        for tag in ("a", "b"):
            out = str(tmp_path / tag)
            run_cli("fit", "--table", table_csv, "--out", out,
                    "--burnin", "20", "--draws", "40", "--seed", "4", "--K", "3")
            outs.append(open(os.path.join(out, "posterior_summary.csv")).read())
        assert outs[0] == outs[1]

    def test_dimension_mismatch_exit(self, table_csv, tmp_path, small_table):
        draws = run_chain(small_table, ModelConfig(truncation=2, n_burn=5, n_keep=6),
                          RngStream(3))
        archive = tmp_path / "d.bin"
        write_draws_archive(archive, draws)
        code = run_cli("detect", "--draws", str(archive), "--table", table_csv,
                       "--out", str(tmp_path / "o"))
        assert code == EXIT_VALIDATION

    def test_missing_table_exit(self, tmp_path):
        code = run_cli("fit", "--table", str(tmp_path / "nope.csv"),
                       "--out", str(tmp_path / "o"))
        assert code == EXIT_IO

    def test_detect_custom_grid(self, table_csv, tmp_path):
        out_fit = str(tmp_path / "fit")
        run_cli("fit", "--table", table_csv, "--out", out_fit,
                "--burnin", "20", "--draws", "40", "--seed", "1", "--K", "3")
        code = run_cli(
            "detect", "--draws", os.path.join(out_fit, "draws.bin"),
            "--table", table_csv, "--out", str(tmp_path / "d"),
            "--p-grid", "0.05", "--k-grid", "1.5,2.0",
        )
        assert code == 0


class TestBaselineCommand:
    def test_gps(self, table_csv, tmp_path):
        out = str(tmp_path / "gps")
        assert run_cli("baseline", "--table", table_csv, "--method", "gps",
                       "--out", out) == 0
        assert os.path.exists(os.path.join(out, "signals.csv"))
        assert os.path.exists(os.path.join(out, "gps_hyper.csv"))
        assert os.path.exists(os.path.join(out, "eb05.csv"))

    def test_lrt(self, table_csv, tmp_path):
        out = str(tmp_path / "lrt")
        assert run_cli("baseline", "--table", table_csv, "--method", "lrt",
                       "--n-boot", "150", "--out", out) == 0
        assert os.path.exists(os.path.join(out, "p_values.csv"))

    def test_bcpnn(self, table_csv, tmp_path):
        out = str(tmp_path / "bcpnn")
        assert run_cli("baseline", "--table", table_csv, "--method", "bcpnn",
                       "--n-mc", "2000", "--out", out) == 0
        assert os.path.exists(os.path.join(out, "ic_summary.csv"))

    def test_dp_hu(self, table_csv, tmp_path):
        out = str(tmp_path / "hu")
        assert run_cli("baseline", "--table", table_csv, "--method", "dp-hu",
                       "--burnin", "20", "--draws", "40", "--K", "3",
                       "--out", out) == 0
        assert os.path.exists(os.path.join(out, "detection.csv"))

    def test_unknown_method(self, table_csv, tmp_path):
        assert run_cli("baseline", "--table", table_csv, "--method", "nope",
                       "--out", str(tmp_path / "x")) == EXIT_USAGE


class TestSimulateCommand:
    def test_explicit_fields_and_config_file(self, table_csv, tmp_path):
        out = str(tmp_path / "sim")
        cfg = tmp_path / "study.cfg"
        cfg.write_text(
            "table={}\nreplicates=2\nlambda_signal=2\nmethods=gps\nseed=5\n"
            "# comment line\n".format(table_csv)
        )
        code = run_cli("simulate", "--config", str(cfg), "--out", out,
                       "--fixed-rows", "2", "--random-per-col", "1")
        assert code == 0
        lines = open(os.path.join(out, "metrics.csv")).read().splitlines()
        assert lines[0].startswith("method,lambda_signal,fdr,fdr_se,sensitivity")
        assert len(lines) == 2

    def test_zero_replicates_usage_error(self, table_csv, tmp_path):
        code = run_cli("simulate", "--table", table_csv, "--scenario", "2a",
                       "--replicates", "0", "--out", str(tmp_path / "x"))
        assert code == EXIT_USAGE

    def test_scenario_too_large_for_table(self, table_csv, tmp_path):
        # 8-row table cannot hold scenario 2a's 20 signal rows
        code = run_cli("simulate", "--table", table_csv, "--scenario", "2a",
                       "--replicates", "1", "--lambda-signal", "2",
                       "--methods", "gps", "--seed", "1",
                       "--out", str(tmp_path / "x"))
        assert code == EXIT_VALIDATION
