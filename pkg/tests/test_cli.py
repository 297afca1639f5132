import json
import os

import numpy as np
import pytest

from SNS_ROUGH import config
from SNS_ROUGH.cli import EXIT_ABORT
from SNS_ROUGH.cli import EXIT_INVALID
from SNS_ROUGH.cli import EXIT_OK
from SNS_ROUGH.cli import cli_main
from SNS_ROUGH.cli import parse_ladder
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.state import CalibrationStore
from SNS_ROUGH.storage import content_hash
from SNS_ROUGH.storage import dump_field
from SNS_ROUGH.storage import load_field
from SNS_ROUGH.storage import read_csv


SILENT_RUN = {"N": 16, "T": 0.0625, "dt": 0.0078125, "gn_constant": 1.0, "noise": {"amplitude": 0.0}}


def write_config(tmp_path, data) -> str:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


class TestArguments:
    """Argument parsing and exit codes."""

    def test_version(self, capsys):
        assert cli_main(["--version"]) == EXIT_OK
        assert config.VERSION in capsys.readouterr().out

    def test_subcommand_is_required(self):
        assert cli_main([]) == EXIT_INVALID

    def test_unknown_suite(self):
        assert cli_main(["verify", "--suite", "NOPE"]) == EXIT_INVALID

    def test_missing_config_file(self, tmp_path, capsys):
        assert cli_main(["simulate", "--config", str(tmp_path / "absent.json")]) == EXIT_INVALID
        assert "config file not found" in capsys.readouterr().err

    def test_invalid_configuration(self, tmp_path):
        """dt must divide T."""
        path = write_config(tmp_path, {"N": 16, "T": 0.1, "dt": 0.03})
        assert cli_main(["simulate", "--config", path]) == EXIT_INVALID

    def test_ladder_parsing(self):
        assert parse_ladder("1,4,16") == (1, 4, 16)
        assert cli_main(["convergence", "--n-ladder", "1,x"]) == EXIT_INVALID
        assert cli_main(["convergence", "--n-ladder", "0,4"]) == EXIT_INVALID


class TestVerify:
    """Calibration from the command line."""

    def test_single_inequality(self, tmp_path):
        out_dir = tmp_path / "verify"
        store_path = tmp_path / "constants.json"
        code = cli_main([
            "verify", "--suite", "INTERP", "--samples", "3", "--resolution", "16",
            "--out-dir", str(out_dir), "--calibration-file", str(store_path)
        ])
        assert code == EXIT_OK

        rows = read_csv(str(out_dir / "report.csv"))
        assert [row["inequality_id"] for row in rows] == ["INTERP"]
        assert rows[0]["resolution"] == "16"

        key = CalibrationStore.key("INTERP", 2, 16, 0.5)
        assert CalibrationStore(str(store_path)).get_constant(key) == float(rows[0]["calibrated_constant"])

        with open(out_dir / "run-meta.json") as f:
            meta = json.load(f)
        assert meta["subcommand"] == "verify"
        assert meta["config"]["constants"] == {key: float(rows[0]["calibrated_constant"])}
        assert meta["input_hash"] == content_hash(b"")


class TestSimulate:
    """One trajectory from the command line."""

    def test_outputs(self, tmp_path):
        path = write_config(tmp_path, SILENT_RUN)
        out_dir = tmp_path / "sim"
        assert cli_main(["simulate", "--config", path, "--out", str(out_dir), "--dump"]) == EXIT_OK

        rows = read_csv(str(out_dir / "diagnostics.csv"))
        assert float(rows[0]["t"]) == 0.0
        assert float(rows[-1]["t"]) == pytest.approx(0.0625)

        with open(out_dir / "summary.json") as f:
            summary = json.load(f)
        assert summary["steps"] == 8
        assert summary["majorant_holds"]
        assert summary["residual_holds"]

        field, time = load_field(str(out_dir / "fields" / "v_00000.snsf"))
        assert time == 0.0
        assert field.grid == TorusGrid(N=16)
        assert os.path.exists(out_dir / "wiener.snsf")

        with open(out_dir / "run-meta.json") as f:
            meta = json.load(f)
        assert meta["input_hash"] == content_hash((tmp_path / "run.json").read_bytes())
        assert meta["config"]["constants"] == {"GN": 1.0}

    def test_default_output_directory(self, tmp_path):
        path = write_config(tmp_path, SILENT_RUN)
        assert cli_main(["simulate", "--config", path]) == EXIT_OK
        assert os.path.exists(os.path.join(config.OUTPUT_DIR, "simulate", "summary.json"))

    def test_non_finite_initial_data_aborts(self, tmp_path):
        """A NaN field aborts with exit code 2 and keeps the diagnostics computed so far."""
        grid = TorusGrid(N=16)
        field_path = str(tmp_path / "nan.snsf")
        dump_field(field_path, SpectralField.wrap(grid, np.full((2,) + grid.shape, np.nan, dtype=np.complex128)))
        path = write_config(tmp_path, dict(SILENT_RUN, initial={"kind": "file", "path": field_path}))
        out_dir = tmp_path / "sim"

        assert cli_main(["simulate", "--config", path, "--out-dir", str(out_dir)]) == EXIT_ABORT
        assert len(read_csv(str(out_dir / "diagnostics.csv"))) == 1
        assert os.path.exists(out_dir / "run-meta.json")
