"""End-to-end tests of the command-line interface.

Each command is run in-process through ``main`` with stdout captured;
CSV bodies are parsed back and checked against module-level recomputation
or frozen closed-form values.  Exit codes: 0 success, 1 failed
verification, 2 configuration problems, 3 non-convergence.
"""

import csv
import io
import math

import pytest

from cdmalimits import capacity_sync_closed_form, solve_efficiency_sync
from cdmalimits.cli import main

SYNC_CAPACITY_LOAD1_SNR10 = 2.723326465736502


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _parse(out):
    """Split a CSV payload into (comment header dict, row dicts)."""
    header = {}
    body_lines = []
    for line in out.splitlines():
        if line.startswith("#"):
            if "=" in line:
                key, _, value = line[1:].partition("=")
                header[key.strip()] = value.strip()
        else:
            body_lines.append(line)
    rows = list(csv.DictReader(io.StringIO("\n".join(body_lines))))
    return header, rows


class TestArgumentHandling:
    def test_no_command_exits_with_usage_error(self, capsys):
        code, _, err = _run(capsys, [])
        assert code == 2

    def test_invalid_waveform_spec(self, capsys):
        code, _, err = _run(capsys, ["efficiency", "--waveform", "gauss:1"])
        assert code == 2
        assert "waveform" in err

    def test_malformed_number(self, capsys):
        code, _, err = _run(capsys, ["efficiency", "--beta", "fast"])
        assert code == 2

    def test_range_where_single_value_expected(self, capsys):
        code, _, err = _run(capsys, ["efficiency", "--beta", "0.5:2:4"])
        assert code == 2


class TestConfigResolution:
    def test_dump_config_shows_defaults(self, capsys):
        code, out, _ = _run(capsys, ["efficiency", "--dump-config"])
        assert code == 0
        lines = dict(line.split(" = ", 1) for line in out.strip().splitlines())
        assert lines["beta"] == "1"
        assert lines["waveform"] == "rrc:0.22"
        assert lines["seed"] == "12345"

    def test_file_overrides_default_flag_overrides_file(self, tmp_path,
                                                        capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment line\nbeta = 2.5\nn0 = 0.3\n")
        code, out, _ = _run(capsys, ["efficiency", "--config", str(cfg),
                                     "--n0", "0.7", "--dump-config"])
        assert code == 0
        lines = dict(line.split(" = ", 1) for line in out.strip().splitlines())
        assert lines["beta"] == "2.5"   # file beats default
        assert lines["n0"] == "0.7"     # flag beats file

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bogus_key = 1\n")
        code, _, err = _run(capsys, ["efficiency", "--config", str(cfg)])
        assert code == 2
        assert "bogus_key" in err

    def test_missing_config_file(self, capsys):
        code, _, err = _run(capsys, ["efficiency", "--config",
                                     "/nonexistent/run.cfg"])
        assert code == 2


class TestEfficiencyCommand:
    def test_zero_load_scalar_is_exactly_one(self, capsys):
        code, out, _ = _run(capsys, ["efficiency", "--beta", "0",
                                     "--density-points", "64"])
        assert code == 0
        _, rows = _parse(out)
        scalar = [r for r in rows if r["record"] == "scalar"]
        assert len(scalar) == 1
        assert scalar[0]["value"] == "1.0"

    def test_flat_pulse_matches_sync_baseline(self, capsys):
        code, out, _ = _run(capsys, ["efficiency", "--waveform", "sinc:1",
                                     "--r", "1", "--density-points", "64",
                                     "--sync-baseline"])
        assert code == 0
        _, rows = _parse(out)
        by_record = {r["record"]: float(r["value"]) for r in rows
                     if r["record"] in ("scalar", "sync_baseline")}
        assert by_record["scalar"] == pytest.approx(
            by_record["sync_baseline"], abs=1e-10)
        want = solve_efficiency_sync(1.0, [1.0], [1.0], 0.1)
        assert by_record["scalar"] == pytest.approx(want, abs=1e-10)

    def test_cross_check_matrix_against_scalar(self, capsys):
        code, out, _ = _run(capsys, ["efficiency", "--cross-check",
                                     "--n-delays", "16", "--grid", "128",
                                     "--density-points", "512"])
        assert code == 0
        _, rows = _parse(out)
        scalar = float([r for r in rows if r["record"] == "scalar"][0]["value"])
        matrix = float([r for r in rows
                        if r["record"] == "matrix_mean"][0]["value"])
        assert abs(matrix - scalar) / scalar <= 1e-3
        users = [r for r in rows if r["record"] == "user_efficiency"]
        assert len(users) == 16
        assert {r["delay_chips"] != "" for r in users} == {True}

    def test_density_rows_cover_support(self, capsys):
        code, out, _ = _run(capsys, ["efficiency", "--density-points", "32"])
        assert code == 0
        _, rows = _parse(out)
        density = [r for r in rows if r["record"] == "density"]
        assert len(density) == 32
        omegas = [float(r["omega"]) for r in density]
        edge = 2 * math.pi * 0.61
        assert all(-edge < w < edge for w in omegas)
        assert all(0.0 < float(r["value"]) <= 1.0 for r in density)

    def test_hypothesis_violation_exit_code_and_message(self, capsys):
        code, _, err = _run(capsys, ["efficiency", "--delays", "zero"])
        assert code == 2
        assert "uniform" in err and "bandwidth" in err


class TestCapacityCommand:
    def test_explicit_snr_matches_closed_form(self, capsys):
        code, out, _ = _run(capsys, ["capacity", "--waveform", "sinc:1",
                                     "--r", "1", "--snr", "10",
                                     "--density-points", "512"])
        assert code == 0
        _, rows = _parse(out)
        assert len(rows) == 1
        cap = float(rows[0]["capacity_per_chip"])
        assert cap == pytest.approx(SYNC_CAPACITY_LOAD1_SNR10, rel=1e-4)
        # One-sided bandwidth accounting: T_c * B = 1/2.
        assert float(rows[0]["spectral_efficiency"]) == \
            pytest.approx(2.0 * cap, rel=1e-12)
        assert float(rows[0]["ebn0_db"]) == pytest.approx(
            10.0 * math.log10(1.0 * 10.0 / cap), rel=1e-9)

    def test_zero_load_short_circuit(self, capsys):
        code, out, _ = _run(capsys, ["capacity", "--beta", "0",
                                     "--snr", "10"])
        assert code == 0
        _, rows = _parse(out)
        assert float(rows[0]["capacity_per_chip"]) == 0.0

    def test_operating_point_from_ebn0(self, capsys):
        code, out, _ = _run(capsys, ["capacity", "--waveform", "sinc:1",
                                     "--r", "1", "--ebn0-db", "10",
                                     "--density-points", "512"])
        assert code == 0
        _, rows = _parse(out)
        snr = float(rows[0]["snr"])
        cap = float(rows[0]["capacity_per_chip"])
        # The reported point satisfies the energy-per-bit identity.
        assert 1.0 * snr / cap == pytest.approx(10.0, rel=1e-4)

    def test_unreachable_ebn0_is_nonconvergence(self, capsys):
        code, _, err = _run(capsys, ["capacity", "--waveform", "sinc:1",
                                     "--r", "1", "--ebn0-db", "-10"])
        assert code == 3
        assert "unreachable" in err


class TestFigureCommands:
    def test_figure2_shape(self, capsys):
        code, out, _ = _run(capsys, ["figure2", "--alpha", "1:2:3",
                                     "--density-points", "512"])
        assert code == 0
        _, rows = _parse(out)
        assert [float(r["alpha"]) for r in rows] == [1.0, 1.5, 2.0]
        async_gamma = [float(r["gamma_async_sinc"]) for r in rows]
        sync_gamma = [float(r["gamma_sync"]) for r in rows]
        # Equal at alpha = 1, async above sync beyond, decreasing in alpha.
        assert async_gamma[0] == pytest.approx(sync_gamma[0], rel=1e-3)
        assert async_gamma[2] > sync_gamma[2]
        assert async_gamma[0] > async_gamma[1] > async_gamma[2]

    def test_figure3_gap_nonnegative_and_growing(self, capsys):
        code, out, _ = _run(capsys, ["figure3", "--beta", "1:4:2",
                                     "--density-points", "512"])
        assert code == 0
        _, rows = _parse(out)
        gaps = [float(r["relative_gap"]) for r in rows]
        assert len(gaps) == 2
        assert all(g >= 0.0 for g in gaps)
        assert gaps[1] >= gaps[0]
        for r in rows:
            assert float(r["gamma_async"]) >= float(r["gamma_sync"]) - 1e-12


class TestMonteCarloCommand:
    ARGS = ["montecarlo", "--n", "16", "--trials", "2", "--n-delays", "4",
            "--grid", "128"]

    def test_byte_identical_reruns(self, capsys):
        code1, out1, _ = _run(capsys, self.ARGS)
        code2, out2, _ = _run(capsys, self.ARGS)
        assert code1 == code2 == 0
        assert out1 == out2

    def test_prediction_independent_of_seed(self, capsys):
        _, out1, _ = _run(capsys, self.ARGS + ["--seed", "1"])
        _, out2, _ = _run(capsys, self.ARGS + ["--seed", "2"])
        h1, rows1 = _parse(out1)
        h2, rows2 = _parse(out2)
        assert h1["predicted_mean_efficiency"] == \
            h2["predicted_mean_efficiency"]
        assert h1["empirical_mean_efficiency"] != \
            h2["empirical_mean_efficiency"]
        assert rows1[0]["predicted_efficiency"] == \
            rows2[0]["predicted_efficiency"]
        assert rows1[0]["sinr"] != rows2[0]["sinr"]

    def test_row_structure(self, capsys):
        code, out, _ = _run(capsys, self.ARGS)
        assert code == 0
        header, rows = _parse(out)
        assert header["n_users"] == "8"
        assert len(rows) == 2 * 8
        assert [int(r["trial"]) for r in rows] == [0] * 8 + [1] * 8
        assert [int(r["user"]) for r in rows] == list(range(8)) * 2
        for r in rows:
            assert float(r["sinr"]) > 0.0
            assert 0.0 < float(r["efficiency"]) < 1.0

    def test_writes_file(self, tmp_path, capsys):
        out_path = tmp_path / "mc.csv"
        code, out, _ = _run(capsys, self.ARGS + ["--out", str(out_path)])
        assert code == 0
        assert out == ""
        text = out_path.read_text()
        assert text.startswith("# command = montecarlo")
        assert "predicted_efficiency" in text


class TestTheorem3Command:
    def test_windowed_vs_reduced_rows(self, capsys):
        code, out, _ = _run(capsys, ["theorem3", "--n", "16", "--beta",
                                     "0.25", "--trials", "4", "--window",
                                     "2"])
        assert code == 0
        _, rows = _parse(out)
        records = {r["record"]: r for r in rows}
        assert set(records) == {"windowed", "reduced", "difference"}
        gap = abs(float(records["difference"]["mean_sinr"]))
        width = float(records["difference"]["sinr_standard_error"])
        assert gap <= 2.0 * width
        assert int(records["windowed"]["trials"]) == 4


class TestVerifyCommand:
    def test_fresh_run_passes(self, capsys):
        code, out, _ = _run(capsys, ["verify", "--instances", "3"])
        assert code == 0
        _, rows = _parse(out)
        assert len(rows) == 8
        assert {r["status"] for r in rows} == {"pass"}
        for r in rows:
            assert float(r["residual"]) <= float(r["tolerance"])

    def test_negative_control_fails_trace_check(self, capsys):
        code, out, _ = _run(capsys, ["verify", "--instances", "3",
                                     "--negative-control"])
        assert code == 1
        _, rows = _parse(out)
        by_check = {r["check"]: r["status"] for r in rows}
        assert by_check["trace_annihilation"] == "fail"


class TestCsvConventions:
    def test_header_embeds_resolved_config_and_seed(self, capsys):
        code, out, _ = _run(capsys, ["efficiency", "--beta", "0",
                                     "--density-points", "32",
                                     "--seed", "777"])
        assert code == 0
        header, _ = _parse(out)
        assert header["command"] == "efficiency"
        assert header["seed"] == "777"
        assert header["beta"] == "0"
        assert "out" in header

    def test_rows_match_column_count(self, capsys):
        _, out, _ = _run(capsys, ["efficiency", "--density-points", "32"])
        lines = [l for l in out.splitlines() if l and not l.startswith("#")]
        width = len(lines[0].split(","))
        assert all(len(l.split(",")) == width for l in lines)

    def test_no_timestamps(self, capsys):
        _, out, _ = _run(capsys, ["capacity", "--beta", "0", "--snr", "1"])
        assert "202" not in out.split("\n# out")[0]
