import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

import spinboson_nrg.engine as engine_mod
import spinboson_nrg.sweep as sweep_mod
from spinboson_nrg import (
    DomainError,
    NRGConfig,
    SpinBosonPoint,
    SweepSpec,
    preset,
    read_json_records,
    run_point,
    run_sweep,
    verify,
    write_output,
    write_output_path,
)
from spinboson_nrg.cli import main, parse_axis, read_config_file
from spinboson_nrg.sweep import CSV_HEADER

FAST = NRGConfig(n_keep=80, n_max=60)
POINT = SpinBosonPoint(alpha=0.3, epsilon=0.0, delta_ratio=0.04)


@pytest.fixture(scope="module")
def sample_record():
    return run_point(POINT, FAST)


class TestRunPoint:
    def test_deterministic(self, sample_record):
        again = run_point(POINT, FAST)
        assert again == sample_record

    def test_record_consistency(self, sample_record):
        r = sample_record
        assert r.sy == 0.0
        assert r.p_plus + r.p_minus == pytest.approx(1.0, abs=1e-15)
        assert r.p_plus == pytest.approx((1 + r.norm) / 2, abs=1e-12)
        assert 0.0 <= r.entropy <= 1.0
        assert r.norm <= 1.0 + 1e-8
        assert r.lam == FAST.lam and r.n_keep == FAST.n_keep

    def test_symmetric_point_band(self, sample_record):
        r = sample_record
        assert abs(r.sz) < 1e-6
        assert 0.0 < r.sx < 1.0
        assert 0.0 < r.entropy < 1.0


class TestRunSweep:
    def test_rows_sorted_and_complete(self):
        spec = SweepSpec(
            alpha=(0.4, 0.2), eps_over_delta=(0.0,), delta_ratio=(0.1, 0.04)
        )
        records = run_sweep(spec, FAST)
        keys = [(r.delta_ratio, r.eps_over_delta, r.alpha) for r in records]
        assert keys == sorted(keys)
        assert len(records) == 4

    def test_parallel_matches_serial(self):
        spec = SweepSpec(alpha=(0.2, 0.4), eps_over_delta=(0.0,), delta_ratio=(0.04,))
        serial = run_sweep(spec, FAST, jobs=1)
        parallel = run_sweep(spec, FAST, jobs=2)
        assert serial == parallel

    def test_empty_axis_rejected(self):
        spec = SweepSpec(alpha=(), eps_over_delta=(0.0,), delta_ratio=(0.04,))
        with pytest.raises(DomainError, match="non-empty"):
            run_sweep(spec, FAST)

    def test_invalid_grid_point_rejected_upfront(self):
        spec = SweepSpec(alpha=(0.5, 1.5), eps_over_delta=(0.0,), delta_ratio=(0.04,))
        with pytest.raises(DomainError):
            run_sweep(spec, FAST)

    def test_partial_failure_recorded(self, monkeypatch):
        calls = {}

        def boom(p, cfg):
            if p.alpha == 0.4:
                raise RuntimeError("synthetic failure")
            calls[p.alpha] = True
            return run_point(p, cfg)

        monkeypatch.setattr(sweep_mod, "run_point", boom)
        spec = SweepSpec(alpha=(0.2, 0.4), eps_over_delta=(0.0,), delta_ratio=(0.04,))
        records = run_sweep(spec, FAST)
        assert len(records) == 2
        failed = [r for r in records if r.error]
        assert len(failed) == 1
        assert "synthetic failure" in failed[0].error
        assert not failed[0].converged


class TestPresets:
    def test_fig1_grid(self):
        spec = preset("fig1")
        assert spec.eps_over_delta == (0.0,)
        assert spec.delta_ratio == (0.01, 0.04, 0.1)
        assert len(spec.alpha) == 19
        assert spec.alpha[0] == 0.05 and spec.alpha[-1] == 0.95
        assert len(spec.points()) == 57

    def test_fig2_grid(self):
        spec = preset("fig2")
        assert spec.delta_ratio == (0.04,)
        assert spec.eps_over_delta == (0.02, 0.1, 0.5)

    def test_fig3_grid(self):
        spec = preset("fig3")
        assert spec.delta_ratio == (0.04,)
        assert 1.0 in spec.eps_over_delta

    def test_unknown_preset(self):
        with pytest.raises(DomainError, match="unknown preset"):
            preset("fig9")


class TestOutput:
    def test_csv_two_lines_for_one_record(self, sample_record):
        buf = io.StringIO()
        write_output([sample_record], "csv", buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 2
        assert lines[0] == CSV_HEADER
        cells = lines[1].split(",")
        assert len(cells) == len(CSV_HEADER.split(","))
        assert cells[0] == "0.3"
        assert cells[6] == "true"

    def test_csv_twelve_significant_digits(self, sample_record):
        buf = io.StringIO()
        write_output([sample_record], "csv", buf)
        row = buf.getvalue().splitlines()[1].split(",")
        sx_cell = row[7]
        assert float(sx_cell) == pytest.approx(sample_record.sx, rel=1e-11)
        assert len(sx_cell.replace("-", "").replace(".", "").lstrip("0")) <= 13

    def test_json_round_trip_bit_exact(self, sample_record, tmp_path):
        path = tmp_path / "records.json"
        write_output_path([sample_record], "json", str(path), FAST)
        back = read_json_records(str(path))
        assert back == [sample_record]

    def test_json_metadata_block(self, sample_record, tmp_path):
        path = tmp_path / "records.json"
        write_output_path([sample_record], "json", str(path), FAST, note="hello")
        payload = json.loads(path.read_text())
        meta = payload["metadata"]
        assert meta["config"]["lambda"] == FAST.lam
        assert meta["config"]["n_keep"] == FAST.n_keep
        assert meta["config"]["eta"] == FAST.eta
        assert "sign_convention" in meta
        assert meta["note"] == "hello"
        assert payload["records"][0]["lambda"] == FAST.lam


class TestVerify:
    def test_fresh_build_passes(self):
        report = verify(NRGConfig())
        assert report.passed, [c for c in report.checks if not c.passed]

    def test_lambda_15_passes(self):
        report = verify(NRGConfig(lam=1.5))
        assert report.passed

    def test_sabotaged_sign_rule_fails(self, monkeypatch):
        monkeypatch.setattr(engine_mod, "_block_parity_sign", lambda q, n: 1.0)
        report = verify(NRGConfig())
        assert not report.passed
        failed = {c.name for c in report.checks if not c.passed}
        assert "oracle equivalence" in failed


class TestCLIHelpers:
    def test_parse_axis_forms(self):
        assert parse_axis("0.5") == (0.5,)
        assert parse_axis("0.1,0.2,0.3") == (0.1, 0.2, 0.3)
        assert parse_axis("0.1:0.5:0.1") == (0.1, 0.2, 0.3, 0.4, 0.5)

    def test_config_file(self, tmp_path):
        path = tmp_path / "solver.conf"
        path.write_text("n_keep = 64\nlambda = 2.5  # coarse\n\neta = 0.05\n")
        values = read_config_file(str(path))
        assert values == {"n_keep": 64, "lambda": 2.5, "eta": 0.05}

    def test_config_file_unknown_key(self, tmp_path):
        path = tmp_path / "solver.conf"
        path.write_text("n_kept = 64\n")
        from spinboson_nrg.cli import CLIError

        with pytest.raises(CLIError, match="unknown key"):
            read_config_file(str(path))


class TestCLI:
    def test_point_to_csv_file(self, tmp_path):
        out = tmp_path / "point.csv"
        code = main([
            "point", "--alpha", "0.3", "--delta-ratio", "0.04",
            "--n-keep", "80", "--n-max", "60", "--output", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2

    def test_config_file_flags_win(self, tmp_path):
        conf = tmp_path / "c.conf"
        conf.write_text("n_keep = 64\nn_max = 60\n")
        out = tmp_path / "p.json"
        code = main([
            "point", "--alpha", "0.3", "--config", str(conf),
            "--n-keep", "80", "--format", "json", "--output", str(out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["metadata"]["config"]["n_keep"] == 80  # flag beats file
        assert payload["metadata"]["config"]["n_max"] == 60   # file beats default

    def test_paper_fidelity_flag_precedence(self, tmp_path):
        out = tmp_path / "p.json"
        code = main([
            "point", "--alpha", "0.3", "--paper-fidelity", "--lambda", "2.0",
            "--n-max", "60", "--format", "json", "--output", str(out),
        ])
        assert code == 0
        cfg = json.loads(out.read_text())["metadata"]["config"]
        assert cfg["lambda"] == 2.0      # explicit flag beats the bundle
        assert cfg["n_keep"] == 1200     # bundle beats the default

    def test_domain_error_exit_code(self, capsys):
        assert main(["point", "--alpha", "1.2"]) == 1
        assert "dissipation sector" in capsys.readouterr().err

    def test_usage_error_exit_code(self):
        assert main(["point"]) == 1  # --alpha is required
        assert main(["frobnicate"]) == 1

    def test_io_error_exit_code(self):
        code = main([
            "point", "--alpha", "0.3", "--n-keep", "80", "--n-max", "60",
            "--output", "/nonexistent-dir/x.csv",
        ])
        assert code == 3

    def test_verify_exit_codes(self, monkeypatch):
        assert main(["verify"]) == 0
        monkeypatch.setattr(engine_mod, "_block_parity_sign", lambda q, n: 1.0)
        assert main(["verify"]) == 2

    def test_alpha_max_validation(self):
        assert main(["alpha-max", "--eps-over-delta", "-0.5"]) == 1

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "cli.csv"
        env = dict(os.environ)
        proc = subprocess.run(
            [sys.executable, "-m", "spinboson_nrg", "point", "--alpha", "0.3",
             "--n-keep", "80", "--n-max", "60", "--output", str(out)],
            capture_output=True, text=True, env=env,
        )
        assert proc.returncode == 0
        assert out.read_text().startswith(CSV_HEADER)

    def test_sweep_csv_ordering(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main([
            "sweep", "--alpha", "0.4,0.2", "--delta-ratio", "0.04",
            "--n-keep", "80", "--n-max", "60", "--output", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        alphas = [float(l.split(",")[0]) for l in lines[1:]]
        assert alphas == sorted(alphas)
