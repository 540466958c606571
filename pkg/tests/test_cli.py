import json
import os

import pytest

from uqkrig.cli import main
from uqkrig.experiment import METHOD_TOKENS


def run_cli(*argv):
    return main(list(argv))


def fast_run_args(outdir, **over):
    args = {"benchmarks": "1", "methods": "constant", "reps": "1",
            "restarts": "2", "seed": "7", "n-val": "100", "lhs-budget": "200"}
    args.update(over)
    argv = ["run", "--output-dir", str(outdir)]
    for key, value in args.items():
        argv += [f"--{key}", value]
    return argv


class TestRun:
    def test_deterministic_records_csv(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run_cli(*fast_run_args(a)) == 0
        assert run_cli(*fast_run_args(b)) == 0
        assert (a / "records.csv").read_bytes() == (b / "records.csv").read_bytes()

    def test_grid_cardinality(self, tmp_path):
        assert run_cli(*fast_run_args(tmp_path, benchmarks="1,3",
                                      methods="zero,constant", reps="2")) == 0
        rows = [line for line in (tmp_path / "records.csv").read_text().splitlines()
                if line and not line.startswith("#")]
        assert len(rows) - 1 == 2 * 2 * 2  # benchmarks x methods x reps

    def test_outputs_carry_metadata_headers(self, tmp_path):
        assert run_cli(*fast_run_args(tmp_path)) == 0
        for name in ("records.csv", "timings.csv"):
            head = (tmp_path / name).read_text().splitlines()[:4]
            assert head[0].startswith("# uqkrig ")
            assert head[1] == "# master_seed=7"
            assert head[2].startswith("# config_sha256=")
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["meta"]["master_seed"] == 7
        assert summary["cells"][0]["benchmark"] == 1
        assert summary["cells"][0]["fit_seconds_mean"] > 0

    def test_config_file_with_flag_overrides(self, tmp_path):
        config = {"benchmarks": [1], "methods": ["constant"], "reps": 1,
                  "restarts": 2, "seed": 3, "n_val": 100, "lhs_budget": 200}
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config))
        out = tmp_path / "out"
        assert run_cli("run", "--config", str(path), "--output-dir", str(out),
                       "--seed", "11") == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["meta"]["master_seed"] == 11

    def test_env_var_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UQKRIG_OUTPUT_DIR", str(tmp_path / "env_out"))
        argv = [a for a in fast_run_args(tmp_path)  # strip explicit output dir
                if a != "--output-dir" and a != str(tmp_path)]
        assert run_cli(*argv) == 0
        assert (tmp_path / "env_out" / "records.csv").exists()

    def test_malformed_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run_cli("run", "--config", str(bad)) == 2
        unknown = tmp_path / "unknown.json"
        unknown.write_text(json.dumps({"grad_method": "fd"}))
        assert run_cli("run", "--config", str(unknown)) == 2
        assert run_cli("run", "--benchmarks", "12") == 2
        assert run_cli("run", "--methods", "cubic") == 2

    def test_plots_emission(self, tmp_path):
        pytest.importorskip("matplotlib")
        assert run_cli(*fast_run_args(tmp_path), "--plots") == 0
        assert (tmp_path / "nmse.svg").exists()
        assert (tmp_path / "runtime.svg").exists()

    def test_parallel_jobs_match_serial_results(self, tmp_path):
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        base = fast_run_args(serial, benchmarks="1", methods="zero,constant")
        assert run_cli(*base) == 0
        assert run_cli(*fast_run_args(parallel, benchmarks="1",
                                      methods="zero,constant"),
                       "--jobs", "2") == 0

        def rows(path):
            return [line for line in (path / "records.csv").read_text().splitlines()
                    if line and not (line.startswith("#") or line.startswith("benchmark"))]

        assert rows(serial) == rows(parallel)

    def test_fd_arm_and_both(self, tmp_path):
        assert run_cli(*fast_run_args(tmp_path, **{"grad-mode": "both"})) == 0
        rows = [line for line in (tmp_path / "records.csv").read_text().splitlines()
                if line and not line.startswith("#")]
        assert len(rows) - 1 == 2  # one analytic and one fd record
        assert {r.split(",")[4] for r in rows[1:]} == {"analytic", "fd"}


class TestValidateGradients:
    def test_small_sweep_passes(self, capsys):
        assert run_cli("validate-gradients", "--dims", "1,2", "--seed", "0") == 0
        out = capsys.readouterr().out
        assert out.count("ok") == 12  # six trend kinds per dimension

    def test_empty_dims_usage_error(self):
        assert run_cli("validate-gradients", "--dims", "") == 2

    def test_injected_sign_error_detected(self):
        assert run_cli("validate-gradients", "--dims", "1",
                       "--inject-sign-error") == 1


class TestTable:
    def _write_records(self, path, cells):
        lines = ["# uqkrig test", "benchmark,method,rep,seed,grad_mode,nmse,n,"
                 "n_val,restarts"]
        for bid, method, nmse in cells:
            lines.append(f"{bid},{method},0,1,analytic,{nmse},10,100,2")
        path.write_text("\n".join(lines) + "\n")

    def test_full_grid_table_shape_and_formatting(self, tmp_path, capsys):
        records = tmp_path / "records.csv"
        cells = [(bid, method, 0.000941) for bid in range(1, 10)
                 for method in METHOD_TOKENS]
        self._write_records(records, cells)
        assert run_cli("table", str(records)) == 0
        out = capsys.readouterr().out.splitlines()
        assert len(out) == 2 + 9  # header, separator, nine benchmark rows
        assert all(tok in out[0] for tok in METHOD_TOKENS)
        assert "9.41E-04" in out[2]
        assert (tmp_path / "nmse_table.md").read_text().splitlines() == out

    def test_averages_repetitions(self, tmp_path, capsys):
        records = tmp_path / "records.csv"
        self._write_records(records, [(1, "zero", 0.01), (1, "zero", 0.03)])
        assert run_cli("table", str(records)) == 0
        assert "2.00E-02" in capsys.readouterr().out

    def test_empty_records_exit_2(self, tmp_path):
        records = tmp_path / "records.csv"
        records.write_text("benchmark,method,rep,seed,grad_mode,nmse,n,n_val,"
                           "restarts\n")
        assert run_cli("table", str(records)) == 2

    def test_missing_columns_exit_2(self, tmp_path):
        records = tmp_path / "records.csv"
        records.write_text("benchmark,rep\n1,0\n")
        assert run_cli("table", str(records)) == 2

    def test_missing_file_exit_2(self, tmp_path):
        assert run_cli("table", str(tmp_path / "absent.csv")) == 2


def test_usage_errors_exit_2():
    assert run_cli("frobnicate") == 2
    assert run_cli() == 2
