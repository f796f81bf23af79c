"""Command-line behavior: flag/config merging, exit codes, stream
separation, and byte-level determinism across parallelism."""

import json
import os
import subprocess
import sys

import pytest

from kgqv import cli
from kgqv.errors import NumericError


def run_main(args, capsys):
    rc = cli.main(args)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def run_proc(args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "kgqv.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


class TestUsageErrors:
    def test_missing_experiment_names_the_field(self, capsys):
        rc, _, err = run_main(["run"], capsys)
        assert rc == 2
        assert "experiment" in err

    def test_unknown_experiment_lists_valid_ids(self, capsys):
        rc, _, err = run_main(["run", "--experiment", "nope"], capsys)
        assert rc == 2
        assert "green_identities" in err and "oracle_check" in err

    def test_non_power_of_two_resolution(self, capsys):
        rc, _, err = run_main(
            ["run", "--experiment", "oracle_check", "--n", "100"], capsys
        )
        assert rc == 2
        assert "power of two" in err

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["run", "--granularity", "3"])
        assert exc.value.code == 2

    def test_unknown_config_key_is_named(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "oracle_check", "epsilon": 0.1}))
        rc, _, err = run_main(["run", "--config", str(cfg)], capsys)
        assert rc == 2
        assert "epsilon" in err

    def test_config_wrong_type_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "oracle_check", "n": "big"}))
        rc, _, err = run_main(["run", "--config", str(cfg)], capsys)
        assert rc == 2
        assert "n" in err

    def test_config_boolean_rejected_for_number(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "oracle_check", "a": True}))
        rc, _, err = run_main(["run", "--config", str(cfg)], capsys)
        assert rc == 2
        assert "boolean" in err

    def test_malformed_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        rc, _, err = run_main(["run", "--config", str(cfg)], capsys)
        assert rc == 2
        assert "JSON" in err

    def test_config_must_be_object(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("[1, 2]")
        rc, _, err = run_main(["run", "--config", str(cfg)], capsys)
        assert rc == 2

    def test_missing_config_file(self, capsys):
        rc, _, err = run_main(["run", "--config", "/no/such/file.json"], capsys)
        assert rc == 2
        assert "not found" in err


class TestRuns:
    def test_flags_override_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(
            json.dumps(
                {"experiment": "green_identities", "seed": 3, "out": str(tmp_path)}
            )
        )
        rc, out, _ = run_main(["run", "--config", str(cfg), "--seed", "9"], capsys)
        assert rc == 0
        assert json.loads(out)["seed"] == 9

    def test_config_file_alone_supplies_everything(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(
            json.dumps(
                {"experiment": "green_identities", "seed": 3, "out": str(tmp_path)}
            )
        )
        rc, out, _ = run_main(["run", "--config", str(cfg)], capsys)
        assert rc == 0
        assert json.loads(out)["seed"] == 3
        assert (tmp_path / "green_identities.csv").exists()

    def test_stdout_is_json_and_progress_is_on_stderr(self, tmp_path, capsys):
        rc, out, err = run_main(
            ["run", "--experiment", "oracle_check", "--out", str(tmp_path)], capsys
        )
        assert rc == 0
        payload = json.loads(out)  # stdout must parse as a whole
        assert payload["experiment"] == "oracle_check"
        assert "oracle_check" in err

    def test_csv_has_comments_then_header_then_rows(self, tmp_path, capsys):
        rc, out, _ = run_main(
            ["run", "--experiment", "green_identities", "--out", str(tmp_path)],
            capsys,
        )
        assert rc == 0
        lines = (tmp_path / "green_identities.csv").read_text().splitlines()
        head = [l for l in lines if l.startswith("#")]
        body = [l for l in lines if not l.startswith("#")]
        assert head and body[0].startswith("a,m,t,xi")
        assert len(body) - 1 == json.loads(out)["summary"]["points"]

    def test_failed_bound_exits_one(self, tmp_path, capsys):
        # the p=1 damped quadratures level off above the target, so this
        # configuration reports a failed bound, not an error
        rc, out, _ = run_main(
            ["run", "--experiment", "kernel_lemma", "--n", "64",
             "--out", str(tmp_path)],
            capsys,
        )
        assert rc == 1
        assert json.loads(out)["passed"] is False

    def test_numeric_error_exits_three(self, capsys, monkeypatch):
        def boom(cfg):
            raise NumericError("statistic went non-finite")

        monkeypatch.setattr(cli, "run", boom)
        rc, _, err = run_main(["run", "--experiment", "oracle_check"], capsys)
        assert rc == 3
        assert "non-finite" in err


class TestDeterminism:
    BASE = [
        "run", "--experiment", "linear_variance", "--n", "64",
        "--seed", "7",
    ]

    @staticmethod
    def stripped(payload: str) -> dict:
        d = json.loads(payload)
        d.pop("wall_time_s")
        return d

    def test_byte_identical_across_jobs(self, tmp_path):
        # enough replications to span several scheduler chunks
        outs = []
        for jobs in ("1", "2"):
            out = tmp_path / f"j{jobs}"
            r = run_proc(
                self.BASE + ["--reps", "9000", "--jobs", jobs, "--out", str(out)]
            )
            assert r.returncode == 0, r.stderr
            outs.append((out / "linear_variance.csv").read_bytes())
            outs.append(self.stripped(r.stdout))
        assert outs[0] == outs[2]
        assert outs[1] == outs[3]

    def test_byte_identical_rerun(self, tmp_path):
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            r = run_proc(
                self.BASE + ["--reps", "600", "--jobs", "2", "--out", str(out)]
            )
            assert r.returncode == 0, r.stderr
            blobs.append((out / "linear_variance.csv").read_bytes())
            blobs.append(self.stripped(r.stdout))
        assert blobs[0] == blobs[2]
        assert blobs[1] == blobs[3]

    def test_vector_path_byte_identical_across_jobs(self, tmp_path):
        blobs = []
        for jobs in ("1", "2"):
            out = tmp_path / f"v{jobs}"
            r = run_proc(
                self.BASE + ["--reps", "600", "--jobs", jobs, "--out", str(out)],
                env_extra={"KGQV_NUMBA": "0"},
            )
            assert r.returncode == 0, r.stderr
            blobs.append((out / "linear_variance.csv").read_bytes())
        assert blobs[0] == blobs[1]
