import json

import pytest

from latgas.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out.strip() else None, err


class TestVerify:
    def test_single_identity_passes(self, capsys):
        code, payload, _ = run_json(
            capsys, "verify", "--identity", "gradient",
            "--model", "bernstein:n=2,L=4", "--N", "12")
        assert code == 0
        assert payload["passed"] is True
        assert payload["states_checked"] == 4096

    def test_mutation_fails_with_witness(self, capsys):
        code, payload, _ = run_json(capsys, "verify", "--identity", "gradient",
                                    "--mutate", "h")
        assert code == 1
        assert payload["failures"] > 0
        assert payload["reports"][0]["failures"], "witness expected"

    def test_suite(self, capsys):
        code, payload, _ = run_json(capsys, "verify", "--all", "--L", "2")
        assert code == 0
        assert payload["identities"] > 30
        assert payload["passed"] is True

    def test_mutate_needs_identity(self, capsys):
        code, _, err = run(capsys, "verify", "--all", "--mutate", "h")
        assert code == 2
        assert "mutate" in err

    def test_report_written(self, capsys, tmp_path):
        out = tmp_path / "report.json"
        code, _, _ = run(capsys, "verify", "--identity", "partition",
                         "--L", "2", "--out", str(out))
        assert code == 0
        assert json.loads(out.read_text())["passed"] is True


class TestGraph:
    def test_summary_and_csv(self, capsys, tmp_path):
        out = tmp_path / "g.csv"
        code, payload, _ = run_json(capsys, "graph", "--model", "rpmm:l=1,L=2",
                                    "--N", "8", "--out", str(out))
        assert code == 0
        assert payload["states"] == 256
        assert payload["blocked"] > 0
        lines = out.read_text().splitlines()
        assert "state_id,sector,class_id,blocked" in lines

    def test_structure_checks(self, capsys):
        code, payload, _ = run_json(capsys, "graph", "--model", "bernstein:n=1,L=2",
                                    "--N", "10", "--structure")
        assert code == 0
        checks = {c["check"] for c in payload["structure"]}
        assert checks == {"mobility", "mass-transport"}

    def test_requires_model(self, capsys):
        code, _, err = run(capsys, "graph", "--N", "8")
        assert code == 2
        assert "--model" in err


class TestSimulate:
    def test_writes_outputs(self, capsys, tmp_path):
        out = tmp_path / "traj.csv"
        code, payload, _ = run_json(
            capsys, "simulate", "--model", "ssep", "--N", "32", "--K", "4",
            "--profile", "step:0.8,0.2", "--times", "0.01,0.02", "--replicas", "2",
            "--seed", "5", "--out", str(out))
        assert code == 0
        assert payload["events"] and not any(payload["blocked"])
        assert out.exists() and (tmp_path / "traj.json").exists()

    def test_blocked_exit_code(self, capsys, tmp_path):
        out = tmp_path / "traj.csv"
        code, payload, _ = run_json(
            capsys, "simulate", "--model", "ssep", "--N", "16", "--K", "4",
            "--profile", "constant:0.0", "--times", "0.05", "--out", str(out))
        assert code == 3
        assert payload["blocked"] == [1]
        assert out.exists(), "partial output must be retained"

    def test_times_or_tmax_required(self, capsys):
        code, _, err = run(capsys, "simulate", "--model", "ssep", "--N", "16",
                           "--K", "4", "--profile", "constant:0.5")
        assert code == 2
        assert "times" in err

    def test_times_and_tmax_conflict(self, capsys):
        code, _, err = run(capsys, "simulate", "--model", "ssep", "--N", "16",
                           "--K", "4", "--profile", "constant:0.5",
                           "--times", "0.1", "--tmax", "0.1")
        assert code == 2


class TestHydro:
    def test_tmax_schedule(self, capsys, tmp_path):
        out = tmp_path / "prof.csv"
        code, payload, _ = run_json(capsys, "hydro", "--model", "ssep",
                                    "--profile", "cosine:0.5,0.2",
                                    "--tmax", "0.05", "--M", "64",
                                    "--out", str(out))
        assert code == 0
        assert payload["times_requested"] == [0.01, 0.025, 0.05]
        assert payload["mass_drift"] < 1e-10
        assert out.read_text().startswith("# model=ssep")


class TestCompare:
    def test_small_pipeline(self, capsys, tmp_path):
        out = tmp_path / "cmp.json"
        code, payload, _ = run_json(
            capsys, "compare", "--model", "bernstein:n=1,L=2", "--N", "128",
            "--K", "8", "--M", "64", "--profile", "step:0.8,0.2",
            "--tmax", "0.05", "--replicas", "3", "--seed", "1",
            "--threads", "2", "--out", str(out))
        assert code == 0
        assert len(payload["times"]) == 3
        report = json.loads(out.read_text())
        assert [r["t"] for r in report["times"]] == [0.01, 0.025, 0.05]

    def test_grid_mismatch_is_usage_error(self, capsys):
        code, _, err = run(capsys, "compare", "--model", "ssep", "--N", "64",
                           "--K", "8", "--M", "60", "--profile", "step:0.8,0.2",
                           "--tmax", "0.02")
        assert code == 2
        assert "multiple" in err


class TestExpectation:
    def test_estimate_with_exact_reference(self, capsys):
        code, payload, _ = run_json(
            capsys, "expectation", "--model", "rpmm:l=2,L=4", "--rho", "0.5",
            "--samples", "20000", "--seed", "7")
        assert code == 0
        assert payload["exact"] == 0.25
        assert abs(payload["estimate"] - 0.25) <= 5 * payload["stderr"]


class TestConfigFile:
    def test_config_supplies_defaults(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": "ssep", "rho": 0.3, "samples": 500}))
        code, payload, _ = run_json(capsys, "expectation", "--config", str(cfg))
        assert code == 0
        assert payload["rho"] == 0.3 and payload["samples"] == 500

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": "ssep", "rho": 0.3, "samples": 500}))
        code, payload, _ = run_json(capsys, "expectation", "--config", str(cfg),
                                    "--rho", "0.9")
        assert payload["rho"] == 0.9 and payload["samples"] == 500

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model": "ssep", "rho": 0.5, "bogus": 1}))
        code, _, err = run(capsys, "expectation", "--config", str(cfg))
        assert code == 2
        assert "bogus" in err

    def test_malformed_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        code, _, err = run(capsys, "expectation", "--config", str(cfg))
        assert code == 2


def test_usage_error_from_argparse():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--identity", "nonsense"])
    assert exc.value.code == 2


def test_determinism_of_cli_outputs(capsys, tmp_path):
    # identical arguments and seed give byte-identical CSV and, apart from
    # the timing block, identical JSON
    argv = ["simulate", "--model", "rpmm:l=1,L=2", "--N", "32", "--K", "4",
            "--profile", "step:0.7,0.3", "--times", "0.02", "--seed", "9"]
    outs = []
    for tag in ("a", "b"):
        path = tmp_path / f"{tag}.csv"
        code, _, _ = run(capsys, *argv, "--out", str(path))
        assert code == 0
        outs.append(path)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    ja = json.loads((tmp_path / "a.json").read_text())
    jb = json.loads((tmp_path / "b.json").read_text())
    ja.pop("timing"), jb.pop("timing")
    assert ja == jb
