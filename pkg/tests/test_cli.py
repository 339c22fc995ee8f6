"""Exit codes, artifact layout and determinism of the command runner."""

import json

from operator_forge import cli
from operator_forge.exceptions import BudgetExhaustedError, NoRoomError
from operator_forge.serialization import operator_from_json, vector_from_json


def run(argv):
    return cli.main(argv)


class TestConfigHandling:
    def test_invalid_json_reports_position(self, tmp_path, capsys):
        bad = tmp_path / "cfg.json"
        bad.write_text('{"dim": 6,, }')
        rc = run(["independence", "--config", str(bad),
                  "--out", str(tmp_path)])
        assert rc == 1
        err = capsys.readouterr().err
        assert "line 1" in err and "column" in err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        bad = tmp_path / "cfg.json"
        bad.write_text(json.dumps({"dim": 6, "epsilon": 0.2, "bogus": 1}))
        rc = run(["independence", "--config", str(bad),
                  "--out", str(tmp_path)])
        assert rc == 1
        assert "bogus" in capsys.readouterr().err

    def test_schema_bound_violation(self, tmp_path, capsys):
        bad = tmp_path / "cfg.json"
        bad.write_text(json.dumps({"dim": 6, "epsilon": -1.0}))
        rc = run(["independence", "--config", str(bad),
                  "--out", str(tmp_path)])
        assert rc == 1
        assert "epsilon" in capsys.readouterr().err

    def test_config_and_flags_conflict(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"dim": 6, "epsilon": 0.2}))
        rc = run(["independence", "--config", str(cfg), "--dim", "4",
                  "--out", str(tmp_path)])
        assert rc == 1

    def test_config_file_works(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"dim": 5, "epsilon": 0.2, "seed": 3}))
        rc = run(["independence", "--config", str(cfg),
                  "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "result.json").exists()

    def test_weak_needs_r_without_supercyclic(self, tmp_path):
        rc = run(["approx-weak", "--dim", "10", "--n-pairs", "2",
                  "--epsilon", "1.5", "--out", str(tmp_path)])
        assert rc == 1


class TestExitCodes:
    def test_hypothesis_violation_is_2(self, tmp_path):
        rc = run(["approx-strong", "--dim", "4", "--n-controls", "4",
                  "--out", str(tmp_path)])
        assert rc == 2

    def test_chain_budget_overflow_is_4(self, tmp_path):
        # growth this close to 1 needs a chain past the hard cap
        rc = run(["approx-strong", "--dim", "5", "--R", "1.000001",
                  "--epsilon", "0.001", "--out", str(tmp_path)])
        assert rc == 4

    def test_structural_error_is_3(self, tmp_path, monkeypatch):
        def boom(cfg, out):
            raise NoRoomError("no direction left")
        monkeypatch.setitem(cli._HANDLERS, "orbit", boom)
        rc = run(["orbit", "--out", str(tmp_path)])
        assert rc == 3

    def test_budget_error_is_4(self, tmp_path, monkeypatch):
        def boom(cfg, out):
            raise BudgetExhaustedError("out of retries")
        monkeypatch.setitem(cli._HANDLERS, "orbit", boom)
        rc = run(["orbit", "--out", str(tmp_path)])
        assert rc == 4

    def test_verify_failure_is_1(self, tmp_path, monkeypatch, capsys):
        def fake(cfg, out):
            return {"ok": False}, [{"name": "synthetic", "pass": False,
                                    "residual": 1.0}]
        monkeypatch.setitem(cli._HANDLERS, "orbit", fake)
        rc = run(["orbit", "--out", str(tmp_path), "--verify"])
        assert rc == 1
        assert "synthetic" in capsys.readouterr().err
        # artifacts still land so the failure can be inspected
        assert (tmp_path / "manifest.json").exists()

    def test_failure_without_verify_is_0(self, tmp_path, monkeypatch):
        def fake(cfg, out):
            return {}, [{"name": "synthetic", "pass": False}]
        monkeypatch.setitem(cli._HANDLERS, "orbit", fake)
        assert run(["orbit", "--out", str(tmp_path)]) == 0


class TestArtifacts:
    def test_strong_result_and_manifest(self, tmp_path):
        rc = run(["approx-strong", "--seed", "11", "--out", str(tmp_path),
                  "--verify"])
        assert rc == 0
        res = json.loads((tmp_path / "result.json").read_text())
        man = json.loads((tmp_path / "manifest.json").read_text())
        assert res["dim"] == 12 and res["R"] == 2.0
        s = operator_from_json(res["S"])
        assert s.shape == (res["ambient_dim"], res["ambient_dim"])
        x = vector_from_json(res["x"])
        assert x.shape == (12,)
        names = {c["name"] for c in man["checks"]}
        assert {"operator_norm", "orbit_hit"} <= names
        assert all(c["pass"] for c in man["checks"])
        assert man["artifact_version"]
        assert len(man["config_digest"]) == 64

    def test_large_operator_omitted(self, tmp_path):
        rc = run(["approx-weak", "--supercyclic", "--dim", "16",
                  "--n-pairs", "3", "--epsilon", "0.3", "--seed", "4",
                  "--out", str(tmp_path), "--verify"])
        assert rc == 0
        res = json.loads((tmp_path / "result.json").read_text())
        assert res["ambient_dim"] > cli.EMIT_OPERATOR_LIMIT
        assert res["S"] is None

    def test_orbit_files(self, tmp_path):
        rc = run(["orbit", "--dim", "5", "--steps", "20", "--figure",
                  "--seed", "2", "--out", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "orbit_norms.csv").read_text().splitlines()
        assert lines[0] == "step,norm"
        assert len(lines) == 22
        assert (tmp_path / "orbit_norms.png").stat().st_size > 0

    def test_density_files(self, tmp_path):
        rc = run(["density", "--dim", "4", "--steps", "60", "--n-probes",
                  "5", "--radius", "0.6", "--seed", "9",
                  "--out", str(tmp_path)])
        assert rc == 0
        lines = (tmp_path / "density.csv").read_text().splitlines()
        assert lines[0].startswith("probe_index,mode,hit,best_time")
        assert len(lines) == 6
        assert not (tmp_path / "density_distances.png").exists()

    def test_drive_schedule_round_trip(self, tmp_path):
        rc = run(["drive", "--dim", "3", "--n-targets", "2", "--seed", "6",
                  "--out", str(tmp_path), "--verify"])
        assert rc == 0
        res = json.loads((tmp_path / "result.json").read_text())
        assert len(res["schedule"]) == 2
        assert res["schedule"] == sorted(res["schedule"])
        assert all(e < res["epsilon"] for e in res["hit_errors"])

    def test_cyclic_payload_reimports(self, tmp_path):
        rc = run(["cyclic-unitary", "--d", "4", "--truncation", "3",
                  "--out", str(tmp_path), "--verify"])
        assert rc == 0
        res = json.loads((tmp_path / "result.json").read_text())
        assert res["precision_bits"] == 512
        assert res["b_values"][0] == "1"
        from operator_forge.cyclic import certificate_from_payload
        cert = certificate_from_payload(res)
        assert cert.truncation == 3


class TestPrecisionResolution:
    def test_env_variable_used(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_PRECISION, "256")
        rc = run(["cyclic-unitary", "--d", "4", "--truncation", "2",
                  "--out", str(tmp_path)])
        assert rc == 0
        res = json.loads((tmp_path / "result.json").read_text())
        assert res["precision_bits"] == 256

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_PRECISION, "256")
        rc = run(["cyclic-unitary", "--d", "4", "--truncation", "2",
                  "--precision", "128", "--out", str(tmp_path)])
        assert rc == 0
        res = json.loads((tmp_path / "result.json").read_text())
        assert res["precision_bits"] == 128

    def test_bad_env_value(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.ENV_PRECISION, "lots")
        rc = run(["cyclic-unitary", "--d", "4", "--truncation", "2",
                  "--out", str(tmp_path)])
        assert rc == 1


class TestDeterminism:
    def test_identical_runs_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["independence", "--dim", "6", "--epsilon", "0.25",
                        "--seed", "13", "--out", str(out)]) == 0
        assert (a / "result.json").read_bytes() == \
            (b / "result.json").read_bytes()

    def test_seed_changes_result(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["orbit", "--dim", "5", "--steps", "10", "--seed", "1",
             "--out", str(a)])
        run(["orbit", "--dim", "5", "--steps", "10", "--seed", "2",
             "--out", str(b)])
        assert (a / "result.json").read_bytes() != \
            (b / "result.json").read_bytes()

    def test_digest_tracks_config(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        run(["orbit", "--dim", "5", "--steps", "10", "--seed", "1",
             "--out", str(a)])
        run(["orbit", "--dim", "6", "--steps", "10", "--seed", "1",
             "--out", str(b)])
        da = json.loads((a / "manifest.json").read_text())["config_digest"]
        db = json.loads((b / "manifest.json").read_text())["config_digest"]
        assert da != db
