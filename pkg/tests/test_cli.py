"""Config validation, pipeline artifacts, and CLI entry behavior.

Pipeline runs here use a deliberately tiny grid and path count: the point
is artifact structure and reproducibility, not estimator quality, so the
exit status may legitimately be 0 or 1.
"""

import dataclasses
import hashlib
import json

import pytest

import stopbound as sb
from stopbound import cli

ARTIFACTS = [
    "conditions.json",
    "value_surface.csv",
    "boundary.csv",
    "slopes.json",
    "summary.json",
]


def _tiny_raw(out_dir):
    return {
        "example": "example1",
        "seed": 11,
        "out_dir": str(out_dir),
        "grid": {"nt": 21, "nx": [41]},
        "mc": {"n_paths": 200, "dt": 0.05, "chunk_size": None},
        "deltas": [1e-2, 1e-3],
        "conditions": ["A", "G"],
        "probes": [[0.25, [5.0]]],
    }


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny-base")
    status = cli.run_pipeline(cli.RunConfig.from_dict(_tiny_raw(out)))
    return out, status


class TestRunConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({"example": "example1", "gird": {}})

    def test_exactly_one_problem_source(self):
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({})
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict(
                {"example": "example1", "problem": {"factory": "m:f"}}
            )

    def test_unknown_example_name(self):
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({"example": "example9"})

    def test_schema_version_pinned(self):
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({"example": "example1", "schema_version": 2})

    def test_deltas_must_decrease(self):
        for bad in ([1e-3, 1e-2], [1e-2, 1e-2], [1e-2, -1e-3]):
            with pytest.raises(sb.ValidationError):
                cli.RunConfig.from_dict({"example": "example1", "deltas": bad})

    def test_mc_block_validated(self):
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({"example": "example1", "mc": {"n_paths": 0}})
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({"example": "example1", "mc": {"dt": 0.0}})

    def test_condition_tags_validated(self):
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({"example": "example1", "conditions": ["Q"]})

    def test_probe_shape_validated(self):
        with pytest.raises(sb.ValidationError):
            cli.RunConfig.from_dict({"example": "example1", "probes": [[0.5]]})

    def test_default_config_round_trips(self):
        cfg = cli.default_config("example1")
        again = cli.RunConfig.from_dict(dataclasses.asdict(cfg))
        assert again == cfg

    def test_sparse_config_inherits_defaults(self):
        cfg = cli.RunConfig.from_dict(
            {"example": "example2b", "grid": {"nt": 31}}
        )
        filled = cli._fill_example_defaults(cfg)
        base = cli.default_config("example2b")
        assert filled.grid["nt"] == 31
        assert filled.grid["nx"] == base.grid["nx"]
        assert filled.grid["box"] == base.grid["box"]
        assert filled.mc == base.mc
        assert filled.conditions == base.conditions

    def test_param_pairs(self):
        assert cli._parse_params(["alpha=0.25", "c2=0"]) == {"alpha": 0.25, "c2": 0.0}
        with pytest.raises(sb.ValidationError):
            cli._parse_params(["alpha:0.25"])


class TestPipelineArtifacts:
    def test_all_artifacts_written(self, tiny_run):
        out, status = tiny_run
        assert status in (0, 1)
        for name in ARTIFACTS + ["MANIFEST.json"]:
            assert (out / name).is_file(), name

    def test_manifest_hashes_match_files(self, tiny_run):
        out, _ = tiny_run
        manifest = json.loads((out / "MANIFEST.json").read_text())
        assert manifest["complete"] is True
        assert manifest["error"] is None
        assert sorted(manifest["files"]) == sorted(ARTIFACTS)
        for name, digest in manifest["files"].items():
            body = (out / name).read_bytes()
            assert hashlib.sha256(body).hexdigest() == digest, name

    def test_summary_structure(self, tiny_run):
        out, _ = tiny_run
        summary = json.loads((out / "summary.json").read_text())
        assert summary["schema_version"] == 1
        assert summary["example"] == "example1"
        assert summary["seed"] == 11
        assert summary["grid"]["nt"] == 21
        assert set(summary["conditions"]) == {"A", "G"}
        assert summary["n_failed"] == sum(
            not c["passed"] for c in summary["checks"]
        )
        names = [c["name"] for c in summary["checks"]]
        assert "stop-mask-columnwise-monotone" in names
        assert "boundary-below-gamma" in names
        assert "martingale-checkpoints" in names

    def test_value_surface_rows(self, tiny_run):
        out, _ = tiny_run
        lines = (out / "value_surface.csv").read_text().splitlines()
        assert lines[0] == "t,x1,v,w"
        assert len(lines) == 1 + 21 * 41

    def test_boundary_rows(self, tiny_run):
        out, _ = tiny_run
        lines = (out / "boundary.csv").read_text().splitlines()
        assert lines[0] == "delta,t,b"
        # two requested levels plus the exact boundary, one row per t node
        assert len(lines) == 1 + 3 * 21

    def test_slopes_payload(self, tiny_run):
        out, _ = tiny_run
        payload = json.loads((out / "slopes.json").read_text())
        assert set(payload) == {"cells", "lipschitz", "applicability", "notes"}
        assert payload["lipschitz"]["n_cells"] > 0
        assert payload["lipschitz"]["L_t"] >= 0.0
        assert "interval_check" in payload["applicability"]

    def test_conditions_report_tags(self, tiny_run):
        out, _ = tiny_run
        reports = json.loads((out / "conditions.json").read_text())
        assert [r["tag"] for r in reports] == ["A", "G"]


class TestReproducibility:
    def test_same_seed_same_bytes(self, tiny_run, tmp_path):
        base, _ = tiny_run
        again = tmp_path / "again"
        cli.run_pipeline(cli.RunConfig.from_dict(_tiny_raw(again)))
        for name in ARTIFACTS + ["MANIFEST.json"]:
            assert (again / name).read_bytes() == (base / name).read_bytes(), name

    def test_chunk_size_does_not_change_bytes(self, tiny_run, tmp_path):
        base, _ = tiny_run
        chunked = tmp_path / "chunked"
        raw = _tiny_raw(chunked)
        raw["mc"]["chunk_size"] = 64
        cli.run_pipeline(cli.RunConfig.from_dict(raw))
        for name in ARTIFACTS:
            assert (chunked / name).read_bytes() == (base / name).read_bytes(), name


class TestMainEntry:
    def _write_config(self, tmp_path, raw):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(raw))
        return p

    def test_run_subcommand(self, tmp_path, monkeypatch):
        monkeypatch.delenv("STOPBOUND_SEED", raising=False)
        out = tmp_path / "out"
        cfg = self._write_config(tmp_path, _tiny_raw(out))
        rc = cli.main(["run", str(cfg), "--seed", "3"])
        assert rc in (0, 1)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 3

    def test_env_seed_wins_over_flag(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STOPBOUND_SEED", "7")
        out = tmp_path / "out"
        cfg = self._write_config(tmp_path, _tiny_raw(out))
        rc = cli.main(["run", str(cfg), "--seed", "3"])
        assert rc in (0, 1)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 7

    def test_missing_config_is_usage_error(self, tmp_path):
        assert cli.main(["run", str(tmp_path / "nope.json")]) == 2

    def test_malformed_config_is_usage_error(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{not json")
        assert cli.main(["run", str(p)]) == 2

    def test_unknown_example_is_usage_error(self, tmp_path):
        assert cli.main(["example", "example9", "--out", str(tmp_path)]) == 2

    def test_probe_off_frozen_plane_fails_with_manifest(self, tmp_path):
        out = tmp_path / "out"
        raw = _tiny_raw(out)
        raw["example"] = "example2b"
        raw["grid"] = {"nt": 11, "nx": [21, 7]}
        raw["conditions"] = []
        raw["probes"] = [[0.5, [0.0, 0.0, 0.4]]]
        cfg = self._write_config(tmp_path, raw)
        assert cli.main(["run", str(cfg)]) == 2
        manifest = json.loads((out / "MANIFEST.json").read_text())
        assert manifest["complete"] is False
        assert "froze" in manifest["error"]
