import json

import pytest
from fastapi.testclient import TestClient

from somnus.cli import build_service, load_config, main
from somnus.service import create_app
from somnus.tabular import load_csv

SMALL = {"participants": 6, "days_per_participant": 45, "n_trees": 20}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """fixture -> preprocess -> train chain shared by the read-only tests."""
    d = tmp_path_factory.mktemp("cli")
    cfg = d / "config.json"
    cfg.write_text(json.dumps(SMALL))
    assert main(["fixture", "--config", str(cfg), "--seed", "7", "--out", str(d)]) == 0
    assert (
        main(["preprocess", "--input", str(d / "fixture.csv"), "--out", str(d)]) == 0
    )
    assert (
        main(
            ["train", "--config", str(cfg), "--input", str(d / "cleaned.csv"),
             "--seed", "7", "--out", str(d)]
        )
        == 0
    )
    return d


class TestChain:
    def test_artifacts_exist(self, workdir):
        for name in ("fixture.csv", "cleaned.csv", "preprocess_report.json", "artifact.json"):
            assert (workdir / name).exists()

    def test_cleaned_has_no_missing(self, workdir):
        assert load_csv(workdir / "cleaned.csv").missing_count() == 0

    def test_artifact_has_k_features(self, workdir):
        doc = json.loads((workdir / "artifact.json").read_text())
        assert doc["kind"] == "gbdt"
        assert len(doc["feature_names"]) == 20

    def test_fixture_deterministic(self, workdir, tmp_path):
        cfg = workdir / "config.json"
        assert main(["fixture", "--config", str(cfg), "--seed", "7", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "fixture.csv").read_bytes() == (workdir / "fixture.csv").read_bytes()

    def test_train_mean_model(self, workdir, tmp_path):
        rc = main(["train", "--input", str(workdir / "cleaned.csv"), "--model", "mean",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert json.loads((tmp_path / "artifact.json").read_text())["kind"] == "mean"


class TestAugment:
    def test_appends_synthetic_rows(self, workdir, tmp_path):
        rc = main(["augment", "--input", str(workdir / "cleaned.csv"), "--seed", "3",
                   "--out", str(tmp_path)])
        assert rc == 0
        before = load_csv(workdir / "cleaned.csv")
        after = load_csv(tmp_path / "augmented.csv")
        log = json.loads((tmp_path / "batch_log.json").read_text())
        accepted = sum(e.get("accepted", 0) for e in log)
        assert len(after.rows) == len(before.rows) + accepted
        assert sum(r.synthetic for r in after.rows) == accepted

    def test_raw_input_rejected(self, workdir, tmp_path):
        rc = main(["augment", "--input", str(workdir / "fixture.csv"), "--out", str(tmp_path)])
        assert rc == 1


class TestEvaluate:
    def test_reports_written_and_deterministic(self, workdir, tmp_path):
        cfg = workdir / "config.json"
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            rc = main(["evaluate", "--config", str(cfg), "--input", str(workdir / "fixture.csv"),
                       "--seed", "7", "--out", str(out)])
            assert rc == 0
        for name in ("report.md", "report.csv", "report.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        lines = (a / "report.md").read_text().splitlines()
        assert sum(ln.startswith("|---") for ln in lines) == 1
        assert len(lines) == 6

    def test_no_augment_flag(self, workdir, tmp_path):
        cfg = workdir / "config.json"
        rc = main(["evaluate", "--config", str(cfg), "--input", str(workdir / "fixture.csv"),
                   "--seed", "7", "--out", str(tmp_path), "--no-augment"])
        assert rc == 0
        doc = json.loads((tmp_path / "report.json").read_text())
        counts = doc["metadata"]["row_counts"]
        assert counts["augmented_train"] == counts["train"]

    def test_report_rerender(self, workdir, tmp_path, capsys):
        cfg = workdir / "config.json"
        assert main(["evaluate", "--config", str(cfg), "--input", str(workdir / "fixture.csv"),
                     "--seed", "7", "--out", str(tmp_path)]) == 0
        capsys.readouterr()
        assert main(["report", "--input", str(tmp_path / "report.json"), "--format", "csv"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "feature_set,model,rmse,mae,r2"
        assert len([ln for ln in out.splitlines() if ln]) == 13


class TestServe:
    def test_build_service_and_predict(self, workdir):
        svc = build_service(workdir / "artifact.json", workdir / "cleaned.csv")
        client = TestClient(create_app(svc))
        snap = svc.default_snapshot
        r = client.post("/predict", json={"snapshot": {"feature_values": snap.feature_values}})
        assert r.status_code == 200
        assert 0.0 <= r.json()["prediction"] <= 1.0

    def test_corrupt_artifact_exit_code(self, workdir, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("not json")
        rc = main(["serve", "--artifact", str(bad), "--out", str(tmp_path)])
        assert rc == 1


class TestExitCodes:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_input_file(self, tmp_path, capsys):
        assert main(["preprocess", "--input", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path)]) == 1

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0

    def test_bad_config_json(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("{broken")
        assert main(["fixture", "--config", str(cfg), "--out", str(tmp_path)]) == 1


class TestConfigLoading:
    def test_toml(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('n_trees = 5\ntukey_multiplier = 2.0\n')
        assert load_config(str(p)) == {"n_trees": 5, "tukey_multiplier": 2.0}

    def test_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"n_trees": 5}')
        assert load_config(str(p)) == {"n_trees": 5}

    def test_none(self):
        assert load_config(None) == {}
