import json

from esgclassify import cli, corpus
from synth import build_workspace


def run(args):
    return cli.main([str(a) for a in args])


class TestSplit:
    def test_default_70_30(self, tmp_path):
        config, _, corpora = build_workspace(tmp_path)
        assert run(["split", "--config", config]) == 0
        split = corpus.load_split(tmp_path / "runs" / "exp" / "split-en.json")
        n = len(corpora["en"])
        assert len(split.train_ids) + len(split.dev_ids) == n
        assert abs(len(split.train_ids) - 0.7 * n) <= 3  # one article per label

    def test_rerun_identical_bytes(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        run(["split", "--config", config])
        first = (tmp_path / "runs" / "exp" / "split-en.json").read_bytes()
        run(["split", "--config", config])
        assert (tmp_path / "runs" / "exp" / "split-en.json").read_bytes() == first

    def test_half_fraction(self, tmp_path):
        config, _, corpora = build_workspace(tmp_path,
                                             config_extra={"train_fraction": 0.5})
        run(["split", "--config", config])
        split = corpus.load_split(tmp_path / "runs" / "exp" / "split-en.json")
        n = len(corpora["en"])
        assert abs(len(split.train_ids) - 0.5 * n) <= 3


class TestTrain:
    def test_svm_ee_model_has_three_machines(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        run(["split", "--config", config])
        assert run(["train", "--config", config]) == 0
        doc = json.loads((tmp_path / "runs" / "exp" / "model.json").read_text())
        assert doc["strategy"] == "svm-ee"
        assert len(doc["payload"]["svm"]["machines"]) == 3
        assert doc["config_echo"]["seeds"] == {"split": 3, "train": 5}

    def test_include_dev_trains_on_everything(self, tmp_path):
        config, _, corpora = build_workspace(tmp_path)
        run(["split", "--config", config])
        run(["train", "--config", config, "--include-dev"])
        log_doc = json.loads((tmp_path / "runs" / "exp" / "train_log.json").read_text())
        assert log_doc["n_train"] == len(corpora["en"])

    def test_missing_store_path_exits_2(self, tmp_path, caplog):
        config, _, _ = build_workspace(
            tmp_path, config_extra={"stores": {"article": "nope.store",
                                               "label": "labels.store"}})
        run(["split", "--config", config])
        assert run(["train", "--config", config]) == 2
        assert "nope.store" in caplog.text

    def test_train_without_split_exits_2(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        assert run(["train", "--config", config]) == 2


class TestPredict:
    def prepared(self, tmp_path, extra=None):
        config, catalog, corpora = build_workspace(tmp_path, config_extra=extra)
        run(["split", "--config", config])
        run(["train", "--config", config])
        return config, catalog, corpora

    def test_k_controls_emitted_length(self, tmp_path):
        config, _, _ = self.prepared(tmp_path)
        run(["predict", "--config", config, "--k", "1"])
        lines = (tmp_path / "runs" / "exp" / "predictions.jsonl").read_text().splitlines()
        assert all(len(json.loads(l)["emitted"]) == 1 for l in lines)
        run(["predict", "--config", config, "--k", "3"])
        lines = (tmp_path / "runs" / "exp" / "predictions.jsonl").read_text().splitlines()
        assert all(len(json.loads(l)["emitted"]) == 3 for l in lines)

    def test_ids_and_order_preserved(self, tmp_path):
        config, _, corpora = self.prepared(tmp_path)
        run(["predict", "--config", config])
        split = corpus.load_split(tmp_path / "runs" / "exp" / "split-en.json")
        lines = (tmp_path / "runs" / "exp" / "predictions.jsonl").read_text().splitlines()
        assert [json.loads(l)["id"] for l in lines] == list(split.dev_ids)

    def test_rerun_byte_identical(self, tmp_path):
        config, _, _ = self.prepared(tmp_path)
        run(["predict", "--config", config])
        first = (tmp_path / "runs" / "exp" / "predictions.jsonl").read_bytes()
        run(["predict", "--config", config])
        assert (tmp_path / "runs" / "exp" / "predictions.jsonl").read_bytes() == first

    def test_missing_model_exits_2(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        run(["split", "--config", config])
        assert run(["predict", "--config", config]) == 2


class TestEvaluate:
    def test_fixture_pipeline_reports_metrics(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        for cmd in ("split", "train", "predict"):
            run([cmd, "--config", config])
        assert run(["evaluate", "--config", config]) == 0
        doc = json.loads((tmp_path / "runs" / "exp" / "report.json").read_text())
        assert doc["accuracy"] == 1.0
        assert doc["micro_f1"] == 1.0
        assert doc["config_echo"]["strategy"] == "svm-ee"

    def test_crossed_confusion_gives_half(self, tmp_path):
        config, catalog, corpora = build_workspace(tmp_path, n_labels=2, n_en=4)
        a, b = catalog.ids()
        # hand-written predictions crossing half the gold assignments
        en = corpora["en"]
        emitted = {en[0].id: en[0].primary_label, en[1].id: en[1].primary_label,
                   en[2].id: a if en[2].primary_label == b else b,
                   en[3].id: a if en[3].primary_label == b else b}
        rundir = tmp_path / "runs" / "exp"
        rundir.mkdir(parents=True)
        with open(rundir / "predictions.jsonl", "w") as fh:
            for aid, lab in emitted.items():
                other = b if lab == a else a
                fh.write(json.dumps({"id": aid, "strategy": "svm-ee", "k": 1,
                                     "emitted": [lab],
                                     "ranked": [{"label": lab, "score": 1.0},
                                                {"label": other, "score": 0.0}]}) + "\n")
        assert run(["evaluate", "--config", config]) == 0
        doc = json.loads((rundir / "report.json").read_text())
        assert doc["weighted_f1"] == 0.5

    def test_mismatched_ids_exit_2(self, tmp_path):
        config, catalog, _ = build_workspace(tmp_path)
        rundir = tmp_path / "runs" / "exp"
        rundir.mkdir(parents=True)
        lab = catalog.ids()[0]
        (rundir / "predictions.jsonl").write_text(json.dumps(
            {"id": "unknown-id", "strategy": "svm-ee", "k": 1,
             "emitted": [lab], "ranked": [{"label": lab, "score": 1.0}]}) + "\n")
        assert run(["evaluate", "--config", config]) == 2


class TestExperiment:
    def test_end_to_end_and_manifest(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        assert run(["experiment", "--config", config]) == 0
        rundir = tmp_path / "runs" / "exp"
        manifest = json.loads((rundir / "manifest.json").read_text())
        expected = {"split-en.json", "split-fr.json", "model.json",
                    "train_log.json", "predictions.jsonl", "report.json"}
        assert set(manifest["files"]) == expected
        for name, digest in manifest["files"].items():
            assert digest.startswith("sha256:")
            assert (rundir / name).exists()
        assert manifest["config"]["k"] == 1

    def test_rerun_byte_identical_manifest(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        run(["experiment", "--config", config])
        manifest_path = tmp_path / "runs" / "exp" / "manifest.json"
        first = manifest_path.read_bytes()
        run(["experiment", "--config", config])
        assert manifest_path.read_bytes() == first

    def test_mono_vs_multi_share_split_but_not_model(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        run(["experiment", "--config", config, "--out", str(tmp_path / "mono")])
        run(["experiment", "--config", config, "--languages", "en,fr",
             "--out", str(tmp_path / "multi")])
        mono = json.loads((tmp_path / "mono" / "manifest.json").read_text())
        multi = json.loads((tmp_path / "multi" / "manifest.json").read_text())
        assert mono["files"]["split-en.json"] == multi["files"]["split-en.json"]
        assert mono["files"]["model.json"] != multi["files"]["model.json"]

    def test_locked_run_dir_exits_2(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        rundir = tmp_path / "runs" / "exp"
        rundir.mkdir(parents=True)
        (rundir / ".lock").touch()
        assert run(["experiment", "--config", config]) == 2

    def test_all_strategies_run_end_to_end(self, tmp_path):
        for strategy in ("ffn", "ffn-ee", "cnn-svm"):
            (tmp_path / strategy).mkdir()
            config, _, _ = build_workspace(tmp_path / strategy)
            code = run(["experiment", "--config", config, "--strategy", strategy,
                        "--out", str(tmp_path / strategy / "out")])
            assert code == 0
            report = json.loads((tmp_path / strategy / "out" / "report.json").read_text())
            assert report["config_echo"]["strategy"] == strategy
            assert report["n_articles"] > 0


class TestConfigHandling:
    def test_missing_config_exits_2(self, tmp_path):
        assert run(["split", "--config", tmp_path / "none.json"]) == 2

    def test_invalid_strategy_exits_2(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        assert run(["split", "--config", config, "--strategy", "zigzag"]) == 2

    def test_unknown_language_override_exits_2(self, tmp_path):
        config, _, _ = build_workspace(tmp_path)
        assert run(["split", "--config", config, "--languages", "de"]) == 2

    def test_unknown_hyperparameter_exits_2(self, tmp_path):
        config, _, _ = build_workspace(
            tmp_path, config_extra={"hyperparameters": {"warp": 9}})
        run(["split", "--config", config])
        assert run(["train", "--config", config]) == 2
