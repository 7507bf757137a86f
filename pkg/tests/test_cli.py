import json

import numpy as np
import pytest

from rocketlab.cli import main


@pytest.fixture()
def data(tmp_path):
    train, test = tmp_path / "train.csv", tmp_path / "test.csv"
    assert main(["synth", "--out-train", str(train), "--out-test", str(test),
                 "--train-size", "30", "--test-size", "20", "--length", "40"]) == 0
    return train, test


def run_json(capsys, argv):
    code = main(argv + ["--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out)


class TestTransform:
    def test_writes_features_and_manifest(self, data, tmp_path, capsys):
        train, _ = data
        out = tmp_path / "f.csv"
        assert main(["transform", "--data", str(train), "--kernels", "25", "--seed", "42",
                     "--out", str(out)]) == 0
        header = out.read_text().splitlines()[0].split(",")
        assert len(header) == 26
        manifest = json.loads((tmp_path / "f.csv.manifest.json").read_text())
        assert manifest["seed"] == 42
        assert manifest["config"]["num_kernels"] == 25
        assert str(train) in manifest["inputs"]

    def test_rerun_is_byte_identical(self, data, tmp_path):
        train, _ = data
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            assert main(["transform", "--data", str(train), "--kernels", "30", "--out", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_threads_do_not_change_output(self, data, tmp_path, monkeypatch):
        train, _ = data
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["transform", "--data", str(train), "--kernels", "60", "--out", str(a), "--threads", "1"])
        monkeypatch.setenv("ROCKETLAB_THREADS", "4")
        main(["transform", "--data", str(train), "--kernels", "60", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_zero_kernels_is_usage_error(self, data, tmp_path, capsys):
        train, _ = data
        code = main(["transform", "--data", str(train), "--kernels", "0", "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "num_kernels" in capsys.readouterr().err

    def test_parse_error_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n")
        assert main(["transform", "--data", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
        assert "row 0" in capsys.readouterr().err

    def test_unknown_flag_exit_2(self, capsys):
        assert main(["transform", "--bogus"]) == 2

    def test_config_file_precedence(self, data, tmp_path, capsys):
        train, _ = data
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 5, "transform": {"num_kernels": 12, "padding_policy": "circular"}}))
        out = tmp_path / "f.json"
        code, doc = run_json(capsys, ["transform", "--data", str(train), "--config", str(cfg),
                                      "--kernels", "9", "--out", str(out)])
        assert code == 0
        conf = doc["manifest"]["config"]
        assert conf["num_kernels"] == 9  # flag beats file
        assert conf["padding_policy"] == "circular"  # file beats default
        assert conf["seed"] == 5
        assert json.loads(out.read_text())["kind"] == "feature_matrix"


class TestClassify:
    def test_accuracy_and_model(self, data, tmp_path, capsys):
        train, test = data
        model = tmp_path / "m.json"
        code, doc = run_json(capsys, ["classify", "--train", str(train), "--test", str(test),
                                      "--kernels", "500", "--model-out", str(model)])
        assert code == 0
        assert doc["schema_version"] == 1
        assert doc["result"]["accuracy"] == 1.0
        assert sum(map(sum, doc["result"]["confusion"])) == 20
        assert json.loads(model.read_text())["kind"] == "ridge_model"

    def test_single_lambda(self, data, capsys):
        train, test = data
        code, doc = run_json(capsys, ["classify", "--train", str(train), "--test", str(test),
                                      "--kernels", "100", "--lambda-grid", "1.0"])
        assert code == 0
        assert doc["result"]["lambda"] == 1.0 and doc["result"]["cv_scores"] is None

    def test_text_output_has_confusion_table(self, data, capsys):
        train, test = data
        assert main(["classify", "--train", str(train), "--test", str(test), "--kernels", "100"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("accuracy") and "true \\ predicted" in out

    def test_mismatched_feature_columns(self, data, tmp_path, capsys):
        train, test = data
        ftr, fte = tmp_path / "tr.csv", tmp_path / "te.csv"
        main(["transform", "--data", str(train), "--kernels", "20", "--out", str(ftr)])
        main(["transform", "--data", str(test), "--kernels", "15", "--out", str(fte)])
        capsys.readouterr()
        code = main(["classify", "--train-features", str(ftr), "--test-features", str(fte)])
        assert code == 2
        assert "feature columns" in capsys.readouterr().err


class TestAudit:
    def test_coherence_bound_table(self, capsys):
        assert main(["audit", "coherence-bound", "--n", "80", "--k", "9", "--alpha", "2,4",
                     "--trials", "200"]) == 0
        out = capsys.readouterr().out
        assert "VACUOUS" in out and "empirical" in out and "bound" in out

    def test_coherence_bound_json(self, capsys):
        code, doc = run_json(capsys, ["audit", "coherence-bound", "--n", "20", "--k", "5",
                                      "--alpha", "4", "--trials", "100"])
        assert code == 0
        cell = doc["result"]["cells"][0]
        assert cell["bound_value"] == pytest.approx(0.5) and cell["vacuous"] is False

    def test_lipschitz(self, capsys):
        code, doc = run_json(capsys, ["audit", "lipschitz", "--l", "10000", "--n", "80", "--alpha", "0.005"])
        assert code == 0
        assert 194.9 <= doc["result"]["ratio_bound"] <= 195.7

    def test_axioms_table(self, capsys):
        assert main(["audit", "axioms", "--trials", "100", "--p1-trials", "3"]) == 0
        lines = capsys.readouterr().out.splitlines()[2:]
        verdict = {line.split()[0]: line.split()[-4] for line in lines}
        assert verdict == {"D1": "No", "D2": "Yes", "D3": "No", "D4": "Yes", "P1": "No", "P2": "Yes"}

    def test_variance_and_overlap(self, capsys):
        assert main(["audit", "variance", "--k", "5", "--samples", "50000"]) == 0
        assert main(["audit", "overlap", "--n", "30", "--k", "4,9"]) == 0

    def test_cross_basis(self, capsys):
        code, doc = run_json(capsys, ["audit", "cross-basis", "--pairs", "20"])
        assert code == 0
        assert [c["passed"] for c in doc["result"]["dft"]] == [True, True, True]

    def test_recoverability_and_coherence(self, capsys):
        code, doc = run_json(capsys, ["audit", "recoverability", "--s", "1", "--n", "80", "--k", "9"])
        assert code == 0 and doc["result"]["rip_ok"] is True
        code, doc = run_json(capsys, ["audit", "coherence", "--weights", "1,1,1", "--n", "10"])
        assert code == 0 and doc["result"]["raw_overlap"] == pytest.approx(2.0)

    def test_sparsity_csv(self, data, tmp_path, capsys):
        _, test = data
        csv = tmp_path / "spikes.csv"
        assert main(["audit", "sparsity", "--data", str(test), "--csv-out", str(csv)]) == 0
        rows = csv.read_text().splitlines()
        assert rows[0] == "row,sample,value,threshold,above"
        assert len(rows) == 1 + 20 * 40

    def test_robustness_and_shift(self, data, capsys):
        _, test = data
        code, doc = run_json(capsys, ["audit", "robustness", "--data", str(test), "--kernels", "100",
                                      "--trials", "100"])
        assert code == 0 and doc["result"]["empirical"]["violation_count"] == 0
        code, doc = run_json(capsys, ["audit", "shift", "--data", str(test), "--kernels", "50",
                                      "--padding", "circular"])
        assert code == 0 and doc["result"]["exact"] is True

    def test_pca_multi_dataset_summary(self, data, capsys):
        train, test = data
        assert main(["audit", "pca", "--data", str(train), str(test), "--kernels", "100"]) == 0
        out = capsys.readouterr().out
        assert "Median" in out and "k95" in out

    def test_index_out_of_range(self, data, capsys):
        _, test = data
        assert main(["audit", "shift", "--data", str(test), "--index", "99"]) == 2


class TestReplay:
    def test_replay_reproduces_output(self, capsys, tmp_path):
        manifest = tmp_path / "m.json"
        assert main(["audit", "variance", "--k", "3", "--samples", "2000", "--seed", "9",
                     "--manifest", str(manifest)]) == 0
        first = capsys.readouterr().out
        assert main(["replay", str(manifest)]) == 0
        assert capsys.readouterr().out == first

    def test_replay_bad_manifest(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{}")
        assert main(["replay", str(p)]) == 2

    def test_seed_changes_result(self, capsys):
        _, a = run_json(capsys, ["audit", "variance", "--k", "3", "--samples", "2000", "--seed", "1"])
        _, b = run_json(capsys, ["audit", "variance", "--k", "3", "--samples", "2000", "--seed", "2"])
        assert a["result"]["cells"][0]["monte_carlo"] != b["result"]["cells"][0]["monte_carlo"]


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "rocketlab", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "rocketlab" in proc.stdout
