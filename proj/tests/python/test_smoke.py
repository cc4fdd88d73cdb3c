import math

import numpy as np
import pytest

import hfrisk


def test_schema():
    names = hfrisk.feature_names()
    assert len(names) == 22
    assert names[0] == "age"
    assert names[-1] == "weight_diff_8d"
    assert hfrisk.FEATURE_SCHEMA_VERSION == "hf22.v1"


def test_metrics_fixture():
    scores = [0.8, 0.6, 0.4, 0.2]
    labels = [True, False, True, False]
    assert hfrisk.auc_roc(scores, labels) == pytest.approx(0.75, abs=1e-12)
    assert hfrisk.auc_pr(scores, labels) == pytest.approx(5 / 6, abs=1e-9)
    fpr, tpr, thr = hfrisk.roc_curve(scores, labels)
    assert fpr[0] == 0 and tpr[0] == 0 and math.isinf(thr[0])
    assert fpr[-1] == 1 and tpr[-1] == 1
    recall, precision, _ = hfrisk.pr_curve(scores, labels)
    assert list(recall) == [0.5, 0.5, 1.0, 1.0]
    with pytest.raises(hfrisk.ValidationError):
        hfrisk.auc_roc([0.1, 0.2], [True, True])


def test_impute():
    out = hfrisk.impute_series([1.0, None, None, 4.0, None, None, None, 8.0])
    assert out[:4] == [1.0, 2.0, 3.0, 4.0]
    assert out[4:7] == [None, None, None]


def test_rules():
    rules = hfrisk.RuleSet.default()
    assert len(rules) == 10
    assert rules.version == "default-v1"
    again = hfrisk.RuleSet.parse(rules.serialize())
    assert again.serialize() == rules.serialize()
    row = np.zeros(22)
    row[hfrisk.feature_names().index("spo2_pct")] = 88
    row[hfrisk.feature_names().index("sys_bp_mmhg")] = 120
    row[hfrisk.feature_names().index("hr_bpm")] = 70
    row[hfrisk.feature_names().index("wellbeing")] = 4
    row[hfrisk.feature_names().index("weight_diff_3d")] = 2.5
    assert rules.fired(list(row)) == ["low_spo2", "rapid_weight_gain"]
    assert rules.score(row.reshape(1, -1))[0] == pytest.approx(4 / 13)
    with pytest.raises(hfrisk.ValidationError):
        hfrisk.RuleSet.parse("x: heart_rate_xyz > 1\n")


def test_worklist():
    reviews = {"A": ("2024-01-10", None), "B": ("2024-01-10", None), "C": ("2023-12-01", "2024-01-01")}
    out = hfrisk.build_worklist({"A": 0.9, "B": 0.5, "C": 0.1}, reviews, "2024-01-15", 2, 14)
    assert [e["patient_id"] for e in out] == ["C", "A"]
    assert out[0]["overdue"]
    with pytest.raises(hfrisk.NotFoundError):
        hfrisk.build_worklist({"Z": 0.5}, reviews, "2024-01-15", 2, 14)


def test_simulate_train_predict(tmp_path):
    cohort = tmp_path / "cohort"
    summary = hfrisk.simulate(str(cohort), n_patients=40, days=90, seed=3)
    assert summary["patients"] == 40
    assert (cohort / "measurements.csv").exists()

    samples = hfrisk.load_samples(str(cohort))
    X, y = samples["X"], samples["y"]
    assert X.shape[1] == 22
    assert X.shape[0] == len(y) == len(samples["patient_id"])

    model, history, metrics, test = hfrisk.train(
        str(cohort), seed=2, max_epochs=5, hidden=[8, 4], dropout=[0.1, 0.0])
    assert len(history["train_loss"]) <= 5
    assert 1 <= history["selected_epoch"] <= 5
    assert 0.0 <= metrics["aucroc"] <= 1.0
    assert model.layer_dims == [22, 8, 4, 1]
    assert model.feature_schema_version == "hf22.v1"

    scores = model.predict(test["X"])
    assert scores.shape == (len(test["y"]),)
    assert np.all((scores > 0) & (scores < 1))
    assert hfrisk.auc_roc(list(scores), list(test["y"])) == pytest.approx(metrics["aucroc"], abs=1e-12)

    path = tmp_path / "m.model"
    model.save(str(path))
    loaded = hfrisk.Model.load(str(path))
    assert np.array_equal(loaded.predict(test["X"]), scores)
    # Row-by-row scoring matches batch scoring exactly.
    assert loaded.predict(test["X"][:1])[0] == scores[0]
