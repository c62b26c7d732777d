"""HTTP contract: route behavior, status-code mapping, and workflow round trips."""

from __future__ import annotations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from crftree.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def synth_pair(client):
    """Small deterministic train/test dataset pair used across workflow tests."""
    resp = client.post("/synth", json={"task": "xor", "grid": 4, "n_train": 3,
                                       "n_test": 2, "noise": 0.0, "seed": 11})
    assert resp.status_code == 200
    return resp.json()


@pytest.fixture(scope="module")
def trained(client, synth_pair):
    resp = client.post("/train", json={"dataset": synth_pair["train"],
                                       "config": {"C": 1.0, "cg_iters": 2}})
    assert resp.status_code == 200
    return resp.json()


class TestHealthAndSynth:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_synth_returns_requested_counts(self, synth_pair):
        assert len(synth_pair["train"]["instances"]) == 3
        assert len(synth_pair["test"]["instances"]) == 2
        header = synth_pair["train"]["header"]
        assert header["num_classes"] == 2
        assert all(len(rec["nodes"]) == 16 for rec in synth_pair["train"]["instances"])

    def test_synth_is_deterministic(self, client, synth_pair):
        again = client.post("/synth", json={"task": "xor", "grid": 4, "n_train": 3,
                                            "n_test": 2, "noise": 0.0, "seed": 11})
        assert again.json() == synth_pair

    def test_synth_rejects_degenerate_grid(self, client):
        resp = client.post("/synth", json={"grid": 1})
        assert resp.status_code == 400
        assert "grid_size must be >= 2" in resp.json()["detail"]

    def test_synth_rejects_unknown_task(self, client):
        resp = client.post("/synth", json={"task": "spiral"})
        assert resp.status_code == 422


class TestTrain:
    def test_train_reports_one_log_row_per_round(self, trained):
        assert len(trained["log"]) == 2
        assert [row["round"] for row in trained["log"]] == [1, 2]

    def test_trained_model_matches_dataset_dims(self, trained, synth_pair):
        model = trained["model"]
        header = synth_pair["train"]["header"]
        assert model["num_classes"] == header["num_classes"]
        assert model["node_feature_dim"] == header["node_feature_dim"]
        assert model["edge_feature_dim"] == header["edge_feature_dim"]
        assert len(model["pairwise_group"]) == 2
        assert model["config"]["C"] == 1.0

    def test_train_with_header_mode_but_no_header_weights_is_400(self, client, synth_pair):
        resp = client.post("/train", json={"dataset": synth_pair["train"],
                                           "config": {"cg_iters": 1, "loss_weights": "header"}})
        assert resp.status_code == 400
        assert "header" in resp.json()["detail"]

    def test_train_with_header_weights_present_succeeds(self, client, synth_pair):
        dataset = {"header": dict(synth_pair["train"]["header"], loss_weights=[1.0, 2.0]),
                   "instances": synth_pair["train"]["instances"][:1]}
        resp = client.post("/train", json={"dataset": dataset,
                                           "config": {"C": 1.0, "cg_iters": 1, "loss_weights": "header"}})
        assert resp.status_code == 200

    def test_train_without_labels_is_400(self, client, synth_pair):
        stripped = {"header": synth_pair["train"]["header"],
                    "instances": [dict(rec, labels=None) for rec in synth_pair["train"]["instances"]]}
        resp = client.post("/train", json={"dataset": stripped, "config": {"cg_iters": 1}})
        assert resp.status_code == 400
        assert "no ground-truth labeling" in resp.json()["detail"]

    def test_malformed_body_is_422(self, client):
        resp = client.post("/train", json={"config": {}})
        assert resp.status_code == 422


class TestPredict:
    def test_predict_labels_every_node(self, client, trained, synth_pair):
        resp = client.post("/predict", json={"dataset": synth_pair["test"], "model": trained["model"]})
        assert resp.status_code == 200
        labelings = resp.json()["labelings"]
        assert len(labelings) == 2
        for lab in labelings:
            assert len(lab) == 16
            assert set(lab) <= {1, 2}

    def test_predict_is_deterministic(self, client, trained, synth_pair):
        req = {"dataset": synth_pair["test"], "model": trained["model"]}
        assert client.post("/predict", json=req).json() == client.post("/predict", json=req).json()

    def test_class_count_mismatch_is_400(self, client, trained, synth_pair):
        dataset = {"header": dict(synth_pair["test"]["header"], num_classes=3),
                   "instances": synth_pair["test"]["instances"]}
        resp = client.post("/predict", json={"dataset": dataset, "model": trained["model"]})
        assert resp.status_code == 400
        assert "model has 2 classes, dataset header says 3" in resp.json()["detail"]

    def test_node_dim_mismatch_is_400(self, client, trained, synth_pair):
        dataset = {"header": dict(synth_pair["test"]["header"], node_feature_dim=5),
                   "instances": synth_pair["test"]["instances"]}
        resp = client.post("/predict", json={"dataset": dataset, "model": trained["model"]})
        assert resp.status_code == 400
        assert "node_feature_dim" in resp.json()["detail"]

    def test_edge_dim_mismatch_is_400(self, client, trained, synth_pair):
        model = dict(trained["model"], edge_feature_dim=7)
        # keep the document self-consistent: an edge_feature_dim the trees allow
        resp = client.post("/predict", json={"dataset": synth_pair["test"], "model": model})
        assert resp.status_code == 400
        assert "edge_feature_dim" in resp.json()["detail"]


@pytest.fixture(scope="module")
def truth_and_match(synth_pair):
    truth = synth_pair["test"]
    perfect = [rec["labels"] for rec in truth["instances"]]
    return truth, perfect


class TestEval:
    def test_perfect_predictions_score_one_everywhere(self, client, truth_and_match):
        truth, perfect = truth_and_match
        resp = client.post("/eval", json={"predictions": perfect, "truth": truth,
                                          "metrics": ["acc", "iou", "fscore"]})
        assert resp.status_code == 200
        body = resp.json()
        assert body["global_accuracy"] == 1.0
        for row in body["per_class"]:
            assert all(v == 1.0 for v in row["metrics"].values())
        assert all(v == 1.0 for v in body["average"].values())

    def test_average_is_mean_of_per_class_rows(self, client, truth_and_match):
        truth, perfect = truth_and_match
        flipped = [[2 if c == 1 else 1 for c in lab] for lab in perfect]
        flipped[0] = perfect[0]
        resp = client.post("/eval", json={"predictions": flipped, "truth": truth, "metrics": ["iou"]})
        body = resp.json()
        per_class = [row["metrics"]["iou"] for row in body["per_class"]]
        assert body["average"]["iou"] == pytest.approx(float(np.mean(per_class)), abs=1e-12)

    def test_count_misalignment_is_400(self, client, truth_and_match):
        truth, perfect = truth_and_match
        resp = client.post("/eval", json={"predictions": perfect[:1], "truth": truth})
        assert resp.status_code == 400
        assert "1 predicted labelings for 2 truth instances" in resp.json()["detail"]

    def test_length_misalignment_is_400(self, client, truth_and_match):
        truth, perfect = truth_and_match
        bad = [perfect[0][:-1], perfect[1]]
        resp = client.post("/eval", json={"predictions": bad, "truth": truth})
        assert resp.status_code == 400
        assert "instance 0: prediction has 15 labels" in resp.json()["detail"]

    def test_out_of_range_labels_are_400(self, client, truth_and_match):
        truth, perfect = truth_and_match
        bad = [[3] * len(perfect[0]), perfect[1]]
        resp = client.post("/eval", json={"predictions": bad, "truth": truth})
        assert resp.status_code == 400
        assert "outside 1..2" in resp.json()["detail"]

    def test_unlabeled_truth_is_400(self, client, truth_and_match):
        truth, perfect = truth_and_match
        stripped = {"header": truth["header"],
                    "instances": [dict(rec, labels=None) for rec in truth["instances"]]}
        resp = client.post("/eval", json={"predictions": perfect, "truth": stripped})
        assert resp.status_code == 400
        assert "no labels" in resp.json()["detail"]

    def test_unknown_metric_is_422(self, client, truth_and_match):
        truth, perfect = truth_and_match
        resp = client.post("/eval", json={"predictions": perfect, "truth": truth, "metrics": ["auc"]})
        assert resp.status_code == 422


class TestWorkflow:
    def test_synth_train_predict_eval_chain(self, client, trained, synth_pair):
        pred = client.post("/predict", json={"dataset": synth_pair["train"], "model": trained["model"]})
        assert pred.status_code == 200
        ev = client.post("/eval", json={"predictions": pred.json()["labelings"],
                                        "truth": synth_pair["train"], "metrics": ["acc"]})
        assert ev.status_code == 200
        body = ev.json()
        assert 0.0 <= body["global_accuracy"] <= 1.0
        assert {row["class_id"] for row in body["per_class"]} == {1, 2}
