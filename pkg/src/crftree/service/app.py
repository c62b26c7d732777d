"""HTTP surface: request/response envelopes and the FastAPI app.

The handler functions hold the actual workflow logic; the routes are thin
wrappers, and the CLI calls the same handlers in-process.
"""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from ..graphs import LossWeights, class_frequency_weights
from ..inference import map_inference
from ..learner import TrainConfig, train_crftree
from ..metrics import class_accuracy, f_score, intersection_over_union, pixel_accuracy
from ..qp import SolverError
from ..schemas import (DatasetDocument, ModelDocument, TrainSettings, dataset_to_instances,
                       document_to_model, instances_to_dataset, model_to_document)
from ..synthetic import synth_grid_task

METRIC_NAMES = ("acc", "iou", "fscore")


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dataset: DatasetDocument
    config: TrainSettings = Field(default_factory=TrainSettings)


class RoundLog(BaseModel):
    round: int
    cp_iterations: int
    objective: float
    xi: float
    max_tree_objective: float
    train_risk: float


class TrainResponse(BaseModel):
    model: ModelDocument
    log: list[RoundLog]


class PredictRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dataset: DatasetDocument
    model: ModelDocument


class PredictResponse(BaseModel):
    labelings: list[list[int]]


class EvalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    predictions: list[list[int]]
    truth: DatasetDocument
    metrics: list[Literal["acc", "iou", "fscore"]] = Field(default_factory=lambda: list(METRIC_NAMES))


class ClassRow(BaseModel):
    class_id: int
    metrics: dict[str, float]


class EvalResponse(BaseModel):
    per_class: list[ClassRow]
    average: dict[str, float]
    global_accuracy: float


class SynthRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    task: Literal["linear", "xor"] = "xor"
    grid: int = 8
    n_train: int = 30
    n_test: int = 30
    noise: float = 0.1
    seed: int = 0
    num_classes: int = 2


class SynthResponse(BaseModel):
    train: DatasetDocument
    test: DatasetDocument


def resolve_loss_weights(doc: DatasetDocument, mode: str, instances) -> LossWeights:
    K = doc.header.num_classes
    if mode == "header":
        if doc.header.loss_weights is None:
            raise ValueError("config requests header loss weights but the dataset header has none")
        return LossWeights(np.asarray(doc.header.loss_weights))
    if mode == "inverse-frequency":
        return class_frequency_weights(instances, K)
    return LossWeights.uniform(K)


def handle_train(req: TrainRequest) -> TrainResponse:
    instances = dataset_to_instances(req.dataset)
    header = req.dataset.header
    lw = resolve_loss_weights(req.dataset, req.config.loss_weights, instances)
    cfg = TrainConfig(C=req.config.C, cg_iters=req.config.cg_iters, tree_depth=req.config.tree_depth,
                      eps_cp=req.config.eps_cp, max_cp_iters=req.config.max_cp_iters, seed=req.config.seed)
    model, log = train_crftree(instances, header.num_classes, cfg, lw)
    doc = model_to_document(model, header.node_feature_dim, header.edge_feature_dim, req.config)
    return TrainResponse(model=doc, log=[RoundLog(round=r.round, cp_iterations=r.cp_iterations,
                                                  objective=r.objective, xi=r.xi,
                                                  max_tree_objective=r.max_tree_objective,
                                                  train_risk=r.train_risk) for r in log])


def handle_predict(req: PredictRequest) -> PredictResponse:
    header = req.dataset.header
    if req.model.num_classes != header.num_classes:
        raise ValueError(f"model has {req.model.num_classes} classes, dataset header says {header.num_classes}")
    if req.model.node_feature_dim != header.node_feature_dim:
        raise ValueError(f"model expects node_feature_dim {req.model.node_feature_dim}, "
                         f"dataset has {header.node_feature_dim}")
    if req.model.edge_feature_dim != header.edge_feature_dim:
        raise ValueError(f"model expects edge_feature_dim {req.model.edge_feature_dim}, "
                         f"dataset has {header.edge_feature_dim}")
    instances = dataset_to_instances(req.dataset)
    model = document_to_model(req.model)
    labelings = [[int(c) for c in map_inference(inst, model)] for inst in instances]
    return PredictResponse(labelings=labelings)


def handle_eval(req: EvalRequest) -> EvalResponse:
    K = req.truth.header.num_classes
    instances = dataset_to_instances(req.truth)
    if len(req.predictions) != len(instances):
        raise ValueError(f"{len(req.predictions)} predicted labelings for {len(instances)} truth instances")
    truth_all, pred_all = [], []
    for i, (inst, pred) in enumerate(zip(instances, req.predictions)):
        if inst.truth is None:
            raise ValueError(f"instance {i}: truth dataset has no labels")
        if len(pred) != inst.num_nodes:
            raise ValueError(f"instance {i}: prediction has {len(pred)} labels, instance has {inst.num_nodes} nodes")
        p = np.asarray(pred, dtype=np.int64)
        if p.min() < 1 or p.max() > K:
            raise ValueError(f"instance {i}: predicted labels outside 1..{K}")
        truth_all.append(inst.truth)
        pred_all.append(p)
    t = np.concatenate(truth_all)
    p = np.concatenate(pred_all)

    metric_fn = {"acc": class_accuracy, "iou": intersection_over_union, "fscore": f_score}
    names = list(dict.fromkeys(req.metrics))  # dedupe, keep order
    rows = [ClassRow(class_id=k, metrics={nm: metric_fn[nm](t, p, k) for nm in names})
            for k in range(1, K + 1)]
    average = {nm: float(np.mean([r.metrics[nm] for r in rows])) for nm in names}
    return EvalResponse(per_class=rows, average=average, global_accuracy=pixel_accuracy(t, p))


def handle_synth(req: SynthRequest) -> SynthResponse:
    train = synth_grid_task(req.seed, req.grid, req.num_classes, req.noise, req.task, count=req.n_train)
    test = synth_grid_task(req.seed + 1, req.grid, req.num_classes, req.noise, req.task, count=req.n_test)
    return SynthResponse(train=instances_to_dataset(train, req.num_classes),
                         test=instances_to_dataset(test, req.num_classes))


app = FastAPI(title="crftree", version="0.1.0",
              description="Tree-potential CRF training and inference over graph-structured data")


@app.exception_handler(ValueError)
async def _bad_request(_: Request, err: ValueError):
    return JSONResponse(status_code=400, content={"detail": str(err)})


@app.exception_handler(SolverError)
async def _solver_failure(_: Request, err: SolverError):
    return JSONResponse(status_code=500, content={"detail": str(err)})


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/train", response_model=TrainResponse)
def train(req: TrainRequest):
    return handle_train(req)


@app.post("/predict", response_model=PredictResponse)
def predict(req: PredictRequest):
    return handle_predict(req)


@app.post("/eval", response_model=EvalResponse)
def evaluate(req: EvalRequest):
    return handle_eval(req)


@app.post("/synth", response_model=SynthResponse)
def synth(req: SynthRequest):
    return handle_synth(req)
