"""Pydantic documents for the JSON dataset, model, and prediction formats.

These are the tool's public contract (see docs/formats.md): the CLI reads and
writes them as files and the HTTP service exchanges them as request/response
bodies. Conversion helpers map between documents and the core numpy objects,
enforcing the deeper invariants (dimension agreement, label ranges, canonical
edges, nonnegative weights) with precise error messages.
"""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .graphs import Instance, LossWeights, build_instance
from .potentials import PotentialModel
from .trees import DecisionTree

SCHEMA_VERSION = 1


class EdgeRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    p: int
    q: int
    features: list[float]


class InstanceRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")
    nodes: list[list[float]]
    edges: list[EdgeRecord] = Field(default_factory=list)
    labels: Optional[list[int]] = None


class DatasetHeader(BaseModel):
    model_config = ConfigDict(extra="forbid")
    num_classes: int = Field(ge=2)
    node_feature_dim: int = Field(ge=1)
    edge_feature_dim: int = Field(ge=1)
    loss_weights: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check_weights(self):
        if self.loss_weights is not None:
            if len(self.loss_weights) != self.num_classes:
                raise ValueError(f"loss_weights has {len(self.loss_weights)} entries, expected {self.num_classes}")
            LossWeights(np.asarray(self.loss_weights))
        return self


class DatasetDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    header: DatasetHeader
    instances: list[InstanceRecord]


class TreeRecord(BaseModel):
    """Either a leaf ({"leaf": 0|1}) or a split with both children."""

    model_config = ConfigDict(extra="forbid")
    leaf: Optional[int] = None
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeRecord"] = None
    right: Optional["TreeRecord"] = None

    @model_validator(mode="after")
    def _check_shape(self):
        if self.leaf is not None:
            if any(v is not None for v in (self.feature, self.threshold, self.left, self.right)):
                raise ValueError("a leaf node must carry only 'leaf'")
            if self.leaf not in (0, 1):
                raise ValueError(f"leaf value must be 0 or 1, got {self.leaf}")
        else:
            missing = [k for k in ("feature", "threshold", "left", "right") if getattr(self, k) is None]
            if missing:
                raise ValueError(f"split node is missing {missing}")
            if self.feature < 0:
                raise ValueError(f"feature index must be >= 0, got {self.feature}")
            if not np.isfinite(self.threshold):
                raise ValueError("threshold must be finite")
        return self

    def to_tree(self) -> DecisionTree:
        def rec(r: "TreeRecord"):
            if r.leaf is not None:
                return {"leaf": r.leaf}
            return {"feature": r.feature, "threshold": r.threshold,
                    "left": rec(r.left), "right": rec(r.right)}
        return DecisionTree.from_dict(rec(self))

    @staticmethod
    def from_tree(tree: DecisionTree) -> "TreeRecord":
        return TreeRecord.model_validate(tree.to_dict())


TreeRecord.model_rebuild()


class TrainSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")
    C: float = Field(default=100.0, gt=0)
    cg_iters: int = Field(default=50, ge=0)
    tree_depth: int = Field(default=2, ge=1)
    eps_cp: float = Field(default=0.01, gt=0)
    max_cp_iters: int = Field(default=100, ge=1)
    seed: int = 0
    loss_weights: Literal["uniform", "inverse-frequency", "header"] = "uniform"


class ModelDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    schema_version: int = SCHEMA_VERSION
    num_classes: int = Field(ge=2)
    node_feature_dim: int = Field(ge=1)
    edge_feature_dim: int = Field(ge=1)
    unary_groups: list[list[TreeRecord]]
    pairwise_group: list[TreeRecord]
    w_unary: list[list[float]]
    w_pairwise: list[float]
    config: TrainSettings

    @model_validator(mode="after")
    def _check(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}, expected {SCHEMA_VERSION}")
        if len(self.unary_groups) != self.num_classes:
            raise ValueError(f"expected {self.num_classes} unary groups, got {len(self.unary_groups)}")
        T = len(self.pairwise_group)
        for c, group in enumerate(self.unary_groups):
            if len(group) != T:
                raise ValueError(f"unary group {c + 1} has {len(group)} trees, pairwise group has {T}")
        if len(self.w_unary) != self.num_classes or any(len(b) != T for b in self.w_unary):
            raise ValueError("w_unary must hold one length-T block per class")
        if len(self.w_pairwise) != T:
            raise ValueError(f"w_pairwise has {len(self.w_pairwise)} entries, expected {T}")
        for block in [*self.w_unary, self.w_pairwise]:
            for x in block:
                if not np.isfinite(x) or x < 0:
                    raise ValueError(f"weights must be finite and >= 0, found {x}")
        return self


class PredictionsDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")
    labelings: list[list[int]]


def dataset_to_instances(doc: DatasetDocument) -> list[Instance]:
    """Validate a dataset document deeply and build core instances."""
    h = doc.header
    out = []
    for idx, rec in enumerate(doc.instances):
        try:
            nodes = np.asarray(rec.nodes, dtype=float)
            if nodes.ndim != 2 or nodes.shape[1] != h.node_feature_dim:
                raise ValueError(f"node features must be {h.node_feature_dim}-dimensional")
            for e_idx, e in enumerate(rec.edges):
                if len(e.features) != h.edge_feature_dim:
                    raise ValueError(f"edge {e_idx}: feature dimension {len(e.features)} != {h.edge_feature_dim}")
            inst = build_instance(nodes, [(e.p, e.q, e.features) for e in rec.edges],
                                  truth=rec.labels, num_classes=h.num_classes)
        except ValueError as err:
            raise ValueError(f"instance {idx}: {err}") from err
        if inst.num_edges == 0:
            # normalize the edge-feature width so stacking across instances works
            inst = Instance(inst.node_features, inst.edges,
                            np.zeros((0, h.edge_feature_dim)), inst.truth)
        out.append(inst)
    if not out:
        raise ValueError("dataset has no instances")
    return out


def instances_to_dataset(instances: list[Instance], num_classes: int,
                         loss_weights: Optional[list[float]] = None) -> DatasetDocument:
    node_dim = instances[0].node_features.shape[1]
    edge_dim = instances[0].edge_features.shape[1]
    recs = []
    for inst in instances:
        recs.append(InstanceRecord(
            nodes=[list(map(float, row)) for row in inst.node_features],
            edges=[EdgeRecord(p=int(p), q=int(q), features=[float(x) for x in f])
                   for (p, q), f in zip(inst.edges, inst.edge_features)],
            labels=None if inst.truth is None else [int(x) for x in inst.truth],
        ))
    header = DatasetHeader(num_classes=num_classes, node_feature_dim=node_dim,
                           edge_feature_dim=edge_dim, loss_weights=loss_weights)
    return DatasetDocument(header=header, instances=recs)


def model_to_document(model: PotentialModel, node_feature_dim: int, edge_feature_dim: int,
                      config: TrainSettings) -> ModelDocument:
    return ModelDocument(
        num_classes=model.num_classes,
        node_feature_dim=node_feature_dim,
        edge_feature_dim=edge_feature_dim,
        unary_groups=[[TreeRecord.from_tree(t) for t in g] for g in model.unary_groups],
        pairwise_group=[TreeRecord.from_tree(t) for t in model.pairwise_group],
        w_unary=[[float(x) for x in b] for b in model.w_unary],
        w_pairwise=[float(x) for x in model.w_pairwise],
        config=config,
    )


def document_to_model(doc: ModelDocument) -> PotentialModel:
    unary = [[r.to_tree() for r in g] for g in doc.unary_groups]
    pairwise = [r.to_tree() for r in doc.pairwise_group]
    for c, group in enumerate(unary):
        for t in group:
            if t.max_feature_index() >= doc.node_feature_dim:
                raise ValueError(f"unary group {c + 1}: tree references feature "
                                 f"{t.max_feature_index()}, node_feature_dim is {doc.node_feature_dim}")
    for t in pairwise:
        if t.max_feature_index() >= doc.edge_feature_dim:
            raise ValueError(f"pairwise tree references feature {t.max_feature_index()}, "
                             f"edge_feature_dim is {doc.edge_feature_dim}")
    return PotentialModel(
        num_classes=doc.num_classes,
        unary_groups=unary,
        pairwise_group=pairwise,
        w_unary=[np.asarray(b, dtype=float) for b in doc.w_unary],
        w_pairwise=np.asarray(doc.w_pairwise, dtype=float),
    )
