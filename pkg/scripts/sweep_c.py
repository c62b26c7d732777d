#!/usr/bin/env python3
"""Grid sweep over the slack penalty C.

Trains one model per C value on a labeled dataset, scores each on a held-out
labeled dataset, prints a TSV table (C, per-round iterations, train risk,
held-out accuracy, seconds), and names the best C. Model selection is kept
out of the trainer on purpose; this script is the supported way to pick C.

Example:
    crftree synth --task xor --grid 8 --seed 2026 --out-dir data/
    python3 scripts/sweep_c.py --train data/train.json --eval data/test.json \
        --grid 0.1,1,10 --cg-iters 20 --out-model best.json
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click
import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from crftree.dataio import load_dataset, save_model  # noqa: E402
from crftree.inference import map_inference  # noqa: E402
from crftree.learner import TrainConfig, train_crftree  # noqa: E402
from crftree.metrics import pixel_accuracy  # noqa: E402
from crftree.schemas import TrainSettings, dataset_to_instances, model_to_document  # noqa: E402


def accuracy(instances, model) -> float:
    truth = np.concatenate([inst.truth for inst in instances])
    pred = np.concatenate([map_inference(inst, model) for inst in instances])
    return pixel_accuracy(truth, pred)


@click.command()
@click.option("--train", "train_path", required=True, metavar="PATH", help="Labeled training dataset (JSON).")
@click.option("--eval", "eval_path", required=True, metavar="PATH", help="Labeled held-out dataset (JSON).")
@click.option("--grid", default="0.1,1,10,100", show_default=True,
              help="Comma-separated C values to try.")
@click.option("--cg-iters", default=20, show_default=True, help="Tree generation rounds per run.")
@click.option("--tree-depth", default=2, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-model", default=None, metavar="PATH",
              help="Where to write the best model (optional).")
def main(train_path, eval_path, grid, cg_iters, tree_depth, seed, out_model):
    train_doc = load_dataset(train_path)
    eval_doc = load_dataset(eval_path)
    train_insts = dataset_to_instances(train_doc)
    eval_insts = dataset_to_instances(eval_doc)
    K = train_doc.header.num_classes

    values = [float(s) for s in grid.split(",") if s.strip()]
    best = None
    click.echo("C\trounds\ttrain_risk\teval_acc\tseconds")
    for c_value in values:
        cfg = TrainConfig(C=c_value, cg_iters=cg_iters, tree_depth=tree_depth, seed=seed)
        t0 = time.perf_counter()
        model, log = train_crftree(train_insts, K, cfg)
        elapsed = time.perf_counter() - t0
        acc = accuracy(eval_insts, model)
        risk = log[-1].train_risk if log else float("nan")
        click.echo(f"{c_value:g}\t{len(log)}\t{risk:.4f}\t{acc:.4f}\t{elapsed:.1f}")
        if best is None or acc > best[1]:
            best = (c_value, acc, model, cfg)

    c_best, acc_best, model_best, cfg_best = best
    click.echo(f"best: C={c_best:g} with held-out accuracy {acc_best:.4f}", err=True)
    if out_model is not None:
        settings = TrainSettings(C=cfg_best.C, cg_iters=cfg_best.cg_iters,
                                 tree_depth=cfg_best.tree_depth, seed=cfg_best.seed)
        doc = model_to_document(model_best, train_doc.header.node_feature_dim,
                                train_doc.header.edge_feature_dim, settings)
        save_model(doc, out_model)
        click.echo(f"wrote best model to {out_model}", err=True)


if __name__ == "__main__":
    main()
