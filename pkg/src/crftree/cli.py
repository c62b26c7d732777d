"""Command-line client for the service handlers.

Every subcommand builds a request model, dispatches it (in-process by default,
or to a running server via --server), and writes/prints the response. Exit
codes: 0 success, 1 internal or solver failure, 2 usage or file errors.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import httpx
from pydantic import BaseModel

from .dataio import (DataFormatError, load_dataset, load_model, load_predictions,
                     save_dataset, save_model, save_predictions)
from .qp import SolverError
from .schemas import PredictionsDocument, TrainSettings
from .service.app import (METRIC_NAMES, EvalRequest, EvalResponse, PredictRequest, PredictResponse,
                          SynthRequest, SynthResponse, TrainRequest, TrainResponse,
                          handle_eval, handle_predict, handle_synth, handle_train)

_HANDLERS = {
    "/train": (handle_train, TrainResponse),
    "/predict": (handle_predict, PredictResponse),
    "/eval": (handle_eval, EvalResponse),
    "/synth": (handle_synth, SynthResponse),
}


class _RemoteError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def dispatch(server: str | None, path: str, request: BaseModel):
    handler, response_cls = _HANDLERS[path]
    if server is None:
        return handler(request)
    url = server.rstrip("/") + path
    try:
        resp = httpx.post(url, json=request.model_dump(mode="json"), timeout=None)
    except httpx.HTTPError as err:
        raise _RemoteError(f"{url}: {err}", 1) from err
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        raise _RemoteError(f"{url}: HTTP {resp.status_code}: {detail}",
                           2 if resp.status_code in (400, 422) else 1)
    return response_cls.model_validate(resp.json())


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise  # click prints these itself and exits 2 for usage errors
        except (FileNotFoundError, DataFormatError) as err:
            _fail(str(err), 2)
        except _RemoteError as err:
            _fail(str(err), err.exit_code)
        except SolverError as err:
            _fail(str(err), 1)
        except ValueError as err:
            _fail(str(err), 2)
        except Exception as err:  # noqa: BLE001
            _fail(f"{type(err).__name__}: {err}", 1)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


_server_option = click.option("--server", default=None, metavar="URL",
                              help="Send the request to a running service instead of in-process.")


@click.group()
def main():
    """Train, apply, and evaluate tree-potential CRF models on graph data."""


@main.command("train")
@click.option("--data", "data_path", required=True, metavar="PATH", help="Training dataset (JSON).")
@click.option("--out-model", "out_model", required=True, metavar="PATH", help="Where to write the model (JSON).")
@click.option("--C", "c_value", type=float, default=None, help="Slack penalty (default 100).")
@click.option("--cg-iters", type=int, default=None, help="Tree generation rounds (default 50).")
@click.option("--tree-depth", type=int, default=None, help="Maximum tree depth (default 2).")
@click.option("--eps-cp", type=float, default=None, help="Cutting-plane tolerance (default 0.01).")
@click.option("--seed", type=int, default=None, help="Seed echoed into the model config (default 0).")
@click.option("--loss-weights", type=click.Choice(["uniform", "inverse-frequency"]), default=None,
              help="Per-class loss weighting (default: header weights if present, else uniform).")
@_server_option
@_guarded
def cmd_train(data_path, out_model, c_value, cg_iters, tree_depth, eps_cp, seed, loss_weights, server):
    """Fit a model on a labeled dataset."""
    doc = load_dataset(data_path)
    overrides = {k: v for k, v in (("C", c_value), ("cg_iters", cg_iters), ("tree_depth", tree_depth),
                                   ("eps_cp", eps_cp), ("seed", seed)) if v is not None}
    if loss_weights is not None:
        overrides["loss_weights"] = loss_weights
    elif doc.header.loss_weights is not None:
        overrides["loss_weights"] = "header"
    resp = dispatch(server, "/train", TrainRequest(dataset=doc, config=TrainSettings(**overrides)))
    for row in resp.log:
        click.echo(f"round {row.round}: cp_iters={row.cp_iterations} objective={row.objective:.6f} "
                   f"xi={row.xi:.6f} max_tree_obj={row.max_tree_objective:.6f} "
                   f"train_risk={row.train_risk:.6f}", err=True)
    save_model(resp.model, out_model)
    click.echo(f"wrote model to {out_model}")


@main.command("predict")
@click.option("--data", "data_path", required=True, metavar="PATH", help="Dataset to label (JSON).")
@click.option("--model", "model_path", required=True, metavar="PATH", help="Trained model (JSON).")
@click.option("--out", "out_path", required=True, metavar="PATH", help="Where to write predictions (JSON).")
@_server_option
@_guarded
def cmd_predict(data_path, model_path, out_path, server):
    """Label every instance in a dataset with a trained model."""
    req = PredictRequest(dataset=load_dataset(data_path), model=load_model(model_path))
    resp = dispatch(server, "/predict", req)
    save_predictions(PredictionsDocument(labelings=resp.labelings), out_path)
    click.echo(f"wrote predictions for {len(resp.labelings)} instances to {out_path}")


@main.command("eval")
@click.option("--pred", "pred_path", required=True, metavar="PATH", help="Predictions file (JSON).")
@click.option("--truth-data", "truth_path", required=True, metavar="PATH", help="Labeled dataset (JSON).")
@click.option("--metrics", "metrics_csv", default=",".join(METRIC_NAMES), show_default=True,
              help="Comma-separated subset of: " + ", ".join(METRIC_NAMES))
@_server_option
@_guarded
def cmd_eval(pred_path, truth_path, metrics_csv, server):
    """Score predictions against ground truth; prints a TSV table."""
    names = [s.strip() for s in metrics_csv.split(",") if s.strip()]
    bad = [n for n in names if n not in METRIC_NAMES]
    if bad or not names:
        raise click.UsageError(f"unknown metrics {bad}; valid names: {', '.join(METRIC_NAMES)}")
    req = EvalRequest(predictions=load_predictions(pred_path).labelings,
                      truth=load_dataset(truth_path), metrics=names)
    resp = dispatch(server, "/eval", req)
    cols = [n for n in METRIC_NAMES if n in names]
    click.echo("class\t" + "\t".join(cols))
    for row in resp.per_class:
        click.echo(f"{row.class_id}\t" + "\t".join(f"{row.metrics[c]:.6f}" for c in cols))
    click.echo("average\t" + "\t".join(f"{resp.average[c]:.6f}" for c in cols))
    if "acc" in cols:
        click.echo("global\t" + "\t".join(f"{resp.global_accuracy:.6f}" if c == "acc" else "-" for c in cols))


@main.command("synth")
@click.option("--task", type=click.Choice(["linear", "xor"]), default="xor", show_default=True)
@click.option("--grid", type=int, default=8, show_default=True, help="Grid side length.")
@click.option("--n-train", type=int, default=30, show_default=True)
@click.option("--n-test", type=int, default=30, show_default=True)
@click.option("--noise", type=float, default=0.1, show_default=True, help="Feature corruption rate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", required=True, metavar="DIR", help="Directory for train.json and test.json.")
@_server_option
@_guarded
def cmd_synth(task, grid, n_train, n_test, noise, seed, out_dir, server):
    """Generate a synthetic grid-labeling benchmark."""
    req = SynthRequest(task=task, grid=grid, n_train=n_train, n_test=n_test, noise=noise, seed=seed)
    resp = dispatch(server, "/synth", req)
    out = Path(out_dir)
    save_dataset(resp.train, out / "train.json")
    save_dataset(resp.test, out / "test.json")
    click.echo(f"wrote {out / 'train.json'} ({n_train} instances) and {out / 'test.json'} ({n_test} instances)")


if __name__ == "__main__":
    main()
