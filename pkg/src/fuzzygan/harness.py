"""Experiment runner: train (dataset x model x injection) cells over seeds,
compute normalized and unnormalized errors, aggregate mean +/- std, and
write JSON/CSV result artifacts.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .datasets import CATALOG, Dataset, load_dataset, minmax_fit_apply, train_test_split
from .fuzzy import FuzzyPartitionSpec
from .metrics import mae, mse
from .networks import (
    DnnSpec,
    GanSpec,
    Tensor,
    TrainingDivergenceError,
    gan_spec_for,
    predict,
    train_cgan,
    train_dnn,
)

__all__ = [
    "ExperimentError",
    "ExperimentConfig",
    "ExperimentResult",
    "run_experiment",
    "emit_results",
    "read_results",
    "aggregate_rows",
    "best_view",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "dataset", "model", "injection",
    "nmae_mean", "nmae_std", "nmse_mean", "nmse_std",
    "mae_mean", "mae_std", "mse_mean", "mse_std",
]

_GAN_OVERRIDE_KEYS = {
    "epochs", "batch_size", "gen_lr", "disc_lr", "gen_decay", "disc_decay",
    "branch_width", "gen_trunk", "disc_trunk", "gen_head", "saturating_g_loss",
    "noise_draws", "partition_n", "partition_j", "partition_k", "partition_l",
    "partition_m",
}
_DNN_OVERRIDE_KEYS = {"epochs", "batch_size", "lr", "decay", "dropout", "init_std", "hidden"}


class ExperimentError(RuntimeError):
    """The experiment as a whole could not produce results."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    model: str  # cgan | dnn
    injection: str = "none"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    split_fraction: float = 0.8
    overrides: dict = field(default_factory=dict)
    workers: int = 1
    save_histories: bool = False

    def __post_init__(self):
        if self.model not in ("cgan", "dnn"):
            raise ValueError(f"model must be cgan or dnn, got {self.model!r}")
        if self.injection != "none" and self.model != "cgan":
            raise ValueError("fuzzy injection applies only to the cgan model")
        if not self.seeds:
            raise ValueError("seed list must be non-empty")
        allowed = _GAN_OVERRIDE_KEYS if self.model == "cgan" else _DNN_OVERRIDE_KEYS
        unknown = set(self.overrides) - allowed - {"lr"}
        if unknown:
            raise ValueError(f"unknown override keys for {self.model}: {sorted(unknown)}")

    @property
    def cell_name(self) -> str:
        return f"{self.dataset}_{self.model}_{self.injection}"


def _gan_spec(config: ExperimentConfig, input_dim: int) -> GanSpec:
    ov = dict(config.overrides)
    shared_lr = ov.pop("lr", None)
    if shared_lr is not None:
        ov.setdefault("gen_lr", shared_lr)
        ov.setdefault("disc_lr", shared_lr)
    part = {}
    for dim in ("n", "j", "k", "l", "m"):
        key = f"partition_{dim}"
        if key in ov:
            part[dim] = int(ov.pop(key))
    if part:
        defaults = FuzzyPartitionSpec()
        ov["partition"] = FuzzyPartitionSpec(**{
            dim: part.get(dim, getattr(defaults, dim)) for dim in ("n", "j", "k", "l", "m")
        })
    for key in ("gen_trunk", "disc_trunk"):
        if key in ov:
            ov[key] = tuple(ov[key])
    return gan_spec_for(config.dataset, input_dim, config.injection, **ov)


def _dnn_spec(config: ExperimentConfig) -> DnnSpec:
    ov = dict(config.overrides)
    if "hidden" in ov:
        ov["hidden"] = tuple(ov["hidden"])
    return DnnSpec(**ov)


def _run_cell(dataset: Dataset, config: ExperimentConfig, seed: int) -> dict:
    """One fully deterministic seed: split, normalize, train, score."""
    train_idx, test_idx = train_test_split(dataset.n, config.split_fraction, seed)
    normalized, params = minmax_fit_apply(dataset, train_idx, test_idx)
    y_test = normalized.Y[test_idx]

    if config.model == "cgan":
        spec = _gan_spec(config, dataset.d)
        gen, _disc, history = train_cgan(normalized, spec, seed)
        rng_pred = np.random.default_rng([seed, 1])
        y_hat = predict(gen, Tensor(normalized.X[test_idx]), rng_pred, spec.noise_draws).data
    else:
        spec = _dnn_spec(config)
        net, history = train_dnn(normalized, spec, seed)
        y_hat = net.forward(Tensor(normalized.X[test_idx])).data

    nmae = mae(y_test, y_hat)
    nmse = mse(y_test, y_hat)
    span = params.target_range
    result = {
        "seed": seed,
        "nmae": nmae,
        "nmse": nmse,
        "mae": nmae * span,
        "mse": nmse * span * span,
        "target_range": span,
        "history": history,
    }
    if result["mae"] ** 2 > result["mse"] * (1.0 + 1e-9) + 1e-12:
        raise AssertionError("metric contract violated: MAE^2 must not exceed MSE")
    return result


def _run_cell_guarded(dataset: Dataset, config: ExperimentConfig, seed: int) -> dict:
    try:
        return _run_cell(dataset, config, seed)
    except TrainingDivergenceError as exc:
        log.warning("seed %d of %s diverged: %s", seed, config.cell_name, exc)
        return {"seed": seed, "error": str(exc)}


@dataclass
class ExperimentResult:
    config: dict
    seed_results: list
    aggregates: dict

    @property
    def name(self) -> str:
        return "{dataset}_{model}_{injection}".format(**self.config)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed_results": self.seed_results,
            "aggregates": self.aggregates,
            "deviation_kind": "sample standard deviation across seeds",
        }


def aggregate_rows(seed_results: list) -> dict:
    """Mean and sample standard deviation of each metric over surviving seeds."""
    survivors = [r for r in seed_results if "error" not in r]
    out = {}
    for metric in ("nmae", "nmse", "mae", "mse"):
        values = np.array([r[metric] for r in survivors])
        out[f"{metric}_mean"] = float(values.mean())
        out[f"{metric}_std"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    out["seeds_total"] = len(seed_results)
    out["seeds_failed"] = len(seed_results) - len(survivors)
    return out


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None,
                   data_path=None) -> ExperimentResult:
    """Run every seed of one experiment cell and aggregate.

    Individual diverging seeds are recorded as failures and skipped in the
    aggregates; the experiment only raises when every seed fails.
    """
    if dataset is None:
        if data_path is None:
            raise ExperimentError("either a loaded dataset or a data_path is required")
        dataset = load_dataset(config.dataset, data_path)

    if config.workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_cell_guarded, dataset, config, s) for s in config.seeds]
            seed_results = [f.result() for f in futures]
    else:
        seed_results = [_run_cell_guarded(dataset, config, s) for s in config.seeds]

    failures = [r for r in seed_results if "error" in r]
    if len(failures) == len(seed_results):
        raise ExperimentError(
            f"all {len(seed_results)} seeds of {config.cell_name} failed: "
            + "; ".join(r["error"] for r in failures)
        )
    if failures:
        log.warning("%s: aggregating over %d of %d seeds",
                    config.cell_name, len(seed_results) - len(failures), len(seed_results))

    cfg_echo = asdict(config)
    cfg_echo["seeds"] = list(config.seeds)
    return ExperimentResult(
        config=cfg_echo,
        seed_results=seed_results,
        aggregates=aggregate_rows(seed_results),
    )


# ---------------------------------------------------------------------------
# result files


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    with os.fdopen(fd, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def result_csv_row(result_dict: dict) -> dict:
    cfg, agg = result_dict["config"], result_dict["aggregates"]
    row = {"dataset": cfg["dataset"], "model": cfg["model"], "injection": cfg["injection"]}
    for col in CSV_COLUMNS[3:]:
        row[col] = repr(agg[col])
    return row


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def emit_results(results: list[ExperimentResult], out_dir) -> list[str]:
    """Write one JSON per experiment plus a flat aggregate CSV; atomically.

    Returns the written paths. Histories go to per-seed CSVs when the
    experiment asked for them.
    """
    if not results:
        raise ExperimentError("no results to emit")
    written = []
    for result in results:
        path = os.path.join(out_dir, f"{result.name}.json")
        _atomic_write(path, json.dumps(result.to_dict(), indent=1))
        written.append(path)
        if result.config.get("save_histories"):
            for seed_result in result.seed_results:
                if "history" not in seed_result:
                    continue
                hist = seed_result["history"]
                keys = list(hist)
                buf = io.StringIO()
                writer = csv.writer(buf)
                writer.writerow(["epoch", *keys])
                for epoch, values in enumerate(zip(*(hist[k] for k in keys))):
                    writer.writerow([epoch, *[repr(v) for v in values]])
                hist_path = os.path.join(
                    out_dir, f"{result.name}_seed{seed_result['seed']}_history.csv"
                )
                _atomic_write(hist_path, buf.getvalue())
                written.append(hist_path)

    csv_path = os.path.join(out_dir, "aggregates.csv")
    _atomic_write(csv_path, _csv_text([result_csv_row(r.to_dict()) for r in results]))
    written.append(csv_path)
    return written


def read_results(in_dir) -> list[dict]:
    """Load every experiment JSON under a results directory."""
    found = []
    for name in sorted(os.listdir(in_dir)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(in_dir, name)) as f:
            payload = json.load(f)
        if isinstance(payload, dict) and "aggregates" in payload:
            found.append(payload)
    if not found:
        raise ExperimentError(f"no experiment result files found in {in_dir}")
    return found


def best_view(result_dicts: list[dict]) -> list[dict]:
    """Per dataset: the lowest-NMAE cgan injection next to the dnn baseline."""
    datasets = sorted({r["config"]["dataset"] for r in result_dicts})
    rows = []
    for ds in datasets:
        cgan = [r for r in result_dicts
                if r["config"]["dataset"] == ds and r["config"]["model"] == "cgan"]
        dnn = [r for r in result_dicts
               if r["config"]["dataset"] == ds and r["config"]["model"] == "dnn"]
        row: dict = {"dataset": ds}
        if cgan:
            top = min(cgan, key=lambda r: r["aggregates"]["nmae_mean"])
            row["injection"] = top["config"]["injection"]
            for metric in ("nmae_mean", "nmae_std", "nmse_mean", "nmse_std"):
                row[f"cgan_{metric}"] = top["aggregates"][metric]
        if dnn:
            for metric in ("nmae_mean", "nmae_std", "nmse_mean", "nmse_std"):
                row[f"dnn_{metric}"] = dnn[0]["aggregates"][metric]
        rows.append(row)
    return rows


def default_data_dir() -> str:
    return os.environ.get("FUZZYGAN_DATA", "data")


def data_path_for(dataset: str, data_dir=None) -> str:
    return os.path.join(data_dir or default_data_dir(), CATALOG[dataset].filename)
