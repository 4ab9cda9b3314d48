"""Experiment protocol: per-participant chronological splits, metrics, and
the 3-feature-set x 4-model evaluation grid."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import math
import numpy as np

from . import augment as augment_mod
from .errors import DegenerateTarget, EmptyTable, InvalidConfig, LengthMismatch
from .ensemble import (
    HyperParams,
    Matrix,
    fit_forest,
    fit_gbdt,
    fit_mean,
    gbdt_hyperparams_pair,
    select_top_k,
)
from .preprocess import PipelineConfig, run_pipeline
from .tabular import BehaviorTable

FEATURE_SETS = ("hand-picked", "top-k", "top-k+G")
MODELS = ("mean", "forest", "gbdt-a", "gbdt-b")
_SET_HEADINGS = {"hand-picked": "Hand-picked", "top-k": "Top-k", "top-k+G": "Top-k+G"}


@dataclass
class SplitSpec:
    test_days: int = 14
    val_fraction_of_remainder: float = 0.25

    def __post_init__(self):
        if self.test_days < 1:
            raise InvalidConfig("test_days must be >= 1")
        if not 0 < self.val_fraction_of_remainder < 1:
            raise InvalidConfig("val fraction must lie in (0, 1)")


def chronological_split(
    table: BehaviorTable, spec: SplitSpec | None = None
) -> tuple[BehaviorTable, BehaviorTable, BehaviorTable, list[str]]:
    """Per participant: last test_days rows to test, then the trailing
    ceil(fraction*m) of the remainder to val, the rest to train.

    Participants with too few rows contribute nothing to test; their rows
    still split into train/val. Returns (train, val, test, excluded_pids).
    """
    if not table.rows:
        raise EmptyTable()
    spec = spec or SplitSpec()
    by_pid: dict[str, list] = {}
    for row in table.rows:
        by_pid.setdefault(row.participant_id, []).append(row)
    train, val, test, excluded = [], [], [], []
    for pid in sorted(by_pid):
        rows = by_pid[pid]
        if len(rows) > spec.test_days:
            head, tail = rows[: -spec.test_days], rows[-spec.test_days :]
        else:
            head, tail = rows, []
            excluded.append(pid)
        n_val = math.ceil(spec.val_fraction_of_remainder * len(head))
        train.extend(head[: len(head) - n_val])
        val.extend(head[len(head) - n_val :])
        test.extend(tail)
    mk = lambda rows: table.replace(rows=rows)
    return mk(train), mk(val), mk(test), excluded


def _check_lengths(pred, actual):
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if len(pred) != len(actual) or len(pred) == 0:
        raise LengthMismatch(f"{len(pred)} predictions vs {len(actual)} actuals")
    return pred, actual


def rmse(pred, actual) -> float:
    pred, actual = _check_lengths(pred, actual)
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def mae(pred, actual) -> float:
    pred, actual = _check_lengths(pred, actual)
    return float(np.mean(np.abs(pred - actual)))


def r2(pred, actual) -> float:
    pred, actual = _check_lengths(pred, actual)
    ss_res = float(np.sum((actual - pred) ** 2))
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0:
        if ss_res == 0:
            return 0.0
        raise DegenerateTarget("constant target with nonzero residual")
    return 1.0 - ss_res / ss_tot


@dataclass
class EvalReport:
    cells: dict[tuple[str, str], dict[str, float]]
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "cells": {f"{fs}/{model}": m for (fs, model), m in sorted(self.cells.items())},
            "metadata": self.metadata,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        doc = json.loads(text)
        cells = {}
        for key, metrics in doc["cells"].items():
            fs, model = key.split("/", 1)
            cells[(fs, model)] = metrics
        return cls(cells, doc.get("metadata", {}))


def _config_hash(*parts) -> str:
    blob = json.dumps(parts, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def run_experiment(
    raw: BehaviorTable,
    pipeline_cfg: PipelineConfig | None = None,
    hyperparams: HyperParams | None = None,
    seed: int = 0,
    client=None,
    k: int = 20,
    split_spec: SplitSpec | None = None,
    augment_cfg: "augment_mod.AugmentConfig | None" = None,
) -> EvalReport:
    """Full protocol: preprocess, split, then the 12-cell evaluation grid.

    Feature sets: (a) hand-picked = every column surviving preprocessing,
    (b) top-k by the stronger-regularized gbdt's importances fit on train
    only, (c) top-k with generator-augmented training rows. Test rows are
    identical across all three.
    """
    pipeline_cfg = pipeline_cfg or PipelineConfig()
    hyperparams = hyperparams or HyperParams()
    split_spec = split_spec or SplitSpec()
    hp_a, hp_b = gbdt_hyperparams_pair(hyperparams)

    clean, pre_report = run_pipeline(raw, pipeline_cfg)
    train, val, test, excluded = chronological_split(clean, split_spec)
    if not test.rows:
        raise EmptyTable("no participant has enough rows for a test split")

    all_features = clean.feature_columns
    ranker = fit_gbdt(Matrix.from_table(train, all_features), hp_b, seed=seed)
    top_features = select_top_k(ranker.importances, min(k, len(all_features)))

    client = client if client is not None else augment_mod.MockGeneratorClient(seed=seed)
    augment_cfg = augment_cfg or augment_mod.AugmentConfig(seed=seed)
    date_floor = _last_dates(test)
    train_topk = train.restrict_columns(top_features)
    augmented, batch_log = augment_mod.augment_training_set(
        train_topk, client, augment_cfg, date_floor=date_floor
    )

    tasks = {
        "hand-picked": (train, all_features),
        "top-k": (train_topk, top_features),
        "top-k+G": (augmented, top_features),
    }
    cells = {}
    for fs_name, (tr_table, features) in tasks.items():
        m_train = Matrix.from_table(tr_table, features)
        m_test = Matrix.from_table(test, features)
        fitted = {
            "mean": fit_mean(m_train),
            "forest": fit_forest(m_train, hp_a, seed=seed),
            "gbdt-a": fit_gbdt(m_train, hp_a, seed=seed),
            "gbdt-b": fit_gbdt(m_train, hp_b, seed=seed),
        }
        for model_name, artifact in fitted.items():
            pred = artifact.predict_matrix(m_test.X)
            cells[(fs_name, model_name)] = {
                "rmse": rmse(pred, m_test.y),
                "mae": mae(pred, m_test.y),
                "r2": r2(pred, m_test.y),
            }
    metadata = {
        "seed": seed,
        "k": k,
        "top_features": top_features,
        "config_hash": _config_hash(vars(pipeline_cfg), vars(hyperparams), vars(split_spec), seed, k),
        "row_counts": {
            "raw": len(raw.rows),
            "clean": len(clean.rows),
            "train": len(train.rows),
            "val": len(val.rows),
            "test": len(test.rows),
            "augmented_train": len(augmented.rows),
        },
        "excluded_from_test": excluded,
        "preprocess_dropped_rows": pre_report.dropped_row_count(),
        "augment_batches": len(batch_log),
    }
    return EvalReport(cells, metadata)


def _last_dates(table: BehaviorTable) -> dict:
    floor = {}
    for row in table.rows:
        cur = floor.get(row.participant_id)
        if cur is None or row.date > cur:
            floor[row.participant_id] = row.date
    return floor


def render_report(report: EvalReport, format: str = "markdown") -> str:
    if format == "json":
        return report.to_json()
    if format == "csv":
        lines = ["feature_set,model,rmse,mae,r2"]
        for fs in FEATURE_SETS:
            for model in MODELS:
                m = report.cells[(fs, model)]
                lines.append(f"{fs},{model},{m['rmse']!r},{m['mae']!r},{m['r2']!r}")
        return "\n".join(lines) + "\n"
    if format == "markdown":
        head1 = "| Model | " + " | ".join(
            f"{_SET_HEADINGS[fs]} RMSE | {_SET_HEADINGS[fs]} MAE | {_SET_HEADINGS[fs]} R2"
            for fs in FEATURE_SETS
        ) + " |"
        sep = "|" + "---|" * (1 + 3 * len(FEATURE_SETS))
        lines = [head1, sep]
        for model in MODELS:
            cells = []
            for fs in FEATURE_SETS:
                m = report.cells[(fs, model)]
                cells.extend(f"{m[k]:.4f}" for k in ("rmse", "mae", "r2"))
            lines.append("| " + model + " | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    raise InvalidConfig(f"unknown report format: {format!r}")


def parse_csv_report(text: str) -> EvalReport:
    lines = [ln for ln in text.strip().splitlines() if ln]
    cells = {}
    for ln in lines[1:]:
        fs, model, a, b, c = ln.split(",")
        cells[(fs, model)] = {"rmse": float(a), "mae": float(b), "r2": float(c)}
    return EvalReport(cells)
