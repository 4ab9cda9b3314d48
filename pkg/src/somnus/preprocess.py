"""Cleaning pipeline: lag target, sparse-column drop, outlier fences,
per-participant mean imputation, and weak-correlation pruning.

Stage order is fixed: drop rows without target -> add lag feature ->
drop sparse columns -> remove outlier rows -> impute -> prune weak columns.
Every removal lands in exactly one PreprocessReport list so counts reconcile.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import EmptyColumn, InvalidConfig
from .tabular import BehaviorRow, BehaviorTable


@dataclass
class PipelineConfig:
    na_column_threshold: float = 0.30
    tukey_multiplier: float = 1.5
    tukey_columns: tuple[str, ...] = (
        "screen_minutes_total",
        "sleep_duration_minutes",
        "steps_total",
    )
    correlation_floor: float = 0.001
    lag_feature_name: str = "prev_day_efficiency"

    def __post_init__(self):
        if not 0 < self.na_column_threshold < 1:
            raise InvalidConfig("na_column_threshold must lie in (0, 1)")
        if self.tukey_multiplier <= 0:
            raise InvalidConfig("tukey_multiplier must be > 0")
        if self.correlation_floor < 0:
            raise InvalidConfig("correlation_floor must be >= 0")
        self.tukey_columns = tuple(self.tukey_columns)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        kwargs = {k: raw[k] for k in cls.__dataclass_fields__ if k in raw}
        return cls(**kwargs)


@dataclass
class PreprocessReport:
    dropped_columns_na: list[tuple[str, float]] = field(default_factory=list)
    dropped_columns_corr: list[tuple[str, float]] = field(default_factory=list)
    dropped_rows_outlier: list[tuple[str, str, str, float, tuple[float, float]]] = field(
        default_factory=list
    )
    dropped_rows_no_target: list[tuple[str, str]] = field(default_factory=list)
    dropped_rows_first_index: list[tuple[str, str]] = field(default_factory=list)
    imputed_cells: dict[str, int] = field(default_factory=dict)

    def dropped_row_count(self) -> int:
        return (
            len(self.dropped_rows_outlier)
            + len(self.dropped_rows_no_target)
            + len(self.dropped_rows_first_index)
        )

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def drop_no_target_rows(table: BehaviorTable, report: PreprocessReport) -> BehaviorTable:
    kept = []
    for row in table.rows:
        if row.values[table.target_column] is None:
            report.dropped_rows_no_target.append((row.participant_id, row.date.isoformat()))
        else:
            kept.append(row)
    return table.replace(rows=kept)


def add_lag_target(
    table: BehaviorTable, cfg: PipelineConfig, report: PreprocessReport | None = None
) -> BehaviorTable:
    """Attach the previous row's target as a feature; drop each pid's first row.

    The "previous" row is the previous surviving row for the pid, not the
    previous calendar day; daily data makes the two coincide except across
    gaps. No-op if the lag column already exists (table already lagged).
    """
    if cfg.lag_feature_name in table.columns:
        return table
    report = report if report is not None else PreprocessReport()
    out = []
    prev: BehaviorRow | None = None
    for row in table.rows:
        if prev is None or prev.participant_id != row.participant_id:
            report.dropped_rows_first_index.append((row.participant_id, row.date.isoformat()))
        else:
            values = dict(row.values)
            values[cfg.lag_feature_name] = prev.values[table.target_column]
            out.append(BehaviorRow(row.participant_id, row.date, values, row.synthetic))
        prev = row
    columns = table.feature_columns + [cfg.lag_feature_name, table.target_column]
    return BehaviorTable(out, columns, table.target_column)


def drop_sparse_columns(
    table: BehaviorTable, cfg: PipelineConfig, report: PreprocessReport | None = None
) -> BehaviorTable:
    report = report if report is not None else PreprocessReport()
    n = len(table.rows)
    protected = {table.target_column, cfg.lag_feature_name}
    keep = []
    for col in table.columns:
        if col in protected or n == 0:
            keep.append(col)
            continue
        frac = sum(1 for v in table.column_values(col) if v is None) / n
        if frac > cfg.na_column_threshold:
            report.dropped_columns_na.append((col, frac))
        else:
            keep.append(col)
    if len(keep) == len(table.columns):
        return table
    rows = [
        BehaviorRow(r.participant_id, r.date, {c: r.values[c] for c in keep}, r.synthetic)
        for r in table.rows
    ]
    return BehaviorTable(rows, keep, table.target_column)


def tukey_fences(values: list[float], multiplier: float) -> tuple[float, float]:
    """[Q1 - k*IQR, Q3 + k*IQR] with linearly interpolated quartiles."""
    arr = np.asarray(values, dtype=float)
    q1, q3 = np.quantile(arr, [0.25, 0.75])  # linear interpolation at q*(n-1)
    iqr = q3 - q1
    return float(q1 - multiplier * iqr), float(q3 + multiplier * iqr)


def remove_outlier_rows(
    table: BehaviorTable, cfg: PipelineConfig, report: PreprocessReport | None = None
) -> BehaviorTable:
    report = report if report is not None else PreprocessReport()
    fences = {}
    for col in cfg.tukey_columns:
        if col not in table.columns:
            continue  # may have been dropped as sparse
        present = [v for v in table.column_values(col) if v is not None]
        if not present:
            raise EmptyColumn(col)
        fences[col] = tukey_fences(present, cfg.tukey_multiplier)
    kept = []
    for row in table.rows:
        offending = None
        for col, (lo, hi) in fences.items():
            v = row.values[col]
            if v is not None and (v < lo or v > hi):  # strictly outside; on-fence kept
                offending = (col, v, (lo, hi))
                break
        if offending is None:
            kept.append(row)
        else:
            col, v, fence = offending
            report.dropped_rows_outlier.append(
                (row.participant_id, row.date.isoformat(), col, v, fence)
            )
    return table.replace(rows=kept)


def impute_missing(
    table: BehaviorTable, report: PreprocessReport | None = None
) -> BehaviorTable:
    """Fill missing feature cells with the participant's column mean,
    falling back to the global column mean for all-missing participants."""
    report = report if report is not None else PreprocessReport()
    cols = table.feature_columns
    global_means = {}
    pid_means: dict[tuple[str, str], float] = {}
    by_pid: dict[str, list[BehaviorRow]] = {}
    for row in table.rows:
        by_pid.setdefault(row.participant_id, []).append(row)
    for col in cols:
        present = [v for v in table.column_values(col) if v is not None]
        global_means[col] = sum(present) / len(present) if present else None
        for pid, rows in by_pid.items():
            vals = [r.values[col] for r in rows if r.values[col] is not None]
            if vals:
                pid_means[(pid, col)] = sum(vals) / len(vals)
    out = []
    for row in table.rows:
        values = dict(row.values)
        changed = False
        for col in cols:
            if values[col] is None:
                fill = pid_means.get((row.participant_id, col), global_means[col])
                if fill is None:
                    continue  # globally empty column; sparse drop should have caught it
                values[col] = fill
                report.imputed_cells[col] = report.imputed_cells.get(col, 0) + 1
                changed = True
        out.append(
            BehaviorRow(row.participant_id, row.date, values, row.synthetic) if changed else row
        )
    return table.replace(rows=out)


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = np.sqrt((xd * xd).sum() * (yd * yd).sum())
    if denom == 0:
        return float("nan")
    return float((xd * yd).sum() / denom)


def prune_weak_columns(
    table: BehaviorTable, cfg: PipelineConfig, report: PreprocessReport | None = None
) -> BehaviorTable:
    report = report if report is not None else PreprocessReport()
    y = table.column_values(table.target_column)
    protected = {table.target_column, cfg.lag_feature_name}
    keep = []
    for col in table.columns:
        if col in protected:
            keep.append(col)
            continue
        r = pearson_r(table.column_values(col), y)
        if np.isnan(r):
            report.dropped_columns_corr.append((col, 0.0))  # constant column
        elif abs(r) < cfg.correlation_floor:
            report.dropped_columns_corr.append((col, r))
        else:
            keep.append(col)
    if len(keep) == len(table.columns):
        return table
    rows = [
        BehaviorRow(r.participant_id, r.date, {c: r.values[c] for c in keep}, r.synthetic)
        for r in table.rows
    ]
    return BehaviorTable(rows, keep, table.target_column)


def run_pipeline(
    table: BehaviorTable, cfg: PipelineConfig | None = None
) -> tuple[BehaviorTable, PreprocessReport]:
    cfg = cfg or PipelineConfig()
    report = PreprocessReport()
    n_in = len(table.rows)
    t = drop_no_target_rows(table, report)
    t = add_lag_target(t, cfg, report)
    t = drop_sparse_columns(t, cfg, report)
    t = remove_outlier_rows(t, cfg, report)
    t = impute_missing(t, report)
    t = prune_weak_columns(t, cfg, report)
    assert n_in == len(t.rows) + report.dropped_row_count(), "row accounting broke"
    return t, report
