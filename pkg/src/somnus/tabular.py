"""Behavioral data tables: schema, CSV ingestion, and the seeded synthetic fixture.

The real mobile-sensing dataset this models is access-restricted, so every
test and demo runs on `generate_fixture`, which plants a known signal into
a 66-feature daily behavior table with realistic missingness and outliers.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateKey, InvalidConfig, MissingColumn, UnparseableNumber

MISSING_TOKENS = {"", "na", "n/a", "nan"}

TARGET_COLUMN = "sleep_efficiency"


@dataclass(frozen=True)
class FeatureDomain:
    column: str
    category: str  # bluetooth | call | location | screen | steps | sleep | other
    plausible_range: tuple[float, float]
    adjustable: bool = False

    def __post_init__(self):
        lo, hi = self.plausible_range
        if not lo < hi:
            raise InvalidConfig(f"{self.column}: plausible_range must satisfy lo < hi")
        if self.adjustable and self.category not in {"screen", "steps", "call", "location"}:
            raise InvalidConfig(f"{self.column}: only behavioral categories can be adjustable")


def _dom(column, category, lo, hi, adjustable=False):
    return FeatureDomain(column, category, (float(lo), float(hi)), adjustable)


# 66 hand-picked behavioral features across the five sensing families plus
# wearable sleep summaries. Names are invented analogs; the restricted source
# dataset's exact column list is not public.
FIXTURE_SCHEMA: tuple[FeatureDomain, ...] = (
    # bluetooth (12)
    _dom("bt_devices_unique_count", "bluetooth", 0, 60),
    _dom("bt_devices_mean", "bluetooth", 0, 25),
    _dom("bt_scans_total", "bluetooth", 0, 400),
    _dom("bt_scans_day", "bluetooth", 0, 250),
    _dom("bt_scans_evening", "bluetooth", 0, 120),
    _dom("bt_scans_night", "bluetooth", 0, 80),
    _dom("bt_nearby_ratio", "bluetooth", 0, 1),
    _dom("bt_own_device_ratio", "bluetooth", 0, 1),
    _dom("bt_new_devices_count", "bluetooth", 0, 30),
    _dom("bt_most_frequent_device_minutes", "bluetooth", 0, 720),
    _dom("bt_scan_gap_mean_minutes", "bluetooth", 1, 120),
    _dom("bt_scan_gap_std_minutes", "bluetooth", 0, 90),
    # call (12)
    _dom("call_in_count", "call", 0, 20),
    _dom("call_out_count", "call", 0, 20),
    _dom("call_missed_count", "call", 0, 10),
    _dom("call_in_duration_minutes", "call", 0, 90),
    _dom("call_out_duration_minutes", "call", 0, 90),
    _dom("call_duration_total_minutes", "call", 0, 180, adjustable=True),
    _dom("call_evening_count", "call", 0, 12, adjustable=True),
    _dom("call_night_count", "call", 0, 6),
    _dom("call_contacts_unique", "call", 0, 15),
    _dom("call_duration_mean_minutes", "call", 0, 40),
    _dom("call_first_hour", "call", 0, 23),
    _dom("call_last_hour", "call", 0, 23),
    # location (14)
    _dom("loc_time_at_home_minutes", "location", 0, 1440, adjustable=True),
    _dom("loc_time_at_work_minutes", "location", 0, 720),
    _dom("loc_distance_total_km", "location", 0, 120),
    _dom("loc_radius_gyration_km", "location", 0, 50),
    _dom("loc_places_visited", "location", 0, 20),
    _dom("loc_moving_minutes", "location", 0, 360),
    _dom("loc_green_space_minutes", "location", 0, 240, adjustable=True),
    _dom("loc_entropy", "location", 0, 4),
    _dom("loc_normalized_entropy", "location", 0, 1),
    _dom("loc_transitions_count", "location", 0, 40),
    _dom("loc_max_distance_home_km", "location", 0, 80),
    _dom("loc_night_away_minutes", "location", 0, 480),
    _dom("loc_speed_mean_kmh", "location", 0, 60),
    _dom("loc_outdoor_minutes", "location", 0, 600, adjustable=True),
    # screen (12)
    _dom("screen_minutes_total", "screen", 0, 720, adjustable=True),
    _dom("screen_unlocks_count", "screen", 0, 200),
    _dom("screen_episodes_count", "screen", 0, 150),
    _dom("screen_episode_mean_minutes", "screen", 0, 60),
    _dom("screen_first_use_hour", "screen", 0, 23),
    _dom("screen_last_use_hour", "screen", 0, 23),
    _dom("screen_evening_minutes", "screen", 0, 300, adjustable=True),
    _dom("screen_night_minutes", "screen", 0, 240, adjustable=True),
    _dom("screen_before_bed_minutes", "screen", 0, 120, adjustable=True),
    _dom("screen_longest_episode_minutes", "screen", 0, 180),
    _dom("screen_morning_minutes", "screen", 0, 180),
    _dom("screen_unlocks_night_count", "screen", 0, 40),
    # steps (10)
    _dom("steps_total", "steps", 0, 20000, adjustable=True),
    _dom("steps_active_minutes", "steps", 0, 300, adjustable=True),
    _dom("steps_sedentary_minutes", "steps", 0, 1200),
    _dom("steps_max_hourly", "steps", 0, 4000),
    _dom("steps_evening_total", "steps", 0, 6000, adjustable=True),
    _dom("steps_morning_total", "steps", 0, 6000),
    _dom("steps_distance_km", "steps", 0, 16),
    _dom("steps_floors_climbed", "steps", 0, 40),
    _dom("steps_activity_episodes", "steps", 0, 30),
    _dom("steps_calories_est", "steps", 800, 4000),
    # sleep (6)
    _dom("sleep_duration_minutes", "sleep", 180, 720),
    _dom("sleep_onset_hour", "sleep", 19, 28),
    _dom("sleep_wake_hour", "sleep", 4, 12),
    _dom("sleep_awakenings_count", "sleep", 0, 12),
    _dom("sleep_restless_minutes", "sleep", 0, 120),
    _dom("sleep_naps_count", "sleep", 0, 4),
)

assert len(FIXTURE_SCHEMA) == 66

# Columns the fixture seeds extreme values into; the preprocessing defaults
# apply the outlier fences to the same three.
OUTLIER_COLUMNS = ("screen_minutes_total", "sleep_duration_minutes", "steps_total")


@dataclass
class BehaviorRow:
    participant_id: str
    date: dt.date
    values: dict[str, float | None]
    synthetic: bool = False

    def __post_init__(self):
        if not self.participant_id:
            raise InvalidConfig("participant_id must be non-empty")
        if not isinstance(self.date, dt.date):
            raise InvalidConfig(f"date must be a calendar day, got {self.date!r}")


@dataclass
class BehaviorTable:
    rows: list[BehaviorRow]
    columns: list[str]
    target_column: str

    def __post_init__(self):
        colset = set(self.columns)
        if self.target_column not in colset:
            raise MissingColumn(self.target_column)
        seen = set()
        prev_key = None
        for row in self.rows:
            key = (row.participant_id, row.date)
            if key in seen:
                raise DuplicateKey(*key)
            seen.add(key)
            if prev_key is not None and key < prev_key:
                raise InvalidConfig("rows must be sorted by (pid, date)")
            prev_key = key
            if set(row.values) != colset:
                raise InvalidConfig(
                    f"row ({row.participant_id}, {row.date}) does not cover every column"
                )
            t = row.values[self.target_column]
            if t is not None and not 0.0 <= t <= 1.0:
                raise InvalidConfig(f"target {t} outside [0, 1] at {key}")

    @property
    def feature_columns(self) -> list[str]:
        return [c for c in self.columns if c != self.target_column]

    def column_values(self, name) -> list[float | None]:
        return [r.values[name] for r in self.rows]

    def replace(self, rows=None, columns=None) -> "BehaviorTable":
        return BehaviorTable(
            rows=self.rows if rows is None else rows,
            columns=self.columns if columns is None else columns,
            target_column=self.target_column,
        )

    def restrict_columns(self, keep: list[str]) -> "BehaviorTable":
        cols = list(keep)
        if self.target_column not in cols:
            cols.append(self.target_column)
        rows = [
            BehaviorRow(r.participant_id, r.date, {c: r.values[c] for c in cols}, r.synthetic)
            for r in self.rows
        ]
        return BehaviorTable(rows, cols, self.target_column)

    def missing_count(self) -> int:
        return sum(1 for r in self.rows for v in r.values.values() if v is None)


def _sorted_rows(rows):
    return sorted(rows, key=lambda r: (r.participant_id, r.date))


def _parse_cell(token, row_no, col):
    token = token.strip()
    if token.lower() in MISSING_TOKENS:
        return None
    try:
        v = float(token)
    except ValueError:
        raise UnparseableNumber(row_no, col, token) from None
    if not math.isfinite(v):
        raise UnparseableNumber(row_no, col, token)
    return v


def load_csv(path, schema=None, target=TARGET_COLUMN) -> BehaviorTable:
    """Read a behavior table from CSV (pid, date, feature..., target)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn("pid") from None
        header = [h.strip() for h in header]
        for required in ("pid", "date", target):
            if required not in header:
                raise MissingColumn(required)
        if schema is not None:
            for dom in schema:
                if dom.column not in header:
                    raise MissingColumn(dom.column)
        value_cols = [h for h in header if h not in ("pid", "date", "synthetic")]
        pid_i, date_i = header.index("pid"), header.index("date")
        syn_i = header.index("synthetic") if "synthetic" in header else None
        col_idx = [(col, header.index(col)) for col in value_cols]
        rows = []
        for row_no, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise UnparseableNumber(row_no, "<row>", ",".join(rec))
            pid = rec[pid_i].strip()
            day = dt.date.fromisoformat(rec[date_i].strip())
            values = {col: _parse_cell(rec[i], row_no, col) for col, i in col_idx}
            synthetic = syn_i is not None and rec[syn_i].strip() == "1"
            rows.append(BehaviorRow(pid, day, values, synthetic))
    return BehaviorTable(_sorted_rows(rows), value_cols, target)


def write_csv(table: BehaviorTable, path) -> None:
    """Write a table back out; numeric cells at 6 decimal places, missing empty.

    A trailing synthetic marker column appears only when the table holds
    generator rows, so untouched files round-trip byte for byte."""
    feature_cols = table.feature_columns
    mark_synthetic = any(r.synthetic for r in table.rows)
    header = ["pid", "date"] + feature_cols + [table.target_column]
    if mark_synthetic:
        header.append("synthetic")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in table.rows:
            rec = [row.participant_id, row.date.isoformat()]
            for col in feature_cols + [table.target_column]:
                v = row.values[col]
                rec.append("" if v is None else f"{v:.6f}")
            if mark_synthetic:
                rec.append("1" if row.synthetic else "0")
            writer.writerow(rec)


@dataclass
class PlantedSignal:
    """Ground-truth structure baked into the synthetic fixture."""

    coefficients: dict[str, float] = field(
        default_factory=lambda: {
            "screen_minutes_total": -0.00028,
            "steps_total": 0.000010,
            "call_duration_total_minutes": -0.00055,
            "loc_green_space_minutes": 0.00045,
        }
    )
    noise_std: float = 0.028
    missing_fraction: float = 0.04
    outlier_fraction: float = 0.01
    # extra plumbing: columns forced sparse (to exercise the NA-column drop)
    # and occasional missing targets (to exercise the no-target row drop)
    sparse_columns: dict[str, float] = field(
        default_factory=lambda: {"bt_scan_gap_std_minutes": 0.45, "loc_night_away_minutes": 0.40}
    )
    target_missing_fraction: float = 0.01

    def __post_init__(self):
        if self.noise_std < 0:
            raise InvalidConfig("noise_std must be >= 0")
        for name, frac in (
            ("missing_fraction", self.missing_fraction),
            ("outlier_fraction", self.outlier_fraction),
            ("target_missing_fraction", self.target_missing_fraction),
        ):
            if not 0 <= frac < 1:
                raise InvalidConfig(f"{name} must lie in [0, 1)")


def generate_fixture(
    seed: int,
    participants: int,
    days_per_participant: int,
    planted: PlantedSignal | None = None,
    schema: tuple[FeatureDomain, ...] = FIXTURE_SCHEMA,
    target_center: float = 0.86,
    start_date: dt.date = dt.date(2018, 4, 2),
) -> BehaviorTable:
    """Deterministic synthetic behavior table with a planted linear signal.

    Daily feature values are per-participant baselines plus bounded uniform
    jitter, so the outlier fences never clip honest data; only the explicitly
    planted extreme cells fall outside them. Target = base + planted linear
    combination + per-participant offset + gaussian noise, clamped to [0, 1].
    All values are rounded to 6 decimals so CSV round-trips are exact.
    """
    if participants < 1:
        raise InvalidConfig("participants must be >= 1")
    if days_per_participant < 16:
        raise InvalidConfig("days_per_participant must be >= 16")
    planted = planted or PlantedSignal()
    for col in planted.coefficients:
        if col not in {d.column for d in schema}:
            raise InvalidConfig(f"planted coefficient on unknown column {col!r}")

    rng = np.random.default_rng(seed)
    domains = list(schema)
    base = target_center - sum(
        coef * (dom.plausible_range[0] + dom.plausible_range[1]) / 2
        for dom in domains
        for coef in [planted.coefficients.get(dom.column, 0.0)]
    )

    rows: list[BehaviorRow] = []
    for p in range(participants):
        pid = f"p{p + 1:03d}"
        means = {}
        for dom in domains:
            lo, hi = dom.plausible_range
            span = hi - lo
            means[dom.column] = rng.uniform(lo + 0.25 * span, hi - 0.25 * span)
        pid_offset = rng.uniform(-0.02, 0.02)
        for d in range(days_per_participant):
            day = start_date + dt.timedelta(days=d)
            values = {}
            signal = 0.0
            for dom in domains:
                lo, hi = dom.plausible_range
                span = hi - lo
                v = float(np.clip(means[dom.column] + rng.uniform(-span / 6, span / 6), lo, hi))
                values[dom.column] = round(v, 6)
                coef = planted.coefficients.get(dom.column)
                if coef:
                    signal += coef * v
            t = base + signal + pid_offset + rng.normal(0.0, planted.noise_std)
            values[TARGET_COLUMN] = round(float(np.clip(t, 0.0, 1.0)), 6)
            rows.append(BehaviorRow(pid, day, values))

    n = len(rows)
    # planted extreme cells on the outlier-prone columns
    for col in OUTLIER_COLUMNS:
        dom = next(d for d in domains if d.column == col)
        k = int(planted.outlier_fraction * n)
        if k:
            for i in rng.choice(n, size=k, replace=False):
                rows[i].values[col] = round(dom.plausible_range[1] * 4.0, 6)
    # planted missing feature cells (outlier columns excluded so the two
    # plants never collide)
    missing_cols = [d.column for d in domains if d.column not in OUTLIER_COLUMNS]
    cells = n * len(missing_cols)
    k = int(planted.missing_fraction * cells)
    if k:
        for flat in rng.choice(cells, size=k, replace=False):
            rows[flat // len(missing_cols)].values[missing_cols[flat % len(missing_cols)]] = None
    # forced-sparse columns
    for col, frac in planted.sparse_columns.items():
        k = int(frac * n)
        if k:
            for i in rng.choice(n, size=k, replace=False):
                rows[i].values[col] = None
    # occasional missing targets
    k = int(planted.target_missing_fraction * n)
    if k:
        for i in rng.choice(n, size=k, replace=False):
            rows[i].values[TARGET_COLUMN] = None

    columns = [d.column for d in domains] + [TARGET_COLUMN]
    return BehaviorTable(rows, columns, TARGET_COLUMN)


def domain_map(schema=FIXTURE_SCHEMA) -> dict[str, FeatureDomain]:
    return {d.column: d for d in schema}
