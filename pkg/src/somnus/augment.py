"""Synthetic training rows from a text generator.

Each participant's last 20 training rows become a pipe-delimited table
prompt; the generator answers with candidate daily rows which are validated,
pruned, and appended to the training split only. The seeded mock client is
the test substrate; the live client targets any chat-completions-compatible
HTTP endpoint.
"""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import GeneratorUnavailable, InvalidConfig, MalformedPrompt
from .tabular import BehaviorRow, BehaviorTable

API_KEY_ENV = "SOMNUS_LLM_API_KEY"

_PROMPT_HEADER = (
    "Daily behavior log for participant {pid}. Each line is one day, "
    "columns pipe-delimited:"
)
_PROMPT_FOOTER = (
    "Generate {requested} plausible additional days continuing these patterns. "
    "Answer with exactly {requested} pipe-delimited lines in the same column "
    "order and nothing else."
)


@dataclass
class PromptWindow:
    participant_id: str
    columns: list[str]  # selected features + target, in prompt order
    rows: list[list[float]]  # chronological, no missing cells

    def __post_init__(self):
        if not self.rows:
            raise InvalidConfig("window must contain at least one row")
        if any(len(r) != len(self.columns) for r in self.rows):
            raise InvalidConfig("window rows must cover every column")


@dataclass
class GeneratedBatch:
    participant_id: str
    requested: int
    raw_text: str
    parsed_rows: list[list[str]]
    accepted_rows: list[list[float]]
    rejected: list[tuple[int, str]]  # (line index, reason)

    def to_dict(self) -> dict:
        return {
            "participant_id": self.participant_id,
            "requested": self.requested,
            "parsed": len(self.parsed_rows),
            "accepted": len(self.accepted_rows),
            "rejected": [{"line": i, "reason": r} for i, r in self.rejected],
        }


@dataclass
class AugmentConfig:
    window: int = 20
    per_pid: int = 5
    seed: int = 0
    max_in_flight: int = 4  # live client only

    def __post_init__(self):
        if self.window < 1 or self.per_pid < 1:
            raise InvalidConfig("window and per_pid must be >= 1")


def build_prompt(window: PromptWindow, requested: int) -> str:
    lines = [_PROMPT_HEADER.format(pid=window.participant_id)]
    lines.append("|".join(window.columns))
    for row in window.rows:
        lines.append("|".join(f"{v:.4f}" for v in row))
    lines.append(_PROMPT_FOOTER.format(requested=requested))
    return "\n".join(lines)


def _parse_prompt(prompt: str):
    lines = prompt.splitlines()
    if len(lines) < 4 or "|" not in lines[1]:
        raise MalformedPrompt("not a table prompt")
    m = re.search(r"Generate (\d+) plausible", lines[-1])
    if not m:
        raise MalformedPrompt("missing generation instruction")
    requested = int(m.group(1))
    columns = lines[1].split("|")
    data = []
    for ln in lines[2:-1]:
        parts = ln.split("|")
        if len(parts) != len(columns):
            raise MalformedPrompt(f"ragged data line: {ln!r}")
        try:
            data.append([float(p) for p in parts])
        except ValueError:
            raise MalformedPrompt(f"non-numeric data line: {ln!r}") from None
    if not data:
        raise MalformedPrompt("no data lines")
    return columns, np.asarray(data, dtype=float), requested


class MockGeneratorClient:
    """Deterministic stand-in for the live generator.

    Values are drawn per column from a normal at the window's mean/std,
    clamped to the window's min/max. Roughly one line in ten is deliberately
    malformed so the pruning path stays exercised.
    """

    def __init__(self, seed: int = 0, malformed_rate: float = 0.1):
        self.seed = seed
        self.malformed_rate = malformed_rate

    def complete(self, prompt: str) -> str:
        columns, data, requested = _parse_prompt(prompt)
        digest = hashlib.sha256(prompt.encode()).digest()
        rng = np.random.default_rng([self.seed, int.from_bytes(digest[:8], "big")])
        mean = data.mean(axis=0)
        std = data.std(axis=0)
        lo = data.min(axis=0)
        hi = data.max(axis=0)
        out = []
        for _ in range(requested):
            vals = np.clip(rng.normal(mean, std), lo, hi)
            fields = [f"{v:.4f}" for v in vals]
            if rng.random() < self.malformed_rate:
                # alternate between dropping a field and a non-numeric token
                if rng.random() < 0.5:
                    fields = fields[:-1]
                else:
                    fields[rng.integers(0, len(fields))] = "n/a"
            out.append("|".join(fields))
        return "\n".join(out)


class LiveGeneratorClient:
    """Chat-completions HTTP client; API key from SOMNUS_LLM_API_KEY."""

    def __init__(self, base_url: str, model: str, timeout: float = 30.0, temperature: float | None = None):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.timeout = timeout
        self.temperature = temperature

    def complete(self, prompt: str) -> str:
        import httpx

        key = os.environ.get(API_KEY_ENV)
        if not key:
            raise GeneratorUnavailable(f"{API_KEY_ENV} not set")
        body = {"model": self.model, "messages": [{"role": "user", "content": prompt}]}
        if self.temperature is not None:
            body["temperature"] = self.temperature
        try:
            resp = httpx.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {key}"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise GeneratorUnavailable(str(exc)) from exc


def validate_and_prune(
    raw_text: str, columns: list[str], target_column: str, participant_id: str = "", requested: int = 0
) -> GeneratedBatch:
    """Accept a line iff it has exactly len(columns) finite numeric fields
    with the target inside [0, 1]."""
    target_i = columns.index(target_column)
    parsed = [ln.split("|") for ln in raw_text.splitlines() if ln.strip()]
    accepted, rejected = [], []
    for i, fields in enumerate(parsed):
        if len(fields) != len(columns):
            rejected.append((i, "wrong-arity"))
            continue
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            rejected.append((i, "non-numeric"))
            continue
        if not all(np.isfinite(vals)):
            rejected.append((i, "non-finite"))
            continue
        if not 0.0 <= vals[target_i] <= 1.0:
            rejected.append((i, "target-out-of-range"))
            continue
        accepted.append(vals)
    return GeneratedBatch(participant_id, requested, raw_text, parsed, accepted, rejected)


def augment_training_set(
    train: BehaviorTable,
    client,
    cfg: AugmentConfig | None = None,
    date_floor: dict[str, dt.date] | None = None,
) -> tuple[BehaviorTable, list[dict]]:
    """Append generator rows per participant; original rows untouched.

    Synthetic dates continue after max(participant's last training date,
    date_floor[pid]); pass the last test date as the floor so synthetic days
    never collide with validation/test date ranges. Participants with fewer
    than `window` rows are skipped and logged.
    """
    cfg = cfg or AugmentConfig()
    if train.missing_count():
        raise InvalidConfig("augmentation requires a fully imputed table")
    date_floor = date_floor or {}
    columns = train.feature_columns + [train.target_column]
    by_pid: dict[str, list[BehaviorRow]] = {}
    for row in train.rows:
        by_pid.setdefault(row.participant_id, []).append(row)

    log: list[dict] = []
    synthetic: list[BehaviorRow] = []
    for pid in sorted(by_pid):
        rows = by_pid[pid]
        if len(rows) < cfg.window:
            log.append({"participant_id": pid, "skipped": f"only {len(rows)} rows < window {cfg.window}"})
            continue
        tail = rows[-cfg.window :]
        window = PromptWindow(pid, columns, [[r.values[c] for c in columns] for r in tail])
        prompt = build_prompt(window, cfg.per_pid)
        raw = client.complete(prompt)  # GeneratorUnavailable propagates: no partial runs
        batch = validate_and_prune(raw, columns, train.target_column, pid, cfg.per_pid)
        log.append(batch.to_dict())
        start = max(rows[-1].date, date_floor.get(pid, rows[-1].date))
        for i, vals in enumerate(batch.accepted_rows[: cfg.per_pid]):
            day = start + dt.timedelta(days=i + 1)
            synthetic.append(BehaviorRow(pid, day, dict(zip(columns, vals)), synthetic=True))

    merged = sorted(train.rows + synthetic, key=lambda r: (r.participant_id, r.date))
    return train.replace(rows=merged), log


def write_batch_log(log: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(log, fh, indent=2, sort_keys=True)
