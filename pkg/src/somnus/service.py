"""Demo-stage back end: prediction, what-if deltas, threshold-based
recommendations, and a chat layer with deterministic template fallback.

The model artifact is immutable and shared by all request handlers; the
only per-request state is the session -> snapshot binding.
"""

from __future__ import annotations

import re
import threading
import uuid
from dataclasses import dataclass, field

import numpy as np

from . import ensemble
from .errors import (
    CorruptArtifact,
    GeneratorUnavailable,
    MissingFeature,
    OutOfRange,
    SomnusError,
    UnknownFeature,
)
from .tabular import FIXTURE_SCHEMA, BehaviorTable, FeatureDomain, domain_map


@dataclass
class UserSnapshot:
    participant_id: str
    feature_values: dict[str, float]
    source: str = "request-supplied"  # or dataset-sample


@dataclass
class WhatIfResult:
    base_prediction: float
    modified_prediction: float
    delta: float
    overrides: dict[str, tuple[float, float]]  # name -> (old, new)

    def to_dict(self) -> dict:
        return {
            "base_prediction": self.base_prediction,
            "modified_prediction": self.modified_prediction,
            "delta": self.delta,
            "overrides": {k: {"old": a, "new": b} for k, (a, b) in self.overrides.items()},
        }


@dataclass
class Recommendation:
    feature: str
    suggested_value: float
    expected_gain: float
    message: str

    def to_dict(self) -> dict:
        return vars(self)


@dataclass
class ServiceConfig:
    grid_points: int = 9
    gain_threshold: float = 0.005
    max_recs: int = 3
    # advice bands on predicted efficiency; boundaries inclusive upward
    band_poor: float = 0.80
    band_good: float = 0.90
    cors_origin: str = "*"


_TEMPLATES = {
    "poor": (
        "Tonight's predicted sleep efficiency is {pred:.2f}, which is on the low "
        "side. Small changes to evening screen time and daytime activity tend to "
        "move this the most."
    ),
    "fair": (
        "Tonight's predicted sleep efficiency is {pred:.2f} - a fair night. "
        "There is still room to improve; try the what-if sliders to see which "
        "habit shifts help."
    ),
    "good": (
        "Tonight's predicted sleep efficiency is {pred:.2f}. You are on track "
        "for a good night - keep your current routine going."
    ),
}

_SUGGESTED_QUESTIONS = [
    "How will I sleep tonight?",
    "What if I walk 2000 more steps?",
    "What should I change to sleep better?",
]

_STEPS_RE = re.compile(r"(\d[\d,]*)\s+(more|fewer|less)\s+steps", re.IGNORECASE)
_PREDICT_RE = re.compile(r"\b(sleep tonight|how will i sleep|predict|sleep quality)\b", re.IGNORECASE)


class InsightService:
    def __init__(
        self,
        artifact: ensemble.ModelArtifact,
        domains: dict[str, FeatureDomain] | None = None,
        default_snapshot: UserSnapshot | None = None,
        samples: dict[str, UserSnapshot] | None = None,
        generator=None,
        config: ServiceConfig | None = None,
    ):
        self.artifact = artifact
        self.config = config or ServiceConfig()
        self.generator = generator
        base = domains or domain_map(FIXTURE_SCHEMA)
        self.domains = {}
        for name in artifact.feature_names:
            dom = base.get(name)
            if dom is None:
                # lag feature and other derived columns: efficiency-scaled
                dom = FeatureDomain(name, "sleep" if "efficiency" in name else "other", (0.0, 1.0))
            self.domains[name] = dom
        self.samples = samples or {}
        if default_snapshot is None and self.samples:
            default_snapshot = next(iter(self.samples.values()))
        if default_snapshot is None:
            default_snapshot = UserSnapshot(
                "default",
                {
                    n: (self.domains[n].plausible_range[0] + self.domains[n].plausible_range[1]) / 2
                    for n in artifact.feature_names
                },
                source="dataset-sample",
            )
        self.default_snapshot = default_snapshot
        self._sessions: dict[str, UserSnapshot] = {}
        self._lock = threading.Lock()

    # -- snapshots ---------------------------------------------------------

    def validate_snapshot(self, snapshot: UserSnapshot) -> None:
        for name in self.artifact.feature_names:
            if name not in snapshot.feature_values:
                raise MissingFeature(name)
        for name, value in snapshot.feature_values.items():
            dom = self.domains.get(name)
            if dom is None:
                raise UnknownFeature(name)
            lo, hi = dom.plausible_range
            mid, half = (lo + hi) / 2, (hi - lo) / 2
            if not mid - 3 * half <= value <= mid + 3 * half:
                raise OutOfRange(name, value)

    def predict_snapshot(self, snapshot: UserSnapshot) -> float:
        self.validate_snapshot(snapshot)
        raw = ensemble.predict(self.artifact, snapshot.feature_values)
        return float(np.clip(raw, 0.0, 1.0))

    def what_if(self, snapshot: UserSnapshot, overrides: dict[str, float]) -> WhatIfResult:
        self.validate_snapshot(snapshot)
        for name, value in overrides.items():
            if name not in self.domains:
                raise UnknownFeature(name)
            lo, hi = self.domains[name].plausible_range
            mid, half = (lo + hi) / 2, (hi - lo) / 2
            if not mid - 3 * half <= value <= mid + 3 * half:
                raise OutOfRange(name, value)
        base = self.predict_snapshot(snapshot)
        if not overrides:
            return WhatIfResult(base, base, 0.0, {})
        modified_values = dict(snapshot.feature_values, **overrides)
        raw = ensemble.predict(self.artifact, modified_values)
        modified = float(np.clip(raw, 0.0, 1.0))
        recorded = {k: (snapshot.feature_values[k], v) for k, v in overrides.items()}
        return WhatIfResult(base, modified, modified - base, recorded)

    def recommend(self, snapshot: UserSnapshot) -> list[Recommendation]:
        """Grid-search each adjustable feature over its plausible range and
        surface the top gains above the threshold. Tree ensembles are
        piecewise-constant, so a grid beats gradients here."""
        self.validate_snapshot(snapshot)
        base = self.predict_snapshot(snapshot)
        cfg = self.config
        candidates = []
        for name in self.artifact.feature_names:
            dom = self.domains[name]
            if not dom.adjustable:
                continue
            lo, hi = dom.plausible_range
            grid = np.linspace(lo, hi, cfg.grid_points)
            preds = []
            values = dict(snapshot.feature_values)
            for g in grid:
                values[name] = float(g)
                preds.append(np.clip(ensemble.predict(self.artifact, values), 0.0, 1.0))
            best_i = int(np.argmax(preds))
            gain = float(preds[best_i] - base)
            if gain >= cfg.gain_threshold:
                suggested = float(grid[best_i])
                candidates.append(
                    Recommendation(
                        feature=name,
                        suggested_value=suggested,
                        expected_gain=gain,
                        message=(
                            f"Adjusting {name} to {suggested:g} could raise predicted "
                            f"sleep efficiency by about {gain:.3f}."
                        ),
                    )
                )
        candidates.sort(key=lambda r: (-r.expected_gain, r.feature))
        return candidates[: cfg.max_recs]

    # -- chat --------------------------------------------------------------

    def _band(self, pred: float) -> str:
        if pred < self.config.band_poor:
            return "poor"
        if pred <= self.config.band_good:
            return "fair"
        return "good"

    def _advice_text(self, pred: float) -> str:
        if self.generator is not None:
            try:
                return self.generator.complete(
                    f"Predicted sleep efficiency tonight: {pred:.2f}. Give one short, "
                    "practical sentence of sleep advice."
                )
            except (GeneratorUnavailable, SomnusError):
                pass  # degrade to templates; a chat turn never fails
        return _TEMPLATES[self._band(pred)].format(pred=pred)

    def _steps_feature(self) -> str | None:
        for name in self.artifact.feature_names:
            dom = self.domains[name]
            if dom.category == "steps" and dom.adjustable:
                return name
        return None

    def chat_turn(self, snapshot: UserSnapshot, text: str) -> dict:
        reply: dict = {"suggested_questions": list(_SUGGESTED_QUESTIONS)}
        steps_match = _STEPS_RE.search(text)
        steps_feature = self._steps_feature()
        if steps_match and steps_feature is not None:
            n = float(steps_match.group(1).replace(",", ""))
            if steps_match.group(2).lower() in ("fewer", "less"):
                n = -n
            lo, hi = self.domains[steps_feature].plausible_range
            new_value = float(np.clip(snapshot.feature_values[steps_feature] + n, lo, hi))
            result = self.what_if(snapshot, {steps_feature: new_value})
            direction = "raise" if result.delta >= 0 else "lower"
            reply["text"] = (
                f"Changing {steps_feature} to {new_value:g} would {direction} your "
                f"predicted sleep efficiency from {result.base_prediction:.2f} to "
                f"{result.modified_prediction:.2f} ({result.delta:+.3f})."
            )
            reply["whatif"] = result.to_dict()
            return reply
        if _PREDICT_RE.search(text):
            pred = self.predict_snapshot(snapshot)
            reply["text"] = self._advice_text(pred)
            reply["prediction"] = pred
            return reply
        pred = self.predict_snapshot(snapshot)
        reply["text"] = self._advice_text(pred)
        return reply

    # -- sessions ----------------------------------------------------------

    def create_session(self, snapshot: UserSnapshot) -> str:
        self.validate_snapshot(snapshot)
        session_id = uuid.uuid4().hex
        with self._lock:
            self._sessions[session_id] = snapshot
        return session_id

    def get_session(self, session_id: str) -> UserSnapshot | None:
        with self._lock:
            return self._sessions.get(session_id)

    def get_features(self) -> list[dict]:
        out = []
        for name in self.artifact.feature_names:
            dom = self.domains[name]
            out.append(
                {
                    "name": name,
                    "category": dom.category,
                    "plausible_range": list(dom.plausible_range),
                    "adjustable": dom.adjustable,
                    "current_value": self.default_snapshot.feature_values[name],
                }
            )
        return out


def load_artifact(path) -> ensemble.ModelArtifact:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CorruptArtifact(str(exc)) from exc
    return ensemble.ModelArtifact.from_json(text)


def snapshots_from_table(table: BehaviorTable, feature_names: list[str]) -> dict[str, UserSnapshot]:
    """Last fully-populated row per participant, as demo snapshots."""
    out: dict[str, UserSnapshot] = {}
    for row in table.rows:  # sorted, so later rows win
        values = {n: row.values.get(n) for n in feature_names}
        if any(v is None for v in values.values()):
            continue
        out[row.participant_id] = UserSnapshot(row.participant_id, values, source="dataset-sample")
    return out


# -- HTTP layer ------------------------------------------------------------


def create_app(service: InsightService):
    from fastapi import FastAPI, Request
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    app = FastAPI(title="somnus insight service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[service.config.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def error(code: str, message: str, status: int, detail=None):
        return JSONResponse(
            {"code": code, "message": message, "detail": detail}, status_code=status
        )

    @app.exception_handler(SomnusError)
    async def somnus_error_handler(request: Request, exc: SomnusError):
        status = {
            MissingFeature: 422,
            UnknownFeature: 422,
            OutOfRange: 422,
            GeneratorUnavailable: 503,
            CorruptArtifact: 500,
        }.get(type(exc), 400)
        return error(type(exc).__name__, str(exc), status)

    def resolve_snapshot(body: dict) -> UserSnapshot:
        if body.get("session_id"):
            snap = service.get_session(body["session_id"])
            if snap is None:
                raise SomnusError(f"unknown session: {body['session_id']}")
            return snap
        snap_data = body.get("snapshot")
        if not isinstance(snap_data, dict):
            raise SomnusError("request needs a snapshot or session_id")
        return UserSnapshot(
            participant_id=snap_data.get("participant_id", "anonymous"),
            feature_values={
                k: float(v) for k, v in snap_data.get("feature_values", snap_data).items()
                if k != "participant_id"
            },
        )

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.get("/features")
    async def features():
        return service.get_features()

    @app.post("/session")
    async def session(body: dict):
        if body.get("participant_id") and "snapshot" not in body:
            snap = service.samples.get(body["participant_id"])
            if snap is None:
                return error("UnknownParticipant", f"no sample for {body['participant_id']!r}", 404)
        else:
            snap = resolve_snapshot(body)
        return {"session_id": service.create_session(snap)}

    @app.post("/predict")
    def predict_endpoint(body: dict):
        snap = resolve_snapshot(body)
        return {"prediction": service.predict_snapshot(snap)}

    @app.post("/whatif")
    def whatif_endpoint(body: dict):
        snap = resolve_snapshot(body)
        overrides = {k: float(v) for k, v in (body.get("overrides") or {}).items()}
        return service.what_if(snap, overrides).to_dict()

    @app.post("/recommend")
    def recommend_endpoint(body: dict):
        snap = resolve_snapshot(body)
        return {"recommendations": [r.to_dict() for r in service.recommend(snap)]}

    @app.post("/chat")
    def chat_endpoint(body: dict):
        snap = resolve_snapshot(body)
        return service.chat_turn(snap, str(body.get("text", "")))

    return app
