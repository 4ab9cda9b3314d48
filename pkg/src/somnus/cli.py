"""Command-line entry point: fixture, preprocess, train, augment, evaluate,
serve, report. All randomness flows from --seed; outputs stay inside --out."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import augment as augment_mod
from . import evalharness, service, tabular
from .ensemble import (
    HyperParams,
    Matrix,
    fit_forest,
    fit_gbdt,
    fit_mean,
    gbdt_hyperparams_pair,
    select_top_k,
)
from .errors import SomnusError
from .preprocess import PipelineConfig, run_pipeline


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if p.suffix == ".toml":
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib

        with open(p, "rb") as fh:
            return tomllib.load(fh)
    with open(p, encoding="utf-8") as fh:
        return json.load(fh)


def _pipeline_cfg(cfg: dict) -> PipelineConfig:
    return PipelineConfig.from_dict(cfg)

def _hyperparams(cfg: dict) -> HyperParams:
    keys = HyperParams.__dataclass_fields__
    return HyperParams(**{k: cfg[k] for k in keys if k in cfg})


def _split_spec(cfg: dict) -> evalharness.SplitSpec:
    keys = evalharness.SplitSpec.__dataclass_fields__
    return evalharness.SplitSpec(**{k: cfg[k] for k in keys if k in cfg})


def _augment_cfg(cfg: dict, seed: int) -> augment_mod.AugmentConfig:
    keys = ("window", "per_pid")
    return augment_mod.AugmentConfig(**{k: cfg[k] for k in keys if k in cfg}, seed=seed)


def _make_client(cfg: dict, seed: int):
    if cfg.get("generator_base_url"):
        return augment_mod.LiveGeneratorClient(
            base_url=cfg["generator_base_url"],
            model=cfg.get("generator_model", ""),
            timeout=cfg.get("generator_timeout", 30.0),
        )
    return augment_mod.MockGeneratorClient(seed=seed)


def cmd_fixture(args, cfg):
    table = tabular.generate_fixture(
        seed=args.seed,
        participants=cfg.get("participants", 10),
        days_per_participant=cfg.get("days_per_participant", 90),
    )
    out = Path(args.out) / "fixture.csv"
    tabular.write_csv(table, out)
    print(f"wrote {out} ({len(table.rows)} rows)")
    return 0


def cmd_preprocess(args, cfg):
    table = tabular.load_csv(args.input)
    clean, report = run_pipeline(table, _pipeline_cfg(cfg))
    out_csv = Path(args.out) / "cleaned.csv"
    out_report = Path(args.out) / "preprocess_report.json"
    tabular.write_csv(clean, out_csv)
    out_report.write_text(report.to_json(), encoding="utf-8")
    print(f"wrote {out_csv} ({len(clean.rows)} rows) and {out_report}")
    return 0


def cmd_train(args, cfg):
    table = tabular.load_csv(args.input)
    if table.missing_count():
        print("input has missing cells; run preprocess first", file=sys.stderr)
        return 1
    hp = _hyperparams(cfg)
    _, hp_b = gbdt_hyperparams_pair(hp)
    m_all = Matrix.from_table(table)
    if args.model == "mean":
        artifact = fit_mean(m_all)
    else:
        ranker = fit_gbdt(m_all, hp_b, seed=args.seed)
        top = select_top_k(ranker.importances, min(args.k, len(m_all.feature_names)))
        m_top = Matrix.from_table(table, top)
        if args.model == "forest":
            artifact = fit_forest(m_top, hp, seed=args.seed)
        else:
            artifact = fit_gbdt(m_top, hp_b, seed=args.seed)
    out = Path(args.out) / "artifact.json"
    out.write_text(artifact.to_json(), encoding="utf-8")
    print(f"wrote {out} ({artifact.kind}, {len(artifact.feature_names)} features)")
    return 0


def cmd_augment(args, cfg):
    table = tabular.load_csv(args.input)
    client = _make_client(cfg, args.seed)
    augmented, log = augment_mod.augment_training_set(table, client, _augment_cfg(cfg, args.seed))
    out_csv = Path(args.out) / "augmented.csv"
    out_log = Path(args.out) / "batch_log.json"
    tabular.write_csv(augmented, out_csv)
    augment_mod.write_batch_log(log, out_log)
    added = len(augmented.rows) - len(table.rows)
    print(f"wrote {out_csv} (+{added} synthetic rows) and {out_log}")
    return 0


class _NullClient:
    """Generator that yields nothing; --no-augment keeps the grid shape
    while cell (c) trains on unaugmented data."""

    def complete(self, prompt: str) -> str:
        return ""


def cmd_evaluate(args, cfg):
    table = tabular.load_csv(args.input)
    report = evalharness.run_experiment(
        table,
        pipeline_cfg=_pipeline_cfg(cfg),
        hyperparams=_hyperparams(cfg),
        seed=args.seed,
        client=_NullClient() if args.no_augment else _make_client(cfg, args.seed),
        k=args.k,
        split_spec=_split_spec(cfg),
        augment_cfg=_augment_cfg(cfg, args.seed),
    )
    out = Path(args.out)
    for fmt, name in (("markdown", "report.md"), ("csv", "report.csv"), ("json", "report.json")):
        (out / name).write_text(evalharness.render_report(report, fmt), encoding="utf-8")
    print(evalharness.render_report(report, "markdown"))
    print(f"wrote report.md / report.csv / report.json under {out}")
    return 0


def cmd_report(args, cfg):
    report = evalharness.EvalReport.from_json(Path(args.input).read_text(encoding="utf-8"))
    print(evalharness.render_report(report, args.format))
    return 0


def build_service(artifact_path, snapshots_csv=None, cfg=None, seed=0):
    cfg = cfg or {}
    artifact = service.load_artifact(artifact_path)
    samples = None
    if snapshots_csv:
        table = tabular.load_csv(snapshots_csv)
        samples = service.snapshots_from_table(table, artifact.feature_names)
    svc_cfg = service.ServiceConfig(
        grid_points=cfg.get("grid_points", 9),
        gain_threshold=cfg.get("gain_threshold", 0.005),
        max_recs=cfg.get("max_recs", 3),
        cors_origin=cfg.get("cors_origin", "*"),
    )
    generator = None
    if cfg.get("generator_base_url"):
        generator = augment_mod.LiveGeneratorClient(
            base_url=cfg["generator_base_url"],
            model=cfg.get("generator_model", ""),
            timeout=cfg.get("generator_timeout", 30.0),
        )
    return service.InsightService(artifact, samples=samples, generator=generator, config=svc_cfg)


def cmd_serve(args, cfg):
    import uvicorn

    svc = build_service(args.artifact, args.input, cfg, args.seed)
    app = service.create_app(svc)
    uvicorn.run(app, host=cfg.get("host", "127.0.0.1"), port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="somnus", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, needs_input=False):
        p.add_argument("--config", default=None, help="JSON or TOML config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--quiet", action="store_true")
        if needs_input:
            p.add_argument("--input", required=True)

    common(sub.add_parser("fixture", help="write a synthetic fixture CSV"))
    common(sub.add_parser("preprocess", help="clean a raw CSV"), needs_input=True)
    p = sub.add_parser("train", help="train and save a model artifact")
    common(p, needs_input=True)
    p.add_argument("--model", choices=["mean", "forest", "gbdt"], default="gbdt")
    p.add_argument("--k", type=int, default=20)
    common(sub.add_parser("augment", help="append generator rows to a cleaned CSV"), needs_input=True)
    p = sub.add_parser("evaluate", help="run the full evaluation grid")
    common(p, needs_input=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--no-augment", action="store_true")
    p = sub.add_parser("serve", help="run the insight service")
    common(p)
    p.add_argument("--artifact", required=True)
    p.add_argument("--input", default=None, help="cleaned CSV for demo snapshots")
    p.add_argument("--port", type=int, default=8732)
    p = sub.add_parser("report", help="re-render a stored evaluation report")
    common(p, needs_input=True)
    p.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    return parser


_COMMANDS = {
    "fixture": cmd_fixture,
    "preprocess": cmd_preprocess,
    "train": cmd_train,
    "augment": cmd_augment,
    "evaluate": cmd_evaluate,
    "serve": cmd_serve,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1  # usage errors: synopsis already on stderr
    try:
        cfg = load_config(args.config)
        if getattr(args, "out", None):
            Path(args.out).mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.subcommand](args, cfg)
    except (SomnusError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
