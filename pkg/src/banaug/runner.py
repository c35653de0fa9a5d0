"""Experiment orchestration: split, generate, select, plan, train, evaluate.

One run takes a JSON config describing the dataset, the augmentation sweep
and the backends, and materializes every stage artifact under
``out/{config_hash}/{stage}/``. Stages resume from their artifacts, so a
rerun with identical config and caches is cheap and reproduces the report
byte for byte. Generation happens at most once per (article, prompting mode)
across the whole sweep; every (K, strategy) row reuses the shared pool.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from . import baseclf, genclient, metrics, planner, selection
from .corpus import (
    Corpus,
    Label,
    SplitSpec,
    composition,
    corpus_digest,
    derive_seed,
    load_csv,
    stratified_split,
    write_csv,
)
from .embedsim import HashingEmbedder, HTTPEmbeddingProvider, PrecomputedFileProvider
from .errors import IntegrityError, ParameterError, PipelineError, SchemaError
from .genclient import GenConfig, HTTPBackend, MockBackend, cache_lock
from .prompting import PromptMode, RequestTemplate
from .selection import SelectionPolicy, Strategy

log = logging.getLogger(__name__)

STAGES = ("split", "generate", "select", "plan", "train", "evaluate", "report")

CONFIG_SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dataset"],
    "properties": {
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "required": ["path"],
            "properties": {
                "path": {"type": "string"},
                "columns": {"type": "object", "additionalProperties": {"type": "string"}},
            },
        },
        "split": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "train_fraction": {"type": "number"},
                "strata": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "seed": {"type": "integer"},
            },
        },
        "prompting_mode": {"enum": ["zero_shot", "few_shot"]},
        "n_variants": {"type": "integer", "minimum": 1},
        "few_shot_exemplars": {"type": "integer", "minimum": 1},
        "k_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "strategies": {
            "type": "array",
            "items": {"enum": ["random", "similarity"]},
            "minItems": 1,
        },
        "sweep_rows": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["k"],
                "properties": {
                    "prompting_mode": {"enum": ["zero_shot", "few_shot"]},
                    "strategy": {"enum": ["random", "similarity", None]},
                    "k": {"type": "integer", "minimum": 1},
                },
            },
        },
        "target_classes": {"type": "array", "items": {"enum": [0, 1]}, "minItems": 1},
        "min_similarity": {"type": ["number", "null"]},
        "generation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "backend": {"enum": ["mock", "live"]},
                "endpoint_url": {"type": "string"},
                "model_id": {"type": "string"},
                "temperature": {"type": "number", "minimum": 0},
                "max_inflight": {"type": "integer", "minimum": 1},
                "max_retries": {"type": "integer", "minimum": 0},
                "timeout": {"type": "number"},
                "api_key_env": {"type": "string"},
            },
        },
        "embeddings": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "provider": {"enum": ["mock", "http", "file"]},
                "dim": {"type": "integer", "minimum": 1},
                "url": {"type": "string"},
                "model": {"type": "string"},
                "api_key_env": {"type": "string"},
                "path": {"type": "string"},
            },
        },
        "classifier": {"enum": ["baseline", "external"]},
        "external_predictions_dir": {"type": "string"},
        "classifier_hyper": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epochs": {"type": "integer", "minimum": 1},
                "learning_rate": {"type": "number"},
                "l2": {"type": "number"},
            },
        },
        "run_seed": {"type": "integer"},
        "out_dir": {"type": "string"},
    },
}

_DEFAULTS: dict = {
    "split": {"train_fraction": 0.7, "strata": ["label", "category"], "seed": 13},
    "prompting_mode": "zero_shot",
    "n_variants": 5,
    "few_shot_exemplars": 5,
    "k_values": [1, 2, 3, 5],
    "strategies": ["random", "similarity"],
    "target_classes": [0],
    "min_similarity": None,
    "generation": {
        "backend": "mock",
        "endpoint_url": "",
        "model_id": "gemma-3-27b-it",
        "temperature": 1.0,
        "max_inflight": 4,
        "max_retries": 3,
        "timeout": 60.0,
        "api_key_env": "GEN_API_KEY",
    },
    "embeddings": {"provider": "mock", "dim": 256},
    "classifier": "baseline",
    "classifier_hyper": {"epochs": 5, "learning_rate": 0.5, "l2": 1e-6},
    "run_seed": 1,
    "out_dir": "out",
}


def _merge_defaults(config: dict) -> dict:
    merged = json.loads(json.dumps(config))  # deep copy, JSON types only
    for key, value in _DEFAULTS.items():
        if key not in merged:
            merged[key] = json.loads(json.dumps(value))
        elif isinstance(value, dict):
            for sub, subval in value.items():
                merged[key].setdefault(sub, subval)
    return merged


@dataclass(frozen=True)
class Diagnostic:
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.path}: {self.message}"


@dataclass(frozen=True)
class RowSpec:
    """One sweep configuration: prompting mode, strategy (None = exhaustive K=N), K."""

    mode: PromptMode
    strategy: Strategy | None
    k: int

    @property
    def tag(self) -> str:
        short = {PromptMode.ZERO_SHOT: "zs", PromptMode.FEW_SHOT: "fs"}[self.mode]
        if self.strategy is None:
            return f"{short}-k{self.k}"
        return f"{short}-{'r' if self.strategy is Strategy.RANDOM else 's'}-k{self.k}"


def plan_sweep(config: dict) -> list[RowSpec]:
    """Sweep rows from config; K equal to the pool size collapses the
    strategies into a single exhaustive row."""
    n = config["n_variants"]
    if "sweep_rows" in config:
        rows = []
        for item in config["sweep_rows"]:
            mode = PromptMode(item.get("prompting_mode", config["prompting_mode"]))
            strategy = item.get("strategy")
            rows.append(RowSpec(
                mode=mode,
                strategy=None if strategy is None or item["k"] == n else Strategy(strategy),
                k=item["k"],
            ))
        return rows
    rows = []
    mode = PromptMode(config["prompting_mode"])
    for k in config["k_values"]:
        if k == n:
            rows.append(RowSpec(mode=mode, strategy=None, k=k))
        else:
            for strat in config["strategies"]:
                rows.append(RowSpec(mode=mode, strategy=Strategy(strat), k=k))
    return rows


def validate(config: dict, base_dir: str | Path = ".") -> list[Diagnostic]:
    """Static diagnostics for a config; empty list means runnable."""
    diags: list[Diagnostic] = []
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    for err in sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path)):
        path = "$" + "".join(f".{p}" if isinstance(p, str) else f"[{p}]"
                             for p in err.absolute_path)
        diags.append(Diagnostic("CONFIG_SCHEMA", path, err.message))
    if diags:
        return diags

    cfg = _merge_defaults(config)
    base = Path(base_dir)

    data_path = base / cfg["dataset"]["path"]
    if not data_path.exists():
        diags.append(Diagnostic("MISSING_PATH", "$.dataset.path", f"no such file: {data_path}"))
    else:
        import csv as _csv

        with data_path.open(newline="", encoding="utf-8") as fh:
            header = next(_csv.reader(fh), [])
        columns = cfg["dataset"].get("columns") or {
            f: f for f in ("id", "headline", "content", "category", "label")
        }
        for fld in ("id", "headline", "content", "category", "label"):
            col = columns.get(fld)
            if col is None:
                diags.append(Diagnostic("MISSING_COLUMN", f"$.dataset.columns.{fld}",
                                        "column mapping incomplete"))
            elif col not in header:
                diags.append(Diagnostic("MISSING_COLUMN", f"$.dataset.columns.{fld}",
                                        f"column {col!r} not in file header"))

    frac = cfg["split"]["train_fraction"]
    if not 0 < frac < 1:
        diags.append(Diagnostic("BAD_FRACTION", "$.split.train_fraction",
                                f"train_fraction must be in (0,1), got {frac}"))

    n = cfg["n_variants"]
    for i, k in enumerate(cfg["k_values"]):
        if k > n:
            diags.append(Diagnostic("K_EXCEEDS_N", f"$.k_values[{i}]",
                                    f"k={k} exceeds n_variants={n}"))
    for i, row in enumerate(cfg.get("sweep_rows", [])):
        if row["k"] > n:
            diags.append(Diagnostic("K_EXCEEDS_N", f"$.sweep_rows[{i}].k",
                                    f"k={row['k']} exceeds n_variants={n}"))

    gen = cfg["generation"]
    if gen["backend"] == "live":
        if not gen["endpoint_url"]:
            diags.append(Diagnostic("MISSING_ENDPOINT", "$.generation.endpoint_url",
                                    "live backend needs an endpoint_url"))
        if not os.environ.get(gen["api_key_env"]):
            diags.append(Diagnostic("MISSING_ENV", "$.generation.api_key_env",
                                    f"environment variable {gen['api_key_env']} is not set"))

    emb = cfg["embeddings"]
    if emb["provider"] == "http":
        if not emb.get("url"):
            diags.append(Diagnostic("MISSING_ENDPOINT", "$.embeddings.url",
                                    "http embeddings provider needs a url"))
        key_env = emb.get("api_key_env", "EMBED_API_KEY")
        if not os.environ.get(key_env):
            diags.append(Diagnostic("MISSING_ENV", "$.embeddings.api_key_env",
                                    f"environment variable {key_env} is not set"))
    if emb["provider"] == "file":
        vec_path = emb.get("path")
        if not vec_path:
            diags.append(Diagnostic("MISSING_PATH", "$.embeddings.path",
                                    "file embeddings provider needs a path"))
        elif not (base / vec_path).exists():
            diags.append(Diagnostic("MISSING_PATH", "$.embeddings.path",
                                    f"no such file: {base / vec_path}"))

    if cfg["classifier"] == "external" and not cfg.get("external_predictions_dir"):
        diags.append(Diagnostic("MISSING_PATH", "$.external_predictions_dir",
                                "external classifier needs external_predictions_dir"))
    return diags


def config_hash(config: dict) -> str:
    canonical = json.dumps(_merge_defaults(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


@dataclass
class RowOutcome:
    tag: str
    status: str  # "ok" | "FAILED"
    report: metrics.EvalReport | None = None
    error: str = ""


@dataclass
class RunResult:
    out_root: Path
    rows: list[RowOutcome]
    report_json: Path | None
    report_txt: Path | None

    @property
    def failed(self) -> list[RowOutcome]:
        return [r for r in self.rows if r.status == "FAILED"]


def _make_embed_provider(cfg: dict):
    emb = cfg["embeddings"]
    if emb["provider"] == "mock":
        return HashingEmbedder(dim=emb.get("dim", 256))
    if emb["provider"] == "file":
        return PrecomputedFileProvider(emb["path"])
    return HTTPEmbeddingProvider(
        url=emb["url"],
        model=emb.get("model", "all-MiniLM-L6-v2"),
        api_key_env=emb.get("api_key_env", "EMBED_API_KEY"),
    )


def _make_gen_config(cfg: dict) -> GenConfig:
    gen = cfg["generation"]
    return GenConfig(
        endpoint_url=gen["endpoint_url"],
        model_id=gen["model_id"],
        temperature=gen["temperature"],
        max_inflight=gen["max_inflight"],
        max_retries=gen["max_retries"],
        timeout=gen["timeout"],
        api_key_env=gen["api_key_env"],
    )


def run(config: dict, base_dir: str | Path = ".", until: str = "report",
        backend=None, embed_provider=None, baseline_first: bool = True) -> RunResult:
    """Execute the pipeline through ``until`` (a STAGES name), resuming from
    existing artifacts. Stage errors fail only their sweep row; integrity
    violations abort the whole run."""
    if until not in STAGES:
        raise ParameterError(f"unknown stage {until!r}")
    diags = validate(config, base_dir)
    if diags:
        raise SchemaError("invalid config: " + "; ".join(str(d) for d in diags))
    cfg = _merge_defaults(config)
    base = Path(base_dir)
    out_root = base / cfg["out_dir"] / config_hash(config)
    out_root.mkdir(parents=True, exist_ok=True)
    until_idx = STAGES.index(until)

    with cache_lock(out_root / "run"):
        return _run_locked(cfg, base, out_root, until_idx, backend, embed_provider,
                           baseline_first)


def _run_locked(cfg: dict, base: Path, out_root: Path, until_idx: int,
                backend, embed_provider, baseline_first: bool) -> RunResult:
    manifest_path = out_root / "MANIFEST.json"
    manifest: dict[str, Any] = {"config": cfg, "stages": {}}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    def save_manifest():
        manifest_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False),
            encoding="utf-8",
        )

    # -- split ---------------------------------------------------------------
    split_dir = out_root / "split"
    train_path, test_path = split_dir / "train.csv", split_dir / "test.csv"
    if train_path.exists() and test_path.exists():
        train = load_csv(train_path, name="train")
        test = load_csv(test_path, name="test")
    else:
        full = load_csv(base / cfg["dataset"]["path"],
                        cfg["dataset"].get("columns"), name="dataset")
        spec = SplitSpec(
            train_fraction=cfg["split"]["train_fraction"],
            strata=tuple(cfg["split"]["strata"]),
            seed=cfg["split"]["seed"],
        )
        train, test = stratified_split(full, spec)
        write_csv(train, train_path)
        write_csv(test, test_path)
    test_digest = corpus_digest(test_path)
    recorded = manifest.get("test_digest")
    if recorded is not None and recorded != test_digest:
        raise IntegrityError(
            f"test corpus changed since split: digest {test_digest} != recorded {recorded}"
        )
    manifest["test_digest"] = test_digest
    manifest["stages"]["split"] = {
        "train": str(train_path), "test": str(test_path),
        "train_composition": {f"{int(l)}/{p.value}": n
                              for (l, p), n in composition(train).items()},
    }
    save_manifest()
    result = RunResult(out_root=out_root, rows=[], report_json=None, report_txt=None)
    if until_idx < STAGES.index("generate"):
        return result

    # -- shared generation pool (one pass per prompting mode) -----------------
    target_classes = frozenset(Label(c) for c in cfg["target_classes"])
    targeted = [a for a in train if a.label in target_classes]
    sweep = plan_sweep(cfg)
    modes = sorted({row.mode for row in sweep}, key=lambda m: m.value)
    gen_cfg = _make_gen_config(cfg)
    if backend is None:
        backend = (MockBackend(seed=cfg["run_seed"])
                   if cfg["generation"]["backend"] == "mock" else HTTPBackend(gen_cfg))
    records_by_mode: dict[PromptMode, list[genclient.GenRecord]] = {}
    for mode in modes:
        cache_path = out_root / "generate" / f"candidates_{mode.value}.jsonl"
        per_class_records: dict[str, genclient.GenRecord] = {}
        for label in sorted(target_classes):
            class_articles = [a for a in targeted if a.label is label]
            if not class_articles:
                continue
            exemplars: tuple = ()
            if mode is PromptMode.FEW_SHOT:
                pool = [a for a in train if a.label is label]
                rng = random.Random(derive_seed(cfg["run_seed"], "exemplars", int(label)))
                take = min(cfg["few_shot_exemplars"], len(pool))
                exemplars = tuple(pool[i] for i in sorted(rng.sample(range(len(pool)), take)))
            template = RequestTemplate(mode=mode, n_variants=cfg["n_variants"],
                                       exemplars=exemplars)
            for rec in genclient.generate(class_articles, template, gen_cfg,
                                          cache_path, backend=backend):
                per_class_records[rec.source_id] = rec
        records_by_mode[mode] = [per_class_records[a.id] for a in targeted
                                 if a.id in per_class_records]
        manifest["stages"].setdefault("generate", {})[mode.value] = str(cache_path)
    save_manifest()
    if until_idx < STAGES.index("select"):
        return result

    # -- per-row stages --------------------------------------------------------
    if embed_provider is None:
        embed_provider = _make_embed_provider(cfg)
    embed_cache = out_root / "embed" / "vectors.jsonl"
    sources = {a.id: a for a in train}
    test_ids = set(test.ids())
    hyper_cfg = cfg["classifier_hyper"]

    def train_and_predict(tag: str, corpus_for_training: Corpus) -> list[metrics.PredictionRecord]:
        pred_path = out_root / "train" / tag / "predictions.csv"
        if pred_path.exists():
            return metrics.read_predictions_csv(pred_path)
        if cfg["classifier"] == "external":
            ext_dir = Path(cfg["external_predictions_dir"])
            ext_path = ext_dir if ext_dir.is_absolute() else base / ext_dir
            candidate = ext_path / f"{tag}.csv"
            write_csv(corpus_for_training, out_root / "train" / tag / "train_input.csv")
            if not candidate.exists():
                raise PipelineError(
                    f"external predictions not found at {candidate}; "
                    f"train input written for the external trainer"
                )
            preds = metrics.read_predictions_csv(candidate)
        else:
            hyper = baseclf.Hyper(
                epochs=hyper_cfg["epochs"],
                learning_rate=hyper_cfg["learning_rate"],
                l2=hyper_cfg["l2"],
                seed=derive_seed(cfg["run_seed"], "baseclf", tag),
            )
            model = baseclf.fit(corpus_for_training, hyper)
            baseclf.save_model(model, out_root / "train" / tag / "model.json")
            preds = baseclf.predict(model, test)
        metrics.write_predictions_csv(preds, pred_path)
        return preds

    def evaluate_row(tag: str, preds: list[metrics.PredictionRecord]) -> metrics.EvalReport:
        if corpus_digest(test_path) != manifest["test_digest"]:
            raise IntegrityError("test corpus mutated between split and evaluation")
        cm = metrics.confusion(preds, expected_ids=test_ids)
        return metrics.evaluate(cm, config_tag=tag)

    rows: list[RowOutcome] = []

    evaluate_idx = STAGES.index("evaluate")
    if baseline_first:
        try:
            preds = train_and_predict("baseline", train)
            if until_idx >= evaluate_idx:
                rows.append(RowOutcome("baseline", "ok",
                                       evaluate_row("baseline", preds)))
        except IntegrityError:
            raise
        except PipelineError as exc:
            log.error("baseline row failed: %s", exc)
            rows.append(RowOutcome("baseline", "FAILED", error=str(exc)))

    for row_spec in sweep:
        tag = row_spec.tag
        try:
            sel_path = out_root / "select" / f"{tag}.jsonl"
            if sel_path.exists():
                selected = selection.selected_from_jsonl(sel_path)
            else:
                policy = SelectionPolicy(
                    strategy=row_spec.strategy or Strategy.RANDOM,
                    k=row_spec.k,
                    seed=cfg["run_seed"],
                    min_similarity=cfg["min_similarity"],
                )
                selected = selection.apply_policy(
                    records_by_mode[row_spec.mode], policy, sources,
                    provider=embed_provider, cache_path=embed_cache,
                )
                selection.selected_to_jsonl(selected, sel_path)
            if until_idx < STAGES.index("plan"):
                continue

            plan_dir = out_root / "plan" / tag
            aug_csv = plan_dir / "train_augmented.csv"
            if aug_csv.exists():
                augmented = load_csv(aug_csv, name=tag)
            else:
                aug_policy = planner.AugmentPolicy(
                    target_classes=target_classes,
                    k=row_spec.k,
                    selection=SelectionPolicy(
                        strategy=row_spec.strategy or Strategy.RANDOM,
                        k=row_spec.k,
                        seed=cfg["run_seed"],
                        min_similarity=cfg["min_similarity"],
                    ),
                    prompting_mode=row_spec.mode,
                )
                augmented, aug_manifest = planner.build_augmented(
                    train, selected, aug_policy, test_ids=test_ids,
                )
                write_csv(augmented, aug_csv)
                (plan_dir / "composition.json").write_text(
                    json.dumps(aug_manifest, indent=2, sort_keys=True), encoding="utf-8"
                )
            if until_idx < STAGES.index("train"):
                continue

            preds = train_and_predict(tag, augmented)
            if until_idx < evaluate_idx:
                continue
            rows.append(RowOutcome(tag, "ok", evaluate_row(tag, preds)))
        except IntegrityError:
            raise
        except PipelineError as exc:
            log.error("row %s failed: %s", tag, exc)
            rows.append(RowOutcome(tag, "FAILED", error=str(exc)))

    result.rows = rows
    manifest["stages"]["rows"] = {
        r.tag: {"status": r.status, "error": r.error} for r in rows
    }
    save_manifest()
    if until_idx < STAGES.index("evaluate") or not rows:
        return result

    # -- report -----------------------------------------------------------------
    ok_reports = [r.report for r in rows if r.report is not None]
    eval_dir = out_root / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    report_json = eval_dir / "report.json"
    report_txt = eval_dir / "report.txt"
    payload = {
        "rows": json.loads(metrics.reports_to_json(ok_reports)),
        "failed": [{"tag": r.tag, "error": r.error} for r in rows if r.status == "FAILED"],
    }
    report_json.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    table = metrics.report_table(ok_reports) if ok_reports else "(no successful rows)"
    failed_note = "".join(
        f"\nFAILED: {r.tag}: {r.error}" for r in rows if r.status == "FAILED"
    )
    report_txt.write_text(table + failed_note + "\n", encoding="utf-8")
    result.report_json = report_json
    result.report_txt = report_txt
    return result
