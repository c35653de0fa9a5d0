"""Command-line interface.

Exit codes: 0 success, 2 config error, 3 stage failure, 4 integrity violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import runner
from .errors import IntegrityError, ParameterError, PipelineError, SchemaError

log = logging.getLogger(__name__)

# CLI subcommand -> pipeline stage the run should stop after
_STAGE_OF = {
    "split": "split",
    "generate": "generate",
    "select": "select",
    "plan": "plan",
    "train-baseline": "train",
    "evaluate": "evaluate",
    "report": "report",
    "run": "report",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banaug",
        description="Augment imbalanced news corpora with LLM paraphrases and "
                    "evaluate downstream classifiers.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--out", help="override the config's output directory")
    parser.add_argument("--seed", type=int, help="override the config's run seed")
    parser.add_argument("--backend", choices=["live", "mock"],
                        help="override the generation backend")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("validate", "check the config and print the planned sweep"),
        ("split", "materialize the stratified train/test split"),
        ("generate", "produce the candidate pool (cached, resumable)"),
        ("select", "choose K of N candidates for every sweep row"),
        ("plan", "assemble augmented training corpora and manifests"),
        ("train-baseline", "train the built-in classifier and write predictions"),
        ("evaluate", "score predictions against the test set"),
        ("report", "render the comparison report"),
        ("run", "full pipeline: split through report"),
    ]:
        sub.add_parser(name, help=help_text)
    return parser


def _load_config(args) -> dict:
    path = Path(args.config)
    if not path.exists():
        raise SchemaError(f"no such config file: {path}")
    try:
        config = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise SchemaError("config root must be a JSON object")
    if args.out:
        config["out_dir"] = args.out
    if args.seed is not None:
        config["run_seed"] = args.seed
    if args.backend:
        config.setdefault("generation", {})["backend"] = args.backend
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = _load_config(args)
        base_dir = Path(args.config).resolve().parent

        if args.command == "validate":
            diags = runner.validate(config, base_dir)
            for d in diags:
                print(d)
            if diags:
                return 2
            merged = runner._merge_defaults(config)
            print("config OK; planned sweep:")
            print("  baseline")
            for row in runner.plan_sweep(merged):
                print(f"  {row.tag}")
            return 0

        result = runner.run(config, base_dir=base_dir, until=_STAGE_OF[args.command])
        if args.command in ("report", "run", "evaluate") and result.report_txt:
            print(result.report_txt.read_text(encoding="utf-8"))
        else:
            print(f"artifacts under {result.out_root}")
        if result.failed:
            for r in result.failed:
                print(f"FAILED {r.tag}: {r.error}", file=sys.stderr)
            return 3
        return 0
    except (SchemaError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except IntegrityError as exc:
        print(f"integrity violation: {exc}", file=sys.stderr)
        return 4
    except PipelineError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
