"""Command-line entry point.

    trainer --train train.csv --test test.csv --out predictions.csv \
            [--model ID --epochs N --lr F --batch N --seq-len N --seed U64]

Exit codes: 0 success, 2 input schema mismatch, 1 training failure.
"""

from __future__ import annotations

import argparse
import sys

from .finetune import DEFAULTS, SchemaMismatch, TrainerError, TrainSpec, train_and_predict


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trainer",
        description="Fine-tune a transformer classifier on corpus CSVs and "
                    "emit evaluation predictions.",
    )
    parser.add_argument("--train", required=True, help="training corpus CSV")
    parser.add_argument("--test", required=True, help="test corpus CSV")
    parser.add_argument("--out", required=True, help="output predictions CSV")
    parser.add_argument("--model", default=DEFAULTS.model_id)
    parser.add_argument("--epochs", type=int, default=DEFAULTS.epochs)
    parser.add_argument("--lr", type=float, default=DEFAULTS.learning_rate)
    parser.add_argument("--batch", type=int, default=DEFAULTS.batch_size)
    parser.add_argument("--seq-len", type=int, default=DEFAULTS.max_sequence_length)
    parser.add_argument("--seed", type=int, default=DEFAULTS.seed)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = TrainSpec(
        model_id=args.model,
        epochs=args.epochs,
        learning_rate=args.lr,
        batch_size=args.batch,
        max_sequence_length=args.seq_len,
        seed=args.seed,
    )
    try:
        out = train_and_predict(args.train, args.test, args.out, spec)
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    except TrainerError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return 1
    print(f"predictions written to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
