"""Encoder fine-tuning and prediction export.

The classifier is a pretrained encoder with a linear head on the final
contextual embeddings, fine-tuned end-to-end with AdamW. Input text is the
headline paired with the article body (the tokenizer inserts its separator),
truncated to the spec's maximum sequence length.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


class TrainerError(Exception):
    """Unrecoverable training failure (including out-of-memory: the batch
    size is never reduced automatically)."""


class SchemaMismatch(TrainerError):
    """Input CSV does not conform to the corpus dialect."""


@dataclass(frozen=True)
class TrainSpec:
    model_id: str = "sagorsarker/bangla-bert-base"
    epochs: int = 3
    learning_rate: float = 2e-5
    batch_size: int = 8
    max_sequence_length: int = 512
    seed: int = 0


DEFAULTS = TrainSpec()

_REQUIRED_COLUMNS = ("id", "headline", "content", "category", "label")
_LABELS = {"0": 0, "1": 1, "fake": 0, "real": 1}


def read_corpus_csv(path: str | Path) -> list[dict]:
    """Rows of the corpus dialect; label parsed to int, schema enforced."""
    path = Path(path)
    if not path.exists():
        raise SchemaMismatch(f"no such file: {path}")
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in _REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaMismatch(f"{path}: missing column(s): {', '.join(missing)}")
        for line_no, row in enumerate(reader, start=2):
            raw = (row["label"] or "").strip().lower()
            if raw not in _LABELS:
                raise SchemaMismatch(f"{path}: row {line_no}: invalid label {row['label']!r}")
            if not (row["content"] or "").strip():
                raise SchemaMismatch(f"{path}: row {line_no}: empty content")
            rows.append({
                "id": row["id"],
                "headline": row["headline"] or "",
                "content": row["content"],
                "label": _LABELS[raw],
            })
    ids = [r["id"] for r in rows]
    if len(set(ids)) != len(ids):
        raise SchemaMismatch(f"{path}: duplicate ids")
    return rows


def _set_seeds(seed: int):
    import torch

    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def _encode(tokenizer, rows, max_len):
    return tokenizer(
        [r["headline"] for r in rows],
        [r["content"] for r in rows],
        truncation=True,
        max_length=max_len,
        padding=True,
        return_tensors="pt",
    )


def train_and_predict(train_csv: str | Path, test_csv: str | Path,
                      out_csv: str | Path, spec: TrainSpec = DEFAULTS) -> Path:
    """Fine-tune on train_csv, predict test_csv, write the predictions CSV.

    Every test id appears exactly once in the output. A sidecar JSON beside
    the predictions records the effective spec, the package defaults, the
    seed and library versions, and the determinism caveat.
    """
    import torch
    from transformers import AutoModelForSequenceClassification, AutoTokenizer

    train_rows = read_corpus_csv(train_csv)
    test_rows = read_corpus_csv(test_csv)
    if not train_rows or not test_rows:
        raise SchemaMismatch("train and test CSVs must be non-empty")
    if len({r["label"] for r in train_rows}) < 2:
        raise TrainerError("training CSV must contain both classes")

    _set_seeds(spec.seed)
    device = torch.device("cuda" if torch.cuda.is_available() else "cpu")

    tokenizer = AutoTokenizer.from_pretrained(spec.model_id)
    model = AutoModelForSequenceClassification.from_pretrained(
        spec.model_id, num_labels=2
    ).to(device)
    optimizer = torch.optim.AdamW(model.parameters(), lr=spec.learning_rate)

    labels = torch.tensor([r["label"] for r in train_rows], dtype=torch.long)
    order_rng = random.Random(spec.seed)
    indices = list(range(len(train_rows)))

    model.train()
    try:
        for _epoch in range(spec.epochs):
            order_rng.shuffle(indices)
            for start in range(0, len(indices), spec.batch_size):
                batch_idx = indices[start: start + spec.batch_size]
                batch = _encode(tokenizer, [train_rows[i] for i in batch_idx],
                                spec.max_sequence_length).to(device)
                out = model(**batch, labels=labels[batch_idx].to(device))
                optimizer.zero_grad()
                out.loss.backward()
                optimizer.step()
    except torch.cuda.OutOfMemoryError as exc:
        raise TrainerError(
            f"out of memory with batch_size={spec.batch_size}; rerun with a "
            f"smaller --batch (no automatic fallback)"
        ) from exc

    model.eval()
    scores: list[float] = []
    with torch.no_grad():
        for start in range(0, len(test_rows), spec.batch_size):
            chunk = test_rows[start: start + spec.batch_size]
            batch = _encode(tokenizer, chunk, spec.max_sequence_length).to(device)
            probs = torch.softmax(model(**batch).logits, dim=-1)
            scores.extend(probs[:, 1].cpu().tolist())

    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "true_label", "pred_label", "score"])
        for row, score in zip(test_rows, scores):
            writer.writerow([row["id"], row["label"],
                             1 if score >= 0.5 else 0, repr(float(score))])

    _write_sidecar(out_csv, spec, device)
    return out_csv


def _write_sidecar(out_csv: Path, spec: TrainSpec, device) -> None:
    import torch
    import transformers

    sidecar = {
        "spec": asdict(spec),
        "defaults": asdict(DEFAULTS),
        "seed": spec.seed,
        "library_versions": {
            "torch": torch.__version__,
            "transformers": transformers.__version__,
        },
        "device": str(device),
        "determinism_note": (
            "bitwise reproducibility holds only for a fixed seed, single "
            "device and identical library builds; kernel nondeterminism may "
            "still perturb results"
        ),
    }
    Path(str(out_csv) + ".meta.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True), encoding="utf-8"
    )
