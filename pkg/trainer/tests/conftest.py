"""Fixtures: a tiny randomly-initialized encoder so tests run offline."""

import csv
import os
import random
from pathlib import Path

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> Path:
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizerFast

    root = tmp_path_factory.mktemp("tiny-encoder")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += list("abcdefghijklmnopqrstuvwxyz0123456789")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(vocab), encoding="utf-8")

    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    config = BertConfig(
        vocab_size=len(vocab), hidden_size=32, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=64,
        max_position_embeddings=128, num_labels=2,
    )
    model_dir = root / "model"
    BertForSequenceClassification(config).save_pretrained(model_dir)
    tokenizer.save_pretrained(model_dir)
    return model_dir


def write_corpus(path: Path, rows: list[dict]) -> Path:
    cols = ["id", "headline", "content", "category", "label", "provenance", "parent_id"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            full = {"provenance": "original", "parent_id": "", **row}
            writer.writerow(full)
    return path


def make_rows(n: int, start: int = 0, minority_share: float = 0.2) -> list[dict]:
    rng = random.Random(start + 1)
    words_real = "harbor garden museum library bridge".split()
    words_fake = "scandal rumor hoax secret exposed".split()
    rows = []
    for i in range(start, start + n):
        fake = rng.random() < minority_share
        pool = words_fake if fake else words_real
        content = " ".join(rng.choices(pool, k=6)) + f" case {i}."
        rows.append({
            "id": f"d{i}",
            "headline": f"headline {i}",
            "content": content,
            "category": "demo",
            "label": 0 if fake else 1,
        })
    # both classes guaranteed
    rows[0]["label"] = 0
    rows[1]["label"] = 1
    return rows
