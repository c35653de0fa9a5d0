"""Character n-gram TF-IDF logistic classifier.

The desk-scale downstream model: no external ML runtime, deterministic per
seed, and script-agnostic because features are character 3-5 grams (Bangla
text needs no tokenizer). Training is plain logistic regression by seeded
shuffled stochastic gradient descent with a decaying step size.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus, Label
from .errors import TrainingError
from .metrics import PredictionRecord

VOCAB_CAP = 200_000  # most-frequent grams kept; ties break lexicographically


@dataclass(frozen=True)
class Hyper:
    epochs: int = 5
    learning_rate: float = 0.5
    l2: float = 1e-6
    seed: int = 0


def char_ngrams(text: str, lo: int = 3, hi: int = 5) -> Iterable[str]:
    for n in range(lo, hi + 1):
        for i in range(len(text) - n + 1):
            yield text[i: i + n]


@dataclass
class NGramVocab:
    gram_range: tuple[int, int]
    term_index: dict[str, int]
    idf: np.ndarray

    @property
    def size(self) -> int:
        return len(self.term_index)


def build_vocab(texts: Sequence[str], gram_range: tuple[int, int] = (3, 5),
                cap: int = VOCAB_CAP) -> NGramVocab:
    """Vocabulary over the training texts only, with smoothed idf.

    idf(t) = ln((1 + D) / (1 + df(t))) + 1. The cap keeps the ``cap`` grams
    with highest collection frequency (deterministic lexicographic ties).
    """
    df: Counter[str] = Counter()
    cf: Counter[str] = Counter()
    for text in texts:
        counts = Counter(char_ngrams(text, *gram_range))
        cf.update(counts)
        df.update(counts.keys())
    if len(cf) > cap:
        kept = sorted(cf.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
        terms = sorted(t for t, _ in kept)
    else:
        terms = sorted(cf.keys())
    term_index = {t: i for i, t in enumerate(terms)}
    d = len(texts)
    idf = np.array(
        [math.log((1 + d) / (1 + df[t])) + 1.0 for t in terms], dtype=np.float64
    )
    return NGramVocab(gram_range=gram_range, term_index=term_index, idf=idf)


def vectorize(texts: Sequence[str], vocab: NGramVocab) -> sparse.csr_matrix:
    """L2-normalized tf-idf rows; grams outside the vocabulary are ignored."""
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for text in texts:
        counts = Counter(char_ngrams(text, *vocab.gram_range))
        row = {}
        for gram, tf in counts.items():
            j = vocab.term_index.get(gram)
            if j is not None:
                row[j] = tf * vocab.idf[j]
        cols = sorted(row)
        vals = np.array([row[j] for j in cols], dtype=np.float64)
        norm = np.linalg.norm(vals)
        if norm > 0:
            vals /= norm
        indices.extend(cols)
        data.extend(vals)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(texts), vocab.size),
    )


@dataclass
class LinearModel:
    vocab: NGramVocab
    weights: np.ndarray
    bias: float
    loss_history: tuple[float, ...] = field(default_factory=tuple)


def _sigmoid(z: float | np.ndarray):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -35.0, 35.0)))


def _mean_log_loss(x: sparse.csr_matrix, y: np.ndarray, w: np.ndarray, b: float) -> float:
    z = x @ w + b
    p = _sigmoid(z)
    eps = 1e-12
    return float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))


def fit(train: Corpus, hyper: Hyper = Hyper()) -> LinearModel:
    """Train on the corpus contents; deterministic for a fixed seed.

    The positive class of the sigmoid is Real(1). Step size decays per epoch
    (lr / (1 + epoch)); sample order is a fresh seeded shuffle each epoch.
    L2 shrinkage applies to the coordinates each sample touches.
    """
    labels = {a.label for a in train}
    if len(labels) < 2:
        raise TrainingError("training corpus must contain both classes")

    texts = [a.content for a in train]
    y = np.array([1.0 if a.label is Label.REAL else 0.0 for a in train])
    vocab = build_vocab(texts)
    x = vectorize(texts, vocab)

    w = np.zeros(vocab.size, dtype=np.float64)
    b = 0.0
    rng = np.random.default_rng(hyper.seed)
    losses: list[float] = []
    for epoch in range(hyper.epochs):
        lr = hyper.learning_rate / (1.0 + epoch)
        for i in rng.permutation(x.shape[0]):
            start, stop = x.indptr[i], x.indptr[i + 1]
            cols = x.indices[start:stop]
            vals = x.data[start:stop]
            z = float(vals @ w[cols]) + b
            g = float(_sigmoid(z)) - y[i]
            w[cols] -= lr * (g * vals + hyper.l2 * w[cols])
            b -= lr * g
        losses.append(_mean_log_loss(x, y, w, b))
    return LinearModel(vocab=vocab, weights=w, bias=b, loss_history=tuple(losses))


def predict_scores(model: LinearModel, texts: Sequence[str]) -> np.ndarray:
    x = vectorize(texts, model.vocab)
    return _sigmoid(x @ model.weights + model.bias)


def predict(model: LinearModel, test: Corpus) -> list[PredictionRecord]:
    """Per-article probability of Real(1), thresholded at 0.5."""
    scores = predict_scores(model, [a.content for a in test])
    out = []
    for a, s in zip(test, scores):
        out.append(PredictionRecord(
            id=a.id,
            true_label=a.label,
            pred_label=Label.REAL if s >= 0.5 else Label.FAKE,
            score=float(s),
        ))
    return out


def save_model(model: LinearModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    terms = [""] * model.vocab.size
    for t, i in model.vocab.term_index.items():
        terms[i] = t
    payload = {
        "gram_range": list(model.vocab.gram_range),
        "terms": terms,
        "idf": [float(v) for v in model.vocab.idf],
        "weights": [float(v) for v in model.weights],
        "bias": float(model.bias),
    }
    path.write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")
    return path


def load_model(path: str | Path) -> LinearModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    vocab = NGramVocab(
        gram_range=tuple(obj["gram_range"]),
        term_index={t: i for i, t in enumerate(obj["terms"])},
        idf=np.asarray(obj["idf"], dtype=np.float64),
    )
    return LinearModel(
        vocab=vocab,
        weights=np.asarray(obj["weights"], dtype=np.float64),
        bias=float(obj["bias"]),
    )
