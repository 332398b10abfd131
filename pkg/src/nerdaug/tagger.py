"""Baseline sequence labeler: sparse features, label transitions, Viterbi.

Scores factor as emission(feature, label) summed over a token's features plus
transition(previous label, label), with a virtual boundary label before the
first and after the last token.  Decoding forbids ``I-T`` unless the previous
label is ``B-T`` or ``I-T``.  Weights are learned with the averaged
structured perceptron.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import BioLabel, Corpus, LabeledSentence, parse_label
from .errors import NerAugError

__all__ = [
    "FEATURE_TEMPLATE_VERSION",
    "TaggerModel",
    "extract_features",
    "label_set_for",
    "allowed_transitions",
    "viterbi_decode",
    "sequence_score",
    "train",
    "tag_corpus",
    "save_model",
    "load_model",
    "dumps_model",
    "loads_model",
]

FEATURE_TEMPLATE_VERSION = "v1"
BOS = "<BOS>"
EOS = "<EOS>"
BOUNDARY = "<BOUNDARY>"
_MODEL_MAGIC = "nerdaug-tagger"


def word_shape(token: str) -> str:
    shape = []
    for ch in token:
        if ch.isupper():
            shape.append("X")
        elif ch.islower():
            shape.append("x")
        elif ch.isdigit():
            shape.append("d")
        else:
            shape.append(ch)
    return "".join(shape)


def extract_features(tokens: Sequence[str], position: int) -> list[str]:
    if not 0 <= position < len(tokens):
        raise IndexError(position)
    token = tokens[position]
    lower = token.lower()
    shape = word_shape(token)
    prev = tokens[position - 1].lower() if position > 0 else BOS
    nxt = tokens[position + 1].lower() if position + 1 < len(tokens) else EOS
    feats = [
        "bias",
        "w=" + token,
        "lw=" + lower,
        "shape=" + shape,
        "sshape=" + re.sub(r"(.)\1+", r"\1", shape),
        "prev=" + prev,
        "next=" + nxt,
        "prev|w=" + prev + "|" + lower,
        "w|next=" + lower + "|" + nxt,
    ]
    for n in (1, 2, 3):
        if len(token) >= n:
            feats.append(f"pre{n}=" + lower[:n])
            feats.append(f"suf{n}=" + lower[-n:])
    if position == 0:
        feats.append("first")
    if position == len(tokens) - 1:
        feats.append("last")
    return feats


def label_set_for(corpus: Corpus) -> list[str]:
    """``O`` first, then B-/I- pairs per entity type in sorted order."""
    labels = ["O"]
    for etype in sorted(corpus.label_schema):
        labels += [f"B-{etype}", f"I-{etype}"]
    return labels


def allowed_transitions(label_set: Sequence[str]) -> np.ndarray:
    """Boolean (L+1)x(L+1) matrix; index L is the sentence boundary."""
    n = len(label_set)
    parsed = [parse_label(lab) for lab in label_set]
    allowed = np.ones((n + 1, n + 1), dtype=bool)
    for j, nxt in enumerate(parsed):
        if nxt.indicator != "I":
            continue
        for i, prev in enumerate(parsed):
            allowed[i, j] = prev.indicator in ("B", "I") and prev.entity_type == nxt.entity_type
        allowed[n, j] = False
    return allowed


@dataclass
class TaggerModel:
    label_set: list[str]
    features: dict[str, int]
    # rows follow ``features``; columns follow ``label_set``
    emission: np.ndarray
    # (L+1)x(L+1); the last row/column is the virtual start/stop label
    transition: np.ndarray
    feature_template_version: str = FEATURE_TEMPLATE_VERSION

    def __post_init__(self) -> None:
        if "O" not in self.label_set:
            raise ValueError("label_set must contain 'O'")
        self._mask = np.where(allowed_transitions(self.label_set), 0.0, -np.inf)

    def emission_scores(self, tokens: Sequence[str]) -> np.ndarray:
        scores = np.zeros((len(tokens), len(self.label_set)))
        for i in range(len(tokens)):
            ids = [self.features[f] for f in extract_features(tokens, i) if f in self.features]
            if ids:
                scores[i] = self.emission[ids].sum(axis=0)
        return scores

    def weight(self, feature: str, label: str) -> float:
        if feature not in self.features:
            return 0.0
        return float(self.emission[self.features[feature], self.label_set.index(label)])


def _viterbi(emissions: np.ndarray, transition: np.ndarray, mask: np.ndarray) -> list[int]:
    n_pos, n_lab = emissions.shape
    trans = transition + mask
    score = trans[n_lab, :n_lab] + emissions[0]
    back = np.zeros((n_pos, n_lab), dtype=np.int64)
    for t in range(1, n_pos):
        cand = score[:, None] + trans[:n_lab, :n_lab]
        # argmax returns the first maximum, i.e. the earliest label wins ties
        back[t] = np.argmax(cand, axis=0)
        score = cand[back[t], np.arange(n_lab)] + emissions[t]
    score = score + trans[:n_lab, n_lab]
    best = int(np.argmax(score))
    path = [best]
    for t in range(n_pos - 1, 0, -1):
        best = int(back[t, best])
        path.append(best)
    return path[::-1]


def viterbi_decode(model: TaggerModel, tokens: Sequence[str]) -> list[BioLabel]:
    if not tokens:
        raise ValueError("cannot decode an empty token sequence")
    path = _viterbi(model.emission_scores(tokens), model.transition, model._mask)
    return [parse_label(model.label_set[j]) for j in path]


def sequence_score(model: TaggerModel, tokens: Sequence[str], labels: Sequence[BioLabel | str]) -> float:
    """Unconstrained score of a given label path (emissions plus transitions)."""
    index = {lab: j for j, lab in enumerate(model.label_set)}
    path = [index[str(lab)] for lab in labels]
    emissions = model.emission_scores(tokens)
    n = len(model.label_set)
    total = model.transition[n, path[0]] + model.transition[path[-1], n]
    for t, j in enumerate(path):
        total += emissions[t, j]
        if t:
            total += model.transition[path[t - 1], j]
    return float(total)


def train(corpus: Corpus, epochs: int, seed: int = 0, label_set: Sequence[str] | None = None) -> TaggerModel:
    """Averaged structured perceptron with a seeded per-epoch shuffle."""
    if len(corpus) == 0:
        raise NerAugError("cannot train on an empty corpus")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    labels = list(label_set) if label_set is not None else label_set_for(corpus)
    label_index = {lab: j for j, lab in enumerate(labels)}
    n_lab = len(labels)

    features: dict[str, int] = {}
    sent_feats = []
    gold_paths = []
    for sent in corpus:
        per_pos = []
        for i in range(len(sent)):
            per_pos.append(np.array(
                [features.setdefault(f, len(features)) for f in extract_features(sent.tokens, i)],
                dtype=np.int64,
            ))
        sent_feats.append(per_pos)
        try:
            gold_paths.append([label_index[str(lab)] for lab in sent.labels])
        except KeyError as exc:
            raise NerAugError(f"label {exc.args[0]!r} not in the model label set") from None

    w_emit = np.zeros((len(features), n_lab))
    u_emit = np.zeros_like(w_emit)
    w_trans = np.zeros((n_lab + 1, n_lab + 1))
    u_trans = np.zeros_like(w_trans)
    mask = np.where(allowed_transitions(labels), 0.0, -np.inf)

    def update(feats, path, sign: float, step: int) -> None:
        prev = n_lab
        for ids, j in zip(feats, path):
            w_emit[ids, j] += sign
            u_emit[ids, j] += sign * step
            w_trans[prev, j] += sign
            u_trans[prev, j] += sign * step
            prev = j
        w_trans[prev, n_lab] += sign
        u_trans[prev, n_lab] += sign * step

    rng = random.Random(seed)
    order = list(range(len(corpus)))
    step = 1
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            feats = sent_feats[k]
            emissions = np.stack([w_emit[ids].sum(axis=0) for ids in feats])
            pred = _viterbi(emissions, w_trans, mask)
            gold = gold_paths[k]
            if pred != gold:
                update(feats, gold, 1.0, step)
                update(feats, pred, -1.0, step)
            step += 1

    return TaggerModel(
        label_set=labels,
        features=features,
        emission=w_emit - u_emit / step,
        transition=w_trans - u_trans / step,
    )


def tag_corpus(model: TaggerModel, corpus: Corpus) -> Corpus:
    return Corpus(tuple(
        LabeledSentence(sent.tokens, tuple(viterbi_decode(model, sent.tokens)))
        for sent in corpus
    ))


def dumps_model(model: TaggerModel) -> str:
    """Text format: header lines, then ``E`` emission and ``T`` transition triples.

    Zero weights are omitted; floats use ``repr`` so they reload exactly.
    """
    out = [
        f"{_MODEL_MAGIC}\t1",
        f"template\t{model.feature_template_version}",
        "labels\t" + "\t".join(model.label_set),
    ]
    names = model.label_set
    for feat, row in model.features.items():
        for j in np.flatnonzero(model.emission[row]):
            out.append(f"E\t{feat}\t{names[j]}\t{float(model.emission[row, j])!r}")
    ext = names + [BOUNDARY]
    for i, j in zip(*np.nonzero(model.transition)):
        out.append(f"T\t{ext[i]}\t{ext[j]}\t{float(model.transition[i, j])!r}")
    return "\n".join(out) + "\n"


def loads_model(text: str) -> TaggerModel:
    lines = text.splitlines()
    if len(lines) < 3 or not lines[0].startswith(_MODEL_MAGIC + "\t"):
        raise NerAugError("not a nerdaug tagger model file")
    if lines[0].split("\t")[1] != "1":
        raise NerAugError(f"unsupported model format version {lines[0].split(chr(9))[1]!r}")
    template = lines[1].split("\t", 1)[1]
    if template != FEATURE_TEMPLATE_VERSION:
        raise NerAugError(f"model uses feature template {template!r}, expected {FEATURE_TEMPLATE_VERSION!r}")
    labels = lines[2].split("\t")[1:]
    index = {lab: j for j, lab in enumerate(labels)}
    ext = dict(index, **{BOUNDARY: len(labels)})
    features: dict[str, int] = {}
    rows: list[tuple[int, int, float]] = []
    transition = np.zeros((len(labels) + 1, len(labels) + 1))
    for lineno, line in enumerate(lines[3:], 4):
        parts = line.split("\t")
        try:
            kind, a, b, value = parts
            if kind == "E":
                rows.append((features.setdefault(a, len(features)), index[b], float(value)))
            elif kind == "T":
                transition[ext[a], ext[b]] = float(value)
            else:
                raise ValueError(kind)
        except (ValueError, KeyError):
            raise NerAugError(f"model line {lineno}: malformed entry {line!r}") from None
    emission = np.zeros((len(features), len(labels)))
    for r, c, v in rows:
        emission[r, c] = v
    return TaggerModel(labels, features, emission, transition, template)


def save_model(model: TaggerModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> TaggerModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
