"""Span-level scoring, dev-set grid search, the low-resource experiment and
baseline-vs-augmented error analysis."""

from __future__ import annotations

import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .augment import (
    ALL_METHODS,
    AugmentationConfig,
    Method,
    Resources,
    augment_corpus,
    derive_seed,
    parse_methods,
)
from .corpus import Corpus, extract_mentions, low_resource_subset
from .errors import NerAugError
from .resources import SynonymLexicon
from . import tagger

__all__ = [
    "P_GRID",
    "COPIES_GRID",
    "COPIES_GRID_COMBINED",
    "F1Report",
    "GridPoint",
    "RunCounts",
    "FixAnalysis",
    "ExperimentCell",
    "ExperimentReport",
    "span_f1",
    "method_name",
    "grid_for",
    "train_and_score",
    "grid_search",
    "run_low_resource_experiment",
    "fix_analysis",
]

P_GRID = (0.1, 0.3, 0.5, 0.7)
COPIES_GRID = (1, 3, 6, 10)
# smaller copy counts when several methods each contribute instances
COPIES_GRID_COMBINED = (1, 2, 3)


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class F1Report:
    true_positives: int
    false_positives: int
    false_negatives: int
    per_type: Mapping[str, "F1Report"] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return _safe_div(self.true_positives, self.true_positives + self.false_positives)

    @property
    def recall(self) -> float:
        return _safe_div(self.true_positives, self.true_positives + self.false_negatives)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return _safe_div(2 * p * r, p + r)

    def to_dict(self) -> dict:
        out = {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.per_type:
            out["per_type"] = {t: r.to_dict() for t, r in sorted(self.per_type.items())}
        return out

    def format_table(self) -> str:
        rows = [(t, r) for t, r in sorted(self.per_type.items())] + [("OVERALL", self)]
        width = max(8, *(len(t) for t, _ in rows))
        lines = [f"{'type':<{width}}  {'TP':>6} {'FP':>6} {'FN':>6}  {'P':>6} {'R':>6} {'F1':>6}"]
        for name, r in rows:
            lines.append(
                f"{name:<{width}}  {r.true_positives:>6} {r.false_positives:>6} {r.false_negatives:>6}"
                f"  {r.precision:>6.3f} {r.recall:>6.3f} {r.f1:>6.3f}"
            )
        return "\n".join(lines) + "\n"


def _check_aligned(gold: Corpus, predicted: Corpus) -> None:
    if len(gold) != len(predicted):
        raise NerAugError(f"gold has {len(gold)} sentences, prediction has {len(predicted)}")
    for i, (g, p) in enumerate(zip(gold, predicted)):
        if g.tokens != p.tokens:
            raise NerAugError(f"sentence {i}: gold and predicted token sequences differ")


def _mention_set(corpus: Corpus) -> set[tuple[int, int, int, str]]:
    return {
        (i, m.start, m.end, m.entity_type)
        for i, sent in enumerate(corpus)
        for m in extract_mentions(sent)
    }


def span_f1(gold: Corpus, predicted: Corpus) -> F1Report:
    """Micro-averaged exact-match mention F1 with a per-type breakdown."""
    _check_aligned(gold, predicted)
    gold_set = _mention_set(gold)
    pred_set = _mention_set(predicted)
    counts: dict[str, list[int]] = {}
    for m in pred_set:
        counts.setdefault(m[3], [0, 0, 0])[0 if m in gold_set else 1] += 1
    for m in gold_set - pred_set:
        counts.setdefault(m[3], [0, 0, 0])[2] += 1
    per_type = {t: F1Report(*c) for t, c in counts.items()}
    tp, fp, fn = (sum(c[k] for c in counts.values()) for k in range(3))
    return F1Report(tp, fp, fn, per_type)


def method_name(methods: Sequence[Method]) -> str:
    methods = parse_methods(methods)
    if not methods:
        return "none"
    if methods == ALL_METHODS:
        return "all"
    return "+".join(m.value for m in methods)


@dataclass(frozen=True)
class GridPoint:
    p: float
    copies: int
    dev_f1: float
    methods: tuple[Method, ...]

    def to_dict(self) -> dict:
        return {"p": self.p, "copies": self.copies, "dev_f1": self.dev_f1, "methods": method_name(self.methods)}


def grid_for(methods: Sequence[Method]) -> list[tuple[float, int]]:
    """(p, copies) pairs in report order: p-major, then copies."""
    copies = COPIES_GRID if len(parse_methods(methods)) == 1 else COPIES_GRID_COMBINED
    return [(p, c) for p in P_GRID for c in copies]


def train_and_score(
    train: Corpus,
    eval_corpus: Corpus,
    methods: Sequence[Method],
    p: float,
    copies: int,
    seed: int,
    resources: Resources | None = None,
    epochs: int = 5,
) -> float:
    """Augment ``train`` (unless ``methods`` is empty), fit the tagger, return F1."""
    methods = parse_methods(methods)
    training = train
    if methods:
        if resources is None:
            resources = Resources.from_corpus(train)
        config = AugmentationConfig(methods, p, copies, seed)
        training, _ = augment_corpus(train, config, resources)
    model = tagger.train(training, epochs, seed)
    return span_f1(eval_corpus, tagger.tag_corpus(model, eval_corpus)).f1


def _score_task(args) -> float:
    return train_and_score(*args)


def grid_search(
    train: Corpus,
    dev: Corpus,
    methods: Sequence[Method],
    resources: Resources | None = None,
    seed: int = 0,
    epochs: int = 5,
    workers: int = 1,
) -> tuple[GridPoint, list[GridPoint]]:
    """Score every (p, copies) pair on ``dev``; best by F1, then fewer copies, then lower p."""
    methods = parse_methods(methods)
    if not methods:
        raise ValueError("grid search needs at least one augmentation method")
    if len(train) == 0 or len(dev) == 0:
        raise NerAugError("grid search needs non-empty train and dev corpora")
    if resources is None:
        resources = Resources.from_corpus(train)
    grid = grid_for(methods)
    tasks = [
        (train, dev, methods, p, copies, derive_seed(seed, "grid", k), resources, epochs)
        for k, (p, copies) in enumerate(grid)
    ]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            scores = list(pool.map(_score_task, tasks))
    else:
        scores = [_score_task(t) for t in tasks]
    points = [GridPoint(p, c, f1, methods) for (p, c), f1 in zip(grid, scores)]
    best = min(points, key=lambda g: (-g.dev_f1, g.copies, g.p))
    return best, points


def format_grid(points: Sequence[GridPoint], best: GridPoint) -> str:
    lines = [f"{'p':>5} {'copies':>6} {'dev F1':>8}"]
    for g in points:
        flag = "  <- best" if g == best else ""
        lines.append(f"{g.p:>5.1f} {g.copies:>6d} {100 * g.dev_f1:>8.2f}{flag}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ExperimentCell:
    size: int
    method: str
    scores: tuple[float, ...]
    best_p: Optional[float] = None
    best_copies: Optional[int] = None
    best_dev_f1: Optional[float] = None

    @property
    def mean(self) -> float:
        return statistics.fmean(self.scores)

    @property
    def std(self) -> float:
        return statistics.pstdev(self.scores) if len(self.scores) > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "method": self.method,
            "seed_scores": list(self.scores),
            "mean": self.mean,
            "std": self.std,
            "best_p": self.best_p,
            "best_copies": self.best_copies,
            "best_dev_f1": self.best_dev_f1,
        }


@dataclass(frozen=True)
class ExperimentReport:
    sizes: tuple[int, ...]
    methods: tuple[str, ...]
    seeds: tuple[int, ...]
    epochs: int
    cells: tuple[ExperimentCell, ...]

    def cell(self, size: int, method: str) -> ExperimentCell:
        for c in self.cells:
            if c.size == size and c.method == method:
                return c
        raise KeyError((size, method))

    def delta(self, method: str) -> float:
        """Mean over sizes of (method mean F1 - baseline mean F1)."""
        return statistics.fmean(
            self.cell(s, method).mean - self.cell(s, "none").mean for s in self.sizes
        )

    def to_dict(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "methods": list(self.methods),
            "seeds": list(self.seeds),
            "epochs": self.epochs,
            "cells": [c.to_dict() for c in self.cells],
            "delta": {m: self.delta(m) for m in self.methods if m != "none"},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format_table(self) -> str:
        header = [f"{'Method':<12}"] + [f"{s:>14}" for s in self.sizes] + [f"{'Delta':>7}"]
        lines = ["".join(header)]
        for m in self.methods:
            row = [f"{m:<12}"]
            for s in self.sizes:
                c = self.cell(s, m)
                row.append(f"{100 * c.mean:>7.1f} +- {100 * c.std:<3.1f}")
            row.append(f"{'':>7}" if m == "none" else f"{100 * self.delta(m):>7.1f}")
            lines.append("".join(row))
        return "\n".join(lines) + "\n"


def run_low_resource_experiment(
    full_train: Corpus,
    dev: Corpus,
    test: Corpus,
    sizes: Sequence[int],
    methods: Sequence[Sequence[Method]],
    seeds: Sequence[int],
    lexicon: SynonymLexicon | None = None,
    epochs: int = 5,
    workers: int = 1,
) -> ExperimentReport:
    """For each subset size: baseline and tuned augmentation, test F1 per seed.

    Hyperparameters are tuned once per (size, method) on ``dev`` with the
    first seed; the chosen point is then retrained with every seed.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    method_sets = [parse_methods(m) for m in methods]
    names = ["none"] + [method_name(m) for m in method_sets]
    cells = []
    for size in sizes:
        subset = low_resource_subset(full_train, size)
        resources = Resources.from_corpus(subset, lexicon)
        baseline = tuple(train_and_score(subset, test, (), 0.0, 1, s, resources, epochs) for s in seeds)
        cells.append(ExperimentCell(size, "none", baseline))
        for mset, name in zip(method_sets, names[1:]):
            best, _ = grid_search(subset, dev, mset, resources, seed=seeds[0], epochs=epochs, workers=workers)
            scores = tuple(
                train_and_score(subset, test, mset, best.p, best.copies, s, resources, epochs)
                for s in seeds
            )
            cells.append(ExperimentCell(size, name, scores, best.p, best.copies, best.dev_f1))
    return ExperimentReport(tuple(sizes), tuple(names), tuple(seeds), epochs, tuple(cells))


@dataclass(frozen=True)
class RunCounts:
    predicted: int
    true_positives: int
    false_positives: int
    false_negatives: int


# (kind, sentence, start, end, entity_type) with kind "FP" or "FN"
ErrorKey = tuple[str, int, int, int, str]


@dataclass(frozen=True)
class FixAnalysis:
    runs: int
    baseline: RunCounts
    augmented: tuple[RunCounts, ...]
    fix_counts: Mapping[ErrorKey, int]
    possible_fixes: frozenset
    guaranteed_fixes: frozenset
    regressions: Mapping[ErrorKey, int]

    def to_dict(self) -> dict:
        def key(e: ErrorKey) -> str:
            return f"{e[0]}:{e[1]}:{e[2]}-{e[3]}:{e[4]}"

        return {
            "runs": self.runs,
            "baseline": _counts_dict(self.baseline),
            "augmented": [_counts_dict(c) for c in self.augmented],
            "baseline_errors": len(self.fix_counts),
            "possible_fixes": sorted(key(e) for e in self.possible_fixes),
            "guaranteed_fixes": sorted(key(e) for e in self.guaranteed_fixes),
            "regressions": {key(e): n for e, n in sorted(self.regressions.items())},
        }

    def format_table(self) -> str:
        lines = [f"{'':<10} {'# predicted':>11} {'TP':>6} {'FP':>6} {'FN':>6}"]
        rows = [("baseline", self.baseline)] + [(f"run {i + 1}", c) for i, c in enumerate(self.augmented)]
        for name, c in rows:
            lines.append(f"{name:<10} {c.predicted:>11} {c.true_positives:>6} {c.false_positives:>6} {c.false_negatives:>6}")
        lines.append(f"possible fixes: {len(self.possible_fixes)}  guaranteed fixes: {len(self.guaranteed_fixes)}"
                     f"  regressions: {len(self.regressions)}")
        return "\n".join(lines) + "\n"


def _counts_dict(c: RunCounts) -> dict:
    return {"predicted": c.predicted, "tp": c.true_positives, "fp": c.false_positives, "fn": c.false_negatives}


def _errors(gold_set, pred_set) -> set[ErrorKey]:
    return {("FP",) + m for m in pred_set - gold_set} | {("FN",) + m for m in gold_set - pred_set}


def _counts(gold_set, pred_set) -> RunCounts:
    tp = len(gold_set & pred_set)
    return RunCounts(len(pred_set), tp, len(pred_set) - tp, len(gold_set) - tp)


def fix_analysis(gold: Corpus, baseline_pred: Corpus, augmented_preds: Sequence[Corpus]) -> FixAnalysis:
    """Count, for every baseline error, how many augmented runs avoid it.

    A possible fix is avoided by at least one run; a guaranteed fix by more
    than ceil(N/2) of N runs (4 or more of 5).
    """
    if not augmented_preds:
        raise ValueError("need at least one augmented prediction corpus")
    for pred in (baseline_pred, *augmented_preds):
        _check_aligned(gold, pred)
    gold_set = _mention_set(gold)
    base_set = _mention_set(baseline_pred)
    base_errors = _errors(gold_set, base_set)
    run_sets = [_mention_set(p) for p in augmented_preds]
    run_errors = [_errors(gold_set, s) for s in run_sets]

    fix_counts = {e: sum(e not in errs for errs in run_errors) for e in sorted(base_errors)}
    threshold = math.ceil(len(run_sets) / 2)
    regressions: dict[ErrorKey, int] = {}
    for errs in run_errors:
        for e in errs - base_errors:
            regressions[e] = regressions.get(e, 0) + 1
    return FixAnalysis(
        runs=len(run_sets),
        baseline=_counts(gold_set, base_set),
        augmented=tuple(_counts(gold_set, s) for s in run_sets),
        fix_counts=fix_counts,
        possible_fixes=frozenset(e for e, n in fix_counts.items() if n >= 1),
        guaranteed_fixes=frozenset(e for e, n in fix_counts.items() if n > threshold),
        regressions=dict(sorted(regressions.items())),
    )
