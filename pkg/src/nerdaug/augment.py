"""Label-wise token replacement, synonym replacement, mention replacement and
shuffle-within-segments, plus corpus-level orchestration.

Every method draws from its random stream in two passes: first one
Bernoulli(p) decision per unit (token, mention or segment) from left to
right via ``rng.random() < p``, then the replacement draws or shuffles for
the selected units, again left to right.  Callers that script the stream can
therefore force any outcome.
"""

from __future__ import annotations

import enum
import hashlib
import json
import random
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .corpus import (
    BioLabel,
    Corpus,
    LabeledSentence,
    _require_valid,
    extract_mentions,
    segment_by_label,
)
from .errors import CoverageError
from .resources import (
    LabelwiseTokenDistribution,
    MentionInventory,
    SynonymLexicon,
    build_mention_inventory,
    build_token_distribution,
    sample_mention,
    sample_token,
    synonyms,
)

__all__ = [
    "Method",
    "ALL_METHODS",
    "parse_methods",
    "AugmentationConfig",
    "AugmentationRecord",
    "Resources",
    "lwtr",
    "derive_synonym_labels",
    "synonym_replace",
    "mention_replace",
    "shuffle_within_segments",
    "apply_method",
    "augment_sentence_all",
    "augment_corpus",
    "derive_seed",
    "format_provenance",
]


class Method(str, enum.Enum):
    LWTR = "lwtr"
    SR = "sr"
    MR = "mr"
    SIS = "sis"

    def __str__(self) -> str:
        return self.value


ALL_METHODS: tuple[Method, ...] = tuple(Method)


def parse_methods(names: str | Iterable[str | Method]) -> tuple[Method, ...]:
    """Accept ``"lwtr,sr"``, ``"lwtr+sr"``, ``"all"`` or an iterable; return canonical order."""
    if isinstance(names, str):
        names = [part for part in re.split(r"[,+]", names) if part.strip()]
    chosen = set()
    for item in names:
        name = str(item).strip().lower()
        if name == "all":
            chosen.update(ALL_METHODS)
            continue
        try:
            chosen.add(Method(name))
        except ValueError:
            raise ValueError(f"unknown augmentation method {item!r}") from None
    return tuple(m for m in ALL_METHODS if m in chosen)


@dataclass(frozen=True)
class AugmentationConfig:
    methods: tuple[Method, ...]
    p: float
    copies_per_instance: int = 1
    seed: int = 0
    keep_originals: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", parse_methods(self.methods))
        if not self.methods:
            raise ValueError("at least one augmentation method is required")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.copies_per_instance < 1:
            raise ValueError("copies_per_instance must be a positive integer")


@dataclass(frozen=True)
class AugmentationRecord:
    source_index: int
    method: Method
    copy_index: int
    sentence: LabeledSentence


@dataclass(frozen=True)
class Resources:
    distribution: Optional[LabelwiseTokenDistribution] = None
    inventory: Optional[MentionInventory] = None
    lexicon: Optional[SynonymLexicon] = None

    @classmethod
    def from_corpus(cls, corpus: Corpus, lexicon: SynonymLexicon | None = None) -> "Resources":
        """Build every corpus-derived resource from a training split."""
        return cls(build_token_distribution(corpus), build_mention_inventory(corpus), lexicon)


def _decisions(n: int, p: float, rng) -> list[bool]:
    return [rng.random() < p for _ in range(n)]


def lwtr(sentence: LabeledSentence, dist: LabelwiseTokenDistribution, p: float, rng) -> LabeledSentence:
    for label in sentence.labels:
        if label not in dist:
            raise CoverageError(f"label {str(label)!r} missing from token distribution")
    chosen = _decisions(len(sentence), p, rng)
    tokens = list(sentence.tokens)
    for i, replace in enumerate(chosen):
        if replace:
            tokens[i] = sample_token(dist, sentence.labels[i], rng)
    return LabeledSentence(tuple(tokens), sentence.labels)


def derive_synonym_labels(original: BioLabel, synonym_length: int) -> list[BioLabel]:
    """Labels for a synonym of ``synonym_length`` tokens replacing one token.

    A B-T token yields B-T followed by I-T; I-T and O are copied to every token.
    """
    if synonym_length < 1:
        raise ValueError("synonym_length must be positive")
    if original.indicator == "B":
        return [original] + [BioLabel("I", original.entity_type)] * (synonym_length - 1)
    return [original] * synonym_length


def synonym_replace(sentence: LabeledSentence, lexicon: SynonymLexicon, p: float, rng) -> LabeledSentence:
    _require_valid(sentence)
    chosen = _decisions(len(sentence), p, rng)
    tokens: list[str] = []
    labels: list[BioLabel] = []
    for token, label, replace in zip(sentence.tokens, sentence.labels, chosen):
        candidates = synonyms(lexicon, token) if replace else []
        if candidates:
            synonym = rng.choice(candidates)
            tokens.extend(synonym)
            labels.extend(derive_synonym_labels(label, len(synonym)))
        else:
            tokens.append(token)
            labels.append(label)
    return LabeledSentence(tuple(tokens), tuple(labels))


def mention_replace(sentence: LabeledSentence, inventory: MentionInventory, p: float, rng) -> LabeledSentence:
    mentions = extract_mentions(sentence)
    for m in mentions:
        if m.entity_type not in inventory:
            raise CoverageError(f"entity type {m.entity_type!r} missing from mention inventory")
    chosen = _decisions(len(mentions), p, rng)
    replacements = {
        m.start: (m, sample_mention(inventory, m.entity_type, rng))
        for m, replace in zip(mentions, chosen)
        if replace
    }
    tokens: list[str] = []
    labels: list[BioLabel] = []
    i = 0
    while i < len(sentence):
        if i in replacements:
            m, surface = replacements[i]
            tokens.extend(surface)
            labels.append(BioLabel("B", m.entity_type))
            labels.extend([BioLabel("I", m.entity_type)] * (len(surface) - 1))
            i = m.end
        else:
            tokens.append(sentence.tokens[i])
            labels.append(sentence.labels[i])
            i += 1
    return LabeledSentence(tuple(tokens), tuple(labels))


def shuffle_within_segments(sentence: LabeledSentence, p: float, rng) -> LabeledSentence:
    segments = segment_by_label(sentence)
    chosen = _decisions(len(segments), p, rng)
    tokens = list(sentence.tokens)
    for seg, shuffle in zip(segments, chosen):
        if shuffle and seg.end - seg.start > 1:
            part = tokens[seg.start:seg.end]
            rng.shuffle(part)
            tokens[seg.start:seg.end] = part
    return LabeledSentence(tuple(tokens), sentence.labels)


def apply_method(method: Method, sentence: LabeledSentence, resources: Resources, p: float, rng) -> LabeledSentence:
    method = Method(method)
    if method is Method.LWTR:
        return lwtr(sentence, _need(resources.distribution, "token distribution"), p, rng)
    if method is Method.SR:
        return synonym_replace(sentence, _need(resources.lexicon, "synonym lexicon"), p, rng)
    if method is Method.MR:
        return mention_replace(sentence, _need(resources.inventory, "mention inventory"), p, rng)
    return shuffle_within_segments(sentence, p, rng)


def _need(resource, name: str):
    if resource is None:
        raise CoverageError(f"{name} is required but was not provided")
    return resource


def augment_sentence_all(
    sentence: LabeledSentence,
    resources: Resources,
    p: float,
    copies: int,
    rng,
    methods: Sequence[Method] = ALL_METHODS,
    source_index: int = 0,
) -> list[AugmentationRecord]:
    """One augmented instance per method and copy, each built from the original."""
    if copies < 1:
        raise ValueError("copies must be a positive integer")
    return [
        AugmentationRecord(source_index, method, copy, apply_method(method, sentence, resources, p, rng))
        for method in methods
        for copy in range(1, copies + 1)
    ]


def derive_seed(seed: int, *parts) -> int:
    """Mix a global seed with task coordinates into a stable 64-bit seed."""
    key = ":".join(str(x) for x in (seed, *parts)).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def check_coverage(sentence: LabeledSentence, index: int, methods: Sequence[Method], resources: Resources) -> None:
    for method in methods:
        if method is Method.LWTR:
            dist = _need(resources.distribution, "token distribution")
            for label in sentence.labels:
                if label not in dist:
                    raise CoverageError(f"sentence {index}: label {str(label)!r} missing from token distribution")
        elif method is Method.MR:
            inventory = _need(resources.inventory, "mention inventory")
            for m in extract_mentions(sentence):
                if m.entity_type not in inventory:
                    raise CoverageError(f"sentence {index}: entity type {m.entity_type!r} missing from mention inventory")
        elif method is Method.SR:
            _need(resources.lexicon, "synonym lexicon")


def _augment_indexed(index: int, sentence: LabeledSentence, config: AugmentationConfig, resources: Resources) -> list[AugmentationRecord]:
    records = []
    for method in config.methods:
        for copy in range(1, config.copies_per_instance + 1):
            rng = random.Random(derive_seed(config.seed, index, method.value, copy))
            records.append(AugmentationRecord(index, method, copy, apply_method(method, sentence, resources, config.p, rng)))
    return records


_WORKER_STATE: tuple = ()


def _init_worker(config: AugmentationConfig, resources: Resources) -> None:
    global _WORKER_STATE
    _WORKER_STATE = (config, resources)


def _augment_task(item: tuple[int, LabeledSentence]) -> list[AugmentationRecord]:
    config, resources = _WORKER_STATE
    return _augment_indexed(item[0], item[1], config, resources)


def augment_corpus(
    corpus: Corpus, config: AugmentationConfig, resources: Resources, workers: int = 1
) -> tuple[Corpus, list[AugmentationRecord]]:
    """Augment a training corpus.

    Output holds the originals first (when ``keep_originals``), then the
    augmented sentences grouped by source index, method and copy.  Each
    (sentence, method, copy) task uses its own stream seeded by
    :func:`derive_seed`, so results do not depend on ``workers``.
    """
    for index, sentence in enumerate(corpus):
        check_coverage(sentence, index, config.methods, resources)

    items = list(enumerate(corpus))
    if workers > 1 and len(items) > 1:
        chunksize = max(1, len(items) // (workers * 4))
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(config, resources)) as pool:
            batches = list(pool.map(_augment_task, items, chunksize=chunksize))
    else:
        batches = [_augment_indexed(i, s, config, resources) for i, s in items]

    records = [record for batch in batches for record in batch]
    sentences = list(corpus.sentences) if config.keep_originals else []
    sentences.extend(record.sentence for record in records)
    return Corpus(tuple(sentences)), records


def format_provenance(n_originals: int, records: Sequence[AugmentationRecord], keep_originals: bool = True) -> str:
    """One JSON object per output sentence: output index, source, method, copy."""
    lines = []
    index = 0
    if keep_originals:
        for source in range(n_originals):
            lines.append({"index": index, "source": source, "method": "original", "copy": 0})
            index += 1
    for record in records:
        lines.append({"index": index, "source": record.source_index, "method": record.method.value, "copy": record.copy_index})
        index += 1
    return "".join(json.dumps(line, sort_keys=True) + "\n" for line in lines)
