"""Statistical resources the augmenters draw from.

Sampling functions take an explicit random stream.  Anything with the
``random.Random`` interface works; only ``random()``, ``choice()``,
``choices(population, cum_weights=..., k=1)`` and ``shuffle()`` are used, so
tests can substitute a scripted stream to force particular outcomes.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import BioLabel, Corpus, extract_mentions
from .errors import CoverageError, LexiconFormatError

__all__ = [
    "LabelwiseTokenDistribution",
    "MentionInventory",
    "SynonymLexicon",
    "CorpusStats",
    "build_token_distribution",
    "build_mention_inventory",
    "load_lexicon",
    "read_lexicon",
    "synonyms",
    "sample_token",
    "sample_mention",
    "corpus_stats",
]


def _cumulative(counts: Sequence[int]) -> tuple[int, ...]:
    return tuple(itertools.accumulate(counts))


@dataclass(frozen=True)
class LabelwiseTokenDistribution:
    """Per full-label token counts, e.g. ``{"B-problem": {"headache": 1}}``."""

    table: Mapping[str, Mapping[str, int]]
    _support: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        support = {}
        for label, counts in self.table.items():
            tokens = tuple(counts)
            support[label] = (tokens, _cumulative([counts[t] for t in tokens]))
        object.__setattr__(self, "_support", support)

    def __contains__(self, label) -> bool:
        return str(label) in self.table

    def to_dict(self) -> dict:
        return {label: dict(counts) for label, counts in self.table.items()}


@dataclass(frozen=True)
class MentionInventory:
    """Distinct mention surfaces per entity type with occurrence counts."""

    table: Mapping[str, Sequence[tuple[tuple[str, ...], int]]]
    _support: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        support = {}
        for etype, entries in self.table.items():
            surfaces = tuple(surface for surface, _ in entries)
            support[etype] = (surfaces, _cumulative([count for _, count in entries]))
        object.__setattr__(self, "_support", support)

    def __contains__(self, entity_type: str) -> bool:
        return entity_type in self.table

    def to_dict(self) -> dict:
        return {
            etype: [[" ".join(surface), count] for surface, count in entries]
            for etype, entries in self.table.items()
        }


@dataclass(frozen=True)
class SynonymLexicon:
    entries: Mapping[str, Sequence[tuple[str, ...]]]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class CorpusStats:
    sentence_count: int
    token_count: int
    mention_count: int
    entity_type_count: int
    per_type_mention_counts: Mapping[str, int]

    def to_dict(self) -> dict:
        return {
            "sentences": self.sentence_count,
            "tokens": self.token_count,
            "mentions": self.mention_count,
            "entity_types": self.entity_type_count,
            "mentions_per_type": dict(sorted(self.per_type_mention_counts.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def format_table(self) -> str:
        rows = [
            ("Number of sentences", self.sentence_count),
            ("Number of tokens", self.token_count),
            ("Number of mentions", self.mention_count),
            ("Number of entity types", self.entity_type_count),
        ]
        rows += [(f"  {etype}", n) for etype, n in sorted(self.per_type_mention_counts.items())]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:>10,}" for name, value in rows) + "\n"


def build_token_distribution(corpus: Corpus) -> LabelwiseTokenDistribution:
    table: dict[str, dict[str, int]] = {}
    for sent in corpus:
        for token, label in zip(sent.tokens, sent.labels):
            counts = table.setdefault(str(label), {})
            counts[token] = counts.get(token, 0) + 1
    return LabelwiseTokenDistribution(table)


def build_mention_inventory(corpus: Corpus) -> MentionInventory:
    counts: dict[str, dict[tuple[str, ...], int]] = {}
    for sent in corpus:
        for mention in extract_mentions(sent):
            per_type = counts.setdefault(mention.entity_type, {})
            per_type[mention.surface] = per_type.get(mention.surface, 0) + 1
    return MentionInventory({etype: list(c.items()) for etype, c in counts.items()})


def load_lexicon(text: str) -> SynonymLexicon:
    """Parse ``lemma<TAB>synonym`` lines; multi-word synonyms are space separated."""
    entries: dict[str, list[tuple[str, ...]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise LexiconFormatError(f"line {lineno}: expected lemma<TAB>synonym, got {line!r}")
        lemma, synonym = line.split("\t", 1)
        lemma = lemma.strip()
        tokens = tuple(synonym.split())
        if not lemma or not tokens:
            raise LexiconFormatError(f"line {lineno}: empty lemma or synonym")
        key = lemma.casefold()
        if " ".join(tokens).casefold() == key:
            continue
        bucket = entries.setdefault(key, [])
        if tokens not in bucket:
            bucket.append(tokens)
    return SynonymLexicon(entries)


def read_lexicon(path) -> SynonymLexicon:
    with open(path, encoding="utf-8") as fh:
        return load_lexicon(fh.read())


def synonyms(lexicon: SynonymLexicon, token: str) -> list[tuple[str, ...]]:
    return list(lexicon.entries.get(token.casefold(), ()))


def sample_token(dist: LabelwiseTokenDistribution, label: BioLabel | str, rng) -> str:
    """Draw a token seen with ``label``, proportionally to its training count."""
    try:
        tokens, cum = dist._support[str(label)]
    except KeyError:
        raise CoverageError(f"label {str(label)!r} has no tokens in the distribution") from None
    return rng.choices(tokens, cum_weights=cum, k=1)[0]


def sample_mention(inventory: MentionInventory, entity_type: str, rng) -> tuple[str, ...]:
    try:
        surfaces, cum = inventory._support[entity_type]
    except KeyError:
        raise CoverageError(f"entity type {entity_type!r} has no mentions in the inventory") from None
    if not surfaces:
        raise CoverageError(f"entity type {entity_type!r} has no mentions in the inventory")
    return rng.choices(surfaces, cum_weights=cum, k=1)[0]


def corpus_stats(corpus: Corpus) -> CorpusStats:
    per_type: dict[str, int] = {}
    tokens = 0
    for sent in corpus:
        tokens += len(sent)
        for mention in extract_mentions(sent):
            per_type[mention.entity_type] = per_type.get(mention.entity_type, 0) + 1
    return CorpusStats(
        sentence_count=len(corpus),
        token_count=tokens,
        mention_count=sum(per_type.values()),
        entity_type_count=len(per_type),
        per_type_mention_counts=per_type,
    )
