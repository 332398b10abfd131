"""Labeled-sentence data model, CoNLL reading/writing and BIO utilities.

Files are two-column CoNLL: ``TOKEN<TAB>LABEL`` per line, sentences separated
by blank lines.  On input any whitespace run separates the columns, so tokens
cannot contain whitespace.  Labels are ``O`` or ``B-<type>`` / ``I-<type>``
where the type is everything after the first hyphen.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional

from .errors import BioError, ConllFormatError, SubsetError

__all__ = [
    "BioLabel",
    "OUTSIDE",
    "LabeledSentence",
    "Mention",
    "Segment",
    "Corpus",
    "Violation",
    "Repair",
    "parse_label",
    "parse_conll",
    "parse_conll_report",
    "serialize_conll",
    "read_conll",
    "validate_bio",
    "extract_mentions",
    "segment_by_label",
    "low_resource_subset",
]

INDICATORS = ("O", "B", "I")


@dataclass(frozen=True)
class BioLabel:
    indicator: str
    entity_type: Optional[str] = None

    def __post_init__(self) -> None:
        if self.indicator not in INDICATORS:
            raise ValueError(f"unknown BIO indicator {self.indicator!r}")
        if self.indicator == "O":
            if self.entity_type is not None:
                raise ValueError("an O label carries no entity type")
        elif not self.entity_type or any(c.isspace() for c in self.entity_type):
            raise ValueError(f"invalid entity type {self.entity_type!r}")

    @property
    def is_outside(self) -> bool:
        return self.indicator == "O"

    def __str__(self) -> str:
        if self.indicator == "O":
            return "O"
        return f"{self.indicator}-{self.entity_type}"


OUTSIDE = BioLabel("O")


@functools.lru_cache(maxsize=4096)
def parse_label(text: str) -> BioLabel:
    """Parse ``O``, ``B-type`` or ``I-type``; raise ValueError otherwise."""
    if text == "O":
        return OUTSIDE
    prefix, sep, entity_type = text.partition("-")
    if not sep or prefix not in ("B", "I") or not entity_type:
        raise ValueError(f"unparseable label {text!r}")
    return BioLabel(prefix, entity_type)


def _as_label(label: BioLabel | str) -> BioLabel:
    return label if isinstance(label, BioLabel) else parse_label(label)


@dataclass(frozen=True)
class LabeledSentence:
    tokens: tuple[str, ...]
    labels: tuple[BioLabel, ...]

    def __post_init__(self) -> None:
        tokens = tuple(self.tokens)
        labels = tuple(_as_label(label) for label in self.labels)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "labels", labels)
        if len(tokens) != len(labels):
            raise ValueError(
                f"length mismatch: {len(tokens)} tokens, {len(labels)} labels"
            )
        if not tokens:
            raise ValueError("a sentence needs at least one token")
        for i, tok in enumerate(tokens):
            if not tok or any(c.isspace() for c in tok):
                raise ValueError(f"invalid token {tok!r} at position {i}")

    @classmethod
    def from_strings(cls, tokens: Iterable[str], labels: Iterable[str]) -> "LabeledSentence":
        return cls(tuple(tokens), tuple(parse_label(label) for label in labels))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def label_strings(self) -> tuple[str, ...]:
        return tuple(str(label) for label in self.labels)

    def has_mention(self) -> bool:
        return any(label.indicator == "B" for label in self.labels)


class Mention(NamedTuple):
    start: int
    end: int
    entity_type: str
    surface: tuple[str, ...]


class Segment(NamedTuple):
    start: int
    end: int
    # None marks a run of out-of-mention tokens
    entity_type: Optional[str]

    @property
    def is_mention(self) -> bool:
        return self.entity_type is not None


class Violation(NamedTuple):
    position: int
    description: str


class Repair(NamedTuple):
    sentence: int
    position: int
    line: int
    original: str
    repaired: str


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[LabeledSentence, ...] = ()
    label_schema: frozenset[str] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        sentences = tuple(self.sentences)
        object.__setattr__(self, "sentences", sentences)
        types = {
            label.entity_type
            for sent in sentences
            for label in sent.labels
            if label.entity_type is not None
        }
        object.__setattr__(self, "label_schema", frozenset(types))

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[LabeledSentence]:
        return iter(self.sentences)

    def __getitem__(self, index: int) -> LabeledSentence:
        return self.sentences[index]


def validate_bio(sentence: LabeledSentence) -> list[Violation]:
    """Return every position whose I- label lacks a compatible predecessor."""
    if len(sentence.tokens) != len(sentence.labels):
        raise ValueError("tokens and labels differ in length")
    violations = []
    prev = OUTSIDE
    for i, label in enumerate(sentence.labels):
        if label.indicator == "I":
            if prev.is_outside:
                violations.append(Violation(i, f"{label} follows O or sentence start"))
            elif prev.entity_type != label.entity_type:
                violations.append(Violation(i, f"{label} follows {prev}"))
        prev = label
    return violations


def _require_valid(sentence: LabeledSentence) -> None:
    violations = validate_bio(sentence)
    if violations:
        pos, desc = violations[0]
        raise BioError(f"BIO violation at position {pos}: {desc}")


def extract_mentions(sentence: LabeledSentence) -> list[Mention]:
    _require_valid(sentence)
    mentions = []
    start = None
    labels = sentence.labels
    for i, label in enumerate(labels):
        if label.indicator != "I" and start is not None:
            mentions.append(_mention(sentence, start, i))
            start = None
        if label.indicator == "B":
            start = i
    if start is not None:
        mentions.append(_mention(sentence, start, len(labels)))
    return mentions


def _mention(sentence: LabeledSentence, start: int, end: int) -> Mention:
    return Mention(start, end, sentence.labels[start].entity_type, sentence.tokens[start:end])


def segment_by_label(sentence: LabeledSentence) -> list[Segment]:
    """Split into mentions and maximal runs of O tokens, covering [0, T)."""
    segments = []
    cursor = 0
    for m in extract_mentions(sentence):
        if m.start > cursor:
            segments.append(Segment(cursor, m.start, None))
        segments.append(Segment(m.start, m.end, m.entity_type))
        cursor = m.end
    if cursor < len(sentence):
        segments.append(Segment(cursor, len(sentence), None))
    return segments


def parse_conll_report(
    text: str, strict: bool = True, source: str | None = None
) -> tuple[Corpus, list[Repair]]:
    """Parse CoNLL text, returning the corpus and any lenient-mode repairs.

    In strict mode a BIO violation raises ConllFormatError.  Otherwise orphan
    ``I-T`` labels become ``B-T`` and each repair is reported.
    """
    sentences: list[LabeledSentence] = []
    repairs: list[Repair] = []
    tokens: list[str] = []
    labels: list[BioLabel] = []
    lines: list[int] = []

    def flush() -> None:
        if not tokens:
            return
        prev = OUTSIDE
        for i, label in enumerate(labels):
            if label.indicator == "I" and (
                prev.is_outside or prev.entity_type != label.entity_type
            ):
                if strict:
                    raise ConllFormatError(
                        f"BIO violation: {label} follows {prev if i else 'sentence start'}",
                        lines[i],
                        source,
                    )
                fixed = BioLabel("B", label.entity_type)
                repairs.append(Repair(len(sentences), i, lines[i], str(label), str(fixed)))
                labels[i] = label = fixed
            prev = label
        sentences.append(LabeledSentence(tuple(tokens), tuple(labels)))
        tokens.clear()
        labels.clear()
        lines.clear()

    for lineno, line in enumerate(text.splitlines(), 1):
        columns = line.split()
        if not columns:
            flush()
            continue
        if len(columns) != 2:
            raise ConllFormatError(
                f"expected 2 columns (token, label), found {len(columns)}: {line!r}",
                lineno,
                source,
            )
        token, label_text = columns
        try:
            label = parse_label(label_text)
        except ValueError as exc:
            raise ConllFormatError(str(exc), lineno, source) from None
        tokens.append(token)
        labels.append(label)
        lines.append(lineno)
    flush()
    return Corpus(tuple(sentences)), repairs


def parse_conll(text: str, strict: bool = True, source: str | None = None) -> Corpus:
    corpus, _ = parse_conll_report(text, strict=strict, source=source)
    return corpus


def read_conll(path, strict: bool = True) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_conll(fh.read(), strict=strict, source=str(path))


def serialize_conll(corpus: Corpus | Iterable[LabeledSentence]) -> str:
    """Tab-separated columns, each sentence terminated by a blank line."""
    chunks = []
    for sent in corpus:
        rows = [f"{tok}\t{label}" for tok, label in zip(sent.tokens, sent.labels)]
        chunks.append("\n".join(rows) + "\n\n")
    return "".join(chunks)


def low_resource_subset(corpus: Corpus, n: int) -> Corpus:
    """First ``n`` sentences that contain at least one mention, in order."""
    if n < 0:
        raise ValueError("subset size must be non-negative")
    chosen: list[LabeledSentence] = []
    if n == 0:
        return Corpus()
    for sent in corpus:
        if sent.has_mention():
            chosen.append(sent)
            if len(chosen) == n:
                return Corpus(tuple(chosen))
    raise SubsetError(
        f"requested {n} mention-bearing sentences but only {len(chosen)} are available"
    )
