"""Synthetic NER corpora from a label-conditional token process.

A :class:`SyntheticLanguage` fixes one vocabulary per full label (``O``,
``B-t``, ``I-t``) with Zipf-like word frequencies.  Sentences are generated by
first laying out a BIO label sequence and then drawing every token
independently given its label, so label-wise token replacement is exactly
the generative process.  Used for desk-scale experiments and tests.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import BioLabel, Corpus, LabeledSentence

_CONSONANTS = "bcdfghklmnprstvz"
_VOWELS = "aeiou"


def _pseudo_word(rng: random.Random, suffix: str) -> str:
    syllables = rng.randint(1, 3)
    stem = "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables))
    return stem + suffix


@dataclass
class SyntheticLanguage:
    entity_types: Sequence[str] = ("chem", "proc", "dev")
    vocab_size: int = 300
    seed: int = 0
    # fraction of each entity vocabulary that reuses out-of-mention words
    overlap: float = 0.15
    vocab: dict[str, list[str]] = field(init=False)
    weights: dict[str, list[float]] = field(init=False)

    def __post_init__(self) -> None:
        rng = random.Random(self.seed)
        suffixes = {"O": ""}
        for k, etype in enumerate(self.entity_types):
            # affixes make a type learnable from unseen words, but only partly
            suffixes[f"B-{etype}"] = ("ex", "yl", "on", "ar", "is")[k % 5]
            suffixes[f"I-{etype}"] = ("ide", "ate", "ium", "ine", "ose")[k % 5]
        self.vocab = {}
        for label, suffix in suffixes.items():
            words: list[str] = []
            seen: set[str] = set()
            while len(words) < self.vocab_size:
                w = _pseudo_word(rng, suffix if rng.random() < 0.6 else "")
                if w not in seen:
                    seen.add(w)
                    words.append(w)
            self.vocab[label] = words
        o_words = self.vocab["O"]
        for label, words in self.vocab.items():
            if label == "O":
                continue
            n = int(self.overlap * len(words))
            if n:
                words[-n:] = rng.sample(o_words, n)
        self.weights = {
            label: [1.0 / (rank + 1) for rank in range(len(words))]
            for label, words in self.vocab.items()
        }

    def _labels(self, rng: random.Random) -> list[BioLabel]:
        labels: list[BioLabel] = []
        n_mentions = rng.choice((0, 1, 1, 2, 2, 3))
        for _ in range(n_mentions):
            labels += [BioLabel("O")] * rng.randint(1, 4)
            etype = rng.choice(list(self.entity_types))
            labels.append(BioLabel("B", etype))
            labels += [BioLabel("I", etype)] * rng.choice((0, 0, 1, 1, 2))
        labels += [BioLabel("O")] * rng.randint(1, 4)
        return labels

    def sentence(self, rng: random.Random) -> LabeledSentence:
        labels = self._labels(rng)
        tokens = []
        for label in labels:
            key = str(label)
            tokens.append(rng.choices(self.vocab[key], weights=self.weights[key], k=1)[0])
        return LabeledSentence(tuple(tokens), tuple(labels))

    def corpus(self, n_sentences: int, seed: int) -> Corpus:
        rng = random.Random(seed)
        return Corpus(tuple(self.sentence(rng) for _ in range(n_sentences)))


def generate_splits(
    train_size: int = 400, dev_size: int = 150, test_size: int = 150, seed: int = 0, **language
) -> tuple[Corpus, Corpus, Corpus]:
    lang = SyntheticLanguage(seed=seed, **language)
    return (
        lang.corpus(train_size, seed * 3 + 1),
        lang.corpus(dev_size, seed * 3 + 2),
        lang.corpus(test_size, seed * 3 + 3),
    )
