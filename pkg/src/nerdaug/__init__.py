"""Data augmentation for named entity recognition.

Four augmenters operate on BIO-labeled sentences: label-wise token
replacement (:func:`lwtr`), synonym replacement (:func:`synonym_replace`),
mention replacement (:func:`mention_replace`) and shuffle within segments
(:func:`shuffle_within_segments`).  Around them sit CoNLL corpus handling, a
small perceptron tagger, span-level F1 and a grid-search experiment harness.
"""

__version__ = "0.1.0"

from .augment import (
    ALL_METHODS,
    AugmentationConfig,
    AugmentationRecord,
    Method,
    Resources,
    augment_corpus,
    augment_sentence_all,
    derive_synonym_labels,
    lwtr,
    mention_replace,
    shuffle_within_segments,
    synonym_replace,
)
from .corpus import (
    BioLabel,
    Corpus,
    LabeledSentence,
    Mention,
    Segment,
    extract_mentions,
    low_resource_subset,
    parse_conll,
    read_conll,
    segment_by_label,
    serialize_conll,
    validate_bio,
)
from .errors import BioError, ConllFormatError, CoverageError, LexiconFormatError, NerAugError, SubsetError
from .evaluation import fix_analysis, grid_search, run_low_resource_experiment, span_f1
from .resources import (
    build_mention_inventory,
    build_token_distribution,
    corpus_stats,
    load_lexicon,
    sample_mention,
    sample_token,
    synonyms,
)

__all__ = [
    "ALL_METHODS",
    "AugmentationConfig",
    "AugmentationRecord",
    "Method",
    "Resources",
    "augment_corpus",
    "augment_sentence_all",
    "derive_synonym_labels",
    "lwtr",
    "mention_replace",
    "shuffle_within_segments",
    "synonym_replace",
    "BioLabel",
    "Corpus",
    "LabeledSentence",
    "Mention",
    "Segment",
    "extract_mentions",
    "low_resource_subset",
    "parse_conll",
    "read_conll",
    "segment_by_label",
    "serialize_conll",
    "validate_bio",
    "BioError",
    "ConllFormatError",
    "CoverageError",
    "LexiconFormatError",
    "NerAugError",
    "SubsetError",
    "fix_analysis",
    "grid_search",
    "run_low_resource_experiment",
    "span_f1",
    "build_mention_inventory",
    "build_token_distribution",
    "corpus_stats",
    "load_lexicon",
    "sample_mention",
    "sample_token",
    "synonyms",
]
