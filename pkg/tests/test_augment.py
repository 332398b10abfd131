import random
import statistics
from collections import Counter

import pytest

from nerdaug.augment import (
    ALL_METHODS,
    AugmentationConfig,
    Method,
    Resources,
    augment_corpus,
    augment_sentence_all,
    derive_seed,
    derive_synonym_labels,
    format_provenance,
    lwtr,
    mention_replace,
    parse_methods,
    shuffle_within_segments,
    synonym_replace,
)
from nerdaug.corpus import (
    Corpus,
    LabeledSentence,
    extract_mentions,
    parse_label,
    segment_by_label,
    serialize_conll,
    validate_bio,
)
from nerdaug.errors import CoverageError
from nerdaug.resources import (
    LabelwiseTokenDistribution,
    MentionInventory,
    build_mention_inventory,
    build_token_distribution,
    load_lexicon,
)

from conftest import ScriptedRandom, decisions_at, random_corpus


def sent(tokens, labels):
    return LabeledSentence.from_strings(tokens.split(), labels.split())


def labels(*names):
    return [parse_label(n) for n in names]


LEXICON = load_lexicon("alpha\tfirst letter\nbeta\tsecond\nGamma\tthird big letter\neps\tepsilon\n")


@pytest.fixture
def small_corpus():
    return Corpus((
        sent("She did not complain of headache", "O O O O O B-problem"),
        sent("no pain or fever", "O B-problem O B-problem"),
        sent("chest X-ray was clear", "B-test I-test O O"),
    ))


class TestMethodsParsing:
    def test_all(self):
        assert parse_methods("all") == ALL_METHODS
        assert parse_methods(["sis", "LWTR"]) == (Method.LWTR, Method.SIS)

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_methods("bt")

    def test_config_invariants(self):
        with pytest.raises(ValueError):
            AugmentationConfig((), 0.3)
        with pytest.raises(ValueError):
            AugmentationConfig(("lwtr",), 1.5)
        with pytest.raises(ValueError):
            AugmentationConfig(("lwtr",), 0.3, copies_per_instance=0)


class TestLwtr:
    def test_p0_identity(self, example):
        dist = build_token_distribution(Corpus((example,)))
        assert lwtr(example, dist, 0.0, random.Random(1)) == example

    def test_forced_single_support(self):
        s = sent("a b c d", "O B-x O I-x".replace("O I-x", "B-x I-x"))
        dist = LabelwiseTokenDistribution({"O": {"z": 1}, "B-x": {"b": 1}, "I-x": {"d": 1}})
        out = lwtr(sent("q b r", "O B-x O"), dist, 1.0, random.Random(3))
        assert out.tokens == ("z", "b", "z")
        assert lwtr(s, dist, 1.0, random.Random(0)).labels == s.labels

    def test_missing_label(self, example):
        dist = LabelwiseTokenDistribution({"O": {"a": 1}})
        with pytest.raises(CoverageError):
            lwtr(example, dist, 0.5, random.Random(0))

    def test_expected_replacements(self):
        # support disjoint from the sentence, so every selected position changes
        s = sent("a b c d e f g h", "O O B-x I-x O O B-y O")
        dist = LabelwiseTokenDistribution({"O": {"z": 1}, "B-x": {"z": 1}, "I-x": {"z": 1}, "B-y": {"z": 1}})
        p, n_runs = 0.3, 4000
        counts = [
            sum(a != b for a, b in zip(s.tokens, lwtr(s, dist, p, random.Random(seed)).tokens))
            for seed in range(n_runs)
        ]
        mean = statistics.fmean(counts)
        se = statistics.stdev(counts) / n_runs ** 0.5
        assert abs(mean - p * len(s)) < 3 * se


class TestSynonymLabels:
    def test_b(self):
        assert derive_synonym_labels(parse_label("B-problem"), 3) == labels("B-problem", "I-problem", "I-problem")

    def test_i(self):
        assert derive_synonym_labels(parse_label("I-problem"), 2) == labels("I-problem", "I-problem")

    def test_o(self):
        assert derive_synonym_labels(parse_label("O"), 1) == labels("O")
        assert derive_synonym_labels(parse_label("O"), 3) == labels("O", "O", "O")

    def test_invalid_length(self):
        with pytest.raises(ValueError):
            derive_synonym_labels(parse_label("O"), 0)


class TestSynonymReplace:
    def test_p0_identity(self, example):
        assert synonym_replace(example, LEXICON, 0.0, random.Random(0)) == example

    def test_multi_word_b(self):
        s = sent("severe pain", "O B-problem")
        lex = load_lexicon("pain\tneuropathic pain\n")
        out = synonym_replace(s, lex, 1.0, random.Random(0))
        assert out.tokens == ("severe", "neuropathic", "pain")
        assert out.label_strings == ("O", "B-problem", "I-problem")
        assert validate_bio(out) == []

    def test_skipped_positions_consume_no_choice(self):
        s = sent("x alpha y beta", "O O O O")
        rng = ScriptedRandom(decisions=[0.0] * 4, draws=[("first", "letter"), ("second",)])
        out = synonym_replace(s, LEXICON, 0.5, rng)
        assert out.tokens == ("x", "first", "letter", "y", "second")
        assert rng.exhausted()

    def test_length_never_shrinks(self):
        rng = random.Random(8)
        for s in random_corpus(rng, 200):
            out = synonym_replace(s, LEXICON, 0.7, rng)
            assert len(out) >= len(s)

    def test_label_law(self):
        # each source position maps to a block whose labels follow the rule
        rng = random.Random(21)
        for s in random_corpus(rng, 300):
            out = synonym_replace(s, LEXICON, 0.6, rng)
            k = 0
            for tok, lab in zip(s.tokens, s.labels):
                block = 1
                if out.tokens[k] != tok:
                    block = next(len(syn) for syn in LEXICON.entries[tok.casefold()] if out.tokens[k:k + len(syn)] == syn)
                assert list(out.labels[k:k + block]) == derive_synonym_labels(lab, block)
                k += block
            assert k == len(out)


class TestMentionReplace:
    def test_p0_identity(self, example):
        inv = MentionInventory({"problem": [(("x",), 1)]})
        assert mention_replace(example, inv, 0.0, random.Random(0)) == example

    def test_forced_deterministic(self, small_corpus):
        inv = MentionInventory({"problem": [(("cold", "sores"), 1)], "test": [(("MRI",), 2)]})
        out = [mention_replace(s, inv, 1.0, random.Random(seed)) for s in small_corpus for seed in (1, 2)]
        assert out[0] == out[1]
        assert out[0].tokens == ("She", "did", "not", "complain", "of", "cold", "sores")
        assert out[0].label_strings[-2:] == ("B-problem", "I-problem")
        assert out[4].tokens == ("MRI", "was", "clear")

    def test_adjacent_mentions_stay_separate(self):
        s = sent("a b", "B-x B-x")
        inv = MentionInventory({"x": [(("p", "q"), 1)]})
        out = mention_replace(s, inv, 1.0, random.Random(0))
        assert out.label_strings == ("B-x", "I-x", "B-x", "I-x")
        assert len(extract_mentions(out)) == 2

    def test_missing_type(self, example):
        with pytest.raises(CoverageError):
            mention_replace(example, MentionInventory({}), 0.5, random.Random(0))


class TestShuffle:
    def test_single_token_segment_unchanged(self):
        s = sent("a", "O")
        rng = ScriptedRandom(decisions=[0.0])
        assert shuffle_within_segments(s, 0.5, rng) == s
        assert rng.exhausted()

    def test_multiset_invariant(self):
        rng = random.Random(13)
        for s in random_corpus(rng, 300):
            out = shuffle_within_segments(s, rng.random(), rng)
            assert out.labels == s.labels
            for seg in segment_by_label(s):
                assert Counter(out.tokens[seg.start:seg.end]) == Counter(s.tokens[seg.start:seg.end])

    def test_permutations_are_uniform(self):
        s = sent("a b c", "O O O")
        n = 60_000
        seen = Counter(shuffle_within_segments(s, 1.0, random.Random(seed)).tokens for seed in range(n))
        assert len(seen) == 6
        assert all(abs(c / n - 1 / 6) < 0.01 for c in seen.values())


class TestAll:
    def test_one_per_method(self, small_corpus):
        res = Resources.from_corpus(small_corpus, LEXICON)
        records = augment_sentence_all(small_corpus[0], res, 0.5, 1, random.Random(0))
        assert [r.method for r in records] == list(ALL_METHODS)

    def test_copies_zero_rejected(self, small_corpus):
        with pytest.raises(ValueError):
            augment_sentence_all(small_corpus[0], Resources.from_corpus(small_corpus, LEXICON), 0.5, 0, random.Random(0))

    def test_three_copies(self, small_corpus):
        res = Resources.from_corpus(small_corpus, LEXICON)
        records = augment_sentence_all(small_corpus[1], res, 0.5, 3, random.Random(0))
        assert len(records) == 12
        assert len({(r.method, r.copy_index) for r in records}) == 12


class TestAugmentCorpus:
    def test_counts(self, small_corpus):
        config = AugmentationConfig(("lwtr",), 0.3, copies_per_instance=2, seed=1)
        out, records = augment_corpus(small_corpus, config, Resources.from_corpus(small_corpus))
        assert len(out) == 9
        assert out.sentences[:3] == small_corpus.sentences
        assert [r.source_index for r in records] == [0, 0, 1, 1, 2, 2]

    def test_same_seed_same_bytes(self, small_corpus):
        config = AugmentationConfig(ALL_METHODS, 0.5, copies_per_instance=3, seed=42)
        res = Resources.from_corpus(small_corpus, LEXICON)
        a, _ = augment_corpus(small_corpus, config, res)
        b, _ = augment_corpus(small_corpus, config, res)
        assert serialize_conll(a) == serialize_conll(b)
        c, _ = augment_corpus(small_corpus, AugmentationConfig(ALL_METHODS, 0.5, 3, seed=43), res)
        assert serialize_conll(a) != serialize_conll(c)

    def test_p0_identity(self, small_corpus):
        config = AugmentationConfig(("sr", "lwtr", "sis"), 0.0, copies_per_instance=2, seed=5, keep_originals=False)
        _, records = augment_corpus(small_corpus, config, Resources.from_corpus(small_corpus, LEXICON))
        assert len(records) == 18
        assert all(r.sentence == small_corpus[r.source_index] for r in records)

    def test_coverage_error_names_sentence(self, small_corpus):
        res = Resources(distribution=build_token_distribution(Corpus(small_corpus.sentences[:1])))
        with pytest.raises(CoverageError, match="sentence 2"):
            augment_corpus(small_corpus, AugmentationConfig(("lwtr",), 0.5), res)

    def test_missing_lexicon(self, small_corpus):
        with pytest.raises(CoverageError, match="lexicon"):
            augment_corpus(small_corpus, AugmentationConfig(("sr",), 0.5), Resources.from_corpus(small_corpus))

    def test_independent_of_order(self, small_corpus):
        # per-task streams: augmenting a sentence alone matches its slice of the full run
        config = AugmentationConfig(ALL_METHODS, 0.5, copies_per_instance=2, seed=3, keep_originals=False)
        res = Resources.from_corpus(small_corpus, LEXICON)
        _, records = augment_corpus(small_corpus, config, res)
        reversed_corpus = Corpus(small_corpus.sentences[::-1])
        _, rev = augment_corpus(reversed_corpus, config, res)
        # a different index gives a different stream, so only the mapping logic is compared
        assert [r.copy_index for r in records] == [r.copy_index for r in rev]
        again = [r for r in augment_corpus(small_corpus, config, res)[1] if r.source_index == 2]
        assert again == [r for r in records if r.source_index == 2]

    def test_parallel_matches_serial(self):
        corpus = random_corpus(random.Random(99), 60)
        config = AugmentationConfig(ALL_METHODS, 0.4, copies_per_instance=2, seed=17)
        res = Resources.from_corpus(corpus, LEXICON)
        serial = augment_corpus(corpus, config, res, workers=1)
        parallel = augment_corpus(corpus, config, res, workers=3)
        assert serial == parallel

    def test_provenance(self, small_corpus):
        config = AugmentationConfig(("mr", "sis"), 0.5, copies_per_instance=1, seed=0)
        out, records = augment_corpus(small_corpus, config, Resources.from_corpus(small_corpus))
        lines = format_provenance(len(small_corpus), records).splitlines()
        assert len(lines) == len(out) == 9
        assert lines[0] == '{"copy": 0, "index": 0, "method": "original", "source": 0}'
        assert lines[3] == '{"copy": 1, "index": 3, "method": "mr", "source": 0}'


def test_derive_seed_is_stable():
    # frozen value: changing the mixing function breaks reproducibility of old runs
    assert derive_seed(7, 0, "lwtr", 1) == 14304755808820310605
    assert derive_seed(7, 0, "lwtr", 1) != derive_seed(7, 0, "lwtr", 2)
    assert 0 <= derive_seed(1) < 2**64


class TestWorkedExampleGoldens:
    """The worked example: scripted decisions and draws reproduce each row."""

    def test_lwtr(self, example):
        dist = build_token_distribution(Corpus((
            example,
            sent("L. One he", "O O O"),
            sent("x interatrial current", "B-problem I-problem I-problem"),
        )))
        rng = ScriptedRandom(decisions_at(12, {0, 1, 6, 8, 10}), draws=["L.", "One", "he", "interatrial", "current"])
        out = lwtr(example, dist, 0.5, rng)
        assert " ".join(out.tokens) == "L. One not complain of headache he any interatrial neurological current ."
        assert out.labels == example.labels
        assert rng.exhausted()

    def test_sr(self, example):
        lex = load_lexicon(
            "not\tnon\nany\twhatsoever\nother\tformer\nneurological\tneurologic\nsymptoms\tsymptom\n"
        )
        rng = ScriptedRandom(
            decisions_at(12, {2, 7, 8, 9, 10}),
            draws=[("non",), ("whatsoever",), ("former",), ("neurologic",), ("symptom",)],
        )
        out = synonym_replace(example, lex, 0.5, rng)
        assert " ".join(out.tokens) == "She did non complain of headache or whatsoever former neurologic symptom ."
        assert out.labels == example.labels
        assert rng.exhausted()

    def test_mr(self, example):
        inv = build_mention_inventory(Corpus((
            example,
            sent("neuropathic pain syndrome", "B-problem I-problem I-problem"),
            sent("acute pulmonary disease", "B-problem I-problem I-problem"),
        )))
        rng = ScriptedRandom(
            decisions_at(2, {0, 1}),
            draws=[("neuropathic", "pain", "syndrome"), ("acute", "pulmonary", "disease")],
        )
        out = mention_replace(example, inv, 0.5, rng)
        assert " ".join(out.tokens) == (
            "She did not complain of neuropathic pain syndrome or acute pulmonary disease ."
        )
        assert out.label_strings == tuple(
            "O O O O O B-problem I-problem I-problem O B-problem I-problem I-problem O".split()
        )
        assert rng.exhausted()

    def test_sis(self, example):
        rng = ScriptedRandom(decisions_at(5, {0, 3}), permutations=[[2, 3, 0, 1, 4], [2, 0, 3, 1]])
        out = shuffle_within_segments(example, 0.5, rng)
        assert " ".join(out.tokens) == "not complain She did of headache or neurological any symptoms other ."
        assert out.labels == example.labels
        assert rng.exhausted()


class TestInvariants:
    def test_all_methods_keep_bio_valid(self):
        rng = random.Random(31)
        corpus = random_corpus(rng, 150)
        res = Resources.from_corpus(corpus, LEXICON)
        for i, s in enumerate(corpus):
            for r in augment_sentence_all(s, res, rng.random(), 2, rng, source_index=i):
                assert validate_bio(r.sentence) == [], (r.method, r.sentence)

    def test_lwtr_preserves_labels(self):
        rng = random.Random(32)
        corpus = random_corpus(rng, 150)
        dist = build_token_distribution(corpus)
        for s in corpus:
            out = lwtr(s, dist, 0.6, rng)
            assert out.labels == s.labels
            assert all(t in dist.table[str(l)] for t, l in zip(out.tokens, out.labels))

    def test_mr_keeps_o_tokens_and_types(self):
        rng = random.Random(33)
        corpus = random_corpus(rng, 150)
        inv = build_mention_inventory(corpus)
        for s in corpus:
            out = mention_replace(s, inv, 0.6, rng)
            before, after = extract_mentions(s), extract_mentions(out)
            assert [m.entity_type for m in before] == [m.entity_type for m in after]
            outside = lambda x: [t for t, l in zip(x.tokens, x.labels) if l.is_outside]
            assert outside(out) == outside(s)
