from __future__ import annotations

import random

import pytest

from nerdaug.corpus import BioLabel, Corpus, LabeledSentence

EXAMPLE_TOKENS = "She did not complain of headache or any other neurological symptoms .".split()
EXAMPLE_LABELS = "O O O O O B-problem O B-problem I-problem I-problem I-problem O".split()


class ScriptedRandom:
    """Random stream that replays scripted outcomes.

    ``decisions`` feeds ``random()``; ``draws`` feeds ``choices()`` and
    ``choice()`` (each value must belong to the offered population);
    ``permutations`` feed ``shuffle()`` as index lists.
    """

    def __init__(self, decisions=(), draws=(), permutations=()):
        self.decisions = list(decisions)
        self.draws = list(draws)
        self.permutations = list(permutations)

    def random(self):
        return self.decisions.pop(0)

    def choices(self, population, weights=None, *, cum_weights=None, k=1):
        value = self.draws.pop(0)
        assert value in population, f"{value!r} not in population"
        return [value]

    def choice(self, seq):
        value = self.draws.pop(0)
        assert value in seq, f"{value!r} not among {seq!r}"
        return value

    def shuffle(self, x):
        perm = self.permutations.pop(0)
        assert sorted(perm) == list(range(len(x)))
        x[:] = [x[i] for i in perm]

    def exhausted(self) -> bool:
        return not (self.decisions or self.draws or self.permutations)


def decisions_at(n: int, positions) -> list[float]:
    """Scripted ``random()`` values that select exactly ``positions`` at p=0.5."""
    return [0.0 if i in positions else 0.99 for i in range(n)]


@pytest.fixture
def example() -> LabeledSentence:
    return LabeledSentence.from_strings(EXAMPLE_TOKENS, EXAMPLE_LABELS)


VOCAB = ["alpha", "beta", "Gamma", "d3lta", "eps", "zeta", "eta", "theta", "iota", "kappa"]
TYPES = ("x", "y", "chem-sub")


def random_sentence(rng: random.Random, max_len: int = 12) -> LabeledSentence:
    """A random BIO-valid sentence over a small vocabulary."""
    n = rng.randint(1, max_len)
    labels = []
    for i in range(n):
        r = rng.random()
        prev = labels[-1] if labels else None
        if prev is not None and not prev.is_outside and r < 0.35:
            labels.append(BioLabel("I", prev.entity_type))
        elif r < 0.65:
            labels.append(BioLabel("O"))
        else:
            labels.append(BioLabel("B", rng.choice(TYPES)))
    tokens = [rng.choice(VOCAB) for _ in range(n)]
    return LabeledSentence(tuple(tokens), tuple(labels))


def random_corpus(rng: random.Random, n: int, max_len: int = 12) -> Corpus:
    return Corpus(tuple(random_sentence(rng, max_len) for _ in range(n)))


# acceptance summary: one line per criterion at the end of the run
_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    if report.passed:
        outcome = "PASS"
    elif report.skipped:
        outcome = "SKIP"
    else:
        outcome = "FAIL"
    _ACCEPTANCE[number] = (outcome, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        outcome, title = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {outcome}  {title}")
