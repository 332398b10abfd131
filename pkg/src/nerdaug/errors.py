"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class NerAugError(Exception):
    """Base class for data errors raised by nerdaug."""


class ConllFormatError(NerAugError, ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where = f"{where}{line}:"
        super().__init__(f"{where} {message}" if where else message)


class BioError(NerAugError, ValueError):
    """A sentence violates the BIO2 schema where validity is required."""


class CoverageError(NerAugError, KeyError):
    """An augmentation resource lacks a label, entity type or lexicon."""

    def __str__(self) -> str:
        # KeyError would otherwise repr() the message
        return str(self.args[0]) if self.args else ""


class LexiconFormatError(NerAugError, ValueError):
    pass


class SubsetError(NerAugError, ValueError):
    """Not enough mention-bearing sentences for a requested subset size."""
