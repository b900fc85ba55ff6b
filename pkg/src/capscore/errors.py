"""Exception hierarchy shared by all capscore modules.

Input/validation problems map to CLI exit code 1, numerical failures to
exit code 2 (see capscore.cli).
"""


class CapscoreError(Exception):
    """Base class for all capscore errors."""


class InputError(CapscoreError):
    """A problem with user-supplied data or configuration."""


class NumericalError(CapscoreError):
    """An internal numerical failure (solver non-convergence etc.)."""


# --- text / captions ---------------------------------------------------------

class EmptyCaption(InputError):
    """No tokens survive normalization."""


# --- metric preconditions ----------------------------------------------------

class NoReferences(InputError):
    """A metric was invoked with an empty reference list."""


class EmptyCorpus(InputError):
    """An operation requiring corpus items received none."""


class MissingDFOrder(InputError):
    """Document-frequency tables do not cover a required n-gram order."""


# --- embeddings --------------------------------------------------------------

class DimensionMismatch(InputError):
    """Vectors of different dimensions were combined, or a file row is ragged."""


class ZeroNormVector(InputError):
    """A zero-norm vector where a direction is required."""


class FormatError(InputError):
    """A file does not conform to its declared format."""


class DuplicateKey(InputError):
    """An embedding file defines the same key twice."""


# --- transport ---------------------------------------------------------------

class AllTokensOOV(InputError):
    """Every token of a sentence is out of the word-embedding vocabulary."""


class NumericalFailure(NumericalError):
    """The transport solver failed to converge."""


# --- discriminability --------------------------------------------------------

class InsufficientCorpus(InputError):
    """Fewer than two captions available for pairwise scoring."""


class DegenerateRange(CapscoreError):
    """All pairwise scores are equal; min-max normalization is undefined."""


class EmptyBucket(CapscoreError):
    """An aggregation bucket (similar/distinct/different) has no finite scores."""

    def __init__(self, bucket: str, message: str | None = None):
        self.bucket = bucket
        super().__init__(message or f"no finite scores in bucket '{bucket}'")


# --- ingestion ---------------------------------------------------------------

class ParseError(InputError):
    """A corpus or candidate file failed to parse."""


class DuplicateItem(InputError):
    """The same item id occurs twice with conflicting data."""


class UnknownItem(InputError):
    """A candidate references an item id absent from the corpus."""


class DuplicateCandidate(InputError):
    """More than one candidate caption for the same item."""
