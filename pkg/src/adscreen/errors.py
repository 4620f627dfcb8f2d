"""Exception taxonomy for the screening pipeline.

Data errors (malformed inputs, bad manifests) derive from DataError so the
CLI can map them to a distinct exit code.
"""


class AdScreenError(Exception):
    """Base class for all package errors."""


class DataError(AdScreenError):
    """Invalid external input: files, manifests, transcripts."""


# chat parsing
class MalformedTier(DataError):
    pass


class EmptyDocument(DataError):
    pass


# feature extraction
class NonPositiveDuration(DataError):
    pass


class InsufficientData(AdScreenError):
    pass


class RankDeficient(AdScreenError):
    pass


# numerics
class ShapeMismatch(AdScreenError):
    pass


class NonFiniteValue(AdScreenError):
    pass


# models
class EmptySplit(AdScreenError):
    pass


class WrongTask(AdScreenError):
    pass


class DegenerateLabels(AdScreenError):
    pass


# ensembles / external file arity
class WrongArity(DataError):
    pass


class UntrainedVoter(AdScreenError):
    pass


# evaluation
class TooFewPerClass(AdScreenError):
    pass


class TooFewSubjects(AdScreenError):
    pass


class TooFewGroups(AdScreenError):
    pass


class EmptyMatrix(AdScreenError):
    pass


class LengthMismatch(AdScreenError):
    pass


class SingleClass(AdScreenError):
    pass


# data io
class MissingColumn(DataError):
    pass


class DuplicateSubject(DataError):
    pass


class ManifestFileNotFound(DataError):
    pass


class InvalidMmse(DataError):
    pass


class NotRiff(DataError):
    pass


class MissingChunk(DataError):
    pass


class ZeroByteRate(DataError):
    pass


class NonNumericCell(DataError):
    pass


class InvalidArity(DataError):
    pass


class CorruptCheckpoint(DataError):
    pass


class ProtocolMismatch(AdScreenError):
    pass
