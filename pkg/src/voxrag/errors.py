"""Exception types shared across the engine.

Builtin exceptions are reused where they already say the right thing
(FileNotFoundError for missing inputs); everything domain-specific gets a
named class so callers and tests can catch precisely.
"""


class VoxRagError(Exception):
    """Base class for all engine errors."""


# -- audio decode / preprocessing ------------------------------------------

class UnsupportedCodec(VoxRagError):
    """WAV file is not PCM16 or float32."""


class CorruptHeader(VoxRagError):
    """RIFF/WAVE header is malformed or truncated."""


class SpanParseError(VoxRagError):
    """A span-list or RTTM line could not be parsed."""


class InvariantViolation(VoxRagError):
    """Input data breaks a documented structural invariant."""


class NegativeDuration(VoxRagError):
    """An RTTM turn has non-positive duration."""


class OutOfRange(VoxRagError):
    """A requested time span falls outside the audio buffer."""


# -- embeddings / index -----------------------------------------------------

class BackendUnavailable(VoxRagError):
    """An external backend (sidecar, chat, judge, reranker) cannot be reached."""


class DimensionMismatch(VoxRagError):
    """Vector dimensionality differs from the configured dimension."""


class NonFiniteValue(VoxRagError):
    """An embedding contains NaN or infinity."""


class ZeroVector(VoxRagError):
    """L2 normalization of an all-zero vector is undefined."""


class DuplicateId(VoxRagError):
    """The same segment id was supplied twice."""


class NotNormalized(VoxRagError):
    """A vector required to be unit-norm is not."""


# -- retrieval / generation -------------------------------------------------

class UnknownSegmentId(VoxRagError):
    """An id from the index cannot be resolved in the segment store."""


class MissingTranscript(VoxRagError):
    """An operation that needs transcripts got a segment without one."""


class EmptyCompletion(VoxRagError):
    """The chat backend returned an empty answer."""


# -- evaluation -------------------------------------------------------------

class UnparseableReply(VoxRagError):
    """A judge reply did not match the expected wire shape."""


class OutOfRangeScore(VoxRagError):
    """A judge score fell outside the 0-2 scale."""


class UndefinedMetric(VoxRagError):
    """A metric is undefined for this input (empty relevant set)."""


class DegenerateVariance(VoxRagError):
    """A statistic requiring nonzero variance got constant data."""


class LengthMismatch(VoxRagError):
    """Paired samples have different lengths."""


class ScriptMiss(VoxRagError):
    """A strict stub backend was queried with an unscripted key."""


# -- store / service --------------------------------------------------------

class CorruptStore(VoxRagError):
    """A store or index file failed validation on load."""


class PartialIngest(VoxRagError):
    """Ingest failed partway; the store was left at its previous state."""


class PortInUse(VoxRagError):
    """The service port is already bound."""
