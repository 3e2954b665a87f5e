"""Exception taxonomy shared across the pipeline.

Grouped by how the CLI maps them to exit codes: validation problems
(bad inputs, contract violations), backend failures, and corrupt
on-disk artifacts.
"""


class OscarNomError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(OscarNomError):
    """Bad input data or a violated operation precondition."""


class MalformedName(ValidationError):
    """movie_name does not end in ``_YYYY``."""


class DuplicateImdbId(ValidationError):
    """The same imdb_id occurs twice in the screenplay corpus."""


class EmptyClass(ValidationError):
    """An operation requiring both classes saw only one."""


class BadParams(ValidationError):
    """Invalid chunking parameters (overlap >= size, non-positive size)."""


class EmptyInput(ValidationError):
    """Pooling requires at least one vector."""


class MissingField(ValidationError):
    """A feature variant requires a field that is not present."""


class DimensionMismatch(ValidationError):
    """Vector or feature-row dimension disagrees with the expected layout."""


class LengthMismatch(ValidationError):
    """Prediction and label sequences differ in length."""


class SingleClass(ValidationError):
    """Metric requires both classes among the labels."""


class NoPositives(ValidationError):
    """Average precision requires at least one positive label."""


class NonFiniteInput(ValidationError):
    """Training data contains NaN or infinite values."""


class Diverged(OscarNomError):
    """Optimizer produced a non-finite objective.

    Carries the last finite iterate so callers can inspect it.
    """

    def __init__(self, message, theta=None, bias=None, iterations=0):
        super().__init__(message)
        self.theta = theta
        self.bias = bias
        self.iterations = iterations


class BackendError(OscarNomError):
    """Base for encoder-backend failures."""


class BackendUnavailable(BackendError):
    """Encoder backend unreachable or returned a non-success status."""


class ArtifactError(OscarNomError):
    """Base for corrupt or inconsistent on-disk artifacts."""


class CorruptCache(ArtifactError):
    """Embedding cache failed magic, framing, or checksum validation."""


class CorruptModel(ArtifactError):
    """Model file failed format or checksum validation."""


class ManifestMismatch(ArtifactError):
    """Cache manifest disagrees with the requesting pipeline config."""
