"""Exception types shared across the package."""


class PrototextError(Exception):
    """Base class for all package-specific errors."""


class EmptyTextError(PrototextError):
    """Raised when a text yields no tokens."""


class CacheMissError(PrototextError):
    """Raised when a text is not present in an embedding cache."""


class IoError(PrototextError):
    """Raised when a file cannot be read or written."""


class FormatError(PrototextError):
    """Raised when a file's contents do not match the expected format."""


class NetworkError(PrototextError):
    """Raised when the embedding service cannot be reached."""


class ProtocolError(PrototextError):
    """Raised when the embedding service returns a malformed response."""


class DimMismatchError(PrototextError):
    """Raised when embedding dimensions are inconsistent."""


class ZeroVectorError(PrototextError):
    """Raised when cosine similarity is asked for a zero vector."""


class DegenerateWeightsError(PrototextError):
    """Raised when a weighted-cosine denominator collapses to zero."""


class ShapeMismatchError(PrototextError):
    """Raised when array shapes are incompatible."""


class MissingClassSamplesError(PrototextError):
    """Raised when a class has no samples or no prototypes available."""


class MissingSourceTextError(PrototextError):
    """Raised when a prototype has never been projected onto a training sample."""


class EmptyDatasetError(PrototextError):
    """Raised when a dataset split is empty."""


class SchemaError(PrototextError):
    """Raised when a dataset file violates the expected schema."""
