"""Custom exceptions for the Teethland evaluation toolkit."""


class TeethlandEvalError(Exception):
    """Base exception for all toolkit errors."""

    pass


class ConfigurationError(TeethlandEvalError):
    """Raised when configuration is invalid or missing."""

    def __init__(self, message: str):
        super().__init__(f"Configuration error: {message}")


class ValidationError(TeethlandEvalError):
    """Raised when data validation fails."""

    def __init__(self, message: str):
        super().__init__(f"Validation error: {message}")


class LandmarkFileError(TeethlandEvalError):
    """Raised when a landmark file cannot be decoded or violates its schema."""

    def __init__(self, message: str, source: str | None = None):
        self.source = source
        if source:
            super().__init__(f"Landmark file error in '{source}': {message}")
        else:
            super().__init__(f"Landmark file error: {message}")


class DuplicateKeyError(LandmarkFileError):
    """Raised when two objects of one landmark file share a key."""

    def __init__(self, key: str, source: str | None = None):
        self.key = key
        super().__init__(f"duplicate landmark key '{key}'", source)


class UnknownClassError(LandmarkFileError):
    """Raised when a landmark class string is not one of the six known classes."""

    def __init__(self, value: str, source: str | None = None):
        self.value = value
        super().__init__(f"unknown landmark class '{value}'", source)


class MissingScoreError(LandmarkFileError):
    """Raised when a prediction object carries no usable score."""

    def __init__(self, key: str, source: str | None = None):
        self.key = key
        super().__init__(f"object '{key}' has no numeric score", source)


class ScoreRangeError(LandmarkFileError):
    """Raised when a prediction score lies outside [0, 1]."""

    def __init__(self, key: str, score: float, source: str | None = None):
        self.key = key
        self.score = score
        super().__init__(f"object '{key}' has score {score} outside [0, 1]", source)


class CategoryMismatchError(TeethlandEvalError):
    """Raised when a landmark is matched inside a category its class does not map to."""

    def __init__(self, landmark_class: str, category: str):
        self.landmark_class = landmark_class
        self.category = category
        super().__init__(f"class '{landmark_class}' does not belong to category '{category}'")


class SubmissionError(TeethlandEvalError):
    """Raised when a prediction set cannot be paired with the ground truth."""

    def __init__(self, message: str, scan_id: str | None = None):
        self.scan_id = scan_id
        if scan_id:
            super().__init__(f"Submission error for scan '{scan_id}': {message}")
        else:
            super().__init__(f"Submission error: {message}")


class RankingError(TeethlandEvalError):
    """Raised when a ranking run is not possible with the given samples."""

    def __init__(self, message: str):
        super().__init__(f"Ranking error: {message}")


class MissingChannelError(TeethlandEvalError):
    """Raised when a point field lacks a channel an extraction procedure needs."""

    def __init__(self, channel: str, procedure: str):
        self.channel = channel
        self.procedure = procedure
        super().__init__(f"{procedure} requires the '{channel}' channel")


class MeshLoadError(TeethlandEvalError):
    """Raised when a mesh file cannot be loaded."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        if path:
            super().__init__(f"Mesh load error for '{path}': {message}")
        else:
            super().__init__(f"Mesh load error: {message}")


class DegenerateGeometryError(TeethlandEvalError):
    """Raised when geometry is too degenerate for the requested analysis."""

    def __init__(self, message: str):
        super().__init__(f"Degenerate geometry: {message}")


class EmptyInputError(TeethlandEvalError):
    """Raised when an operation receives an empty collection it cannot work on."""

    def __init__(self, what: str):
        self.what = what
        super().__init__(f"{what} must not be empty")
