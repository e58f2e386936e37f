"""Exception hierarchy for the query, geometry, inference, and retrieval layers."""


class SceneQError(Exception):
    """Base class for all package errors."""


class QuerySyntaxError(SceneQError):
    """Malformed query text; carries the offending position and what was expected."""

    def __init__(self, message: str, position: int | None = None, expected: str | None = None):
        self.position = position
        self.expected = expected
        detail = message
        if position is not None:
            detail += f" at position {position}"
        if expected is not None:
            detail += f" (expected {expected})"
        super().__init__(detail)


class ArityError(SceneQError):
    """A predicate received the wrong number of arguments."""


class InvalidQueryError(SceneQError):
    """Structurally invalid query (unbound variable, duplicate class atom, bad threshold)."""


class UnsupportedEntityError(SceneQError):
    """Class or relation name outside the active vocabulary; the user-facing rejection."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unsupported entity or relation: {name!r}")


class TooManyVariablesError(SceneQError):
    """Equivalence search space exceeds the brute-force bound."""


class EmptyInputError(SceneQError):
    """An operand tokenized to nothing."""


class NonPositiveInputError(SceneQError):
    """A physical quantity that must be strictly positive was not."""


class MissingGsdError(SceneQError):
    """A metric predicate or area computation was requested without GSD metadata."""


class BudgetExceededError(SceneQError):
    """Naive enumeration would exceed its assignment budget."""


class NoValidSampleError(SceneQError):
    """Every translation sample failed parsing or vocabulary validation."""


class EmptySampleSetError(SceneQError):
    """Selection was invoked on an empty sample set."""


class BackendUnavailableError(SceneQError):
    """The chat-completion backend could not be reached."""


class UnsupportedQueryShapeError(SceneQError):
    """The offline translator does not recognize part of the query."""

    def __init__(self, fragment: str):
        self.fragment = fragment
        super().__init__(f"unsupported query fragment: {fragment!r}")


class SchemaError(SceneQError):
    """A corpus file violated the scene schema; carries the record locus."""

    def __init__(self, message: str, locus: str):
        self.locus = locus
        super().__init__(f"{message} (at {locus})")


class DuplicateImageIdError(SceneQError):
    """Two scenes in one corpus share an image_id."""


class EmptyCorpusError(SceneQError):
    """Retrieval was requested over a corpus with no scenes."""


class UnknownQueryError(SceneQError):
    """A run references a query_id absent from the ground truth."""


class UnknownImageError(SceneQError):
    """An explanation was requested for an image_id not present in the run."""


class MissingLevelError(SceneQError):
    """A robustness metric needs all five complexity levels."""


class EmptyRunSetError(SceneQError):
    """Aggregate metrics were requested over zero runs."""


class NoDetectionsError(SceneQError):
    """Image uncertainty is undefined for a scene without detections."""


class ImageMissingFromCorpusError(SceneQError):
    """Ground truth references an image_id absent from the corpus."""
