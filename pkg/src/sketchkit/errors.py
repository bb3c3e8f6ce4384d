"""Exception hierarchy shared across the toolkit."""


class SketchError(Exception):
    """Base class for all toolkit errors."""


class NonUnitDirection(SketchError):
    """A direction vector field is not unit length."""


class DegenerateGeometry(SketchError):
    """Geometry with no usable extent (zero-length line, zero radius)."""


class SchemaError(SketchError):
    """A constraint's parameter set does not match any known schema."""


class UnknownSchema(SchemaError):
    pass


class DanglingReference(SchemaError):
    """An entity reference does not resolve to a primitive or sub-primitive."""


class MissingParameter(SchemaError):
    pass


class ExtraParameter(SchemaError):
    pass


class EmptyGraph(SketchError):
    """Operation needs at least two primitives."""


class OutOfVocabulary(SketchError):
    """A symbol has no token id in the active vocabulary."""


class InsufficientCorpus(SketchError):
    """The corpus is too small for the requested operation."""


class UnsupportedPrimitive(SketchError):
    """Primitive type outside the solver-supported subset."""


class UnsupportedConstraint(SketchError):
    """Constraint type or entity combination without a residual form."""


class DegenerateVariance(SketchError):
    """Correlation undefined because one side has zero variance."""


class EmptyGroundTruth(SketchError):
    """Prediction metrics undefined for an empty ground-truth set."""


class InconsistentSequence(SketchError):
    """A construction sequence does not match the sketch it is applied to."""


class MalformedRecord(SketchError):
    """A corpus line that could not be parsed into a sketch."""

    def __init__(self, line_number: int, cause: str):
        super().__init__(f"line {line_number}: {cause}")
        self.line_number = line_number
        self.cause = cause
