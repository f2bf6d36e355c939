class ShapeGraphError(Exception):
    """Base class for all errors raised by sgmorph."""


class InvalidGraphError(ShapeGraphError, ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ParseError(ShapeGraphError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructureError(ShapeGraphError, ValueError):
    pass


class SchemaError(ShapeGraphError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class UndefinedFeatureError(ShapeGraphError, ValueError):
    """A feature is mathematically undefined for the given graph."""

    def __init__(self, feature, reason):
        self.feature = feature
        self.reason = reason
        super().__init__(f"{feature}: {reason}")


class DegenerateHullError(UndefinedFeatureError):
    pass


class EmptyGraphError(ShapeGraphError, ValueError):
    pass
