"""Exception hierarchy. Every error raised on bad input derives from MetaPatternError."""


class MetaPatternError(Exception):
    exit_code = 3


class ConfigError(MetaPatternError):
    exit_code = 2


class ParseError(MetaPatternError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCorpus(MetaPatternError):
    pass


class ValidationError(MetaPatternError):
    pass


class InvalidTypePath(ValidationError):
    pass


class InvalidOntology(ValidationError):
    pass


class InvalidParams(MetaPatternError):
    pass


class DegenerateLabels(MetaPatternError):
    pass


class TypeMismatch(MetaPatternError):
    pass


class CliqueBudgetExceeded(MetaPatternError):
    pass


class CatalogMismatch(MetaPatternError):
    pass


class EmptyGold(MetaPatternError):
    pass


class SpecError(MetaPatternError):
    pass
