"""Exception hierarchy. Everything raised on purpose derives from ConflabError."""


class ConflabError(Exception):
    pass


class DomainError(ConflabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ParseError(DomainError):
    def __init__(self, message, position=None, source=None):
        self.position = position
        self.source = source
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class PreconditionError(DomainError):
    """Input data does not satisfy the jet conditions a check relies on."""


class NoRootError(DomainError):
    def __init__(self, message, sup_value=None):
        self.sup_value = sup_value
        super().__init__(message)


class ResolutionError(ConflabError):
    """A sampling grid is too coarse to support the requested certificate."""
