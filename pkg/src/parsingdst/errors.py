"""Exception hierarchy shared across the package."""


class ParsingDSTError(Exception):
    """Base class for all errors raised by this package."""


class MissingFile(ParsingDSTError, FileNotFoundError):
    pass


class SchemaViolation(ParsingDSTError, ValueError):
    """Ontology config or fixture document has an invalid shape."""


class UnknownSlot(ParsingDSTError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class MalformedPayload(ParsingDSTError, ValueError):
    """No parseable JSON object in a backend completion."""


class WrongSide(ParsingDSTError, ValueError):
    """Parsed payload belongs to the other speaker."""


class AlreadyMerged(ParsingDSTError):
    pass


class MissingExample(ParsingDSTError):
    pass


class UnresolvedToken(ParsingDSTError):
    pass


class BackendError(ParsingDSTError):
    pass


class FixtureMiss(BackendError, KeyError):
    def __init__(self, key, prompt):
        self.key = key
        self.prompt_head = prompt[:120]
        super().__init__(f"no replay fixture for prompt {key}: {self.prompt_head!r}")

    def __str__(self):
        return self.args[0]


class RemoteError(BackendError):
    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class BackendTimeout(BackendError, TimeoutError):
    pass


class PipelineError(ParsingDSTError):
    """A backend or parse failure inside one turn, tagged with where it happened."""

    def __init__(self, turn, step, cause):
        self.turn = turn
        self.step = step
        self.cause = cause
        super().__init__(f"turn {turn}, step {step}: {type(cause).__name__}: {cause}")


class KeyMismatch(ParsingDSTError, ValueError):
    pass


class FormatError(ParsingDSTError, ValueError):
    pass
