"""Exception hierarchy shared by the toolkit modules.

Library code raises these; the command line maps them to exit codes.
"""


class ToolkitError(Exception):
    """Base class for every error the toolkit raises on purpose"""


class GameInputError(ToolkitError, ValueError):
    """Invalid player, profile, shape parameter or formula"""


class GameDomainError(ToolkitError, ValueError):
    """A value outside the aggregator's domain (non-binary boolean input)"""


class GameParseError(ToolkitError, ValueError):
    """A malformed document; `path` names the offending field"""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ResourceLimitError(ToolkitError):
    """An enumeration, size or K guard was exceeded"""


class NumericalError(ToolkitError, ArithmeticError):
    """A solver failed or produced output that does not pass its own check"""


class ConvergenceError(ToolkitError):
    """The mixture solver ran out of rounds with no fallback"""

    def __init__(self, message, certificate=None):
        self.certificate = certificate
        super().__init__(message)
