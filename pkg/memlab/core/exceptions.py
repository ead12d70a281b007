# memlab/core/exceptions.py


class MemlabError(Exception):
    """base error for the toolkit"""


class ArgumentError(MemlabError, ValueError):
    """invalid argument value"""


class ShapeError(ArgumentError):
    """operand shapes do not line up"""


class DomainError(MemlabError, ValueError):
    """value outside the mathematical domain (non-finite, sigma <= 0, unstable W)"""


class ResourceError(MemlabError):
    """request too large to compute"""


class CheckpointError(MemlabError):
    """checkpoint could not be read"""


class VersionError(CheckpointError):
    """checkpoint written by another format version or config"""


class CorruptCheckpointError(CheckpointError):
    """checkpoint bytes are truncated or malformed"""


class ConfigError(MemlabError):
    """run config missing or invalid"""


class NonFiniteLossError(MemlabError):
    """training produced nan/inf loss"""

    def __init__(self, message: str, step: int = None, record: dict = None):
        super().__init__(message)
        self.step = step
        self.record = record or {}
