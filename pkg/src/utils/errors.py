class CifTtsError(Exception):
    """Base exception for every failure the toolkit reports"""
    exit_code = 1


class UsageError(CifTtsError):
    """Raised when an operation is called with invalid arguments"""
    exit_code = 2


class ConfigError(UsageError):
    """Raised when a config file or override holds an invalid key or value"""
    pass


class DimensionError(UsageError):
    """Raised when tensor shapes do not agree"""

    def __init__(self, message: str, *shapes):
        if shapes:
            message = f"{message} (shapes: {', '.join(str(tuple(s)) for s in shapes)})"
        super().__init__(message)
        self.shapes = [tuple(s) for s in shapes]


class DomainError(UsageError):
    """Raised when a value lies outside an operation's mathematical domain"""
    pass


class DataError(CifTtsError):
    """Raised for unreadable, corrupt or inconsistent data on disk"""
    exit_code = 3


class FormatError(DataError):
    """Raised when a binary file does not match its expected layout"""

    def __init__(self, message: str, offset: int = None):
        if offset is not None:
            message = f"{message} at byte offset {offset}"
        super().__init__(message)
        self.offset = offset


class CheckpointMismatchError(DataError):
    """Raised when a checkpoint was produced under a different config"""

    def __init__(self, expected_hash: str, found_hash: str):
        super().__init__(
            f"Checkpoint config hash {found_hash} does not match config hash {expected_hash}"
        )
        self.expected_hash = expected_hash
        self.found_hash = found_hash


class NumericalError(CifTtsError):
    """Raised when training produces a non-finite loss"""
    exit_code = 4
