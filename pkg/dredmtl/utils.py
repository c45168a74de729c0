"""Utility functions and custom exceptions for dredmtl."""
from pathlib import Path
from typing import Optional, Union

# Environment variable that overrides the per-stage round cap
STAGE_CAP_ENV = 'DMTL_STAGE_CAP'
DEFAULT_STAGE_CAP = 10_000


class DMTLError(Exception):
    """Base exception for dredmtl errors."""
    pass


class DMTLFileNotFoundError(DMTLError):
    """Raised when a required file is not found."""
    pass


class InvalidPathError(DMTLError):
    """Raised when a path is invalid."""
    pass


class ParseError(DMTLError):
    """Raised when a program, dataset or materialisation file is malformed."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{where}: {message}"
        super().__init__(message)


class EvaluationError(DMTLError):
    """Raised when a metric atom cannot be evaluated."""
    pass


class PeriodError(DMTLError):
    """Raised when a periodic-materialisation operation is called outside its contract."""
    pass


class BudgetExceededError(DMTLError):
    """Raised when a reasoning stage runs past its round budget."""

    def __init__(self, stage: str, rounds: int, limit: int):
        self.stage = stage
        self.rounds = rounds
        self.limit = limit
        super().__init__(f"{stage} stage exceeded its budget of {limit} rounds")


def validate_path(path: Union[str, Path], must_exist: bool = True) -> Path:
    """
    Validate a file path and resolve it.

    Args:
        path: The path to validate
        must_exist: Whether the path must exist

    Returns:
        A resolved Path object

    Raises:
        InvalidPathError: If the path cannot be resolved or is a directory
        DMTLFileNotFoundError: If must_exist is True and the path doesn't exist
    """
    if not str(path).strip():
        raise InvalidPathError("Empty path")
    try:
        path_obj = Path(path).expanduser().resolve()
    except (ValueError, OSError) as e:
        raise InvalidPathError(f"Invalid path: {path} - {str(e)}")

    if must_exist and not path_obj.exists():
        raise DMTLFileNotFoundError(f"Path does not exist: {path}")
    if path_obj.is_dir():
        raise InvalidPathError(f"Path is a directory: {path}")
    return path_obj


def read_text(path: Union[str, Path]) -> str:
    """Read a UTF-8 input file.

    Raises:
        DMTLFileNotFoundError: If the file is missing
        InvalidPathError: If the file cannot be read
    """
    path_obj = validate_path(path, must_exist=True)
    try:
        return path_obj.read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise InvalidPathError(f"Failed to read {path}: {str(e)}")


def write_text(path: Union[str, Path], text: str) -> Path:
    """Write a UTF-8 output file, creating parent directories.

    Raises:
        InvalidPathError: If the file cannot be written
    """
    path_obj = validate_path(path, must_exist=False)
    try:
        path_obj.parent.mkdir(parents=True, exist_ok=True)
        path_obj.write_text(text, encoding='utf-8')
        return path_obj
    except OSError as e:
        raise InvalidPathError(f"Failed to write {path}: {str(e)}")
