# depthfilter/errors.py
# Exception hierarchy. Library code raises these; depthfilter.main maps them to exit codes.

from __future__ import annotations
from typing import Optional


class DepthFilterError(Exception):
    """Root of every error raised by depthfilter."""

    exit_code = 1


class DataFormatError(DepthFilterError, ValueError):
    """Malformed or structurally invalid input data."""

    exit_code = 2

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.row = row
        self.column = column


class ConfigError(DepthFilterError, ValueError):
    """Invalid configuration values or an operation the configuration cannot support."""

    exit_code = 3


class UnsupportedFamilyError(ConfigError):
    """Elliptical-only operation requested on a non-elliptical reference."""


class NumericalError(DepthFilterError, ArithmeticError):
    """Non-SPD scatter, degenerate estimator input and similar numeric failures."""

    exit_code = 4
