"""Exception hierarchy shared across the harness."""
from __future__ import annotations


class OddforgeError(Exception):
    """Base class for all harness errors."""


class DataError(OddforgeError):
    """Invalid scene data: bad files, dimension mismatches, unregistered labels."""


class CatalogError(OddforgeError):
    """Style catalog violations: unknown concepts, duplicate labels, bad indices."""


class AdapterError(OddforgeError):
    """Model adapter failure (timeout, nonzero exit, invalid output mask)."""

    def __init__(self, message: str, command: str | None = None,
                 exit_code: int | None = None, diagnostics: str | None = None):
        super().__init__(message)
        self.command = command
        self.exit_code = exit_code
        self.diagnostics = diagnostics

    def __str__(self) -> str:
        parts = [super().__str__()]
        if self.command is not None:
            parts.append(f"command: {self.command}")
        if self.exit_code is not None:
            parts.append(f"exit code: {self.exit_code}")
        if self.diagnostics:
            parts.append(f"diagnostics: {self.diagnostics.strip()}")
        return " | ".join(parts)


class StoreError(OddforgeError):
    """Report store failures: unknown runs, unknown samples, storage problems."""


class ConfigError(OddforgeError):
    """Unusable configuration or missing pipeline stage inputs."""
