"""Error types shared across the toolkit."""

from __future__ import annotations

from .encoding import EncodingError

__all__ = [
    "EncodingError",
    "StructureError",
    "BudgetExceededError",
    "IntegrityError",
    "ConfigError",
]


class StructureError(ValueError):
    """A declared group structure (marking, coset data, ...) is violated."""


class BudgetExceededError(RuntimeError):
    """A search exceeded its node budget.  Results are never truncated silently."""


class IntegrityError(RuntimeError):
    """A cache file failed a checksum, magic, or identity check."""


class ConfigError(ValueError):
    """A configuration file is malformed; the message names the offending key."""
