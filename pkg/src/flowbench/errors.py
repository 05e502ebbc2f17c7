"""Exception hierarchy shared across the package.

Every error carries a coarse ``category`` so the CLI can map failures to
machine-readable exit codes without string matching.
"""

from __future__ import annotations


class FlowbenchError(Exception):
    """Base class for all package-specific errors."""

    category = "internal"


class ConfigError(FlowbenchError):
    """Invalid or inconsistent configuration (bad keys, bad values, mismatched sizes)."""

    category = "config"


class DegenerateInputError(FlowbenchError):
    """Numerically degenerate input, e.g. cosine similarity of two ~zero fields."""

    category = "domain"


class DegenerateConditionError(FlowbenchError):
    """Conditioning information is impossibly far from every mixture component."""

    category = "domain"


class UnknownConditionError(FlowbenchError):
    """A prompt label was queried that was never registered with the model."""

    category = "domain"


class TooFewFramesError(FlowbenchError):
    """A temporal metric was asked for on a field with too few frames."""

    category = "domain"


class TraceTooShortError(FlowbenchError):
    """A trace diagnostic needs at least two executed steps."""

    category = "domain"


class OutputError(FlowbenchError):
    """Filesystem problem while writing study outputs."""

    category = "io"
