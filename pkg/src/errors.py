"""
Error categories shared by every RainbowRadar component.
Each category maps to a CLI exit status.
"""


class RainbowRadarError(Exception):
    """Base class for all RainbowRadar failures."""

    category = "internal"
    exit_status = 1


class ConfigError(RainbowRadarError, ValueError):
    """Invalid configuration or parameters."""

    category = "config"
    exit_status = 2


class DomainError(ConfigError):
    """Numeric input outside the domain of a formula."""


class ShapeError(ConfigError):
    """Position arrays with the wrong dimensions."""


class InvalidVertexError(ConfigError):
    """Vertex id or layer index out of range."""


class DocumentError(RainbowRadarError, ValueError):
    """Malformed graph document or checksum mismatch."""

    category = "document"
    exit_status = 2


class BudgetError(RainbowRadarError):
    """Work refused because it would exceed the memory budget."""

    category = "budget"
    exit_status = 3


class OutputError(RainbowRadarError, OSError):
    """Output could not be written where it was asked to be."""

    category = "io"
    exit_status = 4
