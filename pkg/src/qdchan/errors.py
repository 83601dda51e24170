"""Exception types raised across the package."""


class QdchanError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(QdchanError, ValueError):
    """A numeric argument is outside its allowed domain."""


class GeometryError(QdchanError, ValueError):
    """Invalid geometric input (point outside room, degenerate pair, ...)."""


class MaterialLookupError(QdchanError, KeyError):
    """A material name cannot be resolved against the loaded library."""

    def __str__(self):  # KeyError quotes its arg; keep the plain message
        return self.args[0] if self.args else ""


class SchemaError(QdchanError, ValueError):
    """A config or data document violates its schema; names the field/row."""


class DataError(QdchanError, ValueError):
    """Runtime data problem: empty ensembles, unparsable rows, bad tables."""


class ResourceLimitError(QdchanError, RuntimeError):
    """A configured resource cap (e.g. component count) would be exceeded."""
