"""Typed exceptions shared across the toolkit."""


class HyperballError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(HyperballError, ValueError):
    """Array shapes are inconsistent with the requested operation."""


class DimensionError(HyperballError, ValueError):
    """A manifold-dimension index or extent is invalid or misaligned."""


class ManifoldMismatchError(HyperballError, ValueError):
    """Two objects reference different manifold instances."""


class ContractError(HyperballError, ValueError):
    """A documented precondition was violated by the caller."""


class ConfigError(HyperballError, ValueError):
    """Run configuration is invalid (bad flag value, unknown key, ...)."""


class DataFormatError(HyperballError, ValueError):
    """An external file (IDX data, checkpoint) is malformed or inconsistent."""


class NumericFailure(HyperballError, ArithmeticError):
    """Training produced a non-finite quantity."""
