"""Error types and input checks shared across modules."""

import numbers

import numpy as np


class ADXError(Exception):
    """Base class for package errors."""


class ParameterError(ADXError, ValueError):
    """Invalid parameter or configuration value."""


class DataError(ADXError, ValueError):
    """Non-finite or malformed sample data."""


class ConstraintError(ADXError, ValueError):
    """A function violates the norm constraint it is required to satisfy."""


class DomainError(ADXError, ValueError):
    """Evaluation outside the domain of a formula (poles, degenerate multipliers)."""


class ContractError(ADXError, TypeError):
    """An operation's structural precondition is not met (e.g. missing closure)."""


def check_real(name, value, lo=None, hi=None, lo_open=False, hi_open=False):
    """Return ``value`` as float after range validation."""
    if isinstance(value, bool) or not isinstance(value, (numbers.Real, np.floating)):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    v = float(value)
    if not np.isfinite(v):
        raise ParameterError(f"{name} must be finite, got {v}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ParameterError(f"{name} must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        raise ParameterError(f"{name} must be {'<' if hi_open else '<='} {hi}, got {v}")
    return v


def check_int(name, value, lo=None, hi=None):
    if isinstance(value, bool) or int(value) != value:
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    v = int(value)
    if lo is not None and v < lo:
        raise ParameterError(f"{name} must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ParameterError(f"{name} must be <= {hi}, got {v}")
    return v
