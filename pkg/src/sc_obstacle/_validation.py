"""Small input validation helpers shared by the public functions."""

import numbers

import numpy as np

from .exceptions import DimensionMismatch, InvalidInput


def as_float_vector(x, name, length=None):
    """Return `x` as a finite contiguous float64 vector.

    Raises `DimensionMismatch` when `length` is given and does not match.
    """
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contains non-finite values")
    return arr


def check_scalar(x, name, *, lower=None, upper=None, lower_inclusive=False,
                 upper_inclusive=True, integer=False):
    """Validate a real (or integer) scalar against optional bounds."""
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(x, bool) or not isinstance(x, kind):
        raise InvalidInput(f"{name} must be {'an integer' if integer else 'a real number'}, got {x!r}")
    if not np.isfinite(x):
        raise InvalidInput(f"{name} must be finite, got {x!r}")
    if lower is not None:
        if (x < lower) or (x == lower and not lower_inclusive):
            op = ">=" if lower_inclusive else ">"
            raise InvalidInput(f"{name} must be {op} {lower}, got {x!r}")
    if upper is not None:
        if (x > upper) or (x == upper and not upper_inclusive):
            op = "<=" if upper_inclusive else "<"
            raise InvalidInput(f"{name} must be {op} {upper}, got {x!r}")
    return x


def check_unit_vectors(x, name, atol=1e-9):
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != 3:
        raise DimensionMismatch(f"{name} must have trailing dimension 3")
    norms = np.linalg.norm(arr, axis=-1)
    if np.any(np.abs(norms - 1.0) > atol):
        raise InvalidInput(f"{name} must lie on the unit sphere")
    return arr
