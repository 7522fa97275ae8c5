"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from numbers import Integral, Real

import numpy as np

from .exceptions import DomainError


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, Integral) or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_real(value, name, *, low=None, high=None, low_inclusive=True):
    if isinstance(value, bool) or not isinstance(value, Real) or not np.isfinite(value):
        raise DomainError(f"{name} must be a finite real number, got {value!r}")
    value = float(value)
    if low is not None:
        if (value < low) if low_inclusive else (value <= low):
            op = ">=" if low_inclusive else ">"
            raise DomainError(f"{name} must be {op} {low}, got {value}")
    if high is not None and value > high:
        raise DomainError(f"{name} must be <= {high}, got {value}")
    return value


def check_matrix(A, m, n, name="A"):
    """Return ``A`` as a float ``(m, n)`` array; scalars are accepted when m = n = 1."""
    arr = np.asarray(A, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1 and arr.size == m * n:
        arr = arr.reshape(m, n)
    if arr.shape != (m, n):
        raise DomainError(f"{name} must have shape ({m}, {n}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must have finite entries")
    return arr


def check_vector(b, size, name="b"):
    arr = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
    if arr.shape != (size,):
        raise DomainError(f"{name} must have length {size}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must have finite entries")
    return arr


def check_pair(A, b, m, n):
    """Validate an affine form ``q -> Aq + b`` with ``A`` of shape (m, n)."""
    m = check_positive_int(m, "m")
    n = check_positive_int(n, "n")
    return check_matrix(A, m, n), check_vector(b, m)


def dist_to_int(x):
    """Distance to the nearest integer, elementwise."""
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.rint(x))
