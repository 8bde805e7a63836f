"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""
import numbers

import numpy as np

from .exceptions import DimensionError, ValidationError


def check_matrix(M, name="M", *, square=False, dtype=float, allow_complex=False):
    """Return ``M`` as a finite 2-D ndarray or raise.

    Parameters
    ----------
    M : array_like
        Candidate matrix. Nested lists are accepted.
    name : str
        Used in error messages.
    square : bool
        Require ``M.shape[0] == M.shape[1]``.
    allow_complex : bool
        Keep complex entries instead of rejecting them.
    """
    try:
        arr = np.asarray(M)
    except ValueError as exc:  # ragged nested lists
        raise DimensionError(f"{name} is not rectangular: {exc}") from None
    if arr.dtype == object:
        raise DimensionError(f"{name} is not a rectangular numeric array")
    if np.iscomplexobj(arr):
        if not allow_complex:
            if np.any(arr.imag != 0):
                raise ValidationError(f"{name} must be real")
            arr = arr.real
        else:
            dtype = complex
    if not np.issubdtype(arr.dtype, np.number) and arr.dtype != bool:
        raise ValidationError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(dtype, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got {arr.shape[0]}x{arr.shape[1]}")
    return arr


def check_weights(W):
    """Validate a weight matrix: square, finite, zero diagonal."""
    W = check_matrix(W, "W", square=True)
    if np.any(np.diag(W) != 0):
        raise ValidationError("W must have a zero diagonal (h(0) = 0 removes self-coupling)")
    return W


def check_state(X, n, m, name="X"):
    """Coerce a network state to shape ``(n, m)``.

    Flat vectors of length ``n * m`` are reshaped node-major, matching the
    stacking ``col(x_1, ..., x_n)``.
    """
    arr = np.asarray(X, dtype=float)
    if arr.shape == (n, m):
        return arr
    if arr.ndim == 1 and arr.size == n * m:
        return arr.reshape(n, m)
    raise DimensionError(f"{name} has shape {arr.shape}; expected ({n}, {m}) or ({n * m},)")


def check_positive(value, name, *, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValidationError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value}")
    if not strict and value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value}")
    return float(value)


def is_symmetric(M, rtol):
    scale = max(np.abs(M).sum(axis=1).max(), 1.0)
    return np.abs(M - M.T).sum(axis=1).max() <= rtol * scale
