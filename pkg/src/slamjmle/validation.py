"""Input checks shared by the estimators and generators."""

import warnings

import numpy as np


class DimensionError(ValueError):
    """Raised when matrix or vector shapes are inconsistent."""


class ParameterError(ValueError):
    """Raised when item parameters are outside their valid range."""


def check_binary_matrix(X, name="X", ndim=2):
    """Return ``X`` as an int8 array after checking every entry is 0 or 1."""
    arr = np.asarray(X)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 entries")
    if ndim == 2 and (arr.shape[0] < 1 or arr.shape[1] < 1):
        raise DimensionError(f"{name} must have at least one row and one column")
    return arr.astype(np.int8)


def check_q_matrix(Q, n_attributes=None):
    Q = check_binary_matrix(Q, "Q")
    if n_attributes is not None and Q.shape[1] != n_attributes:
        raise DimensionError(f"Q has {Q.shape[1]} columns, expected {n_attributes}")
    if (Q.sum(axis=0) == 0).any():
        warnings.warn("Q has an all-zero column; the model is not identifiable", stacklevel=2)
    return Q


def check_response_matrix(R, allow_missing=True):
    """Split a response matrix into 0/1 values and an observed-cell mask.

    Missing cells may be given as ``np.nan`` (float input) or as a
    negative integer. They come back as 0 in the values with ``False`` in
    the mask.

    Returns
    -------
    values : ndarray of int8, shape (N, J)
    observed : ndarray of bool, shape (N, J)
    """
    arr = np.asarray(R)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"R must be a non-empty 2-D array, got shape {arr.shape}")
    if np.issubdtype(arr.dtype, np.floating):
        observed = ~np.isnan(arr)
        filled = np.where(observed, arr, 0.0)
    else:
        observed = arr >= 0
        filled = np.where(observed, arr, 0)
    if not np.isin(filled, (0, 1)).all():
        raise ValueError("R must contain only 0, 1 or missing entries")
    if not allow_missing and not observed.all():
        raise ValueError("R contains missing cells")
    return filled.astype(np.int8), observed


def check_consistent(R_shape, Q=None, A=None):
    N, J = R_shape
    if Q is not None and Q.shape[0] != J:
        raise DimensionError(f"Q has {Q.shape[0]} rows but R has {J} columns")
    if A is not None and A.shape[0] != N:
        raise DimensionError(f"A has {A.shape[0]} rows but R has {N} rows")
    if Q is not None and A is not None and Q.shape[1] != A.shape[1]:
        raise DimensionError(f"Q has K={Q.shape[1]} but A has K={A.shape[1]}")
