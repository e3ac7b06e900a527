"""Input checks shared by the estimator wrappers."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import DomainError, InvalidGridError
from .numerics import check_grid_size


def check_profiles(X, R0):
    """Validate a batch of profile samples, one profile per row.

    Parameters
    ----------
    X : array_like of shape (n_profiles, n_theta)
    R0 : float

    Returns
    -------
    ndarray of float, shape (n_profiles, n_theta)
    """
    X = check_array(X, dtype=float, ensure_2d=True)
    check_grid_size(X.shape[1])
    if np.any(X <= 0) or np.any(X >= R0):
        raise DomainError(f"profile samples must lie in (0, R0={R0:g})")
    return X


def check_n_features(estimator, X):
    if X.shape[1] != estimator.n_features_in_:
        raise InvalidGridError(
            f"X has {X.shape[1]} samples per profile, estimator was fit with {estimator.n_features_in_}"
        )

