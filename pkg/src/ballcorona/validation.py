"""Input validation helpers shared by the estimators and functions."""

import numpy as np


def as_point(z, n=None):
    """Coerce a single point to a 1-d complex array."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1:
        raise ValueError(f"expected a single point, got shape {z.shape}")
    if n is not None and z.shape[0] != n:
        raise ValueError(f"expected dimension {n}, got {z.shape[0]}")
    return z


def as_points(Z, n=None, interior=False, margin=0.0):
    """Coerce ``Z`` to a complex array of shape ``(M, n)``.

    A 1-d input is read as a batch of points when ``n == 1`` and as a
    single point otherwise.

    Parameters
    ----------
    Z : array_like
        Point or batch of points.
    n : int, optional
        Required dimension.
    interior : bool
        Require ``|z| < 1 - margin`` for every point.
    margin : float
        Distance to keep from the sphere when ``interior`` is set.
    """
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim == 0:
        Z = Z.reshape(1, 1)
    elif Z.ndim == 1:
        Z = Z.reshape(-1, 1) if n == 1 else Z.reshape(1, -1)
    elif Z.ndim != 2:
        raise ValueError(f"points must be 1-d or 2-d, got shape {Z.shape}")
    if n is not None and Z.shape[1] != n:
        raise ValueError(f"expected dimension {n}, got {Z.shape[1]}")
    if not np.all(np.isfinite(Z)):
        raise ValueError("points contain non-finite values")
    if interior:
        r = np.sqrt(np.sum(np.abs(Z) ** 2, axis=1))
        if np.any(r >= 1.0 - margin):
            raise ValueError(
                f"points must satisfy |z| < {1.0 - margin:g}; max |z| = {r.max():.6g}")
    return Z


def check_dimension(n, allowed=(1, 2, 3)):
    if n not in allowed:
        raise ValueError(f"unsupported dimension n={n}; allowed {allowed}")
    return n


def check_random_state(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
