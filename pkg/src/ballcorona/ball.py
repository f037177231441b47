"""Geometry of the unit ball in C^n.

All functions accept points as complex arrays whose last axis is the
coordinate axis, so a single point has shape ``(n,)`` and a batch has
shape ``(..., n)``. Scalars broadcast over the leading axes.
"""

from dataclasses import dataclass

import numpy as np

from .validation import as_point, as_points

BOUNDARY_TOL = 1e-12

# the "k large" threshold for tent-chain annuli
ANNULUS_K_MIN = 3


def pairing(w, z):
    """Hermitian pairing ``<w, z> = sum_j w_j conj(z_j)``."""
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if w.shape[-1] != z.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {w.shape[-1]} vs {z.shape[-1]}")
    return np.sum(w * np.conj(z), axis=-1)


def sqnorm(z):
    z = np.asarray(z, dtype=complex)
    return np.sum(z.real ** 2 + z.imag ** 2, axis=-1)


def delta(w, z):
    """Quasi-distance ``|1 - <w,z>|^2 - (1 - |w|^2)(1 - |z|^2)``.

    Evaluated as ``(1 - |w|^2)|z - w|^2 + |<z - w, w>|^2``, the same
    quantity without the cancellation of the raw expression near the
    diagonal.
    """
    w = np.asarray(w, dtype=complex)
    z = np.asarray(z, dtype=complex)
    u = z - w
    return (1.0 - sqnorm(w)) * sqnorm(u) + np.abs(pairing(u, w)) ** 2


def mobius(a, z):
    """Involutive automorphism ``phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>)``."""
    a = np.asarray(a, dtype=complex)
    z = np.asarray(z, dtype=complex)
    a, z = np.broadcast_arrays(a, z)
    aa = sqnorm(a)[..., None]
    za = pairing(z, a)[..., None]
    with np.errstate(invalid="ignore", divide="ignore"):
        proj = np.where(aa > 0, za / np.where(aa > 0, aa, 1.0) * a, 0.0)
    s = np.sqrt(1.0 - aa)
    return (a - proj - s * (z - proj)) / (1.0 - za)


def mobius_magnitude(w, z):
    """``|phi_w(z)|``."""
    return np.sqrt(sqnorm(mobius(w, z)))


def lambda_weight(z):
    """Density of the invariant measure, ``(1 - |z|^2)^(-n-1)``."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    t = 1.0 - sqnorm(z)
    if np.any(t <= 0):
        raise ValueError("lambda_weight requires |z| < 1")
    return t ** (-n - 1.0)


@dataclass(frozen=True)
class Tent:
    """Carleson tent ``S_zeta = {z : (1-|zeta|)/|1 - <zeta, z>| > 1/2}``."""

    apex: np.ndarray

    def __post_init__(self):
        apex = as_point(self.apex)
        r = float(np.sqrt(sqnorm(apex)))
        if not 0.0 < r < 1.0:
            raise ValueError(f"tent apex must satisfy 0 < |zeta| < 1, got {r}")
        object.__setattr__(self, "apex", apex)

    @property
    def n(self):
        return self.apex.shape[0]

    @property
    def radius(self):
        return float(np.sqrt(sqnorm(self.apex)))

    @property
    def size(self):
        """``1 - |zeta|``, the distance of the apex to the sphere."""
        return 1.0 - self.radius

    @property
    def direction(self):
        return self.apex / self.radius

    @property
    def chain_length(self):
        """Largest admissible chain index ``log2(1 / (1 - |zeta|))``."""
        return int(np.floor(np.log2(1.0 / self.size) + 1e-12))


def tent_contains(t, z):
    """Membership in the tent ``t``; vectorised over leading axes of z."""
    z = np.asarray(z, dtype=complex)
    den = np.abs(1.0 - pairing(t.apex, z))
    return (1.0 - t.radius) > 0.5 * den


def tent_chain(t, k):
    """Point ``zeta_k`` on the ray of the apex with ``1 - |zeta_k| = 2^k delta``."""
    if k < 0 or k > t.chain_length:
        raise ValueError(
            f"chain index {k} outside [0, {t.chain_length}]")
    d = t.size
    new_size = (2.0 ** k) * d
    if new_size >= 1.0:
        raise ValueError("chain point would reach the centre")
    return (1.0 - new_size) * t.direction


def qball_contains(eta, radius, xi):
    """Non-isotropic boundary ball ``{xi : |1 - <xi, eta>|^(1/2) < radius}``."""
    eta = np.asarray(eta, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    for name, v in (("eta", eta), ("xi", xi)):
        if np.any(np.abs(np.sqrt(sqnorm(v)) - 1.0) > BOUNDARY_TOL):
            raise ValueError(f"{name} must lie on the unit sphere")
    if radius <= 0:
        raise ValueError("radius must be positive")
    return np.abs(1.0 - pairing(xi, eta)) < radius ** 2


def quasi_distance(w, z):
    """``d(w, z) = |1 - <w, z>|^(1/2)``."""
    return np.sqrt(np.abs(1.0 - pairing(w, z)))


def annulus_bounds(zeta, k):
    """Admissibility of ``(zeta, k)`` for the tent-chain annulus estimate.

    Returns the tent and ``delta = 1 - |zeta|`` after checking
    ``delta <= 1/4``, ``k >= 3`` and ``2^k delta <= 1/2``.
    """
    t = Tent(zeta)
    d = t.size
    if d > 0.25:
        raise ValueError("annulus estimate needs 1 - |zeta| <= 1/4")
    if k < ANNULUS_K_MIN:
        raise ValueError(f"annulus estimate needs k >= {ANNULUS_K_MIN}")
    if (2.0 ** k) * d > 0.5 + 1e-15:
        raise ValueError("annulus estimate needs 2^k (1 - |zeta|) <= 1/2")
    return t, d


def unitary_to(direction):
    """Unitary matrix whose first column is the given unit vector.

    Used to rotate rules built around ``e_1`` onto an arbitrary direction:
    ``points @ U.T`` maps ``e_1`` to ``direction``.
    """
    direction = as_point(direction)
    n = direction.shape[0]
    m = np.concatenate([direction[:, None], np.eye(n, dtype=complex)], axis=1)
    q, _ = np.linalg.qr(m, mode="complete")
    # remaining columns are orthogonal to q[:, 0], which is direction up to phase
    q[:, 0] = direction
    return q


def random_ball_points(rng, count, n, rmax=1.0):
    """Points uniform in the ball of radius ``rmax``."""
    g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    g /= np.sqrt(sqnorm(g))[:, None]
    r = rmax * rng.random(count) ** (1.0 / (2 * n))
    return g * r[:, None]


def random_sphere_points(rng, count, n):
    g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    return g / np.sqrt(sqnorm(g))[:, None]


__all__ = [
    "Tent", "pairing", "sqnorm", "delta", "mobius", "mobius_magnitude",
    "lambda_weight", "tent_contains", "tent_chain", "qball_contains",
    "quasi_distance", "annulus_bounds", "unitary_to", "as_points",
    "random_ball_points", "random_sphere_points",
]
