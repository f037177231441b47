"""Carleson-measure, BMO and weak-Carleson norms on the ball.

Suprema over tents are discretised by a :class:`TentGrid`. A tent
integral whose dyadic boundary shells stop decaying is reported as
divergent: the norm is ``+inf`` and a :class:`DivergenceWarning` names
the apex.
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .ball import (Tent, annulus_bounds, delta, lambda_weight,
                   mobius_magnitude, pairing, sqnorm, tent_contains,
                   unitary_to)
from .holo import VecHoloPoly, gradient, y_norm_sq
from .quadrature import (diverges, quad_ball, quad_cap, quad_tent,
                         default_levels)
from .validation import as_points, check_dimension, check_random_state


class DivergenceWarning(RuntimeWarning):
    """A tent or ball integral failed the shell-decay test."""


# -- grids --------------------------------------------------------------------

def sphere_directions(n, count=8):
    """Deterministic unit vectors spread over the sphere of C^n."""
    check_dimension(n)
    k = np.arange(count)
    if n == 1:
        return np.exp(2j * np.pi * k / count)[:, None]
    t = 0.5 * np.pi * (k + 0.5) / count
    out = np.zeros((count, n), dtype=complex)
    out[:, 0] = np.cos(t) * np.exp(2j * np.pi * k / count)
    out[:, 1] = np.sin(t) * np.exp(2j * np.pi * ((3 * k) % count) / count)
    if n > 2:
        out[:, 1:] = out[:, 1:2] * np.sqrt(1.0 / (n - 1))
    return out / np.sqrt(sqnorm(out))[:, None]


@dataclass(frozen=True)
class TentGrid:
    """Finite set of tents standing in for the supremum over apexes."""

    apexes: tuple

    def __post_init__(self):
        tents = tuple(a if isinstance(a, Tent) else Tent(a) for a in self.apexes)
        if not tents:
            raise ValueError("a tent grid needs at least one apex")
        if len({t.n for t in tents}) != 1:
            raise ValueError("apexes of mixed dimension")
        object.__setattr__(self, "apexes", tents)

    @property
    def n(self):
        return self.apexes[0].n

    def __len__(self):
        return len(self.apexes)

    def __iter__(self):
        return iter(self.apexes)

    @classmethod
    def dyadic(cls, n, directions=8, depth=6, whole=True):
        """``directions`` unit vectors times radii ``1 - 2^-j``, ``j = 1..depth``.

        With ``whole`` set, the apex of radius 1/3 is added: its tent is the
        whole ball and it has the smallest normalisation among such apexes.
        """
        U = sphere_directions(n, directions)
        apexes = [(1.0 - 2.0 ** -j) * u for j in range(1, depth + 1) for u in U]
        if whole:
            apexes.insert(0, U[0] / 3.0)
        return cls(tuple(apexes))


def bmo_grid(n, directions=8, depth=9):
    """Pairs ``(eta, delta)`` with ``delta^2 = 2^(1-j)``, ``j = 0..depth-1``."""
    U = sphere_directions(n, directions)
    radii = [np.sqrt(2.0 ** (1 - j)) for j in range(depth)]
    return [(u, r) for r in radii for u in U]


# -- helpers ------------------------------------------------------------------

def _modulus_sq(values, count):
    v = np.asarray(values)
    if v.ndim == 0:
        return np.full(count, float(np.abs(v) ** 2))
    if v.ndim == 1:
        return np.abs(v) ** 2
    return np.sum(np.abs(v.reshape(count, -1)) ** 2, axis=1)


def _y_sq(f, Z, m):
    if isinstance(f, VecHoloPoly):
        return sum(y_norm_sq(fj, Z, m) for fj in f)
    return y_norm_sq(f, Z, m)


def _components(g):
    return list(g) if isinstance(g, VecHoloPoly) else [g]


class NormReport(NamedTuple):
    value: float
    apex: np.ndarray
    values: np.ndarray
    divergent_apex: np.ndarray = None


def _tent_sup(density, grid, resolution, levels, power, normaliser):
    levels = max(default_levels(resolution), 6) if levels is None else levels
    values = np.zeros(len(grid))
    bad = None
    for i, t in enumerate(grid):
        rule = quad_tent(t.apex, resolution, levels=levels)
        if len(rule) == 0:
            continue
        dens = density(rule.nodes)
        if diverges(rule.shell_sums(dens)):
            values[i] = np.inf
            if bad is None:
                bad = t.apex
            continue
        values[i] = (float(rule.integrate(dens)) / normaliser(t)) ** (1.0 / power)
    k = int(np.argmax(values))
    if bad is not None:
        warnings.warn(f"tent integral diverges at apex {np.round(bad, 6)}",
                      DivergenceWarning, stacklevel=3)
    return NormReport(float(values[k]), grid.apexes[k].apex, values, bad)


# -- norms --------------------------------------------------------------------

def cm_norm(h, grid, resolution=64, *, levels=None, detail=False):
    """Carleson-measure norm ``sup sqrt(int_S |h|^2 dlambda / (1-|zeta|)^n)``.

    ``h`` maps a batch ``(M, n)`` to scalars ``(M,)`` or tuples ``(M, ...)``;
    tuples use the pointwise l2 modulus. With ``detail`` the full
    :class:`NormReport` is returned.
    """
    n = grid.n

    def density(Z):
        return _modulus_sq(h(Z), len(Z)) * lambda_weight(Z)

    rep = _tent_sup(density, grid, resolution, levels, 2.0,
                    lambda t: t.size ** n)
    return rep if detail else rep.value


def wx_norm(f, p, sigma, m, grid, resolution=64, *, levels=None, detail=False):
    """Weak-Carleson norm of ``(1-|z|^2)^sigma |Y^m f|`` over the grid.

    ``sup (int_S |(1-|z|^2)^sigma Y^m f|^p dlambda / (1-|zeta|^2)^(p sigma))^(1/p)``.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")

    def density(Z):
        a = 1.0 - sqnorm(Z)
        return (a ** sigma * np.sqrt(_y_sq(f, Z, m))) ** p * lambda_weight(Z)

    rep = _tent_sup(density, grid, resolution, levels, float(p),
                    lambda t: (1.0 - t.radius ** 2) ** (p * sigma))
    return rep if detail else rep.value


def bmo_norm(b, n, grid=None, resolution=64):
    """``max sqrt(mean_Q |b - b_Q|^2)`` over boundary balls ``|1 - <xi, eta>| < delta^2``.

    ``b`` maps sphere points ``(M, n)`` to scalars or tuples.
    """
    grid = bmo_grid(n) if grid is None else grid
    best = 0.0
    for eta, rad in grid:
        X, W = quad_cap(eta, rad, resolution)
        if len(W) == 0:
            continue
        v = np.asarray(b(X))
        v = v.reshape(len(W), -1) if v.ndim > 1 else v[:, None]
        mean = W @ v / W.sum()
        var = W @ np.sum(np.abs(v - mean) ** 2, axis=1) / W.sum()
        best = max(best, float(np.sqrt(max(var, 0.0))))
    return best


class BmoaRatio(NamedTuple):
    lower: float
    upper: float
    cm: float
    bmo: float
    degenerate: bool


def bmoa_ratio(g, grid=None, resolution=64, bmo_resolution=None):
    """Compare ``cm_norm((1-|z|^2)^(n/2+1) g')`` with the BMO norm of ``g``.

    ``lower = cm / bmo`` and ``upper = bmo / cm``. Constant ``g`` has both
    sides zero and is reported as degenerate with NaN ratios.
    """
    comps = _components(g)
    n = comps[0].n
    grid = TentGrid.dyadic(n) if grid is None else grid

    def hfield(Z):
        a = (1.0 - sqnorm(Z)) ** (n / 2 + 1)
        return np.concatenate([a[:, None] * gradient(c, Z) for c in comps], axis=1)

    def boundary(X):
        return np.stack([c(X) for c in comps], axis=-1)

    bmo = bmo_norm(boundary, n, resolution=bmo_resolution or resolution)
    scale = max(float(np.max(np.abs(boundary(sphere_directions(n, 16))))), 1e-300)
    if bmo <= 1e-12 * scale:
        return BmoaRatio(np.nan, np.nan, 0.0, bmo, True)
    cm = cm_norm(hfield, grid, resolution)
    return BmoaRatio(cm / bmo, bmo / cm, cm, bmo, False)


def mu_gm_density(g, m, z):
    """Density ``(1-|z|^2)^n |Y^m g|^2`` of the measure attached to ``g``, per dlambda.

    Returned in Lebesgue units, i.e. already multiplied by the invariant weight.
    """
    comps = _components(g)
    n = comps[0].n
    Z = as_points(z, n, interior=True)
    a = 1.0 - sqnorm(Z)
    out = a ** n * _y_sq(g, Z, m) * lambda_weight(Z)
    single = np.ndim(z) == 0 or (np.ndim(z) == 1 and n > 1)
    return float(out[0]) if single else out


# -- tent-chain annuli --------------------------------------------------------

class AnnulusReport(NamedTuple):
    ratio_min: float
    ratio_max: float
    count: int
    mobius_min: float
    mobius_max: float
    root_delta_min: float
    root_delta_max: float


def _sample_tent_region(rng, zeta_outer, zeta_inner, count, n):
    """Points of ``S(zeta_outer)`` outside ``S(zeta_inner)`` (``None`` for no hole)."""
    outer = Tent(zeta_outer)
    inner = Tent(zeta_inner) if zeta_inner is not None else None
    d = outer.direction
    U = unitary_to(d)
    s = outer.radius
    R = 2.0 * outer.size / s
    c = 1.0 / s
    half = count // 2
    # uniform in the bounding square of the disc |c - u| < R
    u1 = (c - R + 2 * R * rng.random(half)) + 1j * R * (2 * rng.random(half) - 1)
    # log-uniform depth below the sphere
    t = np.exp(rng.uniform(np.log(1e-9), np.log(min(R, 1.0)), count - half))
    ang = rng.uniform(-2 * R, 2 * R, count - half)
    u2 = (1.0 - t) * np.exp(1j * ang)
    u = np.concatenate([u1, u2])
    u = u[np.abs(u) < 1.0]
    if n == 1:
        local = u[:, None]
    else:
        rest = rng.standard_normal((len(u), n - 1)) + 1j * rng.standard_normal((len(u), n - 1))
        rest /= np.sqrt(sqnorm(rest))[:, None]
        rad = np.sqrt(1.0 - np.abs(u) ** 2) * rng.random(len(u)) ** (1.0 / (2 * n - 2))
        local = np.concatenate([u[:, None], rest * rad[:, None]], axis=1)
    pts = local @ U.T
    keep = tent_contains(outer, pts)
    if inner is not None:
        keep &= ~tent_contains(inner, pts)
    return pts[keep]


def annulus_check(zeta, k, samples=4000, seed=0):
    """Extremes of ``|1 - <w, zeta>| / (2^k (1-|zeta|))`` over the k-th chain annulus.

    ``w`` is drawn from ``S(zeta_k)`` minus ``S(zeta_(k-1))``. Also reported:
    ``|phi_w(z)|`` and ``sqrt(Delta(w, z)) / (2^k delta)`` for ``z`` in ``S(zeta)``.
    """
    from .ball import tent_chain

    t, d = annulus_bounds(zeta, k)
    n = t.n
    rng = check_random_state(seed)
    W = _sample_tent_region(rng, tent_chain(t, k), tent_chain(t, k - 1), samples, n)
    if len(W) == 0:
        raise ValueError("annulus sample is empty")
    Z = _sample_tent_region(rng, t.apex, None, max(64, samples // 8), n)
    if len(Z) == 0:
        raise ValueError("tent sample is empty")
    scale = 2.0 ** k * d
    ratio = np.abs(1.0 - pairing(W, t.apex)) / scale
    j = rng.integers(0, len(Z), len(W))
    mob = mobius_magnitude(W, Z[j])
    rd = np.sqrt(delta(W, Z[j])) / scale
    return AnnulusReport(float(ratio.min()), float(ratio.max()), len(W),
                         float(mob.min()), float(mob.max()),
                         float(rd.min()), float(rd.max()))


# -- multilinear estimate -----------------------------------------------------

class MultilinearReport(NamedTuple):
    lhs: float
    g_side: float
    h_side: float
    ratio: float


def sup_norm(g, n, count=4096, seed=0):
    """Sampled boundary maximum of ``|g|`` (l2 over components)."""
    rng = check_random_state(seed)
    X = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    X /= np.sqrt(sqnorm(X))[:, None]
    if n == 1:
        X = np.concatenate([X, np.exp(2j * np.pi * np.arange(count) / count)[:, None]])
    vals = np.stack([c(X) for c in _components(g)], axis=-1)
    return float(np.sqrt(np.max(np.sum(np.abs(vals) ** 2, axis=-1))))


def besov_surrogate(h, p=2.0, sigma=None, resolution=64):
    """``|h(0)| + (int |(1-|z|^2)^sigma Y^1 h|^p dlambda)^(1/p)``."""
    n = h.n
    sigma = n / 2 if sigma is None else sigma
    rule = quad_ball(n, resolution)
    a = 1.0 - sqnorm(rule.nodes)
    dens = (a ** sigma * np.sqrt(_y_sq(h, rule.nodes, 1))) ** p * lambda_weight(rule.nodes)
    if diverges(rule.shell_sums(dens)):
        return np.inf
    mass = float(rule.integrate(dens))
    return float(np.abs(h(np.zeros((1, n)))[0])) + mass ** (1.0 / p)


def multilinear_lhs(g_list, h, alpha, p=2.0, sigma=None, resolution=64):
    """``int (1-|z|^2)^(p sigma) prod |Y^(alpha_j) g_j|^p |Y^(alpha_0) h|^p dlambda``."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != len(g_list) + 1:
        raise ValueError("alpha needs one entry for h and one per g")
    if sum(alpha) < 1 or min(alpha) < 0:
        raise ValueError("alpha must be nonnegative with |alpha| >= 1")
    n = h.n
    sigma = n / 2 if sigma is None else sigma
    rule = quad_ball(n, resolution)
    Z = rule.nodes
    a = 1.0 - sqnorm(Z)
    dens = a ** (p * sigma) * _y_sq(h, Z, alpha[0]) ** (p / 2)
    for gj, aj in zip(g_list, alpha[1:]):
        dens = dens * _y_sq(gj, Z, aj) ** (p / 2)
    dens = dens * lambda_weight(Z)
    if diverges(rule.shell_sums(dens)):
        warnings.warn("multilinear integrand diverges at the sphere", DivergenceWarning)
        return np.inf
    return float(rule.integrate(dens))


def multilinear_harness(g_list, h, alpha, p=2.0, sigma=None, resolution=64):
    """Ratio of the multilinear integral to ``prod ||g_j||_inf^p * B(h)^p``.

    ``B(h)`` is :func:`besov_surrogate`, which plays the role of the H^2
    norm of ``h`` when ``p = 2`` and ``sigma = n/2``.
    """
    n = h.n
    lhs = multilinear_lhs(g_list, h, alpha, p, sigma, resolution)
    g_side = float(np.prod([sup_norm(g, n) ** p for g in g_list]))
    h_side = besov_surrogate(h, p, sigma, resolution) ** p
    den = g_side * h_side
    return MultilinearReport(lhs, g_side, h_side, lhs / den if den > 0 else np.nan)


__all__ = [
    "DivergenceWarning", "TentGrid", "sphere_directions", "bmo_grid",
    "NormReport", "cm_norm", "wx_norm", "bmo_norm", "BmoaRatio",
    "bmoa_ratio", "mu_gm_density", "AnnulusReport", "annulus_check",
    "MultilinearReport", "sup_norm", "besov_surrogate", "multilinear_lhs",
    "multilinear_harness",
]
