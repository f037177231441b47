"""Quadrature rules on the unit ball, on sphere caps and on Carleson tents.

Every rule is a product rule in polar coordinates. Points of C^n are
written ``z = c + rho * x`` with ``x`` on the unit sphere ``S^(2n-1)``.
The sphere is parametrised by ``|x_j|^2 = t_j`` (a point of the standard
simplex) and the phases ``theta_j``; in those coordinates the surface
measure is ``2^(1-n) dt_1 ... dt_(n-1) dtheta_1 ... dtheta_n``.

Radial integrals use composite Gauss-Legendre panels graded
geometrically toward the endpoints that carry singular behaviour: the
sphere (weights like ``(1 - |w|^2)^b``) and, for target-centred rules,
the target itself. Panel levels are recorded per node so callers can
test whether the dyadic shells of an integral are shrinking.
"""

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, pi

import numpy as np

from .validation import as_point, check_dimension

DEFAULT_ORDER = 10


@lru_cache(maxsize=None)
def _gauss01(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def graded_gauss(a, b, order, levels_left=0, levels_right=0, uniform=1):
    """Composite Gauss-Legendre rule on ``[a, b]``.

    The interval is split into a left graded part, ``uniform`` equal
    middle panels and a right graded part. A graded part with ``L``
    levels has panels whose widths halve toward the endpoint; the last
    panel touching the endpoint has the width of its neighbour.

    Returns
    -------
    x, w : ndarray
        Nodes and weights.
    left, right : ndarray of int
        Level of the panel each node belongs to on the left/right graded
        parts (``0`` = coarsest), ``-1`` outside that part.
    """
    gx, gw = _gauss01(order)
    length = b - a
    if length <= 0:
        empty = np.zeros(0)
        return empty, empty, np.zeros(0, int), np.zeros(0, int)
    quarter = 0.25 if (levels_left and levels_right) else 0.5
    # breakpoints measured as fractions of [a, b]
    panels = []
    if levels_left:
        edges = [quarter * 2.0 ** -k for k in range(levels_left + 1)] + [0.0]
        edges = edges[::-1]
        for k in range(len(edges) - 1):
            lev = levels_left - k
            panels.append((edges[k], edges[k + 1], lev, -1))
        lo = quarter
    else:
        lo = 0.0
    hi = 1.0 - quarter if levels_right else 1.0
    mid = np.linspace(lo, hi, uniform + 1)
    for k in range(uniform):
        panels.append((mid[k], mid[k + 1], -1, -1))
    if levels_right:
        edges = [1.0 - quarter * 2.0 ** -k for k in range(levels_right + 1)] + [1.0]
        for k in range(len(edges) - 1):
            panels.append((edges[k], edges[k + 1], -1, min(k, levels_right)))
    xs, ws, ls, rs = [], [], [], []
    for p0, p1, lv, rv in panels:
        h = (p1 - p0) * length
        xs.append(a + p0 * length + h * gx)
        ws.append(h * gw)
        ls.append(np.full(order, lv))
        rs.append(np.full(order, rv))
    return (np.concatenate(xs), np.concatenate(ws),
            np.concatenate(ls), np.concatenate(rs))


def _periodic(m):
    theta = 2.0 * pi * (np.arange(m) + 0.5) / m
    return theta, np.full(m, 2.0 * pi / m)


@lru_cache(maxsize=None)
def _sphere_rule_cached(n, m):
    """Rule for the surface measure of ``S^(2n-1)`` in C^n."""
    # simplex part: points t on {t_j >= 0, sum t_j = 1} and weights of dt
    if n == 1:
        T = np.ones((1, 1))
        tw = np.ones(1)
    elif n == 2:
        u, uw = _gauss01(m)
        T = np.stack([u, 1.0 - u], axis=1)
        tw = uw
    elif n == 3:
        u, uw = _gauss01(m)
        U, V = np.meshgrid(u, u, indexing="ij")
        UW, VW = np.meshgrid(uw, uw, indexing="ij")
        U, V, UW, VW = U.ravel(), V.ravel(), UW.ravel(), VW.ravel()
        T = np.stack([U, (1 - U) * V, (1 - U) * (1 - V)], axis=1)
        tw = UW * VW * (1 - U)
    else:
        raise ValueError(f"sphere rule not implemented for n={n}")
    theta, thw = _periodic(m if n > 1 else max(m, 1))
    grids = np.meshgrid(*([theta] * n), indexing="ij")
    wgrids = np.meshgrid(*([thw] * n), indexing="ij")
    phases = np.stack([np.exp(1j * g.ravel()) for g in grids], axis=1)
    pw = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    X = np.sqrt(T)[:, None, :] * phases[None, :, :]
    W = tw[:, None] * pw[None, :] * 2.0 ** (1 - n)
    return X.reshape(-1, n), W.ravel()


def sphere_rule(n, m):
    """Nodes and weights on ``S^(2n-1)``; weights sum to ``2 pi^n / (n-1)!``."""
    X, W = _sphere_rule_cached(n, m)
    return X.copy(), W.copy()


def ball_volume(n):
    return pi ** n / factorial(n)


def sphere_area(n):
    return 2.0 * pi ** n / factorial(n - 1)


@dataclass
class QuadratureRule:
    """Weighted node set over (a subset of) the ball.

    ``weights`` are in Lebesgue volume units. ``boundary_level`` and
    ``target_level`` give, per node, the level of the graded radial
    panel it sits in (``-1`` when not in a graded part).
    """

    nodes: np.ndarray
    weights: np.ndarray
    singular_target: np.ndarray = None
    boundary_level: np.ndarray = field(default=None, repr=False)
    target_level: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=complex)
        if self.nodes.ndim == 1:
            self.nodes = self.nodes[:, None]
        self.weights = np.asarray(self.weights, dtype=float)
        m = len(self.weights)
        if self.boundary_level is None:
            self.boundary_level = np.full(m, -1)
        if self.target_level is None:
            self.target_level = np.full(m, -1)

    @property
    def n(self):
        return self.nodes.shape[1]

    def __len__(self):
        return len(self.weights)

    def integrate(self, f):
        """Integrate values at the nodes, or a callable evaluated on them."""
        values = f(self.nodes) if callable(f) else np.asarray(f)
        return np.tensordot(self.weights, values, axes=(0, 0))

    def shell_sums(self, values, which="boundary"):
        """Per-level sums of ``|weights * values|`` on the graded panels."""
        levels = self.boundary_level if which == "boundary" else self.target_level
        vals = np.abs(np.asarray(values))
        if vals.ndim > 1:
            vals = vals.reshape(len(self.weights), -1).sum(axis=1)
        top = levels.max()
        if top < 0:
            return np.zeros(0)
        contrib = self.weights * vals
        return np.array([contrib[levels == k].sum() for k in range(top + 1)])

    def restrict(self, mask):
        return QuadratureRule(self.nodes[mask], self.weights[mask],
                              self.singular_target,
                              self.boundary_level[mask],
                              self.target_level[mask])

    def to_json(self):
        data = {
            "n": int(self.n),
            "nodes": [[[float(c.real), float(c.imag)] for c in p]
                      if self.n > 1 else [float(p[0].real), float(p[0].imag)]
                      for p in self.nodes],
            "weights": [float(w) for w in self.weights],
        }
        if self.singular_target is not None:
            data["singular_target"] = [[float(c.real), float(c.imag)]
                                       for c in self.singular_target]
        return json.dumps(data)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        n = int(data.get("n", 1))
        raw = np.asarray(data["nodes"], dtype=float)
        if n == 1 and raw.ndim == 2:
            raw = raw[:, None, :]
        nodes = raw[..., 0] + 1j * raw[..., 1]
        target = data.get("singular_target")
        if target is not None:
            t = np.asarray(target, dtype=float)
            target = t[:, 0] + 1j * t[:, 1]
        return cls(nodes, np.asarray(data["weights"]), target)


def default_levels(resolution):
    # two extra levels per doubling keeps (1 - r)^b, b > -1, converging
    # at least linearly in the resolution
    return max(2, 2 * int(np.ceil(np.log2(max(resolution, 2)))) - 6)


def _angular_count(n, resolution):
    if n == 1:
        return max(1, int(resolution))
    if n == 2:
        return max(4, int(round(resolution / 8)))
    return max(3, int(round(resolution / 32)))


def quad_ball(n, resolution, singular_target=None, *, order=None,
              levels=None):
    """Quadrature rule over the ball ``B_n``.

    Parameters
    ----------
    n : int
        Complex dimension (1, 2 or 3).
    resolution : int
        Angular node count per circle for ``n = 1``; for larger ``n`` the
        per-angle count is scaled down (``resolution / 8`` for ``n = 2``,
        ``resolution / 32`` for ``n = 3``) to keep the product rule size
        comparable.
    singular_target : array_like, optional
        When given, the rule is built in polar coordinates centred at the
        target, so that a radial Jacobian ``rho^(2n-1)`` absorbs kernel
        singularities of order ``|w - z|^(1-2n)``; radial panels are
        graded dyadically toward the target and toward the sphere.
    order : int
        Gauss-Legendre order per radial panel.
    levels : int
        Number of graded panel levels at each graded end.
    """
    check_dimension(n)
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    order = order or DEFAULT_ORDER
    levels = default_levels(resolution) if levels is None else levels
    m = _angular_count(n, resolution)
    X, XW = _sphere_rule_cached(n, m)
    if singular_target is None:
        r, rw, _, rlev = graded_gauss(0.0, 1.0, order, 0, levels, uniform=2)
        nodes = (r[:, None, None] * X[None, :, :]).reshape(-1, n)
        weights = ((rw * r ** (2 * n - 1))[:, None] * XW[None, :]).ravel()
        blev = np.repeat(rlev, len(XW))
        return QuadratureRule(nodes, weights, None, blev, None)
    z = as_point(singular_target, n)
    if np.sum(np.abs(z) ** 2) >= 1.0:
        raise ValueError("singular target must be interior")
    rho_max = _exit_distance(z, X)
    r, rw, rlev_in, rlev_out = graded_gauss(0.0, 1.0, order, levels, levels,
                                            uniform=2)
    # per direction: rho = rho_max * r
    rho = rho_max[None, :] * r[:, None]
    wts = (rw[:, None] * rho_max[None, :]) * rho ** (2 * n - 1) * XW[None, :]
    nodes = z[None, None, :] + rho[:, :, None] * X[None, :, :]
    blev = np.repeat(rlev_out, len(XW))
    tlev = np.repeat(rlev_in, len(XW))
    return QuadratureRule(nodes.reshape(-1, n), wts.ravel(), z, blev, tlev)


def _exit_distance(z, X):
    """Distance from ``z`` along each unit direction to the sphere."""
    zx = np.real(X @ np.conj(z))
    return -zx + np.sqrt(zx ** 2 + 1.0 - np.sum(np.abs(z) ** 2))


def _arc(c, rad):
    """Half-width of the arc ``{phi : |c - e^(i phi)| < rad}`` for real c > 0."""
    kappa = (1.0 + c * c - rad * rad) / (2.0 * c)
    return np.arccos(np.clip(kappa, -1.0, 1.0))


def cap_rule(n, c, rad, m, order=None, edge_levels=5):
    """Surface rule on ``{x in S^(2n-1) : |c - x_1| < rad}`` (``c > 0`` real).

    For ``n = 1`` this is an arc of the circle. For ``n >= 2`` the first
    coordinate ranges over the lens ``{|x_1| < 1} cap D(c, rad)`` with the
    fibre weight ``(1 - |x_1|^2)^(n-2)`` and a sphere rule on the fibre.
    ``edge_levels`` grades toward the inner edge of the lens, where the
    arc length has a square-root profile.
    """
    order = order or DEFAULT_ORDER
    if n == 1:
        a = _arc(c, rad)
        if a <= 0:
            return np.zeros((0, 1), complex), np.zeros(0)
        phi, pw, _, _ = graded_gauss(-a, a, order, 0, 0, uniform=max(1, m // order))
        return np.exp(1j * phi)[:, None], pw
    tmin = max(0.0, c - rad)
    if tmin >= 1.0:
        return np.zeros((0, n), complex), np.zeros(0)
    t, tw, _, _ = graded_gauss(tmin, 1.0, order, edge_levels if tmin > 0 else 0, 2,
                               uniform=max(1, m // (2 * order)))
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (t * t + c * c - rad * rad) / (2.0 * t * c)
    kappa = np.where(t > 0, kappa, -1.0)
    a = np.arccos(np.clip(kappa, -1.0, 1.0))
    gx, gw = _gauss01(max(order, m // 2))
    phi = (2.0 * gx[None, :] - 1.0) * a[:, None]
    pw = 2.0 * gw[None, :] * a[:, None]
    x1 = t[:, None] * np.exp(1j * phi)
    w1 = (t * (1.0 - t * t) ** (n - 2) * tw)[:, None] * pw
    Y, YW = _sphere_rule_cached(n - 1, max(3, m // 2))
    fib = np.sqrt(np.maximum(1.0 - t * t, 0.0))
    x1 = x1.ravel()
    w1 = w1.ravel()
    fib = np.repeat(fib, phi.shape[1])
    X = np.concatenate([
        np.broadcast_to(x1[:, None, None], (len(x1), len(YW), 1)),
        fib[:, None, None] * Y[None, :, :]], axis=2)
    W = w1[:, None] * YW[None, :]
    return X.reshape(-1, n), W.ravel()


def quad_tent(apex, resolution, *, scale=2.0, order=None, levels=None):
    """Volume rule on ``{z : |1 - <z, zeta>| < scale * (1 - |zeta|)}``.

    With the default ``scale = 2`` this is the Carleson tent of ``apex``.
    Radial panels are graded toward the sphere (levels recorded as
    ``boundary_level``) and toward the inner edge of the tent.
    """
    zeta = as_point(apex)
    n = len(zeta)
    check_dimension(n)
    s = float(np.sqrt(np.sum(np.abs(zeta) ** 2)))
    if not 0 < s < 1:
        raise ValueError("tent apex must satisfy 0 < |zeta| < 1")
    order = order or DEFAULT_ORDER
    levels = default_levels(resolution) if levels is None else levels
    R = scale * (1.0 - s)
    rmin = max(0.0, (1.0 - R) / s)
    if rmin >= 1.0:
        return QuadratureRule(np.zeros((0, n)), np.zeros(0))
    m = _angular_count(n, resolution)
    edge = default_levels(resolution) + 3
    r, rw, _, rlev = graded_gauss(rmin, 1.0, order, edge if rmin > 0 else 0,
                                  levels, uniform=2)
    U = _unitary_first(zeta / s)
    nodes, weights, blev = [], [], []
    for ri, wi, li in zip(r, rw, rlev):
        X, XW = cap_rule(n, 1.0 / (ri * s), R / (ri * s), m, order, edge)
        if len(XW) == 0:
            continue
        nodes.append(ri * (X @ U.T))
        weights.append(wi * ri ** (2 * n - 1) * XW)
        blev.append(np.full(len(XW), li))
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights),
                          None, np.concatenate(blev), None)


def quad_cap(eta, radius, resolution, order=None):
    """Surface rule on the boundary ball ``{xi : |1 - <xi, eta>| < radius^2}``."""
    eta = as_point(eta)
    n = len(eta)
    m = _angular_count(n, resolution)
    X, XW = cap_rule(n, 1.0, radius ** 2, m, order, default_levels(resolution) + 3)
    U = _unitary_first(eta / np.linalg.norm(eta))
    return X @ U.T, XW


def _unitary_first(u):
    from .ball import unitary_to
    return unitary_to(u)


def diverges(shells, threshold=0.95):
    """Decide from dyadic shell sums whether an integral diverges.

    Convergent integrands of power type ``t^beta`` with ``beta > -1``
    have consecutive shell ratios ``2^-(beta+1) < 1``; divergent ones
    have ratios of at least one. The two finest complete shells are
    compared.
    """
    shells = np.asarray(shells, dtype=float)
    if len(shells) < 3:
        return False
    a, b = shells[-3], shells[-2]
    if a <= 0:
        return b > 0
    return b / a >= threshold
