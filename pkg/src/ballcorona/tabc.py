"""The positive operators ``T_{a,b,c}`` and an empirical boundedness harness.

``T h(z) = int (1-|z|^2)^a (1-|w|^2)^b Delta(w,z)^(c/2)
|1 - <w,z>|^-(n+1+a+b+c) h(w) dV(w)``.

The harness applies ``T`` to a family of bumps concentrated in tents of
size ``delta`` near a boundary point, each normalised to unit Carleson
norm, and inspects the curve ``delta -> ||T h_delta||``. Endpoint
failures of the parameter region show up as divergent integrals rather
than as growth of the curve, so three divergence probes run first:

* the kernel diagonal (power ``c``),
* the boundary of the tent integrals of ``T h`` (power ``a``),
* the boundary of ``T`` applied to the limiting profile
  ``(1-|w|^2)^(n/p)``, the weakest power decay compatible with
  membership in the Carleson space (power ``b``).
"""

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator

from .ball import Tent, delta, lambda_weight, pairing, sqnorm
from .norms import DivergenceWarning
from .quadrature import (_exit_distance, _sphere_rule_cached, default_levels,
                         diverges, graded_gauss, quad_ball,
                         quad_tent)
from .validation import as_points, check_dimension

BOUNDED, UNBOUNDED, INCONCLUSIVE = "BOUNDED", "UNBOUNDED", "INCONCLUSIVE"


@dataclass(frozen=True)
class TabcParams:
    a: float
    b: float
    c: float
    p: float = 2.0
    sigma: float = None

    def __post_init__(self):
        if self.p <= 1:
            raise ValueError("p must exceed 1")
        if self.sigma is not None and self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def in_region(self, n):
        """Membership in ``c > -2n`` and ``-p a < -n < p (b + 1)``."""
        return self.c > -2 * n and -self.p * self.a < -n < self.p * (self.b + 1)


def _kernel(t, W, Z):
    """Kernel on broadcastable point arrays (last axis = coordinates)."""
    n = W.shape[-1]
    sw = np.sum(W.real ** 2 + W.imag ** 2, axis=-1)
    sz = np.sum(Z.real ** 2 + Z.imag ** 2, axis=-1)
    p = np.sum(W * np.conj(Z), axis=-1)
    # one exp of summed logs instead of four powers
    expo = -0.5 * (n + 1 + t.a + t.b + t.c) * np.log((1.0 - p.real) ** 2 + p.imag ** 2)
    if t.b:
        expo = expo + t.b * np.log1p(-sw)
    if t.c:
        U = Z - W
        # cancellation-free form of |1 - <w,z>|^2 - (1-|w|^2)(1-|z|^2)
        d = (1.0 - sw) * np.sum(U.real ** 2 + U.imag ** 2, axis=-1) \
            + np.abs(np.sum(U * np.conj(W), axis=-1)) ** 2
        with np.errstate(divide="ignore"):
            expo = expo + 0.5 * t.c * np.log(d)
    return (1.0 - sz) ** t.a * np.exp(expo)


def tabc_kernel(t, W, z):
    """Kernel values ``K(w, z)`` for a batch ``W`` against one target or a matching batch."""
    W = as_points(W)
    return _kernel(t, W, as_points(z, W.shape[1]))


def _values(h, X):
    v = np.asarray(h(X))
    return np.full(len(X), complex(v)) if v.ndim == 0 else v


def tabc_apply(t, h, z, resolution=64, *, n=None, levels=None, detail=False):
    """``T_{a,b,c} h`` at one point or a batch of interior points.

    Each value uses a rule centred at its target. A value whose dyadic
    shells fail to decay (at the target or at the sphere) is returned as
    ``inf`` with a :class:`DivergenceWarning`; ``detail`` also returns
    a boolean divergence mask. A 1-d ``z`` is a batch only when ``n == 1``.
    """
    if not isinstance(t, TabcParams):
        t = TabcParams(*t)
    z_arr = np.asarray(z, dtype=complex)
    single = z_arr.ndim == 0 or (z_arr.ndim == 1 and n != 1)
    Z = as_points(z_arr.reshape(1, -1) if single else z_arr, n, interior=True)
    n = Z.shape[1]
    check_dimension(n)
    lv = max(default_levels(resolution), 6) if levels is None else levels
    out = np.zeros(len(Z), dtype=complex)
    bad = np.zeros(len(Z), dtype=bool)
    for i, zi in enumerate(Z):
        rule = quad_ball(n, resolution, zi, levels=lv)
        vals = tabc_kernel(t, rule.nodes, zi) * _values(h, rule.nodes)
        if diverges(rule.shell_sums(vals, "target")) or diverges(rule.shell_sums(vals)):
            out[i] = np.inf
            bad[i] = True
        else:
            out[i] = rule.integrate(vals)
    if bad.any():
        warnings.warn(f"T_(a,b,c) integral diverges at {int(bad.sum())} point(s)",
                      DivergenceWarning, stacklevel=2)
    res = out[0] if single else out
    return (res, bad[0] if single else bad) if detail else res


class TabcOperator(BaseEstimator):
    """Estimator wrapper: ``fit`` stores the input field, ``predict`` evaluates ``T h``."""

    def __init__(self, a=1.0, b=0.0, c=0.0, resolution=64, levels=None):
        self.a = a
        self.b = b
        self.c = c
        self.resolution = resolution
        self.levels = levels

    def fit(self, h, y=None):
        self.h_ = h
        self.params_ = TabcParams(self.a, self.b, self.c)
        return self

    def predict(self, Z):
        Z = as_points(Z, interior=True)
        return tabc_apply(self.params_, self.h_, Z, self.resolution, n=Z.shape[1],
                          levels=self.levels)


# -- concentrating families ---------------------------------------------------

def bump(x):
    """Smooth bump on ``[0, 1)`` with ``bump(0) = 1``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = x < 1.0
    out[m] = np.exp(1.0 - 1.0 / (1.0 - x[m] ** 2))
    return out


def family_member(n, delta_, profile, direction=None):
    """``h(w) = (1-|w|^2)^profile bump(|1 - <w, e>| / (2 delta))``.

    Its support is exactly the tent of apex ``(1 - delta) e``.
    """
    e = np.zeros(n, complex)
    e[0] = 1.0
    e = e if direction is None else np.asarray(direction, complex)

    def h(W):
        W = as_points(W, n)
        return (1.0 - sqnorm(W)) ** profile * bump(np.abs(1.0 - pairing(W, e)) / (2 * delta_))

    return h


def _local_tents(n, delta_):
    """Tents of sizes ``delta 2^j`` (up to 1/2) centred at angles 0, s, 2s."""
    out = []
    s = delta_ / 2
    while s <= 0.5 + 1e-12:
        for k in range(3):
            apex = np.zeros(n, complex)
            apex[0] = (1.0 - s) * np.exp(1j * k * s)
            out.append(Tent(apex))
        s *= 2
    return out


def _polar_values(t, h, Zs, m, order, levels, chunk=64, shells=True):
    """Target-centred integrals for many targets; also per-target shell sums."""
    n = Zs.shape[1]
    X, XW = _sphere_rule_cached(n, m)
    r, rw, lin, lout = graded_gauss(0.0, 1.0, order, levels, levels, uniform=2)
    # rho = r^q absorbs the diagonal power rho^c, leaving an r^(2n-1) integrand
    q = 2 * n / (2 * n + min(t.c, 0.0))
    s, sw = r ** q, q * r ** (q - 1) * rw
    vals = np.zeros(len(Zs), complex)
    tshell = np.zeros((len(Zs), levels + 1))
    for s0 in range(0, len(Zs), chunk):
        Zc = Zs[s0:s0 + chunk]
        B = len(Zc)
        rho_max = np.stack([_exit_distance(z, X) for z in Zc])  # (B, m)
        rho = rho_max[:, None, :] * s[None, :, None]  # (B, R, m)
        wts = (sw[None, :, None] * rho_max[:, None, :]) * rho ** (2 * n - 1) * XW[None, None, :]
        nodes = Zc[:, None, None, :] + rho[..., None] * X[None, None, :, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            f = _kernel(t, nodes, Zc[:, None, None, :])
            f = f * _values(h, nodes.reshape(-1, n)).reshape(f.shape)
        f[~np.isfinite(f)] = 0.0
        contrib = wts * f
        vals[s0:s0 + B] = contrib.sum(axis=(1, 2))
        if not shells:
            continue
        ab = np.abs(contrib).sum(axis=2)  # (B, R)
        for k in range(levels + 1):
            tshell[s0:s0 + B, k] = ab[:, lin == k].sum(axis=1)
    return vals, tshell


def _apply_split(t, h, source, Zs, near_mask, polar):
    out = np.zeros(len(Zs), complex)
    far = ~near_mask
    if far.any():
        hw = source.weights * _values(h, source.nodes)
        Zf = Zs[far]
        res = np.zeros(len(Zf), complex)
        step = max(1, 2_000_000 // max(len(hw), 1))
        for s0 in range(0, len(Zf), step):
            Zc = Zf[s0:s0 + step]
            W = np.repeat(source.nodes[None], len(Zc), 0).reshape(-1, Zs.shape[1])
            T = np.repeat(Zc, len(hw), axis=0)
            K = tabc_kernel(t, W, T).reshape(len(Zc), len(hw))
            res[s0:s0 + len(Zc)] = K @ hw
        out[far] = res
    if near_mask.any():
        # radial grading per target, grouped by the depth each one needs
        m, order, lv = polar
        lv = np.broadcast_to(lv, near_mask.sum())
        idx = np.flatnonzero(near_mask)
        for k in np.unique(lv):
            sel = idx[lv == k]
            out[sel], _ = _polar_values(t, h, Zs[sel], m, order, int(k), shells=False)
    return out


class HarnessResult(NamedTuple):
    verdict: str
    deltas: np.ndarray
    curve: np.ndarray
    reason: str
    in_region: bool


def _weak_norm(density, tents, rules, power, normaliser):
    best, divergent = 0.0, False
    for tent, rule in zip(tents, rules):
        dens = density(rule)
        if diverges(rule.shell_sums(dens)):
            divergent = True
            continue
        best = max(best, (float(rule.integrate(dens)) / normaliser(tent)) ** (1.0 / power))
    return best, divergent


def tabc_region_harness(t, n=1, deltas=None, *, resolution=8, levels=10,
                        near_angles=16, order=6):
    """Verdict on the boundedness of ``T_{a,b,c}`` from a concentrating family.

    Returns :class:`HarnessResult`. ``curve[i]`` is ``||T h|| / ||h||`` for
    the member of size ``deltas[i]`` (deltas in decreasing order), in the
    Carleson norm for ``p = 2`` without ``sigma`` and in the weak-Carleson
    norm otherwise. Verdicts: ``UNBOUNDED`` on any divergence probe or
    when the curve grows at least 2x per decade as ``delta`` shrinks;
    ``BOUNDED`` when ``max / median < 1.5``; ``INCONCLUSIVE`` otherwise.
    """
    if not isinstance(t, TabcParams):
        t = TabcParams(*t)
    check_dimension(n)
    deltas = np.sort(np.logspace(-3, -1, 5) if deltas is None else np.asarray(deltas, float))[::-1]
    p = t.p
    crit = n / p
    profile = crit + 0.5
    region = t.in_region(n)
    m = near_angles
    e = np.zeros(n, complex)
    e[0] = 1.0

    if t.sigma is None and p == 2:
        def normaliser(tent):
            return tent.size ** n
    else:
        sig = crit if t.sigma is None else t.sigma

        def normaliser(tent):
            return (1.0 - tent.radius ** 2) ** (p * sig)

    # probe 1: diagonal of the kernel at the centre of the support
    d0 = deltas[0]
    zc = (1.0 - d0) * e
    h0 = family_member(n, d0, profile)
    rule = quad_ball(n, max(resolution, 16), zc, levels=levels)
    vals = tabc_kernel(t, rule.nodes, zc) * h0(rule.nodes)
    if diverges(rule.shell_sums(vals, "target")):
        return HarnessResult(UNBOUNDED, deltas, np.full(len(deltas), np.inf),
                             "kernel diagonal integral diverges", region)
    # probe 2: limiting profile at a point just outside the support
    src = quad_tent(zc, resolution, levels=levels, order=order)
    hc = family_member(n, d0, crit)
    z_out = (1.0 - 4 * d0) * e
    vals = tabc_kernel(t, src.nodes, z_out) * hc(src.nodes)
    if diverges(src.shell_sums(vals)):
        return HarnessResult(UNBOUNDED, deltas, np.full(len(deltas), np.inf),
                             "integral against the limiting profile diverges at the sphere", region)

    curve = np.zeros(len(deltas))
    for i, dl in enumerate(deltas):
        h = family_member(n, dl, profile)
        source = quad_tent((1.0 - dl) * e, resolution, levels=levels, order=order)
        tents = _local_tents(n, dl)
        # shells must reach well below the support depth before they are asymptotic
        rules = [quad_tent(tn.apex, resolution, order=order,
                           levels=levels + int(np.ceil(np.log2(max(tn.size / dl, 1.0)))))
                 for tn in tents]
        h_norm, _ = _weak_norm(lambda r: np.abs(h(r.nodes)) ** p * lambda_weight(r.nodes),
                               tents, rules, p, normaliser)
        nodes = np.concatenate([r.nodes for r in rules])
        near = np.abs(1.0 - pairing(nodes, e)) < 6 * dl
        depth = 1.0 - np.sqrt(sqnorm(nodes[near]))
        lv_near = np.ceil(np.log2(1.0 / depth)).astype(int) + 2
        Th = _apply_split(t, h, source, nodes, near, (m, order, lv_near))
        offsets = np.cumsum([0] + [len(r) for r in rules])
        cache = {id(r): Th[offsets[k]:offsets[k + 1]] for k, r in enumerate(rules)}
        th_norm, div = _weak_norm(lambda r: np.abs(cache[id(r)]) ** p * lambda_weight(r.nodes),
                                  tents, rules, p, normaliser)
        if div:
            curve[i:] = np.inf
            return HarnessResult(UNBOUNDED, deltas, curve,
                                 "tent integral of T h diverges at the sphere", region)
        curve[i] = th_norm / h_norm
    return HarnessResult(*_verdict(deltas, curve), region)


def _verdict(deltas, curve):
    if not np.all(np.isfinite(curve)):
        return UNBOUNDED, deltas, curve, "non-finite curve value"
    med = float(np.median(curve))
    if med > 0 and curve.max() / med < 1.5:
        return BOUNDED, deltas, curve, "max/median below 1.5"
    decades = np.diff(-np.log10(deltas))
    growth = np.diff(np.log10(curve)) / decades
    if np.all(growth >= np.log10(2.0)):
        return UNBOUNDED, deltas, curve, "curve grows at least 2x per decade"
    return INCONCLUSIVE, deltas, curve, "neither flat nor growing"


def parse_range(spec):
    """``"lo:hi:step"`` to an inclusive grid of floats."""
    try:
        lo, hi, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ValueError(f"range must look like lo:hi:step, got {spec!r}") from exc
    if not step > 0 or hi < lo:
        raise ValueError(f"range {spec!r} needs step > 0 and hi >= lo")
    count = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


__all__ = [
    "BOUNDED", "UNBOUNDED", "INCONCLUSIVE", "TabcParams", "tabc_kernel",
    "tabc_apply", "TabcOperator", "bump", "family_member",
    "HarnessResult", "tabc_region_harness", "parse_range",
]
