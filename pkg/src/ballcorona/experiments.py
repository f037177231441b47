"""Experiment cells shared by the command line and the acceptance suite.

Each function returns a list of :class:`Check` rows. ``check_id`` starts
with a family tag (``delta-mobius``, ``annulus-ratio``, ...) that names
the identity or estimate being instantiated.
"""

import json
import time
from dataclasses import dataclass, field
from math import factorial, gamma, pi

import numpy as np

from .ball import (delta, mobius_magnitude, pairing, random_ball_points,
                   random_sphere_points, sqnorm)
from .holo import HoloPoly, VecHoloPoly
from .koszul import (CoronaData, calibrate_convention, koszul_residual, norm_ratio,
                     omega, omega_direct, proportionality)
from .norms import (TentGrid, bmoa_ratio, cm_norm, multilinear_harness,
                    multilinear_lhs, wx_norm, annulus_check)
from .quadrature import quad_ball
from .solver import (CoronaSolver, DbarSolver, PolyForm, calibration_pairs,
                     calibrate_cq, disk_grid, witness_grid)
from .tabc import BOUNDED, TabcParams, tabc_region_harness


@dataclass
class Check:
    check_id: str
    params: dict
    value: float
    bound: float
    passed: bool
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def row(self, timing=True):
        return {
            "check_id": self.check_id,
            "params": json.dumps(self.params, sort_keys=True, separators=(",", ":")),
            "value": _fmt(self.value),
            "bound": _fmt(self.bound),
            "pass": "true" if self.passed else "false",
            "seconds": f"{self.seconds:.3f}" if timing else "",
        }


def _fmt(x):
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    x = float(x)
    return "inf" if np.isinf(x) else f"{x:.10g}"


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _check(check_id, params, value, bound, passed, timer=None, **extra):
    return Check(check_id, params, float(value), float(bound), bool(passed),
                 timer.seconds if timer else 0.0, extra)


# -- standard data ------------------------------------------------------------

def disk_two_gen():
    """``g = (z, 1 - 2z/3)`` on the disc."""
    return VecHoloPoly([HoloPoly(1, {(1,): 1.0}), HoloPoly(1, {(0,): 1.0, (1,): -2.0 / 3.0})])


def koszul_datasets():
    """Three polynomial corona data on the disc with N = 2 and N = 3."""
    z = HoloPoly.coordinate(1, 0)
    one = HoloPoly.constant(1, 1.0)
    return [
        VecHoloPoly([z, one - z * (2.0 / 3.0)]),
        VecHoloPoly([z * z, one * 0.5 + z * 0.25, z * (0.3 - 0.2j)]),
        VecHoloPoly([one * 0.6 - z * z * 0.3, z * 0.8, (z * z * z) * 0.5]),
    ]


def random_vec_poly(n, N, degree, rng):
    comps = []
    for _ in range(N):
        coeffs = {}
        for alpha in _multi_indices(n, degree):
            coeffs[alpha] = complex(rng.standard_normal(), rng.standard_normal()) / (1 + sum(alpha))
        comps.append(HoloPoly(n, coeffs))
    return VecHoloPoly(comps)


def _multi_indices(n, degree):
    out = []

    def rec(prefix, left):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for k in range(left + 1):
            rec(prefix + [k], left - k)

    rec([], degree)
    return out


# -- identity suite -----------------------------------------------------------

BETA_CASES = ((0, 0), (2, 0), (0, 2), (1, 2))


def identity_checks(n=1, seed=0, pairs=10_000, annulus_cases=50):
    rng = np.random.default_rng(seed)
    out = []
    with _Timer() as tm:
        W = random_ball_points(rng, pairs, n)
        Z = random_ball_points(rng, pairs, n)
        ref = np.abs(1 - pairing(W, Z)) ** 2 * mobius_magnitude(W, Z) ** 2
        err = float(np.max(np.abs(delta(W, Z) - ref)))
    out.append(_check("delta-mobius", {"n": n, "pairs": pairs}, err, 1e-12, err <= 1e-12, tm))
    with _Timer() as tm:
        err = float(np.max(np.abs(delta(W, W))))
    out.append(_check("delta-diagonal", {"n": n}, err, 1e-14, err <= 1e-14, tm))
    with _Timer() as tm:
        err = float(np.max(np.abs(delta(np.zeros(n), Z) - sqnorm(Z))))
    out.append(_check("delta-origin", {"n": n}, err, 1e-14, err <= 1e-14, tm))
    with _Timer() as tm:
        err = float(np.max(np.abs(delta(W, Z) - delta(Z, W))))
    out.append(_check("delta-symmetry", {"n": n}, err, 1e-14, err <= 1e-14, tm))
    out.extend(quadrature_checks(n))
    with _Timer() as tm:
        lo, hi = annulus_extremes(n, annulus_cases, rng)
    worst = max(hi, 1.0 / lo)
    out.append(_check("annulus-ratio", {"n": n, "cases": annulus_cases}, worst, 4.0,
                      lo >= 0.25 and hi <= 4.0, tm, ratio_min=lo, ratio_max=hi))
    out.extend(koszul_checks(n, seed))
    return out


def _beta(x, y):
    return gamma(x) * gamma(y) / gamma(x + y)


def quadrature_checks(n=1):
    out = []
    with _Timer() as tm:
        vol = quad_ball(n, 64).integrate(lambda P: np.ones(len(P)))
        err = abs(vol - pi ** n / factorial(n))
    tol = 1e-6 if n == 1 else 1e-4
    out.append(_check("ball-volume", {"n": n}, err, tol, err <= tol, tm))
    if n == 1:
        rule = quad_ball(1, 64)
        for b, c in BETA_CASES:
            with _Timer() as tm:
                r2 = sqnorm(rule.nodes)
                got = rule.integrate((1 - r2) ** b * r2 ** (c / 2))
                err = abs(got - pi * _beta(c / 2 + 1, b + 1))
            out.append(_check("quadrature-beta", {"b": b, "c": c}, err, 1e-5, err <= 1e-5, tm))
    return out


def koszul_checks(n=1, seed=0):
    out = []
    sets = [CoronaData(g) for g in koszul_datasets()] if n == 1 else [CoronaData(_n_data(n))]
    grid = disk_grid(100, 0.85) if n == 1 else witness_grid(n, 100, 0.7, seed)
    with _Timer() as tm:
        worst = max(float(np.max(koszul_residual(q, d, grid)))
                    for d in sets for q in range(n))
    out.append(_check("koszul-chain", {"n": n, "datasets": len(sets)}, worst, 1e-6,
                      worst <= 1e-6, tm))
    with _Timer() as tm:
        c = calibrate_convention()
    out.append(_check("omega-factorization", {"ell": 1}, c, -1.0, abs(c + 1.0) <= 1e-10, tm))
    with _Timer() as tm:
        spread = 0.0
        for d in sets:
            P = grid[:20]
            for ell in range(1, min(n, d.N - 1) + 1):
                r = proportionality(omega(ell, d, P), omega_direct(ell, d, P))
                spread = max(spread, float(np.max(np.abs(r - 1.0))))
    out.append(_check("omega-determinant", {"n": n}, spread, 1e-10, spread <= 1e-10, tm))
    return out


def _n_data(n):
    """Corona data in dimension n >= 2 with N = n + 1 components."""
    comps = [HoloPoly.coordinate(n, j, 0.6) for j in range(n)]
    comps.append(HoloPoly.constant(n, 0.8) - HoloPoly.coordinate(n, 0, 0.3))
    return VecHoloPoly(comps)


def annulus_extremes(n, cases, rng, samples=2000):
    """Extremes of the annulus ratio over random apexes with depth <= 1/16."""
    lo, hi = np.inf, 0.0
    for _ in range(cases):
        d = float(np.exp(rng.uniform(np.log(1e-4), np.log(1.0 / 16))))
        kmax = int(np.floor(np.log2(0.5 / d)))
        k = int(rng.integers(3, kmax + 1))
        u = random_sphere_points(rng, 1, n)[0]
        rep = annulus_check((1 - d) * u, k, samples, int(rng.integers(1 << 31)))
        lo, hi = min(lo, rep.ratio_min), max(hi, rep.ratio_max)
    return lo, hi


# -- quasi-multiplicativity ---------------------------------------------------

def quasimult_constants(Ns=(4, 8, 16), n=2, seed=0, points=200, ells=(1, 2)):
    """Fitted ``C_l = max |Omega_l|^2 / (|Omega_0^1|^2 |tilde|^(2l))`` per N."""
    rng = np.random.default_rng(seed)
    table = {}
    for N in Ns:
        g = random_vec_poly(n, N, 2, rng)
        # shift the first component so |g| stays away from zero
        g = VecHoloPoly([g[0] + 3.0] + list(g)[1:])
        d = CoronaData(g)
        P = random_ball_points(rng, points, n, 0.9)
        table[N] = {ell: float(np.max(norm_ratio(ell, d, P))) for ell in ells}
    return table


# -- dbar ---------------------------------------------------------------------

def zbar_rhs():
    """``f = conj(z) dzbar`` on the disc."""
    return PolyForm(1, 1, {((0,), (1,), (0,)): 1.0})


def dbar_checks(resolution=256, ladder=(1, 2, 4, 8, 16, 32, 64, 128, 256), floor=1e-6):
    """Residual, convergence ladder and calibration spread for ``conj(z) dzbar``.

    The ladder keeps ``c_0`` fixed at its top-resolution value so only the
    quadrature changes between rungs.
    """
    out = []
    grid = witness_grid(1, 12, 0.7)
    rhs = zbar_rhs()
    params = {"n": 1, "q": 0, "resolution": resolution, "rhs": "zbar dzbar"}
    with _Timer() as tm:
        solver = DbarSolver(n=1, q=0, resolution=resolution).fit(rhs)
        worst = float(solver.dbar_residual(grid).max())
    out.append(_check("dbar-residual", params, worst, 2e-3, worst <= 2e-3, tm))
    with _Timer() as tm:
        c = solver.c_q_
        curve = [float(DbarSolver(n=1, q=0, resolution=r, c_q=c).fit(rhs).dbar_residual(grid).max())
                 for r in ladder]
        ok = converges_by_halving(curve, floor)
    out.append(_check("dbar-convergence", {"ladder": list(ladder), "floor": floor},
                      max_step_ratio(curve, floor), 0.5, ok, tm, curve=curve))
    with _Timer() as tm:
        cal = calibrate_cq(1, 0, resolution)
        kap = np.array(cal.per_pair)
        spread = float(np.max(np.abs(kap - kap.mean())) / abs(kap.mean()))
    out.append(_check("dbar-calibration", params, spread, 1e-2, spread <= 1e-2, tm,
                      kappa=float(cal.kappa.real)))
    return out


def converges_by_halving(curve, floor):
    """Each doubling halves the residual or both values sit below the floor."""
    for a, b in zip(curve[:-1], curve[1:]):
        if a <= floor and b <= floor:
            continue
        if not b <= 0.5 * a:
            return False
    return True


def max_step_ratio(curve, floor):
    ratios = [b / a for a, b in zip(curve[:-1], curve[1:]) if not (a <= floor and b <= floor)]
    return max(ratios) if ratios else 0.0


# -- corona -------------------------------------------------------------------

def corona_checks(g, h, resolution=256, grid_count=100, radius=0.9, tol=5e-3, dbar_tol=5e-3,
                  label="corona"):
    out = []
    n = g.n
    with _Timer() as tm:
        solver = CoronaSolver(resolution=resolution).fit(g, h)
        grid = disk_grid(grid_count, radius, n=n)
        rep = solver.residuals(grid)
    params = {"n": n, "N": g.N, "resolution": resolution, "h": h.to_dict()}
    out.append(_check(f"{label}-algebraic", params, rep["algebraic_max"], tol,
                      rep["algebraic_max"] <= tol, tm))
    out.append(_check(f"{label}-dbar", params, rep["dbar_max"], dbar_tol,
                      rep["dbar_max"] <= dbar_tol))
    if n == 1:
        with _Timer() as tm:
            def field(Z):
                return (1 - sqnorm(Z))[:, None] ** 1.5 * solver.derivative(Z)
            val = cm_norm(field, TentGrid.dyadic(1), 32)
        out.append(_check(f"{label}-carleson-witness", params, val, np.inf,
                          np.isfinite(val), tm))
    return out


# -- T_(a,b,c) ----------------------------------------------------------------

def tabc_cell(a, b, c, n=1):
    t = TabcParams(a, b, c)
    with _Timer() as tm:
        res = tabc_region_harness(t, n)
    inside = t.in_region(n)
    ok = (res.verdict == BOUNDED) if inside else (res.verdict != BOUNDED)
    finite = res.curve[np.isfinite(res.curve)]
    value = float(finite.max() / np.median(finite)) if len(finite) else np.inf
    return _check("tabc-region", {"a": a, "b": b, "c": c, "n": n, "in_region": inside,
                                  "verdict": res.verdict},
                  value, 1.5, ok, tm, verdict=res.verdict, reason=res.reason)


# -- norms ----------------------------------------------------------------------

def bmoa_family(kmax=10, resolution=64):
    ratios = []
    for k in range(1, kmax + 1):
        ratios.append(bmoa_ratio(HoloPoly.monomial((k,)), resolution=resolution).lower)
    return np.array(ratios)


def polynomial_family():
    z = HoloPoly.coordinate(1, 0)
    one = HoloPoly.constant(1, 1.0)
    return [z, z * z + 0.5, _power(z, 3) * 0.7 - z * 0.2, one * 0.3 + z * 0.9, _power(z, 4)]


def wx_cm_pairs(resolution=64):
    """``(wx_norm, cm-route norm)`` for the polynomial family at ``(2, 1/2, 1)``."""
    from .holo import y_norm
    grid = TentGrid.dyadic(1)
    out = []
    for f in polynomial_family():
        wx = wx_norm(f, 2, 0.5, 1, grid, resolution)
        cm = cm_norm(lambda Z, f=f: (1 - sqnorm(Z)) ** 0.5 * y_norm(f, Z, 1), grid, resolution)
        out.append((wx, cm))
    return out


def norm_checks(resolution=64):
    out = []
    with _Timer() as tm:
        r = bmoa_family(10, resolution)
        spread = float(r.max() / r.min())
    out.append(_check("bmoa-window", {"family": "z^k, k=1..10"}, spread, 20.0, spread <= 20.0, tm,
                      ratios=r.tolist()))
    with _Timer() as tm:
        pairs = wx_cm_pairs(resolution)
        dev = max(abs(w / c - 1.0) for w, c in pairs)
    out.append(_check("weak-carleson-consistency", {"p": 2, "sigma": 0.5, "m": 1}, dev, 0.05,
                      dev <= 0.05, tm))
    return out


# -- multilinear ----------------------------------------------------------------

def multilinear_family(count=20, seed=0):
    """Members ``(g_list, h, alpha)`` on the disc with M in {1, 2} and |alpha| = 1.

    ``g_j = (1-b) + b e^(it) z^d`` with ``b`` in [0.3, 0.7] keeps every
    ``g_j`` at sup norm 1 with comparable oscillation; ``h = 1 + c z^k``.
    """
    rng = np.random.default_rng(seed)
    z = HoloPoly.coordinate(1, 0)
    members = []
    for k in range(count):
        M = 1 + k % 2
        gl = []
        for _ in range(M):
            b = rng.uniform(0.3, 0.7) * np.exp(2j * np.pi * rng.random())
            gl.append(HoloPoly.constant(1, 1 - abs(b)) + _power(z, int(rng.integers(1, 4))) * b)
        c = rng.uniform(0.5, 1.0) * np.exp(2j * np.pi * rng.random())
        h = HoloPoly.constant(1, 1.0) + _power(z, int(rng.integers(1, 4))) * c
        alpha = [0] * (M + 1)
        alpha[int(rng.integers(0, M + 1))] = 1
        members.append((gl, h, tuple(alpha)))
    return members


def _power(p, k):
    out = HoloPoly.constant(p.n, 1.0)
    for _ in range(k):
        out = out * p
    return out


def multilinear_checks(resolution=64, seed=0):
    out = []
    fam = multilinear_family(20, seed)
    gl, h, alpha = fam[1]
    with _Timer() as tm:
        c = 1.7 - 0.4j
        base = multilinear_lhs(gl, h, alpha, resolution=resolution)
        scaled = multilinear_lhs([g * c for g in gl], h, alpha, resolution=resolution)
        err_g = abs(scaled / base - abs(c) ** (2 * len(gl))) / abs(c) ** (2 * len(gl))
        scaled_h = multilinear_lhs(gl, h * c, alpha, resolution=resolution)
        err_h = abs(scaled_h / base - abs(c) ** 2) / abs(c) ** 2
    out.append(_check("multilinear-g-homogeneity", {"M": len(gl)}, err_g, 1e-10, err_g <= 1e-10, tm))
    out.append(_check("multilinear-h-homogeneity", {"M": len(gl)}, err_h, 1e-10, err_h <= 1e-10))
    with _Timer() as tm:
        ratios = np.array([multilinear_harness(g, hh, a, resolution=resolution).ratio
                           for g, hh, a in fam])
        stab = float(ratios.max() / np.median(ratios))
    out.append(_check("multilinear-stability", {"members": len(fam)}, stab, 3.0, stab < 3.0, tm,
                      ratios=ratios.tolist()))
    return out
