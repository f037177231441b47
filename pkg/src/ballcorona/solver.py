"""Integral solutions of dbar on the ball and the corona pipeline built on them.

For a dbar-closed ``(0, q+1)``-form ``f = sum_M f_M dzbar_M`` the solution
operator ``u = c_q int f ^ C(., z)`` reduces to a signed sum over the
splits ``nu = (i, J, L)`` of the coordinate set: the only component of
``f`` that survives the wedge with ``dwbar_J`` is ``M = {i} u L``, and
moving ``dzbar_L`` to the front contributes ``(-1)^(qn)``. Hence

    u_L(z) = c_q sum_{nu : L_nu = L} s_nu int f_M(w) (-1)^q Phi(w, z)
             (conj(w_i) - conj(z_i)) dV(w)

with ``s_nu = (-1)^(qn) sign(M, J) sgn(nu)``. The conversion from the
top form in ``w`` to Lebesgue measure is a constant and is absorbed
into ``c_q``, which is fitted from exactly known pairs ``(u0, dbar u0)``.
"""

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator

from .ball import sqnorm
from .holo import HoloPoly, VecHoloPoly, dbar_probe_batch
from .kernels import amel_factor, perms, phi
from .koszul import CoronaData, omega, omega01
from .quadrature import quad_ball
from .tensor import AltTensor, contract_g, increasing, sort_sign
from .validation import as_point, as_points


class ClosednessError(ValueError):
    """The right-hand side is not dbar-closed to the configured tolerance."""


# -- exact polynomial forms ---------------------------------------------------

class PolyForm:
    """``(0, q)``-form with coefficients polynomial in ``z`` and ``conj(z)``.

    Terms are ``c z^alpha conj(z)^beta dzbar_L`` stored as
    ``{(alpha, beta, L): c}`` with increasing ``L``.
    """

    def __init__(self, n, q, terms=None):
        self.n, self.q = n, q
        self.terms = {}
        for (alpha, beta, L), c in (terms or {}).items():
            s, L = sort_sign(L)
            if s == 0 or c == 0:
                continue
            key = (tuple(alpha), tuple(beta), L)
            self.terms[key] = self.terms.get(key, 0) + s * complex(c)

    @property
    def keys(self):
        return increasing(self.q, self.n)

    def __call__(self, Z):
        P = as_points(Z, self.n)
        keys = self.keys
        out = np.zeros((len(P), len(keys)), dtype=complex)
        for (alpha, beta, L), c in self.terms.items():
            mono = np.prod(P ** np.array(alpha) * np.conj(P) ** np.array(beta), axis=1)
            out[:, keys.index(L)] += c * mono
        return out

    def dbar(self):
        """Exact ``dbar`` with the new ``dzbar_j`` placed in front."""
        terms = {}
        for (alpha, beta, L), c in self.terms.items():
            for j in range(self.n):
                if beta[j] == 0 or j in L:
                    continue
                b = list(beta)
                b[j] -= 1
                s, K = sort_sign((j,) + L)
                key = (alpha, tuple(b), K)
                terms[key] = terms.get(key, 0) + s * c * beta[j]
        return PolyForm(self.n, self.q + 1, terms)

    def scale(self, c):
        return PolyForm(self.n, self.q, {k: v * c for k, v in self.terms.items()})

    @classmethod
    def zero(cls, n, q):
        return cls(n, q)


def calibration_pairs(n, q):
    """Three ``(0, q)``-forms ``u0`` whose dbar is known exactly.

    For ``n = 1`` these give the right-hand sides ``zbar``, ``zbar^2`` and
    ``z zbar`` (times ``dzbar``).
    """
    j = q
    L = tuple(range(q))
    e = [0] * n
    e2, e3 = list(e), list(e)
    e2[j], e3[j] = 2, 3
    a1 = list(e)
    a1[j] = 1
    zero = tuple(e)
    return [
        PolyForm(n, q, {(zero, tuple(e2), L): 0.5}),
        PolyForm(n, q, {(zero, tuple(e3), L): 1.0 / 3.0}),
        PolyForm(n, q, {(tuple(a1), tuple(e2), L): 0.5}),
    ]


def witness_grid(n, count=12, radius=0.7, seed=0):
    """Deterministic interior points used by calibration and closedness checks."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    g /= np.sqrt(sqnorm(g))[:, None]
    r = radius * (0.15 + 0.85 * (np.arange(count) + 0.5) / count)
    return g * r[:, None]


# -- the integral operator ----------------------------------------------------

@lru_cache(maxsize=None)
def _split_table(n, q):
    Lkeys = increasing(q, n)
    Mkeys = increasing(q + 1, n)
    table = []
    for p in perms(n, q):
        M = tuple(sorted((p.i,) + p.L))
        sign_mj, _ = sort_sign(M + p.J)
        total = (-1) ** q * (-1) ** (q * n) * sign_mj * p.sign
        table.append((p.i, Lkeys.index(p.L), Mkeys.index(M), total))
    return tuple(table)


def kernel_integral(F, z, n, q, resolution, *, order=None, kernel="plain",
                    s=None, amel_constants=None):
    """``int f ^ C(., z)`` without the constant ``c_q``.

    ``F`` maps nodes ``(K, n)`` to values ``(K, ..., nM)`` over the
    increasing ``(q+1)``-keys; the result has shape ``(..., nL)``.
    """
    z = as_point(z, n)
    rule = quad_ball(n, resolution, singular_target=z, order=order)
    W = rule.nodes
    vals = np.asarray(F(W))
    if vals.shape[0] != len(W):
        raise ValueError("field returned the wrong number of values")
    base = phi(n, q, W, z) * rule.weights
    if kernel == "amel":
        base = base * amel_factor(n, s if s is not None else n + 1, q, W, z, amel_constants)
    elif kernel != "plain":
        raise ValueError(f"unknown kernel {kernel!r}")
    nL = len(increasing(q, n))
    out = np.zeros(vals.shape[1:-1] + (nL,), dtype=complex)
    for i, li, mi, sign in _split_table(n, q):
        kern = sign * base * (np.conj(W[:, i]) - np.conj(z[i]))
        out[..., li] += np.tensordot(kern, vals[..., mi], axes=(0, 0))
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("quadrature produced non-finite values")
    return out


def kernel_integral_batch(F, Z, n, q, resolution, **kw):
    P = as_points(Z, n)
    return np.stack([kernel_integral(F, z, n, q, resolution, **kw) for z in P])


def form_dbar_values(n, q, dU):
    """Assemble ``dbar u`` (keys of length q+1) from partials ``dU[..., L, j]``."""
    Lkeys = increasing(q, n)
    Mkeys = increasing(q + 1, n)
    out = np.zeros(dU.shape[:-2] + (len(Mkeys),), dtype=complex)
    for li, L in enumerate(Lkeys):
        for j in range(n):
            if j in L:
                continue
            s, K = sort_sign((j,) + L)
            out[..., Mkeys.index(K)] += s * dU[..., li, j]
    return out


def closedness_residual(F, n, q1, grid=None, h=1e-4):
    """Max ``|dbar f|`` for a ``(0, q1)``-form field at the witness grid."""
    if q1 >= n:
        return 0.0
    grid = witness_grid(n) if grid is None else as_points(grid, n)
    dF = dbar_probe_batch(F, grid, h)  # (M, ..., nM, n)
    return float(np.max(np.abs(form_dbar_values(n, q1, dF)))) if dF.size else 0.0


@dataclass
class Calibration:
    n: int
    q: int
    resolution: int
    kappa: complex
    per_pair: list = field(default_factory=list)
    residual: float = 0.0

    @property
    def c_q(self):
        return 1.0 / self.kappa


def calibrate_cq(n, q, resolution, *, kernel="plain", s=None, amel_constants=None,
                 order=None, grid=None, h=1e-4, tol=1e-2):
    """Fit ``kappa`` in ``dbar int f0 ^ C = kappa f0`` and return the calibration.

    ``c_q = 1 / kappa``. The per-pair fits are kept so callers can check
    that the constant does not depend on the right-hand side.
    """
    if not 0 <= q <= n - 1:
        raise ValueError(f"q must lie in [0, {n - 1}]")
    pairs = calibration_pairs(n, q)
    rhs = [u.dbar() for u in pairs]
    grid = witness_grid(n) if grid is None else as_points(grid, n)

    def stacked(W):
        return np.stack([f(W) for f in rhs], axis=1)  # (K, npairs, nM)

    def integral(P):
        return kernel_integral_batch(stacked, P, n, q, resolution, order=order,
                                     kernel=kernel, s=s, amel_constants=amel_constants)

    dI = dbar_probe_batch(integral, grid, h)  # (M, npairs, nL, n)
    lhs = form_dbar_values(n, q, dI)   # (M, npairs, nM)
    target = stacked(grid)                   # (M, npairs, nM)
    per_pair = []
    for k in range(len(pairs)):
        a, b = lhs[:, k].ravel(), target[:, k].ravel()
        per_pair.append(complex(np.vdot(b, a) / np.vdot(b, b)))
    a, b = lhs.ravel(), target.ravel()
    kappa = complex(np.vdot(b, a) / np.vdot(b, b))
    if abs(kappa) < 1e-12:
        raise np.linalg.LinAlgError("calibration constant is numerically zero")
    resid = float(np.linalg.norm(a - kappa * b) / np.linalg.norm(kappa * b))
    if resid > tol:
        raise RuntimeError(f"calibration fit residual {resid:.3g} exceeds {tol:g}")
    return Calibration(n, q, resolution, kappa, per_pair, resid)


@lru_cache(maxsize=32)
def _cached_calibration(n, q, resolution, kernel, s, consts, order):
    return calibrate_cq(n, q, resolution, kernel=kernel, s=s,
                        amel_constants=None if consts is None else np.array(consts),
                        order=order)


def _as_field(rhs, n):
    if isinstance(rhs, PolyForm):
        return rhs
    if callable(rhs):
        return rhs
    raise TypeError("rhs must be a PolyForm or a callable field")


class DbarSolver(BaseEstimator):
    """Solve ``dbar u = f`` for a dbar-closed ``(0, q+1)``-form ``f``.

    Parameters
    ----------
    n, q : int
        Dimension and degree of the solution.
    resolution : int
        Quadrature resolution of the target-centred rules.
    kernel : {"plain", "amel"}
        Plain or ameliorated kernel (the latter with parameter ``s``).
    c_q : complex or None
        Fixed constant; fitted in :meth:`fit` when None.
    calibration_resolution : int or None
        Resolution of the calibration integrals (default: ``resolution``).
        ``c_q`` does not depend on the rule, so a coarse solver can borrow
        a constant fitted on a finer one.
    closed_tol : float
        Gate on ``|dbar f|`` at the witness grid.

    Attributes
    ----------
    c_q_ : complex
    calibration_ : Calibration or None
    """

    def __init__(self, n=1, q=0, resolution=256, order=None, kernel="plain", s=None,
                 amel_constants=None, c_q=None, calibration_resolution=None,
                 closed_tol=1e-4, h=1e-4):
        self.n = n
        self.q = q
        self.resolution = resolution
        self.calibration_resolution = calibration_resolution
        self.order = order
        self.kernel = kernel
        self.s = s
        self.amel_constants = amel_constants
        self.c_q = c_q
        self.closed_tol = closed_tol
        self.h = h

    def _kw(self):
        return dict(order=self.order, kernel=self.kernel, s=self.s,
                    amel_constants=self.amel_constants)

    def calibrate(self):
        if self.c_q is not None:
            self.c_q_ = complex(self.c_q)
            self.calibration_ = None
            return self
        consts = None if self.amel_constants is None else tuple(self.amel_constants)
        res = self.calibration_resolution or self.resolution
        self.calibration_ = _cached_calibration(self.n, self.q, res,
                                                self.kernel, self.s, consts, self.order)
        self.c_q_ = self.calibration_.c_q
        return self

    def fit(self, rhs=None, y=None):
        """Check closedness of the right-hand side, then calibrate ``c_q``."""
        self.rhs_ = None if rhs is None else _as_field(rhs, self.n)
        if self.rhs_ is not None:
            self.closedness_ = closedness_residual(self.rhs_, self.n, self.q + 1, h=self.h)
            if self.closedness_ > self.closed_tol:
                raise ClosednessError(
                    f"|dbar f| = {self.closedness_:.3g} exceeds {self.closed_tol:g}")
        return self.calibrate()

    def solve(self, rhs, Z):
        """Solution values at ``Z``: shape ``(M, ..., nL)``."""
        if not hasattr(self, "c_q_"):
            self.calibrate()
        P = as_points(Z, self.n, interior=True)
        return self.c_q_ * kernel_integral_batch(_as_field(rhs, self.n), P, self.n,
                                                 self.q, self.resolution, **self._kw())

    def predict(self, Z):
        if getattr(self, "rhs_", None) is None:
            raise RuntimeError("call fit(rhs) before predict")
        return self.solve(self.rhs_, Z)

    def dbar_residual(self, Z, exact_rhs=None, h=None):
        """``|dbar u - f|`` at points (max over components)."""
        h = h or self.h
        f = self.rhs_ if exact_rhs is None else exact_rhs
        P = as_points(Z, self.n)
        dU = dbar_probe_batch(self.predict, P, h)
        got = form_dbar_values(self.n, self.q, dU)
        want = np.asarray(f(P))
        return np.max(np.abs(got - want).reshape(len(P), -1), axis=1)


def dbar_solve(rhs, z, n=1, q=0, resolution=256, **kw):
    """Functional form: one solution value at ``z`` with a calibrated constant."""
    return DbarSolver(n=n, q=q, resolution=resolution, **kw).calibrate().solve(rhs, as_point(z, n)[None])[0]


# -- corona pipeline ----------------------------------------------------------

def tensor_to_array(T, slot_keys, form_keys, count):
    out = np.zeros((count, len(slot_keys), len(form_keys)), dtype=complex)
    for si, I in enumerate(slot_keys):
        for fi, L in enumerate(form_keys):
            v = T.get(I, L)
            if np.ndim(v) or v != 0:
                out[:, si, fi] = v
    return out


def array_to_tensor(arr, r, q, N, n):
    T = AltTensor(r, q, N, n)
    for si, I in enumerate(increasing(r, N)):
        for fi, L in enumerate(increasing(q, n)):
            T.add(I, L, arr[:, si, fi])
    return T


class CoronaSolver(BaseEstimator):
    """Solve ``sum f_j g_j = h`` with holomorphic ``f`` via the Koszul chain.

    ``Gamma_q`` (rank ``q+2``, degree ``q``) solves
    ``dbar Gamma_q = Omega_(q+1) h - Lambda_g Gamma_(q+1)`` from the top
    level down, and ``f = Omega_0^1 h - Lambda_g Gamma_0``. Levels below
    the top evaluate the higher ``Gamma`` at quadrature nodes with the
    coarser ``inner_resolution``. All levels share one calibration
    resolution (``calibration_resolution``, default ``resolution``).
    """

    def __init__(self, resolution=256, inner_resolution=24, order=None, kernel="plain",
                 s=None, amel_constants=None, calibration_resolution=None,
                 closed_tol=1e-4, h=1e-4):
        self.resolution = resolution
        self.inner_resolution = inner_resolution
        self.calibration_resolution = calibration_resolution
        self.order = order
        self.kernel = kernel
        self.s = s
        self.amel_constants = amel_constants
        self.closed_tol = closed_tol
        self.h = h

    def fit(self, data, h):
        """``data`` is a :class:`CoronaData` or a ``VecHoloPoly``; ``h`` a HoloPoly."""
        self.data_ = data if isinstance(data, CoronaData) else CoronaData(data)
        self.h_ = h if isinstance(h, HoloPoly) else HoloPoly.constant(self.data_.n, h)
        n, N = self.data_.n, self.data_.N
        self.top_ = min(n - 1, N - 2)
        self.solvers_ = {}
        cal = self.calibration_resolution or self.resolution
        for q in range(self.top_ + 1):
            res = self.resolution if q == 0 else self.inner_resolution
            self.solvers_[q] = DbarSolver(n=n, q=q, resolution=res, order=self.order,
                                          kernel=self.kernel, s=self.s,
                                          amel_constants=self.amel_constants,
                                          calibration_resolution=cal,
                                          h=self.h).calibrate()
        self.cache_ = {}
        if self.top_ >= 0 and n > 1:
            # top right-hand side Omega_(top+1) h must be dbar-closed
            self.closedness_ = closedness_residual(
                lambda W: self._rhs(self.top_, W), n, self.top_ + 1, h=self.h)
            if self.closedness_ > self.closed_tol:
                raise ClosednessError(f"top form not closed: {self.closedness_:.3g}")
        else:
            self.closedness_ = 0.0
        return self

    def _rhs(self, q, W):
        """``Omega_(q+1) h - Lambda_g Gamma_(q+1)`` as an array ``(K, S, nM)``."""
        d = self.data_
        n, N = d.n, d.N
        W = as_points(W, n)
        slots = increasing(q + 2, N)
        mkeys = increasing(q + 1, n)
        om = omega(q + 1, d, W) * self.h_(W)
        arr = tensor_to_array(om, slots, mkeys, len(W))
        if q + 1 <= self.top_:
            upper = self._gamma(q + 1, W)  # (K, S', nM)
            T = array_to_tensor(upper, q + 3, q + 1, N, n)
            G, _ = d.values(W)
            arr = arr - tensor_to_array(contract_g(T, G), slots, mkeys, len(W))
        return arr

    def _gamma(self, q, Z):
        """``Gamma_q`` at points: ``(M, S, nL)``."""
        P = as_points(Z, self.data_.n)
        solver = self.solvers_[q]
        if q != 0:
            return solver.solve(lambda W: self._rhs(q, W), P)
        out = []
        missing = [k for k, z in enumerate(P) if z.tobytes() not in self.cache_]
        if missing:
            vals = solver.solve(lambda W: self._rhs(0, W), P[missing])
            for k, v in zip(missing, vals):
                self.cache_[P[k].tobytes()] = v
        for z in P:
            out.append(self.cache_[z.tobytes()])
        return np.stack(out)

    def predict(self, Z):
        """Corona solution ``f`` at points: shape ``(M, N)``."""
        d = self.data_
        P = as_points(Z, d.n, interior=True)
        base = omega01(d, P) * self.h_(P)
        f = np.stack([np.asarray(base.get((j,))) for j in range(d.N)], axis=1)
        if self.top_ >= 0:
            gam = self._gamma(0, P)[:, :, 0]  # degree-0 forms
            T = array_to_tensor(gam[:, :, None], 2, 0, d.N, d.n)
            G, _ = d.values(P)
            lam = contract_g(T, G)
            f = f - np.stack([np.broadcast_to(lam.get((j,)), (len(P),)) for j in range(d.N)], axis=1)
        return f

    def residuals(self, grid, h=None):
        return residuals(self.predict, self.data_.g, self.h_, grid, h or self.h)

    def derivative(self, Z, radius=0.995, count=256):
        """Holomorphic derivative of ``f`` (n = 1) from a Taylor fit on a circle."""
        if self.data_.n != 1:
            raise NotImplementedError("series derivative is implemented for n = 1")
        key = (radius, count)
        if getattr(self, "_series", (None,))[0] != key:
            t = radius * np.exp(2j * np.pi * np.arange(count) / count)
            vals = self.predict(t[:, None])  # (count, N)
            coeffs = np.fft.fft(vals, axis=0) / count
            coeffs = coeffs[: count // 2] / radius ** np.arange(count // 2)[:, None]
            self._series = (key, coeffs)
        coeffs = self._series[1]
        P = as_points(Z, 1)[:, 0]
        k = np.arange(1, len(coeffs))
        return (P[:, None] ** (k - 1)[None, :] * k[None, :]) @ coeffs[1:]

    def export(self, grid):
        """JSON grid dump of points, f values and residuals."""
        P = as_points(grid, self.data_.n)
        f = self.predict(P)
        rep = self.residuals(P)
        return json.dumps({
            "points": [[[float(c.real), float(c.imag)] for c in z] for z in P],
            "f": [[[float(v.real), float(v.imag)] for v in row] for row in f],
            "residuals": rep,
        })


def residuals(f, g, h, grid, step=1e-4):
    """Max/mean of ``|sum f_j g_j - h|`` and of ``|dbar f_j|`` over a grid."""
    P = as_points(grid)
    F = np.asarray(f(P))
    G = g(P) if isinstance(g, VecHoloPoly) else np.asarray(g(P))
    alg = np.abs(np.sum(F * G, axis=1) - h(P))
    dF = dbar_probe_batch(f, P, step)  # (M, N, n)
    dbar = np.max(np.abs(dF).reshape(len(P), -1), axis=1)
    return {
        "algebraic_max": float(alg.max()), "algebraic_mean": float(alg.mean()),
        "dbar_max": float(dbar.max()), "dbar_mean": float(dbar.mean()),
    }


def disk_grid(count=100, radius=0.9, seed=None, n=1):
    """Deterministic interior grid: rings of points up to ``radius``."""
    if n == 1:
        rings = int(np.ceil(np.sqrt(count / 2)))
        pts = []
        per = int(np.ceil(count / rings))
        for k in range(rings):
            r = radius * (k + 1) / rings
            th = 2 * np.pi * (np.arange(per) + 0.5 * k) / per
            pts.append(r * np.exp(1j * th))
        return np.concatenate(pts)[:count, None]
    return witness_grid(n, count, radius, seed or 0)
