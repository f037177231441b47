"""Koszul-complex forms built from corona data ``g = (g_1, ..., g_N)``.

With ``|g|^2 = sum |g_j|^2`` the basic objects are the 1-tensors

* ``Omega_0^1(j)   = conj(g_j) / |g|^2``
* ``tilde(j; l)    = conj(d_l g_j) / |g|^2``  (a (0,1)-form per slot)

and the higher forms are wedge products ``W_l = Omega_0^1 ^ tilde^l``.
Normalising ``Omega_l = (-1)^(l(l+1)/2) W_l`` makes the chain
``dbar Omega_q = Lambda_g Omega_(q+1)`` hold with the final-slot
contraction of :func:`ballcorona.tensor.contract_g` and with ``dbar``
placing the new ``dzbar_j`` in front. The same combinatorics written
as determinants gives the independent formula in :func:`omega_direct`.
"""

import itertools
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .ball import random_ball_points, random_sphere_points
from .holo import VecHoloPoly, d_holo, d_op_batch, dbar_probe_batch
from .tensor import (AltTensor, contract_g, covector_tensor, increasing,
                     tensor_norm, vector_tensor, wedge)
from .validation import as_points


class CoronaViolation(ValueError):
    """Raised when ``|g|`` drops below the guard level."""


def _grid_sample(n, seed=0, count=4000):
    rng = np.random.default_rng(seed)
    inner = np.concatenate([np.zeros((1, n)), random_ball_points(rng, count, n)])
    bdry = random_sphere_points(rng, count, n)
    if n == 1:
        t = np.exp(2j * np.pi * np.arange(2048) / 2048)[:, None]
        bdry = np.concatenate([bdry, t])
    return np.concatenate([inner, bdry])


@dataclass
class CoronaData:
    """Corona data with a verified lower bound ``delta^2 <= |g|^2``.

    ``delta`` defaults to the square root of the sampled minimum of
    ``|g|^2`` over the closed ball. The sampled maximum is recorded in
    ``sup_sq``; data with ``sup_sq > 1`` are accepted (the normalisation
    ``|g| <= 1`` can be restored with :meth:`normalized`).
    """

    g: VecHoloPoly
    delta: float = None
    seed: int = 0
    inf_sq: float = field(init=False, default=None)
    sup_sq: float = field(init=False, default=None)

    def __post_init__(self):
        pts = _grid_sample(self.g.n, self.seed)
        gsq = np.sum(np.abs(self.g(pts)) ** 2, axis=-1)
        self.inf_sq = float(gsq.min())
        self.sup_sq = float(gsq.max())
        if self.inf_sq <= 1e-14:
            raise CoronaViolation("g vanishes on the closed ball")
        if self.delta is None:
            self.delta = float(np.sqrt(self.inf_sq))
        elif self.delta ** 2 > self.inf_sq * (1 + 1e-9):
            raise CoronaViolation(
                f"delta^2 = {self.delta ** 2:.6g} exceeds sampled min |g|^2 = {self.inf_sq:.6g}")

    @property
    def n(self):
        return self.g.n

    @property
    def N(self):
        return self.g.N

    def normalized(self):
        return CoronaData(self.g.scale(1.0 / np.sqrt(self.sup_sq)), seed=self.seed)

    def values(self, Z):
        """``g`` values ``(M, N)`` and ``|g|^2`` ``(M,)`` with the guard applied."""
        P = as_points(Z, self.n)
        G = self.g(P)
        gsq = np.sum(np.abs(G) ** 2, axis=-1)
        if np.any(gsq < (self.delta / 2) ** 2):
            raise CoronaViolation("|g| fell below delta/2")
        return G, gsq

    def jacobian(self, Z):
        """``d_l g_j`` at points: shape ``(M, N, n)``."""
        P = as_points(Z, self.n)
        return np.stack([np.stack([d_holo(gj, l)(P) for l in range(self.n)], axis=-1)
                         for gj in self.g], axis=-2)

    def d_jacobian(self, Z):
        """``(D g_j)_l`` at points: shape ``(M, N, n)``."""
        P = as_points(Z, self.n)
        return np.stack([d_op_batch(gj, P) for gj in self.g], axis=-2)


def omega01(d, Z):
    G, gsq = d.values(Z)
    return vector_tensor(np.conj(G) / gsq[:, None], d.n)


def omega_tilde(d, Z):
    _, gsq = d.values(Z)
    return covector_tensor(np.conj(d.jacobian(Z)) / gsq[:, None, None])


def omega_tilde_hat(d, Z):
    _, gsq = d.values(Z)
    return covector_tensor(np.conj(d.d_jacobian(Z)) / gsq[:, None, None])


def chain_sign(ell):
    return -1 if (ell * (ell + 1) // 2) % 2 else 1


def _wedge_power(base, tilde, ell):
    out = base
    for _ in range(ell):
        out = wedge(out, tilde)
    return out


def omega(ell, d, Z):
    """``Omega_ell^(ell+1)`` at the points ``Z`` (values of shape ``(M,)``)."""
    if not 0 <= ell <= d.n:
        raise ValueError(f"form degree {ell} outside [0, {d.n}]")
    if ell + 1 > d.N:
        return AltTensor(ell + 1, ell, d.N, d.n)
    W = _wedge_power(omega01(d, Z), omega_tilde(d, Z), ell)
    return W * chain_sign(ell)


def omega_hat(ell, d, Z):
    """``Omega_ell`` with every holomorphic gradient replaced by ``D g``."""
    if not 0 <= ell <= d.n:
        raise ValueError(f"form degree {ell} outside [0, {d.n}]")
    if ell + 1 > d.N:
        return AltTensor(ell + 1, ell, d.N, d.n)
    W = _wedge_power(omega01(d, Z), omega_tilde_hat(d, Z), ell)
    return W * chain_sign(ell)


def omega_direct(ell, d, Z):
    """Determinant formula for ``Omega_ell``, independent of the wedge code.

    Entry ``(K; L)`` is ``(-1)^(l(l+1)/2) l! det[conj(g_K) | conj(d_L g_K)]
    / |g|^(2(l+1))``.
    """
    G, gsq = d.values(Z)
    J = d.jacobian(Z)
    out = AltTensor(ell + 1, ell, d.N, d.n)
    if ell + 1 > d.N:
        return out
    scale = chain_sign(ell) * factorial(ell) / gsq ** (ell + 1)
    for K in increasing(ell + 1, d.N):
        for L in increasing(ell, d.n):
            cols = [np.conj(G[:, K])] + [np.conj(J[:, K, l]) for l in L]
            mat = np.stack(cols, axis=-1)  # (M, l+1, l+1)
            out.add(K, L, np.linalg.det(mat) * scale)
    return out


def omega_display(d, Z):
    """The rank-2 display ``conj(g_k d g_j - g_j d g_k) / |g|^4`` (per form slot)."""
    G, gsq = d.values(Z)
    J = d.jacobian(Z)
    out = AltTensor(2, 1, d.N, d.n)
    for j, k in increasing(2, d.N):
        for l in range(d.n):
            out.add((j, k), (l,), np.conj(G[:, k] * J[:, j, l] - G[:, j] * J[:, k, l]) / gsq ** 2)
    return out


def proportionality(A, B, tol=1e-300):
    """Ratios ``A / B`` over all entries where ``|B|`` is not negligible."""
    ratios = []
    keys = {(I, L) for I, L, _ in A.items()} | {(I, L) for I, L, _ in B.items()}
    for I, L in sorted(keys):
        a = np.asarray(A.get(I, L))
        b = np.asarray(B.get(I, L))
        mask = np.abs(b) > max(tol, 1e-12 * np.max(np.abs(b), initial=0.0))
        if np.any(mask):
            ratios.append(np.broadcast_to(a, b.shape)[mask] / b[mask])
    return np.concatenate(ratios) if ratios else np.zeros(0)


def convention_factor(ell):
    """Ratio between this package's ``Omega_ell`` and ``-1/(ell+1)`` times the wedge.

    The wedge-built form equals ``(-1)^(l(l+1)/2) Omega_l``; relative to a
    normalisation ``wedge = -Omega/(l+1)`` the factor is
    ``(-1)^(l(l+1)/2) * (-(l+1))``.
    """
    return chain_sign(ell) * (-(ell + 1))


def calibrate_convention():
    """Measure the wedge/display constant on a fixed N=2, n=1 instance."""
    from .holo import HoloPoly
    g = VecHoloPoly([HoloPoly(1, {(1,): 1.0}), HoloPoly.constant(1, 0.5)])
    d = CoronaData(g)
    Z = np.array([[0.3 + 0.1j], [-0.2 + 0.4j], [0.05j]])
    W = wedge(omega01(d, Z), omega_tilde(d, Z))
    r = proportionality(W, omega_display(d, Z))
    if np.ptp(r.real) > 1e-12 or np.max(np.abs(r.imag)) > 1e-12:
        raise RuntimeError("wedge/display ratio is not constant")
    return float(np.mean(r.real))


def dbar_form(F, Z, h=1e-4):
    """Finite-difference ``dbar`` of a tensor-valued field.

    ``F`` maps a batch of points to an :class:`AltTensor` of degree q;
    the result has degree ``q+1`` with ``dzbar_j`` placed in front.
    """
    P = as_points(Z)
    probe = F(P)
    keys = [(I, L) for I, L, _ in probe.items()]
    if not keys:
        return AltTensor(probe.r, min(probe.q + 1, probe.n), probe.N, probe.n)

    def stacked(Q):
        T = F(Q)
        return np.stack([np.broadcast_to(T.get(I, L), (len(Q),)) for I, L in keys], axis=-1)

    D = dbar_probe_batch(stacked, P, h)  # (M, nkeys, n)
    out = AltTensor(probe.r, probe.q + 1, probe.N, probe.n)
    for e, (I, L) in enumerate(keys):
        for j in range(probe.n):
            if j in L:
                continue
            out.add(I, (j,) + tuple(L), D[:, e, j])
    return out


def koszul_residual(q, d, Z, h=1e-4):
    """Max-entry residual of ``dbar Omega_q - Lambda_g Omega_(q+1)`` at points."""
    if not 0 <= q <= d.n - 1:
        raise ValueError(f"q must lie in [0, {d.n - 1}]")
    P = as_points(Z, d.n)
    r = np.sqrt(np.sum(np.abs(P) ** 2, axis=1))
    if np.any(1.0 - r <= 2 * h):
        raise ValueError("points too close to the sphere for the difference step")
    lhs = dbar_form(lambda Q: omega(q, d, Q), P, h)
    G, _ = d.values(P)
    upper = omega(q + 1, d, P)
    rhs = contract_g(upper, G)
    diff = lhs - rhs
    worst = np.zeros(len(P))
    for _, _, v in diff.items():
        worst = np.maximum(worst, np.abs(v))
    return worst


def norm_ratio(ell, d, Z, hat=False):
    """``|Omega_l|^2 / (|Omega_0^1|^2 |tilde|^(2l))`` at points."""
    om = omega_hat(ell, d, Z) if hat else omega(ell, d, Z)
    t = omega_tilde_hat(d, Z) if hat else omega_tilde(d, Z)
    num = tensor_norm(om) ** 2
    den = tensor_norm(omega01(d, Z)) ** 2 * tensor_norm(t) ** (2 * ell)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, 0.0)
