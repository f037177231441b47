"""Solution kernels for dbar on the ball and the pointwise estimates behind them.

All kernel functions are vectorised over a batch of integration points
``W`` (shape ``(M, n)``) against a single or batched target ``z``.
Indices are 0-based throughout.
"""

import itertools
from dataclasses import dataclass
from math import comb, factorial

import numpy as np

from .ball import delta, pairing, sqnorm
from .holo import HoloPoly, derivative_tensor, frozen_matrix
from .tensor import sort_sign
from .validation import as_points


@dataclass(frozen=True)
class PermEntry:
    """Split ``{0..n-1} = {i} + J + L`` with the signature of ``(i, J, L)``."""

    i: int
    J: tuple
    L: tuple
    sign: int


def perms(n, q):
    """All splits with ``|J| = n-q-1`` and ``|L| = q``; ``n!/((n-q-1)! q!)`` of them."""
    if not 0 <= q <= n - 1:
        raise ValueError(f"q must lie in [0, {n - 1}]")
    out = []
    for i in range(n):
        rest = [k for k in range(n) if k != i]
        for L in itertools.combinations(rest, q):
            J = tuple(k for k in rest if k not in L)
            s, _ = sort_sign((i,) + J + L)
            out.append(PermEntry(i, J, tuple(L), s))
    return out


def perm_count(n, q):
    return factorial(n) // (factorial(n - q - 1) * factorial(q))


def _pair_batch(W, z):
    W = as_points(W)
    Z = as_points(z, W.shape[1])
    if len(Z) == 1:
        Z = np.broadcast_to(Z, W.shape)
    elif Z.shape != W.shape:
        raise ValueError("w and z batches differ in length")
    return W, Z


def phi(n, q, w, z):
    """``(1 - <w,z>)^(n-1-q) (1 - |w|^2)^q / Delta(w,z)^n``."""
    W, Z = _pair_batch(w, z)
    if W.shape[1] != n:
        raise ValueError("dimension mismatch")
    if not 0 <= q <= n - 1:
        raise ValueError(f"q must lie in [0, {n - 1}]")
    d = delta(W, Z)
    if np.any(d == 0):
        raise ZeroDivisionError("phi is singular on the diagonal")
    return (1.0 - pairing(W, Z)) ** (n - 1 - q) * (1.0 - sqnorm(W)) ** q / d ** n


@dataclass
class KernelValue:
    """Components keyed by ``(J, L)``; the volume form of ``w`` is implicit."""

    n: int
    q: int
    components: dict
    volume_form: bool = True

    def __len__(self):
        return len(self.components)


def charpentier(n, q, w, z):
    """Component ``(J, L)``: ``(-1)^q Phi sgn(nu) (conj(w_i) - conj(z_i))``."""
    W, Z = _pair_batch(w, z)
    base = (-1) ** q * phi(n, q, W, Z)
    comps = {}
    for p in perms(n, q):
        comps[(p.J, p.L)] = base * p.sign * (np.conj(W[:, p.i]) - np.conj(Z[:, p.i]))
    return KernelValue(n, q, comps)


def amel_factor(n, s, q, w, z, c=None):
    """``((1-|w|^2)/(1-<z,w>))^(s-n) sum_j c_j ((1-|w|^2)(1-|z|^2)/|1-<w,z>|^2)^j``."""
    if s <= n:
        raise ValueError("amelioration needs s > n")
    W, Z = _pair_batch(w, z)
    c = np.ones(n - q) if c is None else np.asarray(c, dtype=float)
    if len(c) != n - q:
        raise ValueError(f"need {n - q} amelioration constants")
    aw = 1.0 - sqnorm(W)
    az = 1.0 - sqnorm(Z)
    p = pairing(W, Z)
    base = aw * az / np.abs(1.0 - p) ** 2
    poly = sum(cj * base ** j for j, cj in enumerate(c))
    return (aw / (1.0 - np.conj(p))) ** (s - n) * poly


def amel_charpentier(n, s, q, w, z, c=None):
    K = charpentier(n, q, w, z)
    f = amel_factor(n, s, q, w, z, c)
    return KernelValue(n, q, {k: v * f for k, v in K.components.items()})


def phi_amel(n, s, ell, w, z, c=None):
    """Ameliorated factor ``Phi_{n,s}^ell``."""
    return phi(n, ell, w, z) * amel_factor(n, s, ell, w, z, c)


def s_kernel(n, s, w, z, constant=1.0):
    """``c (1-|w|^2)^(s-n-1) / (1-<z,w>)^s``."""
    if s <= n:
        raise ValueError("S kernel needs s > n")
    W, Z = _pair_batch(w, z)
    return constant * (1.0 - sqnorm(W)) ** (s - n - 1) / (1.0 - pairing(Z, W)) ** s


# -- the three pointwise estimates --------------------------------------------

def grad_delta_z(W, Z):
    """Holomorphic z-gradient of Delta: ``-conj(w_j)(1-<w,z>) + conj(z_j)(1-|w|^2)``."""
    p = pairing(W, Z)
    return (-np.conj(W) * (1.0 - p)[:, None]
            + np.conj(Z) * (1.0 - sqnorm(W))[:, None])


def falling(k, m):
    out = 1.0
    for j in range(m):
        out *= (k - j)
    return out


def _stirling2(m, j):
    return sum((-1) ** (j - i) * comb(j, i) * i ** m for i in range(j + 1)) // factorial(j)


def _default_poly(n, m):
    # generic polynomial with nonvanishing derivatives of every order <= m
    lin = HoloPoly(n, {tuple(int(k == j) for k in range(n)): 0.7 + 0.3j * (j + 1)
                       for j in range(n)})
    p = HoloPoly.constant(n, 1.0)
    for _ in range(m + 1):
        p = p * (lin + 1.0)
    return p


def check_crucial(kind, params, w, z):
    """Ratio of the left side to the right side (without constant) of an estimate.

    kind
        ``"moddelta"`` -- ``|conj(z-w)^alpha d^alpha_wbar F(w)|`` against
        ``(sqrt(Delta)/(1-|w|^2))^m |Dbar^m F(w)|`` for ``F = conj(p)``;
        params ``alpha`` (tuple) and optional ``poly``. A single multi-index
        term is not bounded near points where the tangential derivatives of
        ``p`` vanish (the ratio grows like ``(1-|w|^2)^(-1/2)``). With
        ``directional=True`` the left side is the sum over all ``|alpha| = m``
        with multinomial weights, i.e. the m-th derivative applied to
        ``(z-w)^m``; since ``Delta = |P_w(z-w)|^2 + (1-|w|^2)|Q_w(z-w)|^2``
        that ratio never exceeds 1.

        ``"rootD"`` -- params ``line``: 1 compares ``|D_z Delta|`` with
        ``(1-|z|^2) sqrt(Delta) + Delta``; 2 compares
        ``(1-|z|^2) |R_z Delta|`` with ``(1-|z|^2) sqrt(Delta)``.

        ``"Dbound"`` -- params ``k``, ``m``, ``line``: 1 compares
        ``|D_z^m (1-<z,w>)^k|`` with ``|1-<z,w>|^k ((1-|z|^2)/|1-<z,w>|)^(m/2)``;
        2 uses ``(1-|z|^2)^m |R^m (1-<z,w>)^k|`` and exponent ``m``.
    """
    W, Z = _pair_batch(w, z)
    n = W.shape[1]
    if kind == "moddelta":
        alpha = tuple(params.get("alpha", (0,) * n))
        m = sum(alpha)
        if m == 0:
            return np.ones(len(W))
        p = params.get("poly") or _default_poly(n, m)
        T = derivative_tensor(p, W, m)
        if params.get("directional"):
            # sum_alpha m!/alpha! conj(u)^alpha d^alpha conj(p): the full tensor on u^m
            full = T
            for _ in range(m):
                full = np.einsum("m...j,mj->m...", full, Z - W)
            lhs = np.abs(full)
        else:
            idx = tuple(j for j, a in enumerate(alpha) for _ in range(a))
            da = T[(slice(None),) + idx]
            lhs = np.abs(np.prod(np.conj(Z - W) ** np.array(alpha)[None, :], axis=1) * np.conj(da))
        M, a = frozen_matrix(W)
        for slot in range(1, m + 1):
            T = np.moveaxis(np.einsum("mij,m...j->m...i", M, np.moveaxis(T, slot, -1)), -1, slot)
        dm = np.sqrt(np.sum(np.abs(T.reshape(len(W), -1)) ** 2, axis=1))
        d = delta(W, Z)
        if np.any(d == 0):
            raise ZeroDivisionError("moddelta ratio is undefined on the diagonal")
        rhs = (np.sqrt(d) / a) ** m * dm
        return lhs / rhs
    if kind == "rootD":
        line = params.get("line", 1)
        d = delta(W, Z)
        if np.any(d == 0):
            raise ZeroDivisionError("rootD ratio is undefined on the diagonal")
        grad = grad_delta_z(W, Z)
        az = 1.0 - sqnorm(Z)
        if line == 1:
            M, _ = frozen_matrix(Z)
            lhs = np.sqrt(np.sum(np.abs(np.einsum("mij,mj->mi", M, grad)) ** 2, axis=1))
            return lhs / (az * np.sqrt(d) + d)
        rdelta = np.sum(Z * grad, axis=1)
        return az * np.abs(rdelta) / (az * np.sqrt(d))
    if kind == "Dbound":
        k = params.get("k", 2)
        m = params.get("m", 1)
        line = params.get("line", 1)
        if m == 0:
            return np.ones(len(W))
        t = pairing(Z, W)
        one = np.abs(1.0 - t)
        az = 1.0 - sqnorm(Z)
        if line == 1:
            M, _ = frozen_matrix(Z)
            mw = np.einsum("mij,mj->mi", M, -np.conj(W))
            lhs = abs(falling(k, m)) * one ** (k - m) * np.sqrt(np.sum(np.abs(mw) ** 2, axis=1)) ** m
            return lhs / (one ** k * (az / one) ** (m / 2))
        # (t d/dt)^m = sum_j S(m, j) t^j (d/dt)^j
        rm = sum(_stirling2(m, j) * t ** j * (-1) ** j * falling(k, j) * (1.0 - t) ** (k - j)
                 for j in range(1, m + 1))
        return az ** m * np.abs(rm) / (one ** k * (az / one) ** m)
    raise ValueError(f"unknown estimate {kind!r}")
