"""Holomorphic polynomials on C^n and the derivative operators acting on them.

``HoloPoly`` stores coefficients by multi-index and evaluates on batches
of points. The almost invariant derivative ``D`` and the word operators
``Y^m`` are evaluated with frozen coefficients: at the evaluation point
``z0`` every letter becomes a constant-coefficient operator

* ``I`` -> multiplication by ``a = 1 - |z0|^2``
* ``R`` -> ``a * sum_j z0_j d_j``
* ``D`` -> ``M d`` with ``M = a P + sqrt(a) Q``

where ``P`` projects covectors onto ``conj(z0)`` (``P = 0`` at the
origin) and ``Q = I - P``. Frozen letters commute, so a word only
depends on its letter counts; the ``D`` letters contribute one tensor
slot each.
"""

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .validation import as_point, as_points

LETTERS = ("I", "R", "D")


class HoloPoly:
    """Holomorphic polynomial ``sum_alpha c_alpha z^alpha`` in ``n`` variables."""

    __slots__ = ("n", "coeffs", "_cache")

    def __init__(self, n, coeffs=None):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = int(n)
        clean = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or min(alpha) < 0:
                raise ValueError(f"bad multi-index {alpha} for n={self.n}")
            c = complex(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0) + c
        self.coeffs = {a: c for a, c in clean.items() if c != 0}
        self._cache = {}

    # construction helpers
    @classmethod
    def constant(cls, n, c):
        return cls(n, {(0,) * n: c})

    @classmethod
    def coordinate(cls, n, j, c=1.0):
        """``c * z_j`` with 0-based ``j``."""
        alpha = [0] * n
        alpha[j] = 1
        return cls(n, {tuple(alpha): c})

    @classmethod
    def monomial(cls, alpha, c=1.0):
        return cls(len(alpha), {tuple(alpha): c})

    @property
    def degree(self):
        return max((sum(a) for a in self.coeffs), default=0)

    def is_zero(self):
        return not self.coeffs

    def _arrays(self):
        if "arr" not in self._cache:
            if self.coeffs:
                A = np.array(list(self.coeffs.keys()), dtype=int)
                c = np.array(list(self.coeffs.values()), dtype=complex)
            else:
                A = np.zeros((0, self.n), dtype=int)
                c = np.zeros(0, dtype=complex)
            self._cache["arr"] = (A, c)
        return self._cache["arr"]

    def __call__(self, Z):
        """Evaluate on a batch ``(M, n)`` (or ``(M,)`` when ``n = 1``).

        A 1-d input of length ``n > 1`` and a 0-d input are single
        points and give a scalar.
        """
        Z = np.asarray(Z, dtype=complex)
        single = Z.ndim == 0 or (Z.ndim == 1 and self.n > 1)
        P = as_points(Z, self.n)
        A, c = self._arrays()
        if len(c) == 0:
            out = np.zeros(len(P), dtype=complex)
        else:
            out = np.prod(P[:, None, :] ** A[None, :, :], axis=2) @ c
        return out[0] if single else out

    # arithmetic
    def _check(self, other):
        if not isinstance(other, HoloPoly):
            other = HoloPoly.constant(self.n, other)
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return other

    def __add__(self, other):
        other = self._check(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0) + c
        return HoloPoly(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return HoloPoly(self.n, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        if not isinstance(other, HoloPoly):
            return HoloPoly(self.n, {a: c * complex(other) for a, c in self.coeffs.items()})
        other = self._check(other)
        out = {}
        for (a, c), (b, d) in itertools.product(self.coeffs.items(), other.coeffs.items()):
            k = tuple(x + y for x, y in zip(a, b))
            out[k] = out.get(k, 0) + c * d
        return HoloPoly(self.n, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, HoloPoly):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, frozenset(self.coeffs.items())))

    def allclose(self, other, tol=1e-12):
        diff = self - other
        return all(abs(c) <= tol for c in diff.coeffs.values())

    def __repr__(self):
        if not self.coeffs:
            return f"HoloPoly(n={self.n}, 0)"
        terms = " + ".join(f"({c:.6g})z^{a}" for a, c in sorted(self.coeffs.items()))
        return f"HoloPoly(n={self.n}, {terms})"

    # JSON
    def to_dict(self):
        terms = [{"alpha": list(a), "re": c.real, "im": c.imag}
                 for a, c in sorted(self.coeffs.items())]
        return {"n": self.n, "terms": terms}

    @classmethod
    def from_dict(cls, data):
        n = int(data["n"])
        coeffs = {}
        for t in data.get("terms", []):
            alpha = tuple(t["alpha"])
            coeffs[alpha] = coeffs.get(alpha, 0) + complex(t.get("re", 0.0), t.get("im", 0.0))
        return cls(n, coeffs)

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


class VecHoloPoly:
    """Finite tuple ``(g_1, ..., g_N)`` of polynomials in the same dimension."""

    def __init__(self, components):
        comps = tuple(components)
        if not comps:
            raise ValueError("need at least one component")
        n = comps[0].n
        if any(c.n != n for c in comps):
            raise ValueError("components must share the dimension n")
        self.components = comps
        self.n = n

    @property
    def N(self):
        return len(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, j):
        return self.components[j]

    def __iter__(self):
        return iter(self.components)

    def __call__(self, Z):
        """Values with the component axis last: ``(M, N)`` or ``(N,)``."""
        vals = [np.asarray(c(Z)) for c in self.components]
        return np.stack(vals, axis=-1)

    def scale(self, c):
        return VecHoloPoly([g * c for g in self.components])

    def to_dict(self):
        return {"n": self.n, "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, data):
        if isinstance(data, list):
            return cls([HoloPoly.from_dict(d) for d in data])
        return cls([HoloPoly.from_dict(d) for d in data["components"]])


@dataclass(frozen=True)
class SampledField:
    """A deterministic function of interior points, vectorised over batches."""

    evaluator: object
    note: str = "exact"

    def __call__(self, Z):
        return self.evaluator(Z)


def evaluate(p, z):
    return p(z)


def d_holo(p, j):
    """Exact ``dp/dz_j`` (``j`` is 0-based)."""
    if not 0 <= j < p.n:
        raise ValueError(f"coordinate index {j} out of range for n={p.n}")
    key = ("d", j)
    if key not in p._cache:
        out = {}
        for a, c in p.coeffs.items():
            if a[j] > 0:
                b = list(a)
                b[j] -= 1
                out[tuple(b)] = c * a[j]
        p._cache[key] = HoloPoly(p.n, out)
    return p._cache[key]


def radial(p):
    """``R p = sum_j z_j dp/dz_j``; multiplies each monomial by its degree."""
    return HoloPoly(p.n, {a: c * sum(a) for a, c in p.coeffs.items()})


def derivative(p, multi):
    """Holomorphic derivative along a tuple of 0-based coordinates."""
    q = p
    for j in sorted(multi):
        q = d_holo(q, j)
    return q


def gradient(p, Z):
    """``(dp/dz_1, ..., dp/dz_n)`` at points; shape ``(M, n)`` or ``(n,)``."""
    return np.stack([np.asarray(d_holo(p, j)(Z)) for j in range(p.n)], axis=-1)


def derivative_tensor(p, Z, k):
    """All k-th holomorphic derivatives at a batch: shape ``(M,) + (n,)*k``."""
    P = as_points(Z, p.n)
    n = p.n
    out = np.zeros((len(P),) + (n,) * k, dtype=complex)
    for idx in itertools.product(range(n), repeat=k):
        if list(idx) != sorted(idx):
            continue
        val = derivative(p, idx)(P)
        for perm in set(itertools.permutations(idx)):
            out[(slice(None),) + perm] = val
    return out


def frozen_matrix(Z):
    """Matrix ``M = a P + sqrt(a) Q`` acting on gradients at each point.

    ``P_ij = conj(z_i) z_j / |z|^2`` (zero at the origin), ``a = 1 - |z|^2``.
    """
    P = as_points(Z)
    s = np.sum(np.abs(P) ** 2, axis=1)
    if np.any(s >= 1.0):
        raise ValueError("frozen operators need |z| < 1")
    a = 1.0 - s
    n = P.shape[1]
    with np.errstate(invalid="ignore", divide="ignore"):
        proj = np.conj(P)[:, :, None] * P[:, None, :] / s[:, None, None]
    proj[s == 0] = 0.0
    eye = np.eye(n)[None]
    return a[:, None, None] * proj + np.sqrt(a)[:, None, None] * (eye - proj), a


def d_op(p, z):
    """Almost invariant derivative ``D p(z)`` at a single point; shape ``(n,)``."""
    z = as_point(z, p.n)
    M, _ = frozen_matrix(z[None])
    return M[0] @ gradient(p, z[None])[0]


def d_op_batch(p, Z):
    M, _ = frozen_matrix(as_points(Z, p.n))
    return np.einsum("mij,mj->mi", M, gradient(p, as_points(Z, p.n)))


def y_words(m):
    """All ``3^m`` words of length ``m`` over the letters I, R, D."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return [tuple(w) for w in itertools.product(LETTERS, repeat=m)]


def _apply_counts(p, P, ni, nr, nd):
    """Frozen word with the given letter counts on batch ``P``; shape ``(M,) + (n,)*nd``."""
    M, a = frozen_matrix(P)
    T = derivative_tensor(p, P, nr + nd)
    # contract the R slots with z0
    for _ in range(nr):
        T = np.einsum("m...j,mj->m...", T, P)
    # apply M to each remaining slot
    for slot in range(1, nd + 1):
        T = np.moveaxis(T, slot, -1)
        T = np.einsum("mij,m...j->m...i", M, T)
        T = np.moveaxis(T, -1, slot)
    scale = a ** (ni + nr)
    return T * scale.reshape((-1,) + (1,) * nd)


def y_apply(word, p, z):
    """Apply one frozen word at a single point; a tensor of rank ``#D``."""
    for letter in word:
        if letter not in LETTERS:
            raise ValueError(f"unknown letter {letter!r}")
    z = as_point(z, p.n)
    counts = [sum(1 for x in word if x == L) for L in LETTERS]
    out = _apply_counts(p, z[None], *counts)[0]
    return out


@lru_cache(maxsize=None)
def _count_triples(m):
    out = []
    for ni in range(m + 1):
        for nr in range(m + 1 - ni):
            nd = m - ni - nr
            mult = factorial(m) // (factorial(ni) * factorial(nr) * factorial(nd))
            out.append((ni, nr, nd, mult))
    return tuple(out)


def y_norm_sq(p, Z, m):
    """``|Y^m p|^2`` summed over all words and tensor slots, on a batch."""
    P = as_points(Z, p.n)
    total = np.zeros(len(P))
    for ni, nr, nd, mult in _count_triples(m):
        T = _apply_counts(p, P, ni, nr, nd)
        total += mult * np.sum(np.abs(T.reshape(len(P), -1)) ** 2, axis=1)
    return total


def y_norm(p, Z, m):
    return np.sqrt(y_norm_sq(p, Z, m))


def _field_values(F, P):
    return np.asarray(F(P))


def dbar_probe(F, z, h=1e-4):
    """Finite-difference ``(dF/dzbar_1, ..., dF/dzbar_n)`` at ``z``.

    ``F`` maps a batch ``(M, n)`` to values ``(M,)`` or ``(M, ...)``. The
    result has the value shape followed by the coordinate axis.
    """
    z = as_point(z)
    if 1.0 - np.sqrt(np.sum(np.abs(z) ** 2)) <= 2 * h:
        raise ValueError("finite-difference step too large for the margin to the sphere")
    return dbar_probe_batch(F, z[None], h)[0]


# eighth roots of unity: (1/(8h)) sum F(z + h w) w recovers dF/dzbar with
# holomorphic Taylor terms cancelling through order h^6
_STENCIL = np.exp(2j * np.pi * np.arange(8) / 8)


def dbar_probe_batch(F, Z, h=1e-4):
    P = as_points(Z)
    M, n = P.shape
    K = len(_STENCIL)
    steps = []
    for j in range(n):
        for w in _STENCIL:
            S = P.copy()
            S[:, j] += h * w
            steps.append(S)
    vals = _field_values(F, np.concatenate(steps, axis=0))
    vals = vals.reshape((n, K, M) + vals.shape[1:])
    wts = _STENCIL.reshape((1, K, 1) + (1,) * (vals.ndim - 3))
    # the weights sum to zero, so shifting by one sample keeps constants exact
    out = np.sum((vals - vals[:, :1]) * wts, axis=1) / (K * h)  # (n, M, ...)
    return np.moveaxis(out, 0, -1)
