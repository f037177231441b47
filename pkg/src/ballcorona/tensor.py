"""Alternating tensors over C^N with (0,q)-form coefficients on C^n.

An ``AltTensor`` of rank ``r`` and form degree ``q`` stores only
increasing tensor keys ``I`` (0-based, over ``range(N)``) and, for each,
increasing form keys ``L`` (over ``range(n)``). Values are numbers or
numpy arrays of a common shape, typically one value per evaluation
point. Access with a non-increasing key applies the sorting sign.

Wedge products merge tensor keys and form keys independently and
multiply the two merge signs; this is the juxtaposition convention
``(e_I dzbar_L) ^ (e_J dzbar_M) = e_I e_J dzbar_L dzbar_M``, under which
``A ^ B = (-1)^(rs + ql) B ^ A``.
"""

import itertools

import numpy as np


def sort_sign(seq):
    """Sign of the permutation sorting ``seq``; zero if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0, tuple(sorted(seq))
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign, tuple(sorted(seq))


def increasing(k, m):
    """All increasing k-tuples from ``range(m)``."""
    return list(itertools.combinations(range(m), k))


class AltTensor:
    """Alternating ``r``-tensor over C^N with ``(0, q)``-form values on C^n."""

    def __init__(self, r, q, N, n, entries=None):
        # r > N is allowed and gives the (necessarily) zero tensor
        if r < 0 or q < 0 or q > n:
            raise ValueError(f"invalid ranks r={r}, q={q} for N={N}, n={n}")
        self.r, self.q, self.N, self.n = r, q, N, n
        self.entries = {}
        for I, forms in (entries or {}).items():
            for L, v in forms.items():
                self.add(I, L, v)

    # access
    def add(self, I, L, value):
        """Accumulate ``value`` at keys ``(I, L)`` (any order)."""
        I, L = tuple(I), tuple(L)
        if len(I) != self.r or len(L) != self.q:
            raise ValueError("key length does not match the ranks")
        if any(not 0 <= i < self.N for i in I) or any(not 0 <= l < self.n for l in L):
            raise ValueError("key index out of range")
        s1, I = sort_sign(I)
        s2, L = sort_sign(L)
        if s1 * s2 == 0:
            return
        forms = self.entries.setdefault(I, {})
        v = s1 * s2 * np.asarray(value)
        forms[L] = forms[L] + v if L in forms else v

    def get(self, I, L=()):
        s1, I = sort_sign(I)
        s2, L = sort_sign(L)
        if s1 * s2 == 0:
            return 0.0
        v = self.entries.get(I, {}).get(L)
        return 0.0 if v is None else s1 * s2 * v

    def items(self):
        for I in sorted(self.entries):
            for L in sorted(self.entries[I]):
                yield I, L, self.entries[I][L]

    def value_shape(self):
        for _, _, v in self.items():
            return np.shape(v)
        return ()

    def copy(self):
        return AltTensor(self.r, self.q, self.N, self.n,
                         {I: dict(f) for I, f in self.entries.items()})

    # algebra
    def __add__(self, other):
        self._same(other)
        out = self.copy()
        for I, L, v in other.items():
            out.add(I, L, v)
        return out

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, c):
        out = AltTensor(self.r, self.q, self.N, self.n)
        for I, L, v in self.items():
            out.add(I, L, v * c)
        return out

    __rmul__ = __mul__

    def _same(self, other):
        if (self.r, self.q, self.N, self.n) != (other.r, other.q, other.N, other.n):
            raise ValueError("tensor shapes differ")

    def to_dense(self):
        """Fully antisymmetric array of shape ``value_shape + (N,)*r + (n,)*q``."""
        vs = self.value_shape()
        out = np.zeros(vs + (self.N,) * self.r + (self.n,) * self.q, dtype=complex)
        for I, L, v in self.items():
            for pI in itertools.permutations(range(self.r)):
                sI, _ = sort_sign(pI)
                key_I = tuple(I[k] for k in pI)
                for pL in itertools.permutations(range(self.q)):
                    sL, _ = sort_sign(pL)
                    key_L = tuple(L[k] for k in pL)
                    out[(Ellipsis,) + key_I + key_L] = sI * sL * np.asarray(v)
        return out

    @classmethod
    def from_dense(cls, arr, r, q, N, n, tol=0.0):
        """Read increasing entries from a dense array (no symmetry check)."""
        arr = np.asarray(arr)
        out = cls(r, q, N, n)
        for I in increasing(r, N):
            for L in increasing(q, n):
                v = arr[(Ellipsis,) + I + L]
                if np.any(np.abs(v) > tol):
                    out.add(I, L, v)
        return out

    def __repr__(self):
        return (f"AltTensor(r={self.r}, q={self.q}, N={self.N}, n={self.n}, "
                f"{sum(len(f) for f in self.entries.values())} entries)")


def unit_tensor(N, n):
    """Rank-0, degree-0 tensor with value 1."""
    return AltTensor(0, 0, N, n, {(): {(): 1.0}})


def vector_tensor(values, n):
    """Rank-1, degree-0 tensor from component values ``(..., N)``."""
    values = np.asarray(values)
    N = values.shape[-1]
    return AltTensor(1, 0, N, n, {(j,): {(): values[..., j]} for j in range(N)})


def covector_tensor(values):
    """Rank-1, degree-1 tensor from values ``(..., N, n)``: entry ``(j; l)``."""
    values = np.asarray(values)
    N, n = values.shape[-2:]
    return AltTensor(1, 1, N, n, {(j,): {(l,): values[..., j, l] for l in range(n)}
                                  for j in range(N)})


def wedge(A, B):
    """Wedge product with both merge signs applied."""
    if A.N != B.N or A.n != B.n:
        raise ValueError("tensors live over different spaces")
    if A.r + B.r > A.N or A.q + B.q > A.n:
        raise ValueError("degree overflow in wedge product")
    out = AltTensor(A.r + B.r, A.q + B.q, A.N, A.n)
    for I, L, a in A.items():
        for J, M, b in B.items():
            se, K = sort_sign(I + J)
            sf, P = sort_sign(L + M)
            if se * sf == 0:
                continue
            out.add(K, P, se * sf * (a * b))
    return out


def contract_g(T, g_values):
    """Contraction by ``g`` in the final tensor slot.

    ``(Lambda_g T)(I) = sum_k T(I, k) g_k`` with ``T`` extended
    antisymmetrically. ``g_values`` has shape ``(..., N)`` matching the
    value shape of ``T``.
    """
    if T.r < 1:
        raise ValueError("cannot contract a rank-0 tensor")
    g_values = np.asarray(g_values)
    if g_values.shape[-1] != T.N:
        raise ValueError("g has the wrong number of components")
    out = AltTensor(T.r - 1, T.q, T.N, T.n)
    for K, L, v in T.items():
        for pos, k in enumerate(K):
            I = K[:pos] + K[pos + 1:]
            # moving k from position pos to the end passes r-1-pos entries
            sign = -1 if (T.r - 1 - pos) % 2 else 1
            out.add(I, L, sign * v * g_values[..., k])
    return out


def contract_first(T, g_values):
    """Contraction in the first slot: ``sum_k T(k, I) g_k``."""
    if T.r < 1:
        raise ValueError("cannot contract a rank-0 tensor")
    g_values = np.asarray(g_values)
    out = AltTensor(T.r - 1, T.q, T.N, T.n)
    for K, L, v in T.items():
        for pos, k in enumerate(K):
            I = K[:pos] + K[pos + 1:]
            sign = -1 if pos % 2 else 1
            out.add(I, L, sign * v * g_values[..., k])
    return out


def tensor_norm(T, z=None):
    """Pointwise l2 norm treating ``e_I dzbar_L`` as orthonormal.

    ``z`` is accepted for interface symmetry; tensors here already hold
    values at their evaluation points.
    """
    total = 0.0
    for _, _, v in T.items():
        total = total + np.abs(v) ** 2
    return np.sqrt(total)


def pair_vector(T, g_values):
    """``sum_j T(j) g_j`` for a rank-1 tensor; returns per-form values."""
    if T.r != 1:
        raise ValueError("pairing needs a rank-1 tensor")
    out = {}
    for (j,), L, v in T.items():
        out[L] = out.get(L, 0) + v * np.asarray(g_values)[..., j]
    return out
