"""Independent reference computations used to freeze expected values.

Nothing here imports the package; each function re-derives a quantity
from its definition with plain numpy.
"""

import itertools
from math import gamma

import numpy as np


def inner(w, z):
    return np.sum(np.asarray(w) * np.conj(np.asarray(z)), axis=-1)


def delta_raw(w, z):
    """``|1 - <w,z>|^2 - (1 - |w|^2)(1 - |z|^2)`` straight from the definition."""
    return (np.abs(1 - inner(w, z)) ** 2
            - (1 - np.sum(np.abs(w) ** 2, -1)) * (1 - np.sum(np.abs(z) ** 2, -1)))


def mobius_sq(w, z):
    """``|phi_w(z)|^2`` via the closed form ``1 - (1-|w|^2)(1-|z|^2)/|1-<z,w>|^2``."""
    return 1 - ((1 - np.sum(np.abs(w) ** 2, -1)) * (1 - np.sum(np.abs(z) ** 2, -1))
                / np.abs(1 - inner(z, w)) ** 2)


def beta(x, y):
    return gamma(x) * gamma(y) / gamma(x + y)


def disc_weight_integral(b, c):
    """``int_D (1-|w|^2)^b |w|^c dV = pi B(c/2 + 1, b + 1)``."""
    return np.pi * beta(c / 2 + 1, b + 1)


def perm_sign(p):
    p = list(p)
    s = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


def dense_wedge(A, r, q, B, s, l):
    """Wedge of dense antisymmetric arrays by full permutation averaging.

    ``A`` has shape ``(N,)*r + (n,)*q``. The signed sum over all slot
    permutations is divided by ``r! s! q! l!`` so that ``e_i ^ e_j`` has
    entry 1 at ``(i, j)``.
    """
    T = np.multiply.outer(A, B)
    # axes: A tensor (r), A form (q), B tensor (s), B form (l)
    T = np.moveaxis(T, list(range(r + q, r + q + s)), list(range(r, r + s)))
    # now: tensor axes 0..r+s-1, form axes r+s..r+s+q+l-1
    rt, qf = r + s, q + l
    out = np.zeros_like(T)
    for pt in itertools.permutations(range(rt)):
        for pf in itertools.permutations(range(qf)):
            axes = list(pt) + [rt + k for k in pf]
            out = out + perm_sign(pt) * perm_sign(pf) * np.transpose(T, axes)
    norm = (np.prod(range(1, r + 1)) * np.prod(range(1, s + 1))
            * np.prod(range(1, q + 1)) * np.prod(range(1, l + 1)))
    return out / norm
