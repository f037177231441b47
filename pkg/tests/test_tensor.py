import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ballcorona.tensor import (AltTensor, contract_g, increasing, sort_sign, tensor_norm,
                               unit_tensor, vector_tensor, wedge)
from oracles import dense_wedge


def random_alt(rng, r, q, N, n):
    T = AltTensor(r, q, N, n)
    for I in increasing(r, N):
        for L in increasing(q, n):
            T.add(I, L, complex(rng.standard_normal(), rng.standard_normal()))
    return T


shapes = st.tuples(st.integers(0, 2), st.integers(0, 1), st.integers(0, 2), st.integers(0, 1))


def test_sort_sign():
    assert sort_sign((0, 1, 2)) == (1, (0, 1, 2))
    assert sort_sign((1, 0, 2)) == (-1, (0, 1, 2))
    assert sort_sign((2, 0, 1)) == (1, (0, 1, 2))
    assert sort_sign((1, 1))[0] == 0


def test_access_with_unsorted_keys():
    T = AltTensor(2, 1, 3, 2)
    T.add((2, 0), (1,), 5.0)
    assert T.get((0, 2), (1,)) == -5.0
    assert T.get((2, 0), (1,)) == 5.0
    assert T.get((1, 1), (0,)) == 0.0


def test_dense_round_trip(rng):
    T = random_alt(rng, 2, 1, 4, 2)
    D = T.to_dense()
    assert np.allclose(D, -np.swapaxes(D, 0, 1))
    back = AltTensor.from_dense(D, 2, 1, 4, 2)
    assert all(np.isclose(back.get(I, L), v) for I, L, v in T.items())


@given(shapes, st.integers(0, 2 ** 32 - 1))
def test_wedge_matches_permutation_oracle(shape, seed):
    r, q, s, l = shape
    N, n = 4, 2
    if r + s > N or q + l > n:
        return
    rng = np.random.default_rng(seed)
    A, B = random_alt(rng, r, q, N, n), random_alt(rng, s, l, N, n)
    want = dense_wedge(A.to_dense(), r, q, B.to_dense(), s, l)
    got = wedge(A, B).to_dense()
    assert np.allclose(got, want, atol=1e-12)


@given(shapes, st.integers(0, 2 ** 32 - 1))
def test_graded_anticommutativity(shape, seed):
    r, q, s, l = shape
    N, n = 4, 2
    if r + s > N or q + l > n:
        return
    rng = np.random.default_rng(seed)
    A, B = random_alt(rng, r, q, N, n), random_alt(rng, s, l, N, n)
    lhs = wedge(A, B).to_dense()
    rhs = wedge(B, A).to_dense() * (-1) ** (r * s + q * l)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_wedge_associative(rng):
    for _ in range(20):
        A, B, C = (random_alt(rng, 1, int(rng.integers(0, 2)), 4, 2) for _ in range(3))
        if A.q + B.q + C.q > 2:
            continue
        lhs = wedge(wedge(A, B), C).to_dense()
        rhs = wedge(A, wedge(B, C)).to_dense()
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_wedge_bilinear(rng):
    A1, A2 = random_alt(rng, 1, 1, 3, 2), random_alt(rng, 1, 1, 3, 2)
    B = random_alt(rng, 1, 0, 3, 2)
    a, b = 0.7 - 2j, 1.5j
    lhs = wedge(A1 * a + A2 * b, B).to_dense()
    rhs = a * wedge(A1, B).to_dense() + b * wedge(A2, B).to_dense()
    assert np.allclose(lhs, rhs)


def test_wedge_with_unit_is_identity(rng):
    A = random_alt(rng, 2, 1, 4, 2)
    assert np.allclose(wedge(unit_tensor(4, 2), A).to_dense(), A.to_dense())
    assert np.allclose(wedge(A, unit_tensor(4, 2)).to_dense(), A.to_dense())


def test_vector_wedge_self_vanishes(rng):
    v = vector_tensor(rng.standard_normal(5) + 1j * rng.standard_normal(5), 2)
    assert np.allclose(wedge(v, v).to_dense(), 0)


def test_wedge_degree_overflow():
    with pytest.raises(ValueError):
        wedge(AltTensor(1, 1, 3, 1), AltTensor(1, 1, 3, 1))


# -- contraction -------------------------------------------------------------------------

def test_contract_rank_one_picks_component(rng):
    g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    for j in range(4):
        T = AltTensor(1, 0, 4, 1, {(j,): {(): 1.0}})
        assert contract_g(T, g).get((), ()) == pytest.approx(g[j])


def test_antisymmetric_two_tensor_pairs_to_zero(rng):
    G = random_alt(rng, 2, 0, 4, 1)
    g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    once = contract_g(G, g)
    val = sum(once.get((k,), ()) * g[k] for k in range(4))
    assert abs(val) < 1e-12


def test_contract_matches_last_slot_dense(rng):
    T = random_alt(rng, 3, 1, 4, 2)
    g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    want = np.einsum("ijkl,k->ijl", T.to_dense(), g)
    assert np.allclose(contract_g(T, g).to_dense(), want)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_double_contraction_vanishes(rng, r):
    T = random_alt(rng, r, 1, 5, 2)
    g = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    twice = contract_g(contract_g(T, g), g)
    assert all(abs(v) < 1e-12 for _, _, v in twice.items())


def test_contract_linear(rng):
    T1, T2 = random_alt(rng, 2, 1, 3, 2), random_alt(rng, 2, 1, 3, 2)
    g1, g2 = rng.standard_normal(3), rng.standard_normal(3) * 1j
    d = lambda X: X.to_dense()
    assert np.allclose(d(contract_g(T1 + T2, g1)), d(contract_g(T1, g1)) + d(contract_g(T2, g1)))
    assert np.allclose(d(contract_g(T1, g1 + 2 * g2)), d(contract_g(T1, g1)) + 2 * d(contract_g(T1, g2)))


def test_contract_rejects_rank_zero():
    with pytest.raises(ValueError):
        contract_g(unit_tensor(3, 1), np.ones(3))


# -- norm ---------------------------------------------------------------------------------

def test_norm_examples():
    assert tensor_norm(AltTensor(2, 0, 3, 1)) == 0
    assert tensor_norm(AltTensor(1, 0, 3, 1, {(1,): {(): 3j}})) == pytest.approx(3)


def test_norm_pythagorean():
    a = AltTensor(2, 1, 3, 2, {(0, 1): {(0,): 3.0}})
    b = AltTensor(2, 1, 3, 2, {(1, 2): {(1,): 4.0}})
    assert tensor_norm(a + b) == pytest.approx(5.0)


def test_norm_is_pointwise_over_batches(rng):
    vals = rng.standard_normal((7, 3))
    T = vector_tensor(vals, 1)
    assert np.allclose(tensor_norm(T), np.linalg.norm(vals, axis=1))


def test_wedge_norm_constant_independent_of_N(rng):
    ratios = {}
    for N in (4, 8, 16):
        worst = 0.0
        for _ in range(30):
            A = vector_tensor(rng.standard_normal(N) + 1j * rng.standard_normal(N), 1)
            B = random_alt(rng, 1, 1, N, 1)
            worst = max(worst, tensor_norm(wedge(A, B)) / (tensor_norm(A) * tensor_norm(B)))
        ratios[N] = worst
    assert max(ratios.values()) <= 1 + 1e-12
    assert max(ratios.values()) / min(ratios.values()) < 2
