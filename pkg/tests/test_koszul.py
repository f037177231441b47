import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballcorona.ball import random_ball_points
from ballcorona.experiments import koszul_datasets, quasimult_constants, random_vec_poly
from ballcorona.holo import HoloPoly, VecHoloPoly
from ballcorona.koszul import (CoronaData, CoronaViolation, calibrate_convention, chain_sign,
                               convention_factor, koszul_residual, norm_ratio, omega, omega01,
                               omega_direct, omega_display, omega_hat, omega_tilde,
                               omega_tilde_hat, proportionality)
from ballcorona.solver import disk_grid
from ballcorona.tensor import contract_g, wedge

Z1 = HoloPoly.coordinate(1, 0)
ONE = HoloPoly.constant(1, 1.0)


def z_half():
    return CoronaData(VecHoloPoly([Z1, ONE * 0.5]))


def constant_data(a, b, n=1):
    return CoronaData(VecHoloPoly([HoloPoly.constant(n, a), HoloPoly.constant(n, b)]))


def dense(T):
    return T.to_dense()


# -- omega01 ------------------------------------------------------------------------

def test_single_constant_generator():
    d = CoronaData(VecHoloPoly([ONE]))
    assert omega01(d, np.array([[0.4]])).get((0,), ()) == pytest.approx(1.0)
    assert all(np.all(v == 0) for _, _, v in omega(1, d, np.array([[0.4]])).items())


def test_constant_pair():
    a, b = 0.6 - 0.2j, 0.3j
    d = constant_data(a, b)
    T = omega01(d, np.array([[0.1 + 0.2j]]))
    s = abs(a) ** 2 + abs(b) ** 2
    assert T.get((0,), ()) == pytest.approx(np.conj(a) / s)
    assert T.get((1,), ()) == pytest.approx(np.conj(b) / s)


@pytest.mark.parametrize("k", range(3))
def test_pairing_with_g_is_one(rng, k):
    d = CoronaData(koszul_datasets()[k])
    Z = disk_grid(100, 0.95)
    G, _ = d.values(Z)
    total = contract_g(omega01(d, Z), G).get((), ())
    assert np.max(np.abs(total - 1)) < 1e-12


def test_pairing_with_g_is_one_in_ball(rng):
    g = random_vec_poly(2, 4, 2, rng)
    d = CoronaData(VecHoloPoly([g[0] + 3.0] + list(g)[1:]))
    Z = random_ball_points(rng, 100, 2)
    total = contract_g(omega01(d, Z), d.values(Z)[0]).get((), ())
    assert np.max(np.abs(total - 1)) < 1e-12


# -- corona data -------------------------------------------------------------------------

def test_vanishing_g_is_rejected():
    with pytest.raises(CoronaViolation):
        CoronaData(VecHoloPoly([Z1, Z1 * 2.0]))


def test_delta_above_sampled_minimum_is_rejected():
    with pytest.raises(CoronaViolation):
        CoronaData(VecHoloPoly([Z1, ONE * 0.5]), delta=0.9)


def test_guard_trips_below_half_delta():
    d = CoronaData(VecHoloPoly([Z1, ONE * 0.5]), delta=0.5)
    d.delta = 2.0  # forced, to exercise the runtime guard
    with pytest.raises(CoronaViolation):
        d.values(np.array([[0.0]]))


def test_sup_above_one_is_recorded_and_normalizable():
    d = CoronaData(VecHoloPoly([Z1 * 2.0, ONE]))
    assert d.sup_sq == pytest.approx(5.0, rel=1e-6)
    assert d.normalized().sup_sq == pytest.approx(1.0, rel=1e-9)


# -- omega tilde ---------------------------------------------------------------------------

def test_tilde_vanishes_for_constant_g():
    T = omega_tilde(constant_data(0.5, 0.5j), np.array([[0.3]]))
    assert all(np.all(v == 0) for _, _, v in T.items())


def test_tilde_example():
    z0 = 0.3 - 0.4j
    T = omega_tilde(z_half(), np.array([[z0]]))
    assert T.get((0,), (0,)) == pytest.approx(1 / (abs(z0) ** 2 + 0.25))
    assert abs(T.get((1,), (0,))) < 1e-15


def test_tilde_numerator_ignores_constant_shift():
    z0 = np.array([[0.2 + 0.1j]])
    d1 = CoronaData(VecHoloPoly([Z1 * 1.5, ONE * 0.5]))
    d2 = CoronaData(VecHoloPoly([Z1 * 1.5 + 0.3, ONE * 0.5]))
    n1 = omega_tilde(d1, z0).get((0,), (0,)) * d1.values(z0)[1]
    n2 = omega_tilde(d2, z0).get((0,), (0,)) * d2.values(z0)[1]
    assert n1 == pytest.approx(n2)


# -- omega ----------------------------------------------------------------------------------

def test_degree_zero_is_omega01():
    d = z_half()
    Z = disk_grid(10, 0.8)
    assert np.allclose(dense(omega(0, d, Z)), dense(omega01(d, Z)))


def test_rank_one_example():
    # conj(1/2 * 1 - 0.3 * 0) / (0.09 + 0.25)^2
    val = omega(1, z_half(), np.array([[0.3]])).get((0, 1), (0,))
    # the stored form coincides with the display once the convention factor is applied
    assert val == pytest.approx(0.5 / 0.34 ** 2, rel=1e-12)
    assert val == pytest.approx(4.325259515570934, rel=1e-12)


def test_rank_one_antisymmetric():
    d = z_half()
    Z = disk_grid(20, 0.8)
    T = omega(1, d, Z)
    assert np.allclose(T.get((0, 1), (0,)), -T.get((1, 0), (0,)))


def test_wedge_display_constant_is_minus_one():
    assert calibrate_convention() == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("k", range(3))
def test_factorization_constant_uniform(k):
    d = CoronaData(koszul_datasets()[k])
    Z = disk_grid(100, 0.85)
    W = wedge(omega01(d, Z), omega_tilde(d, Z))
    r = proportionality(W, omega_display(d, Z))
    assert np.ptp(r.real) < 1e-10 and np.max(np.abs(r.imag)) < 1e-10
    assert np.all(np.isclose(r, -1.0, atol=1e-10))
    # the stored form is the -1/(l+1) normalisation times the convention factor
    O = omega(1, d, Z)
    assert np.allclose(dense(O), convention_factor(1) * (-0.5) * dense(W), atol=1e-12)


@pytest.mark.parametrize("n, N, ell", [(1, 3, 1), (2, 3, 1), (2, 3, 2), (2, 4, 2), (3, 4, 3)])
def test_wedge_matches_determinant_formula(rng, n, N, ell):
    g = random_vec_poly(n, N, 2, rng)
    d = CoronaData(VecHoloPoly([g[0] + 3.0] + list(g)[1:]))
    Z = random_ball_points(rng, 30, n, 0.9)
    assert np.allclose(dense(omega(ell, d, Z)), dense(omega_direct(ell, d, Z)), atol=1e-12)


def test_chain_sign_values():
    assert [chain_sign(l) for l in range(5)] == [1, -1, -1, 1, 1]


def test_degree_out_of_range():
    with pytest.raises(ValueError):
        omega(2, z_half(), np.array([[0.1]]))
    with pytest.raises(ValueError):
        omega_hat(-1, z_half(), np.array([[0.1]]))


# -- omega hat ------------------------------------------------------------------------------

def test_hat_vanishes_for_constant_g():
    d = constant_data(0.5, 0.5j, n=2)
    T = omega_hat(1, d, np.array([[0.3, 0.1j]]))
    assert all(np.all(v == 0) for _, _, v in T.items())


def test_hat_tilde_equals_tilde_at_origin(rng):
    g = random_vec_poly(2, 3, 2, rng)
    d = CoronaData(VecHoloPoly([g[0] + 3.0] + list(g)[1:]))
    Z = np.zeros((1, 2))
    assert np.allclose(dense(omega_tilde_hat(d, Z)), dense(omega_tilde(d, Z)))


def test_hat_quasimult_bound(rng):
    g = random_vec_poly(2, 4, 2, rng)
    d = CoronaData(VecHoloPoly([g[0] + 3.0] + list(g)[1:]))
    Z = random_ball_points(rng, 200, 2, 0.95)
    for ell in (1, 2):
        assert np.max(norm_ratio(ell, d, Z, hat=True)) <= 1 + 1e-12


# -- chain identity ---------------------------------------------------------------------------

def test_residual_vanishes_for_constant_g():
    d = constant_data(0.6, 0.2 - 0.1j)
    assert np.all(koszul_residual(0, d, disk_grid(10, 0.8)) == 0)


def test_residual_example():
    assert koszul_residual(0, z_half(), np.array([[0.2]]))[0] <= 1e-6


@pytest.mark.parametrize("k", range(3))
def test_residual_on_grid(k):
    d = CoronaData(koszul_datasets()[k])
    assert np.max(koszul_residual(0, d, disk_grid(100, 0.85))) <= 1e-6


def test_chain_matches_exact_dbar():
    # dbar(conj(g_j)/|g|^2) = conj(g_j')/|g|^2 - conj(g_j) sum_k g_k conj(g_k') / |g|^4
    g = koszul_datasets()[1]
    d = CoronaData(g)
    Z = disk_grid(50, 0.9)
    G, gsq = d.values(Z)
    J = d.jacobian(Z)[:, :, 0]
    exact = np.conj(J) / gsq[:, None] - np.conj(G) * np.sum(G * np.conj(J), axis=1)[:, None] / gsq[:, None] ** 2
    got = contract_g(omega(1, d, Z), G)
    for j in range(3):
        assert np.allclose(got.get((j,), (0,)), exact[:, j], atol=1e-12)


def test_residual_in_two_dimensions(rng):
    g = random_vec_poly(2, 3, 2, rng)
    d = CoronaData(VecHoloPoly([g[0] + 3.0] + list(g)[1:]))
    Z = random_ball_points(rng, 20, 2, 0.8)
    for q in (0, 1):
        assert np.max(koszul_residual(q, d, Z)) <= 1e-6


@settings(max_examples=15)
@given(st.floats(0, 2 * np.pi))
def test_residual_rotation_invariant(theta):
    c = np.exp(1j * theta)
    base = koszul_datasets()[0]
    Z = disk_grid(12, 0.8)
    r0 = koszul_residual(0, CoronaData(base), Z)
    r1 = koszul_residual(0, CoronaData(base.scale(c)), Z)
    assert np.allclose(r0, r1, atol=1e-9)


def test_residual_margin_and_degree():
    with pytest.raises(ValueError):
        koszul_residual(0, z_half(), np.array([[1 - 1e-5]]))
    with pytest.raises(ValueError):
        koszul_residual(1, z_half(), np.array([[0.1]]))


# -- quasi-multiplicativity ------------------------------------------------------------------

def test_norm_ratio_examples():
    d = z_half()
    Z = disk_grid(30, 0.9)
    assert np.allclose(norm_ratio(0, d, Z), 1.0)
    assert np.all(norm_ratio(1, d, Z) <= 1 + 1e-12)


def test_quasimult_constants_stable_across_N():
    table = quasimult_constants()
    for ell in (1, 2):
        vals = [table[N][ell] for N in (4, 8, 16)]
        assert min(vals) > 0
        assert max(vals) / min(vals) <= 2
