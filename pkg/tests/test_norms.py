import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballcorona.ball import lambda_weight, sqnorm
from ballcorona.holo import HoloPoly, VecHoloPoly, y_norm
from ballcorona.norms import (DivergenceWarning, TentGrid, annulus_check, bmo_norm, bmoa_ratio,
                              cm_norm, mu_gm_density, multilinear_harness, multilinear_lhs,
                              sup_norm, wx_norm)

Z1 = HoloPoly.coordinate(1, 0)
ONE = HoloPoly.constant(1, 1.0)


@pytest.fixture(scope="module")
def grid1():
    return TentGrid.dyadic(1, directions=8, depth=6)


def witness(Z):
    # (1-|z|^2)^(3/2): the Carleson field of g(z) = z
    return (1.0 - sqnorm(Z)) ** 1.5


# -- grid ----------------------------------------------------------------------

def test_dyadic_grid_size():
    g = TentGrid.dyadic(1)
    assert len(g) == 8 * 6 + 1
    assert TentGrid.dyadic(2, whole=False).n == 2


def test_grid_rejects_mixed_dimensions():
    with pytest.raises(ValueError):
        TentGrid((np.array([0.5]), np.array([0.5, 0.0])))
    with pytest.raises(ValueError):
        TentGrid(())


# -- Carleson norm ---------------------------------------------------------------

def test_cm_zero(grid1):
    assert cm_norm(lambda Z: np.zeros(len(Z)), grid1) == 0


def test_cm_constant_diverges(grid1):
    with pytest.warns(DivergenceWarning):
        rep = cm_norm(lambda Z: np.ones(len(Z)), grid1, detail=True)
    assert rep.value == np.inf
    assert rep.divergent_apex is not None


def test_cm_witness_attained_on_largest_tent(grid1):
    rep = cm_norm(witness, grid1, detail=True)
    # whole-disc tent of apex radius 1/3: int (1-|z|^2) dV / (2/3) = 3 pi / 4
    assert rep.value == pytest.approx(math.sqrt(3 * math.pi / 4), rel=1e-6)
    assert abs(rep.apex[0]) == pytest.approx(1 / 3)
    # tent values decay towards the sphere like 1-|zeta|: int_S (1-|z|^2) dV ~ delta^3
    deep = rep.values[1:].reshape(6, 8).max(axis=1)
    assert np.all(np.diff(deep) < 0)
    assert deep[-1] / deep[-2] == pytest.approx(0.5, rel=0.1)


def test_cm_monotone(grid1):
    small = lambda Z: 0.5 * witness(Z) * np.abs(np.cos(3 * np.angle(Z[:, 0])))
    assert cm_norm(small, grid1) <= cm_norm(witness, grid1)


def test_cm_tuple_equals_modulus(grid1):
    pair = lambda Z: np.stack([witness(Z) * Z[:, 0], 0.3j * witness(Z)], axis=1)
    modulus = lambda Z: np.sqrt(np.sum(np.abs(pair(Z)) ** 2, axis=1))
    a = cm_norm(pair, grid1, detail=True).values
    b = cm_norm(modulus, grid1, detail=True).values
    assert np.allclose(a, b, rtol=1e-13, atol=0)


# -- BMO ----------------------------------------------------------------------------

def test_bmo_constant():
    assert bmo_norm(lambda X: np.full(len(X), 2.0 + 1j), 1) == pytest.approx(0, abs=1e-12)


def test_bmo_real_part_on_circle():
    # the largest cap is the whole circle, where cos has variance 1/2
    val = bmo_norm(lambda X: X[:, 0].real, 1)
    assert val == pytest.approx(1 / math.sqrt(2), rel=1e-3)


@settings(max_examples=10)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_bmo_ignores_constants(c):
    b = lambda X: X[:, 0] ** 2 + 0.5 * np.conj(X[:, 0])
    assert bmo_norm(lambda X: b(X) + c, 1) == pytest.approx(bmo_norm(b, 1), rel=1e-9, abs=1e-12)


# -- BMOA comparison -------------------------------------------------------------------

def test_bmoa_constant_is_degenerate():
    r = bmoa_ratio(ONE * 0.7, resolution=32)
    assert r.degenerate and np.isnan(r.lower) and np.isnan(r.upper)


def test_bmoa_scale_invariant():
    g = Z1 * Z1 + Z1 * 0.3
    a = bmoa_ratio(g, resolution=32)
    b = bmoa_ratio(g * 3.5, resolution=32)
    assert a.lower == pytest.approx(b.lower, rel=1e-10)
    assert a.lower * a.upper == pytest.approx(1)


def test_bmoa_accepts_tuples():
    r = bmoa_ratio(VecHoloPoly([Z1, Z1 * Z1]), resolution=32)
    assert not r.degenerate and r.lower > 0


# -- mu_g^m density ------------------------------------------------------------------

def test_density_constant():
    z = np.array([0.3 - 0.4j])
    a = 1 - 0.25
    want = a ** 3 * 4.0 * lambda_weight(z[None])[0]
    assert mu_gm_density(ONE * 2.0, 1, z) == pytest.approx(want)


def test_density_zero_and_scaling():
    z = np.array([[0.2], [0.5j], [-0.7]])
    g = Z1 * Z1 + 0.4
    assert np.all(mu_gm_density(ONE * 0.0, 2, z) == 0)
    lam = 1.5 - 2j
    assert np.allclose(mu_gm_density(g * lam, 2, z), abs(lam) ** 2 * mu_gm_density(g, 2, z))


def test_density_in_two_dimensions():
    g = HoloPoly.coordinate(2, 0) * HoloPoly.coordinate(2, 1)
    z = np.array([0.3, 0.2j])
    assert mu_gm_density(g, 1, z) > 0


# -- weak Carleson -----------------------------------------------------------------------

def test_wx_zero_and_homogeneity(grid1):
    assert wx_norm(ONE * 0.0, 2, 0.5, 1, grid1) == 0
    f = Z1 * Z1 - Z1 * 0.5
    a = wx_norm(f, 2, 0.5, 1, grid1)
    assert wx_norm(f * (3 - 4j), 2, 0.5, 1, grid1) == pytest.approx(5 * a, rel=1e-12)


def test_wx_parameter_errors(grid1):
    with pytest.raises(ValueError):
        wx_norm(Z1, 1.0, 0.5, 1, grid1)
    with pytest.raises(ValueError):
        wx_norm(Z1, 2.0, -0.1, 1, grid1)


def test_wx_against_cm_route_per_tent(grid1):
    # the two normalisations differ by (1+|zeta|)^(-n/2) on each tent
    f = Z1 * Z1 * 0.5 + Z1
    wx = wx_norm(f, 2, 0.5, 1, grid1, detail=True)
    cm = cm_norm(lambda Z: (1 - sqnorm(Z)) ** 0.5 * y_norm(f, Z, 1), grid1, detail=True)
    radii = np.array([t.radius for t in grid1])
    assert np.allclose(wx.values / cm.values, (1 + radii) ** -0.5, rtol=1e-12)
    ratio = wx.value / cm.value
    assert 2 ** -0.5 <= ratio <= 1


# -- annulus claim ------------------------------------------------------------------------

@pytest.mark.parametrize("delta_, k", [(1 / 64, 3), (1 / 64, 5), (1 / 256, 7)])
def test_annulus_ratio_window(delta_, k):
    zeta = np.array([(1 - delta_) * np.exp(0.7j)])
    rep = annulus_check(zeta, k, samples=3000)
    assert rep.count > 100
    assert 0.25 <= rep.ratio_min and rep.ratio_max <= 4
    assert 0.5 <= rep.mobius_min and rep.mobius_max <= 1 + 1e-12
    assert 0.25 <= rep.root_delta_min and rep.root_delta_max <= 4


def test_annulus_in_two_dimensions():
    zeta = np.array([0.99, 0.0]) * np.exp(0.3j)
    rep = annulus_check(zeta, 4, samples=4000)
    assert 0.25 <= rep.ratio_min and rep.ratio_max <= 4


def test_annulus_preconditions():
    with pytest.raises(ValueError):
        annulus_check(np.array([0.5]), 3)


# -- multilinear --------------------------------------------------------------------------

def test_multilinear_homogeneity():
    g = [Z1 * 0.4 + 0.6, Z1 * Z1 * 0.5 + 0.5]
    h = ONE + Z1 * 0.8
    alpha = (1, 0, 0)
    base = multilinear_lhs(g, h, alpha)
    c = 0.8 + 1.1j
    assert multilinear_lhs([gj * c for gj in g], h, alpha) == pytest.approx(abs(c) ** 4 * base, rel=1e-12)
    assert multilinear_lhs(g, h * c, alpha) == pytest.approx(abs(c) ** 2 * base, rel=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("slot", [0, 1])
def test_multilinear_constant_oracle(m, slot):
    # constants only see the identity word: |Y^m c|^2 = (1-|z|^2)^(2m) |c|^2, and
    # int (1-|z|^2)^(2m-1) dV = pi / (2m)
    cs = [0.5, 1.5 - 0.5j]
    alpha = [0, 0, 0]
    alpha[slot] = m
    lhs = multilinear_lhs([ONE * c for c in cs], ONE, alpha, resolution=64)
    want = np.prod([abs(c) ** 2 for c in cs]) * math.pi / (2 * m)
    assert lhs == pytest.approx(want, rel=1e-8)


def test_multilinear_alpha_validation():
    with pytest.raises(ValueError):
        multilinear_lhs([Z1], ONE, (1,))
    with pytest.raises(ValueError):
        multilinear_lhs([Z1], ONE, (0, 0))


def test_multilinear_report_consistency():
    rep = multilinear_harness([Z1 * 0.5 + 0.5], ONE + Z1 * 0.5, (0, 1))
    assert rep.ratio == pytest.approx(rep.lhs / (rep.g_side * rep.h_side))
    assert rep.g_side == pytest.approx(1.0, rel=1e-6)


def test_sup_norm():
    assert sup_norm(VecHoloPoly([Z1 * 0.6, ONE * 0.8]), 1) == pytest.approx(1.0)
