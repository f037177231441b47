import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballcorona.norms import DivergenceWarning
from ballcorona.tabc import (BOUNDED, INCONCLUSIVE, UNBOUNDED, TabcOperator, TabcParams, bump,
                             family_member, parse_range, tabc_apply, tabc_kernel,
                             tabc_region_harness)
from ballcorona.tabc import _verdict

ORIGIN = np.array([0j])


def ones(W):
    return np.ones(len(W))


# -- the operator ---------------------------------------------------------------------

@pytest.mark.parametrize("a", [0.0, 0.3, 2.5])
def test_beta_oracle_at_origin(a):
    # int (1-|w|^2)^2 dV over the disc = pi/3
    assert tabc_apply(TabcParams(a, 2, 0), ones, ORIGIN, n=1)[0] == pytest.approx(math.pi / 3, rel=1e-10)


def test_polar_oracle_at_origin():
    # Delta(w, 0) = |w|^2, so T 1(0) = int |w|^2 dV = pi/2
    assert tabc_apply(TabcParams(1.0, 0, 2), ones, ORIGIN, n=1)[0] == pytest.approx(math.pi / 2, rel=1e-10)


def test_zero_input():
    z = np.array([[0.2], [0.5j]])
    assert np.all(tabc_apply(TabcParams(1, 0, 0), lambda W: np.zeros(len(W)), z) == 0)


@settings(max_examples=15)
@given(st.floats(0.5, 2), st.floats(0, 1), st.floats(-1, 1), st.floats(0, 0.8))
def test_positive_operator(a, b, c, r):
    z = np.array([[r * np.exp(0.4j)]])
    h = lambda W: np.abs(W[:, 0]) ** 2 + 0.1
    val = tabc_apply(TabcParams(a, b, c), h, z, resolution=32)[0]
    assert val.real > 0 and abs(val.imag) < 1e-12


def test_two_dimensional_origin():
    # n=2, b=0, c=0 at the origin: int dV over the ball = pi^2/2
    val = tabc_apply(TabcParams(1.0, 0, 0), ones, np.zeros(2), n=2)
    assert val == pytest.approx(math.pi ** 2 / 2, rel=1e-8)


def test_divergent_integral_flagged():
    # b = -1 makes (1-|w|^2)^b non-integrable at the sphere
    with pytest.warns(DivergenceWarning):
        val, bad = tabc_apply(TabcParams(1.0, -1.0, 0), ones, np.array([[0.1]]), detail=True)
    assert bad[0] and val[0] == np.inf


def test_kernel_diagonal_power():
    z = np.array([0.3 + 0.1j])
    w = z + 1e-3
    w2 = z + 1e-4
    t = TabcParams(0, 0, -1)
    k1, k2 = tabc_kernel(t, w[None], z)[0], tabc_kernel(t, w2[None], z)[0]
    assert k2 / k1 == pytest.approx(10, rel=1e-2)


def test_operator_estimator():
    op = TabcOperator(a=0.3, b=2, c=0).fit(ones)
    assert op.predict(np.array([[0.0]]))[0] == pytest.approx(math.pi / 3)
    assert op.get_params()["b"] == 2


def test_params_validation():
    with pytest.raises(ValueError):
        TabcParams(1, 0, 0, p=1.0)
    with pytest.raises(ValueError):
        TabcParams(1, 0, 0, sigma=-1.0)


def test_region_membership():
    assert TabcParams(1, 0, 0).in_region(1)
    assert not TabcParams(0.5, 0, 0).in_region(1)
    assert not TabcParams(1, 0, -2).in_region(1)
    assert not TabcParams(1, -1.5, 0).in_region(1)
    assert TabcParams(1.5, 0, -3.9).in_region(2)


# -- concentrating family --------------------------------------------------------------

def test_bump_profile():
    assert bump(0.0) == 1.0
    assert bump(1.0) == 0.0 and bump(1.5) == 0.0
    assert 0 < bump(0.9) < bump(0.5) < 1


def test_family_supported_in_tent():
    h = family_member(1, 0.01, 1.0)
    near = np.array([[0.995 + 0j]])
    far = np.array([[0.995 * np.exp(0.1j)]])
    assert h(near)[0] > 0 and h(far)[0] == 0


# -- harness ---------------------------------------------------------------------------

@pytest.mark.slow
def test_interior_triple_bounded():
    res = tabc_region_harness(TabcParams(1, 0, 0), 1)
    assert res.in_region
    assert res.verdict == BOUNDED
    assert res.curve.max() / np.median(res.curve) < 1.5


def test_a_at_half_dimension_unbounded():
    res = tabc_region_harness(TabcParams(0.5, 0, 0), 1)
    assert not res.in_region
    assert res.verdict == UNBOUNDED


def test_c_at_minus_two_n_unbounded():
    res = tabc_region_harness(TabcParams(1, 0, -2), 1)
    assert res.verdict == UNBOUNDED
    assert "diagonal" in res.reason


def test_verdict_rules():
    d = np.array([1e-1, 1e-2, 1e-3])
    assert _verdict(d, np.array([1.0, 1.1, 1.2]))[0] == BOUNDED
    assert _verdict(d, np.array([1.0, 2.5, 7.0]))[0] == UNBOUNDED
    assert _verdict(d, np.array([1.0, 1.2, 5.0]))[0] == INCONCLUSIVE
    assert _verdict(d, np.array([1.0, np.inf, np.inf]))[0] == UNBOUNDED


# -- ranges ----------------------------------------------------------------------------

def test_parse_range():
    assert list(parse_range("0:1:0.25")) == [0, 0.25, 0.5, 0.75, 1.0]
    assert list(parse_range("-2:-2:1")) == [-2.0]


@pytest.mark.parametrize("spec", ["0:1", "a:b:c", "0:1:0", "1:0:0.5"])
def test_parse_range_errors(spec):
    with pytest.raises(ValueError):
        parse_range(spec)
