import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostlens.aberration import (
    MAX_NOLL,
    AberrationSpec,
    MonomialTerm,
    PhaseMap,
    ZernikeTerm,
    decompose_parity,
    noll_to_nm,
    pupil_factor,
    synthesize_phase,
    zernike,
)
from ghostlens.scene import GridGeometry, reflect

from conftest import random_spec


def polar_zernike(j, rho, theta):
    """Textbook form: factorial radial sum times cos/sin, Noll normalization."""
    n, m = noll_to_nm(j)
    am = abs(m)
    r = sum(
        (-1) ** k * math.factorial(n - k)
        / (math.factorial(k) * math.factorial((n + am) // 2 - k) * math.factorial((n - am) // 2 - k))
        * rho ** (n - 2 * k)
        for k in range((n - am) // 2 + 1)
    )
    if m == 0:
        return math.sqrt(n + 1) * r
    trig = math.cos(am * theta) if m > 0 else math.sin(am * theta)
    return math.sqrt(2 * (n + 1)) * r * trig


NOLL_TABLE = {1: (0, 0), 2: (1, 1), 3: (1, -1), 4: (2, 0), 5: (2, -2), 6: (2, 2), 7: (3, -1),
              8: (3, 1), 9: (3, -3), 10: (3, 3), 11: (4, 0), 22: (6, 0), 37: (8, 0)}


@pytest.mark.parametrize("j,nm", NOLL_TABLE.items())
def test_noll_table(j, nm):
    assert noll_to_nm(j) == nm


def test_zernike_matches_polar_form():
    rng = np.random.default_rng(1)
    x, y = rng.uniform(-1.3, 1.3, (2, 50))
    for j in range(1, 37):
        ours = zernike(j, x, y)
        ref = [polar_zernike(j, math.hypot(a, b), math.atan2(b, a)) for a, b in zip(x, y)]
        np.testing.assert_allclose(ours, ref, rtol=1e-12, atol=1e-12)


def test_spherical_at_rim():
    # R_4^0(r) = 6r^4 - 6r^2 + 1 -> 1 at r = 1, times sqrt(5)
    g = GridGeometry(2, 64, 2.0)
    phi = synthesize_phase(AberrationSpec((ZernikeTerm(11, 1.0),), aperture_radius=0.5), g)
    i = np.argmin(np.abs(g.axis() - 0.5))
    assert phi.values[i, 32] == pytest.approx(2.23606797749979, rel=1e-13)


def test_empty_spec_is_zero(grid256):
    phi = synthesize_phase(AberrationSpec(), grid256)
    assert not phi.values.any()


def test_quadratic_monomial(grid256):
    phi = synthesize_phase(AberrationSpec((MonomialTerm(2, None, 1.0),)), grid256)
    x = grid256.axis()
    np.testing.assert_array_equal(phi.values, x * x)


def test_noll_limit():
    with pytest.raises(ValueError, match="supported maximum"):
        ZernikeTerm(MAX_NOLL + 1, 1.0)
    ZernikeTerm(36, 1.0)


def test_zernike_rejected_on_1d(grid256):
    with pytest.raises(ValueError):
        synthesize_phase(AberrationSpec((ZernikeTerm(4, 1.0),)), grid256)


def test_pure_odd_and_even(grid256):
    cube = synthesize_phase(AberrationSpec((MonomialTerm(3, None, 1e6),)), grid256)
    even, odd = decompose_parity(cube)
    assert not even.values.any()
    np.testing.assert_array_equal(odd.values, cube.values)
    sq = synthesize_phase(AberrationSpec((MonomialTerm(2, None, 1e4),)), grid256)
    even, odd = decompose_parity(sq)
    assert not odd.values.any()
    np.testing.assert_array_equal(even.values, sq.values)


def test_edge_sample_is_parity_consistent(grid256):
    # the -L/2 sample has no mirror partner; it carries the even part only
    cube = synthesize_phase(AberrationSpec((MonomialTerm(3, None, 1.0), MonomialTerm(2, None, 1.0)),), grid256)
    assert cube.values[0] == pytest.approx((grid256.extent / 2) ** 2, rel=1e-15)


def test_coma_is_odd():
    g = GridGeometry(2, 128, 1.0)
    phi = synthesize_phase(AberrationSpec((ZernikeTerm(8, 1.0),), aperture_radius=0.5), g)
    even, odd = decompose_parity(phi)
    assert np.max(np.abs(even.values)) <= 1e-12 * np.max(np.abs(phi.values))
    np.testing.assert_allclose(odd.values, phi.values, rtol=0, atol=1e-12)


@pytest.mark.parametrize("j", range(1, 37))
def test_zernike_parity_law(j):
    g = GridGeometry(2, 64, 1.0)
    phi = synthesize_phase(AberrationSpec((ZernikeTerm(j, 1.0),), aperture_radius=0.4), g)
    even, odd = decompose_parity(phi)
    scale = np.max(np.abs(phi.values))
    m = noll_to_nm(j)[1]
    vanishing = even if m % 2 else odd
    surviving = odd if m % 2 else even
    assert np.max(np.abs(vanishing.values)) <= 1e-12 * scale
    np.testing.assert_allclose(surviving.values, phi.values, atol=1e-12 * scale)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dims=st.sampled_from([1, 2]))
def test_decomposition_properties(seed, dims):
    rng = np.random.default_rng(seed)
    g = GridGeometry(dims, 64 if dims == 2 else 256, 1e-3)
    phi = synthesize_phase(random_spec(rng, g), g)
    even, odd = decompose_parity(phi)
    scale = max(np.max(np.abs(phi.values)), 1e-300)
    assert np.max(np.abs(even.values + odd.values - phi.values)) <= 1e-12 * scale
    np.testing.assert_array_equal(reflect(even.values), even.values)
    np.testing.assert_array_equal(reflect(odd.values), -odd.values)
    e2, o2 = decompose_parity(even)
    np.testing.assert_array_equal(e2.values, even.values)
    assert not o2.values.any()
    e3, o3 = decompose_parity(odd)
    assert not e3.values.any()
    np.testing.assert_array_equal(o3.values, odd.values)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pupil_unimodular(seed):
    rng = np.random.default_rng(seed)
    g = GridGeometry(2, 32, 1e-3)
    phi = synthesize_phase(random_spec(rng, g), g)
    for doubling in (False, True):
        assert np.max(np.abs(np.abs(pupil_factor(phi, doubling).values) - 1)) <= 1e-12


def test_pupil_examples(grid256):
    assert np.all(pupil_factor(PhaseMap.zeros(grid256)).values == 1 + 0j)
    quarter = PhaseMap(grid256, np.full(grid256.shape, np.pi / 2))
    np.testing.assert_allclose(pupil_factor(quarter).values, 1j, atol=1e-15)
    sq = synthesize_phase(AberrationSpec((MonomialTerm(2, None, 1e5),)), grid256)
    np.testing.assert_array_equal(pupil_factor(sq, doubling=True).values, pupil_factor(sq.scaled(2.0)).values)
