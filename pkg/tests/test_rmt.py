import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lew import rmt
from lew.chambers import ChamberKind, ChamberSpec, chamber_grid
from lew.errors import DomainError


def test_closed_forms_match_determinants():
    rng = np.random.default_rng(0)
    x = np.array([1.3, 0.4])
    Y = chamber_grid(ChamberSpec(ChamberKind.POSITIVE_D, 2), 10, seed=2)
    assert np.allclose(rmt.quadrant_det_density(x, Y), rmt.quadrant_det_density(x, Y, closed_form=True),
                       rtol=1e-10)
    Y = chamber_grid(ChamberSpec(ChamberKind.WEYL_C, 2), 10, seed=2)
    assert np.allclose(rmt.strip_det_density(1.0, [0.5, -0.2], Y),
                       rmt.strip_det_density(1.0, [0.5, -0.2], Y, closed_form=True), rtol=1e-10)
    T = chamber_grid(ChamberSpec(ChamberKind.THETA, 2), 10, seed=2)
    assert np.allclose(rmt.halfdisk_det_density([0.5, -0.3], T),
                       rmt.halfdisk_det_density([0.5, -0.3], T, closed_form=True), rtol=1e-10)
    assert np.allclose(rmt.excursion_det_density([0.5, -0.3], T),
                       rmt.excursion_det_density([0.5, -0.3], T, closed_form=True), rtol=1e-10)


def test_halfdisk_limit_forms_agree_up_to_scale():
    T = chamber_grid(ChamberSpec(ChamberKind.THETA, 3), 10, seed=4)
    a = rmt.halfdisk_limit_density(T, "cos")
    b = rmt.halfdisk_limit_density(T, "modulus")
    assert np.allclose(a / a[0], b / b[0], rtol=1e-12)


def test_densities_positive_on_chamber():
    T = chamber_grid(ChamberSpec(ChamberKind.AFFINE_C, 3), 15, seed=5)
    assert (rmt.circle_transition_density(1.0, T[0], T) > 0).all()
    assert (rmt.coe_density(T) > 0).all()


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("t", [0.5, 2.0])
def test_circle_direct_vs_fourier(n, t):
    spec = ChamberSpec(ChamberKind.AFFINE_C, n)
    T = chamber_grid(spec, 8, seed=n)
    a = rmt.circle_transition_density(t, T[0], T, method="direct")
    b = rmt.circle_transition_density(t, T[0], T, method="fourier")
    assert np.allclose(a, b, rtol=1e-8, atol=1e-14)


def test_annulus_direct_vs_fourier():
    T = chamber_grid(ChamberSpec(ChamberKind.AFFINE_C, 2), 8, seed=3)
    a = rmt.annulus_det_density(0.3, T[0], T)
    b = rmt.annulus_det_density(0.3, T[0], T, method="fourier")
    assert np.allclose(a, b, rtol=1e-8, atol=1e-14)


@given(st.integers(1, 4), st.integers(0, 7), st.integers(0, 1000))
def test_cyclic_shift_stays_in_chamber(n, ell, seed):
    spec = ChamberSpec(ChamberKind.AFFINE_C, n)
    nu = chamber_grid(spec, 1, seed=seed)[0]
    s = rmt.cyclic_shift(nu, ell)
    assert spec.contains(s)
    assert np.allclose(np.sort(np.mod(s, 2 * math.pi)), np.sort(np.mod(nu, 2 * math.pi)))


@pytest.mark.parametrize("n", [2, 3])
def test_labelled_density_routes_agree(n):
    spec = ChamberSpec(ChamberKind.AFFINE_C, n)
    th, nu = chamber_grid(spec, 2, seed=9)
    r = rmt.labelled_density(1.0, th, nu, "roots")
    assert rmt.labelled_density(1.0, th, nu, "fourier") == pytest.approx(r, rel=1e-10)
    assert rmt.labelled_density(1.0, th, nu, "images", K=3) == pytest.approx(r, rel=1e-8)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_coe_minima_match_closed_forms(n):
    for mode in ("circle_t_to_infty", "annulus_r_to_0"):
        minimum, gap = rmt.coe_gap(mode, n)
        assert minimum == pytest.approx(rmt.coe_minimum(mode, n))
        assert gap > 0
    assert rmt.coe_gap("circle_t_to_infty", n)[1] >= 0.5


def test_spread_point_is_centred():
    p = rmt.spread_point(3, 1.0, 0.1)
    assert np.allclose(p, [1.1, 1.0, 0.9])


def test_goe_limit_small_case():
    rep = rmt.limit_convergence("goe", 2, spreads=(0.2, 0.1), grid_size=8)
    assert rep.monotone and rep.errors[-1] < 0.02
    d = rep.to_dict()
    assert d["name"] == "goe" and len(d["reports"]) == 2


def test_domain_errors():
    with pytest.raises(DomainError):
        rmt.circle_transition_density(-1.0, [0.0], [0.0])
    with pytest.raises(DomainError):
        rmt.annulus_det_density(1.0, [0.0], [0.0])
    with pytest.raises(DomainError):
        rmt.coe_limit_check("circle_t_to_infty", 1, 30.0)
