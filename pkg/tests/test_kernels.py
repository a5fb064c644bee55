import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from lew.errors import DomainError, Nonconvergent
from lew.kernels import (Domain, KernelFamily, ThetaParams, annulus_kernel_sum, annulus_theta_form,
                         circle_heat_sum, circle_theta_form, excursion_kernel_halfdisk,
                         halfdisk_kernel, jacobi_theta, quadrant_kernel, quadrant_to_strip_kernel,
                         strip_kernel, theta_series)

angle = st.floats(-math.pi, math.pi)


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("z,q", [(0.3, 0.5), (0.4 + 0.3j, 0.2), (1.1, 0.9), (0.2 + 0.5j, 0.6 + 0.1j)])
def test_theta_matches_mpmath(k, z, q):
    ref = complex(mpmath.jtheta(k, z, q))
    assert abs(jacobi_theta(k, z, q) - ref) <= 1e-12 * max(1.0, abs(ref))
    assert jacobi_theta(ThetaParams(k, q, z)) == jacobi_theta(k, z, q)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_theta_does_not_stop_at_a_cosine_zero(k):
    # cos(3z) = 0 at z = pi/6 wipes out the second theta-2 term
    for z in (math.pi / 6, math.pi / 4, math.pi / 10):
        assert jacobi_theta(k, z, 0.3).real == pytest.approx(float(mpmath.jtheta(k, z, 0.3)), rel=1e-14)


def test_theta_rejects_unit_nome():
    with pytest.raises(Nonconvergent):
        ThetaParams(3, 1.0)
    with pytest.raises(Nonconvergent):
        theta_series(3, 0.0, 1.0)


@given(st.floats(0.05, 10), st.floats(-5, 5))
def test_strip_kernel_matches_conformal_transport(t, x):
    y = np.linspace(-4, 4, 9)
    assert np.allclose(strip_kernel(t, x, y), quadrant_to_strip_kernel(t, x, y), rtol=1e-12)


def test_strip_kernel_is_a_probability_density():
    from scipy.integrate import quad
    for t in (0.5, 1.0, 3.0):
        tot = quad(lambda y: strip_kernel(t, 0.3, y), -np.inf, np.inf)[0]
        assert tot == pytest.approx(1.0, rel=1e-8)


def test_strip_kernel_overflow_safe():
    assert strip_kernel(1.0, 0.0, 2000.0) == 0.0


def test_kernels_positive():
    assert quadrant_kernel(1.0, 2.0) > 0
    assert halfdisk_kernel(0.2, 1.0) > 0
    assert excursion_kernel_halfdisk(0.2, 1.0) > 0


@given(st.floats(0.1, 20), st.sampled_from([0.0, 0.5]), angle, angle)
def test_circle_image_and_fourier_agree(t, x, th, nu):
    a = circle_heat_sum(t, x, th, nu, "image").value
    b = circle_heat_sum(t, x, th, nu, "fourier").value
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
    assert circle_theta_form(t, x, th, nu) == pytest.approx(a, abs=1e-12)


@given(st.floats(0.01, 0.8), st.sampled_from([0.0, 0.5]), angle, angle)
def test_annulus_image_and_fourier_agree(r, x, th, nu):
    a = annulus_kernel_sum(r, x, th, nu, "image").value
    b = annulus_kernel_sum(r, x, th, nu, "fourier").value
    assert abs(a - b) <= 1e-11 * max(1.0, abs(a))


@pytest.mark.parametrize("r", [0.05, 0.1, 0.3])
@pytest.mark.parametrize("x", [0.0, 0.5])
def test_annulus_theta_ratio_form(r, x):
    for th, nu in [(0.1, 0.1), (-1.0, 2.0), (0.5, -2.5), (0.0, math.pi / 3), (0.2, 0.2 + math.pi / 2)]:
        a = annulus_kernel_sum(r, x, th, nu).value
        assert annulus_theta_form(r, x, th, nu) == pytest.approx(a, rel=1e-10, abs=1e-14)


def test_circle_zero_twist_integrates_to_one():
    vals = [circle_heat_sum(0.7, 0.0, 0.2, nu).value for nu in np.linspace(-math.pi, math.pi, 401)[:-1]]
    assert np.mean(vals) * 2 * math.pi == pytest.approx(1.0, rel=1e-12)


def test_half_twist_is_antiperiodic():
    a = circle_heat_sum(1.0, 0.5, 0.0, 0.3).value
    b = circle_heat_sum(1.0, 0.5, 0.0, 0.3 + 2 * math.pi).value
    assert b == pytest.approx(-a, rel=1e-12)


def test_kernel_family_validation_and_dispatch():
    with pytest.raises(DomainError):
        KernelFamily(Domain.STRIP)
    with pytest.raises(DomainError):
        KernelFamily("annulus", r=1.5)
    f = KernelFamily("strip", t=2.0)
    assert f(0.1, 0.4) == strip_kernel(2.0, 0.1, 0.4)
    g = KernelFamily("annulus", r=0.2, twist=0.5)
    assert g(0.1, 0.4) == annulus_kernel_sum(0.2, 0.5, 0.1, 0.4).value
