import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lew.chambers import ChamberKind, ChamberSpec, random_chamber_point
from lew.errors import DegenerateFunctions
from lew.identities import (SUITES, IdentityCase, cauchy_product_formulas, carlitz_factorization_check,
                            confluent_ratio, confluent_vandermonde_check, divided_difference,
                            dual_error, exponentials, heat_poisson_check, linear_in_eps, monomials,
                            permanent_check, poisson_summation_check, run_suite, skeel_condition,
                            well_conditioned_points)


def test_suite_all_passes():
    cases = run_suite("all", seed=7)
    assert cases and all(c.passed for c in cases)
    assert {c.name.split("/")[0] for c in cases} == set(SUITES)


def test_unknown_suite():
    with pytest.raises(ValueError):
        run_suite("nope")


def test_permanent_one_by_one_and_diagonal():
    assert permanent_check([[3.0]]).lhs == 3.0
    c = permanent_check(np.diag([1.0, 2.0, 4.0]))
    assert c.passed and c.lhs == 8.0


def test_quadrant_two_by_two_hand_expansion():
    # two points: det [k(x_i, y_j)] expanded by hand
    x, y = np.array([2.0, 0.5]), np.array([1.5, 0.3])
    from lew.kernels import quadrant_kernel as k
    hand = k(x[0], y[0]) * k(x[1], y[1]) - k(x[0], y[1]) * k(x[1], y[0])
    case = cauchy_product_formulas("quadrant", x, y)
    assert case.passed and case.lhs == pytest.approx(hand, rel=1e-14)


@pytest.mark.parametrize("dom", ["quadrant", "strip", "halfdisk"])
def test_cauchy_single_point_is_the_entry(dom):
    rng = np.random.default_rng(1)
    x, y = well_conditioned_points(dom, 1, rng)
    assert cauchy_product_formulas(dom, x, y).rel_err < 1e-14


@given(st.integers(1, 4), st.integers(0, 10 ** 6))
def test_carlitz_random(n, seed):
    rng = np.random.default_rng(seed)
    x = random_chamber_point(ChamberSpec(ChamberKind.DISK_N, n), rng)
    th = random_chamber_point(ChamberSpec(ChamberKind.THETA, n), rng)
    assert carlitz_factorization_check(x, th).passed


def test_divided_difference_of_cubic():
    f = lambda z: z ** 3
    # f[a, b, c] = a + b + c for a cubic
    assert divided_difference(f, [0.1, 0.2, 0.25], 0.2).real == pytest.approx(0.55, rel=1e-13)


def test_confluent_exponential_limit_n2():
    cases = confluent_vandermonde_check(exponentials([0.5, 1.5]), x0=0.0)
    assert cases[-1].rhs == pytest.approx(1.0)
    assert all(c.passed for c in cases)
    assert linear_in_eps(cases)


def test_confluent_monomials_are_exact():
    cases = confluent_vandermonde_check(monomials(4), x0=0.2)
    assert all(c.rel_err < 1e-13 for c in cases)


def test_divided_and_direct_ratio_agree_at_moderate_spread():
    f = exponentials([0.3, -0.7, 1.1])
    y = [0.5, 0.25, 0.0]
    assert confluent_ratio(f, y, "divided", centre=0.25) == pytest.approx(confluent_ratio(f, y, "direct"),
                                                                        rel=1e-10)


def test_degenerate_functions():
    with pytest.raises(DegenerateFunctions):
        confluent_vandermonde_check(exponentials([1.0, 1.0]))


def test_dual_error_is_mixed():
    assert dual_error(1e-20, 2e-20) == pytest.approx(1e-20)
    assert dual_error(100.0, 101.0) == pytest.approx(1 / 101)


def test_poisson_cases():
    assert poisson_summation_check(0.3, 0.0, 0.4, 0.4).passed
    assert poisson_summation_check(0.9, 0.0, 0.1, 2.0).passed
    assert heat_poisson_check(0.3, 0.5, 0.1, -2.0).passed


def test_skeel_condition_identity_and_singular():
    assert skeel_condition(np.eye(3)) == 1.0
    assert skeel_condition(np.ones((2, 2))) == math.inf


def test_identity_case_serialises():
    c = IdentityCase("x", {}, 1 + 1j, 1 + 1j, 0.0, 1e-12)
    assert c.passed and c.to_dict()["lhs"] == {"re": 1.0, "im": 1.0}
