import math

import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, strategies as st

from lew.errors import SeamUndefined, TargetNotBoundary, WrongGraphKind
from lew.hitting import (absorption_totals, affine_determinant, cyclic_route_sum, cyclic_targets,
                         fomin_determinant, hitting_probability_matrix, sum_of_determinants,
                         twisted_hitting_matrix, windowed_strip_matrix)
from lew.lattice import Vertex, build_cylinder, build_grid, build_strip, build_up_right


def test_rows_sum_to_one_on_grid():
    g = build_grid(5, 3)
    a = [(c, 0) for c in range(5)]
    assert np.allclose(absorption_totals(g, a), 1.0)
    H = hitting_probability_matrix(g, a, [(c, 3) for c in range(5)]).entries
    assert np.allclose(H.sum(axis=1), 1.0)


def test_exact_matches_float():
    g = build_grid(3, 2)
    rep = fomin_determinant(g, [(2, 0), (0, 0)], [(2, 2), (0, 2)], exact=True)
    assert float(rep.exact_value) == pytest.approx(rep.value, rel=1e-12)
    assert rep.to_json()["exact_determinant"] is not None


def test_target_must_be_boundary():
    g = build_grid(3, 2)
    with pytest.raises(TargetNotBoundary):
        fomin_determinant(g, [(0, 0)], [(0, 1)])


def test_strip_direct_solve_rejected():
    with pytest.raises(WrongGraphKind):
        hitting_probability_matrix(build_strip(4, 2), [(0, 0)], [(0, 2)])
    with pytest.raises(SeamUndefined):
        twisted_hitting_matrix(build_grid(3, 2), [(0, 0)], [(0, 2)])


def test_zeta_plus_sums_to_cylinder_hitting():
    s = build_strip(5, 3)
    a, b = [(0, 0), (2, 1)], [(0, 3), (3, 3)]
    tw = twisted_hitting_matrix(s, a, b, 1).entries
    cyl = hitting_probability_matrix(s.quotient(), a, b).entries
    assert np.allclose(tw, cyl, atol=1e-13)


@pytest.mark.parametrize("zeta", [1, -1, complex(math.cos(2.0), math.sin(2.0))])
def test_twisted_vs_windowed_oracle(zeta):
    s = build_strip(6, 3)
    a, b = [(3, 0), (0, 0)], [(3, 3), (0, 3)]
    T = twisted_hitting_matrix(s, a, b, zeta).entries
    errs = [np.abs(T - windowed_strip_matrix(s, a, b, W, zeta).entries).max() for W in range(2, 9)]
    assert errs[-1] < 1e-9
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


def test_sum_of_determinants_single_walker_is_plain_sum():
    s = build_strip(4, 2)
    v = sum_of_determinants(s, [(0, 0)], [(1, 2)])
    assert v == pytest.approx(hitting_probability_matrix(s.quotient(), [(0, 0)], [(1, 2)]).entries[0, 0])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cyclic_route_matches_affine_determinant(n):
    s = build_strip(8, 3)
    step = 8 // n
    a = [((n - 1 - i) * step, 0) for i in range(n)]
    b = [((n - 1 - i) * step, 3) for i in range(n)]
    assert cyclic_route_sum(s, a, b) == pytest.approx(affine_determinant(s, a, b).value, abs=1e-10)


def test_cyclic_targets_wrap():
    b = [(4, 3), (2, 3), (0, 3)]
    assert cyclic_targets(b, 1, 6) == [Vertex(6, 3), Vertex(4, 3), Vertex(2, 3)]


def test_odd_affine_equals_cylinder_fomin():
    s = build_strip(6, 3)
    a, b = [(4, 0), (2, 0), (0, 0)], [(4, 3), (2, 3), (0, 3)]
    assert affine_determinant(s, a, b).value == pytest.approx(
        fomin_determinant(build_cylinder(6, 3), a, b).value, rel=1e-12)


def _lgv_count(width, N, c, d):
    # number of up/right paths into (d, N) from (c, 0) that only step up from row N - 1
    dp = {}
    for r in range(N):
        for col in range(width):
            val = 1 if (col, r) == (c, 0) else 0
            if r > 0:
                val += dp[(col, r - 1)]
            if col > 0:
                val += dp[(col - 1, r)]
            dp[(col, r)] = val
    return dp[(d, N - 1)]


@given(st.integers(2, 5), st.integers(1, 4), st.integers(1, 3), st.data())
def test_acyclic_reduction_exact(width, N, n, data):
    n = min(n, width)
    cols = sorted(data.draw(st.lists(st.integers(0, width - 1), min_size=n, max_size=n, unique=True)),
                  reverse=True)
    ends = sorted(data.draw(st.lists(st.integers(0, width - 1), min_size=n, max_size=n, unique=True)),
                  reverse=True)
    g = build_up_right(width, N)
    rep = fomin_determinant(g, [(c, 0) for c in cols], [(d, N) for d in ends], exact=True)
    counts = [[_lgv_count(width, N, c, d) for d in ends] for c in cols]
    from sympy import Matrix
    assert rep.exact_value == Matrix(counts).det()
