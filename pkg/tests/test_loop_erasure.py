import pytest
from hypothesis import given, strategies as st

from lew.errors import WrongGraphKind
from lew.lattice import LatticePath, Vertex, build_grid, build_strip
from lew.loop_erasure import (affine_condition, erase_vertices, fomin_condition, loop_erase,
                              naive_loop_erase, paths_intersect)

walks = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60)


@given(walks)
def test_erasure_matches_reference(vs):
    vs = [Vertex(*v) for v in vs]
    fast = tuple(vs[j] for j in erase_vertices(vs))
    assert fast == naive_loop_erase(vs)


@given(walks)
def test_erasure_is_self_avoiding_and_keeps_endpoints(vs):
    vs = [Vertex(*v) for v in vs]
    out = naive_loop_erase(vs)
    assert len(set(out)) == len(out)
    assert out[0] == vs[0] and out[-1] == vs[-1]
    assert naive_loop_erase(out) == out


def test_simple_loop():
    p = LatticePath(((0, 0), (1, 0), (1, 1), (0, 1), (0, 0), (0, 1), (0, 2)))
    assert loop_erase(p).output.vertices == (Vertex(0, 0), Vertex(0, 1), Vertex(0, 2))


def test_fomin_condition_order_matters():
    g = build_grid(4, 3)
    p1 = LatticePath(((1, 0), (1, 1), (1, 2), (1, 3)), g)
    p2 = LatticePath(((0, 0), (0, 1), (0, 2), (0, 3)), g)
    cross = LatticePath(((0, 0), (1, 0), (1, 1), (0, 1), (0, 2), (0, 3)), g)
    assert fomin_condition([p1, p2])
    assert not fomin_condition([p1, cross])
    assert not paths_intersect(p1, p2)


def test_affine_condition_requires_strip():
    g = build_grid(4, 3)
    p = LatticePath(((0, 0), (0, 1), (0, 2), (0, 3)), g)
    with pytest.raises(WrongGraphKind):
        affine_condition([p])


def test_affine_wrap_detects_crossing_neighbour():
    g = build_strip(3, 2)
    p1 = LatticePath(((1, 0), (1, 1), (1, 2)), g)
    p2 = LatticePath(((0, 0), (0, 1), (0, 2)), g)
    assert affine_condition([p1, p2])
    # second walker wanders into the translate of the first
    p2b = LatticePath(((0, 0), (-1, 0), (-2, 0), (-2, 1), (-2, 2)), g)
    assert not affine_condition([p1, p2b])
