import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lew.errors import NonStochastic, Unreachable
from lew.lattice import (GraphKind, LatticePath, RowWeights, Translation, Vertex, build_cylinder,
                         build_grid, build_strip, build_up_right, graph_from_spec, lift_path,
                         path_weight, preset, project_to_cylinder)


def test_uniform_strip_is_stochastic_and_periodic():
    g = build_strip(6, 3)
    assert g.kind is GraphKind.STRIP and g.periodic
    for v in [(0, 0), (5, 1), (-7, 2), (13, 1)]:
        total = sum(w for _, w in g.neighbours(v))
        assert total == pytest.approx(1.0)
    assert g.is_boundary((2, 3)) and not g.is_boundary((2, 2))


@given(st.integers(-30, 30), st.integers(0, 3), st.integers(-5, 5))
def test_translation_preserves_weights(c, r, k):
    g = build_strip(5, 3)
    v = Vertex(c, r)
    w = g.translate(v, k)
    assert w == Vertex(c + 5 * k, r)
    a = sorted((u.col - v.col, u.row, x) for u, x in g.neighbours(v))
    b = sorted((u.col - w.col, u.row, x) for u, x in g.neighbours(w))
    assert a == b


def test_grid_is_width_by_rows_and_reflecting():
    g = build_grid(6, 4)
    assert len(g.base.vertices) == 6 * 5
    for v in g.base.vertices:
        if not g.is_boundary(v):
            assert sum(w for _, w in g.neighbours(v)) == pytest.approx(1.0)


def test_overweight_rows_rejected():
    with pytest.raises(NonStochastic):
        build_strip(4, 2, RowWeights(up=0.5, down=0.5, left=0.5, right=0.0))


def test_unreachable_rejected():
    with pytest.raises(Unreachable):
        build_strip(4, 2, RowWeights(up=0.0, down=0.0, left=0.5, right=0.5))


def test_up_right_counts_paths():
    g = build_up_right(3, 2)
    assert not g.markov
    assert g.edge_weight((0, 0), (1, 0)) == 1.0


def test_quotient_and_lift_roundtrip():
    s = build_strip(4, 2)
    c = s.quotient()
    assert c.kind is GraphKind.CYLINDER and c.lift().kind is GraphKind.STRIP
    assert build_cylinder(4, 2).describe()["M"] == 4


@given(st.lists(st.sampled_from([(1, 0), (-1, 0), (0, 1)]), min_size=1, max_size=30))
def test_projection_lift_roundtrip(moves):
    g = build_strip(3, 40)
    verts = [Vertex(0, 0)]
    for dc, dr in moves:
        v = verts[-1]
        verts.append(Vertex(v.col + dc, v.row + dr))
    p = LatticePath(tuple(verts), g)
    back = lift_path(project_to_cylinder(p), 0)
    assert back.vertices == p.vertices
    expected = np.prod([g.edge_weight(u, v) for u, v in zip(verts[:-1], verts[1:])])
    assert path_weight(g, verts) == pytest.approx(expected)
    assert 0 < expected <= 1


def test_graph_spec_roundtrip(tmp_path):
    spec = {"kind": "strip", "M": 5, "N": 2, "rows": [{"left": 0.3, "right": 0.2, "up": 0.3, "down": 0.2}]}
    g = graph_from_spec(spec)
    f = tmp_path / "g.json"
    f.write_text(json.dumps(spec))
    h = graph_from_spec(str(f))
    assert g.describe() == h.describe()
    assert g.edge_weight((0, 1), (-1, 1)) == pytest.approx(0.3)


def test_presets():
    assert preset("uniform-strip", 6, 3).kind is GraphKind.STRIP
    with pytest.raises(ValueError):
        preset("nope", 2, 2)


def test_translation_object():
    g = build_strip(4, 2)
    assert g.translate((1, 1), Translation(2)) == Vertex(9, 1)
