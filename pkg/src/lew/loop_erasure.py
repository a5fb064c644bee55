"""Chronological loop-erasure and the non-intersection predicates built on it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import WrongGraphKind
from .lattice import GraphKind, LatticePath, Translation, Vertex


@dataclass(frozen=True)
class ErasureTrace:
    input: LatticePath
    output: LatticePath
    retained_indices: tuple


def erase_vertices(vertices: Sequence) -> tuple:
    """Retained positions of the chronological loop-erasure of a vertex list.

    Jump from the current position to the last visit of the vertex that
    follows it; a last-occurrence table makes this a single O(L) pass.
    """
    if not vertices:
        return ()
    last = {}
    for j, v in enumerate(vertices):
        last[v] = j
    out = []
    j = last[vertices[0]]
    end = len(vertices) - 1
    while True:
        out.append(j)
        if j == end:
            return tuple(out)
        j = last[vertices[j + 1]]


def loop_erase(p: LatticePath) -> ErasureTrace:
    if not p.vertices:
        raise ValueError("cannot loop-erase an empty path")
    idx = erase_vertices(p.vertices)
    verts = tuple(p.vertices[j] for j in idx)
    weight = float("nan")
    if p.graph is not None:
        weight = 1.0
        for u, v in zip(verts[:-1], verts[1:]):
            weight *= p.graph.edge_weight(u, v)
    return ErasureTrace(p, LatticePath(verts, p.graph, weight), idx)


def _interior(path: LatticePath, interior_only: bool) -> set:
    verts = set(path.vertices)
    if interior_only and path.graph is not None:
        verts = {v for v in verts if not path.graph.is_boundary(v)}
    return verts


def paths_intersect(p: LatticePath, q: LatticePath, interior_only: bool = True) -> bool:
    """True iff ``p`` and ``q`` share a vertex (a non-absorbing one by default)."""
    return not _interior(p, interior_only).isdisjoint(q.vertices)


def fomin_condition(paths: Sequence[LatticePath], interior_only: bool = True) -> bool:
    """``paths[j]`` avoids ``LE(paths[i])`` for every ``i < j``."""
    erased = [loop_erase(p).output for p in paths]
    for i, le in enumerate(erased):
        for q in paths[i + 1:]:
            if paths_intersect(le, q, interior_only):
                return False
    return True


def affine_condition(paths: Sequence[LatticePath], S: Translation = Translation(1),
                     interior_only: bool = True, single_wrap: bool = False) -> bool:
    """Consecutive condition plus the wrap condition against ``S paths[-1]``.

    For a single path the condition is vacuous by default: with one walker
    the determinant side is the plain sum over windings, which the wrap
    constraint would undercount.  ``single_wrap=True`` applies the literal
    self-wrap test ``P_1`` against ``LE(S P_1)`` instead.
    """
    if not paths:
        return True
    for p in paths:
        if p.graph is None or p.graph.kind is not GraphKind.STRIP:
            raise WrongGraphKind("affine condition is defined for paths on the strip")
    if len(paths) == 1 and not single_wrap:
        return True
    for prev, cur in zip(paths[:-1], paths[1:]):
        if paths_intersect(loop_erase(prev).output, cur, interior_only):
            return False
    wrapped = paths[-1].translate(S)
    return not paths_intersect(loop_erase(wrapped).output, paths[0], interior_only)


def naive_loop_erase(vertices: Sequence) -> tuple:
    """Reference erasure that repeatedly cuts the first loop closed in time."""
    out: list = []
    for v in vertices:
        v = Vertex(*v)
        if v in out:
            del out[out.index(v) + 1:]
        else:
            out.append(v)
    return tuple(out)
