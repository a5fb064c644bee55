"""Weighted directed lattices: finite grids, the periodic strip and its cylinder.

The periodic strip ``Z x {0..N}`` is never stored.  It is described by its
period ``M`` and a per-row weight table; finite pieces are materialised on
demand with :meth:`WeightedDigraph.window`.  Every graph exposes a
:class:`BaseChain`, the flat array form used by the solvers and samplers.  For
the strip and the cylinder the base chain is the quotient ``Z_M x {0..N}``
and every edge carries its column step, so lifts can be tracked exactly.
"""
from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import NonStochastic, Unreachable, WrongGraphKind

_WEIGHT_TOL = 1e-12


class Vertex(NamedTuple):
    col: int
    row: int


class GraphKind(str, enum.Enum):
    FINITE = "finite"
    STRIP = "strip"
    CYLINDER = "cylinder"


class Bottom(str, enum.Enum):
    """What happens to the down-weight of row 0."""

    REFLECT = "reflect"            # folded into the up-weight
    REDISTRIBUTE = "redistribute"  # spread proportionally over up/left/right
    KILL = "kill"                  # dropped; chain becomes sub-stochastic


@dataclass(frozen=True)
class RowWeights:
    up: float
    down: float
    left: float
    right: float

    def __post_init__(self):
        for name in ("up", "down", "left", "right"):
            if getattr(self, name) < 0:
                raise NonStochastic(f"negative {name} weight {getattr(self, name)}")

    @property
    def total(self) -> float:
        return self.up + self.down + self.left + self.right

    @classmethod
    def uniform(cls, p: float = 0.25) -> "RowWeights":
        return cls(p, p, p, p)

    @classmethod
    def from_dict(cls, d: Mapping[str, float]) -> "RowWeights":
        return cls(*(float(d.get(k, 0.0)) for k in ("up", "down", "left", "right")))

    def to_dict(self) -> dict:
        return {"up": self.up, "down": self.down, "left": self.left, "right": self.right}


@dataclass(frozen=True)
class Translation:
    """``k`` applications of the horizontal shift ``S`` by one period."""

    k: int = 1

    def __add__(self, other: "Translation") -> "Translation":
        return Translation(self.k + other.k)

    def __neg__(self) -> "Translation":
        return Translation(-self.k)


@dataclass(frozen=True)
class BaseChain:
    """Flat CSR representation of a graph (or of the quotient of a strip)."""

    vertices: tuple
    boundary: np.ndarray   # bool per vertex
    indptr: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    dcol: np.ndarray       # column step of each edge in the lifted strip
    winding: np.ndarray    # seam crossings of each edge (+1 rightward)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @property
    def size(self) -> int:
        return len(self.vertices)

    def out_edges(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return zip(self.targets[lo:hi], self.weights[lo:hi], self.winding[lo:hi])


def _effective_row(w: RowWeights, bottom: Bottom, at_bottom: bool) -> RowWeights:
    if not at_bottom or w.down == 0:
        return w
    if bottom is Bottom.REFLECT:
        return RowWeights(w.up + w.down, 0.0, w.left, w.right)
    if bottom is Bottom.REDISTRIBUTE:
        rest = w.up + w.left + w.right
        if rest == 0:
            return RowWeights(w.down, 0.0, 0.0, 0.0)
        f = 1.0 + w.down / rest
        return RowWeights(w.up * f, 0.0, w.left * f, w.right * f)
    return RowWeights(w.up, 0.0, w.left, w.right)


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """A weighted digraph with an absorbing boundary.

    Use the constructors :func:`build_strip`, :func:`build_cylinder`,
    :func:`build_grid` and :meth:`from_edges` rather than calling this directly.
    """

    kind: GraphKind
    N: int
    M: int = 0
    rows: tuple = ()
    bottom: Bottom = Bottom.REFLECT
    custom_absorbing: frozenset = frozenset()
    edges: Mapping | None = None       # FINITE only: {u: ((v, w), ...)}
    absorbing: frozenset = frozenset()  # FINITE only
    markov: bool = True
    name: str = field(default="", compare=False)

    # -- construction -------------------------------------------------------
    @classmethod
    def from_edges(cls, edges: Mapping[tuple, float], absorbing: Iterable,
                   *, markov: bool = True, name: str = "") -> "WeightedDigraph":
        """Finite graph from ``{(u, v): weight}``; vertices are ``(col, row)`` pairs.

        With ``markov=False`` out-weights may exceed one (e.g. integer path
        counting); the interior block must then have spectral radius below one.
        """
        adj: dict = {}
        verts = set()
        for (u, v), w in edges.items():
            u, v = Vertex(*u), Vertex(*v)
            if w < 0:
                raise NonStochastic(f"negative weight on edge {u}->{v}")
            verts.update((u, v))
            if w > 0:
                adj.setdefault(u, []).append((v, float(w)))
        absorbing = frozenset(Vertex(*a) for a in absorbing)
        verts |= absorbing
        frozen = {u: tuple(sorted(adj.get(u, ()))) for u in sorted(verts)}
        N = max(v.row for v in verts) if verts else 0
        g = cls(GraphKind.FINITE, N=N, edges=frozen, absorbing=absorbing,
                markov=markov, name=name)
        g._validate()
        return g

    def _validate(self):
        base = self.base
        if self.markov:
            for i in range(base.size):
                lo, hi = base.indptr[i], base.indptr[i + 1]
                tot = float(base.weights[lo:hi].sum())
                if tot > 1 + _WEIGHT_TOL:
                    raise NonStochastic(
                        f"out-weight {tot} > 1 at vertex {base.vertices[i]}")
        # backward reachability from the boundary over positive-weight edges
        rev = [[] for _ in range(base.size)]
        for i in range(base.size):
            for t, w, _ in base.out_edges(i):
                if w > 0:
                    rev[t].append(i)
        seen = base.boundary.copy()
        queue = deque(np.flatnonzero(seen))
        while queue:
            j = queue.popleft()
            for i in rev[j]:
                if not seen[i] and not base.boundary[i]:
                    seen[i] = True
                    queue.append(i)
        if not seen.all():
            bad = base.vertices[int(np.flatnonzero(~seen)[0])]
            raise Unreachable(f"vertex {bad} cannot reach the absorbing boundary")
        if not self.markov:
            from scipy.sparse.linalg import eigs  # local: only needed here
            Q = interior_block(base)
            if Q.shape[0]:
                if Q.shape[0] <= 400:
                    rho = max(abs(np.linalg.eigvals(Q.toarray())))
                else:
                    rho = max(abs(eigs(Q, k=1, return_eigenvectors=False)))
                if rho >= 1 - 1e-12:
                    raise Unreachable(
                        f"interior spectral radius {rho:.6g} >= 1; weights not summable")

    # -- queries --------------------------------------------------------------
    @property
    def periodic(self) -> bool:
        return self.kind in (GraphKind.STRIP, GraphKind.CYLINDER)

    def is_boundary(self, v) -> bool:
        v = Vertex(*v)
        if self.kind is GraphKind.FINITE:
            return v in self.absorbing
        return v.row == self.N or (v.col % self.M, v.row) in self.custom_absorbing

    def canonical(self, v) -> Vertex:
        """Cylinder representative of ``v`` (column reduced mod M)."""
        v = Vertex(*v)
        if not self.periodic:
            return v
        return Vertex(v.col % self.M, v.row)

    def contains(self, v) -> bool:
        v = Vertex(*v)
        if self.kind is GraphKind.FINITE:
            return v in self.edges
        if not 0 <= v.row <= self.N:
            return False
        return self.kind is GraphKind.STRIP or 0 <= v.col < self.M

    def row_weights(self, row: int) -> RowWeights:
        """Effective weights leaving a vertex of the given row."""
        if row >= len(self.rows):
            return RowWeights(0.0, 0.0, 0.0, 0.0)
        return _effective_row(self.rows[row], self.bottom, row == 0)

    def neighbours(self, v) -> list:
        """``[(w, weight)]`` out-edges of ``v`` in this graph's own coordinates."""
        v = Vertex(*v)
        if self.kind is GraphKind.FINITE:
            return list(self.edges.get(v, ()))
        if self.kind is GraphKind.CYLINDER:
            base = self.base
            i = base.index[self.canonical(v)]
            return [(base.vertices[t], float(w)) for t, w, _ in base.out_edges(i)]
        return [(Vertex(v.col + dc, v.row + dr), w)
                for dc, dr, w in _moves(self.row_weights(v.row), v.row, self.N) if w > 0]

    def edge_weight(self, u, v) -> float:
        for w, wt in self.neighbours(u):
            if w == Vertex(*v):
                return wt
        return 0.0

    def translate(self, v, t: Translation | int = 1) -> Vertex:
        if self.kind is not GraphKind.STRIP:
            raise WrongGraphKind(f"translation is defined on the strip, not {self.kind.value}")
        k = t.k if isinstance(t, Translation) else int(t)
        v = Vertex(*v)
        return Vertex(v.col + k * self.M, v.row)

    # -- derived graphs -------------------------------------------------------
    def quotient(self) -> "WeightedDigraph":
        """The cylinder obtained by identifying columns mod M."""
        if self.kind is GraphKind.CYLINDER:
            return self
        if self.kind is not GraphKind.STRIP:
            raise WrongGraphKind("only a strip has a cylinder quotient")
        return WeightedDigraph(GraphKind.CYLINDER, N=self.N, M=self.M, rows=self.rows,
                               bottom=self.bottom, custom_absorbing=self.custom_absorbing,
                               name=self.name.replace("strip", "cylinder"))

    def lift(self) -> "WeightedDigraph":
        if self.kind is GraphKind.STRIP:
            return self
        if self.kind is not GraphKind.CYLINDER:
            raise WrongGraphKind("only a cylinder lifts to a strip")
        return WeightedDigraph(GraphKind.STRIP, N=self.N, M=self.M, rows=self.rows,
                               bottom=self.bottom, custom_absorbing=self.custom_absorbing,
                               name=self.name.replace("cylinder", "strip"))

    def window(self, col_lo: int, col_hi: int) -> "WeightedDigraph":
        """Finite piece of the strip on columns ``[col_lo, col_hi]``.

        Edges leaving the window are dropped, so its two ends act as killing
        boundaries.
        """
        if self.kind is not GraphKind.STRIP:
            raise WrongGraphKind("windows are cut from the strip")
        edges = {}
        absorbing = []
        for c in range(col_lo, col_hi + 1):
            for r in range(self.N + 1):
                v = Vertex(c, r)
                if self.is_boundary(v):
                    absorbing.append(v)
                for w, wt in self.neighbours(v):
                    if col_lo <= w.col <= col_hi:
                        edges[(v, w)] = edges.get((v, w), 0.0) + wt
        return WeightedDigraph.from_edges(edges, absorbing,
                                          name=f"{self.name}[{col_lo}:{col_hi}]")

    # -- flat form --------------------------------------------------------------
    @cached_property
    def base(self) -> BaseChain:
        if self.kind is GraphKind.FINITE:
            verts = tuple(self.edges)
            index = {v: i for i, v in enumerate(verts)}
            indptr, tg, wt = [0], [], []
            for v in verts:
                for w, x in self.edges[v]:
                    tg.append(index[w])
                    wt.append(x)
                indptr.append(len(tg))
            zeros = np.zeros(len(tg), dtype=np.int64)
            boundary = np.array([v in self.absorbing for v in verts], dtype=bool)
            return BaseChain(verts, boundary, np.array(indptr, dtype=np.int64),
                             np.array(tg, dtype=np.int64), np.array(wt, dtype=float),
                             zeros, zeros.copy())
        M, N = self.M, self.N
        verts = tuple(Vertex(c, r) for c in range(M) for r in range(N + 1))
        indptr, tg, wt, dc, wn = [0], [], [], [], []
        for v in verts:
            for dcol, drow, w in _moves(self.row_weights(v.row), v.row, N):
                if w <= 0:
                    continue
                c = v.col + dcol
                tg.append((c % M) * (N + 1) + v.row + drow)
                wt.append(w)
                dc.append(dcol)
                wn.append(c // M)  # -1, 0 or +1 since 0 <= v.col < M
            indptr.append(len(tg))
        boundary = np.array([self.is_boundary(v) for v in verts], dtype=bool)
        return BaseChain(verts, boundary, np.array(indptr, dtype=np.int64),
                         np.array(tg, dtype=np.int64), np.array(wt, dtype=float),
                         np.array(dc, dtype=np.int64), np.array(wn, dtype=np.int64))

    # -- serialisation ------------------------------------------------------------
    def describe(self) -> dict:
        d = {"kind": self.kind.value, "N": self.N, "name": self.name}
        if self.periodic:
            d.update(M=self.M, rows=[r.to_dict() for r in self.rows],
                     bottom=self.bottom.value,
                     custom_absorbing=sorted(list(v) for v in self.custom_absorbing))
        else:
            d.update(vertices=len(self.edges), absorbing=len(self.absorbing))
            if self.M:
                d.update(M=self.M, rows=[r.to_dict() for r in self.rows],
                         bottom=self.bottom.value)
        return d


def _moves(w: RowWeights, row: int, N: int):
    """``(dcol, drow, weight)`` for the four directions out of ``row``."""
    out = [(-1, 0, w.left), (1, 0, w.right)]
    if row < N:
        out.append((0, 1, w.up))
    if row > 0:
        out.append((0, -1, w.down))
    return out


def interior_block(base: BaseChain, phase: complex | float = 1.0):
    """Sparse interior-to-interior block ``Q`` (with seam phase applied)."""
    from scipy import sparse

    interior = np.flatnonzero(~base.boundary)
    pos = -np.ones(base.size, dtype=np.int64)
    pos[interior] = np.arange(len(interior))
    rows, cols, vals = [], [], []
    for k, i in enumerate(interior):
        for t, w, wn in base.out_edges(i):
            if not base.boundary[t]:
                rows.append(k)
                cols.append(pos[t])
                vals.append(w * phase ** int(wn) if wn else w)
    dtype = complex if isinstance(phase, complex) else float
    return sparse.csr_matrix((np.array(vals, dtype=dtype), (rows, cols)),
                             shape=(len(interior), len(interior)))


def _row_table(weights, N: int) -> tuple:
    if isinstance(weights, RowWeights):
        weights = [weights]
    rows = [w if isinstance(w, RowWeights) else RowWeights.from_dict(w)
            for w in weights]
    if len(rows) == 1:
        rows = rows * N
    if len(rows) not in (N, N + 1):
        raise ValueError(f"need 1, N={N} or N+1 weight rows, got {len(rows)}")
    for r, w in enumerate(rows[:N]):
        if w.total > 1 + _WEIGHT_TOL:
            raise NonStochastic(f"row {r} out-weight {w.total} exceeds 1")
    return tuple(rows)


def _periodic(kind: GraphKind, M: int, N: int, weights, bottom, custom_absorbing,
              name: str) -> WeightedDigraph:
    if M < 1 or N < 1:
        raise ValueError("need M >= 1 and N >= 1")
    rows = _row_table(weights, N)
    custom = frozenset(Vertex(c % M, r) for c, r in custom_absorbing)
    g = WeightedDigraph(kind, N=N, M=M, rows=rows, bottom=Bottom(bottom),
                        custom_absorbing=custom, name=name)
    g._validate()
    return g


def build_strip(M: int, N: int, weights=RowWeights.uniform(), *, bottom="reflect",
                custom_absorbing: Iterable = ()) -> WeightedDigraph:
    """Periodic strip ``Z x {0..N}`` absorbed at row ``N``.

    ``weights`` is one :class:`RowWeights` (applied to every row) or a list of
    ``N`` of them; an optional extra row gives the first-step law out of the
    top row.  Weights are S-invariant by construction.
    """
    return _periodic(GraphKind.STRIP, M, N, weights, bottom, custom_absorbing,
                     f"strip(M={M},N={N})")


def build_cylinder(M: int, N: int, weights=RowWeights.uniform(), *, bottom="reflect",
                   custom_absorbing: Iterable = ()) -> WeightedDigraph:
    return _periodic(GraphKind.CYLINDER, M, N, weights, bottom, custom_absorbing,
                     f"cylinder(M={M},N={N})")


def build_grid(width: int, N: int, weights=RowWeights.uniform(), *, bottom="reflect",
               walls="reflect", custom_absorbing: Iterable = ()) -> WeightedDigraph:
    """Finite ``width x (N+1)`` grid absorbed on the top row.

    Side walls reflect (a blocked horizontal move is replaced by the opposite
    one) or kill (``walls="kill"``).
    """
    if width < 1 or N < 1:
        raise ValueError("need width >= 1 and N >= 1")
    rows = _row_table(weights, N)
    custom = {Vertex(*v) for v in custom_absorbing}
    edges = {}
    absorbing = []
    for c in range(width):
        for r in range(N + 1):
            v = Vertex(c, r)
            if r == N or v in custom:
                absorbing.append(v)
            if r >= len(rows):
                continue
            w = _effective_row(rows[r], Bottom(bottom), r == 0)
            left, right = w.left, w.right
            if walls == "reflect":
                if c == 0:
                    left, right = 0.0, right + left
                if c == width - 1:
                    left, right = left + right, 0.0
                if width == 1:
                    left = right = 0.0  # nowhere to go sideways; mass is lost
            for (dc, dr), x in (((0, 1), w.up), ((0, -1), w.down),
                                ((-1, 0), left), ((1, 0), right)):
                u = Vertex(c + dc, r + dr)
                if x > 0 and 0 <= u.col < width and 0 <= u.row <= N:
                    edges[(v, u)] = edges.get((v, u), 0.0) + x
    g = WeightedDigraph.from_edges(edges, absorbing, name=f"grid({width}x{N + 1})")
    return _with_table(g, width, rows, bottom)


def _with_table(g: WeightedDigraph, width: int, rows, bottom) -> WeightedDigraph:
    # keep the generating table for describe(); same graph otherwise
    object.__setattr__(g, "M", width)
    object.__setattr__(g, "rows", tuple(rows))
    object.__setattr__(g, "bottom", Bottom(bottom))
    return g


def build_up_right(width: int, N: int, up: float = 1.0, right: float = 1.0) -> WeightedDigraph:
    """Acyclic lattice with up and right steps only, absorbed on the top row.

    Integer weights count lattice paths, so this is not a Markov chain.
    """
    edges = {}
    absorbing = [Vertex(c, N) for c in range(width)]
    for c in range(width):
        for r in range(N):
            edges[((c, r), (c, r + 1))] = up
            if c + 1 < width:
                edges[((c, r), (c + 1, r))] = right
    return WeightedDigraph.from_edges(edges, absorbing, markov=False,
                                      name=f"up-right({width}x{N + 1})")


# -- paths -----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LatticePath:
    """A walk ``v_0 -> v_1 -> ... -> v_L`` in ``graph``."""

    vertices: tuple
    graph: WeightedDigraph | None = None
    weight: float = float("nan")

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(Vertex(*v) for v in self.vertices))
        if self.graph is not None and np.isnan(self.weight):
            object.__setattr__(self, "weight", path_weight(self.graph, self.vertices))

    def __len__(self) -> int:
        """Number of steps."""
        return max(len(self.vertices) - 1, 0)

    def __eq__(self, other):
        return isinstance(other, LatticePath) and self.vertices == other.vertices

    def __hash__(self):
        return hash(self.vertices)

    @property
    def edges(self) -> list:
        return list(zip(self.vertices[:-1], self.vertices[1:]))

    @property
    def start(self) -> Vertex:
        return self.vertices[0]

    @property
    def end(self) -> Vertex:
        return self.vertices[-1]

    def translate(self, t: Translation | int = 1) -> "LatticePath":
        return LatticePath(tuple(self.graph.translate(v, t) for v in self.vertices),
                           self.graph, self.weight)


def path_weight(graph: WeightedDigraph, vertices: Sequence) -> float:
    w = 1.0
    for u, v in zip(vertices[:-1], vertices[1:]):
        x = graph.edge_weight(u, v)
        if x == 0:
            raise ValueError(f"{u} -> {v} is not an edge of {graph.name or graph.kind.value}")
        w *= x
    return w


@dataclass(frozen=True)
class ProjectedPath:
    cylinder_path: LatticePath
    winding: int
    column_steps: tuple   # horizontal step of each edge; disambiguates M <= 2


def translate(graph: WeightedDigraph, v, t: Translation | int = 1) -> Vertex:
    return graph.translate(v, t)


def project_to_cylinder(p: LatticePath) -> ProjectedPath:
    g = p.graph
    if g is None or g.kind is not GraphKind.STRIP:
        raise WrongGraphKind("projection needs a path on the strip")
    cyl = g.quotient()
    steps = tuple(v.col - u.col for u, v in p.edges)
    winding = p.end.col // g.M - p.start.col // g.M
    proj = LatticePath(tuple(g.canonical(v) for v in p.vertices), cyl, p.weight)
    return ProjectedPath(proj, winding, steps)


def lift_path(pp: ProjectedPath, start_col: int) -> LatticePath:
    """Inverse of :func:`project_to_cylinder` given the strip start column."""
    cyl = pp.cylinder_path.graph
    strip = cyl.lift()
    first = pp.cylinder_path.start
    if start_col % cyl.M != first.col:
        raise ValueError("start column does not project onto the path start")
    cols = [start_col]
    for s in pp.column_steps:
        cols.append(cols[-1] + s)
    verts = tuple(Vertex(c, v.row) for c, v in zip(cols, pp.cylinder_path.vertices))
    return LatticePath(verts, strip, pp.cylinder_path.weight)


# -- graph spec files ---------------------------------------------------------------

PRESETS = ("uniform-strip", "uniform-cylinder", "uniform-grid")


def preset(name: str, M: int, N: int) -> WeightedDigraph:
    if name == "uniform-strip":
        return build_strip(M, N)
    if name == "uniform-cylinder":
        return build_cylinder(M, N)
    if name == "uniform-grid":
        return build_grid(M, N)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")


def graph_from_spec(spec: Mapping | str) -> WeightedDigraph:
    """Build a graph from the JSON graph-spec format (dict, JSON text or path)."""
    if isinstance(spec, str):
        text = spec
        if not spec.lstrip().startswith("{"):
            with open(spec) as fh:
                text = fh.read()
        spec = json.loads(text)
    kind = GraphKind(spec["kind"])
    M, N = int(spec["M"]), int(spec["N"])
    rows = [RowWeights.from_dict(r) for r in spec.get("rows") or [RowWeights.uniform().to_dict()]]
    bottom = spec.get("bottom", "reflect")
    custom = []
    if spec.get("boundary", "top") == "custom":
        custom = [tuple(v) for v in spec.get("custom_absorbing", [])]
    if kind is GraphKind.STRIP:
        return build_strip(M, N, rows, bottom=bottom, custom_absorbing=custom)
    if kind is GraphKind.CYLINDER:
        return build_cylinder(M, N, rows, bottom=bottom, custom_absorbing=custom)
    return build_grid(M, N, rows, bottom=bottom, custom_absorbing=custom)
