"""Exact hitting probabilities and the determinants built from them.

All quantities come from one absorbing-chain solve ``(I - Q) X = R`` with a
sparse LU factorisation.  Sums over windings on the strip are obtained on the
cylinder by attaching a phase to every seam crossing: an edge that crosses
the seam rightward picks up ``zeta`` and leftward ``1/zeta``, so the solve
returns ``sum_k zeta^k h(a, S^k b)`` directly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import SeamUndefined, SingularSystem, TargetNotBoundary, WrongGraphKind
from .lattice import BaseChain, GraphKind, Vertex, WeightedDigraph

_SINGULAR_RCOND = 1e-14


class Method(str, enum.Enum):
    DIRECT = "DirectSolve"
    TWISTED = "TwistedCylinder"
    WINDOWED = "WindowedStrip"


def twist_for(n: int) -> int:
    """Sign used by the affine determinant: +1 for odd ``n``, -1 for even."""
    return 1 if n % 2 else -1


@dataclass(frozen=True)
class HittingMatrix:
    sources: tuple
    targets: tuple
    entries: np.ndarray
    method: Method
    twist: complex | int | None = None
    exact: object = None   # sympy Matrix of Rationals when requested

    @property
    def n(self) -> int:
        return len(self.sources)

    def __post_init__(self):
        if len(self.sources) < 1 or self.entries.shape != (len(self.sources), len(self.targets)):
            raise ValueError("hitting matrix needs n >= 1 sources and matching targets")


@dataclass(frozen=True)
class DeterminantReport:
    matrix: HittingMatrix
    value: float
    condition_estimate: float | None
    exact_value: object = None
    graph: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        tw = self.matrix.twist
        if isinstance(tw, complex):
            tw = [tw.real, tw.imag]
        return {
            "graph": self.graph,
            "sources": [list(v) for v in self.matrix.sources],
            "targets": [list(v) for v in self.matrix.targets],
            "n": self.matrix.n,
            "zeta": tw,
            "determinant": self.value,
            "exact_determinant": None if self.exact_value is None else str(self.exact_value),
            "condition_estimate": self.condition_estimate,
            "method": self.matrix.method.value,
        }


# -- the core solve ---------------------------------------------------------


class AbsorbingSolver:
    """Factorised ``I - Q`` for one graph and one seam phase.

    ``phase`` is ``None`` (ignore windings), a real sign ``-1`` (handled on the
    two-sheeted cover) or a complex unit.  Instances own a factorisation and
    are meant to be used by a single worker.
    """

    def __init__(self, base: BaseChain, phase=None):
        self.base = base
        self.phase = phase
        self.cover = phase is not None and not isinstance(phase, complex) and phase == -1
        if phase is not None and not self.cover and phase == 1:
            self.phase = None
        interior = np.flatnonzero(~base.boundary)
        self.interior = interior
        pos = -np.ones(base.size, dtype=np.int64)
        pos[interior] = np.arange(len(interior))
        self.pos = pos
        src = np.repeat(np.arange(base.size), np.diff(base.indptr))
        keep = ~base.boundary[src]
        self._src, self._tgt = src[keep], base.targets[keep]
        self._w, self._wn = base.weights[keep], base.winding[keep]
        self._lu = self._factor()

    def _edge_values(self):
        if self.phase is None or self.cover:
            return self._w
        return self._w * np.power(complex(self.phase), self._wn)

    def _factor(self):
        n = len(self.interior)
        if n == 0:
            return None
        into = ~self.base.boundary[self._tgt]
        r, c = self.pos[self._src[into]], self.pos[self._tgt[into]]
        if self.cover:
            flip = (self._wn[into] % 2).astype(np.int64)
            w = self._w[into]
            rows = np.concatenate([r, r + n])
            cols = np.concatenate([c + n * flip, c + n * (1 - flip)])
            Q = sparse.csc_matrix((np.concatenate([w, w]), (rows, cols)), shape=(2 * n, 2 * n))
            size = 2 * n
        else:
            Q = sparse.csc_matrix((self._edge_values()[into], (r, c)), shape=(n, n))
            size = n
        A = (sparse.identity(size, dtype=Q.dtype, format="csc") - Q).tocsc()
        try:
            lu = splu(A)
        except RuntimeError as exc:
            raise SingularSystem(f"I - Q is singular: {exc}") from exc
        diag = np.abs(lu.U.diagonal())
        if diag.min() <= _SINGULAR_RCOND * max(diag.max(), 1.0):
            raise SingularSystem("I - Q is numerically singular; absorption is not certain")
        return lu

    def _rhs(self, target_idx: Sequence[int]):
        """Columns ``R[:, b]`` (per sheet on the cover)."""
        n = len(self.interior)
        out = self.base.boundary[self._tgt]
        tg, s = self._tgt[out], self.pos[self._src[out]]
        col_of = {int(b): j for j, b in enumerate(target_idx)}
        m = len(target_idx)
        if self.cover:
            R = np.zeros((2 * n, 2 * m))
            flip = self._wn[out] % 2
            for t, row, w, f in zip(tg, s, self._w[out], flip):
                j = col_of.get(int(t))
                if j is not None:
                    R[row, j + m * f] += w
                    R[row + n, j + m * (1 - f)] += w
            return R
        vals = self._edge_values()[out]
        R = np.zeros((n, m), dtype=vals.dtype if len(vals) else float)
        for t, row, w in zip(tg, s, vals):
            j = col_of.get(int(t))
            if j is not None:
                R[row, j] += w
        return R

    def solve(self, target_idx: Sequence[int]) -> np.ndarray:
        """Matrix ``X[interior, target]`` of phase-weighted hitting values."""
        n, m = len(self.interior), len(target_idx)
        if n == 0:
            return np.zeros((0, m))
        X = self._lu.solve(self._rhs(target_idx))
        if self.cover:
            X = X[:n, :m] - X[:n, m:]
        if not np.all(np.isfinite(X)):
            raise SingularSystem("non-finite hitting values")
        return X

    def from_sources(self, X: np.ndarray, target_idx: Sequence[int],
                     source_idx: Sequence[int]) -> np.ndarray:
        """Rows of hitting values for arbitrary sources (h-plus on the boundary)."""
        base = self.base
        rows = []
        for i in source_idx:
            if not base.boundary[i]:
                rows.append(X[self.pos[i]])
                continue
            # boundary start: first step must land in the interior
            row = np.zeros(X.shape[1], dtype=X.dtype)
            lo, hi = base.indptr[i], base.indptr[i + 1]
            for t, w, wn in zip(base.targets[lo:hi], base.weights[lo:hi], base.winding[lo:hi]):
                if base.boundary[t]:
                    continue
                f = 1.0 if self.phase is None else complex(self.phase) ** int(wn)
                if self.cover:
                    f = (-1.0) ** int(wn)
                row = row + w * f * X[self.pos[t]]
            rows.append(row)
        return np.array(rows).reshape(len(source_idx), X.shape[1])


def _resolve(g: WeightedDigraph, verts, *, targets: bool):
    base = g.base
    idx, lifts = [], []
    for v in verts:
        v = Vertex(*v)
        if not g.contains(v) and not (g.periodic and 0 <= v.row <= g.N):
            raise ValueError(f"{v} is not a vertex of {g.name or g.kind.value}")
        c = g.canonical(v)
        if c not in base.index:
            raise ValueError(f"{v} is not a vertex of {g.name or g.kind.value}")
        i = base.index[c]
        if targets and not base.boundary[i]:
            raise TargetNotBoundary(f"target {v} is not on the absorbing boundary")
        idx.append(i)
        lifts.append(v.col // g.M if g.periodic else 0)
    return idx, np.array(lifts, dtype=np.int64)


def hitting_probability_matrix(g: WeightedDigraph, a: Sequence, b: Sequence, *,
                               exact: bool = False) -> HittingMatrix:
    """``h(a_i, b_j)`` on a finite graph or a cylinder.

    Boundary sources use the h-plus convention: the first step is drawn from
    the source's own out-weights and must enter the interior.  With
    ``exact=True`` the entries are also solved in rational arithmetic.
    """
    if g.kind is GraphKind.STRIP:
        raise WrongGraphKind("the strip is infinite; use the cylinder or a window")
    ai, _ = _resolve(g, a, targets=False)
    bi, _ = _resolve(g, b, targets=True)
    solver = AbsorbingSolver(g.base)
    X = solver.solve(bi)
    H = solver.from_sources(X, bi, ai).real.astype(float)
    ex = _exact_matrix(g.base, ai, bi) if exact else None
    return HittingMatrix(tuple(Vertex(*v) for v in a), tuple(Vertex(*v) for v in b),
                         H, Method.DIRECT, None, ex)


def absorption_totals(g: WeightedDigraph, sources: Sequence) -> np.ndarray:
    """Total absorption probability from each source, summed over all of the boundary."""
    if g.kind is GraphKind.STRIP:
        g = g.quotient()
    base = g.base
    ai, _ = _resolve(g, sources, targets=False)
    every = np.flatnonzero(base.boundary)
    solver = AbsorbingSolver(base)
    X = solver.solve(every)
    return solver.from_sources(X, every, ai).real.sum(axis=1)


def _exact_matrix(base: BaseChain, ai, bi):
    import sympy

    def q(x):
        return sympy.Rational(Fraction(float(x)).limit_denominator(10 ** 12))

    interior = np.flatnonzero(~base.boundary)
    pos = {int(i): k for k, i in enumerate(interior)}
    n, m = len(interior), len(bi)
    col = {int(b): j for j, b in enumerate(bi)}
    A = sympy.eye(n)
    R = sympy.zeros(n, m)
    for i in interior:
        for t, w, _ in base.out_edges(i):
            if int(t) in pos:
                A[pos[int(i)], pos[int(t)]] -= q(w)
            elif int(t) in col:
                R[pos[int(i)], col[int(t)]] += q(w)
    X = A.LUsolve(R) if n else sympy.zeros(0, m)
    rows = []
    for i in ai:
        i = int(i)
        if i in pos:
            rows.append(X.row(pos[i]))
        else:
            r = sympy.zeros(1, m)
            for t, w, _ in base.out_edges(i):
                if int(t) in pos:
                    r += q(w) * X.row(pos[int(t)])
            rows.append(r)
    return sympy.Matrix.vstack(*rows)


def _report(H: HittingMatrix, g: WeightedDigraph) -> DeterminantReport:
    E = H.entries
    value = np.linalg.det(E)
    if np.iscomplexobj(value):
        value = complex(value)
    else:
        value = float(value)
    with np.errstate(all="ignore"):
        try:
            cond = float(np.linalg.cond(E, 1))
        except np.linalg.LinAlgError:
            cond = math.inf
    exact_value = H.exact.det(method="bareiss") if H.exact is not None else None
    return DeterminantReport(H, value, cond if math.isfinite(cond) else None,
                             exact_value, g.describe())


def fomin_determinant(g: WeightedDigraph, a: Sequence, b: Sequence, *,
                      exact: bool = False) -> DeterminantReport:
    """``det h(a_i, b_j)`` with a condition estimate."""
    return _report(hitting_probability_matrix(g, a, b, exact=exact), g)


# -- seam-twisted sums --------------------------------------------------------


def _as_cylinder(g: WeightedDigraph) -> WeightedDigraph:
    if g.kind is GraphKind.STRIP:
        return g.quotient()
    if g.kind is not GraphKind.CYLINDER:
        raise SeamUndefined("a seam needs a cylinder or a strip")
    return g


def twisted_hitting_matrix(cyl: WeightedDigraph, a: Sequence, b: Sequence,
                           zeta=1) -> HittingMatrix:
    """Entries ``sum_k zeta^k h_strip(a_i, S^k b_j)``.

    Vertices may be given in strip coordinates: if ``a_i`` lies ``p`` periods
    and ``b_j`` lies ``q`` periods to the right of the base period, the entry
    picks up ``zeta^(p - q)``.  ``zeta`` is ``+1``, ``-1`` (solved in real
    arithmetic on the two-sheeted cover) or any complex unit.
    """
    cyl = _as_cylinder(cyl)
    if isinstance(zeta, complex) and zeta.imag == 0:
        zeta = zeta.real
    if not isinstance(zeta, complex):
        if zeta not in (1, -1):
            zeta = complex(zeta)
    if isinstance(zeta, complex) and not math.isclose(abs(zeta), 1.0, rel_tol=1e-12):
        raise ValueError("the seam phase must have modulus one")
    ai, pa = _resolve(cyl, a, targets=False)
    bi, pb = _resolve(cyl, b, targets=True)
    solver = AbsorbingSolver(cyl.base, None if zeta == 1 else zeta)
    X = solver.solve(bi)
    H = solver.from_sources(X, bi, ai)
    shift = pa[:, None] - pb[None, :]
    if zeta != 1:
        H = H * np.power(complex(zeta) if isinstance(zeta, complex) else float(zeta), shift)
    if not isinstance(zeta, complex):
        H = np.real_if_close(H).real.astype(float)
    return HittingMatrix(tuple(Vertex(*v) for v in a), tuple(Vertex(*v) for v in b),
                         H, Method.TWISTED, zeta)


def affine_determinant(cyl: WeightedDigraph, a: Sequence, b: Sequence,
                       n: int | None = None) -> DeterminantReport:
    n = len(a) if n is None else n
    if len(a) != n or len(b) != n:
        raise ValueError(f"need {n} sources and {n} targets")
    cyl = _as_cylinder(cyl)
    return _report(twisted_hitting_matrix(cyl, a, b, twist_for(n)), cyl)


def sum_of_determinants(cyl: WeightedDigraph, a: Sequence, b: Sequence,
                        n: int | None = None, *, imag_tol: float = 1e-10) -> float:
    """``(1/n) sum_u det(sum_k eta^(u k) h(a_i, S^k b_j))`` with ``eta = e^(2 pi i/n)``."""
    n = len(a) if n is None else n
    if len(a) != n or len(b) != n:
        raise ValueError(f"need {n} sources and {n} targets")
    cyl = _as_cylinder(cyl)
    total = 0j
    for u in range(n):
        eta = complex(np.exp(2j * np.pi * u / n)) if u else 1
        E = twisted_hitting_matrix(cyl, a, b, eta).entries
        total += complex(np.linalg.det(E))
    total /= n
    if abs(total.imag) > imag_tol:
        raise ArithmeticError(f"imaginary residue {total.imag:.3g} exceeds {imag_tol}")
    return total.real


def cyclic_targets(b: Sequence, ell: int, M: int) -> list:
    """``S^{k_ell} b_[ell]``: rotate targets by ``ell`` and lift the wrapped ones.

    Position ``i`` receives ``b_{i - ell}`` (cyclically); the first ``ell``
    positions, whose targets came round from the end, move one period right.
    """
    n = len(b)
    out = []
    for i in range(n):
        v = Vertex(*b[(i - ell) % n])
        out.append(Vertex(v.col + M, v.row) if i < ell else v)
    return out


def cyclic_route_sum(cyl: WeightedDigraph, a: Sequence, b: Sequence) -> float:
    """``sum_ell`` of :func:`sum_of_determinants` over the cyclic target shifts.

    This reassembles the single twisted determinant from the sector sums and
    serves as an independent route to :func:`affine_determinant`.
    """
    cyl = _as_cylinder(cyl)
    return math.fsum(sum_of_determinants(cyl, a, cyclic_targets(b, ell, cyl.M))
                     for ell in range(len(b)))


def windowed_strip_matrix(strip: WeightedDigraph, a: Sequence, b: Sequence, W: int,
                          zeta=1) -> HittingMatrix:
    """Truncated oracle: ``sum_{|k| <= W} zeta^k h_window(a_i, S^k b_j)``.

    The window spans columns ``[-W M, (W + 1) M - 1]`` and kills walks that
    leave it; sources and targets are taken in the base period.
    """
    if strip.kind is GraphKind.CYLINDER:
        strip = strip.lift()
    if strip.kind is not GraphKind.STRIP:
        raise WrongGraphKind("windowed oracle needs a strip")
    M = strip.M
    win = strip.window(-W * M, (W + 1) * M - 1)
    a = [Vertex(*v) for v in a]
    b = [Vertex(*v) for v in b]
    shifts = list(range(-W, W + 1))
    allb = [Vertex(v.col + k * M, v.row) for v in b for k in shifts]
    H = hitting_probability_matrix(win, a, allb).entries
    H = H.reshape(len(a), len(b), len(shifts))
    coef = np.array([zeta ** k for k in shifts])
    E = (H * coef).sum(axis=2)
    if not isinstance(zeta, complex):
        E = E.real.astype(float)
    return HittingMatrix(tuple(a), tuple(b), E, Method.WINDOWED, zeta)
