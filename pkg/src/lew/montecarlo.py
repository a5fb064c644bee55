"""Monte-Carlo estimates of the path-family side of the determinant identities.

Each walker is an independent copy of the chain.  Randomness comes from a
counter-based generator: the uniform used by walker ``w`` at step ``s`` of
sample ``i`` is a pure function of ``(seed, stream, w, i, s)``.  Samples are
processed in fixed-size chunks and the per-chunk integer tallies are summed,
so every estimate is bit-identical whatever the number of threads.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass
from typing import Sequence

import numba
import numpy as np
from numba import njit, prange

from .errors import MaxStepsExceeded, WrongGraphKind
from .lattice import GraphKind, LatticePath, Vertex, WeightedDigraph

log = logging.getLogger(__name__)

# the bundled TBB is too old for numba and warns on every parallel launch
if numba.config.THREADING_LAYER == "default" and "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

CHUNK = 1024
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# kernel modes
_FOMIN, _AFFINE = 0, 1
# tally slots
ABORT, HIT, CYL, BOTH, NC_POS, NC_NEG, KILLED = range(7)
_NSLOTS = 7
_MW = 2  # windings tallied per cyclic sector: -_MW.._MW


@dataclass(frozen=True)
class McConfig:
    samples: int = 1_000_000
    seed: int = 0
    max_steps: int | None = None   # default 100 N M^2
    stream_count: int = 1
    threads: int | None = None     # does not affect results

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.stream_count < 1:
            raise ValueError("stream_count must be >= 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def resolved_max_steps(self, g: WeightedDigraph) -> int:
        if self.max_steps is not None:
            return self.max_steps
        width = g.M or max(v.col for v in g.base.vertices) + 1
        return 100 * g.N * width * width

    def to_json(self, g: WeightedDigraph | None = None) -> dict:
        d = asdict(self)
        d.pop("threads")
        if g is not None:
            d["max_steps"] = self.resolved_max_steps(g)
        return d


@dataclass(frozen=True)
class McEstimate:
    p_hat: float
    std_err: float
    samples_used: int
    aborts: int
    killed: int = 0

    @classmethod
    def from_counts(cls, hits: int, used: int, aborts: int, killed: int = 0) -> "McEstimate":
        p = hits / used if used else 0.0
        se = math.sqrt(p * (1 - p) / used) if used else math.inf
        return cls(p, se, used, aborts, killed)


@dataclass(frozen=True)
class ZReport:
    p_hat: float
    exact: float
    std_err: float
    z: float
    passed: bool
    threshold: float = 4.0

    def to_json(self) -> dict:
        return asdict(self)


def z_report(est: McEstimate, exact: float, threshold: float = 4.0) -> ZReport:
    if not est.std_err > 0:
        raise ValueError("z score needs a positive standard error")
    z = (est.p_hat - exact) / est.std_err
    return ZReport(est.p_hat, float(exact), est.std_err, z, abs(z) <= threshold, threshold)


# -- generator -------------------------------------------------------------------


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _walker_key(seed, stream_count, walker, sample):
    stream = np.uint64(sample % stream_count)
    idx = np.uint64(sample // stream_count)
    k = _mix(np.uint64(seed) + _GAMMA)
    k = _mix(k ^ (stream + _GAMMA * np.uint64(3)))
    k = _mix(k ^ (np.uint64(walker) * _GAMMA + np.uint64(7)))
    return _mix(k ^ (idx * _M2 + np.uint64(11)))


@njit(inline="always")
def _uniform(key, step):
    return float(_mix(key + np.uint64(step + 1) * _GAMMA) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


# -- single walk --------------------------------------------------------------------


@njit(cache=True)
def _walk(indptr, targets, weights, dcol, boundary, start, col0, key, max_steps,
          out_idx, out_col):
    """Run one walk into the buffers; returns (length, status) with status
    0 = absorbed, 1 = killed, 2 = aborted."""
    idx = start
    col = col0
    out_idx[0] = idx
    out_col[0] = col
    L = 0
    while L == 0 or not boundary[idx]:
        if L >= max_steps:
            return L, 2
        u = _uniform(key, L)
        lo = indptr[idx]
        hi = indptr[idx + 1]
        acc = 0.0
        e = -1
        for k in range(lo, hi):
            acc += weights[k]
            if u < acc:
                e = k
                break
        if e < 0:
            return L, 1
        idx = targets[e]
        col += dcol[e]
        L += 1
        out_idx[L] = idx
        out_col[L] = col
        if L == 1 and boundary[start] and boundary[idx]:
            return L, 1  # boundary start must enter the interior first
    return L, 0


@njit(inline="always")
def _key(periodic, idx, col, nrow, colmin, shift):
    if periodic:
        return (col + shift - colmin) * nrow + (idx % nrow)
    return idx


@njit(cache=True)
def _erase(p_idx, p_col, L, periodic, project, nrow, colmin, last, stamp, s, le_idx, le_col):
    """Loop-erase one stored walk; keys are strip positions, or base indices
    when ``project`` (cylinder) or the graph is finite."""
    per = periodic and not project
    for j in range(L + 1):
        k = _key(per, p_idx[j], p_col[j], nrow, colmin, 0)
        last[k] = j
        stamp[k] = s
    j = last[_key(per, p_idx[0], p_col[0], nrow, colmin, 0)]
    m = 0
    while True:
        le_idx[m] = p_idx[j]
        le_col[m] = p_col[j]
        m += 1
        if j == L:
            return m
        j = last[_key(per, p_idx[j + 1], p_col[j + 1], nrow, colmin, 0)]


@njit(cache=True)
def _avoids(le_idx, le_col, m, q_idx, q_col, Lq, boundary, per, nrow, colmin, shift,
            mark, s):
    """True iff walk q misses every interior vertex of the erased path (shifted)."""
    for j in range(m):
        if not boundary[le_idx[j]]:
            mark[_key(per, le_idx[j], le_col[j], nrow, colmin, shift)] = s
    for j in range(Lq + 1):
        if not boundary[q_idx[j]] and mark[_key(per, q_idx[j], q_col[j], nrow, colmin, 0)] == s:
            return False
    return True


@njit(cache=True)
def _perm_sign(perm, n):
    seen = np.zeros(n, dtype=np.bool_)
    sign = 1
    for i in range(n):
        if seen[i]:
            continue
        j = i
        length = 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@njit(cache=True)
def _fomin_holds(n, P_idx, P_col, lens, boundary, per, project, nrow, colmin,
                 last, stamp, mark, le_idx, le_col, counter):
    for i in range(n - 1):
        counter += 1
        m = _erase(P_idx[i], P_col[i], lens[i], per, project, nrow, colmin, last, stamp,
                   counter, le_idx, le_col)
        for j in range(i + 1, n):
            counter += 1
            if not _avoids(le_idx, le_col, m, P_idx[j], P_col[j], lens[j], boundary,
                           per and not project, nrow, colmin, 0, mark, counter):
                return False, counter
    return True, counter


@njit(parallel=True, cache=True)
def _run(indptr, targets, weights, dcol, boundary, nrow, periodic, M,
         a_idx, a_col, b_idx, b_lift, mode, samples, seed, stream_count, max_steps,
         keyspan, colmin):
    n = a_idx.shape[0]
    nchunks = (samples + CHUNK - 1) // CHUNK
    tallies = np.zeros((nchunks, _NSLOTS), dtype=np.int64)
    sectors = np.zeros((nchunks, n, 2 * _MW + 1), dtype=np.int64)
    nbase = indptr.shape[0] - 1
    for c in prange(nchunks):
        span = keyspan if periodic else nbase
        last = np.zeros(span, dtype=np.int64)
        stamp = np.zeros(span, dtype=np.int64)
        mark = np.zeros(span, dtype=np.int64)
        plast = np.zeros(nbase, dtype=np.int64)
        pstamp = np.zeros(nbase, dtype=np.int64)
        pmark = np.zeros(nbase, dtype=np.int64)
        P_idx = np.empty((n, max_steps + 1), dtype=np.int64)
        P_col = np.empty((n, max_steps + 1), dtype=np.int64)
        le_idx = np.empty(max_steps + 1, dtype=np.int64)
        le_col = np.empty(max_steps + 1, dtype=np.int64)
        lens = np.empty(n, dtype=np.int64)
        perm = np.empty(n, dtype=np.int64)
        counter = 0
        pcounter = 0
        hi = min(samples, (c + 1) * CHUNK)
        for smp in range(c * CHUNK, hi):
            status = 0
            for w in range(n):
                key = _walker_key(seed, stream_count, w, smp)
                L, st = _walk(indptr, targets, weights, dcol, boundary, a_idx[w], a_col[w],
                              key, max_steps, P_idx[w], P_col[w])
                lens[w] = L
                if st > status:
                    status = st
            if status == 2:
                tallies[c, ABORT] += 1
                continue
            if status == 1:
                tallies[c, KILLED] += 1
                continue
            if mode == _FOMIN:
                ok = True
                for i in range(n):
                    if P_idx[i, lens[i]] != b_idx[i]:
                        ok = False
                        break
                if ok:
                    ok, counter = _fomin_holds(n, P_idx, P_col, lens, boundary, False, True,
                                               nrow, colmin, plast, pstamp, pmark,
                                               le_idx, le_col, counter)
                if ok:
                    tallies[c, HIT] += 1
                continue
            # affine mode on the strip: find the cyclic shift matching the endpoints
            aff = False
            cyc = False
            sector = -1
            wind = 0
            for ell in range(n):
                canon = True
                for i in range(n):
                    if P_idx[i, lens[i]] != b_idx[(i - ell) % n]:
                        canon = False
                        break
                if not canon:
                    continue
                cyc = True
                shift = 0
                for i in range(n):
                    t = (i - ell) % n
                    lift = P_col[i, lens[i]] // M - b_lift[t] - (1 if i < ell else 0)
                    if i == 0:
                        shift = lift
                    elif lift != shift:
                        canon = False
                        break
                if canon:
                    aff = True
                    sector = ell
                    wind = shift
                break
            if aff and n > 1:
                for j in range(1, n):
                    counter += 1
                    m = _erase(P_idx[j - 1], P_col[j - 1], lens[j - 1], True, False, nrow,
                               colmin, last, stamp, counter, le_idx, le_col)
                    counter += 1
                    if not _avoids(le_idx, le_col, m, P_idx[j], P_col[j], lens[j], boundary,
                                   True, nrow, colmin, 0, mark, counter):
                        aff = False
                        break
                if aff:
                    counter += 1
                    m = _erase(P_idx[n - 1], P_col[n - 1], lens[n - 1], True, False, nrow,
                               colmin, last, stamp, counter, le_idx, le_col)
                    counter += 1
                    aff = _avoids(le_idx, le_col, m, P_idx[0], P_col[0], lens[0], boundary,
                                  True, nrow, colmin, M, mark, counter)
            # cylinder projection: Fomin condition on the projected walks,
            # endpoints any permutation of the targets (signed if not cyclic)
            sign = 0
            if cyc:
                sign = 1
            else:
                is_perm = True
                for i in range(n):
                    perm[i] = -1
                    for t in range(n):
                        if P_idx[i, lens[i]] == b_idx[t]:
                            perm[i] = t
                            break
                    if perm[i] < 0:
                        is_perm = False
                        break
                if is_perm:
                    for i in range(n):
                        for j in range(i + 1, n):
                            if perm[i] == perm[j]:
                                is_perm = False
                if is_perm:
                    sign = 2 * _perm_sign(perm, n)  # marks a non-cyclic event
            if sign != 0:
                ok, pcounter = _fomin_holds(n, P_idx, P_col, lens, boundary, False, True,
                                            nrow, colmin, plast, pstamp, pmark,
                                            le_idx, le_col, pcounter)
                if not ok:
                    sign = 0
            if aff:
                tallies[c, HIT] += 1
                if -_MW <= wind <= _MW:
                    sectors[c, sector, wind + _MW] += 1
            if sign == 1:
                tallies[c, CYL] += 1
                if aff:
                    tallies[c, BOTH] += 1
            elif sign == 2:
                tallies[c, NC_POS] += 1
            elif sign == -2:
                tallies[c, NC_NEG] += 1
    return tallies, sectors


@njit(parallel=True, cache=True)
def _absorb_hist(indptr, targets, weights, dcol, boundary, start, samples, seed,
                 stream_count, max_steps):
    nbase = indptr.shape[0] - 1
    nchunks = (samples + CHUNK - 1) // CHUNK
    hist = np.zeros((nchunks, nbase + 2), dtype=np.int64)  # + killed, aborted
    for c in prange(nchunks):
        bi = np.empty(max_steps + 1, dtype=np.int64)
        bc = np.empty(max_steps + 1, dtype=np.int64)
        for smp in range(c * CHUNK, min(samples, (c + 1) * CHUNK)):
            key = _walker_key(seed, stream_count, 0, smp)
            L, st = _walk(indptr, targets, weights, dcol, boundary, start, 0, key,
                          max_steps, bi, bc)
            if st == 0:
                hist[c, bi[L]] += 1
            else:
                hist[c, nbase + st - 1] += 1
    return hist.sum(axis=0)


# -- python front end ------------------------------------------------------------------


def _arrays(g: WeightedDigraph):
    b = g.base
    return (b.indptr, b.targets, b.weights, b.dcol, b.boundary)


def _set_threads(threads: int | None):
    if threads:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))


def _starts(g: WeightedDigraph, verts):
    idx, cols = [], []
    for v in verts:
        v = Vertex(*v)
        c = g.canonical(v)
        if c not in g.base.index:
            raise ValueError(f"{v} is not a vertex of {g.name or g.kind.value}")
        idx.append(g.base.index[c])
        cols.append(v.col)
    return np.array(idx, dtype=np.int64), np.array(cols, dtype=np.int64)


def _finish(tallies: np.ndarray, samples: int, slot: int = HIT) -> McEstimate:
    aborts = int(tallies[ABORT])
    used = samples - aborts
    if aborts:
        log.warning("%d of %d samples exceeded max_steps and were discarded", aborts, samples)
    return McEstimate.from_counts(int(tallies[slot]), used, aborts, int(tallies[KILLED]))


def sample_walk(g: WeightedDigraph, start, cfg: McConfig = McConfig(samples=1), *,
                walker: int = 0, sample: int = 0) -> LatticePath:
    """The walk drawn for ``(walker, sample)`` under ``cfg.seed``.

    Raises :class:`MaxStepsExceeded` when the walk is still running after
    ``max_steps`` steps.  A killed walk (sub-stochastic row) is returned as
    it stood when it died.
    """
    max_steps = cfg.resolved_max_steps(g)
    idx, col = _starts(g, [start])
    key = np.uint64(_walker_key(np.uint64(cfg.seed & 0xFFFFFFFFFFFFFFFF), cfg.stream_count,
                                walker, sample))
    bi = np.empty(max_steps + 1, dtype=np.int64)
    bc = np.empty(max_steps + 1, dtype=np.int64)
    L, st = _walk(*_arrays(g), idx[0], col[0], key, max_steps, bi, bc)
    if st == 2:
        raise MaxStepsExceeded(f"walk from {start} did not finish in {max_steps} steps")
    verts = g.base.vertices
    if g.kind is GraphKind.STRIP:
        path = tuple(Vertex(int(c), verts[int(i)].row) for i, c in zip(bi[:L + 1], bc[:L + 1]))
    else:
        path = tuple(verts[int(i)] for i in bi[:L + 1])
    return LatticePath(path, g)


def absorption_counts(g: WeightedDigraph, start, cfg: McConfig) -> dict:
    """Histogram of first boundary hits from ``start`` (cylinder coordinates)."""
    if g.kind is GraphKind.STRIP:
        g = g.quotient()
    _set_threads(cfg.threads)
    idx, _ = _starts(g, [start])
    hist = _absorb_hist(*_arrays(g), idx[0], cfg.samples, np.uint64(cfg.seed & 0xFFFFFFFFFFFFFFFF),
                        cfg.stream_count, cfg.resolved_max_steps(g))
    nb = g.base.size
    out = {g.base.vertices[i]: int(hist[i]) for i in np.flatnonzero(hist[:nb])}
    out["killed"] = int(hist[nb])
    out["aborted"] = int(hist[nb + 1])
    return out


def _tally(g: WeightedDigraph, a, b, cfg: McConfig, mode: int):
    if len(a) != len(b) or not a:
        raise ValueError("need the same positive number of sources and targets")
    max_steps = cfg.resolved_max_steps(g)
    a_idx, a_col = _starts(g, a)
    b_idx, b_col = _starts(g, b)
    periodic = g.kind is GraphKind.STRIP
    M = g.M if g.periodic else 1
    b_lift = b_col // M if g.periodic else np.zeros_like(b_col)
    colmin = int(a_col.min()) - max_steps - M - 1
    keyspan = (int(a_col.max()) - colmin + max_steps + M + 2) * (g.N + 1) if periodic else 1
    _set_threads(cfg.threads)
    t, sec = _run(*_arrays(g), g.N + 1, periodic, M, a_idx, a_col, b_idx, b_lift.astype(np.int64),
             mode, cfg.samples, np.uint64(cfg.seed & 0xFFFFFFFFFFFFFFFF), cfg.stream_count,
             max_steps, keyspan, colmin)
    return t.sum(axis=0), sec.sum(axis=0)


def estimate_fomin_lhs(g: WeightedDigraph, a: Sequence, b: Sequence, cfg: McConfig) -> McEstimate:
    """P(walker i first hits the boundary at b_i for all i, and the Fomin condition holds)."""
    if g.kind is GraphKind.STRIP:
        raise WrongGraphKind("use estimate_affine_lhs on the strip")
    return _finish(_tally(g, a, b, cfg, _FOMIN)[0], cfg.samples)


@dataclass(frozen=True)
class AffineCylinderEstimate:
    """Affine-event and cylinder-event estimates from the same walks."""

    affine: McEstimate
    cylinder: McEstimate
    both: int
    noncyclic_pos: int
    noncyclic_neg: int
    sectors: tuple = ()   # [ell][m + 2]: affine-event counts by cyclic shift and winding

    def sector_estimate(self, ell: int, m: int = 0) -> McEstimate:
        """Weight of the single target tuple ``S^(m + k_ell) b_[ell]``."""
        return McEstimate.from_counts(self.sectors[ell][m + _MW], self.affine.samples_used,
                                      self.affine.aborts, self.affine.killed)

    @property
    def diff_std_err(self) -> float:
        """Standard error of ``affine.p_hat - cylinder.p_hat`` (paired samples)."""
        n = self.affine.samples_used
        pa, pc, pb = self.affine.p_hat, self.cylinder.p_hat, self.both / n
        var = pa + pc - 2 * pb - (pa - pc) ** 2
        return math.sqrt(max(var, 0.0) / n)


def _need_strip(g: WeightedDigraph):
    if g.kind is not GraphKind.STRIP:
        raise WrongGraphKind("affine estimates simulate on the strip")


def estimate_affine_lhs(strip: WeightedDigraph, a: Sequence, b: Sequence,
                        cfg: McConfig) -> McEstimate:
    """P(endpoints form a translated cyclic shift of ``b`` and the affine condition holds)."""
    _need_strip(strip)
    return _finish(_tally(strip, a, b, cfg, _AFFINE)[0], cfg.samples)


def estimate_affine_and_cylinder(strip: WeightedDigraph, a: Sequence, b: Sequence,
                                 cfg: McConfig) -> AffineCylinderEstimate:
    """Both path-family events on one set of walks.

    The cylinder event projects the walks, asks for the endpoints to be a
    cyclic shift of ``b`` and checks the Fomin condition on the projections.
    Non-cyclic endpoint permutations passing the same test are tallied by
    sign; the determinant identity predicts they carry no net weight.
    """
    _need_strip(strip)
    t, sec = _tally(strip, a, b, cfg, _AFFINE)
    aff = _finish(t, cfg.samples, HIT)
    cyl = _finish(t, cfg.samples, CYL)
    return AffineCylinderEstimate(aff, cyl, int(t[BOTH]), int(t[NC_POS]), int(t[NC_NEG]),
                                  tuple(tuple(int(x) for x in row) for row in sec))
