"""Ordered-coordinate chambers: membership, point generation and integration."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, NonIntegrable

TWO_PI = 2 * math.pi


_LINE_MAPS = {
    "algebraic": (
        lambda u, c: (c * np.tan(math.pi * (u - 0.5)), c * math.pi / np.cos(math.pi * (u - 0.5)) ** 2),
        lambda u, c: (c * np.tan(math.pi * u / 2), c * (math.pi / 2) / np.cos(math.pi * u / 2) ** 2),
    ),
    "exponential": (
        lambda u, c: (c * np.log(u / (1 - u)), c / (u * (1 - u))),
        lambda u, c: (2 * c * np.arctanh(u), 2 * c / (1 - u * u)),
    ),
}


class ChamberKind(str, enum.Enum):
    WEYL_C = "WeylC"          # x_n < ... < x_1
    POSITIVE_D = "PositiveD"  # 0 < x_n < ... < x_1
    DISK_N = "DiskN"          # -1 < x_n < ... < x_1 < 1
    THETA = "Theta"           # 0 < th_1 < ... < th_n < pi
    AFFINE_C = "AffineC"      # nu_n < ... < nu_1 < nu_n + 2 pi, -pi <= nu_n < pi


@dataclass(frozen=True)
class ChamberSpec:
    kind: ChamberKind
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", ChamberKind(self.kind))
        if self.n < 1:
            raise DomainError("chamber dimension must be positive")

    # -- geometry -----------------------------------------------------------------

    def wall_gaps(self, p) -> np.ndarray:
        """Signed distances to every wall; all positive iff ``p`` is in the chamber.

        Works on a single point or a batch of shape (..., n).
        """
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.n:
            raise DomainError(f"expected {self.n} coordinates, got {p.shape[-1]}")
        k = self.kind
        if k is ChamberKind.THETA:
            inner = p[..., 1:] - p[..., :-1]
            outer = [p[..., :1], math.pi - p[..., -1:]]
        else:
            inner = p[..., :-1] - p[..., 1:]
            outer = []
            if k is ChamberKind.POSITIVE_D:
                outer = [p[..., -1:]]
            elif k is ChamberKind.DISK_N:
                outer = [1 - p[..., :1], p[..., -1:] + 1]
            elif k is ChamberKind.AFFINE_C:
                outer = [p[..., -1:] + TWO_PI - p[..., :1]]
        return np.concatenate([inner, *outer], axis=-1)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        ok = bool(np.all(self.wall_gaps(p) > 0))
        if self.kind is ChamberKind.AFFINE_C:
            ok = ok and -math.pi <= p[-1] < math.pi
        return ok

    def wall_distance(self, p) -> np.ndarray:
        g = self.wall_gaps(p)
        if g.shape[-1] == 0:
            return np.full(g.shape[:-1], math.inf)
        return g.min(axis=-1)

    def require(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if not self.contains(p):
            raise DomainError(f"{p.tolist()} is not in the {self.kind.value} chamber")
        return p

    # -- unit cube parametrisation ---------------------------------------------------

    def from_unit(self, u, tails: str = "algebraic", scale: float = 1.0):
        """Map points of (0,1)^n onto the chamber; returns (points, jacobians).

        For unbounded chambers ``tails`` picks the map: ``"algebraic"`` uses
        ``scale * tan`` (power-law decay), ``"exponential"`` uses ``scale * logit``
        (Gaussian decay) and ``"sech"`` sends an ordered angle chamber in
        (-pi/2, pi/2) through ``y = scale * artanh(sin phi)``, which turns
        ``sech(y / scale)`` weights into smooth trigonometric factors.
        """
        u = np.atleast_2d(np.asarray(u, dtype=float))
        n = self.n
        k = self.kind
        out = np.empty_like(u)
        jac = np.ones(u.shape[0])
        if tails == "sech" and k is ChamberKind.WEYL_C:
            s, jac = ChamberSpec(ChamberKind.DISK_N, n).from_unit(u)
            phi = (math.pi / 2) * s
            jac = jac * (math.pi / 2) ** n * np.prod(scale / np.cos(phi), axis=1)
            return scale * np.arctanh(np.sin(phi)), jac
        if k in (ChamberKind.WEYL_C, ChamberKind.POSITIVE_D):
            line, half = _LINE_MAPS[tails]
            if k is ChamberKind.WEYL_C:
                out[:, n - 1], j = line(u[:, 0], scale)
            else:
                out[:, n - 1], j = half(u[:, 0], scale)
            jac *= j
            for i in range(n - 2, -1, -1):
                g, j = half(u[:, n - 1 - i], scale)
                jac *= j
                out[:, i] = out[:, i + 1] + g
        elif k is ChamberKind.DISK_N:
            out[:, 0] = -1 + 2 * u[:, 0]
            jac *= 2
            for i in range(1, n):
                out[:, i] = -1 + (out[:, i - 1] + 1) * u[:, i]
                jac *= out[:, i - 1] + 1
        elif k is ChamberKind.THETA:
            out[:, n - 1] = math.pi * u[:, 0]
            jac *= math.pi
            for i in range(n - 2, -1, -1):
                out[:, i] = out[:, i + 1] * u[:, n - 1 - i]
                jac *= out[:, i + 1]
        else:
            out[:, n - 1] = -math.pi + TWO_PI * u[:, 0]
            jac *= TWO_PI
            if n > 1:
                out[:, 0] = out[:, n - 1] + TWO_PI * u[:, 1]
                jac *= TWO_PI
                for i in range(1, n - 1):
                    span = out[:, i - 1] - out[:, n - 1]
                    out[:, i] = out[:, n - 1] + span * u[:, i + 1]
                    jac *= span
        return out, jac

    # -- bounded sampling box for grids ----------------------------------------------

    def _box_points(self, u, scale: float) -> np.ndarray:
        k = self.kind
        if k is ChamberKind.WEYL_C:
            pts = -np.sort(-(scale * (2 * u - 1)), axis=1)
        elif k is ChamberKind.POSITIVE_D:
            pts = -np.sort(-(scale * u), axis=1)
        elif k is ChamberKind.DISK_N:
            pts = -np.sort(-(2 * u - 1), axis=1)
        elif k is ChamberKind.THETA:
            pts = np.sort(math.pi * u, axis=1)
        else:
            base = -math.pi + TWO_PI * u[:, :1]
            rest = -np.sort(-(TWO_PI * u[:, 1:]), axis=1)
            pts = np.concatenate([base + rest, base], axis=1)
        return pts


def chamber_grid(spec: ChamberSpec, size: int, seed: int = 0, min_wall: float = 0.05,
                 scale: float = 3.0, lower: float | None = None) -> np.ndarray:
    """Scrambled-Halton interior points at least ``min_wall`` from every wall.

    ``scale`` bounds the box used for unbounded chambers; ``lower`` optionally
    discards points whose smallest coordinate is below it.
    """
    sampler = qmc.Halton(d=spec.n, scramble=True, seed=seed)
    pts: list = []
    for _ in range(1000):
        cand = spec._box_points(sampler.random(max(64, 4 * size)), scale)
        keep = spec.wall_distance(cand) >= min_wall
        if lower is not None:
            keep &= cand.min(axis=1) >= lower
        pts.extend(cand[keep])
        if len(pts) >= size:
            return np.array(pts[:size])
    raise DomainError("could not place grid points; min_wall too large for the box")


def random_chamber_point(spec: ChamberSpec, rng: np.random.Generator, min_wall: float = 0.05,
                         scale: float = 3.0) -> np.ndarray:
    while True:
        p = spec._box_points(rng.random((1, spec.n)), scale)[0]
        if spec.wall_distance(p) >= min_wall:
            return p


# -- integration -----------------------------------------------------------------------


@dataclass(frozen=True)
class Normalization:
    value: float
    error: float     # quadrature: last change between orders; MC: standard error
    method: str
    nodes: int


def _gl_tensor(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    x = (x + 1) / 2
    w = w / 2
    grids = np.meshgrid(*([x] * n), indexing="ij")
    wgrids = np.meshgrid(*([w] * n), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    wt = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return u, wt


def _eval_chunks(density, pts, chunk=65536):
    return np.concatenate([np.asarray(density(pts[i:i + chunk]), dtype=float)
                           for i in range(0, len(pts), chunk)])


def normalize(density: Callable, spec: ChamberSpec, method: str = "tensor_quadrature",
              rtol: float = 1e-8, orders=None, samples: int = 200000, seed: int = 0,
              tails: str = "algebraic", scale: float = 1.0) -> Normalization:
    """Integral of ``density`` over the chamber.

    ``density`` takes an (m, n) array of chamber points and returns m values.
    Tensor Gauss-Legendre on the unit-cube parametrisation with order doubling,
    or plain Monte Carlo over the same parametrisation.
    """
    n = spec.n
    if method == "tensor_quadrature":
        if n > 4:
            raise NonIntegrable("tensor quadrature is limited to n <= 4")
        if orders is None:
            orders = {1: (16, 32, 64, 128, 256), 2: (16, 32, 64, 128), 3: (12, 24, 48, 64),
                      4: (8, 16, 24, 32)}[n]
        history = []
        prev = None
        for m in orders:
            u, w = _gl_tensor(n, m)
            pts, jac = spec.from_unit(u, tails, scale)
            val = math.fsum(_eval_chunks(density, pts) * jac * w)
            if not math.isfinite(val):
                raise NonIntegrable("density not finite at quadrature nodes")
            if prev is not None and abs(val - prev) <= rtol * abs(val):
                if val <= 0:
                    raise NonIntegrable("normalisation constant is not positive")
                return Normalization(val, abs(val - prev), method, len(w))
            prev = val
            history.append((m, val))
        raise NonIntegrable(f"quadrature did not converge to rtol={rtol}; orders and values {history}")
    if method == "mc_integration":
        rng = np.random.default_rng(seed)
        u = rng.random((samples, n))
        pts, jac = spec.from_unit(u, tails, scale)
        vals = _eval_chunks(density, pts) * jac
        return Normalization(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)),
                             method, samples)
    raise ValueError(f"unknown normalisation method {method!r}")
