"""Determinants of continuum hitting densities and their random-matrix limits.

Density functions take the starting configuration as a single chamber point
and the end configuration either as a single point or as a batch of shape
(m, n); batches return arrays.  ``closed_form=True`` switches the Cauchy-type
determinants to their product formulas.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .chambers import ChamberKind, ChamberSpec, chamber_grid, normalize
from .errors import DomainError
from .kernels import (_gauss_image_K, _sech, _sech_image_K, excursion_kernel_halfdisk,
                      halfdisk_kernel, quadrant_kernel, strip_kernel)
from .matrices import batch_permanent, perm_sign

TWO_PI = 2 * math.pi
SPREADS = (0.2, 0.1, 0.05)


# -- helpers -------------------------------------------------------------------------


def _as_batch(spec: ChamberSpec, pts):
    pts = np.asarray(pts, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != spec.n:
        raise DomainError(f"expected points with {spec.n} coordinates")
    gaps = spec.wall_gaps(pts)
    if np.any(gaps < 0) or (spec.kind is ChamberKind.AFFINE_C
                            and np.any((pts[:, -1] < -math.pi) | (pts[:, -1] >= math.pi))):
        raise DomainError(f"points outside the {spec.kind.value} chamber")
    return pts, single


def _out(vals, single):
    return vals[0] if single else vals


def _pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _vprod(f, Y):
    """prod_{i<j} f(Y[:, i], Y[:, j]) over a batch."""
    out = np.ones(Y.shape[0], dtype=np.result_type(Y.dtype, float))
    for i, j in _pairs(Y.shape[1]):
        out = out * f(Y[:, i], Y[:, j])
    return out


def _det_of(kernel, x, Y):
    M = kernel(x[None, :, None], Y[:, None, :])
    return np.linalg.det(M)


def gaussian_kernel(t, x, y):
    return np.exp(-(np.asarray(y) - np.asarray(x)) ** 2 / (2 * t)) / math.sqrt(2 * math.pi * t)


# -- Gaussian / GOE ----------------------------------------------------------------------


def km_gaussian_density(t: float, x, y):
    """``det[p_t(x_i, y_j)]`` on the Weyl chamber."""
    if not t > 0:
        raise DomainError("t must be positive")
    x = np.asarray(x, dtype=float)
    spec = ChamberSpec(ChamberKind.WEYL_C, len(x))
    spec.require(x)
    Y, single = _as_batch(spec, y)
    return _out(_det_of(lambda a, b: gaussian_kernel(t, a, b), x, Y), single)


def goe_limit_density(t: float, y):
    """``exp(-|y|^2/2t) prod_{i<j} (y_i - y_j)``; nonnegative for ``y_n < ... < y_1``."""
    y = np.asarray(y, dtype=float)
    spec = ChamberSpec(ChamberKind.WEYL_C, y.shape[-1])
    Y, single = _as_batch(spec, y)
    vals = np.exp(-(Y ** 2).sum(axis=1) / (2 * t)) * _vprod(lambda a, b: a - b, Y)
    return _out(vals, single)


# -- quadrant ------------------------------------------------------------------------------


def quadrant_det_density(x, y, closed_form: bool = False):
    x = np.asarray(x, dtype=float)
    n = len(x)
    spec = ChamberSpec(ChamberKind.POSITIVE_D, n)
    spec.require(x)
    Y, single = _as_batch(spec, y)
    if not closed_form:
        return _out(_det_of(quadrant_kernel, x, Y), single)
    cross = np.prod(x[None, :, None] ** 2 + Y[:, None, :] ** 2, axis=(1, 2))
    xs = math.prod(x[i] ** 2 - x[j] ** 2 for i, j in _pairs(n))
    vals = (2 / math.pi) ** n * np.prod(x) * xs * _vprod(lambda a, b: a * a - b * b, Y) / cross
    return _out(vals, single)


def quadrant_limit_density(t: float, y):
    """``prod_j (t^2 + y_j^2)^{-n} prod_{i<j} (y_i^2 - y_j^2)``."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    Y, single = _as_batch(ChamberSpec(ChamberKind.POSITIVE_D, n), y)
    vals = np.prod(t * t + Y ** 2, axis=1) ** (-n) * _vprod(lambda a, b: a * a - b * b, Y)
    return _out(vals, single)


# -- strip -----------------------------------------------------------------------------------


def strip_det_density(t: float, x, y, closed_form: bool = False):
    if not t > 0:
        raise DomainError("t must be positive")
    x = np.asarray(x, dtype=float)
    n = len(x)
    spec = ChamberSpec(ChamberKind.WEYL_C, n)
    spec.require(x)
    Y, single = _as_batch(spec, y)
    if not closed_form:
        return _out(_det_of(lambda a, b: strip_kernel(t, a, b), x, Y), single)
    c = math.pi / (2 * t)
    sech = np.prod(_sech(c * (Y[:, None, :] - x[None, :, None])), axis=(1, 2))
    xs = math.prod(math.sinh(c * (x[i] - x[j])) for i, j in _pairs(n))
    vals = (2 * t) ** (-n) * sech * xs * _vprod(lambda a, b: np.sinh(c * (a - b)), Y)
    return _out(vals, single)


def strip_limit_density(t: float, y):
    """``prod_j sech(pi y_j / 2t) prod_{i<j} (tanh(pi y_i / 2t) - tanh(pi y_j / 2t))``."""
    y = np.asarray(y, dtype=float)
    Y, single = _as_batch(ChamberSpec(ChamberKind.WEYL_C, y.shape[-1]), y)
    c = math.pi / (2 * t)
    vals = np.prod(_sech(c * Y), axis=1) * _vprod(lambda a, b: np.tanh(c * a) - np.tanh(c * b), Y)
    return _out(vals, single)


# -- half disk ---------------------------------------------------------------------------------


def _disk_pair(x, theta):
    x = np.asarray(x, dtype=float)
    n = len(x)
    ChamberSpec(ChamberKind.DISK_N, n).require(x)
    TH, single = _as_batch(ChamberSpec(ChamberKind.THETA, n), theta)
    D = 1 - 2 * x[None, :, None] * np.cos(TH[:, None, :]) + x[None, :, None] ** 2
    return x, n, TH, single, D


def _disk_cross(x, n):
    return math.prod((x[i] - x[j]) * (1 - x[i] * x[j]) for i, j in _pairs(n))


def halfdisk_det_density(x, theta, closed_form: bool = False):
    x, n, TH, single, D = _disk_pair(x, theta)
    if not closed_form:
        return _out(_det_of(halfdisk_kernel, x, TH), single)
    vals = (math.pi ** (-n) * np.prod(1 - x * x) * _disk_cross(x, n)
            * _vprod(lambda a, b: 2 * (np.cos(a) - np.cos(b)), TH) / np.prod(D, axis=(1, 2)))
    return _out(vals, single)


def halfdisk_limit_density(theta, form: str = "cos"):
    """``prod_{i<j} 2(cos th_i - cos th_j)``, or the equal modulus form
    ``prod_{i<j} |e^{i th_i} - e^{i th_j}| |e^{i th_i} - e^{-i th_j}|``."""
    theta = np.asarray(theta, dtype=float)
    TH, single = _as_batch(ChamberSpec(ChamberKind.THETA, theta.shape[-1]), theta)
    if form == "cos":
        vals = _vprod(lambda a, b: 2 * (np.cos(a) - np.cos(b)), TH)
    elif form == "modulus":
        vals = _vprod(lambda a, b: np.abs(np.exp(1j * a) - np.exp(1j * b))
                      * np.abs(np.exp(1j * a) - np.exp(-1j * b)), TH)
    else:
        raise ValueError(f"unknown form {form!r}")
    return _out(vals, single)


def excursion_det_density(x, theta, closed_form: bool = False):
    """Determinant of half-disk excursion kernels.

    The closed form factors it as ``G(x) P(x, th) prod sin th_j prod_{i<j} 2(cos th_i - cos th_j)``
    with ``P = per[1/D] / prod D`` the permanent part of the det-per factorisation.
    """
    x, n, TH, single, D = _disk_pair(x, theta)
    if not closed_form:
        return _out(_det_of(excursion_kernel_halfdisk, x, TH), single)
    vals = (excursion_G(x) * excursion_P(x, TH) * np.prod(np.sin(TH), axis=1)
            * _vprod(lambda a, b: 2 * (np.cos(a) - np.cos(b)), TH))
    return _out(vals, single)


def excursion_G(x) -> float:
    x = np.asarray(x, dtype=float)
    n = len(x)
    return (2 / math.pi) ** n * float(np.prod(1 - x * x)) * _disk_cross(x, n)


def excursion_P(x, theta):
    x = np.asarray(x, dtype=float)
    TH = np.atleast_2d(np.asarray(theta, dtype=float))
    D = 1 - 2 * x[None, :, None] * np.cos(TH[:, None, :]) + x[None, :, None] ** 2
    return batch_permanent(1 / D) / np.prod(D, axis=(1, 2))


def excursion_limit_density(theta):
    """``prod sin th_j prod_{i<j} (cos th_i - cos th_j)``."""
    theta = np.asarray(theta, dtype=float)
    TH, single = _as_batch(ChamberSpec(ChamberKind.THETA, theta.shape[-1]), theta)
    vals = np.prod(np.sin(TH), axis=1) * _vprod(lambda a, b: np.cos(a) - np.cos(b), TH)
    return _out(vals, single)


# -- circle and annulus -------------------------------------------------------------------------


def twist_for(n: int) -> float:
    return 0.0 if n % 2 else 0.5


def _periodic_matrix(kind, param, omega, theta, NU, K=None):
    """Entries ``sum_k omega^k f(theta_i, nu_j + 2 pi k)`` for a batch of ``nu``."""
    if kind == "circle":
        K = K if K is not None else _gauss_image_K(param, 1e-16)
        f = lambda d: gaussian_kernel(param, 0.0, d)
    else:
        L = -math.log(param)
        K = K if K is not None else _sech_image_K(L, 1e-16)
        f = lambda d: strip_kernel(L, 0.0, d)
    # nu - theta lies in (-4 pi, 4 pi) on the chamber, so two extra images cover the shift
    ks = np.arange(-K - 2, K + 3)
    d = NU[:, None, :] - theta[None, :, None]
    out = 0
    for k in ks:
        w = omega ** k if omega != 1 else 1.0
        out = out + w * f(d[..., None] + TWO_PI * k)[..., 0]
    return out


def _fourier_weights(kind, param, x, tol=1e-18):
    """Fourier modes m = x + k with weights of the dual series, truncated where negligible."""
    if kind == "circle":
        K = int(math.ceil(math.sqrt(2 * math.log(1 / tol) / param))) + 2
        m = np.arange(-K, K + 1) + x
        w = np.exp(-param * m * m / 2) / TWO_PI
    else:
        L = -math.log(param)
        K = int(math.ceil(math.log(tol) / math.log(param))) + 2
        m = np.arange(-K, K + 1) + x
        w = _sech(L * m) / TWO_PI
    return m, w


def _cauchy_binet(kind, param, x, theta, NU, rel_cut=1e-17):
    """``det(F_theta D F_nu^*)`` expanded over n-subsets of Fourier modes.

    Every minor is computed on its own, so the result keeps full relative
    accuracy even when the determinant is many orders below its entries.
    """
    n = len(theta)
    m, w = _fourier_weights(kind, param, x)
    logw = np.log(w)
    subsets = []
    for S in itertools.combinations(range(len(m)), n):
        subsets.append((sum(logw[list(S)]), S))
    top = max(s[0] for s in subsets)
    keep = [S for lw, S in subsets if lw - top > math.log(rel_cut)]
    Ft = np.exp(1j * theta[:, None] * m[None, :])             # (n, modes)
    Fn = np.exp(-1j * NU[:, :, None] * m[None, None, :])       # (P, n, modes)
    total = np.zeros(NU.shape[0], dtype=complex)
    for S in keep:
        idx = list(S)
        a = np.linalg.det(Ft[:, idx])
        b = np.linalg.det(Fn[:, :, idx])
        total += a * b * math.prod(w[idx])
    return total


def _circle_like(kind, param, theta, nu, twist, method):
    theta = np.asarray(theta, dtype=float)
    n = len(theta)
    spec = ChamberSpec(ChamberKind.AFFINE_C, n)
    spec.require(theta)
    NU, single = _as_batch(spec, nu)
    x = twist_for(n) if twist is None else twist
    if x not in (0.0, 0.5):
        raise DomainError("twist must be 0 or 1/2")
    if method == "direct":
        M = _periodic_matrix(kind, param, -1.0 if x else 1.0, theta, NU)
        vals = np.linalg.det(M)
    elif method == "fourier":
        vals = _cauchy_binet(kind, param, x, theta, NU).real
    else:
        raise ValueError(f"unknown method {method!r}")
    return _out(vals, single)


def circle_transition_density(t: float, theta, nu, twist: float | None = None,
                              method: str = "direct"):
    """Single-determinant density of indistinguishable non-colliding motions on the circle.

    ``method="direct"`` takes the determinant of the Gaussian image sums;
    ``"fourier"`` expands it over the dual Fourier modes (stable for large ``t``).
    """
    if not t > 0:
        raise DomainError("t must be positive")
    return _circle_like("circle", t, theta, nu, twist, method)


def annulus_det_density(r: float, theta, nu, twist: float | None = None, method: str = "direct"):
    """Determinant of periodised strip kernels at ``t = |log r|``."""
    if not 0 < r < 1:
        raise DomainError("r must lie in (0, 1)")
    return _circle_like("annulus", r, theta, nu, twist, method)


def coe_density(nu):
    """``prod_{i<j} |e^{i nu_i} - e^{i nu_j}|``."""
    nu = np.asarray(nu, dtype=float)
    NU, single = _as_batch(ChamberSpec(ChamberKind.AFFINE_C, nu.shape[-1]), nu)
    return _out(_vprod(lambda a, b: np.abs(np.exp(1j * a) - np.exp(1j * b)), NU), single)


def cyclic_shift(nu, ell: int) -> np.ndarray:
    """Chamber representative of the ``ell``-th cyclic relabelling of ``nu``."""
    nu = np.asarray(nu, dtype=float)
    n = len(nu)
    ell %= n
    out = np.concatenate([nu[n - ell:] + TWO_PI, nu[:n - ell]])
    while out[-1] >= math.pi:
        out -= TWO_PI
    while out[-1] < -math.pi:
        out += TWO_PI
    return out


def labelled_density(t: float, theta, nu, method: str = "roots", K: int | None = None) -> float:
    """Transition density ``q*`` of labelled non-colliding motions on the circle.

    ``"roots"``: ``(1/n) sum_u det(sum_k eta^{uk} p_t(theta_i, nu_j + 2 pi k))``.
    ``"fourier"``: the same root-of-unity sum with every twisted determinant
    expanded over Fourier modes ``u/n + Z``.
    ``"images"``: signed sum over permutations and windings with ``sum k = 0 mod n``.
    """
    theta = np.asarray(theta, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = len(theta)
    spec = ChamberSpec(ChamberKind.AFFINE_C, n)
    spec.require(theta)
    spec.require(nu)
    if method == "roots":
        eta = np.exp(2j * math.pi / n)
        vals = [np.linalg.det(_periodic_matrix("circle", t, eta ** u if u else 1.0,
                                               theta, nu[None, :])[0]) for u in range(n)]
        total = sum(vals) / n
        return float(total.real)
    if method == "fourier":
        vals = [_cauchy_binet("circle", t, u / n, theta, nu[None, :])[0] for u in range(n)]
        return float((sum(vals) / n).real)
    if method == "images":
        K = K if K is not None else _gauss_image_K(t, 1e-16) + 2
        ks = np.arange(-K, K + 1)
        total = []
        for sigma in itertools.permutations(range(n)):
            # P[i, k] = p_t(theta_i, nu_sigma(i) + 2 pi k)
            P = gaussian_kernel(t, theta[:, None], nu[list(sigma)][:, None] + TWO_PI * ks[None, :])
            acc = 0.0
            for combo in itertools.product(range(len(ks)), repeat=n):
                if sum(ks[c] for c in combo) % n:
                    continue
                acc += math.prod(P[i, c] for i, c in enumerate(combo))
            total.append(perm_sign(sigma) * acc)
        return math.fsum(total)
    raise ValueError(f"unknown method {method!r}")


def coe_gap(mode: str, n: int) -> float:
    """Exponent gap between the leading and next Fourier subsets.

    The leading set is the one minimising ``(1/2) sum m_i^2`` (circle) or
    ``sum |m_i|`` (annulus) over distinct modes in ``twist + Z``; returns
    ``(minimum, gap)``.
    """
    x = twist_for(n)
    m = np.arange(-n - 2, n + 3) + x
    cost = (lambda S: 0.5 * sum(v * v for v in S)) if mode == "circle_t_to_infty" \
        else (lambda S: sum(abs(v) for v in S))
    vals = sorted({round(cost(S), 12) for S in itertools.combinations(m, n)})
    return vals[0], vals[1] - vals[0]


def coe_minimum(mode: str, n: int) -> float:
    """Closed-form minima: ``n(n-1)(n+1)/24`` (circle) and ``(n^2 - [n])/4`` (annulus)."""
    if mode == "circle_t_to_infty":
        return n * (n - 1) * (n + 1) / 24
    return (n * n - n % 2) / 4


# -- reports ----------------------------------------------------------------------------------


@dataclass
class DensityReport:
    name: str
    n: int
    params: dict
    grid: list
    raw: list
    normalization: float
    normalized: list
    target: list
    target_normalization: float
    sup_rel_error: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def sup_rel_error(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.abs(b)))


def _report(name, n, params, spec, density, target, grid, extra=None, rtol=1e-8,
            tails="algebraic", scale=1.0):
    Mf = normalize(density, spec, rtol=rtol, tails=tails, scale=scale)
    Mg = normalize(target, spec, rtol=rtol, tails=tails, scale=scale)
    raw = np.asarray(density(grid), dtype=float)
    tv = np.asarray(target(grid), dtype=float) / Mg.value
    nv = raw / Mf.value
    return DensityReport(name, n, params, grid.tolist(), raw.tolist(), Mf.value, nv.tolist(),
                         tv.tolist(), Mg.value, sup_rel_error(nv, tv), extra or {})


@dataclass(frozen=True)
class LimitSetup:
    chamber: ChamberKind
    start_chamber: ChamberKind
    det: object          # (x, Y) -> values
    limit: object        # Y -> values
    centre: float
    grid_scale: float
    tails: str = "algebraic"
    map_scale: float = 1.0


def _limit_setup(name: str, t: float) -> LimitSetup:
    if name == "goe":
        return LimitSetup(ChamberKind.WEYL_C, ChamberKind.WEYL_C,
                          lambda x, Y: km_gaussian_density(t, x, Y),
                          lambda Y: goe_limit_density(t, Y), 0.0, 2.5 * math.sqrt(t),
                          "exponential", 2 * math.sqrt(t))
    if name == "quadrant":
        return LimitSetup(ChamberKind.POSITIVE_D, ChamberKind.POSITIVE_D,
                          lambda x, Y: quadrant_det_density(x, Y),
                          lambda Y: quadrant_limit_density(t, Y), t, 3 * t, "algebraic", t)
    if name == "strip":
        return LimitSetup(ChamberKind.WEYL_C, ChamberKind.WEYL_C,
                          lambda x, Y: strip_det_density(t, x, Y),
                          lambda Y: strip_limit_density(t, Y), 0.0, 2.5 * t,
                          "sech", 2 * t / math.pi)
    if name == "halfdisk":
        return LimitSetup(ChamberKind.THETA, ChamberKind.DISK_N,
                          lambda x, Y: halfdisk_det_density(x, Y),
                          lambda Y: halfdisk_limit_density(Y), 0.0, 1.0)
    if name == "excursion":
        return LimitSetup(ChamberKind.THETA, ChamberKind.DISK_N,
                          lambda x, Y: excursion_det_density(x, Y),
                          lambda Y: excursion_limit_density(Y), 0.0, 1.0)
    raise ValueError(f"unknown limit {name!r}")


LIMITS = ("goe", "quadrant", "strip", "halfdisk", "excursion")


def spread_point(n: int, centre: float, eps: float) -> np.ndarray:
    """``centre + eps (delta - mean delta)`` with ``delta = (n-1, ..., 0)``; centring cancels the O(eps) term."""
    d = np.arange(n - 1, -1, -1, dtype=float)
    return centre + eps * (d - d.mean())


@dataclass
class LimitReport:
    name: str
    n: int
    spreads: list
    errors: list
    monotone: bool
    reports: list

    def to_dict(self) -> dict:
        return {"name": self.name, "n": self.n, "spreads": self.spreads, "errors": self.errors,
                "monotone": self.monotone, "reports": [r.to_dict() for r in self.reports]}


def limit_convergence(name: str, n: int, spreads=SPREADS, grid_size: int = 20, seed: int = 0,
                      t: float = 1.0) -> LimitReport:
    """Sup grid error between the normalised determinant and its limit along shrinking spreads."""
    setup = _limit_setup(name, t)
    spec = ChamberSpec(setup.chamber, n)
    grid = chamber_grid(spec, grid_size, seed=seed, scale=setup.grid_scale)
    reports = []
    for eps in spreads:
        x = spread_point(n, setup.centre, eps)
        ChamberSpec(setup.start_chamber, n).require(x)
        rep = _report(name, n, {"t": t, "spread": eps, "x": x.tolist()}, spec,
                      lambda Y, x=x: setup.det(x, Y), setup.limit, grid,
                      tails=setup.tails, scale=setup.map_scale)
        reports.append(rep)
    errs = [r.sup_rel_error for r in reports]
    mono = all(b < a for a, b in zip(errs[:-1], errs[1:]))
    return LimitReport(name, n, list(spreads), errs, mono, reports)


def coe_limit_check(mode: str, n: int, param: float, theta=None, grid_size: int = 20,
                    seed: int = 0) -> DensityReport:
    """Normalised circle (large ``t``) or annulus (small ``r``) density against the COE density."""
    if n < 2:
        raise DomainError("COE comparison needs n >= 2")
    spec = ChamberSpec(ChamberKind.AFFINE_C, n)
    if theta is None:
        theta = chamber_grid(spec, 1, seed=seed + 1000)[0]
    theta = spec.require(theta)
    if mode == "circle_t_to_infty":
        dens = lambda V: circle_transition_density(param, theta, V, method="fourier")
        key = "t"
    elif mode == "annulus_r_to_0":
        dens = lambda V: annulus_det_density(param, theta, V, method="fourier")
        key = "r"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    grid = chamber_grid(spec, grid_size, seed=seed)
    minimum, gap = coe_gap(mode, n)
    extra = {"minimum": minimum, "closed_form_minimum": coe_minimum(mode, n), "gap": gap,
             "suppression": math.exp(-param * gap) if key == "t" else param ** gap}
    return _report(f"coe/{mode}", n, {key: param, "theta": theta.tolist()}, spec, dens,
                   coe_density, grid, extra)
