"""Numeric checks of the auxiliary algebraic identities used by the continuum limits."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .chambers import ChamberKind, ChamberSpec, random_chamber_point
from .errors import DegenerateFunctions, DomainError
from .kernels import annulus_kernel_sum, circle_heat_sum, halfdisk_kernel, quadrant_kernel, strip_kernel
from .matrices import naive_permanent, permanent
from . import rmt

EPS_FLOOR = 1e-300
SKEEL_GUARD = 1e4


@dataclass
class IdentityCase:
    name: str
    inputs: dict
    lhs: float | complex
    rhs: float | complex
    rel_err: float
    tol: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.rel_err < self.tol)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("lhs", "rhs"):
            v = d[k]
            if isinstance(v, complex):
                d[k] = {"re": v.real, "im": v.imag}
            else:
                d[k] = float(v)
        return d


def rel_err(a, b) -> float:
    return float(abs(a - b) / max(abs(a), abs(b), EPS_FLOOR))


def _case(name, inputs, lhs, rhs, tol, err=None):
    lhs = complex(lhs) if np.iscomplexobj(lhs) else float(lhs)
    rhs = complex(rhs) if np.iscomplexobj(rhs) else float(rhs)
    return IdentityCase(name, inputs, lhs, rhs, rel_err(lhs, rhs) if err is None else err, tol)


def skeel_condition(A) -> float:
    """``|| |A^-1| |A| ||_inf``: bounds the relative error of a determinant from entrywise errors."""
    A = np.asarray(A, dtype=float)
    try:
        Ai = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        return math.inf
    return float(np.linalg.norm(np.abs(Ai) @ np.abs(A), np.inf))


# -- permanent -------------------------------------------------------------------------------


def permanent_check(A) -> IdentityCase:
    A = np.asarray(A, dtype=float)
    return _case("permanent/ryser_vs_naive", {"A": A.tolist()}, permanent(A), naive_permanent(A), 1e-12)


# -- Carlitz ---------------------------------------------------------------------------------


def _disk_matrix(x, theta):
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return 1 / (1 - 2 * x[:, None] * np.cos(theta[None, :]) + x[:, None] ** 2)


def carlitz_factorization_check(x, theta, tol: float = 1e-10) -> IdentityCase:
    """``det(B∘B) = det(B) per(B)`` for ``B_ij = 1/(1 - 2 x_i cos th_j + x_i^2)``."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    n = len(x)
    if n > 4:
        raise DomainError("the det-per check is run for n <= 4")
    ChamberSpec(ChamberKind.DISK_N, n).require(x)
    ChamberSpec(ChamberKind.THETA, n).require(theta)
    B = _disk_matrix(x, theta)
    return _case(f"carlitz/n{n}", {"x": x.tolist(), "theta": theta.tolist()},
                 np.linalg.det(B * B), np.linalg.det(B) * permanent(B), tol)


# -- confluent Vandermonde ----------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticFunction:
    """Entire test function with known derivatives: ``z^p`` or ``exp(a z)``."""

    kind: str
    param: float

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "monomial":
            return z ** int(self.param)
        if self.kind == "exp":
            return np.exp(self.param * z)
        raise ValueError(f"unknown test function kind {self.kind!r}")

    def derivative(self, k: int, z) -> complex:
        if self.kind == "monomial":
            p = int(self.param)
            if k > p:
                return 0.0
            return math.perm(p, k) * z ** (p - k)
        return self.param ** k * math.exp(self.param * z)

    def describe(self) -> str:
        return f"z^{int(self.param)}" if self.kind == "monomial" else f"exp({self.param}z)"


def monomials(n: int) -> list:
    return [AnalyticFunction("monomial", j) for j in range(n)]


def exponentials(rates: Sequence[float]) -> list:
    return [AnalyticFunction("exp", a) for a in rates]


def divided_difference(f: Callable, nodes, centre: float, radius: float = 1.0,
                       points: int = 64) -> complex:
    """``f[y_1, ..., y_k]`` by the trapezoid rule on a circle enclosing the nodes.

    The contour form avoids the cancellation of the recursive definition when
    nodes nearly coincide.
    """
    nodes = np.asarray(nodes, dtype=float)
    if np.max(np.abs(nodes - centre)) >= radius / 2:
        raise DomainError("nodes must lie well inside the contour")
    w = np.exp(2j * math.pi * np.arange(points) / points)
    z = centre + radius * w
    denom = np.prod(z[:, None] - nodes[None, :], axis=1)
    return complex(np.mean(f(z) * radius * w / denom))


def confluent_ratio(funcs, y, method: str = "divided", centre=None) -> float:
    """``det(h_j(y_i)) / Delta(y)`` with ``Delta(y) = prod_{i<j} (y_j - y_i)``.

    ``"divided"`` uses the identity ``det(h_j(y_i)) / Delta(y) = det(h_j[y_1..y_i])``;
    ``"direct"`` divides an LU determinant by the product.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if method == "direct":
        A = np.array([[np.real(h(v)) for h in funcs] for v in y])
        vd = math.prod(y[j] - y[i] for i in range(n) for j in range(i + 1, n))
        return float(np.linalg.det(A) / vd)
    if method == "divided":
        c = float(np.mean(y)) if centre is None else centre
        D = np.array([[divided_difference(h, y[:i + 1], c).real for h in funcs] for i in range(n)])
        return float(np.linalg.det(D))
    raise ValueError(f"unknown method {method!r}")


def confluent_limit(funcs, x0: float) -> float:
    """``C det(d^{i-1} h_j(x0))`` with ``C = prod_{j<n} 1/j!``."""
    n = len(funcs)
    D = np.array([[np.real(h.derivative(i, x0)) for h in funcs] for i in range(n)])
    C = 1.0 / math.prod(math.factorial(j) for j in range(1, n))
    return C * float(np.linalg.det(D))


def confluent_vandermonde_check(funcs, x0: float = 0.0, eps_seq=(1e-2, 1e-3, 1e-4),
                                tol: float | None = None, method: str = "divided") -> list:
    """Approach ``x0`` along ``y = x0 + eps (n-1, ..., 0)``; one case per ``eps``.

    ``tol`` defaults to ``10 n eps`` for a first-order error (and 1e-13 for
    polynomial families, where the ratio is constant).
    """
    n = len(funcs)
    limit = confluent_limit(funcs, x0)
    if limit == 0:
        raise DegenerateFunctions("derivative determinant vanishes")
    delta = np.arange(n - 1, -1, -1, dtype=float)
    poly = all(h.kind == "monomial" for h in funcs)
    label = ",".join(h.describe() for h in funcs)
    out = []
    for eps in eps_seq:
        y = x0 + eps * delta
        val = confluent_ratio(funcs, y, method, centre=x0)
        t = tol if tol is not None else (1e-13 if poly else 10 * n * eps)
        out.append(_case(f"confluent/n{n}", {"functions": label, "x0": x0, "eps": eps,
                                             "method": method}, val, limit, t))
    return out


def linear_in_eps(cases: Sequence[IdentityCase], lo: float = 0.5, hi: float = 2.0) -> bool:
    """Errors shrink monotonically and ``err / eps`` stays within a factor band."""
    eps = [c.inputs["eps"] for c in cases]
    errs = [abs(c.lhs - c.rhs) for c in cases]
    mono = all(b < a for a, b in zip(errs[:-1], errs[1:]))
    slopes = [e / h for e, h in zip(errs, eps)]
    return mono and all(lo <= s / slopes[0] <= hi for s in slopes)


# -- Poisson summation -------------------------------------------------------------------------


DUAL_ATOL_SCALE = 1.0


def dual_error(a: float, b: float) -> float:
    """``|a - b| / max(|a|, |b|, 1)``: relative for O(1) values, absolute below."""
    return abs(a - b) / max(abs(a), abs(b), DUAL_ATOL_SCALE)


def poisson_summation_check(r: float, x: float, theta: float, nu: float, K: int | None = None,
                            tol: float = 1e-11) -> IdentityCase:
    """Image sum of strip kernels against the dual sech series (annulus entries)."""
    a = annulus_kernel_sum(r, x, theta, nu, "image", K=K)
    b = annulus_kernel_sum(r, x, theta, nu, "fourier")
    return _case("poisson/annulus", {"r": r, "x": x, "theta": theta, "nu": nu,
                                     "K_image": a.terms, "K_fourier": b.terms},
                 a.value, b.value, tol, err=dual_error(a.value, b.value))


def heat_poisson_check(t: float, x: float, theta: float, nu: float, tol: float = 1e-11) -> IdentityCase:
    a = circle_heat_sum(t, x, theta, nu, "image")
    b = circle_heat_sum(t, x, theta, nu, "fourier")
    return _case("poisson/circle", {"t": t, "x": x, "theta": theta, "nu": nu,
                                    "K_image": a.terms, "K_fourier": b.terms},
                 a.value, b.value, tol, err=dual_error(a.value, b.value))


# -- Cauchy-type product formulas ------------------------------------------------------------------


_DOMAINS = {
    # name: (start chamber, end chamber, kernel(x, y), det(x, y, closed_form), sampling scale)
    "quadrant": (ChamberKind.POSITIVE_D, ChamberKind.POSITIVE_D, quadrant_kernel,
                 rmt.quadrant_det_density, 2.0),
    "strip": (ChamberKind.WEYL_C, ChamberKind.WEYL_C, lambda a, b: strip_kernel(1.0, a, b),
              lambda x, y, closed_form=False: rmt.strip_det_density(1.0, x, y, closed_form), 2.0),
    "halfdisk": (ChamberKind.DISK_N, ChamberKind.THETA, halfdisk_kernel,
                 rmt.halfdisk_det_density, 1.0),
}


def cauchy_product_formulas(domain: str, x, y, tol: float = 1e-12) -> IdentityCase:
    """Numeric determinant against the closed-form product (strip at ``t = 1``)."""
    if domain not in _DOMAINS:
        raise ValueError(f"unknown domain {domain!r}")
    _, _, kern, det, _ = _DOMAINS[domain]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = kern(x[:, None], y[None, :])
    return _case(f"cauchy/{domain}/n{len(x)}",
                 {"x": x.tolist(), "y": y.tolist(), "skeel_condition": skeel_condition(A)},
                 det(x, y), det(x, y, closed_form=True), tol)


def well_conditioned_points(domain: str, n: int, rng: np.random.Generator,
                            guard: float = SKEEL_GUARD, tries: int = 1000):
    """Random chamber pair whose kernel matrix has Skeel condition below ``guard``.

    A determinant computed by LU from entries with relative error u has
    relative error of order ``u * skeel``; the guard keeps that below 1e-12.
    """
    sx, sy, kern, _, scale = _DOMAINS[domain]
    for _ in range(tries):
        x = random_chamber_point(ChamberSpec(sx, n), rng, scale=scale)
        y = random_chamber_point(ChamberSpec(sy, n), rng, scale=scale)
        if skeel_condition(kern(x[:, None], y[None, :])) <= guard:
            return x, y
    raise DomainError("no well-conditioned point found")


# -- suites ------------------------------------------------------------------------------------------


def _suite_permanent(rng):
    cases = [permanent_check(np.eye(3)), permanent_check(np.ones((3, 3)))]
    cases += [permanent_check(rng.normal(size=(n, n))) for n in (2, 4, 5)]
    return cases


def _suite_carlitz(rng):
    out = []
    for n in (1, 2, 3, 4):
        for _ in range(3):
            x = random_chamber_point(ChamberSpec(ChamberKind.DISK_N, n), rng)
            th = random_chamber_point(ChamberSpec(ChamberKind.THETA, n), rng)
            out.append(carlitz_factorization_check(x, th))
    return out


def _suite_confluent(rng):
    out = confluent_vandermonde_check(monomials(3), x0=0.3)
    out += confluent_vandermonde_check(exponentials([0.5, 1.5]), x0=0.0)
    rates = np.sort(rng.uniform(-1.5, 1.5, 3))
    out += confluent_vandermonde_check(exponentials(rates.tolist()), x0=0.2)
    return out


def _suite_poisson(rng):
    out = [poisson_summation_check(0.3, 0.0, 0.4, 0.4), poisson_summation_check(0.1, 0.5, 0.4, 0.4),
           poisson_summation_check(0.9, 0.0, 0.4, 1.0)]
    for _ in range(3):
        th, nu = rng.uniform(-math.pi, math.pi, 2)
        out.append(heat_poisson_check(float(rng.uniform(0.2, 5)), 0.5, float(th), float(nu)))
    return out


def _suite_cauchy(rng):
    out = []
    for dom in _DOMAINS:
        for n in (1, 2, 3, 4):
            x, y = well_conditioned_points(dom, n, rng)
            out.append(cauchy_product_formulas(dom, x, y))
    return out


SUITES = {"permanent": _suite_permanent, "carlitz": _suite_carlitz, "confluent": _suite_confluent,
          "poisson": _suite_poisson, "cauchy": _suite_cauchy}


def run_suite(suite: str = "all", seed: int = 0) -> list:
    names = list(SUITES) if suite == "all" else [suite]
    out = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
        out.extend(SUITES[name](np.random.default_rng([seed, list(SUITES).index(name)])))
    return out
