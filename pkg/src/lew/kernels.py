"""Closed-form boundary hitting densities and the periodic sums built from them.

Every bilateral sum is truncated at an explicit ``K`` derived from a tail
bound and evaluated with compensated summation; the chosen ``K`` is returned
alongside the value.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, Nonconvergent

TOL_THETA = 1e-13
TWISTS = (0.0, 0.5)


class Domain(str, enum.Enum):
    QUADRANT = "quadrant"
    STRIP = "strip"
    HALFDISK = "halfdisk"
    EXCURSION = "excursion"
    CIRCLE = "circle"
    ANNULUS = "annulus"


@dataclass(frozen=True)
class KernelFamily:
    """A kernel together with its parameters (``t`` for strip/circle, ``r`` for annulus)."""

    domain: Domain
    t: float | None = None
    r: float | None = None
    twist: float = 0.0

    def __post_init__(self):
        d = Domain(self.domain)
        object.__setattr__(self, "domain", d)
        if d in (Domain.STRIP, Domain.CIRCLE) and not (self.t is not None and self.t > 0):
            raise DomainError(f"{d.value} kernel needs t > 0")
        if d is Domain.ANNULUS and not (self.r is not None and 0 < self.r < 1):
            raise DomainError("annulus kernel needs 0 < r < 1")
        if d in (Domain.CIRCLE, Domain.ANNULUS):
            _check_twist(self.twist)

    def __call__(self, x, y):
        d = self.domain
        if d is Domain.QUADRANT:
            return quadrant_kernel(x, y)
        if d is Domain.STRIP:
            return strip_kernel(self.t, x, y)
        if d is Domain.HALFDISK:
            return halfdisk_kernel(x, y)
        if d is Domain.EXCURSION:
            return excursion_kernel_halfdisk(x, y)
        if d is Domain.CIRCLE:
            return circle_heat_sum(self.t, self.twist, x, y).value
        return annulus_kernel_sum(self.r, self.twist, x, y).value


@dataclass(frozen=True)
class SeriesResult:
    value: complex | float
    terms: int   # truncation index K (sum over |k| <= K about the centre)


def _check_twist(x):
    if x not in TWISTS:
        raise DomainError(f"twist must be 0 or 1/2, got {x}")


# -- single kernels ----------------------------------------------------------------


def quadrant_kernel(x, y):
    """Exit density of the quadrant through the positive imaginary axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("quadrant kernel needs x > 0 and y > 0")
    out = (2 / np.pi) * x / (x * x + y * y)
    return out[()] if out.ndim == 0 else out


def _sech(z):
    # 2 e^{-|z|} / (1 + e^{-2|z|}) never overflows
    a = np.exp(-np.abs(z))
    return 2 * a / (1 + a * a)


def strip_kernel(t, x, y):
    """Exit density of the strip of width ``t``; depends on ``y - x`` only."""
    if not t > 0:
        raise DomainError("strip kernel needs t > 0")
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    out = _sech(np.pi * d / (2 * t)) / (2 * t)
    return out[()] if out.ndim == 0 else out


def _disk_args(x, theta):
    x = np.asarray(x, dtype=float)
    th = np.asarray(theta, dtype=float)
    if np.any(np.abs(x) >= 1) or np.any(th <= 0) or np.any(th >= np.pi):
        raise DomainError("half-disk kernels need |x| < 1 and 0 < theta < pi")
    return x, th


def halfdisk_kernel(x, theta):
    """Poisson kernel of the upper half disk from a diameter point to the arc."""
    x, th = _disk_args(x, theta)
    out = (1 - x * x) / (np.pi * (1 - 2 * x * np.cos(th) + x * x))
    return out[()] if out.ndim == 0 else out


def excursion_kernel_halfdisk(x, theta):
    """Boundary-to-boundary (excursion) kernel of the half disk."""
    x, th = _disk_args(x, theta)
    D = 1 - 2 * x * np.cos(th) + x * x
    out = (2 / np.pi) * (1 - x * x) * np.sin(th) / (D * D)
    return out[()] if out.ndim == 0 else out


def quadrant_to_strip_kernel(t, x, y):
    """Strip kernel obtained from the quadrant one through ``z -> exp(pi z / 2t)``.

    Conformal covariance: ``h_strip(x, y) = |f'(y + it)| h_quad(f(x), |f(y + it)|)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = np.pi / (2 * t)
    return c * np.exp(c * y) * quadrant_kernel(np.exp(c * x), np.exp(c * y))


# -- theta functions ---------------------------------------------------------------


@dataclass(frozen=True)
class ThetaParams:
    k: int
    q: complex
    z: complex = 0.0

    def __post_init__(self):
        if self.k not in (2, 3, 4):
            raise ValueError("theta index must be 2, 3 or 4")
        if abs(self.q) >= 1:
            raise Nonconvergent(f"theta series diverges for |q| = {abs(self.q)} >= 1")


def jacobi_theta(params, z=None, q=None, tol: float = TOL_THETA) -> complex:
    """``theta_k(z, q)`` for k in {2, 3, 4} (nome convention, period pi in z).

    Accepts a :class:`ThetaParams` or the bare ``(k, z, q)`` triple.
    """
    if isinstance(params, ThetaParams):
        return theta_series(params.k, params.z, params.q, tol).value
    return theta_series(params, z, q, tol).value


def theta_series(k: int, z, q, tol: float = TOL_THETA) -> SeriesResult:
    if k not in (2, 3, 4):
        raise ValueError("theta index must be 2, 3 or 4")
    z = complex(z)
    q = complex(q)
    if abs(q) >= 1:
        raise Nonconvergent(f"theta series diverges for |q| = {abs(q)} >= 1")
    if q == 0:
        return SeriesResult(0j if k == 2 else 1 + 0j, 0)
    lq = -math.log(abs(q))
    # terms grow like exp(2 n |Im z|) before the Gaussian factor wins
    peak = abs(z.imag) / lq
    if k == 2:
        parts = []
        n = 0
        while True:
            m = n + 0.5
            term = 2 * q ** (m * m) * np.cos(2 * m * z)
            parts.append(term)
            # stop on the term's envelope: a zero of the cosine is not convergence
            bound = 2 * abs(q) ** (m * m) * math.cosh(2 * m * z.imag)
            if n > peak and bound <= tol * max(abs(sum(parts)), 1e-300):
                break
            n += 1
            if n > 100000:
                raise Nonconvergent("theta series did not settle")
        return SeriesResult(_csum(parts), n)
    sign = -1 if k == 4 else 1
    parts = [1 + 0j]
    n = 1
    while True:
        term = 2 * sign ** n * q ** (n * n) * np.cos(2 * n * z)
        parts.append(term)
        bound = 2 * abs(q) ** (n * n) * math.cosh(2 * n * z.imag)
        if n > peak and bound <= tol * max(abs(sum(parts)), 1e-300):
            break
        n += 1
        if n > 100000:
            raise Nonconvergent("theta series did not settle")
    return SeriesResult(_csum(parts), n)


def _csum(parts) -> complex:
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


# -- periodic sums -------------------------------------------------------------------


def _gauss_image_K(t: float, tol: float) -> int:
    # terms beyond the centre decay like exp(-(2 pi k - pi)^2 / 2t); relative to
    # the centre term (>= exp(-pi^2/2t)) this is below tol once 2 pi (k-1) > sqrt(2 t log(1/tol))
    return int(math.ceil(math.sqrt(2 * t * math.log(1 / tol)) / (2 * math.pi))) + 2


def _gauss_fourier_K(t: float, tol: float) -> int:
    K = 1
    while math.exp(-t * K * K / 2) / (1 - math.exp(-t * K)) > tol * 1e-2:
        K += 1
    return K


def circle_heat_sum(t: float, x: float, theta: float, nu: float, method: str = "image",
                    tol: float = TOL_THETA) -> SeriesResult:
    """``sum_k e^{i 2 pi x k} p_t(theta, nu + 2 pi k)`` with ``p_t`` the heat kernel.

    ``method="image"`` sums the Gaussians directly; ``"fourier"`` uses the
    dual series ``(1/2pi) sum_k exp(-i(nu-theta)(x+k) - t(x+k)^2/2)``.
    """
    if not t > 0:
        raise DomainError("circle heat sum needs t > 0")
    _check_twist(x)
    d = float(nu) - float(theta)
    if method == "image":
        K = _gauss_image_K(t, tol)
        k0 = round(-d / (2 * math.pi))
        ks = np.arange(k0 - K, k0 + K + 1)
        sgn = np.where(ks % 2 == 0, 1.0, -1.0) if x else np.ones(len(ks))
        y = d + 2 * math.pi * ks
        terms = sgn * np.exp(-y * y / (2 * t)) / math.sqrt(2 * math.pi * t)
        return SeriesResult(math.fsum(terms), K)
    if method == "fourier":
        K = _gauss_fourier_K(t, tol)
        m = np.arange(-K, K + 1) + x
        # the sum is real: pair m and -m (for x = 1/2, m and -m-1 ... covered by cos)
        terms = np.cos(d * m) * np.exp(-t * m * m / 2) / (2 * math.pi)
        return SeriesResult(math.fsum(terms), K)
    raise ValueError(f"unknown method {method!r}")


def circle_theta_form(t: float, x: float, theta: float, nu: float) -> float:
    """Theta-function form of :func:`circle_heat_sum` (theta_3 for x=0, theta_2 for x=1/2)."""
    _check_twist(x)
    z = -(nu - theta) / 2
    k = 2 if x else 3
    return (jacobi_theta(k, z, math.exp(-t / 2)) / (2 * math.pi)).real


def _sech_image_K(L: float, tol: float) -> int:
    # image terms behave like (1/L) e^{-pi^2 |k| / L} away from the centre
    rate = math.pi ** 2 / L
    return int(math.ceil(math.log(4 / (tol * 1e-2 * (1 - math.exp(-rate)))) / rate)) + 2


def _sech_fourier_K(r: float, tol: float) -> int:
    # sech(L(x+k)) <= 2 r^{|x+k|}; tail beyond K bounded by 4 r^K / (1 - r)
    return max(1, int(math.ceil(math.log(tol * 1e-2 * (1 - r) / 4) / math.log(r))) + 1)


def annulus_kernel_sum(r: float, x: float, theta: float, nu: float, method: str = "image",
                       tol: float = TOL_THETA, K: int | None = None) -> SeriesResult:
    """``sum_k e^{i 2 pi x k} h(theta, nu + 2 pi k)`` with ``h`` the strip kernel at ``t = |log r|``.

    ``method="fourier"`` evaluates the dual series
    ``(1/2pi) sum_k sech(|log r|(x+k)) exp(-i(nu-theta)(x+k))``.
    """
    if not 0 < r < 1:
        raise DomainError("annulus sums need 0 < r < 1")
    _check_twist(x)
    L = -math.log(r)
    d = float(nu) - float(theta)
    if method == "image":
        K = K if K is not None else _sech_image_K(L, tol)
        k0 = round(-d / (2 * math.pi))
        ks = np.arange(k0 - K, k0 + K + 1)
        sgn = np.where(ks % 2 == 0, 1.0, -1.0) if x else np.ones(len(ks))
        terms = sgn * strip_kernel(L, 0.0, d + 2 * math.pi * ks)
        return SeriesResult(math.fsum(terms), K)
    if method == "fourier":
        K = K if K is not None else _sech_fourier_K(r, tol)
        m = np.arange(-K, K + 1) + x
        terms = np.cos(d * m) * _sech(L * m) / (2 * math.pi)
        return SeriesResult(math.fsum(terms), K)
    raise ValueError(f"unknown method {method!r}")


def annulus_theta_form(r: float, x: float, theta: float, nu: float) -> float:
    """Theta-ratio form of :func:`annulus_kernel_sum` with nome ``r``.

    ``x = 0``:   (1/2pi) th3(0) th4(0) th3(d/2) / th4(d/2)
    ``x = 1/2``: (1/2pi) th2(0) th4(0) th2(d/2) / th4(d/2),  d = nu - theta.
    """
    if not 0 < r < 1:
        raise DomainError("annulus sums need 0 < r < 1")
    _check_twist(x)
    z = (nu - theta) / 2
    a = 2 if x else 3
    val = (jacobi_theta(a, 0, r) * jacobi_theta(4, 0, r) * jacobi_theta(a, z, r)
           / jacobi_theta(4, z, r))
    return (val / (2 * math.pi)).real
