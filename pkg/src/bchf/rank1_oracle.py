"""Rank-one ground truth: Gauss 2F1, the Jacobi function and its transform.

Kept independent of the series and c-function code so it can serve as an
oracle for both.  Only non-positive arguments of 2F1 are needed, since the
Jacobi function uses -sinh(t)^2.  Small |z| uses the series directly, moderate
z the Pfaff transform, and z < -2 the connection formula in 1/z unless a - b
is close to an integer (then Pfaff again).

The contiguous relation used as an internal consistency check is

    c(c-1)(z-1) F(a,b;c-1;z) + c(c-1-(2c-a-b-1)z) F(a,b;c;z)
        + (c-a)(c-b) z F(a,b;c+1;z) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .core_types import ParameterPole, QuadratureFailure

MAX_TERMS = 200_000
CONNECTION_GAP = 1e-3


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float

    @property
    def rho(self) -> float:
        return self.alpha + self.beta + 1

    @classmethod
    def from_k(cls, ks: float, kl: float) -> "JacobiParams":
        return cls(ks + kl - 0.5, kl - 0.5)


def _series(a: complex, b: complex, c: complex, w: float) -> complex:
    """Plain hypergeometric series for 0 <= |w| < 1."""
    total = 1.0 + 0j
    term = 1.0 + 0j
    small = 0
    n = 0
    while n < MAX_TERMS:
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * w
        total += term
        n += 1
        if term == 0:
            break
        if abs(term) <= 1e-17 * abs(total) and n > abs(a) + abs(b):
            small += 1
            if small >= 3:
                break
        else:
            small = 0
    else:
        raise QuadratureFailure("hypergeometric series did not converge")
    return total


def _check_c(c: complex) -> None:
    if abs(complex(c).imag) < 1e-14 and complex(c).real <= 0 and abs(complex(c).real - round(complex(c).real)) < 1e-14:
        raise ParameterPole("c is a non-positive integer")


def _terminates(a: complex) -> bool:
    a = complex(a)
    return abs(a.imag) < 1e-14 and a.real <= 0 and abs(a.real - round(a.real)) < 1e-14


def _connection(a: complex, b: complex, c: complex, z: float) -> complex:
    """Sum of the two 1/z solutions; needs a - b off the integers."""
    lg = special.loggamma
    mz = -z

    def part(a, b):
        log_coef = lg(c) + lg(b - a) - lg(b) - lg(c - a) - a * math.log(mz)
        return np.exp(log_coef) * _series(a, a - c + 1, a - b + 1, 1.0 / z)

    return complex(part(a, b) + part(b, a))


def gauss_2f1(a: complex, b: complex, c: complex, z: float) -> complex:
    """2F1(a, b; c; z) for real z <= 0."""
    _check_c(c)
    if z > 0:
        raise ValueError("only z <= 0 is supported")
    if z >= -0.5 or _terminates(a) or _terminates(b):
        return _series(a, b, c, z)
    d = complex(a - b)
    if z < -2 and (abs(d.imag) > CONNECTION_GAP or abs(d.real - round(d.real)) > CONNECTION_GAP):
        return _connection(complex(a), complex(b), complex(c), z)
    # Pfaff: F(a,b;c;z) = (1-z)^{-a} F(a, c-b; c; z/(z-1))
    w = z / (z - 1.0)
    return (1.0 - z) ** (-a) * _series(a, c - b, c, w)


def contiguous_residual(a: complex, b: complex, c: complex, z: float) -> float:
    f_minus = gauss_2f1(a, b, c - 1, z)
    f0 = gauss_2f1(a, b, c, z)
    f_plus = gauss_2f1(a, b, c + 1, z)
    terms = [
        c * (c - 1) * (z - 1) * f_minus,
        c * (c - 1 - (2 * c - a - b - 1) * z) * f0,
        (c - a) * (c - b) * z * f_plus,
    ]
    scale = max(abs(t) for t in terms)
    return float(abs(sum(terms)) / scale) if scale else 0.0


def jacobi_function(lam: complex, p: JacobiParams, t: float) -> complex:
    """phi_lam(t) = 2F1((lam + rho)/2, (-lam + rho)/2; alpha + 1; -sinh(t)^2)."""
    if p.alpha <= -1:
        raise ParameterPole("alpha must exceed -1")
    a = 0.5 * (lam + p.rho)
    b = 0.5 * (-lam + p.rho)
    return gauss_2f1(a, b, p.alpha + 1, -math.sinh(t) ** 2)


def jacobi_weight(p: JacobiParams, t):
    t = np.asarray(t, dtype=float)
    return (2 * np.sinh(t)) ** (2 * p.alpha + 1) * (2 * np.cosh(t)) ** (2 * p.beta + 1)


def _gauss_jacobi_panel(f, lam, p: JacobiParams, a: float, b: float, n: int) -> complex:
    """Integral over [a, b] with the t^{2 alpha + 1} endpoint behaviour at 0 absorbed."""
    if a == 0.0:
        e = 2 * p.alpha + 1
        # weight (1 + u)^e on [-1, 1] maps to t = b (1 + u) / 2
        u, w = special.roots_jacobi(n, 0.0, e)
        t = 0.5 * b * (1 + u)
        smooth = (2 * np.sinh(t) / t) ** e * (2 * np.cosh(t)) ** (2 * p.beta + 1)
        scale = (0.5 * b) ** (e + 1)
    else:
        u, w = np.polynomial.legendre.leggauss(n)
        t = 0.5 * (b - a) * u + 0.5 * (a + b)
        smooth = jacobi_weight(p, t)
        scale = 0.5 * (b - a)
    vals = np.array([jacobi_function(lam, p, ti) for ti in t])
    return complex(scale * np.sum(w * f(t) * vals * smooth))


def jacobi_transform_reference(
    f: Callable[[np.ndarray], np.ndarray],
    lam: complex,
    p: JacobiParams,
    support: float,
    tol: float = 1e-10,
    max_nodes: int = 1024,
    panels: int = 4,
) -> complex:
    """int_0^support f(t) phi_lam(t) delta(t) dt with node doubling until stable."""
    edges = np.linspace(0.0, support, panels + 1)
    n = 16
    prev = None
    while n <= max_nodes:
        cur = sum(_gauss_jacobi_panel(f, lam, p, edges[j], edges[j + 1], n) for j in range(panels))
        if prev is not None and abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
        n *= 2
    raise QuadratureFailure("reference Jacobi transform did not stabilize")
