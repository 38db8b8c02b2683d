"""Discrete spectra D_k(Theta_i), their Plancherel densities and the spectral measure."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cfunctions as cf
from .core_types import (
    ContourAmbiguity,
    InvalidRegime,
    MultiplicityBC,
    NotInSpectrum,
    enumerate_W_Theta,
    stabilizer_order,
)
from .gamma_kernel import limit_product

MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class DiscretePoint:
    i: int
    xi: tuple[float, ...]
    stabilizer: int


@dataclass
class SpectralComponentMeasure:
    i: int
    xi: tuple[float, ...]
    density_const: float
    weyl_factor: float
    stabilizer: int
    fiber_density: Callable[[np.ndarray], np.ndarray] = field(repr=False)


def _require_regime(k: MultiplicityBC) -> None:
    if not k.in_K1_prime():
        raise InvalidRegime("supported parameters need k_s + k_l > -1/2 and k_m >= 0")


def first_coordinate(k: MultiplicityBC) -> float:
    """alpha - |beta| + 1, the largest admissible value of xi_1 is below this plus 2N."""
    return k.alpha - abs(k.beta) + 1


def nonempty(i: int, k: MultiplicityBC) -> bool:
    if i == 0:
        return True
    return first_coordinate(k) + 2 * (i - 1) * k.km < 0


def enumerate_D(i: int, k: MultiplicityBC) -> list[DiscretePoint]:
    _require_regime(k)
    if i == 0:
        return [DiscretePoint(0, (), 1)]
    pts: list[tuple[float, ...]] = []

    def extend(prefix: list[float]) -> None:
        if len(prefix) == i:
            if prefix[-1] < 0:
                pts.append(tuple(prefix))
            return
        start = prefix[-1] + 2 * k.km
        v = start
        # later coordinates never decrease, so anything >= 0 is a dead end
        while v < 0:
            extend(prefix + [v])
            v += 2

    v = first_coordinate(k)
    while v < 0:
        extend([v])
        v += 2
    group = enumerate_W_Theta(i, i)
    return [DiscretePoint(i, p, stabilizer_order(np.array(p), group)) for p in pts]


def is_in_D(i: int, xi: Sequence[float], k: MultiplicityBC) -> bool:
    xi = np.asarray(xi, dtype=float)
    if len(xi) != i:
        return False
    return any(np.max(np.abs(np.array(p.xi) - xi)) < MEMBERSHIP_TOL for p in enumerate_D(i, k)) if i else True


def _density_product(xi: np.ndarray, k: MultiplicityBC, with_pairs: bool, dk) -> complex:
    """Closed-form product, with Gamma collisions resolved along the discrete-point path."""
    i = len(xi)
    dxi = cf.regularization_shift(i, k, dk)
    a, b = k.alpha, abs(k.beta)
    da = dk[0] + dk[2]
    db = dk[2] if k.beta >= 0 else -dk[2]
    args, speeds, exps = [], [], []
    pre = 1.0 + 0j
    for j in range(i):
        lj, dl = xi[j], dxi[j]
        pre *= -(2.0 ** (2 * a - 2 * k.beta - 1)) * lj / math.pi
        args += [0.5 * (lj + a + b + 1), 0.5 * (-lj + a + b + 1), 0.5 * (lj - a + b + 1), 0.5 * (-lj - a + b + 1)]
        speeds += [0.5 * (dl + da + db), 0.5 * (-dl + da + db), 0.5 * (dl - da + db), 0.5 * (-dl - da + db)]
        exps += [1, 1, -1, -1]
    if with_pairs:
        km, dkm = k.km, dk[1]
        for p in range(i):
            for q in range(p):
                lp, lq, dp, dq = xi[p], xi[q], dxi[p], dxi[q]
                pre *= 0.25
                # (lq - lp)(lq + lp) as Gamma(z + 1) / Gamma(z), so a vanishing
                # factor can cancel a Gamma pole in the limit
                for z, dz in ((lq - lp, dq - dp), (lq + lp, dq + dp)):
                    args += [z + 1, z]
                    speeds += [dz, dz]
                    exps += [1, -1]
                args += [0.5 * (lp - lq + 2 * km), 0.5 * (-lq - lp + 2 * km), 0.5 * (lp - lq - 2 * km + 2), 0.5 * (-lq - lp - 2 * km + 2)]
                speeds += [0.5 * (dp - dq + 2 * dkm), 0.5 * (-dq - dp + 2 * dkm), 0.5 * (dp - dq - 2 * dkm), 0.5 * (-dq - dp - 2 * dkm)]
                exps += [1, 1, -1, -1]
    res = limit_product(args, speeds, exps)
    if res.kind == "pole":
        raise NotInSpectrum("density product is singular")
    return pre * res.as_complex()


def density_d(i: int, xi: Sequence[float], k: MultiplicityBC, r: int | None = None, dk=cf.REG_DIRECTION) -> float:
    """Plancherel mass d_{Theta_i}(xi, k) of a residual component."""
    _require_regime(k)
    xi = np.asarray(xi, dtype=float)
    if i == 0:
        return 1.0
    r = r if r is not None else i
    if not is_in_D(i, xi, k):
        raise NotInSpectrum(f"{tuple(xi)} is not in D_k(Theta_{i})")
    norm = cf.c_tilde_rho(k, i).value ** 2
    if k.km > 0 and r > 1:
        val = norm * _density_product(xi, k, True, dk)
    else:
        stab = stabilizer_order(xi, enumerate_W_Theta(i, i))
        val = norm * _density_product(xi, k, False, dk) / stab
    if abs(val.imag) > 1e-10 * abs(val):
        raise NotInSpectrum("density is not real")
    return float(val.real)


# ---------------------------------------------------------------------------
# residues


def pole_inventory(i: int, xi: np.ndarray, k: MultiplicityBC, span: int = 12) -> list[list[float]]:
    """Poles in each coordinate of c_Theta(lam)^{-1} c_Theta(-lam)^{-1}, others at xi.

    Listed per Gamma factor, so a location appearing twice marks two poles that
    coincide at these parameters (they separate when k moves).
    """
    g = cf.product_c_tilde_Theta(i, i, k)
    out: list[list[float]] = [[] for _ in range(i)]
    for sign in (1.0, -1.0):
        for f in g.factors:
            if f.exp != -1:
                continue  # denominator of c~ is a pole of the inverse
            coef = sign * f.coef
            for j in range(i):
                if coef[j] == 0:
                    continue
                rest = f.const + sum(coef[q] * xi[q] for q in range(i) if q != j)
                for m in range(span):
                    out[j].append((-m - rest) / coef[j])
    return out


def default_radii(i: int, xi: np.ndarray, k: MultiplicityBC, floor: float = 1e-12) -> list[float]:
    inv = pole_inventory(i, xi, k)
    radii = []
    for j in range(i):
        others = [abs(p - xi[j]) for p in inv[j] if abs(p - xi[j]) > floor]
        gap = min(others) if others else 1.0
        radii.append(min(0.05, 0.25 * gap))
    # inner circles strictly smaller so moving poles stay outside them
    for j in range(i - 2, -1, -1):
        radii[j] = min(radii[j], 0.25 * radii[j + 1])
    return radii


def _torus_integral(i: int, xi: np.ndarray, k: MultiplicityBC, radii: Sequence[float], nodes: int, max_nodes: int) -> complex:
    """(2 pi i)^{-i} times the integral over the torus of circles around xi."""
    g = cf.product_c_tilde_Theta(i, i, k)
    norm = cf.c_tilde_rho(k, i).value
    prev = None
    n = nodes
    total = 0j
    while n <= max_nodes:
        theta = 2 * np.pi * np.arange(n) / n
        circles = [xi[j] + radii[j] * np.exp(1j * theta) for j in range(i)]
        jac = [1j * radii[j] * np.exp(1j * theta) * (2 * np.pi / n) for j in range(i)]
        grids = np.meshgrid(*circles, indexing="ij")
        lam = np.stack([gr.ravel() for gr in grids], axis=1)
        wts = np.ones(1, dtype=complex)
        for jj in jac:
            wts = np.multiply.outer(wts, jj)
        wts = wts.reshape(-1)
        logv = -g.log_batch(lam) - g.log_batch(-lam) + 2 * np.log(complex(norm))
        total = np.sum(np.exp(logv) * wts) / (2j * np.pi) ** i
        if prev is not None and abs(total - prev) <= 1e-13 * abs(total):
            return total
        prev = total
        n *= 2
    return total


def colliding_poles(i: int, xi: np.ndarray, k: MultiplicityBC, tol: float = 1e-9) -> bool:
    """True if two pole factors of the same coordinate meet at xi (a special k)."""
    inv = pole_inventory(i, xi, k)
    return any(sum(1 for p in inv[j] if abs(p - xi[j]) < tol) > (1 if j == 0 else 2) for j in range(i))


def iterated_residue(
    i: int,
    xi: Sequence[float],
    k: MultiplicityBC,
    radii: Sequence[float] | None = None,
    nodes: int = 64,
    max_nodes: int = 1024,
) -> complex:
    """Res_{lam_i = xi_i} ... Res_{lam_1 = xi_1} of c_Theta(lam)^{-1} c_Theta(-lam)^{-1} at fixed k."""
    xi = np.asarray(xi, dtype=float)
    radii = list(radii) if radii is not None else default_radii(i, xi, k)
    inv = pole_inventory(i, xi, k)
    for j in range(i):
        for p in inv[j]:
            d = abs(p - xi[j])
            if 1e-12 < d < 2 * radii[j]:
                raise ContourAmbiguity(f"another pole lies within twice the radius in coordinate {j + 1}")
    return _torus_integral(i, xi, k, radii, nodes, max_nodes)


def regularized_residue(
    i: int, xi: Sequence[float], k: MultiplicityBC, eps: Sequence[float] = (2e-3, 1e-3, 5e-4, 2.5e-4), dk=cf.REG_DIRECTION
) -> complex:
    """Iterated residue continued in k: evaluate at k + e dk (xi moving along) and extrapolate e -> 0."""
    xi = np.asarray(xi, dtype=float)
    vals = []
    for e in eps:
        ke = k.shifted(e * dk[0], e * dk[1], e * dk[2])
        xe = xi + e * cf.regularization_shift(i, k, dk)
        vals.append(iterated_residue(i, xe, ke))
    return richardson(list(eps), vals)


def richardson(h: Sequence[float], vals: Sequence[complex]) -> complex:
    """Polynomial extrapolation to h = 0 through all (h, value) pairs."""
    h = list(h)
    total = 0j
    for a, va in enumerate(vals):
        w = 1.0
        for b in range(len(h)):
            if b != a:
                w *= h[b] / (h[b] - h[a])
        total += w * va
    return total


def residue_verify_dtheta(
    i: int,
    xi: Sequence[float],
    k: MultiplicityBC,
    radii: Sequence[float] | None = None,
    sign: int | None = None,
    regularize: bool | None = None,
) -> tuple[float, float, float]:
    """Signed iterated residue of c_Theta(lam)^{-1} c_Theta(-lam)^{-1} against d_Theta(xi).

    When poles collide at xi for this k, the residue is taken along the path
    xi(k + e dk) and extrapolated, which is the value analytic in k.
    """
    xi = np.asarray(xi, dtype=float)
    closed = density_d(i, xi, k, r=i if i > 1 else 1)
    if regularize is None:
        regularize = colliding_poles(i, xi, k)
    sign = (-1) ** i if sign is None else sign
    if regularize:
        total = regularized_residue(i, xi, k)
    else:
        total = iterated_residue(i, xi, k, radii)
    numeric = float((sign * total).real)
    return numeric, closed, abs(numeric - closed) / abs(closed)


# ---------------------------------------------------------------------------
# measure


def fiber_density_fn(i: int, xi: Sequence[float], k: MultiplicityBC, r: int) -> Callable[[np.ndarray], np.ndarray]:
    """nu -> |c^{Theta_i}(xi + i nu)|^{-2} on the fiber (nu has shape (N, r - i))."""
    xi = np.asarray(xi, dtype=float)

    def density(nu: np.ndarray) -> np.ndarray:
        nu = np.atleast_2d(np.asarray(nu, dtype=float))
        lam = np.concatenate([np.broadcast_to(xi, (nu.shape[0], i)).astype(complex), 1j * nu], axis=1)
        if i == 0:
            lc = cf.log_c_batch("full", lam, k)
        else:
            lc = cf.log_c_batch("upper_Theta", lam, k, i)
        return np.exp(-2 * lc.real)

    return density


def weyl_factor(i: int, r: int) -> float:
    """1 / |W(Theta_i)|, the BC_{r-i} group on the fiber coordinates."""
    return 1.0 / (2 ** (r - i) * math.factorial(r - i))


def assemble_measure(k: MultiplicityBC, r: int) -> list[SpectralComponentMeasure]:
    _require_regime(k)
    out = []
    for i in range(r + 1):
        for p in enumerate_D(i, k):
            out.append(
                SpectralComponentMeasure(
                    i=i,
                    xi=p.xi,
                    density_const=density_d(i, p.xi, k, r=r),
                    weyl_factor=weyl_factor(i, r),
                    stabilizer=p.stabilizer,
                    fiber_density=fiber_density_fn(i, p.xi, k, r),
                )
            )
    return out
