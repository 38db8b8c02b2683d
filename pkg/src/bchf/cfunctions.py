"""Harish-Chandra c-functions of type BC_r and their relatives.

Every c-function is held as an explicit list of Gamma factors whose arguments
are affine in (lambda, k).  That keeps pole/pole cancellations auditable:

* ``GammaProduct.evaluate`` pairs the factors ratio by ratio (matched speeds);
* ``GammaProduct.directional_limit`` takes a limit along a joint (lambda, k) path;
* ``regularized`` evaluates at points of the discrete sets, where xi moves
  with k so that the value is the continuation in k of the generic one.

Normalizing constants at rho(k) use the closed product over the rank, which
is regular in k; the complementary constants are quotients of those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .core_types import Degenerate, MultiplicityBC, WeylElement, enumerate_W_Xi_i
from .gamma_kernel import (
    GammaRatioResult,
    gamma_ratio,
    in_gray_zone,
    limit_product,
    log_gamma,
)

LOG2 = math.log(2.0)
DEGENERACY_TOL = 1e-8
# generic direction in k-space for limits of functions that are regular in k
K_DIRECTION = (0.5772156649, 0.7071067812, 0.3183098862)


@dataclass(frozen=True)
class CFunctionValue:
    value: complex
    condition: str = "clean"  # clean | limit_taken | ill_conditioned | pole | zero

    @property
    def is_pole(self) -> bool:
        return self.condition == "pole"


@dataclass
class GammaFactor:
    """Gamma(coef . lambda + const)^exp, with d(const)/dk = kgrad."""

    coef: np.ndarray
    const: float
    kgrad: tuple[float, float, float]
    exp: int

    def arg(self, lam) -> complex:
        return complex(np.dot(self.coef, lam) + self.const)


@dataclass
class GammaProduct:
    r: int
    factors: list[GammaFactor] = field(default_factory=list)
    log_prefactor: float = 0.0
    # indices of (numerator, denominator) pairs forming the natural ratios
    pairs: list[tuple[int, int]] = field(default_factory=list)

    def add_ratio(self, coef, num_const, num_kgrad, den_const, den_kgrad) -> None:
        coef = np.asarray(coef, dtype=float)
        self.factors.append(GammaFactor(coef, num_const, num_kgrad, 1))
        self.factors.append(GammaFactor(coef, den_const, den_kgrad, -1))
        n = len(self.factors)
        self.pairs.append((n - 2, n - 1))

    def extend(self, other: "GammaProduct") -> None:
        off = len(self.factors)
        self.factors.extend(other.factors)
        self.pairs.extend((a + off, b + off) for a, b in other.pairs)
        self.log_prefactor += other.log_prefactor

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, lam) -> CFunctionValue:
        """Product of the paired ratios, each with matched-speed limits."""
        lam = np.asarray(lam, dtype=complex)
        value = complex(math.exp(self.log_prefactor))
        cond = "clean"
        poles = 0
        zeros = 0
        for a_idx, b_idx in self.pairs:
            fa, fb = self.factors[a_idx], self.factors[b_idx]
            a, b = fa.arg(lam), fb.arg(lam)
            if in_gray_zone(a) or in_gray_zone(b):
                cond = "ill_conditioned"
            res = gamma_ratio(a, b)
            if res.kind == "pole":
                poles += 1
            elif res.kind == "zero":
                zeros += 1
            else:
                if res.kind == "limit" and cond == "clean":
                    cond = "limit_taken"
                value *= res.value
        if poles > zeros:
            return CFunctionValue(complex(math.inf), "pole")
        if zeros > poles:
            return CFunctionValue(0j, "zero")
        if poles:
            # a pole in one ratio against a zero in another: take the joint limit
            return self.directional_limit(lam, np.ones(self.r))
        return CFunctionValue(value, cond)

    def directional_limit(self, lam, dlam, dk=(0.0, 0.0, 0.0)) -> CFunctionValue:
        """lim_{e->0} of the product at (lam + e dlam, k + e dk)."""
        lam = np.asarray(lam, dtype=complex)
        dlam = np.asarray(dlam, dtype=complex)
        args = [f.arg(lam) for f in self.factors]
        speeds = [complex(np.dot(f.coef, dlam) + np.dot(f.kgrad, dk)) for f in self.factors]
        exps = [f.exp for f in self.factors]
        res = limit_product(args, speeds, exps)
        return _from_ratio(res, self.log_prefactor)

    def perturbed(self, lam, dlam, dk, eps: float) -> complex:
        """Plain evaluation at (lam + eps dlam, k + eps dk) without limit logic."""
        lam = np.asarray(lam, dtype=complex) + eps * np.asarray(dlam, dtype=complex)
        total = self.log_prefactor + 0j
        for f in self.factors:
            a = f.arg(lam) + eps * float(np.dot(f.kgrad, dk))
            total += f.exp * log_gamma(a)
        return complex(np.exp(total))

    def log_batch(self, lams: np.ndarray) -> np.ndarray:
        """Vectorized log of the product at generic points (N, r)."""
        lams = np.asarray(lams, dtype=complex)
        out = np.full(lams.shape[0], self.log_prefactor, dtype=complex)
        for f in self.factors:
            a = lams @ f.coef + f.const
            lg = special.loggamma(a)
            # an exact pole in a denominator is a zero of the product
            pole = (a.imag == 0) & (a.real <= 0) & (a.real == np.round(a.real))
            if np.any(pole):
                lg = np.where(pole, complex(np.inf, 0.0), lg)
            # add or subtract rather than multiply: inf * -1 would leave a nan phase
            if f.exp == 1:
                out += lg
            elif f.exp == -1:
                out -= lg
            else:
                out += f.exp * lg
        return out


def _degenerate(a: complex) -> bool:
    m = round(-a.real)
    return a.real <= 0.5 and abs(a.imag) < DEGENERACY_TOL and abs(a.real + m) < DEGENERACY_TOL


def _from_ratio(res: GammaRatioResult, log_prefactor: float) -> CFunctionValue:
    if res.kind == "pole":
        return CFunctionValue(complex(math.inf), "pole")
    if res.kind == "zero":
        return CFunctionValue(0j, "zero")
    cond = "limit_taken" if res.kind == "limit" else "clean"
    return CFunctionValue(res.value * math.exp(log_prefactor), cond)


# ---------------------------------------------------------------------------
# builders


def _unit(r: int, j: int, scale: float = 1.0) -> np.ndarray:
    e = np.zeros(r)
    e[j] = scale
    return e


def medium_product(r: int, k: MultiplicityBC, minus: bool = True, plus: bool = True, pairs=None) -> GammaProduct:
    """Factors of the medium roots beta_p - beta_q and/or beta_p + beta_q (q < p)."""
    g = GammaProduct(r)
    if pairs is None:
        pairs = [(p, q) for p in range(r) for q in range(p)]
    for p, q in pairs:
        if minus:
            coef = _unit(r, p, 0.5) - _unit(r, q, 0.5)
            g.add_ratio(coef, 0.0, (0, 0, 0), k.km, (0, 1, 0))
        if plus:
            coef = _unit(r, p, 0.5) + _unit(r, q, 0.5)
            g.add_ratio(coef, 0.0, (0, 0, 0), k.km, (0, 1, 0))
    return g


def short_long_product(r: int, k: MultiplicityBC, indices) -> GammaProduct:
    """prod_j c~_j: the factors of beta_j and 2 beta_j."""
    g = GammaProduct(r)
    for j in indices:
        e = _unit(r, j, 0.5)
        g.add_ratio(e, 0.0, (0, 0, 0), 0.5 * (k.ks + 1), (0.5, 0, 0))
        g.add_ratio(e, 0.5, (0, 0, 0), 0.5 * (k.ks + 2 * k.kl), (0.5, 0, 1.0))
        g.log_prefactor += -k.ks * LOG2
    return g


def product_c_tilde(r: int, k: MultiplicityBC) -> GammaProduct:
    g = medium_product(r, k)
    g.extend(short_long_product(r, k, range(r)))
    return g


def product_c_tilde_Theta(i: int, r: int, k: MultiplicityBC) -> GammaProduct:
    """Roots of <Theta_i>: BC_i on coordinates 1..i."""
    g = medium_product(r, k, pairs=[(p, q) for p in range(i) for q in range(p)])
    g.extend(short_long_product(r, k, range(i)))
    return g


def product_c_tilde_upper_Theta(i: int, r: int, k: MultiplicityBC) -> GammaProduct:
    """Positive roots outside <Theta_i>: everything touching a coordinate > i."""
    g = medium_product(r, k, pairs=[(p, q) for p in range(i, r) for q in range(p)])
    g.extend(short_long_product(r, k, range(i, r)))
    return g


def product_c_tilde_Xi(r: int, k: MultiplicityBC) -> GammaProduct:
    return medium_product(r, k, minus=True, plus=False)


def product_c_tilde_upper_Xi(r: int, k: MultiplicityBC) -> GammaProduct:
    g = medium_product(r, k, minus=False, plus=True)
    g.extend(short_long_product(r, k, range(r)))
    return g


# ---------------------------------------------------------------------------
# normalizing constants


def _rho_product(r: int, k: MultiplicityBC) -> tuple[list[complex], list[complex], list[int]]:
    args, speeds, exps = [], [], []
    dks, dkm, dkl = K_DIRECTION
    for i in range(1, r + 1):
        x = k.ks + (i - 1) * k.km + k.kl
        sx = dks + (i - 1) * dkm + dkl
        args += [x, 2 * x, k.km, i * k.km]
        speeds += [sx, 2 * sx, dkm, i * dkm]
        exps += [1, -1, 1, -1]
    return args, speeds, exps


def c_tilde_rho(k: MultiplicityBC, r: int) -> CFunctionValue:
    """c~(rho(k), k) from the closed product, with limits in k."""
    if r == 0:
        return CFunctionValue(1.0 + 0j)
    res = limit_product(*_rho_product(r, k))
    return _from_ratio(res, 0.0)


def c_tilde_rho_Xi(k: MultiplicityBC, r: int) -> CFunctionValue:
    args, speeds, exps = [], [], []
    dkm = K_DIRECTION[1]
    for j in range(2, r + 1):
        args += [k.km, j * k.km]
        speeds += [dkm, j * dkm]
        exps += [1, -1]
    return _from_ratio(limit_product(args, speeds, exps), 0.0)


def _ratio_value(a: CFunctionValue, b: CFunctionValue) -> CFunctionValue:
    if a.is_pole or b.is_pole or b.value == 0:
        raise Degenerate("normalizing constant is singular for these parameters")
    cond = a.condition if a.condition != "clean" else b.condition
    return CFunctionValue(a.value / b.value, cond)


def norm_constant(kind: str, k: MultiplicityBC, r: int, i: int = 0) -> complex:
    """Normalizer c~_bullet(rho(k), k) for kind in {full, Theta, upper_Theta, Xi, upper_Xi}."""
    if kind == "full":
        v = c_tilde_rho(k, r)
    elif kind == "Theta":
        v = c_tilde_rho(k, i)
    elif kind == "upper_Theta":
        v = _ratio_value(c_tilde_rho(k, r), c_tilde_rho(k, i))
    elif kind == "Xi":
        v = c_tilde_rho_Xi(k, r)
    elif kind == "upper_Xi":
        v = _ratio_value(c_tilde_rho(k, r), c_tilde_rho_Xi(k, r))
    else:
        raise ValueError(kind)
    if v.is_pole or v.value == 0:
        raise Degenerate(f"normalizing constant {kind} is singular")
    return v.value


def _product(kind: str, k: MultiplicityBC, r: int, i: int = 0) -> GammaProduct:
    if kind == "full":
        return product_c_tilde(r, k)
    if kind == "Theta":
        return product_c_tilde_Theta(i, r, k)
    if kind == "upper_Theta":
        return product_c_tilde_upper_Theta(i, r, k)
    if kind == "Xi":
        return product_c_tilde_Xi(r, k)
    if kind == "upper_Xi":
        return product_c_tilde_upper_Xi(r, k)
    raise ValueError(kind)


def normalized_product(kind: str, k: MultiplicityBC, r: int, i: int = 0) -> GammaProduct:
    g = _product(kind, k, r, i)
    g.log_prefactor -= 0.0
    return g


# ---------------------------------------------------------------------------
# public c-functions


def _normalize(val: CFunctionValue, norm: complex) -> CFunctionValue:
    if val.is_pole:
        return val
    return CFunctionValue(val.value / norm, val.condition)


def c_tilde(lam, k: MultiplicityBC) -> CFunctionValue:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    return product_c_tilde(len(lam), k).evaluate(lam)


def c(lam, k: MultiplicityBC) -> CFunctionValue:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    r = len(lam)
    return _normalize(product_c_tilde(r, k).evaluate(lam), norm_constant("full", k, r))


def c_Theta(i: int, lam, k: MultiplicityBC) -> CFunctionValue:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    r = len(lam)
    return _normalize(product_c_tilde_Theta(i, r, k).evaluate(lam), norm_constant("Theta", k, r, i))


def c_upper_Theta(i: int, lam, k: MultiplicityBC) -> CFunctionValue:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    r = len(lam)
    return _normalize(product_c_tilde_upper_Theta(i, r, k).evaluate(lam), norm_constant("upper_Theta", k, r, i))


def c_Xi(lam, k: MultiplicityBC) -> CFunctionValue:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    r = len(lam)
    if r == 1:
        return CFunctionValue(1.0 + 0j)
    return _normalize(product_c_tilde_Xi(r, k).evaluate(lam), norm_constant("Xi", k, r))


def c_upper_Xi(lam, k: MultiplicityBC) -> CFunctionValue:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    r = len(lam)
    return _normalize(product_c_tilde_upper_Xi(r, k).evaluate(lam), norm_constant("upper_Xi", k, r))


def c_tilde_i(j: int, lam, k: MultiplicityBC) -> CFunctionValue:
    """Factor of beta_j and 2 beta_j (j is 0-based)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    return short_long_product(len(lam), k, [j]).evaluate(lam)


def c_tilde_i_duplicated(z: complex, k: MultiplicityBC) -> complex:
    """Second expression of the single-index factor, via Gamma(z) and sqrt(pi)."""
    a, b = k.alpha, abs(k.beta)
    log_val = (
        (-k.alpha + k.beta - z + 1) * LOG2
        + 0.5 * math.log(math.pi)
        + log_gamma(z)
        - log_gamma(0.5 * (z + a - b + 1))
        - log_gamma(0.5 * (z + a + b + 1))
    )
    return complex(np.exp(log_val))


# generic direction in k along which discrete points are followed
REG_DIRECTION = (1.0, 0.3711, 0.6180)


def regularization_shift(i: int, k: MultiplicityBC, dk=REG_DIRECTION) -> np.ndarray:
    """Velocity of xi in D_k(Theta_i) when k moves with velocity dk.

    xi_1 = alpha - |beta| + 1 + 2m and xi_{j+1} = xi_j + 2k_m + 2n, so the
    first coordinate moves with alpha - |beta| + 1 and each step adds 2 dk_m.
    """
    dks, dkm, dkl = dk
    base = dks + 2 * dkl if k.beta < 0 else dks
    return np.array([base + 2 * j * dkm for j in range(i)], dtype=float)


def regularized(g: GammaProduct, xi: Sequence[float], lam_cont, k: MultiplicityBC, dk=REG_DIRECTION) -> CFunctionValue:
    """Value of g at (xi, lam_cont) following xi(k + e dk) as e -> 0."""
    i = len(xi)
    lam = np.concatenate([np.asarray(xi, dtype=complex), np.atleast_1d(np.asarray(lam_cont, dtype=complex))])
    dlam = np.concatenate([regularization_shift(i, k, dk), np.zeros(len(lam) - i)])
    return g.directional_limit(lam, dlam, dk)


def sigma_restrict_c_upper_Xi(
    i: int, xi: Sequence[float], lam_cont, k: MultiplicityBC, dk=REG_DIRECTION
) -> dict[WeylElement, complex]:
    """Restriction of c^Xi(w lambda) to lambda_{1..i} = xi, for w in W^Xi_i.

    xi is followed along its k-dependence, which is how the restriction
    stays analytic in k when Gamma arguments collide at special k.
    """
    lam_cont = np.atleast_1d(np.asarray(lam_cont, dtype=complex))
    r = i + len(lam_cont)
    _check_supgeneric(lam_cont)
    norm = norm_constant("upper_Xi", k, r)
    base = product_c_tilde_upper_Xi(r, k)
    out: dict[WeylElement, complex] = {}
    for w in enumerate_W_Xi_i(i, r):
        signs = np.array(w.signs[i:], dtype=float)
        val = regularized(base, xi, signs * lam_cont, k, dk)
        if val.is_pole:
            raise Degenerate("restricted coefficient has a pole")
        out[w] = val.value / norm
    return out


def c_regularized(kind: str, xi: Sequence[float], lam_cont, k: MultiplicityBC, i_theta: int = 0, dk=REG_DIRECTION) -> CFunctionValue:
    """Normalized c-function variant at (xi, lam_cont) along the discrete-point path."""
    lam_cont = np.atleast_1d(np.asarray(lam_cont, dtype=complex)) if np.size(lam_cont) else np.zeros(0, complex)
    r = len(xi) + len(lam_cont)
    if kind == "Xi" and r == 1:
        return CFunctionValue(1.0 + 0j)
    val = regularized(_product(kind, k, r, i_theta), xi, lam_cont, k, dk)
    return _normalize(val, norm_constant(kind, k, r, i_theta))


def _check_supgeneric(lam_cont) -> None:
    n = len(lam_cont)
    for j in range(n):
        if abs(lam_cont[j]) < DEGENERACY_TOL:
            raise Degenerate("continuous coordinate vanishes")
        for q in range(j):
            if abs(lam_cont[j] - lam_cont[q]) < DEGENERACY_TOL or abs(lam_cont[j] + lam_cont[q]) < DEGENERACY_TOL:
                raise Degenerate("continuous coordinates coincide up to sign")


def spectral_density_continuous(lam_imag, k: MultiplicityBC) -> float:
    """|c(i nu, k)|^{-2} = 1 / (c(lam) c(-lam)) on the imaginary axis."""
    nu = np.atleast_1d(np.asarray(lam_imag, dtype=float))
    r = len(nu)
    _check_supgeneric(1j * nu)
    lam = 1j * nu
    g = product_c_tilde(r, k)
    norm = norm_constant("full", k, r)
    v = np.exp(g.log_batch(np.stack([lam, -lam]))) / norm
    val = 1.0 / (v[0] * v[1])
    if abs(val.imag) > 1e-10 * abs(val):
        raise Degenerate("density is not real")
    return float(val.real)


# ---------------------------------------------------------------------------
# vectorized evaluation at generic points


def log_c_batch(kind: str, lams: np.ndarray, k: MultiplicityBC, i: int = 0) -> np.ndarray:
    """log of the normalized c-function variant at generic points (N, r)."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    r = lams.shape[1]
    if kind == "Xi" and r == 1:
        return np.zeros(lams.shape[0], dtype=complex)
    g = _product(kind, k, r, i)
    return g.log_batch(lams) - np.log(complex(norm_constant(kind, k, r, i)))


def c_batch(kind: str, lams: np.ndarray, k: MultiplicityBC, i: int = 0) -> np.ndarray:
    return np.exp(log_c_batch(kind, lams, k, i))
