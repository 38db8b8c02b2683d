"""Root system BC_r: coordinates, Weyl group, subsets, rho(k) and the weight delta_k.

Coordinates
-----------
Spectral points are stored as ``lambda_i = <lambda, beta_i^vee>`` so that
``lambda = 1/2 sum lambda_i beta_i``.  With ``||beta_i|| = 2`` the bilinear form
becomes the plain dot product ``<lambda, mu> = sum lambda_i mu_i``.

Space points are stored as orthonormal coordinates ``t_i = <x, beta_i / 2>``;
the pairing is ``lambda(x) = sum lambda_i t_i`` and the roots take the values
``beta_i(x) = 2 t_i`` and ``(beta_p +- beta_q)(x) = 2 (t_p +- t_q)``.

Weyl group convention
---------------------
An element ``(eps, sigma)`` acts by ``((eps, sigma) lam)[sigma[j]] = eps[j] * lam[j]``
(0-based indices).  The same formula is used on space points, which keeps the
pairing invariant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np


class BCHFError(Exception):
    """Base class for library errors."""


class WallSingularity(BCHFError):
    pass


class WallTooClose(BCHFError):
    pass


class PoleArgument(BCHFError):
    pass


class Resonance(BCHFError):
    pass


class NonGenericSpectral(BCHFError):
    pass


class NonGenericParameters(BCHFError):
    pass


class NotInSpectrum(BCHFError):
    pass


class InvalidRegime(BCHFError):
    pass


class ContourAmbiguity(BCHFError):
    pass


class ContourThroughPole(BCHFError):
    pass


class QuadratureFailure(BCHFError):
    pass


class Degenerate(BCHFError):
    pass


class ParameterPole(BCHFError):
    pass


# ---------------------------------------------------------------------------
# multiplicities


@dataclass(frozen=True)
class MultiplicityBC:
    """Multiplicity triple (k_s, k_m, k_l) on short, medium and long roots."""

    ks: float
    km: float
    kl: float

    @property
    def alpha(self) -> float:
        return self.ks + self.kl - 0.5

    @property
    def beta(self) -> float:
        return self.kl - 0.5

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.ks, self.km, self.kl)

    def tilde(self) -> "MultiplicityBC":
        """The partner multiplicity (ks + 2kl - 1, km, 1 - kl)."""
        return MultiplicityBC(self.ks + 2 * self.kl - 1, self.km, 1 - self.kl)

    def shifted(self, dks: float = 0.0, dkm: float = 0.0, dkl: float = 0.0) -> "MultiplicityBC":
        return MultiplicityBC(self.ks + dks, self.km + dkm, self.kl + dkl)

    def in_K1(self, r: int) -> bool:
        """Local integrability of delta_k."""
        return (self.ks + self.kl > -0.5 + max(0.0, -(r - 1) * self.km)) and self.km > -1.0 / r

    def in_K1_prime(self) -> bool:
        """The regime treated here: alpha > -1 and k_m >= 0."""
        return self.ks + self.kl > -0.5 and self.km >= 0

    def in_K_plus_regime(self) -> bool:
        """Parameters for which the spectrum is purely continuous."""
        return self.ks >= -1 and self.km >= 0 and self.ks + 2 * self.kl >= 0

    def is_zero(self) -> bool:
        return self.ks == 0 and self.km == 0 and self.kl == 0


def rho(k: MultiplicityBC, r: int) -> np.ndarray:
    """rho(k) in spectral coordinates: k_s + 2k_l + 2(i-1)k_m."""
    if r < 1:
        raise ValueError("rank must be >= 1")
    return np.array([k.ks + 2 * k.kl + 2 * i * k.km for i in range(r)], dtype=float)


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class SpectralPoint:
    coords: tuple[complex, ...]

    @classmethod
    def of(cls, values: Sequence[complex]) -> "SpectralPoint":
        return cls(tuple(complex(v) for v in values))

    @property
    def rank(self) -> int:
        return len(self.coords)

    def array(self) -> np.ndarray:
        return np.array(self.coords, dtype=complex)

    def norm2(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.coords))

    def __call__(self, x: "ChamberPoint") -> complex:
        return pairing(self.array(), x.array())


@dataclass(frozen=True)
class ChamberPoint:
    t: tuple[float, ...]

    @classmethod
    def of(cls, values: Sequence[float]) -> "ChamberPoint":
        return cls(tuple(float(v) for v in values))

    @property
    def rank(self) -> int:
        return len(self.t)

    def array(self) -> np.ndarray:
        return np.array(self.t, dtype=float)

    def in_chamber(self) -> bool:
        return in_positive_chamber(self.array())


def pairing(lam, t) -> complex:
    return complex(np.dot(np.asarray(lam, dtype=complex), np.asarray(t, dtype=float)))


def in_positive_chamber(t) -> bool:
    t = np.asarray(t, dtype=float)
    return bool(t[0] > 0 and np.all(np.diff(t) > 0))


def simple_root_values(t) -> np.ndarray:
    """Values of the simple roots alpha_1..alpha_r at x (last axis = coordinates).

    alpha_i = beta_{r+1-i} - beta_{r-i} for i < r and alpha_r = beta_1.
    """
    t = np.asarray(t, dtype=float)
    r = t.shape[-1]
    vals = [2 * (t[..., r - i] - t[..., r - i - 1]) for i in range(1, r)]
    vals.append(2 * t[..., 0])
    return np.stack(vals, axis=-1)


# ---------------------------------------------------------------------------
# roots


@dataclass(frozen=True)
class Root:
    kind: str  # "s", "m" or "l"
    vec: tuple[int, ...]  # spectral coordinates: beta_j <-> 2 e_j

    def multiplicity(self, k: MultiplicityBC) -> float:
        return {"s": k.ks, "m": k.km, "l": k.kl}[self.kind]


@lru_cache(maxsize=None)
def positive_roots(r: int) -> tuple[Root, ...]:
    roots: list[Root] = []
    for j in range(r):
        e = [0] * r
        e[j] = 2
        roots.append(Root("s", tuple(e)))
        e = [0] * r
        e[j] = 4
        roots.append(Root("l", tuple(e)))
    for p in range(r):
        for q in range(p):
            for s in (1, -1):
                e = [0] * r
                e[p] = 2
                e[q] = 2 * s
                roots.append(Root("m", tuple(e)))
    return tuple(roots)


@lru_cache(maxsize=None)
def simple_roots(r: int) -> tuple[tuple[int, ...], ...]:
    """Simple roots alpha_1..alpha_r in spectral coordinates."""
    out = []
    for i in range(1, r):
        e = [0] * r
        e[r - i] = 2
        e[r - i - 1] = -2
        out.append(tuple(e))
    e = [0] * r
    e[0] = 2
    out.append(tuple(e))
    return tuple(out)


def in_Q_plus(kappa: Sequence[int]) -> bool:
    """Membership of kappa (spectral coordinates, even integers) in N-span of simple roots."""
    kappa = list(kappa)
    if any(c % 2 for c in kappa):
        return False
    tail = 0
    for c in reversed(kappa):
        tail += c // 2
        if tail < 0:
            return False
    return True


def height(kappa: Sequence[int]) -> int:
    """Sum of simple-root coefficients; for kappa = 2m this is sum_i i*m_i."""
    return sum((i + 1) * (c // 2) for i, c in enumerate(kappa))


@lru_cache(maxsize=None)
def enumerate_Q_plus(r: int, max_height: int) -> tuple[tuple[int, ...], ...]:
    """All kappa in Q_+ with height <= max_height, sorted by height."""
    out: list[tuple[int, ...]] = []
    # parametrize by tail sums S_j = sum_{i >= j} m_i >= 0 with sum_j S_j = height
    for total in range(max_height + 1):
        for S in _compositions(total, r):
            m = [S[j] - (S[j + 1] if j + 1 < r else 0) for j in range(r)]
            out.append(tuple(2 * c for c in m))
    return tuple(out)


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Weyl group


@dataclass(frozen=True)
class WeylElement:
    signs: tuple[int, ...]
    perm: tuple[int, ...]  # 0-based images sigma(j)

    @property
    def rank(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, r: int) -> "WeylElement":
        return cls((1,) * r, tuple(range(r)))

    def act(self, v):
        """Apply to a vector (spectral or space); last axis is the coordinate axis."""
        v = np.asarray(v)
        out = np.empty_like(v)
        for j in range(self.rank):
            out[..., self.perm[j]] = self.signs[j] * v[..., j]
        return out

    def inverse(self) -> "WeylElement":
        r = self.rank
        inv_perm = [0] * r
        inv_signs = [1] * r
        for j in range(r):
            inv_perm[self.perm[j]] = j
            inv_signs[self.perm[j]] = self.signs[j]
        return WeylElement(tuple(inv_signs), tuple(inv_perm))

    def compose(self, other: "WeylElement") -> "WeylElement":
        """self o other."""
        r = self.rank
        perm = [0] * r
        signs = [1] * r
        for j in range(r):
            mid = other.perm[j]
            perm[j] = self.perm[mid]
            signs[j] = other.signs[j] * self.signs[mid]
        return WeylElement(tuple(signs), tuple(perm))

    def is_identity(self) -> bool:
        return all(s == 1 for s in self.signs) and self.perm == tuple(range(self.rank))


def weyl_order(r: int) -> int:
    return 2**r * math.factorial(r)


@lru_cache(maxsize=None)
def enumerate_W(r: int) -> tuple[WeylElement, ...]:
    out = []
    for perm in itertools.permutations(range(r)):
        for signs in itertools.product((1, -1), repeat=r):
            out.append(WeylElement(tuple(signs), tuple(perm)))
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_W_Theta(i: int, r: int) -> tuple[WeylElement, ...]:
    """W_{Theta_i}: the BC_i Weyl group acting on coordinates 1..i."""
    return tuple(w for w in enumerate_W(r) if all(w.perm[j] == j and w.signs[j] == 1 for j in range(i, r)))


@lru_cache(maxsize=None)
def enumerate_W_upper_Theta(i: int, r: int) -> tuple[WeylElement, ...]:
    """W^{Theta_i}: sigma increasing on 1..i and no sign change there."""
    out = []
    for w in enumerate_W(r):
        if all(w.perm[j] < w.perm[j + 1] for j in range(i - 1)) and all(w.signs[j] == 1 for j in range(i)):
            out.append(w)
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_W_of_Theta(i: int, r: int) -> tuple[WeylElement, ...]:
    """W(Theta_i): pointwise stabilizer of a(Theta_i), acting on coordinates i+1..r."""
    return tuple(w for w in enumerate_W(r) if all(w.perm[j] == j and w.signs[j] == 1 for j in range(i)))


@lru_cache(maxsize=None)
def enumerate_W_Xi(r: int) -> tuple[WeylElement, ...]:
    """W^Xi = Z_2^r (pure sign changes)."""
    return tuple(WeylElement(tuple(s), tuple(range(r))) for s in itertools.product((1, -1), repeat=r))


@lru_cache(maxsize=None)
def enumerate_W_Xi_i(i: int, r: int) -> tuple[WeylElement, ...]:
    """W^Xi_i: sign changes on coordinates i+1..r."""
    return tuple(w for w in enumerate_W_Xi(r) if all(w.signs[j] == 1 for j in range(i)))


@lru_cache(maxsize=None)
def enumerate_S(r: int) -> tuple[WeylElement, ...]:
    """W_Xi = S_r (pure permutations)."""
    return tuple(WeylElement((1,) * r, tuple(p)) for p in itertools.permutations(range(r)))


def weyl_orbit(lam, tol: float = 1e-12) -> list[np.ndarray]:
    lam = np.asarray(lam, dtype=complex)
    out: list[np.ndarray] = []
    for w in enumerate_W(lam.shape[-1]):
        v = w.act(lam)
        if not any(np.max(np.abs(v - u)) <= tol for u in out):
            out.append(v)
    return out


def stabilizer_order(lam, group: Sequence[WeylElement], tol: float = 1e-9) -> int:
    lam = np.asarray(lam, dtype=complex)
    return sum(1 for w in group if np.max(np.abs(w.act(lam) - lam)) <= tol)


def chamber_representative(t) -> np.ndarray:
    """The W-image of x in the closed positive chamber."""
    return np.sort(np.abs(np.asarray(t, dtype=float)), axis=-1)


# ---------------------------------------------------------------------------
# weight


def _log_abs_2sinh(s):
    """log|2 sinh s| computed stably for large |s|."""
    s = np.abs(np.asarray(s, dtype=float))
    with np.errstate(divide="ignore"):
        return s + np.log1p(-np.exp(-2 * s))


def _log_2cosh(s):
    s = np.abs(np.asarray(s, dtype=float))
    return s + np.log1p(np.exp(-2 * s))


def log_weight_delta(k: MultiplicityBC, t) -> np.ndarray:
    """log delta_k(x) = sum over positive roots of 2k_a log|2 sinh(a(x)/2)|.

    Accepts ``t`` of shape (..., r).  Raises WallSingularity when a root with a
    negative exponent vanishes at a point.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        t = t[None]
    r = t.shape[-1]
    out = np.zeros(t.shape[:-1])
    terms = []
    for j in range(r):
        terms.append((2 * k.ks, t[..., j]))  # beta_j(x)/2
        terms.append((2 * k.kl, 2 * t[..., j]))  # (2 beta_j)(x)/2
    for p in range(r):
        for q in range(p):
            terms.append((2 * k.km, t[..., p] - t[..., q]))
            terms.append((2 * k.km, t[..., p] + t[..., q]))
    for expo, arg in terms:
        if expo == 0:
            continue
        zero = np.asarray(arg) == 0
        if np.any(zero) and expo < 0:
            raise WallSingularity("weight has a negative power of a vanishing root")
        with np.errstate(divide="ignore"):
            out = out + expo * _log_abs_2sinh(arg)
    return out


def log_weight_delta_factored(k: MultiplicityBC, t) -> np.ndarray:
    """Same weight via (2 sinh t)^{2ks+2kl} (2 cosh t)^{2kl} per coordinate."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        t = t[None]
    r = t.shape[-1]
    out = np.zeros(t.shape[:-1])
    with np.errstate(divide="ignore"):
        for j in range(r):
            if k.ks + k.kl != 0:
                out = out + (2 * k.ks + 2 * k.kl) * _log_abs_2sinh(t[..., j])
            if k.kl != 0:
                out = out + 2 * k.kl * _log_2cosh(t[..., j])
        if k.km != 0:
            for p in range(r):
                for q in range(p):
                    out = out + 2 * k.km * (_log_abs_2sinh(t[..., p] - t[..., q]) + _log_abs_2sinh(t[..., p] + t[..., q]))
    return out


def weight_delta(k: MultiplicityBC, t) -> np.ndarray:
    return np.exp(log_weight_delta(k, t))
