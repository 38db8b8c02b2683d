"""Harish-Chandra series and the hypergeometric function F of type BC_r.

The series is Phi(lam; x) = sum_{kappa in Q_+} a_kappa e^{(lam - rho - kappa)(x)},
a_0 = 1, with coefficients fixed by the eigenvalue equation of the
trigonometric Laplacian.  Expanding coth through its exponential series gives

    <2 lam - kappa, kappa> a_kappa
        = 2 sum_alpha k_alpha sum_{n >= 1} <lam - rho - kappa + n alpha, alpha> a_{kappa - n alpha},

summed over positive roots alpha with kappa - n alpha in Q_+.  Coefficients
are computed for whole batches of spectral points at once: for each kappa a
single vectorized update over the (precomputed) list of contributing terms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import cfunctions as cf
from .core_types import (
    Degenerate,
    MultiplicityBC,
    NonGenericSpectral,
    Resonance,
    WallTooClose,
    enumerate_Q_plus,
    enumerate_S,
    enumerate_W,
    enumerate_W_Xi,
    enumerate_W_Xi_i,
    height,
    log_weight_delta,
    positive_roots,
    rho,
    simple_root_values,
)

DEFAULT_HEIGHT = {1: 40, 2: 30, 3: 20}
# point evaluations may deepen the series up to these heights
HEIGHT_CAP = {1: 640, 2: 120, 3: 40}
GENERIC_MARGIN = 1e-6
TERMINATION_RTOL = 1e-12


@dataclass(frozen=True)
class SeriesBudget:
    max_height: int
    wall_margin: float = 0.1
    resonance_tol: float = 1e-10
    tail_tol: float = 1e-12

    @classmethod
    def default(cls, r: int, **overrides) -> "SeriesBudget":
        return cls(max_height=overrides.pop("max_height", DEFAULT_HEIGHT.get(r, 16)), **overrides)

    def deeper(self, r: int) -> "SeriesBudget | None":
        """Doubled height, or None once the cap for this rank is reached."""
        cap = HEIGHT_CAP.get(r, self.max_height)
        if self.max_height >= cap:
            return None
        return replace(self, max_height=min(2 * self.max_height, cap))


@dataclass(frozen=True)
class SeriesValue:
    value: complex
    tail_bound: float
    terms_used: int


# ---------------------------------------------------------------------------
# recursion tables


@dataclass(frozen=True)
class Stencil:
    kappas: np.ndarray  # (n, r) even integers
    heights: np.ndarray  # (n,)
    root_vecs: np.ndarray  # (nroots, r)
    root_kinds: tuple[str, ...]
    # per kappa: source indices, root indices, n multiples
    sources: tuple[np.ndarray, ...]
    roots: tuple[np.ndarray, ...]
    mults: tuple[np.ndarray, ...]


@lru_cache(maxsize=None)
def stencil(r: int, max_height: int) -> Stencil:
    kappas = enumerate_Q_plus(r, max_height)
    index = {kap: n for n, kap in enumerate(kappas)}
    roots = positive_roots(r)
    root_vecs = np.array([rt.vec for rt in roots], dtype=float)
    sources, rts, mults = [], [], []
    for kap in kappas:
        src, ri, mu = [], [], []
        kv = np.array(kap)
        for a_idx, rt in enumerate(roots):
            av = np.array(rt.vec)
            n = 1
            while True:
                prev = tuple(int(v) for v in kv - n * av)
                if height(prev) < 0:
                    break
                if prev in index:
                    src.append(index[prev])
                    ri.append(a_idx)
                    mu.append(n)
                n += 1
        sources.append(np.array(src, dtype=int))
        rts.append(np.array(ri, dtype=int))
        mults.append(np.array(mu, dtype=float))
    return Stencil(
        kappas=np.array(kappas, dtype=float),
        heights=np.array([height(kp) for kp in kappas]),
        root_vecs=root_vecs,
        root_kinds=tuple(rt.kind for rt in roots),
        sources=tuple(sources),
        roots=tuple(rts),
        mults=tuple(mults),
    )


def coefficient_batch(lams: np.ndarray, k: MultiplicityBC, budget: SeriesBudget) -> np.ndarray:
    """a_kappa for a batch of spectral points; shape (n_kappa, N)."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    N, r = lams.shape
    st = stencil(r, budget.max_height)
    rh = rho(k, r)
    mult = np.array([{"s": k.ks, "m": k.km, "l": k.kl}[kd] for kd in st.root_kinds])
    lam_alpha = st.root_vecs @ lams.T  # (nroots, N)
    root_sq = np.sum(st.root_vecs**2, axis=1)
    rho_alpha = st.root_vecs @ rh
    A = np.zeros((len(st.kappas), N), dtype=complex)
    A[0] = 1.0
    for n in range(1, len(st.kappas)):
        kap = st.kappas[n]
        src = st.sources[n]
        if src.size == 0:
            continue
        ri = st.roots[n]
        const = -rho_alpha[ri] - st.root_vecs[ri] @ kap + st.mults[n] * root_sq[ri]
        w = 2.0 * mult[ri]
        num = np.sum((w * 1.0)[:, None] * (lam_alpha[ri] + const[:, None]) * A[src], axis=0)
        den = 2.0 * (lams @ kap) - kap @ kap
        small = np.abs(den) < budget.resonance_tol
        if np.any(small):
            if np.all(np.abs(num[small]) <= budget.resonance_tol * (1 + np.max(np.abs(A[:n][:, small])))):
                # 0/0 at a resonance: keep the terminating branch
                den = np.where(small, 1.0, den)
                num = np.where(small, 0.0, num)
            else:
                raise Resonance(f"<2 lam - kappa, kappa> vanishes at kappa = {tuple(int(v) for v in kap)}")
        A[n] = num / den
    return A


@lru_cache(maxsize=4096)
def _coefficients_cached(lam: tuple, k: MultiplicityBC, budget: SeriesBudget) -> np.ndarray:
    A = coefficient_batch(np.array([lam]), k, budget)[:, 0]
    A.setflags(write=False)
    return A


def hc_coefficients(lam, k: MultiplicityBC, budget: SeriesBudget | None = None) -> dict[tuple[int, ...], complex]:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    budget = budget or SeriesBudget.default(len(lam))
    A = _coefficients_cached(tuple(complex(v) for v in lam), k, budget)
    st = stencil(len(lam), budget.max_height)
    return {tuple(int(v) for v in kap): complex(a) for kap, a in zip(st.kappas, A)}


def terminating_height(A: np.ndarray, heights: np.ndarray) -> int | None:
    """Largest height carrying a non-negligible coefficient if the series stops early.

    Returns None unless at least the top third of the computed heights vanish.
    """
    mags = np.abs(A)
    if mags.ndim > 1:
        mags = mags.max(axis=1)
    scale = mags.max()
    nonzero = heights[mags > TERMINATION_RTOL * scale]
    last = int(nonzero.max())
    top = int(heights.max())
    if top - last >= max(3, top // 3):
        return last
    return None


# ---------------------------------------------------------------------------
# evaluation


def _check_wall(ts: np.ndarray, margin: float) -> None:
    vals = simple_root_values(ts)
    if np.any(vals < margin):
        raise WallTooClose(f"a simple root value is below the wall margin {margin}")


def _shell_tail(A: np.ndarray, E: np.ndarray, heights: np.ndarray) -> np.ndarray:
    """Geometric-tail estimate from the last shells of |a_kappa e^{-kappa(x)}|."""
    top = int(heights.max())
    absA = np.abs(A)
    absE = np.abs(E)
    shells = []
    for h in range(max(0, top - 3), top + 1):
        sel = heights == h
        shells.append(absA[sel].T @ absE[sel])  # (N, M)
    last = shells[-1]
    q = np.zeros_like(last)
    for a, b in zip(shells[:-1], shells[1:]):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(a > 0, b / a, 0.0)
        q = np.maximum(q, ratio)
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(q < 1, last * q / (1 - q), np.inf)
    tail = np.where(last == 0, 0.0, tail)
    return tail


def phi_batch(
    lams: np.ndarray,
    ts: np.ndarray,
    k: MultiplicityBC,
    budget: SeriesBudget,
    with_tail: bool = False,
    allow_terminating: bool = True,
):
    """Phi at every (lam, x) pair; returns (N, M) values (and tail bounds)."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    ts = np.atleast_2d(np.asarray(ts, dtype=float))
    r = lams.shape[1]
    st = stencil(r, budget.max_height)
    A = coefficient_batch(lams, k, budget)
    near = np.any(simple_root_values(ts) < budget.wall_margin)
    if near:
        stop = terminating_height(A, st.heights) if allow_terminating else None
        if stop is None:
            raise WallTooClose("x is too close to a wall for the series")
        keep = st.heights <= stop
        A = A[keep]
        kappas = st.kappas[keep]
        heights = st.heights[keep]
    else:
        kappas = st.kappas
        heights = st.heights
    E = np.exp(-(kappas @ ts.T))  # (n, M)
    lead = np.exp((lams - rho(k, r)) @ ts.T)  # (N, M)
    vals = lead * (A.T @ E)
    if not with_tail:
        return vals
    if near:
        return vals, np.zeros(vals.shape)
    tail = np.abs(lead) * _shell_tail(A, E, heights)
    return vals, tail


def phi(lam, k: MultiplicityBC, x, budget: SeriesBudget | None = None) -> SeriesValue:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    budget = budget or SeriesBudget.default(len(lam))
    while True:
        vals, tail = phi_batch(lam[None], x[None], k, budget, with_tail=True)
        nxt = budget.deeper(len(lam))
        if tail[0, 0] <= budget.tail_tol * max(1.0, abs(vals[0, 0])) or nxt is None:
            break
        budget = nxt
    n = len(stencil(len(lam), budget.max_height).kappas)
    return SeriesValue(complex(vals[0, 0]), float(tail[0, 0]), n)


def check_generic(lams: np.ndarray, margin: float = GENERIC_MARGIN) -> None:
    """Reject lambda with lam_i or (lam_p +- lam_q)/2 within margin of an integer."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    r = lams.shape[1]
    forms = [lams[:, j] for j in range(r)]
    for p in range(r):
        for q in range(p):
            forms.append(0.5 * (lams[:, p] - lams[:, q]))
            forms.append(0.5 * (lams[:, p] + lams[:, q]))
    for f in forms:
        if np.any(np.abs(f - np.round(f.real)) < margin):
            raise NonGenericSpectral("spectral point is not generic; use F_residual or F_discrete")


def F_batch(lams: np.ndarray, ts: np.ndarray, k: MultiplicityBC, budget: SeriesBudget, check: bool = True) -> np.ndarray:
    """F(lam, k; x) = sum_w c(w lam) Phi(w lam; x) on a (lam, x) grid: (N, M)."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    ts = np.atleast_2d(np.asarray(ts, dtype=float))
    r = lams.shape[1]
    if check:
        check_generic(lams)
    if k.is_zero():
        return _F_k0(lams, ts)
    total = np.zeros((lams.shape[0], ts.shape[0]), dtype=complex)
    for w in enumerate_W(r):
        wl = w.act(lams)
        cw = cf.c_batch("full", wl, k)
        total += cw[:, None] * phi_batch(wl, ts, k, budget, allow_terminating=False)
    return total


def _F_k0(lams, ts):
    r = lams.shape[1]
    W = enumerate_W(r)
    return sum(np.exp(w.act(lams) @ ts.T) for w in W) / len(W)


def _F_with_tail(lam: np.ndarray, ts: np.ndarray, k: MultiplicityBC, budget: SeriesBudget) -> tuple[complex, float]:
    lams = np.array([w.act(lam) for w in enumerate_W(len(lam))])
    cw = cf.c_batch("full", lams, k)
    vals, tails = phi_batch(lams, ts, k, budget, with_tail=True, allow_terminating=False)
    live = cw != 0  # exact zeros of c carry no tail, even where Phi's bound is infinite
    return complex(cw[live] @ vals[live, 0]), float(np.abs(cw[live]) @ tails[live, 0])


def F(lam, k: MultiplicityBC, x, budget: SeriesBudget | None = None) -> complex:
    """F at one (lam, x); the series height doubles until the tail estimate meets tail_tol."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    ts = np.atleast_1d(np.asarray(x, float))[None]
    budget = budget or SeriesBudget.default(len(lam))
    check_generic(lam[None])
    if k.is_zero():
        return complex(_F_k0(lam[None], ts)[0, 0])
    while True:
        val, tail = _F_with_tail(lam, ts, k, budget)
        nxt = budget.deeper(len(lam))
        if tail <= budget.tail_tol * max(1.0, abs(val)) or nxt is None:
            return val
        budget = nxt


def F_Xi_batch(lams: np.ndarray, ts: np.ndarray, k: MultiplicityBC, budget: SeriesBudget) -> np.ndarray:
    """sum over permutations s of c_Xi(s lam) Phi(s lam; x)."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    r = lams.shape[1]
    if r == 1:
        return phi_batch(lams, ts, k, budget)
    total = 0
    for s in enumerate_S(r):
        sl = s.act(lams)
        total = total + cf.c_batch("Xi", sl, k)[:, None] * phi_batch(sl, ts, k, budget)
    return total


def F_Xi(lam, k: MultiplicityBC, x, budget: SeriesBudget | None = None) -> complex:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    budget = budget or SeriesBudget.default(len(lam))
    return complex(F_Xi_batch(lam[None], np.atleast_1d(np.asarray(x, float))[None], k, budget)[0, 0])


def F_via_Xi(lam, k: MultiplicityBC, x, budget: SeriesBudget | None = None) -> complex:
    """F assembled as sum over sign changes w of c^Xi(w lam) F_Xi(w lam; x)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    budget = budget or SeriesBudget.default(len(lam))
    x = np.atleast_1d(np.asarray(x, float))[None]
    total = 0j
    for w in enumerate_W_Xi(len(lam)):
        wl = w.act(lam)[None]
        total += complex(cf.c_batch("upper_Xi", wl, k)[0]) * complex(F_Xi_batch(wl, x, k, budget)[0, 0])
    return total


# ---------------------------------------------------------------------------
# residual subspaces and discrete points


def _phi_at(lam: np.ndarray, ts: np.ndarray, k: MultiplicityBC, budget: SeriesBudget) -> np.ndarray:
    return phi_batch(np.asarray(lam, complex)[None], ts, k, budget)[0]


LIMIT_STEP = 1e-3
LIMIT_LEVELS = 4


def _hits_resonance(lam: np.ndarray, budget: SeriesBudget) -> bool:
    kap = stencil(len(lam), budget.max_height).kappas[1:]
    den = 2.0 * (kap @ np.asarray(lam, complex)) - np.sum(kap * kap, axis=1)
    return bool(np.any(np.abs(den) < budget.resonance_tol))


def _phi_limit(lam, dlam, ts, k: MultiplicityBC, budget: SeriesBudget, dk) -> np.ndarray:
    """Phi at lam, taken as the limit along (lam + e dlam, k + e dk) when lam is resonant.

    At a resonance the recursion is 0/0 and the value depends on the direction of
    approach; polynomial extrapolation in e recovers the limit on the path.
    """
    lam = np.asarray(lam, complex)
    if not _hits_resonance(lam, budget):
        return _phi_at(lam, ts, k, budget)
    dlam = np.asarray(dlam, float)
    steps = LIMIT_STEP * 0.5 ** np.arange(LIMIT_LEVELS)
    table = []
    for e in steps:
        kk = k.shifted(e * dk[0], e * dk[1], e * dk[2])
        table.append(_phi_at(lam + e * dlam, ts, kk, budget))
    # Neville at e = 0
    for m in range(1, LIMIT_LEVELS):
        table = [
            (steps[j + m] * table[j] - steps[j] * table[j + 1]) / (steps[j + m] - steps[j])
            for j in range(LIMIT_LEVELS - m)
        ]
    return table[0]


def F_discrete(xi: Sequence[float], k: MultiplicityBC, x, budget: SeriesBudget | None = None, dk=cf.REG_DIRECTION):
    """F at a point of D_k(B): c(xi) Phi(xi; x); real-valued.

    Accepts one x (returns a float) or an (M, r) array of points.
    """
    xi = np.asarray(xi, dtype=float)
    r = len(xi)
    budget = budget or SeriesBudget.default(r)
    cval = cf.c_regularized("full", xi, [], k, dk=dk)
    if cval.is_pole:
        raise Degenerate("c has a pole at this discrete point")
    ts = np.asarray(x, dtype=float)
    single = ts.ndim == 1
    ts = np.atleast_2d(ts)
    dxi = cf.regularization_shift(r, k, dk)
    vals = cval.value * _phi_limit(xi, dxi, ts, k, budget, dk)
    scale = np.maximum(np.abs(vals), 1e-300)
    if np.any(np.abs(vals.imag) > 1e-10 * scale):
        raise Degenerate("discrete eigenfunction is not real")
    return float(vals.real[0]) if single else vals.real


def _restricted_F_Xi(lam: np.ndarray, i: int, ts: np.ndarray, k: MultiplicityBC, budget: SeriesBudget, dk) -> np.ndarray:
    """F_Xi at lam whose first i coordinates sit on a discrete point (moving with k)."""
    r = len(lam)
    dlam = np.concatenate([cf.regularization_shift(i, k, dk), np.zeros(r - i)])
    if r == 1:
        return _phi_limit(lam, dlam, ts, k, budget, dk)
    g = cf.product_c_tilde_Xi(r, k)
    norm = cf.norm_constant("Xi", k, r)
    total = np.zeros(ts.shape[0], dtype=complex)
    for s in enumerate_S(r):
        sl = s.act(lam)
        cv = g.directional_limit(sl, s.act(dlam), dk)
        if cv.is_pole:
            raise Degenerate("c_Xi has a pole on the residual subspace")
        if cv.value == 0:
            continue
        total += cv.value / norm * _phi_limit(sl, s.act(dlam), ts, k, budget, dk)
    return total


def F_residual(
    i: int,
    xi: Sequence[float],
    lam_cont,
    k: MultiplicityBC,
    x,
    budget: SeriesBudget | None = None,
    dk=cf.REG_DIRECTION,
):
    """F on xi + lam_cont from the restricted sign-change expansion.

    x may be a single point or an (M, r) array; the result matches.
    """
    xi = np.asarray(xi, dtype=float)
    lam_cont = np.atleast_1d(np.asarray(lam_cont, dtype=complex)) if np.size(lam_cont) else np.zeros(0, complex)
    r = i + len(lam_cont)
    budget = budget or SeriesBudget.default(r)
    ts = np.asarray(x, dtype=float)
    single = ts.ndim == 1
    ts = np.atleast_2d(ts)
    if i == 0:
        out = F_batch(lam_cont[None], ts, k, budget)[0]
    elif i == r:
        out = np.asarray(F_discrete(xi, k, ts, budget, dk=dk), dtype=complex)
    else:
        coeffs = cf.sigma_restrict_c_upper_Xi(i, xi, lam_cont, k, dk=dk)
        out = np.zeros(ts.shape[0], dtype=complex)
        for w in enumerate_W_Xi_i(i, r):
            lam = np.concatenate([xi.astype(complex), np.array(w.signs[i:]) * lam_cont])
            out += coeffs[w] * _restricted_F_Xi(lam, i, ts, k, budget, dk)
    return complex(out[0]) if single else out


def F_perturbed(
    xi: Sequence[float], lam_cont, k: MultiplicityBC, x, eps: float, budget: SeriesBudget | None = None, dk=cf.REG_DIRECTION
) -> complex:
    """Full Weyl-group sum at (xi + eps dxi, lam_cont) with multiplicity k + eps dk."""
    xi = np.asarray(xi, dtype=float)
    i = len(xi)
    lam_cont = np.atleast_1d(np.asarray(lam_cont, dtype=complex)) if np.size(lam_cont) else np.zeros(0, complex)
    lam = np.concatenate([xi + eps * cf.regularization_shift(i, k, dk), lam_cont])
    kk = k.shifted(eps * dk[0], eps * dk[1], eps * dk[2])
    budget = budget or SeriesBudget.default(len(lam))
    return F(lam, kk, x, budget)


# ---------------------------------------------------------------------------
# symmetry in k


def k_symmetry_factor(k: MultiplicityBC, ts) -> np.ndarray:
    ts = np.atleast_2d(np.asarray(ts, dtype=float))
    return np.prod(np.cosh(ts), axis=1) ** (1 - 2 * k.kl)


def k_symmetry_check(lam, k: MultiplicityBC, x, budget: SeriesBudget | None = None) -> float:
    """|F(lam, k; x) - prod cosh(t_i)^{1 - 2 k_l} F(lam, k~; x)| relative to |F|."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    budget = budget or SeriesBudget.default(len(lam))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lhs = F(lam, k, x, budget)
    rhs = k_symmetry_factor(k, x)[0] * F(lam, k.tilde(), x, budget)
    return float(abs(lhs - rhs) / max(1.0, abs(lhs)))


def phi_k_symmetry_check(lam, k: MultiplicityBC, x, budget: SeriesBudget | None = None) -> float:
    """|Phi(lam, k) - (delta_{k~} / delta_k)^{1/2} Phi(lam, k~)| relative to |Phi|."""
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    budget = budget or SeriesBudget.default(len(lam))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kt = k.tilde()
    ratio = np.exp(0.5 * (log_weight_delta(kt, x) - log_weight_delta(k, x)))
    lhs = phi(lam, k, x, budget).value
    rhs = complex(ratio) * phi(lam, kt, x, budget).value
    return float(abs(lhs - rhs) / max(1.0, abs(lhs)))


def log_slope(values: np.ndarray, s: np.ndarray) -> float:
    """Least-squares slope of log|values| against s."""
    return float(np.polyfit(s, np.log(np.abs(values)), 1)[0])


__all__ = [
    "SeriesBudget",
    "SeriesValue",
    "hc_coefficients",
    "coefficient_batch",
    "phi",
    "phi_batch",
    "F",
    "F_batch",
    "F_Xi",
    "F_Xi_batch",
    "F_via_Xi",
    "F_discrete",
    "F_residual",
    "F_perturbed",
    "k_symmetry_check",
    "phi_k_symmetry_check",
    "terminating_height",
]

