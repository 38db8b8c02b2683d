"""Hypergeometric Fourier transform, its two inversion formulas and the L^2 checks.

Spatial integrals run over the positive chamber t_1 < ... < t_r (t_i > 0).
Test functions are W-invariant bumps whose chamber part is a smooth bump
around a point x0 well inside the chamber, so the Harish-Chandra series
converges on the whole support.

Spectral integrals use Gauss-Legendre panels.  On i a* the integrands of the
final form are W-invariant, so only the quadrant nu >= 0 is integrated; the
two axes use different panel orders so no node lands on nu_p = nu_q.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cfunctions as cf
from . import hc_series as hs
from . import spectra as sp
from .core_types import (
    ContourThroughPole,
    MultiplicityBC,
    log_weight_delta,
    simple_root_values,
    weyl_order,
)

CHUNK = 1024


def threads() -> int:
    try:
        return max(1, int(os.environ.get("BCHF_THREADS", "1")))
    except ValueError:
        return 1


def _map_chunks(fn: Callable[[np.ndarray], np.ndarray], items: np.ndarray, chunk: int = CHUNK) -> np.ndarray:
    """Apply fn to row chunks and concatenate in order."""
    pieces = [items[s : s + chunk] for s in range(0, len(items), chunk)]
    n = threads()
    if n > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            out = list(ex.map(fn, pieces))
    else:
        out = [fn(p) for p in pieces]
    return np.concatenate(out, axis=0)


# ---------------------------------------------------------------------------
# quadrature rules


def gl_panels(a: float, b: float, width: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [a, b] with panels of at most the given width."""
    m = max(1, int(math.ceil((b - a) / width - 1e-12)))
    u, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(a, b, m + 1)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (hi - lo) * u + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def gj_first_panel(b: float, exponent: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Jacobi rule on [0, b] for the weight s^exponent (weight included)."""
    from scipy import special

    u, w = special.roots_jacobi(n, 0.0, exponent)
    s = 0.5 * b * (1 + u)
    return s, w * (0.5 * b) ** (exponent + 1)


def _tensor(rules: Sequence[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return nodes, weights


@dataclass
class SpatialGrid:
    """Nodes in the chamber with weights that already include delta_k."""

    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class SpectralGrid:
    cutoff: float
    panel: float = 1.0
    order: int = 8

    @classmethod
    def default(cls, r: int) -> "SpectralGrid":
        return cls(cutoff=25.0 if r == 1 else 12.0)


@dataclass
class QuadratureGrid:
    spatial: SpatialGrid
    spectral: SpectralGrid


def box_grid(k: MultiplicityBC, center: Sequence[float], half: float, panels: int = 4, order: int = 10) -> SpatialGrid:
    """Tensor Gauss-Legendre on the box center +- half (must lie inside the chamber)."""
    center = np.asarray(center, dtype=float)
    rules = [gl_panels(c - half, c + half, 2 * half / panels, order) for c in center]
    nodes, w = _tensor(rules)
    if np.any(simple_root_values(nodes) <= 0):
        raise ValueError("box leaves the positive chamber")
    return SpatialGrid(nodes, w * np.exp(log_weight_delta(k, nodes)))


def chamber_grid(k: MultiplicityBC, r: int, cutoff: float, panel: float = 0.5, order: int = 16) -> SpatialGrid:
    """Rule for int over {0 < t_1 < ... < t_r < ...} truncated at cutoff in each gap.

    Coordinates: s_1 = t_1 and u_j = t_{j+1} - t_j.  The first panel of s_1
    carries Gauss-Jacobi weights for the (2 alpha + 1) wall exponent and the
    first panel of each u_j those for 2 k_m.
    """
    e_short = 2 * (k.ks + k.kl)
    e_med = 2 * k.km
    rules = []
    exps = [e_short] + [e_med] * (r - 1)
    for e in exps:
        s0, w0 = gj_first_panel(panel, e, order)
        s1, w1 = gl_panels(panel, cutoff, panel, order)
        flag = np.concatenate([np.ones_like(s0), np.zeros_like(s1)])
        rules.append((np.concatenate([s0, s1]), np.concatenate([w0, w1]), flag, e))
    grids = np.meshgrid(*[rl[0] for rl in rules], indexing="ij")
    g = np.stack([gr.ravel() for gr in grids], axis=1)
    wts = np.ones(g.shape[0])
    log_div = np.zeros(g.shape[0])
    for j, rl in enumerate(rules):
        wg = np.meshgrid(*[(rl2[1] if jj == j else np.ones_like(rl2[0])) for jj, rl2 in enumerate(rules)], indexing="ij")[j]
        fg = np.meshgrid(*[(rl2[2] if jj == j else np.ones_like(rl2[0])) for jj, rl2 in enumerate(rules)], indexing="ij")[j]
        wts *= wg.ravel()
        log_div += np.where(fg.ravel() > 0, rl[3] * np.log(g[:, j]), 0.0)
    ts = np.cumsum(g, axis=1)
    w = wts * np.exp(log_weight_delta(k, ts) - log_div)
    return SpatialGrid(ts, w)


def quadrant_rule(dim: int, cutoff: float, panel: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule on [0, cutoff]^dim; axis j uses order + j nodes per panel."""
    return _tensor([gl_panels(0.0, cutoff, panel, order + j) for j in range(dim)])


def full_rule(dim: int, cutoff: float, panel: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    return _tensor([gl_panels(-cutoff, cutoff, panel, order + j) for j in range(dim)])


# ---------------------------------------------------------------------------
# test functions


def _smooth_cutoff(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    inside = u < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class TestFunction:
    """W-invariant function given by its restriction to the chamber.

    kind "bump": Gaussian of width `width` times a C^infinity cutoff of radius
    `radius` around `center`; "indicator": the ball of that radius.
    """

    kind: str
    center: tuple[float, ...]
    radius: float
    width: float = 1.0

    __test__ = False

    @property
    def support_radius(self) -> float:
        return float(np.linalg.norm(self.center) + self.radius)

    def __call__(self, ts: np.ndarray) -> np.ndarray:
        ts = np.atleast_2d(np.asarray(ts, dtype=float))
        d = np.linalg.norm(ts - np.asarray(self.center), axis=1)
        if self.kind == "bump":
            return np.exp(-0.5 * (d / self.width) ** 2) * _smooth_cutoff(d / self.radius)
        if self.kind == "indicator":
            return (d < self.radius).astype(float)
        if self.kind == "zero":
            return np.zeros(len(d))
        raise ValueError(self.kind)

    def grid(self, k: MultiplicityBC, panels: int = 4, order: int = 10) -> SpatialGrid:
        return box_grid(k, self.center, self.radius, panels, order)


def chamber_bump(center: Sequence[float], radius: float, width: float) -> TestFunction:
    return TestFunction("bump", tuple(float(c) for c in center), float(radius), float(width))


@dataclass(frozen=True)
class GaussianSpectral:
    """phi(lam) = exp(c_g sum lam_j^2): entire, W-invariant, Gaussian decay on vertical strips."""

    c_g: float

    def __call__(self, lams: np.ndarray, component=None) -> np.ndarray:
        lams = np.atleast_2d(np.asarray(lams, dtype=complex))
        return np.exp(self.c_g * np.sum(lams**2, axis=1))


# ---------------------------------------------------------------------------
# forward transform


def forward(
    f: TestFunction,
    lams: np.ndarray,
    k: MultiplicityBC,
    grid: SpatialGrid | None = None,
    budget: hs.SeriesBudget | None = None,
) -> np.ndarray:
    """int_{a_+} f F(lam) delta_k dx at generic spectral points (N, r)."""
    lams = np.atleast_2d(np.asarray(lams, dtype=complex))
    r = lams.shape[1]
    budget = budget or hs.SeriesBudget.default(r)
    grid = grid or f.grid(k)
    fw = f(grid.nodes) * grid.weights
    keep = fw != 0
    ts, fw = grid.nodes[keep], fw[keep]
    if ts.shape[0] == 0:
        return np.zeros(lams.shape[0], dtype=complex)
    return _map_chunks(lambda chunk: hs.F_batch(chunk, ts, k, budget) @ fw, lams, chunk=256)


def forward_residual(
    f: TestFunction,
    i: int,
    xi: Sequence[float],
    nus: np.ndarray,
    k: MultiplicityBC,
    grid: SpatialGrid | None = None,
    budget: hs.SeriesBudget | None = None,
) -> np.ndarray:
    """Forward transform on xi + i nu for nu of shape (N, r - i)."""
    xi = np.asarray(xi, dtype=float)
    r = i + (np.atleast_2d(nus).shape[1] if np.size(nus) else 0)
    budget = budget or hs.SeriesBudget.default(r)
    grid = grid or f.grid(k)
    fw = f(grid.nodes) * grid.weights
    keep = fw != 0
    ts, fw = grid.nodes[keep], fw[keep]
    if i == r:
        return np.array([np.dot(hs.F_discrete(xi, k, ts, budget), fw)], dtype=complex)
    nus = np.atleast_2d(np.asarray(nus, dtype=float))
    return np.array([np.dot(hs.F_residual(i, xi, 1j * nu, k, ts, budget), fw) for nu in nus])


@dataclass
class ForwardImage:
    """phi = F_k f, evaluated on whichever spectral component is asked for."""

    f: TestFunction
    k: MultiplicityBC
    grid: SpatialGrid
    budget: hs.SeriesBudget
    cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, lams: np.ndarray, component=None) -> np.ndarray:
        lams = np.atleast_2d(np.asarray(lams, dtype=complex))
        key = (component, lams.tobytes())
        if key in self.cache:
            return self.cache[key]
        if component is None or component[0] == 0:
            out = forward(self.f, lams, self.k, self.grid, self.budget)
        else:
            i, xi = component
            out = forward_residual(self.f, i, xi, lams[:, i:].imag, self.k, self.grid, self.budget)
        self.cache[key] = out
        return out


# ---------------------------------------------------------------------------
# inversion


@dataclass
class InverseResult:
    values: np.ndarray
    tail: float
    components: dict = field(default_factory=dict)


def check_contour(eta: Sequence[float], k: MultiplicityBC) -> None:
    """eta must lie in -Cl(a_+^*) and keep c(-lam)^{-1} regular on the line."""
    eta = np.asarray(eta, dtype=float)
    r = len(eta)
    if eta[0] > 0 or np.any(np.diff(eta) > 0):
        raise ContourThroughPole("eta must satisfy 0 >= eta_1 >= eta_2 >= ...")
    g = cf.product_c_tilde(r, k)
    for fct in g.factors:
        if fct.exp != -1:
            continue
        re = float(np.dot(fct.coef, -eta) + fct.const)
        if re <= 1e-3 and abs(re - round(re)) < 1e-3:
            raise ContourThroughPole("the contour meets a pole of c(-lam)^{-1}")


def inverse_first_form(
    phi_fn,
    xs: np.ndarray,
    k: MultiplicityBC,
    eta: Sequence[float],
    grid: SpectralGrid | None = None,
    budget: hs.SeriesBudget | None = None,
) -> InverseResult:
    """int_{eta + i a*} phi(lam) Phi(lam; x) c(-lam)^{-1} dmu(lam) at x in xs."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    eta = np.asarray(eta, dtype=float)
    r = len(eta)
    grid = grid or SpectralGrid.default(r)
    budget = budget or hs.SeriesBudget.default(r)
    check_contour(eta, k)
    nus, w = full_rule(r, grid.cutoff, grid.panel, grid.order)
    lams = eta[None, :] + 1j * nus

    def chunk_fn(idx: np.ndarray) -> np.ndarray:
        lam = lams[idx]
        inv_c = np.exp(-cf.log_c_batch("full", -lam, k))
        vals = hs.phi_batch(lam, xs, k, budget)
        return (phi_fn(lam)[:, None] * inv_c[:, None] * vals) * w[idx][:, None]

    contrib = _map_chunks(chunk_fn, np.arange(len(lams)))
    scale = (2 * np.pi) ** (-r)
    edge = np.max(np.abs(nus), axis=1) > grid.cutoff - grid.panel
    return InverseResult(scale * contrib.sum(axis=0), float(scale * np.abs(contrib[edge]).sum()))


def _continuous_component(phi_fn, xs, k, r, grid, budget) -> tuple[np.ndarray, float]:
    nus, w = quadrant_rule(r, grid.cutoff, grid.panel, grid.order)
    lams = 1j * nus

    def chunk_fn(idx):
        lam = lams[idx]
        dens = np.exp(-2 * cf.log_c_batch("full", lam, k).real)
        vals = hs.F_batch(lam, xs, k, budget)
        return phi_fn(lam, (0, ()))[:, None] * dens[:, None] * vals * w[idx][:, None]

    contrib = _map_chunks(chunk_fn, np.arange(len(lams)), chunk=256)
    # quadrant -> all of R^r, then the 1/|W| weight and dmu
    scale = 2**r / weyl_order(r) / (2 * np.pi) ** r
    edge = np.max(nus, axis=1) > grid.cutoff - grid.panel
    return scale * contrib.sum(axis=0), float(scale * np.abs(contrib[edge]).sum())


def _fiber_component(phi_fn, xs, k, r, comp: sp.SpectralComponentMeasure, grid, budget) -> tuple[np.ndarray, float]:
    i, xi = comp.i, np.asarray(comp.xi, dtype=float)
    if i == r:
        lam = xi[None].astype(complex)
        val = phi_fn(lam, (i, comp.xi))[0] * hs.F_discrete(xi, k, xs, budget)
        return comp.weyl_factor * comp.density_const * np.asarray(val, dtype=complex), 0.0
    nus, w = quadrant_rule(r - i, grid.cutoff, grid.panel, grid.order)
    lams = np.concatenate([np.broadcast_to(xi, (len(nus), i)).astype(complex), 1j * nus], axis=1)
    phis = phi_fn(lams, (i, comp.xi))
    dens = comp.fiber_density(nus)
    contrib = np.zeros((len(nus), xs.shape[0]), dtype=complex)
    for n in range(len(nus)):
        contrib[n] = phis[n] * dens[n] * w[n] * hs.F_residual(i, xi, 1j * nus[n], k, xs, budget)
    scale = comp.weyl_factor * comp.density_const * 2 ** (r - i) / (2 * np.pi) ** (r - i)
    edge = np.max(nus, axis=1) > grid.cutoff - grid.panel
    return scale * contrib.sum(axis=0), float(scale * np.abs(contrib[edge]).sum())


def inverse_final_form(
    phi_fn,
    xs: np.ndarray,
    k: MultiplicityBC,
    grid: SpectralGrid | None = None,
    budget: hs.SeriesBudget | None = None,
    fiber_grid: SpectralGrid | None = None,
) -> InverseResult:
    """Sum over spectral components of their weighted fiber integrals of phi F."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    r = xs.shape[1]
    grid = grid or SpectralGrid.default(r)
    fiber_grid = fiber_grid or grid
    budget = budget or hs.SeriesBudget.default(r)
    total = np.zeros(xs.shape[0], dtype=complex)
    tail = 0.0
    parts = {}
    for comp in sp.assemble_measure(k, r):
        if comp.i == 0:
            val, t = _continuous_component(phi_fn, xs, k, r, grid, budget)
        else:
            val, t = _fiber_component(phi_fn, xs, k, r, comp, fiber_grid, budget)
        parts[(comp.i, comp.xi)] = val
        total += val
        tail += t
    return InverseResult(total, tail, parts)


# ---------------------------------------------------------------------------
# checks


def plancherel_check(
    f: TestFunction,
    k: MultiplicityBC,
    grid: SpectralGrid | None = None,
    spatial: SpatialGrid | None = None,
    budget: hs.SeriesBudget | None = None,
    image: ForwardImage | None = None,
) -> tuple[float, float, float, dict]:
    """lhs = int_{a_+} |f|^2 delta; rhs = sum of |F_k f|^2 against each spectral component."""
    r = len(f.center)
    grid = grid or SpectralGrid.default(r)
    budget = budget or hs.SeriesBudget.default(r)
    spatial = spatial or f.grid(k)
    fv = f(spatial.nodes)
    lhs = float(np.sum(fv**2 * spatial.weights))
    if lhs == 0:
        return 0.0, 0.0, 0.0, {}
    image = image or ForwardImage(f, k, spatial, budget)
    parts = {}
    for comp in sp.assemble_measure(k, r):
        i = comp.i
        if i == r:
            val = comp.weyl_factor * comp.density_const * abs(image(np.array([comp.xi], complex), (i, comp.xi))[0]) ** 2
        else:
            nus, w = quadrant_rule(r - i, grid.cutoff, grid.panel, grid.order)
            if i == 0:
                lams = 1j * nus
                dens = np.exp(-2 * cf.log_c_batch("full", lams, k).real)
                vals = image(lams, (0, ()))
                scale = 2**r / weyl_order(r) / (2 * np.pi) ** r
            else:
                lams = np.concatenate([np.broadcast_to(comp.xi, (len(nus), i)).astype(complex), 1j * nus], axis=1)
                dens = comp.fiber_density(nus)
                vals = image(lams, (i, comp.xi))
                scale = comp.weyl_factor * comp.density_const * 2 ** (r - i) / (2 * np.pi) ** (r - i)
            val = scale * float(np.sum(np.abs(vals) ** 2 * dens * w))
        parts[(i, comp.xi)] = val
    rhs = float(sum(parts.values()))
    return lhs, rhs, abs(lhs - rhs) / abs(lhs), parts


def l2_discrete_check(
    lam: Sequence[float],
    mu: Sequence[float],
    k: MultiplicityBC,
    cutoff: float | None = None,
    panel: float = 0.5,
    order: int = 16,
    budget: hs.SeriesBudget | None = None,
) -> float:
    """(1/|W|) int_a F(lam) F(mu) delta_k = int_{a_+} F(lam) F(mu) delta_k."""
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = len(lam)
    budget = budget or hs.SeriesBudget.default(r)
    if cutoff is None:
        # F(lam) F(mu) delta decays like e^{(lam + mu)(x)}; the gap u_j
        # carries the tail sum of lam + mu.  Go to e^{-40}.
        rate = -np.max(np.cumsum((lam + mu)[::-1]))
        if rate <= 0:
            raise ValueError("F(lam) F(mu) delta_k is not integrable")
        cutoff = 40.0 / rate
    grid = chamber_grid(k, r, cutoff, panel, order)
    fl = hs.F_discrete(lam, k, grid.nodes, budget)
    fm = fl if np.array_equal(lam, mu) else hs.F_discrete(mu, k, grid.nodes, budget)
    return float(np.sum(fl * fm * grid.weights))


def paley_wiener_probe(
    f: TestFunction,
    k: MultiplicityBC,
    n: int,
    cutoffs: Sequence[float] = (10.0, 20.0, 30.0),
    real_parts: Sequence[float] = (-1.3, -0.4, 0.7),
    step: float = 0.25,
    grid: SpatialGrid | None = None,
) -> list[float]:
    """max of (1 + |lam|)^n e^{-R |Re lam|} |F_k f(lam)| over samples up to each cutoff (rank 1)."""
    R = f.support_radius
    top = max(cutoffs)
    nus = np.arange(0.0, top + 1e-12, step)
    lams = np.array([[a + 1j * v] for a in real_parts for v in nus])
    vals = forward(f, lams, k, grid)
    stat = (1 + np.abs(lams[:, 0])) ** n * np.exp(-R * np.abs(lams[:, 0].real)) * np.abs(vals)
    im = lams[:, 0].imag
    return [float(np.max(stat[im <= c + 1e-12])) for c in cutoffs]


def f_values(f: TestFunction, xs: np.ndarray) -> np.ndarray:
    return f(np.atleast_2d(xs))


__all__ = [
    "TestFunction",
    "GaussianSpectral",
    "ForwardImage",
    "SpatialGrid",
    "SpectralGrid",
    "QuadratureGrid",
    "chamber_bump",
    "box_grid",
    "chamber_grid",
    "forward",
    "forward_residual",
    "inverse_first_form",
    "inverse_final_form",
    "plancherel_check",
    "l2_discrete_check",
    "paley_wiener_probe",
]

