import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bchf import cfunctions as cf
from bchf import hc_series as hs
from bchf.core_types import (
    MultiplicityBC,
    NonGenericSpectral,
    Resonance,
    WallTooClose,
    enumerate_S,
    enumerate_W,
)
from bchf.rank1_oracle import JacobiParams, jacobi_function

ZERO = MultiplicityBC(0, 0, 0)
CANON1 = MultiplicityBC(3, 0, -2)
CANON2 = MultiplicityBC(3, 0.5, -3)
GENERIC2 = MultiplicityBC(0.8, 0.4, -0.3)


def phi_rank_one(lam, k, t):
    """Harish-Chandra solution in closed form (2F1 at 1/cosh^2)."""
    a, b = k.alpha, k.beta
    r = a + b + 1
    return complex(
        (2 * mpmath.cosh(t)) ** (lam - r) * mpmath.hyp2f1((r - lam) / 2, (a - b + 1 - lam) / 2, 1 - lam, mpmath.cosh(t) ** -2)
    )


def test_k_zero_series_is_exponential():
    lam = np.array([0.4 + 1j, -0.3 + 2j])
    coeffs = hs.hc_coefficients(lam, ZERO)
    assert coeffs[(0, 0)] == 1
    assert all(v == 0 for key, v in coeffs.items() if key != (0, 0))
    x = np.array([0.7, 1.6])
    assert hs.phi(lam, ZERO, x).value == pytest.approx(np.exp(lam @ x), rel=1e-14)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_k_zero_F_is_exponential_average(r):
    rng = np.random.default_rng(10 + r)
    lam = rng.uniform(-1, 1, r) + 1j * rng.uniform(0, 3, r)
    x = np.sort(rng.uniform(0.2, 2.0, r))
    ref = sum(np.exp(w.act(lam) @ x) for w in enumerate_W(r)) / len(enumerate_W(r))
    assert abs(hs.F(lam, ZERO, x) - ref) <= 1e-12 * max(1, abs(ref))


def test_phi_rank_one_example():
    k = MultiplicityBC(2, 0, 0)
    lam, t = 0.3 + 1.1j, 1.2
    assert abs(hs.phi([lam], k, [t]).value - phi_rank_one(lam, k, t)) <= 1e-10


@given(st.floats(0.1, 3.0), st.floats(-0.4, 1.5), st.floats(-1.5, 1.5), st.floats(0.2, 5), st.floats(0.3, 2.5))
@settings(max_examples=30, deadline=None)
def test_F_rank_one_matches_jacobi_function(ks, kl, re, im, t):
    k = MultiplicityBC(ks, 0, kl)
    if not k.in_K1_prime():
        return
    lam = complex(re, im)
    ref = jacobi_function(lam, JacobiParams(k.alpha, k.beta), t)
    assert abs(hs.F([lam], k, [t]) - ref) <= 1e-9 * (1 + abs(ref))


def test_tail_bound_is_reported():
    sv = hs.phi([0.5 + 1j], CANON1, [0.8])
    assert 0 <= sv.tail_bound < 1e-10
    assert sv.terms_used > 1


def test_W_invariance_rank_two():
    lam = np.array([0.37 + 0.8j, -0.21 + 1.9j])
    x = np.array([0.55, 1.4])
    base = hs.F(lam, GENERIC2, x)
    for w in enumerate_W(2):
        assert abs(hs.F(w.act(lam), GENERIC2, x) - base) <= 1e-9 * max(1, abs(base))


def test_k_symmetry():
    assert hs.k_symmetry_check([0.3 + 0.9j], MultiplicityBC(1.2, 0, 0.5), [0.8]) < 1e-14
    assert hs.k_symmetry_check([0.3 + 0.9j], MultiplicityBC(1.2, 0, 0.2), [0.8]) < 1e-10
    assert hs.k_symmetry_check([0.3 + 0.9j, -0.2 + 2.1j], GENERIC2, [0.6, 1.5]) < 1e-8
    assert hs.phi_k_symmetry_check([0.3 + 0.9j, -0.2 + 2.1j], GENERIC2, [0.6, 1.5]) < 1e-10


def test_F_Xi_forms():
    lam = np.array([0.37 + 0.8j, -0.21 + 1.9j])
    x = np.array([0.55, 1.4])
    assert hs.F_Xi([0.3 + 1j], CANON1, [0.9]) == pytest.approx(hs.phi([0.3 + 1j], CANON1, [0.9]).value)
    k0 = MultiplicityBC(0.8, 0.0, -0.3)
    avg = sum(hs.phi(s.act(lam), k0, x).value for s in enumerate_S(2)) / math.factorial(2)
    assert abs(hs.F_Xi(lam, k0, x) - avg) <= 1e-12 * abs(avg)
    full = hs.F(lam, GENERIC2, x)
    assert abs(hs.F_via_Xi(lam, GENERIC2, x) - full) <= 1e-9 * max(1, abs(full))


def test_resonance_detected():
    with pytest.raises(Resonance):
        hs.hc_coefficients([1.0], MultiplicityBC(1.3, 0, 0.4))


def test_wall_and_genericity_errors():
    with pytest.raises(WallTooClose):
        hs.phi([0.3 + 1j], CANON1, [0.01])
    with pytest.raises(NonGenericSpectral):
        hs.F([2.0], CANON1, [1.0])
    with pytest.raises(NonGenericSpectral):
        hs.F([0.5 + 1j, 0.5 + 1j], GENERIC2, [0.5, 1.0])


def test_F_discrete_rank_one():
    k = MultiplicityBC(5, 0, -4)
    t = np.linspace(0.05, 4.0, 9)[:, None]
    p = JacobiParams(k.alpha, k.beta)
    for xi in (-3.0, -1.0):
        vals = hs.F_discrete([xi], k, t)
        assert np.all(np.isreal(vals))
        ref = np.array([jacobi_function(xi, p, s) for s in t[:, 0]])
        assert np.allclose(vals, ref, rtol=1e-10, atol=1e-12)
    # grows like e^{(xi - rho) t} with xi - rho = 2
    s = np.linspace(6, 10, 5)
    assert hs.log_slope(hs.F_discrete([-1.0], k, s[:, None]), s) == pytest.approx(2.0, rel=0.02)


def test_F_discrete_matches_perturbed_sum():
    x = np.array([0.9])
    val = hs.F_discrete([-1.0], CANON1, x)
    a, b = (hs.F_perturbed([-1.0], [], CANON1, x, e) for e in (1e-4, 1e-5))
    extrap = (1e-4 * b - 1e-5 * a) / (1e-4 - 1e-5)
    assert abs(complex(np.atleast_1d(val)[0]) - extrap) <= 1e-5


def test_F_discrete_canonical_rank_two_is_constant():
    x = np.array([[0.3, 0.9], [1.2, 2.5], [0.02, 0.05]])
    assert np.allclose(hs.F_discrete([-3.0, -2.0], CANON2, x), 1.0, atol=1e-12)


@pytest.mark.parametrize("nu", [0.5, 1.5])
def test_F_residual_matches_perturbed_sum(nu):
    x = np.array([0.6, 1.5])
    val = hs.F_residual(1, [-3.0], [1j * nu], CANON2, x)
    eps = (2e-4, 1e-4, 5e-5)
    vals = [hs.F_perturbed([-3.0], [1j * nu], CANON2, x, e) for e in eps]
    # quadratic extrapolation to e = 0
    extrap = np.polyval(np.polyfit(eps, vals, 2), 0.0)
    assert abs(val - extrap) <= 1e-5 * max(1, abs(val))


def test_F_residual_endpoints():
    x = np.array([0.6, 1.5])
    lam = np.array([0.4j, 1.3j])
    assert hs.F_residual(0, [], lam, CANON2, x) == pytest.approx(hs.F(lam, CANON2, x), rel=1e-12)
    assert hs.F_residual(2, [-3.0, -2.0], [], CANON2, x) == pytest.approx(complex(np.atleast_1d(hs.F_discrete([-3.0, -2.0], CANON2, x))[0]), rel=1e-8)


def test_F_residual_regular_fiber_uses_plain_sum():
    # xi = -1 (not a resonance point for generic continuous part)
    x = np.array([0.6, 1.5])
    v = hs.F_residual(1, [-1.0], [0.8j], CANON2, x)
    assert np.isfinite(v)
    assert abs(v.imag) <= 1e-10 * max(1, abs(v))


def test_budget_defaults():
    assert hs.SeriesBudget.default(1).max_height > hs.SeriesBudget.default(3).max_height
    cf_ = cf.REG_DIRECTION
    assert len(cf_) == 3


@pytest.mark.parametrize("dk", [(1.0, 1.0, 1.0), (0.7, 0.2, 1.3)])
def test_regularisation_direction_independent(dk):
    x = np.array([[0.6, 1.5], [1.0, 2.2]])
    base = hs.F_residual(1, [-3.0], [0.7j], CANON2, x)
    assert np.allclose(hs.F_residual(1, [-3.0], [0.7j], CANON2, x, dk=dk), base, rtol=1e-10)
    km0 = MultiplicityBC(3, 0, -3)
    assert np.allclose(hs.F_discrete([-3, -1], km0, x, dk=dk), hs.F_discrete([-3, -1], km0, x), rtol=1e-10)


def test_discrete_eigenfunction_at_km_zero_factorises():
    # at k_m = 0 the rank-two function is the symmetrised product of rank-one ones
    k = MultiplicityBC(3, 0, -3)
    x = np.array([0.4, 0.9])
    f1 = {xi: hs.F_discrete([xi], k, [[x[0]], [x[1]]]) for xi in (-3.0, -1.0)}
    ref = 0.5 * (f1[-3.0][0] * f1[-1.0][1] + f1[-1.0][0] * f1[-3.0][1])
    assert hs.F_discrete([-3, -1], k, x) == pytest.approx(ref, rel=1e-9)
