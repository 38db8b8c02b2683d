import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bchf import cfunctions as cf
from bchf import spectra as sp
from bchf.core_types import InvalidRegime, MultiplicityBC, NotInSpectrum
from bchf.rank1_oracle import JacobiParams

CANON1 = MultiplicityBC(3, 0, -2)
CANON2 = MultiplicityBC(3, 0.5, -3)
KM_ZERO = MultiplicityBC(3, 0, -3)


def xis(points):
    return [p.xi for p in points]


def rank_one_mass(xi, k):
    """Inverse squared L2 norm of the decaying rank-one eigenfunction, by mpmath quadrature."""
    p = JacobiParams.from_k(k.ks, k.kl)
    a, b = p.alpha, p.beta
    rr = a + b + 1

    def phi(t):
        return (2 * mpmath.cosh(t)) ** (xi - rr) * mpmath.hyp2f1((rr - xi) / 2, (a - b + 1 - xi) / 2, 1 - xi, mpmath.cosh(t) ** -2)

    def integrand(t):
        return phi(t) ** 2 * (2 * mpmath.sinh(t)) ** (2 * a + 1) * (2 * mpmath.cosh(t)) ** (2 * b + 1)

    # the spherical function is c(xi) phi
    cval = cf.c_regularized("full", [xi], [], k).value
    norm = mpmath.quad(integrand, [0, 1, 4, mpmath.inf])
    return float(1 / (abs(cval) ** 2 * norm))


def test_no_discrete_spectrum_for_positive_k():
    k = MultiplicityBC(1, 0, 0)
    assert sp.enumerate_D(1, k) == []
    assert sp.enumerate_D(2, k) == []
    assert xis(sp.enumerate_D(0, k)) == [()]


def test_canonical_discrete_sets():
    assert xis(sp.enumerate_D(1, CANON1)) == [(-1.0,)]
    assert xis(sp.enumerate_D(1, CANON2)) == [(-3.0,), (-1.0,)]
    assert xis(sp.enumerate_D(2, CANON2)) == [(-3.0, -2.0)]
    pts = sp.enumerate_D(2, KM_ZERO)
    assert xis(pts) == [(-3.0, -3.0), (-3.0, -1.0), (-1.0, -1.0)]
    assert [p.stabilizer for p in pts] == [2, 1, 2]


def test_membership():
    assert sp.is_in_D(2, [-3, -2], CANON2)
    assert not sp.is_in_D(2, [-3, -1], CANON2)
    assert not sp.is_in_D(1, [-3, -2], CANON2)
    with pytest.raises(NotInSpectrum):
        sp.density_d(1, [-2.0], CANON2)


def test_frozen_densities():
    # values checked against direct quadrature of the squared eigenfunctions
    assert sp.density_d(1, [-1], CANON1) == pytest.approx(12, rel=1e-10)
    assert sp.density_d(1, [-3], CANON2) == pytest.approx(120, rel=1e-10)
    assert sp.density_d(1, [-1], CANON2) == pytest.approx(24, rel=1e-10)
    assert sp.density_d(2, [-3, -2], CANON2) == pytest.approx(20480, rel=1e-10)
    k = MultiplicityBC(5, 0, -4)
    assert sp.density_d(1, [-3], k) == pytest.approx(840, rel=1e-10)
    assert sp.density_d(1, [-1], k) == pytest.approx(360, rel=1e-10)


@pytest.mark.parametrize("k,xi", [(CANON1, -1.0), (CANON2, -3.0), (CANON2, -1.0), (MultiplicityBC(5, 0, -4), -3.0)])
def test_rank_one_density_matches_quadrature(k, xi):
    assert sp.density_d(1, [xi], k) == pytest.approx(rank_one_mass(xi, k), rel=1e-8)


def test_empty_density_is_one():
    assert sp.density_d(0, [], CANON2) == 1.0


def test_km_zero_limit_is_continuous():
    near = MultiplicityBC(3, 1e-7, -3)
    for (xi0, d0), xi_near in zip(
        [((-3, -3), 28800), ((-3, -1), 11520), ((-1, -1), 1152)], xis(sp.enumerate_D(2, near))
    ):
        assert sp.density_d(2, xi0, KM_ZERO) == pytest.approx(d0, rel=1e-10)
        assert sp.density_d(2, xi_near, near) == pytest.approx(d0, rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(
    ks=st.floats(1.0, 6.0),
    kl=st.floats(-4.0, -0.6),
    km=st.floats(0.0, 1.5),
)
def test_densities_are_positive(ks, kl, km):
    k = MultiplicityBC(ks, km, kl)
    if ks + kl <= -0.5 + 1e-3:
        return
    for i in (1, 2):
        for p in sp.enumerate_D(i, k):
            # skip points sitting within rounding of a Gamma pole collision
            if min(abs(v - round(v)) for v in p.xi) < 1e-6 and not np.allclose(p.xi, np.round(p.xi)):
                continue
            assert sp.density_d(i, p.xi, k, r=2) > 0


@pytest.mark.parametrize(
    "i,xi,k",
    [(1, [-1], CANON1), (1, [-3], CANON2), (1, [-1], CANON2), (2, [-3, -2], CANON2), (2, [-3, -1], KM_ZERO)],
)
def test_residues_reproduce_densities(i, xi, k):
    numeric, closed, rel = sp.residue_verify_dtheta(i, xi, k)
    assert rel < 1e-8


def test_residue_at_generic_k():
    k = MultiplicityBC(2.3, 0.7, -1.9)
    p = sp.enumerate_D(2, k)[0]
    assert sp.residue_verify_dtheta(2, p.xi, k)[2] < 1e-8
    assert not sp.colliding_poles(1, np.array(p.xi[:1]), k)
    assert sp.residue_verify_dtheta(1, p.xi[:1], k, regularize=False)[2] < 1e-8


def test_sign_canary():
    _, _, rel = sp.residue_verify_dtheta(1, [-3], CANON2, sign=1)
    assert rel == pytest.approx(2.0, abs=1e-6)


def test_richardson_is_exact_on_polynomials():
    h = [0.4, 0.2, 0.1, 0.05]
    assert sp.richardson(h, [3 + 2 * x - x**3 for x in h]) == pytest.approx(3, abs=1e-12)


def test_measure_components():
    comps = sp.assemble_measure(CANON2, 2)
    assert [(c.i, c.xi) for c in comps] == [(0, ()), (1, (-3.0,)), (1, (-1.0,)), (2, (-3.0, -2.0))]
    assert [c.weyl_factor for c in comps] == [1 / 8, 1 / 2, 1 / 2, 1.0]
    assert len(sp.assemble_measure(MultiplicityBC(1, 0.5, 0), 2)) == 1
    nu = np.array([[0.7]])
    assert comps[1].fiber_density(nu)[0] > 0


def test_weyl_factor():
    assert sp.weyl_factor(0, 3) == 1 / (8 * math.factorial(3))
    assert sp.weyl_factor(3, 3) == 1.0


def test_invalid_regime():
    with pytest.raises(InvalidRegime):
        sp.enumerate_D(1, MultiplicityBC(1, -0.2, 0))
    with pytest.raises(InvalidRegime):
        sp.assemble_measure(MultiplicityBC(0.1, 0, -1.0), 2)


def test_density_with_underflowing_km():
    # coordinates coincide in floating point; the vanishing pair factor must cancel Gamma(k_m)
    k = MultiplicityBC(1, 1e-170, -1)
    (p,) = sp.enumerate_D(2, k)
    assert sp.density_d(2, p.xi, k) == pytest.approx(sp.density_d(2, p.xi, MultiplicityBC(1, 0, -1)), rel=1e-10)
