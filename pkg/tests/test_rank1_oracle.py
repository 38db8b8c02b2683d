
import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bchf.rank1_oracle import (
    JacobiParams,
    ParameterPole,
    contiguous_residual,
    gauss_2f1,
    jacobi_function,
    jacobi_transform_reference,
    jacobi_weight,
)


@pytest.mark.parametrize(
    "a,b,c,z",
    [
        (0.5, 1.5, 2.0, -0.3),
        (1 + 2j, 1 - 2j, 1.5, -0.49),
        (1 + 2j, 1 - 2j, 1.5, -0.51),
        (0.25 + 5j, 0.25 - 5j, 0.7, -30.0),
        (-2.0, 3.5, 1.25, -500.0),
        (2.0, 0.5, 3.0, -1e4),
    ],
)
def test_2f1_against_mpmath(a, b, c, z):
    ref = complex(mpmath.hyp2f1(a, b, c, z))
    assert abs(gauss_2f1(a, b, c, z) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_2f1_parameter_pole():
    with pytest.raises(ParameterPole):
        gauss_2f1(1.0, 1.0, -2.0, -0.1)
    with pytest.raises(ValueError):
        gauss_2f1(1.0, 1.0, 2.0, 0.5)


@given(
    st.floats(-2, 2), st.floats(-6, 6), st.floats(0.2, 3.0), st.floats(-20.0, -0.01)
)
@settings(max_examples=50, deadline=None)
def test_contiguous_relation(re, im, c, z):
    a = 0.5 * (complex(re, im) + 1.3)
    b = 0.5 * (-complex(re, im) + 1.3)
    assert contiguous_residual(a, b, c + 1.0, z) < 1e-10


def test_jacobi_function_basics():
    p = JacobiParams.from_k(3, -2)
    assert (p.alpha, p.beta) == (0.5, -2.5)
    assert p.rho == pytest.approx(-1.0)
    # value 1 at the origin, and lam -> -lam symmetry
    assert jacobi_function(1.3j, p, 0.0) == pytest.approx(1.0)
    assert jacobi_function(0.7 + 2j, p, 1.1) == pytest.approx(jacobi_function(-0.7 - 2j, p, 1.1), rel=1e-12)
    # lam = rho gives the constant function (the first parameter vanishes)
    assert jacobi_function(p.rho, p, 2.3) == pytest.approx(1.0)


def test_jacobi_weight():
    p = JacobiParams(0.5, -2.5)
    t = np.array([0.3, 1.0])
    assert np.allclose(jacobi_weight(p, t), (2 * np.sinh(t)) ** 2 * (2 * np.cosh(t)) ** -4)


def test_transform_reference_of_constant():
    # F(rho) = 1 so the transform of the indicator of [0, T] at rho is int_0^T delta
    p = JacobiParams.from_k(3, -2)
    T = 2.0
    val = jacobi_transform_reference(lambda t: np.ones_like(t), p.rho, p, T)
    ref = mpmath.quad(lambda t: (2 * mpmath.sinh(t)) ** 2 * (2 * mpmath.cosh(t)) ** -4, [0, T])
    assert val == pytest.approx(float(ref), rel=1e-10)


def test_transform_reference_singular_endpoint():
    # alpha = -0.3 gives an integrable t^{-0.6} singularity at 0
    p = JacobiParams(-0.3, 0.2)
    val = jacobi_transform_reference(lambda t: np.exp(-t), 0.4j, p, 1.5)
    ref = mpmath.quad(
        lambda t: mpmath.exp(-t) * mpmath.hyp2f1(0.5 * (0.4j + p.rho), 0.5 * (-0.4j + p.rho), p.alpha + 1, -mpmath.sinh(t) ** 2)
        * (2 * mpmath.sinh(t)) ** (2 * p.alpha + 1) * (2 * mpmath.cosh(t)) ** (2 * p.beta + 1),
        [0, 0.1, 1.5],
    )
    assert abs(val - complex(ref)) <= 1e-9 * abs(complex(ref))

