import numpy as np
import pytest
from scipy import integrate

from bchf import hc_series as hs
from bchf import transform as tr
from bchf.core_types import ContourThroughPole, MultiplicityBC, enumerate_W
from bchf.rank1_oracle import JacobiParams, jacobi_transform_reference

CANON1 = MultiplicityBC(3, 0, -2)
CANON2 = MultiplicityBC(3, 0.5, -3)
POSITIVE2 = MultiplicityBC(0.7, 0.4, 0.3)


def test_gl_panels_integrate_polynomials():
    x, w = tr.gl_panels(0.0, 3.0, 1.0, 6)
    assert np.sum(w * x**9) == pytest.approx(3.0**10 / 10, rel=1e-13)


def test_gauss_jacobi_panel_absorbs_power():
    x, w = tr.gj_first_panel(0.5, 0.6, 12)
    assert np.sum(w * np.cos(x)) == pytest.approx(integrate.quad(lambda s: s**0.6 * np.cos(s), 0, 0.5)[0], rel=1e-12)


def test_chamber_grid_k_zero():
    g = tr.chamber_grid(MultiplicityBC(0, 0, 0), 2, cutoff=40.0)
    val = np.sum(g.weights * np.exp(-1.0 * g.nodes[:, 0] - 2.0 * g.nodes[:, 1]))
    assert val == pytest.approx(1 / (2.0 * 3.0), rel=1e-12)


def test_chamber_grid_rank_one_weight():
    k = MultiplicityBC(0.3, 0, 0.2)
    g = tr.chamber_grid(k, 1, cutoff=40.0)
    ref = integrate.quad(lambda t: np.exp(-4 * t) * (2 * np.sinh(t)) ** 0.6 * (2 * np.sinh(2 * t)) ** 0.4, 0, 40, limit=200)[0]
    assert np.sum(g.weights * np.exp(-4 * g.nodes[:, 0])) == pytest.approx(ref, rel=1e-9)


def test_box_grid_outside_chamber():
    with pytest.raises(ValueError):
        tr.box_grid(CANON2, (1.0, 1.2), 0.5)


def test_zero_function():
    f = tr.TestFunction("zero", (1.0,), 0.5)
    assert np.all(tr.forward(f, np.array([[0.3j], [-0.5 + 1j]]), CANON1) == 0)
    assert tr.plancherel_check(f, CANON1)[:3] == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("lam", [0.7j, 2.5j, -0.6 + 1.1j, -1.3])
def test_rank_one_forward_matches_reference(lam):
    f = tr.chamber_bump([1.0], 0.7, 0.16)
    grid = tr.box_grid(CANON1, [1.0], 0.7, panels=6, order=16)
    got = tr.forward(f, np.array([[lam]]), CANON1, grid)[0]
    p = JacobiParams.from_k(CANON1.ks, CANON1.kl)
    ref = jacobi_transform_reference(lambda t: f(t[:, None]), lam, p, 1.7)
    assert abs(got - ref) <= 1e-8 * max(1, abs(ref))


def test_forward_is_weyl_invariant():
    f = tr.chamber_bump([0.9, 2.2], 0.6, 0.2)
    grid = tr.box_grid(CANON2, f.center, f.radius, panels=2, order=8)
    lam = np.array([0.4 + 1.3j, -0.2 + 0.5j])
    lams = np.array([w.act(lam) for w in enumerate_W(2)])
    vals = tr.forward(f, lams, CANON2, grid)
    assert np.max(np.abs(vals - vals[0])) <= 1e-10 * abs(vals[0])


def test_first_form_independent_of_contour():
    phi = tr.GaussianSpectral(0.05)
    xs = np.array([[0.5], [1.4]])
    a = tr.inverse_first_form(phi, xs, CANON1, [-2.0]).values
    b = tr.inverse_first_form(phi, xs, CANON1, [-2.6]).values
    assert np.max(np.abs(a - b)) < 1e-8


def test_contour_through_pole():
    with pytest.raises(ContourThroughPole):
        tr.check_contour([0.5], CANON1)
    with pytest.raises(ContourThroughPole):
        tr.check_contour([-1.0, -0.5], CANON2)
    tr.check_contour([-2.0], CANON1)


def test_rank_one_forms_agree_with_point_mass():
    phi = tr.GaussianSpectral(0.05)
    xs = np.array([[0.4], [1.1], [2.0]])
    first = tr.inverse_first_form(phi, xs, CANON1, [-2.0])
    final = tr.inverse_final_form(phi, xs, CANON1)
    assert set(final.components) == {(0, ()), (1, (-1.0,))}
    atom = 12.0 * phi(np.array([[-1.0]]))[0] * hs.F_discrete([-1.0], CANON1, xs)
    assert np.allclose(final.components[(1, (-1.0,))], atom, atol=1e-14)
    assert np.max(np.abs(first.values - final.values)) < 1e-8


def test_positive_k_has_only_continuous_part():
    phi = tr.GaussianSpectral(0.2)
    xs = np.array([[0.5, 1.3]])
    grid = tr.SpectralGrid(10.0, 1.0, 8)
    final = tr.inverse_final_form(phi, xs, POSITIVE2, grid)
    assert list(final.components) == [(0, ())]
    first = tr.inverse_first_form(phi, xs, POSITIVE2, [0.0, 0.0], grid)
    assert abs(first.values[0] - final.values[0]) < 1e-6 * abs(final.values[0])


def test_discrete_l2_norms_and_orthogonality():
    k = MultiplicityBC(5, 0, -4)
    assert tr.l2_discrete_check([-3], [-3], k) * 840 == pytest.approx(1, rel=1e-9)
    assert abs(tr.l2_discrete_check([-3], [-1], k)) < 1e-12
    assert tr.l2_discrete_check([-3, -2], [-3, -2], CANON2) * 20480 == pytest.approx(1, rel=1e-8)


def test_discrete_l2_at_km_zero():
    k = MultiplicityBC(3, 0, -3)
    for xi, d in [((-3, -3), 28800), ((-3, -1), 11520), ((-1, -1), 1152)]:
        assert tr.l2_discrete_check(xi, xi, k) * d == pytest.approx(1, rel=1e-8)
    assert abs(tr.l2_discrete_check((-3, -3), (-3, -1), k)) < 1e-12


def test_l2_truncation_is_converged():
    a = tr.l2_discrete_check([-1], [-1], CANON1, cutoff=20.0)
    b = tr.l2_discrete_check([-1], [-1], CANON1, cutoff=40.0)
    assert a == pytest.approx(b, rel=1e-12)
    assert a == pytest.approx(1 / 12, rel=1e-10)


def test_l2_rejects_non_integrable_pair():
    with pytest.raises(ValueError):
        tr.l2_discrete_check([0.5], [0.5], CANON1)


def test_paley_wiener_growth():
    k = CANON1
    bump = tr.chamber_bump([1.3], 1.0, 0.25)
    grid = tr.box_grid(k, [1.3], 1.0, panels=8, order=16)
    stats = tr.paley_wiener_probe(bump, k, 4, grid=grid)
    assert max(stats) / min(stats) < 1.05
    box = tr.TestFunction("indicator", (1.3,), 0.75)
    ctrl = tr.paley_wiener_probe(box, k, 4, grid=tr.box_grid(k, [1.3], 0.75, panels=8, order=16))
    assert ctrl[2] > 4 * ctrl[0]


def test_forward_image_caches():
    f = tr.chamber_bump([1.0], 0.7, 0.16)
    img = tr.ForwardImage(f, CANON1, f.grid(CANON1), hs.SeriesBudget.default(1))
    lams = np.array([[0.5j], [1.5j]])
    first = img(lams, (0, ()))
    assert img(lams, (0, ())) is first
    atom = img(np.array([[-1.0 + 0j]]), (1, (-1.0,)))
    assert atom.shape == (1,)
