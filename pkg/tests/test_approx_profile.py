import numpy as np
import pytest

from dnlslab.approx_profile import (_f, _f_prime, build_W, dress_profile, err_decay_fit,
                                    err_residual, fit_rate, flow_residual, nonlinear_M,
                                    nonlinear_N, quadratic_part)
from dnlslab.grid import Grid, deriv, l2_norm, sobolev_norm
from dnlslab.linearized import ResonanceError, Y_of_t, decay_fit
from dnlslab.solitons import SolitonParams, soliton_profile, traveling_soliton
from conftest import MAIN, smooth_random_field


@pytest.fixture(scope="module")
def grid():
    return Grid(80.0, 1024)


@pytest.fixture(scope="module")
def expansions(small_report):
    return {N0: build_W(small_report, 1.0, N0) for N0 in (1, 2)}


PARAMS = [MAIN, SolitonParams.dnls(-0.5, 1.0, -1.8), SolitonParams.gdnls(2.0, 1.0, 1.0),
          SolitonParams.gdnls(1.5, 1.0, 0.5)]


@pytest.mark.parametrize("p", PARAMS, ids=lambda p: f"{p.equation.value}-{p.sigma}")
def test_remainder_matches_direct_difference(p, grid):
    phi = soliton_profile(p, grid)
    v = 0.1 * smooth_random_field(grid, np.random.default_rng(2))
    vx, px = deriv(v, grid), deriv(phi, grid)
    direct = _f(phi + v, px + vx, p) - _f(phi, px, p) - _f_prime(v, vx, phi, px, p)
    assert np.max(np.abs(nonlinear_M(v, phi, p, grid) - direct)) < 1e-9 * np.max(np.abs(direct))
    assert np.max(np.abs(nonlinear_M(np.zeros(grid.N, complex), phi, p, grid))) == 0.0


@pytest.mark.parametrize("p", PARAMS, ids=lambda p: f"{p.equation.value}-{p.sigma}")
def test_valuation_two(p, grid):
    phi = soliton_profile(p, grid)
    v = smooth_random_field(grid, np.random.default_rng(4))
    ratios = [l2_norm(nonlinear_M(e * v, phi, p, grid), grid) / e**2 for e in (1e-2, 1e-3, 1e-4)]
    assert abs(ratios[1] - ratios[2]) < 0.05 * ratios[2]
    assert abs(ratios[0] - ratios[1]) < 0.5 * ratios[2]
    q = l2_norm(quadratic_part(v, phi, p, grid), grid)
    assert q == pytest.approx(ratios[2], rel=1e-3)


def test_M_is_conjugated_N(grid):
    phi = soliton_profile(MAIN, grid)
    v = smooth_random_field(grid, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    for t in rng.uniform(-5, 5, 3):
        e = np.exp(1j * MAIN.omega * t)
        lhs = nonlinear_M(v, phi, MAIN, grid)
        rhs = np.conj(e) * nonlinear_N(e * v, e * phi, MAIN, grid)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_first_order_is_linear_mode(small_report, expansions):
    rep = small_report
    e1 = expansions[1]
    A, B = e1.coeffs[(1, 1)]
    assert np.array_equal(A, rep.Y1) and np.array_equal(B, rep.Y2)
    for t in (0.0, 1.0, 3.0):
        assert np.max(np.abs(e1.W(t) - Y_of_t(rep, t))) == 0.0
        # the linear flow is solved exactly, so the residual is M(aY)
        g = rep.grid
        assert l2_norm(flow_residual(e1, t) - nonlinear_M(e1.W(t), rep.op.phi, MAIN, g), g) \
            < 1e-6 * max(1.0, l2_norm(e1.W(t), g))


def test_zero_amplitude(small_report):
    e = build_W(small_report, 0.0, 2)
    assert np.all(e.W(1.0) == 0)
    V, U = dress_profile(e, 1.3)
    assert np.all(V == 0)
    assert np.array_equal(U, traveling_soliton(MAIN, small_report.grid, 1.3))


def _window(rep):
    return np.linspace(2 / rep.rho, 6 / rep.rho, 9)


@pytest.mark.parametrize("N0,minimum", [(1, 1.9), (2, 2.7)])
def test_flow_residual_rates(small_report, expansions, N0, minimum):
    rep = small_report
    ts = _window(rep)
    vals = [l2_norm(flow_residual(expansions[N0], t), rep.grid) for t in ts]
    assert fit_rate(ts, vals).rate >= minimum * rep.rho


def test_second_order_correction(small_report, expansions):
    rep = small_report
    e2 = expansions[2]
    g = rep.grid
    ts = _window(rep)
    diff = [l2_norm(e2.W(t) - Y_of_t(rep, t), g) for t in ts]
    assert fit_rate(ts, diff).rate >= 1.9 * rep.rho
    alpha = min(rep.alpha_fit, MAIN.h / 2)
    scale = max(l2_norm(A, g) for A, _ in e2.coeffs.values())
    for (j, k), (A, B) in e2.coeffs.items():
        for F in (A, B):
            if l2_norm(F, g) > 1e-8 * scale:
                assert decay_fit(F, g).alpha >= alpha - 1e-2


def test_dressed_perturbation_decays(small_report, expansions):
    rep = small_report
    g = rep.grid
    ts = np.linspace(1 / rep.rho, 5 / rep.rho, 7)
    for s in (0, 1, 2):
        vals = [sobolev_norm(dress_profile(expansions[2], t)[0], g, s) for t in ts]
        assert fit_rate(ts, vals).rate >= 0.95 * rep.rho


def test_err_residual_first_order(small_report, expansions):
    fit = err_decay_fit(expansions[1])
    assert fit.rate >= 1.9 * small_report.rho


def test_err_field_is_translation_invariant(small_report, expansions):
    # the co-moving evaluation agrees with the lab-frame dressed ansatz
    from dnlslab.approx_profile import err_field, pde_residual
    rep, e = small_report, expansions[1]
    g = rep.grid
    t, h = 2.0, 1e-4
    U = lambda s: dress_profile(e, s)[1]
    Ut = (U(t + h) - U(t - h)) / (2 * h)
    lab = pde_residual(U(t), Ut, MAIN, g)
    assert abs(l2_norm(lab, g) - l2_norm(err_field(e, t), g)) < 1e-6


def test_errors(small_report, expansions):
    with pytest.raises(ResonanceError):
        build_W(small_report, 1.0, 2, gap=10.0)
    with pytest.raises(ValueError):
        build_W(small_report, 1.0, 3)
    with pytest.raises(ValueError):
        err_decay_fit(expansions[1], window=(1.0, 1.1))
