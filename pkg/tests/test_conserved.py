import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dnlslab.conserved import (GridResolutionError, Verdict, action, d_matrix, energy,
                               gss_classify, mass, momentum, n_of_H, stability_report)
from dnlslab.grid import Grid
from dnlslab.solitons import SolitonParams, soliton_profile
from conftest import smooth_random_field


def test_zero_field():
    g = Grid(40.0, 256)
    z = np.zeros(g.N, complex)
    p = SolitonParams.dnls(0.5, 1.0, 0.5)
    assert energy(z, p, g) == 0.0 and mass(z, g) == 0.0 and momentum(z, g) == 0.0
    assert action(z, p, g) == 0.0


def test_momentum_of_real_field():
    g = Grid(40.0, 256)
    assert abs(momentum(np.exp(-g.x**2) * (1 + g.x), g)) < 1e-12


def test_plane_wave_packet_momentum():
    # P(e^{ikx} f) = -k Q(f) for real f
    g = Grid(60.0, 512)
    f = np.exp(-g.x**2 / 4)
    u = f * np.exp(1.3j * g.x)
    assert momentum(u, g) == pytest.approx(-1.3 * mass(f, g), rel=1e-12)


@pytest.mark.parametrize("p", [SolitonParams.dnls(0.5, 1.0, 1.5),
                               SolitonParams.gdnls(1.5, 1.0, 0.5)])
def test_refinement_agreement(p):
    L = 100.0
    a, b = Grid(L, 1024), Grid(L, 2048)
    fa, fb = soliton_profile(p, a), soliton_profile(p, b)
    assert energy(fa, p, a) == pytest.approx(energy(fb, p, b), abs=1e-8)
    assert mass(fa, a) == pytest.approx(mass(fb, b), abs=1e-10)
    assert action(fa, p, a) == pytest.approx(action(fb, p, b), abs=1e-8)


@pytest.mark.parametrize("p", [SolitonParams.dnls(0.5, 1.0, 1.5),
                               SolitonParams.dnls(-0.5, 1.0, -1.8),
                               SolitonParams.gdnls(2.0, 1.0, 1.0)])
def test_soliton_is_critical_point(p):
    g = Grid(100.0, 2048) if p.is_dnls else Grid(40.0, 2048)
    phi = soliton_profile(p, g)
    rng = np.random.default_rng(1)
    v = smooth_random_field(Grid(g.L, g.N), rng, width=1.0)
    v /= np.sqrt(np.sum(np.abs(v) ** 2) * g.dx)
    eps = 1e-4
    dS = (action(phi + eps * v, p, g) - action(phi - eps * v, p, g)) / (2 * eps)
    assert abs(dS) < 1e-6


def test_d_matrix_against_analytic_mass():
    # b = 0: Q(w, c) = 4 arctan((2 sqrt(w) + c) / sqrt(4 w - c^2))
    w0, c0 = 1.0, 0.7
    Q = lambda w, c: 4 * mpmath.atan((2 * mpmath.sqrt(w) + c) / mpmath.sqrt(4 * w - c * c))
    dQw = float(mpmath.diff(lambda w: Q(w, c0), w0))
    dQc = float(mpmath.diff(lambda c: Q(w0, c), c0))
    p = SolitonParams.dnls(0.0, w0, c0)
    dm = d_matrix(p, Grid(200.0, 2048))
    assert dm.d2[0, 0] == pytest.approx(dQw, rel=1e-7)
    assert dm.d2[0, 1] == pytest.approx(dQc, rel=1e-7)
    assert dm.asymmetry < 1e-4 * np.max(np.abs(dm.d2))
    phi = soliton_profile(p, Grid(200.0, 2048))
    assert mass(phi, Grid(200.0, 2048)) == pytest.approx(float(Q(w0, c0)), rel=1e-10)


def test_fd_step_shrinks_near_boundary():
    p = SolitonParams.gdnls(1.0, 1.0, 2.0 * (1 - 1e-6))
    dm = d_matrix(p, Grid(2000.0, 4096))
    assert dm.fd_step < 1e-4


def test_gss_rules():
    assert gss_classify(1, 1, 1.0) is Verdict.STABLE
    assert gss_classify(0, 1, 1.0) is Verdict.UNSTABLE
    assert gss_classify(0, 2, 1.0) is Verdict.INCONCLUSIVE
    assert gss_classify(1, 1, 1e-9) is Verdict.INCONCLUSIVE


def test_sigma2_unstable():
    p = SolitonParams.gdnls(2.0, 1.0, 1.0)
    rep = stability_report(p, Grid(40.0, 1024))
    assert rep.p_count == 0 and rep.n_count == 1
    assert rep.verdict is Verdict.UNSTABLE
    assert len(rep.near_zero) == 2 and np.all(np.abs(rep.near_zero) < 1e-4)
    assert rep.p_count <= rep.n_count
    assert abs(rep.d2[0, 1] - rep.d2[1, 0]) < 1e-4 * np.max(np.abs(rep.d2))


def test_sigma_half_stable():
    p = SolitonParams.gdnls(0.5, 1.0, 0.0)
    rep = stability_report(p, Grid(46.0, 512))
    assert rep.p_count == 1 and rep.n_count == 1
    assert rep.verdict is Verdict.STABLE


@pytest.mark.parametrize("p,L", [(SolitonParams.gdnls(1.0, 1.0, 0.5), 60.0),
                                 (SolitonParams.gdnls(1.5, 1.0, -0.5), 60.0),
                                 (SolitonParams.gdnls(3.0, 1.0, 0.0), 30.0)])
def test_gdnls_single_negative_direction(p, L):
    hc = n_of_H(p, Grid(L, 1024))
    assert hc.n == 1
    assert len(hc.near_zero) == 2


def test_n_stable_under_refinement():
    p = SolitonParams.dnls(0.5, 1.0, 0.5)
    a = n_of_H(p, Grid(80.0, 512))
    b = n_of_H(p, Grid(80.0, 1024))
    assert a.n == b.n
    assert len(a.near_zero) == len(b.near_zero) == 2


def test_grid_resolution_error():
    p = SolitonParams.dnls(0.5, 1.0, 0.5)
    with pytest.raises(GridResolutionError):
        n_of_H(p, Grid(80.0, 256), zero_window=10.0)


@given(st.floats(0.6, 1.8), st.floats(-0.8, 0.8))
def test_p_not_above_n(omega, frac):
    p = SolitonParams.dnls(0.25, omega, frac * 2 * np.sqrt(omega))
    rep = stability_report(p, Grid(60.0 / p.h + 20.0, 256))
    assert rep.p_count <= rep.n_count
