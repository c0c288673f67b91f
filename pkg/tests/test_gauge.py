import numpy as np
import pytest
from hypothesis import given, strategies as st

from dnlslab.gauge import (GaugePair, LipschitzWarning, constraint_psi, from_gauge,
                           gauge_nonlinearity, lipschitz_regime, to_gauge)
from dnlslab.grid import Grid, deriv
from dnlslab.solitons import SolitonParams, TruncationWarning, soliton_profile
from conftest import smooth_random_field

G = Grid(40.0, 512)
EQS = [SolitonParams.dnls(0.5, 1.0, 1.5), SolitonParams.dnls(0.0, 1.0, 0.0),
       SolitonParams.gdnls(2.0, 1.0, 1.0), SolitonParams.gdnls(1.5, 1.0, 1.0),
       SolitonParams.gdnls(3.0, 1.0, 1.0)]


def test_zero():
    z = np.zeros(G.N, complex)
    for p in EQS:
        pair = to_gauge(z, p, G)
        assert np.all(pair.phi == 0) and np.all(pair.psi == 0)
        P, Q = gauge_nonlinearity(z, z, p, G, warn=False)
        assert np.all(P == 0) and np.all(Q == 0)
        assert np.all(from_gauge(pair, p) == 0)


@given(st.integers(0, 10**6), st.sampled_from(EQS))
def test_round_trip_and_modulus(seed, p):
    rng = np.random.default_rng(seed)
    if float(p.s).is_integer():
        u = smooth_random_field(G, rng)
    else:
        # |u|^{2s} is only finitely smooth at zeros of u; use a nodeless field
        env = sum(rng.uniform(0.2, 1.0) * np.exp(-((G.x - rng.uniform(-2, 2)) / 2.0) ** 2)
                  for _ in range(3))
        u = env * np.exp(1j * rng.uniform(-2, 2) * G.x)
    u *= 0.8 / np.max(np.abs(u))   # keeps the gauge phase resolved for large sigma
    pair = to_gauge(u, p, G)
    assert np.max(np.abs(np.abs(pair.phi) - np.abs(u))) < 1e-12
    assert np.max(np.abs(from_gauge(pair, p) - u)) < 1e-10
    assert np.max(np.abs(pair.psi - constraint_psi(pair.phi, p, G))) < 1e-8


@pytest.mark.parametrize("p", [SolitonParams.dnls(0.5, 1.0, 1.5),
                               SolitonParams.gdnls(2.0, 1.0, 1.0)])
def test_soliton_pair_constraint(p):
    g = Grid(140.0, 2048) if p.is_dnls else Grid(60.0, 2048)
    pair = to_gauge(soliton_profile(p, g), p, g)
    assert np.max(np.abs(pair.psi - constraint_psi(pair.phi, p, g))) < 1e-8


def test_sigma_one_has_no_integral_terms():
    u = smooth_random_field(G, np.random.default_rng(1))
    a = to_gauge(u, SolitonParams.gdnls(1.0, 1.0, 0.0), G)
    P, Q = gauge_nonlinearity(a.phi, a.psi, SolitonParams.gdnls(1.0, 1.0, 0.0), G)
    Pd, Qd = gauge_nonlinearity(a.phi, a.psi, SolitonParams.dnls(0.0, 1.0, 0.0), G)
    assert np.array_equal(P, Pd) and np.array_equal(Q, Qd)
    assert np.allclose(P, 1j * a.phi**2 * np.conj(a.psi), atol=1e-15)


@pytest.mark.parametrize("p", EQS, ids=lambda p: f"{p.equation.value}-{p.b}-{p.sigma}")
def test_gauge_system_by_chain_rule(p):
    """d/dt of to_gauge(u) along the PDE equals i phi_xx - i P (and likewise for psi)."""
    u = (1.2 * np.exp(-G.x**2) * np.exp(0.7j * G.x)
         + 0.5 * np.exp(-2 * (G.x - 1) ** 2)).astype(complex)
    s, b = p.s, (p.b if p.is_dnls else 0.0)
    a2 = np.abs(u) ** 2
    ut = 1j * deriv(u, G, 2) - a2**s * deriv(u, G) + 1j * b * a2**2 * u
    eps = 1e-6
    hi, lo, mid = to_gauge(u + eps * ut, p, G), to_gauge(u - eps * ut, p, G), to_gauge(u, p, G)
    P, Q = gauge_nonlinearity(mid.phi, mid.psi, p, G, warn=False)
    phit = (hi.phi - lo.phi) / (2 * eps)
    psit = (hi.psi - lo.psi) / (2 * eps)
    assert np.max(np.abs(phit - (1j * deriv(mid.phi, G, 2) - 1j * P))) < 1e-7
    assert np.max(np.abs(psit - (1j * deriv(mid.psi, G, 2) - 1j * Q))) < 1e-7


def test_lipschitz_guard():
    assert lipschitz_regime(1) and lipschitz_regime(2) and lipschitz_regime(2.5)
    assert not lipschitz_regime(1.5) and not lipschitz_regime(2.2)
    u = smooth_random_field(G, np.random.default_rng(2))
    p = SolitonParams.gdnls(1.5, 1.0, 0.0)
    pair = to_gauge(u, p, G)
    with pytest.warns(LipschitzWarning):
        gauge_nonlinearity(pair.phi, pair.psi, p, G)


def test_localization_warning():
    with pytest.warns(TruncationWarning):
        to_gauge(np.ones(G.N, complex), SolitonParams.dnls(0.0, 1.0, 0.0), G)


def test_pair_stack():
    pair = GaugePair(np.ones(G.N), np.zeros(G.N), G)
    assert pair.stack().shape == (2, G.N)
