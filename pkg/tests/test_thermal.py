import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import k0

from bosonsim.grid import GridSpec, ScalarField2D
from bosonsim.thermal import Diffuser, ThermalParams, diffuse, diffuse_direct, kernel

G64 = GridSpec(64, 64, 10.0)
TP = ThermalParams(l_D=40.0)


def test_kernel_unit_sum_and_symmetry():
    for kind in ("screened-diffusion", "gaussian"):
        K = kernel(G64, ThermalParams(l_D=40.0, kernel=kind))
        assert K.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.array_equal(K, K[::-1, ::-1]) and np.allclose(K, K.T)


def test_delta_source_follows_k0_profile():
    P = np.zeros(G64.shape)
    P[32, 32] = 1.0
    T = diffuse(ScalarField2D(G64, P), TP).values
    r = np.array([2, 4, 8, 12]) * G64.dx
    ratios = T[32, 32 + np.array([2, 4, 8, 12])] / T[32, 34]
    assert np.allclose(ratios, k0(r / TP.l_D) / k0(r[0] / TP.l_D), rtol=1e-12)


def test_subcell_length_is_identity():
    P = np.random.default_rng(0).random(G64.shape)
    T = diffuse(ScalarField2D(G64, P), ThermalParams(l_D=5.0), eta=2.5).values
    assert np.array_equal(T, 2.5 * P)


def test_uniform_interior_value():
    P = np.full(G64.shape, 3.0)
    T = diffuse_direct(ScalarField2D(G64, P), TP, eta=0.1).values
    assert T[32, 32] == pytest.approx(0.3, rel=1e-3)


def test_fft_matches_direct_sum(rng):
    P = ScalarField2D(G64, rng.random(G64.shape))
    for params in (TP, ThermalParams(l_D=80.0), ThermalParams(l_D=40.0, kernel="gaussian")):
        a = diffuse(P, params).values
        b = diffuse_direct(P, params).values
        assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(b))


def test_mass_conservation_away_from_boundary():
    P = np.zeros(G64.shape)
    P[30:34, 28:36] = 5.0
    T = diffuse(ScalarField2D(G64, P), ThermalParams(l_D=30.0), eta=1.0).values
    assert T.sum() == pytest.approx(P.sum(), rel=1e-6)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_linearity(a, b, seed):
    g = GridSpec(24, 20, 10.0)
    r = np.random.default_rng(seed)
    P1, P2 = r.random(g.shape), r.random(g.shape)
    d = Diffuser(g, TP, 1.0)
    lhs = d.apply(a * P1 + b * P2)
    rhs = a * d.apply(P1) + b * d.apply(P2)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (abs(a) + abs(b) + 1))


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_smoothing_bounded_and_nonnegative(seed):
    P = np.random.default_rng(seed).random(G64.shape) * 7.0
    T = diffuse(ScalarField2D(G64, P), TP, eta=0.5).values
    assert T.max() <= 0.5 * P.max() * (1 + 1e-12)
    assert T.min() >= -1e-12


def test_high_spatial_frequency_attenuated():
    x = G64.x_centers()
    slow = np.tile(np.sin(2 * np.pi * x / 640.0), (64, 1))
    fast = np.tile(np.sin(2 * np.pi * x / 40.0), (64, 1))
    d = Diffuser(G64, TP, 1.0)

    def amp(f):
        row = d.apply(f)[32, 16:48]
        return np.abs(np.fft.rfft(row - row.mean())).max()

    assert amp(fast) / amp(slow) < 0.1 * (np.abs(np.fft.rfft(fast[32, 16:48])).max()
                                          / np.abs(np.fft.rfft(slow[32, 16:48] - slow[32, 16:48].mean())).max())


def test_conductor_domain_neumann():
    g = GridSpec(30, 20, 10.0)
    mask = np.zeros(g.shape, bool)
    mask[5:15, :] = True
    P = np.where(mask, 2.0, 0.0)
    T = Diffuser(g, ThermalParams(l_D=50.0, domain="conductor"), 0.5, mask).apply(P)
    assert np.allclose(T[mask], 1.0, rtol=1e-12)
    assert np.all(T[~mask] == 0)
    with pytest.raises(ValueError):
        Diffuser(g, ThermalParams(domain="conductor"), 1.0)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        ThermalParams(l_D=0.0)
    with pytest.raises(ValueError):
        diffuse(ScalarField2D(G64, -np.ones(G64.shape)), TP)
