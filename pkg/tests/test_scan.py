import numpy as np
import pytest

from bosonsim.scan import MapStack, ScanMap, ScanSpec, nfpc_at, scan, ssnom_at, sweep
from bosonsim.scene import build_scene

from conftest import strip_scene_config


def _spec(sc, step=None, channels=("nfpc",), **kw):
    xs, ys = sc.grid.x_centers(), sc.grid.y_centers()
    return ScanSpec((xs[8], ys[8], xs[-9], ys[-9]), step or 2 * sc.grid.dx, channels, **kw)


def test_single_pixel_equals_point_op(small_bridge):
    r = (1225.0, 1175.0)
    m = scan(small_bridge, ScanSpec((*r, *r), 50.0), T=8.3)["nfpc"]
    assert m.values.shape == (1, 1)
    assert m.values[0, 0] == nfpc_at(small_bridge, r, T=8.3)


def test_zero_bias_exactly_zero(small_bridge):
    spec = _spec(small_bridge)
    m = scan(small_bridge, spec, T=8.3, I_bias=0.0)["nfpc"]
    assert np.all(m.values == 0.0)
    assert nfpc_at(small_bridge, (1200.0, 1200.0), T=8.3, I_bias=0.0) == 0.0


def test_bias_reversal_exact(small_bridge):
    spec = _spec(small_bridge)
    a = scan(small_bridge, spec, T=8.3, I_bias=5.0)["nfpc"].values
    b = scan(small_bridge, spec, T=8.3, I_bias=-5.0)["nfpc"].values
    assert np.array_equal(a, -b)
    assert np.abs(a).max() > 0


def test_vanishes_far_above_tc(small_bridge):
    r = (1200.0, 1200.0)
    peak = max(abs(nfpc_at(small_bridge, r, T=T)) for T in np.linspace(7.0, 8.8, 37))
    # a logistic tail falls as 4 exp(-u); u = 20 puts it well under 1e-6
    hot = nfpc_at(small_bridge, r, T=8.5 + 20 * small_bridge.sc.w)
    assert abs(hot) < 1e-6 * peak


def test_power_linearity_small_signal(small_bridge):
    spec = _spec(small_bridge, step=150.0)
    a = scan(small_bridge, spec, T=8.2, power=1.0)["nfpc"].values
    b = scan(small_bridge, spec, T=8.2, power=2.0)["nfpc"].values
    big = np.abs(a) > 1e-3 * np.abs(a).max()
    assert np.allclose(b[big], 2 * a[big], rtol=0.01)


def test_order_and_worker_independence(small_bridge):
    spec = _spec(small_bridge, step=100.0, channels=("nfpc", "ssnom"))
    one = scan(small_bridge, spec, T=8.3, workers=1)
    many = scan(small_bridge, spec, T=8.3, workers=3)
    for ch in one:
        assert np.array_equal(one[ch].values, many[ch].values)
    xs, ys = spec.positions()
    rng = np.random.default_rng(5)
    for k in rng.permutation(len(xs) * len(ys))[:10]:
        i, j = divmod(int(k), len(xs))
        assert nfpc_at(small_bridge, (xs[j], ys[i]), T=8.3) == one["nfpc"].values[i, j]


def test_ssnom_without_boundaries_is_background():
    sc = build_scene(strip_scene_config())
    assert ssnom_at(sc, (200.0, 100.0)) == complex(sc.optics.ssnom_background)


def test_ssnom_map_is_modulus(small_hbn_scene):
    r = (1000.0, 1800.0)
    m = scan(small_hbn_scene, ScanSpec((*r, *r), 40.0, ("ssnom",)))["ssnom"]
    assert m.values[0, 0] == abs(ssnom_at(small_hbn_scene, r))


def test_noise_seeded(small_bridge):
    spec = _spec(small_bridge, step=200.0, noise_sigma=0.5, noise_seed=7)
    a = scan(small_bridge, spec, T=8.3)["nfpc"].values
    b = scan(small_bridge, spec, T=8.3)["nfpc"].values
    clean = scan(small_bridge, _spec(small_bridge, step=200.0), T=8.3)["nfpc"].values
    assert np.array_equal(a, b) and not np.array_equal(a, clean)


def test_spec_validation(small_bridge):
    with pytest.raises(ValueError):
        ScanSpec((10, 10, 0, 20), 10.0)
    with pytest.raises(ValueError):
        scan(small_bridge, ScanSpec((0, 0, 100, 100), 10.0))
    with pytest.raises(ValueError):
        scan(small_bridge, ScanSpec((100, 100, 1e6, 200), 100.0))
    with pytest.raises(ValueError):
        ScanSpec((0, 0, 1, 1), 1.0, ("afm",))


def test_single_value_sweep_matches_scan(small_bridge):
    spec = _spec(small_bridge, step=150.0)
    st = sweep(small_bridge, spec, "temperature", [8.3])
    assert len(st) == 1
    assert np.array_equal(st.maps[0].values, scan(small_bridge, spec, T=8.3)["nfpc"].values)
    assert st.fingerprint == small_bridge.fingerprint


def test_sweep_values_match_individual_scans(small_bridge):
    spec = _spec(small_bridge, step=200.0)
    st = sweep(small_bridge, spec, "bias", [-4.0, 1.0, 6.0], T=8.2)
    for v, m in zip(st.values, st.maps):
        assert np.array_equal(m.values, scan(small_bridge, spec, T=8.2, I_bias=v)["nfpc"].values)


def test_zero_bias_stack(small_bridge):
    st = sweep(small_bridge, _spec(small_bridge, step=200.0), "temperature", [7.8, 8.2, 8.6],
               I_bias=0.0)
    assert np.all(st.array() == 0)


def test_field_sweep_non_monotone(small_bridge):
    B = np.linspace(0, 1.2, 13)
    st = sweep(small_bridge, _spec(small_bridge, step=150.0), "field", B, T=8.0)
    y = np.abs(st.array()).sum(axis=(1, 2))
    k = int(np.argmax(y))
    assert 0 < k < len(B) - 1
    assert y[-1] < 1e-3 * y[k]


def test_stack_validation():
    m = ScanMap("nfpc", np.arange(2.0), np.arange(2.0), 1.0, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        MapStack("temperature", np.array([1.0, 1.0]), (m, m))
    with pytest.raises(ValueError):
        MapStack("temperature", np.array([1.0, 2.0, 1.5]), (m, m, m))
    with pytest.raises(ValueError):
        sweep(None, None, "pressure", [1.0])
