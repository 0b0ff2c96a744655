import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bosonsim import __version__
from bosonsim.grid import GridSpec, ScalarField2D
from bosonsim.io import (MapFormatError, decode_map, encode_map, export_render, quantize,
                         read_anchors, read_curve, read_map, read_stack, write_curve, write_map,
                         write_stack)
from bosonsim.scan import MapStack, ScanMap


def test_zero_map_payload():
    data = encode_map(np.zeros((2, 2)), 10.0)
    assert data[:4] == b"BSN1"
    assert data[4:8] == (2).to_bytes(4, "little") and data[8:12] == (2).to_bytes(4, "little")
    assert data[20:] == bytes(16)


def test_random_round_trip_bit_identical(tmp_path, rng):
    vals = rng.standard_normal((64, 64)).astype(np.float32)
    p = write_map(tmp_path / "m.bsn", vals, {"channel": "nfpc", "fingerprint": "sha256:x"},
                  dx=12.5, origin=(3.0, 4.0))
    mf = read_map(p)
    assert mf.values.dtype == np.float32
    assert mf.values.tobytes() == vals.tobytes()
    assert mf.dx == 12.5 and mf.origin == (3.0, 4.0)
    side = json.loads((tmp_path / "m.json").read_text())
    assert side["version"] == __version__ and side["fingerprint"] == "sha256:x"


@given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=32)))
@settings(max_examples=50, deadline=None)
def test_encode_decode_property(a):
    v, dx = decode_map(encode_map(a, 1.5))
    assert v.tobytes() == a.tobytes() and dx == 1.5


def test_errors(tmp_path):
    good = encode_map(np.ones((3, 3)), 1.0)
    (tmp_path / "t.bsn").write_bytes(good[:-5])
    with pytest.raises(MapFormatError, match="truncated"):
        read_map(tmp_path / "t.bsn")
    with pytest.raises(MapFormatError, match="magic"):
        decode_map(b"XXXX" + good[4:])
    with pytest.raises(MapFormatError):
        decode_map(good[:10])
    bad = bytearray(good)
    bad[20:24] = np.array([np.nan], "<f4").tobytes()
    with pytest.raises(MapFormatError, match="non-finite"):
        decode_map(bytes(bad))
    with pytest.raises(MapFormatError):
        encode_map(np.array([[np.inf, 0.0]]), 1.0)
    with pytest.raises(MapFormatError):
        write_map(tmp_path / "x.json", np.zeros((2, 2)), dx=1.0)


def test_atomic_write_leaves_no_temp(tmp_path):
    write_map(tmp_path / "a.bsn", np.zeros((4, 4)), dx=1.0)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.bsn", "a.json"]


def test_field_round_trip(tmp_path):
    g = GridSpec(5, 4, 2.0, (10.0, 20.0))
    f = ScalarField2D(g, np.arange(20.0))
    write_map(tmp_path / "f.bsn", f)
    back = read_map(tmp_path / "f.bsn").as_field()
    assert back.grid == g and np.array_equal(back.values, f.values)


def test_stack_round_trip(tmp_path):
    xs, ys = np.arange(3) * 10.0 + 5, np.arange(2) * 10.0 + 5
    maps = tuple(ScanMap("nfpc", xs, ys, 10.0, np.full((2, 3), float(k))) for k in range(3))
    st_ = MapStack("temperature", np.array([7.0, 7.5, 8.0]), maps, "sha256:abc")
    write_stack(tmp_path / "s", st_)
    back = read_stack(tmp_path / "s")
    assert back.parameter == "temperature" and back.fingerprint == "sha256:abc"
    assert np.array_equal(back.values, st_.values)
    assert np.array_equal(back.array(), st_.array())
    assert np.allclose(back.maps[0].xs, xs)
    manifest = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert manifest["unit"] == "K" and len(manifest["entries"]) == 3


def test_curve_round_trip(tmp_path):
    p = write_curve(tmp_path / "c.csv", [("temperature", "K", [7.0, 7.5]),
                                         ("signal", "arb.", [1.0, 2.5])], {"fingerprint": "f"})
    cols, units, meta = read_curve(p)
    assert units == {"temperature": "K", "signal": "arb."}
    assert np.array_equal(cols["signal"], [1.0, 2.5]) and meta["fingerprint"] == "f"
    lines = p.read_text().splitlines()
    assert lines[-4] == "temperature,signal" and lines[-3] == "K,arb."


def test_anchor_csv(tmp_path):
    (tmp_path / "a.csv").write_text("t_raw,t_sample\n3,6.1\n6,8.2\n")
    assert read_anchors(tmp_path / "a.csv") == [(3.0, 6.1), (6.0, 8.2)]
    (tmp_path / "b.csv").write_text("3,6.1\n6,8.2\n")
    with pytest.raises(ValueError):
        read_anchors(tmp_path / "b.csv")


def test_render_constant_and_deterministic(tmp_path):
    from PIL import Image

    export_render(np.full((8, 8), 3.0), tmp_path / "c.png")
    assert len(np.unique(np.asarray(Image.open(tmp_path / "c.png")))) == 1
    v = np.random.default_rng(0).random((16, 20))
    export_render(v, tmp_path / "a.png", "viridis")
    export_render(v, tmp_path / "b.png", "viridis")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
    assert Image.open(tmp_path / "a.png").mode == "RGB"


def test_percentile_clip_preserves_interior_contrast():
    v = np.tile(np.linspace(0, 1, 50), (50, 1))
    v[0, 0], v[0, 1] = 1e6, -1e6
    q, lo, hi = quantize(v, (1, 99))
    interior = q[10]
    assert interior.max() - interior.min() > 200
    q_full, _, _ = quantize(v, (0, 100))
    assert q_full[10].max() - q_full[10].min() <= 1
    with pytest.raises(ValueError):
        quantize(np.zeros((0, 0)))
