"""On-disk formats: BSN1 maps with JSON sidecars, stack manifests, CSV
curves and PNG renders.

BSN1 layout (little-endian)::

    b"BSN1" | nx: u32 | ny: u32 | dx: f64 | nx*ny float32, row-major

The sidecar has the map's basename with a ``.json`` suffix.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__
from .grid import GridSpec, ScalarField2D

MAGIC = b"BSN1"
_HEADER = struct.Struct("<4sIId")


class MapFormatError(ValueError):
    pass


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def sidecar_path(path) -> Path:
    path = Path(path)
    if path.suffix == ".json":
        raise MapFormatError(f"{path}: map files may not use the .json suffix")
    return path.with_suffix(".json")


@dataclass(frozen=True, eq=False)
class MapFile:
    values: np.ndarray = field(repr=False)  # float32, (ny, nx)
    dx: float
    metadata: dict

    @property
    def origin(self) -> tuple[float, float]:
        o = self.metadata.get("origin", [0.0, 0.0])
        return float(o[0]), float(o[1])

    def as_field(self) -> ScalarField2D:
        ny, nx = self.values.shape
        return ScalarField2D(GridSpec(nx, ny, self.dx, self.origin),
                             self.values.astype(np.float64))


def encode_map(values: np.ndarray, dx: float) -> bytes:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise MapFormatError("map values must be 2-D")
    if not np.all(np.isfinite(arr)):
        raise MapFormatError("map values must be finite")
    out = arr.astype("<f4")
    if not np.all(np.isfinite(out)):
        raise MapFormatError("map values overflow float32")
    ny, nx = out.shape
    return _HEADER.pack(MAGIC, nx, ny, float(dx)) + out.tobytes(order="C")


def decode_map(data: bytes, name: str = "<bytes>") -> tuple[np.ndarray, float]:
    if len(data) < _HEADER.size:
        raise MapFormatError(f"{name}: truncated header ({len(data)} bytes)")
    magic, nx, ny, dx = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MapFormatError(f"{name}: bad magic {magic!r}")
    need = _HEADER.size + 4 * nx * ny
    if len(data) < need:
        raise MapFormatError(f"{name}: truncated payload ({len(data)} of {need} bytes)")
    if len(data) > need:
        raise MapFormatError(f"{name}: {len(data) - need} trailing bytes")
    values = np.frombuffer(data, dtype="<f4", count=nx * ny, offset=_HEADER.size)
    values = values.reshape(ny, nx).copy()
    if not np.all(np.isfinite(values)):
        raise MapFormatError(f"{name}: non-finite payload")
    return values, dx


def _map_parts(obj, dx, origin):
    """Accept a ScalarField2D, a ScanMap or a bare array plus dx."""
    if isinstance(obj, ScalarField2D):
        return obj.values, obj.grid.dx, obj.grid.origin
    if hasattr(obj, "xs") and hasattr(obj, "step"):
        o = (float(obj.xs[0]) - 0.5 * obj.step, float(obj.ys[0]) - 0.5 * obj.step)
        return obj.values, obj.step, o
    if dx is None:
        raise ValueError("dx is required for a bare array")
    return np.asarray(obj), float(dx), origin or (0.0, 0.0)


def write_map(path, values, metadata: Mapping[str, Any] | None = None, dx: float | None = None,
              origin: tuple[float, float] | None = None) -> Path:
    """Write a BSN1 map and its sidecar. Values are stored as float32."""
    arr, dx, origin = _map_parts(values, dx, origin)
    payload = encode_map(arr, dx)
    meta = {"channel": "", "units": "", "fingerprint": "", "parameters": {}}
    meta.update(metadata or {})
    meta["origin"] = [float(origin[0]), float(origin[1])]
    meta["version"] = __version__
    meta["format"] = "BSN1"
    path = Path(path)
    side = sidecar_path(path)
    _atomic_write(path, payload)
    _atomic_write(side, _json_bytes(meta))
    return path


def read_map(path) -> MapFile:
    path = Path(path)
    values, dx = decode_map(path.read_bytes(), str(path))
    side = sidecar_path(path)
    meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else {}
    return MapFile(values, dx, meta)


# -- stacks -----------------------------------------------------------------

MANIFEST = "manifest.json"


def write_stack(directory, stack, metadata: Mapping[str, Any] | None = None) -> Path:
    """One BSN1 map per stack entry plus ``manifest.json``."""
    from .scan import UNITS

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, (v, m) in enumerate(zip(stack.values, stack.maps)):
        name = f"map_{k:03d}.bsn"
        params = dict((metadata or {}).get("parameters", {}))
        params[stack.parameter] = float(v)
        meta = dict(metadata or {})
        meta.update({"channel": stack.channel, "fingerprint": stack.fingerprint,
                     "parameters": params})
        write_map(directory / name, m, meta)
        entries.append({"value": float(v), "file": name})
    manifest = {"parameter": stack.parameter, "unit": UNITS.get(stack.parameter, ""),
                "channel": stack.channel, "fingerprint": stack.fingerprint,
                "version": __version__, "entries": entries}
    _atomic_write(directory / MANIFEST, _json_bytes(manifest))
    return directory


def read_stack(directory):
    from .scan import MapStack, ScanMap

    directory = Path(directory)
    manifest_path = directory / MANIFEST
    if not manifest_path.exists():
        raise FileNotFoundError(f"{manifest_path}: no stack manifest")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    maps, values = [], []
    for e in manifest["entries"]:
        f = directory / e["file"]
        if not f.exists():
            raise FileNotFoundError(f"{f}: listed in manifest but missing")
        mf = read_map(f)
        ny, nx = mf.values.shape
        x0, y0 = mf.origin
        xs = x0 + mf.dx * (np.arange(nx) + 0.5)
        ys = y0 + mf.dx * (np.arange(ny) + 0.5)
        maps.append(ScanMap(manifest.get("channel", ""), xs, ys, mf.dx,
                            mf.values.astype(np.float64)))
        values.append(float(e["value"]))
    return MapStack(manifest["parameter"], np.array(values), tuple(maps),
                    manifest.get("fingerprint", ""), manifest.get("channel", "nfpc"))


# -- curves -----------------------------------------------------------------

def write_curve(path, columns: Sequence[tuple[str, str, Sequence[float]]],
                metadata: Mapping[str, Any] | None = None) -> Path:
    """CSV with ``# key: value`` comment lines, a header row and a units row."""
    buf = _io.StringIO()
    meta = {"version": __version__, **(metadata or {})}
    for k in sorted(meta):
        buf.write(f"# {k}: {meta[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c[0] for c in columns])
    w.writerow([c[1] for c in columns])
    n = {len(c[2]) for c in columns}
    if len(n) != 1:
        raise ValueError("curve columns must have equal length")
    for row in zip(*(c[2] for c in columns)):
        w.writerow([repr(float(v)) for v in row])
    _atomic_write(Path(path), buf.getvalue().encode("utf-8"))
    return Path(path)


def read_curve(path) -> tuple[dict[str, np.ndarray], dict[str, str], dict[str, str]]:
    """Returns (columns, units, metadata)."""
    meta, rows = {}, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition(":")
                meta[k.strip()] = v.strip()
            elif line.strip():
                rows.append(line)
    r = list(csv.reader(rows))
    names, units = r[0], r[1]
    data = np.array([[float(v) for v in row] for row in r[2:]]).reshape(-1, len(names))
    return ({n: data[:, i] for i, n in enumerate(names)}, dict(zip(names, units)), meta)


def read_anchors(path) -> list[tuple[float, float]]:
    """Two-column CSV ``t_raw,t_sample`` with a header row."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty anchor file")
    header = [h.strip().lower() for h in rows[0]]
    if header[:2] != ["t_raw", "t_sample"]:
        raise ValueError(f"{path}: header must be t_raw,t_sample")
    try:
        return [(float(r[0]), float(r[1])) for r in rows[1:]]
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: bad anchor row ({exc})") from exc


# -- renders ----------------------------------------------------------------

def quantize(values: np.ndarray, clip: tuple[float, float] = (1.0, 99.0)) -> tuple[np.ndarray, float, float]:
    """Linear map of [p_lo, p_hi] percentiles onto 0..255 (round half to even)."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot render an empty map")
    lo, hi = np.percentile(v, clip)
    if hi > lo:
        scaled = np.clip((v - lo) / (hi - lo), 0.0, 1.0)
    else:
        scaled = np.zeros_like(v)
    return np.rint(scaled * 255.0).astype(np.uint8), float(lo), float(hi)


def export_render(values, path, colormap: str = "gray", clip: tuple[float, float] = (1.0, 99.0),
                  metadata: Mapping[str, Any] | None = None) -> Path:
    """8-bit PNG; row 0 of the map is the bottom image row."""
    from PIL import Image
    from PIL.PngImagePlugin import PngInfo

    if isinstance(values, (ScalarField2D, MapFile)):
        values = values.values
    elif hasattr(values, "values") and not isinstance(values, np.ndarray):
        values = values.values
    q, lo, hi = quantize(values, clip)
    q = q[::-1]
    if colormap in ("gray", "grey"):
        img = Image.fromarray(q, mode="L")
    else:
        from matplotlib import colormaps

        lut = (colormaps[colormap](np.arange(256))[:, :3] * 255).round().astype(np.uint8)
        img = Image.fromarray(lut[q], mode="RGB")
    info = PngInfo()
    meta = {"version": __version__, "colormap": colormap, "clip_percentiles": list(clip),
            "clip_values": [lo, hi], "quantization": "round(255*clip((v-lo)/(hi-lo),0,1))",
            **(metadata or {})}
    info.add_text("bosonsim", json.dumps(meta, sort_keys=True))
    buf = _io.BytesIO()
    img.save(buf, format="PNG", pnginfo=info)
    _atomic_write(Path(path), buf.getvalue())
    return Path(path)
