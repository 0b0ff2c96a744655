"""Raster-scan engine: per-tip-position photocurrent and s-SNOM signals.

Every pixel is computed from read-only precomputed scene data, so pixel
values do not depend on evaluation order or on how the scan is split
across workers.
"""

from __future__ import annotations

import os
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .grid import GridSpec, ScalarField2D
from .optics import (
    edge_cells,
    edge_field,
    far_field,
    heating_values,
    hotspot_intensity,
    polariton_q_map,
    tip_field_values,
)
from .scene import Scene, current_density
from .superconductor import resistance
from .thermal import Diffuser

Channel = Literal["nfpc", "ssnom"]
Parameter = Literal["temperature", "bias", "field"]


@dataclass(frozen=True)
class ScanSpec:
    """Scan window (x0, y0, x1, y1) in nm, inclusive of both corners when
    they fall on the step lattice. Tip positions run row-major from (x0, y0)."""

    window: tuple[float, float, float, float]
    step: float
    channels: tuple[Channel, ...] = ("nfpc",)
    noise_sigma: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        x0, y0, x1, y1 = self.window
        if x1 < x0 or y1 < y0:
            raise ValueError("scan window corners must be ordered (x0 <= x1, y0 <= y1)")
        if not self.step > 0:
            raise ValueError("scan step must be positive")
        for c in self.channels:
            if c not in ("nfpc", "ssnom"):
                raise ValueError(f"unknown channel {c!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")

    def validate(self, grid: GridSpec) -> None:
        if self.step < grid.dx * (1 - 1e-12):
            raise ValueError(f"scan step {self.step} nm is finer than the grid ({grid.dx} nm)")
        x0, y0, x1, y1 = self.window
        if not (grid.contains(x0, y0) and grid.contains(x1, y1)):
            raise ValueError(f"scan window {self.window} exceeds the scene extent {grid.bounds}")

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        x0, y0, x1, y1 = self.window
        nx = int(np.floor((x1 - x0) / self.step + 1e-9)) + 1
        ny = int(np.floor((y1 - y0) / self.step + 1e-9)) + 1
        return x0 + self.step * np.arange(nx), y0 + self.step * np.arange(ny)


@dataclass(frozen=True, eq=False)
class ScanMap:
    """Image from one channel. ``values`` has shape (len(ys), len(xs))."""

    channel: str
    xs: np.ndarray
    ys: np.ndarray
    step: float
    values: np.ndarray = field(repr=False)

    def as_field(self) -> ScalarField2D:
        """ScalarField2D view; needs at least 2 positions along each axis."""
        grid = GridSpec(len(self.xs), len(self.ys), self.step,
                        (self.xs[0] - 0.5 * self.step, self.ys[0] - 0.5 * self.step))
        return ScalarField2D(grid, self.values)


class SimContext:
    """Scene-derived data shared by all tip positions (read-only)."""

    def __init__(self, scene: Scene):
        self.scene = scene
        grid = scene.grid
        self.X, self.Y = grid.mesh()
        self.q_map = polariton_q_map(scene)
        self.has_polariton = bool(np.any(self.q_map > 0))
        self.E_F = far_field(scene, scene.optics).values
        self.E_Nb = edge_field(scene, scene.optics, self.q_map).values
        self.background = self.E_F + self.E_Nb
        unit = current_density(scene.with_conditions(bias_current=1.0))
        jm = unit.magnitude
        self.cells = np.flatnonzero(jm > 0)
        self.j_unit = jm.ravel()[self.cells]
        self.tc_cells = scene.tc_map.ravel()[self.cells]
        self.diffuser = Diffuser(grid, scene.thermal, scene.sc.eta, scene.conductor_mask)
        # s-SNOM scatterers
        hbn = scene.hbn_index >= 0
        padded = np.pad(hbn, 1, mode="edge")
        interior = padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
        natural = hbn & ~interior
        nb = edge_cells(scene.conductor_mask) & (self.q_map > 0)
        self.natural_xy = np.stack([self.X[natural], self.Y[natural]], axis=1)
        self.nb_xy = np.stack([self.X[nb], self.Y[nb]], axis=1)

    def heating(self, r_tip, power: float) -> np.ndarray:
        """Absorbed power density (nW/um^2) on the full grid for one tip position."""
        p = self.scene.optics
        grid = self.scene.grid
        if self.has_polariton:
            total = tip_field_values(grid, p, r_tip, self.q_map, self.X, self.Y) + self.background
        else:
            total = self.background
        hot = hotspot_intensity(grid, p, r_tip, self.X, self.Y) if p.hotspot > 0 else None
        return heating_values(total, grid.dx, power, p.absorption_efficiency, hot)

    def temperature_rise(self, r_tip, power: float, full: bool = False) -> np.ndarray:
        """Temperature rise (K) on the current-carrying cells, or the whole grid."""
        T = self.diffuser.apply(self.heating(r_tip, power))
        return T if full else T.ravel()[self.cells]

    def delta_current(self, T_rise: np.ndarray, T: float, I: float, B: float) -> float:
        """delta I = sign(I) sum |j| (R(T + dT) - R(T)) dx^2 for one tip position."""
        if I == 0 or self.cells.size == 0:
            return 0.0
        sc = self.scene.sc
        dR = (resistance(sc, T + T_rise, I, B, self.tc_cells)
              - resistance(sc, T, I, B, self.tc_cells))
        return float(I * np.dot(self.j_unit, dR) * self.scene.grid.dx**2)

    def ssnom(self, r_tip) -> complex:
        p = self.scene.optics
        s = complex(p.ssnom_background)
        row, col = self.scene.grid.index_of(*r_tip)
        q = self.q_map[row, col]
        if q <= 0:
            return s
        dx = self.scene.grid.dx
        if len(self.natural_xy):
            d = np.hypot(self.natural_xy[:, 0] - r_tip[0], self.natural_xy[:, 1] - r_tip[1])
            path = 2.0 * d
            s += p.ssnom_boundary * dx * np.sum(
                np.exp(1j * q * path - path / p.l_0) / np.sqrt(p.a_tip + path))
        if len(self.nb_xy):
            d = np.hypot(self.nb_xy[:, 0] - r_tip[0], self.nb_xy[:, 1] - r_tip[1])
            amp = p.ssnom_edge_launch + p.ssnom_edge_scatter
            s += amp * dx * np.sum(np.exp(1j * q * d - d / p.l_0) / np.sqrt(p.a_tip + d))
        return s


_contexts: "weakref.WeakKeyDictionary[Scene, SimContext]" = weakref.WeakKeyDictionary()


def context(scene: Scene) -> SimContext:
    ctx = _contexts.get(scene)
    if ctx is None:
        ctx = SimContext(scene)
        _contexts[scene] = ctx
    return ctx


def _conditions(scene, T, I_bias, B):
    return (scene.bath_temperature if T is None else float(T),
            scene.bias_current if I_bias is None else float(I_bias),
            scene.magnetic_field if B is None else float(B))


def nfpc_at(scene: Scene, r_tip, T=None, I_bias=None, B=None, power: float = 100.0) -> float:
    """Near-field photocurrent for the tip at ``r_tip`` (nm). Arbitrary units."""
    if not scene.grid.contains(*r_tip):
        raise ValueError(f"tip position {tuple(r_tip)} outside the scene")
    T, I, B = _conditions(scene, T, I_bias, B)
    if I == 0:
        return 0.0
    ctx = context(scene)
    return ctx.delta_current(ctx.temperature_rise(r_tip, power), T, I, B)


def ssnom_at(scene: Scene, r_tip) -> complex:
    """Complex s-SNOM signal for the tip at ``r_tip``; frequency is the scene's."""
    if not scene.grid.contains(*r_tip):
        raise ValueError(f"tip position {tuple(r_tip)} outside the scene")
    return context(scene).ssnom(r_tip)


def _workers() -> int:
    n = int(os.environ.get("BOSON_THREADS", "0") or 0)
    return n if n > 0 else (os.cpu_count() or 1)


def _run_pixels(fn, xs, ys, n_out: int, workers: int | None) -> np.ndarray:
    """Evaluate fn(x, y) -> array(n_out) on every position; rows in parallel."""
    out = np.zeros((n_out, len(ys), len(xs)))

    def row(i):
        for j, x in enumerate(xs):
            out[:, i, j] = fn(x, ys[i])

    workers = _workers() if workers is None else workers
    if workers <= 1 or len(ys) == 1:
        for i in range(len(ys)):
            row(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(row, range(len(ys))))
    return out


def _add_noise(values: np.ndarray, spec: ScanSpec, salt: int) -> np.ndarray:
    if spec.noise_sigma == 0:
        return values
    rng = np.random.default_rng([spec.noise_seed, salt])
    return values + rng.normal(0.0, spec.noise_sigma, values.shape)


def scan(scene: Scene, spec: ScanSpec, T=None, I_bias=None, B=None, power: float = 100.0,
         workers: int | None = None) -> dict[str, ScanMap]:
    """Raster scan; one map per requested channel (|s| for s-SNOM)."""
    spec.validate(scene.grid)
    T, I, B = _conditions(scene, T, I_bias, B)
    ctx = context(scene)
    xs, ys = spec.positions()
    maps = {}
    for salt, ch in enumerate(spec.channels):
        if ch == "nfpc":
            if I == 0:
                vals = np.zeros((len(ys), len(xs)))
            else:
                vals = _run_pixels(
                    lambda x, y: ctx.delta_current(ctx.temperature_rise((x, y), power), T, I, B),
                    xs, ys, 1, workers)[0]
        else:
            vals = _run_pixels(lambda x, y: abs(ctx.ssnom((x, y))), xs, ys, 1, workers)[0]
        maps[ch] = ScanMap(ch, xs, ys, spec.step, _add_noise(vals, spec, salt))
    return maps


@dataclass(frozen=True, eq=False)
class MapStack:
    parameter: str
    values: np.ndarray
    maps: tuple[ScanMap, ...]
    fingerprint: str = ""
    channel: str = "nfpc"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if len(v) != len(self.maps):
            raise ValueError("one map per parameter value required")
        if len(v) > 1:
            d = np.diff(v)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError("stack parameter values must be strictly monotone")
        shapes = {m.values.shape for m in self.maps}
        if len(shapes) > 1:
            raise ValueError("stack maps must share one grid")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.maps)

    @property
    def step(self) -> float:
        return self.maps[0].step

    def array(self) -> np.ndarray:
        """(n_values, ny, nx) array."""
        return np.stack([m.values for m in self.maps])


UNITS = {"temperature": "K", "bias": "uA", "field": "T"}


def sweep(scene: Scene, spec: ScanSpec, parameter: Parameter, values: Sequence[float],
          T=None, I_bias=None, B=None, power: float = 100.0, channel: Channel = "nfpc",
          workers: int | None = None) -> MapStack:
    """Stack of scans over one control parameter, all else fixed.

    The temperature rise for a tip position does not depend on T, I or B,
    so it is computed once per pixel and reused for every parameter value.
    """
    if parameter not in UNITS:
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) == 0:
        raise ValueError("sweep needs at least one value")
    spec.validate(scene.grid)
    T, I, B = _conditions(scene, T, I_bias, B)
    ctx = context(scene)
    xs, ys = spec.positions()
    combos = []
    for v in values:
        combos.append({"temperature": (v, I, B), "bias": (T, v, B), "field": (T, I, v)}[parameter])
    if channel == "ssnom":
        base = _run_pixels(lambda x, y: abs(ctx.ssnom((x, y))), xs, ys, 1, workers)[0]
        cube = np.repeat(base[None], len(values), axis=0)
    else:
        if any(c[2] < 0 for c in combos):
            raise ValueError("magnetic field must be non-negative")

        def pixel(x, y):
            if all(c[1] == 0 for c in combos):
                return np.zeros(len(combos))
            rise = ctx.temperature_rise((x, y), power)
            return np.array([ctx.delta_current(rise, *c) for c in combos])

        cube = _run_pixels(pixel, xs, ys, len(combos), workers)
    maps = tuple(ScanMap(channel, xs, ys, spec.step, _add_noise(cube[k], spec, k))
                 for k in range(len(values)))
    return MapStack(parameter, values, maps, scene.fingerprint, channel)
