"""Scene description: geometry, materials and the DC bias current solve.

Config units: lengths nm, temperatures K, currents uA, fields T,
frequencies cm^-1, powers nW.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import spsolve
from shapely.geometry import LinearRing

from .config import ConfigError, from_mapping, fingerprint, to_plain
from .dispersion import AnisotropicDielectric
from .grid import GridSpec, ScalarField2D
from .optics import FieldParams
from .superconductor import SCParams
from .thermal import ThermalParams

Point = tuple[float, float]
Polygon = tuple[Point, ...]


@dataclass(frozen=True)
class GridConfig:
    nx: int
    ny: int
    dx: float
    origin: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class ConductorConfig:
    polygons: tuple[Polygon, ...] = ()
    cutouts: tuple[Polygon, ...] = ()
    tc: float = 8.5


@dataclass(frozen=True)
class BridgeConfig:
    polygon: Polygon
    tc: float


@dataclass(frozen=True)
class DefectConfig:
    center: Point
    radius: float
    depth: float


@dataclass(frozen=True)
class HbnConfig:
    polygon: Polygon
    thickness: float


@dataclass(frozen=True)
class ElectrodeConfig:
    source: tuple[Point, Point]
    drain: tuple[Point, Point]


@dataclass(frozen=True)
class ConditionsConfig:
    bias_current: float = 10.0
    bath_temperature: float = 8.0
    magnetic_field: float = 0.0


@dataclass(frozen=True)
class SceneConfig:
    grid: GridConfig
    conductor: ConductorConfig
    electrodes: ElectrodeConfig
    name: str = "scene"
    bridges: tuple[BridgeConfig, ...] = ()
    defects: tuple[DefectConfig, ...] = ()
    hbn: tuple[HbnConfig, ...] = ()
    conditions: ConditionsConfig = ConditionsConfig()
    superconductor: SCParams = SCParams()
    optics: FieldParams = FieldParams()
    thermal: ThermalParams = ThermalParams()
    material: Optional[AnisotropicDielectric] = None


@dataclass(frozen=True, eq=False)
class Scene:
    """Rasterized, immutable simulation domain.

    ``hbn_index`` holds the hBN region number per cell (-1 = none);
    ``region_mask`` flags cells inside any bridge or defect.
    """

    grid: GridSpec
    conductor_mask: np.ndarray = field(repr=False)
    tc_map: np.ndarray = field(repr=False)
    hbn_regions: tuple[HbnConfig, ...]
    hbn_index: np.ndarray = field(repr=False)
    source_mask: np.ndarray = field(repr=False)
    drain_mask: np.ndarray = field(repr=False)
    bridge_mask: np.ndarray = field(repr=False)
    bias_current: float
    bath_temperature: float
    magnetic_field: float
    sc: SCParams
    optics: FieldParams
    thermal: ThermalParams
    material: Optional[AnisotropicDielectric]
    config: Mapping[str, Any] = field(repr=False)
    fingerprint: str = ""

    def __post_init__(self):
        for name in ("conductor_mask", "tc_map", "hbn_index", "source_mask", "drain_mask",
                     "bridge_mask"):
            getattr(self, name).setflags(write=False)

    def with_conditions(self, **changes) -> "Scene":
        """Copy with bias_current / bath_temperature / magnetic_field replaced."""
        allowed = {"bias_current", "bath_temperature", "magnetic_field"}
        bad = set(changes) - allowed
        if bad:
            raise TypeError(f"cannot override {sorted(bad)}")
        from dataclasses import replace
        return replace(self, **changes)


class SceneError(ValueError):
    pass


class NoPathError(SceneError):
    """Source and drain are not connected through the conductor."""


def polygon_mask(grid: GridSpec, polygon, tol: float = 1e-9) -> np.ndarray:
    """Cells whose centre lies inside the polygon; points on an edge count as inside."""
    X, Y = grid.mesh()
    pts = np.asarray(polygon, dtype=float)
    inside = np.zeros(X.shape, dtype=bool)
    on_edge = np.zeros(X.shape, dtype=bool)
    n = len(pts)
    for k in range(n):
        (x1, y1), (x2, y2) = pts[k], pts[(k + 1) % n]
        crosses = (y1 > Y) != (y2 > Y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_int = x1 + (Y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (X < x_int)
        # distance from cell centres to the segment
        ex, ey = x2 - x1, y2 - y1
        L2 = ex * ex + ey * ey
        t = np.clip(((X - x1) * ex + (Y - y1) * ey) / L2, 0.0, 1.0) if L2 > 0 else 0.0
        d = np.hypot(X - (x1 + t * ex), Y - (y1 + t * ey))
        on_edge |= d <= tol * max(1.0, grid.dx)
    return inside | on_edge


def segment_mask(grid: GridSpec, p0, p1) -> np.ndarray:
    """Cells whose centre is within dx/2 of the segment (ties inside)."""
    X, Y = grid.mesh()
    (x1, y1), (x2, y2) = p0, p1
    ex, ey = x2 - x1, y2 - y1
    L2 = ex * ex + ey * ey
    t = np.clip(((X - x1) * ex + (Y - y1) * ey) / L2, 0.0, 1.0) if L2 > 0 else 0.0
    d = np.hypot(X - (x1 + t * ex), Y - (y1 + t * ey))
    return d <= 0.5 * grid.dx * (1 + 1e-9)


def _check_polygon(grid: GridSpec, polygon, path: str) -> None:
    if len(polygon) < 3:
        raise ConfigError(path, "polygon needs at least 3 vertices")
    if not LinearRing(polygon).is_simple:
        raise ConfigError(path, "polygon is self-intersecting")
    xmin, ymin, xmax, ymax = grid.bounds
    for k, (x, y) in enumerate(polygon):
        if not (xmin <= x <= xmax and ymin <= y <= ymax):
            raise ConfigError(f"{path}[{k}]", f"vertex ({x}, {y}) lies outside the grid")


def parse_config(data: Mapping[str, Any]) -> SceneConfig:
    return from_mapping(SceneConfig, data)


def load_config(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def build_scene(config: Mapping[str, Any] | SceneConfig) -> Scene:
    """Rasterize a scene description. Raises ConfigError/SceneError on bad input."""
    cfg = config if isinstance(config, SceneConfig) else parse_config(config)
    plain = to_plain(cfg)
    grid = GridSpec(cfg.grid.nx, cfg.grid.ny, cfg.grid.dx, cfg.grid.origin)

    conductor = np.zeros(grid.shape, dtype=bool)
    for k, poly in enumerate(cfg.conductor.polygons):
        _check_polygon(grid, poly, f"conductor.polygons[{k}]")
        conductor |= polygon_mask(grid, poly)
    for k, poly in enumerate(cfg.conductor.cutouts):
        _check_polygon(grid, poly, f"conductor.cutouts[{k}]")
        conductor &= ~polygon_mask(grid, poly)
    if not cfg.conductor.tc > 0:
        raise ConfigError("conductor.tc", "critical temperature must be positive")

    tc_map = np.where(conductor, cfg.conductor.tc, 0.0)
    bridge_mask = np.zeros(grid.shape, dtype=bool)
    assigned = np.full(grid.shape, np.nan)
    for k, br in enumerate(cfg.bridges):
        path = f"bridges[{k}]"
        _check_polygon(grid, br.polygon, f"{path}.polygon")
        if not br.tc > 0:
            raise ConfigError(f"{path}.tc", "critical temperature must be positive")
        m = polygon_mask(grid, br.polygon)
        if np.any(m & ~conductor):
            raise SceneError(f"{path}: bridge region extends outside the conductor")
        clash = m & np.isfinite(assigned) & (assigned != br.tc)
        if np.any(clash):
            raise SceneError(f"{path}: overlaps another bridge with a different T_c")
        assigned[m] = br.tc
        tc_map[m] = br.tc
        bridge_mask |= m

    X, Y = grid.mesh()
    for k, d in enumerate(cfg.defects):
        path = f"defects[{k}]"
        if not d.radius > 0:
            raise ConfigError(f"{path}.radius", "radius must be positive")
        if d.depth < 0:
            raise ConfigError(f"{path}.depth", "depth must be non-negative")
        if not grid.contains(*d.center):
            raise ConfigError(f"{path}.center", "defect centre outside the grid")
        m = (np.hypot(X - d.center[0], Y - d.center[1]) <= d.radius) & conductor
        if not m.any():
            raise SceneError(f"{path}: defect does not touch the conductor")
        tc_map[m] -= d.depth
        bridge_mask |= m
    if np.any(tc_map[conductor] <= 0):
        raise SceneError("defects depress the local T_c to zero or below")

    hbn_index = -np.ones(grid.shape, dtype=np.int64)
    thick = np.full(grid.shape, np.nan)
    for k, h in enumerate(cfg.hbn):
        path = f"hbn[{k}]"
        _check_polygon(grid, h.polygon, f"{path}.polygon")
        if not h.thickness > 0:
            raise ConfigError(f"{path}.thickness", "thickness must be positive")
        m = polygon_mask(grid, h.polygon)
        clash = m & np.isfinite(thick) & (thick != h.thickness)
        if np.any(clash):
            raise SceneError(f"{path}: overlaps another hBN region with a different thickness")
        fresh = m & (hbn_index < 0)
        hbn_index[fresh] = k
        thick[m] = h.thickness

    masks = {}
    for label in ("source", "drain"):
        seg = getattr(cfg.electrodes, label)
        m = segment_mask(grid, *seg) & conductor
        if not m.any():
            raise SceneError(f"electrodes.{label}: segment does not touch the conductor")
        masks[label] = m
    if np.any(masks["source"] & masks["drain"]):
        raise SceneError("electrodes: source and drain overlap")

    cond = cfg.conditions
    if cond.bath_temperature < 0:
        raise ConfigError("conditions.bath_temperature", "must be non-negative")
    if cond.magnetic_field < 0:
        raise ConfigError("conditions.magnetic_field", "must be non-negative")

    return Scene(
        grid=grid,
        conductor_mask=conductor,
        tc_map=tc_map,
        hbn_regions=tuple(cfg.hbn),
        hbn_index=hbn_index,
        source_mask=masks["source"],
        drain_mask=masks["drain"],
        bridge_mask=bridge_mask,
        bias_current=cond.bias_current,
        bath_temperature=cond.bath_temperature,
        magnetic_field=cond.magnetic_field,
        sc=cfg.superconductor,
        optics=cfg.optics,
        thermal=cfg.thermal,
        material=cfg.material,
        config=plain,
        fingerprint=fingerprint(plain),
    )


@dataclass(frozen=True, eq=False)
class CurrentDensity:
    """Cell-centred bias current density (uA per nm of cross-section), the
    mean of the face currents on the conducting faces of each cell.

    ``face_x[i, j]`` is the current (uA) through the face between cells
    (i, j) and (i, j + 1), positive toward +x; ``face_y`` likewise along y.
    """

    grid: GridSpec
    jx: np.ndarray = field(repr=False)
    jy: np.ndarray = field(repr=False)
    face_x: np.ndarray = field(repr=False)
    face_y: np.ndarray = field(repr=False)
    potential: np.ndarray = field(repr=False)

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.jx, self.jy)

    def magnitude_field(self) -> ScalarField2D:
        return ScalarField2D(self.grid, self.magnitude)


def _unit_potential(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    """Potential with source at 1 and drain at 0, plus the active-cell mask."""
    cond = scene.conductor_mask
    labels, _ = ndimage.label(cond)
    src_labels = set(np.unique(labels[scene.source_mask])) - {0}
    drn_labels = set(np.unique(labels[scene.drain_mask])) - {0}
    shared = src_labels & drn_labels
    if not shared:
        raise NoPathError("no conducting path between source and drain")
    active = np.isin(labels, sorted(shared))
    src = scene.source_mask & active
    drn = scene.drain_mask & active

    fixed = src | drn
    free = active & ~fixed
    idx = -np.ones(cond.shape, dtype=np.int64)
    n = int(free.sum())
    idx[free] = np.arange(n)
    V_fixed = np.where(src, 1.0, 0.0)

    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    rhs = np.zeros(n)
    ny, nx = cond.shape
    for di, dj in ((0, 1), (1, 0)):
        a_sl = (slice(0, ny - di), slice(0, nx - dj))
        b_sl = (slice(di, ny), slice(dj, nx))
        link = active[a_sl] & active[b_sl]
        ia, ib = idx[a_sl][link], idx[b_sl][link]
        fa, fb = fixed[a_sl][link], fixed[b_sl][link]
        va, vb = V_fixed[a_sl][link], V_fixed[b_sl][link]
        # free-free couplings
        ff = (ia >= 0) & (ib >= 0)
        rows += [ia[ff], ib[ff]]
        cols += [ib[ff], ia[ff]]
        vals += [-np.ones(ff.sum()), -np.ones(ff.sum())]
        np.add.at(diag, ia[ia >= 0], 1.0)
        np.add.at(diag, ib[ib >= 0], 1.0)
        # free-fixed couplings move to the right-hand side
        m = (ia >= 0) & fb
        np.add.at(rhs, ia[m], vb[m])
        m = (ib >= 0) & fa
        np.add.at(rhs, ib[m], va[m])

    V = V_fixed.copy()
    if n:
        A = sparse.csr_matrix(
            (np.concatenate(vals + [diag]),
             (np.concatenate(rows + [np.arange(n)]), np.concatenate(cols + [np.arange(n)]))),
            shape=(n, n),
        )
        V[free] = spsolve(A.tocsc(), rhs)
    V[~active] = 0.0
    return V, active


def current_density(scene: Scene) -> CurrentDensity:
    """Solve the conduction problem and scale it to ``scene.bias_current``.

    Uniform sheet conductance on conductor cells, Dirichlet potentials on the
    electrodes, no flux across the conductor boundary. Conductor islands not
    connected to both electrodes carry no current.
    """
    V, active = _unit_potential(scene)
    fx = np.where(active[:, :-1] & active[:, 1:], V[:, :-1] - V[:, 1:], 0.0)
    fy = np.where(active[:-1, :] & active[1:, :], V[:-1, :] - V[1:, :], 0.0)
    # current leaving the source: flow across every face with a source cell on one side
    src = scene.source_mask & active
    total = (
        np.sum(fx[src[:, :-1] & ~src[:, 1:]]) - np.sum(fx[~src[:, :-1] & src[:, 1:]])
        + np.sum(fy[src[:-1, :] & ~src[1:, :]]) - np.sum(fy[~src[:-1, :] & src[1:, :]])
    )
    scale = scene.bias_current / total
    fx = fx * scale
    fy = fy * scale
    dx = scene.grid.dx
    ny, nx = scene.grid.shape
    jx = np.zeros((ny, nx))
    jy = np.zeros((ny, nx))
    nfx = np.zeros((ny, nx))
    nfy = np.zeros((ny, nx))
    lx = (active[:, :-1] & active[:, 1:]).astype(float)
    ly = (active[:-1, :] & active[1:, :]).astype(float)
    jx[:, :-1] += fx
    jx[:, 1:] += fx
    jy[:-1, :] += fy
    jy[1:, :] += fy
    nfx[:, :-1] += lx
    nfx[:, 1:] += lx
    nfy[:-1, :] += ly
    nfy[1:, :] += ly
    # average over the faces a cell actually has
    jx /= np.maximum(nfx, 1.0) * dx
    jy /= np.maximum(nfy, 1.0) * dx
    jx[~active] = 0.0
    jy[~active] = 0.0
    return CurrentDensity(scene.grid, jx, jy, fx, fy, V * scale)


def device_resistance(scene: Scene, T, I=None, B=None, current: CurrentDensity | None = None):
    """Transport curve of the device in the photocurrent model's weighting.

    Each conductor cell contributes R(T; local T_c) with weight |j| dx^2 / I,
    the same weight it carries in the photocurrent integral. Returns values
    normalized so a fully normal device gives R_N. ``T`` may be an array.
    """
    from .superconductor import resistance

    I = scene.bias_current if I is None else I
    B = scene.magnetic_field if B is None else B
    if current is None or not np.any(current.magnitude > 0):
        current = current_density(scene.with_conditions(bias_current=1.0))
    jm = current.magnitude
    on = jm > 0
    w = jm[on] / jm[on].sum()
    tc = scene.tc_map[on]
    T = np.atleast_1d(np.asarray(T, dtype=float))
    R = resistance(scene.sc, T[:, None], I, B, tc[None, :])
    return (R * w[None, :]).sum(axis=1)
