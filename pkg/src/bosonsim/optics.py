"""Complex fields on the sample plane and the heating they produce.

Three coherent contributions: the circular polariton wave launched by the
tip, the obliquely incident far-field beam, and the field launched at the Nb
edges. A fourth, incoherent term models direct absorption of the tip's
confined near field right under the apex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage

from .dispersion import CM1_TO_RAD_PER_NM, HBN, METAL, Substrate, slab_mode
from .grid import ComplexField2D, GridSpec, ScalarField2D, _require_same_grid

if TYPE_CHECKING:
    from .scene import Scene


@dataclass(frozen=True)
class FieldParams:
    """Field amplitudes are arbitrary units; lengths nm; angles degrees.

    ``azimuth`` is the in-plane travel direction of the far-field beam,
    measured from +x (180 = toward -x). ``hotspot`` is the amplitude of the
    non-propagating apex field (0 disables it). ``far_field_gradient`` is a
    fractional amplitude change of the far-field beam per um along x.
    """

    E_0: float = 1.0
    a_tip: float = 20.0
    l_0: float = 3000.0
    E_F0: float = 0.002
    pitch: float = 30.0
    azimuth: float = 180.0
    phi_0: float = 0.0
    E_edge: float = 0.01
    edge_decay: float = 30.0
    hotspot: float = 0.05
    absorption_efficiency: float = 1.0
    far_field_gradient: float = 0.0
    frequency: float = 1491.9
    substrate_eps: float = 1.4
    mode_order: int = 0
    ssnom_background: float = 1.0
    ssnom_boundary: float = 0.1
    ssnom_edge_launch: float = 0.05
    ssnom_edge_scatter: float = 0.05

    def __post_init__(self):
        if not self.a_tip > 0:
            raise ValueError("a_tip must be positive")
        if not self.l_0 > 0:
            raise ValueError("l_0 must be positive")
        if not self.edge_decay > 0:
            raise ValueError("edge_decay must be positive")
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        for name in ("E_0", "E_F0", "E_edge", "hotspot", "absorption_efficiency"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def region_wavevectors(scene: "Scene") -> list[tuple[float, float]]:
    """(q over Nb, q off Nb) in rad/nm for each hBN region."""
    model = scene.material or HBN
    p = scene.optics
    out = []
    for region in scene.hbn_regions:
        q_metal = slab_mode(model, p.frequency, region.thickness, METAL, p.mode_order).q
        q_diel = slab_mode(model, p.frequency, region.thickness,
                           Substrate("dielectric", p.substrate_eps), p.mode_order).q
        out.append((q_metal, q_diel))
    return out


def polariton_q_map(scene: "Scene") -> np.ndarray:
    """Per-cell polariton wavevector; 0 outside hBN."""
    q_map = np.zeros(scene.grid.shape)
    for k, (q_metal, q_diel) in enumerate(region_wavevectors(scene)):
        m = scene.hbn_index == k
        q_map[m & scene.conductor_mask] = q_metal
        q_map[m & ~scene.conductor_mask] = q_diel
    return q_map


def tip_field_values(grid: GridSpec, params: FieldParams, r_tip, q_map: np.ndarray,
                     X=None, Y=None) -> np.ndarray:
    X, Y = grid.mesh() if X is None else (X, Y)
    rho = np.hypot(X - r_tip[0], Y - r_tip[1])
    amp = params.E_0 * np.exp(-rho / params.l_0) / (params.a_tip + rho)
    return np.where(q_map > 0, amp * np.exp(1j * q_map * rho), 0.0)


def tip_field(scene: "Scene", params: FieldParams, r_tip, q_map: np.ndarray) -> ComplexField2D:
    """Circular polariton wave centred on the tip, phase q |r - r_tip| with local q."""
    return ComplexField2D(scene.grid, tip_field_values(scene.grid, params, r_tip, q_map))


def hotspot_intensity(grid: GridSpec, params: FieldParams, r_tip, X=None, Y=None) -> np.ndarray:
    """|E|^2 of the apex near field, (a^2 / (a^2 + rho^2))^3 profile."""
    X, Y = grid.mesh() if X is None else (X, Y)
    rho2 = (X - r_tip[0]) ** 2 + (Y - r_tip[1]) ** 2
    a2 = params.a_tip**2
    return params.hotspot**2 * (a2 / (a2 + rho2)) ** 3


def far_field(scene: "Scene", params: FieldParams, frequency: float | None = None) -> ComplexField2D:
    """Plane wave with the in-plane projection of the free-space wavevector."""
    frequency = params.frequency if frequency is None else frequency
    if not frequency > 0:
        raise ValueError("frequency must be positive")
    k_inplane = frequency * CM1_TO_RAD_PER_NM * np.cos(np.radians(params.pitch))
    az = np.radians(params.azimuth)
    X, Y = scene.grid.mesh()
    phase = k_inplane * (np.cos(az) * X + np.sin(az) * Y) + params.phi_0
    amp = params.E_F0 * np.ones_like(X)
    if params.far_field_gradient:
        xc = X - scene.grid.x_centers().mean()
        amp = amp * np.clip(1.0 + params.far_field_gradient * xc / 1000.0, 0.0, None)
    return ComplexField2D(scene.grid, amp * np.exp(1j * phase))


def edge_cells(conductor_mask: np.ndarray) -> np.ndarray:
    """Conductor cells with a 4-neighbour outside the conductor (grid border excluded)."""
    m = np.asarray(conductor_mask, dtype=bool)
    padded = np.pad(m, 1, mode="edge")
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:])
    return m & ~interior


def edge_field(scene: "Scene", params: FieldParams, q_map: np.ndarray | None = None,
               cutoff: float = 12.0) -> ComplexField2D:
    """Field launched at Nb edges: E_edge exp(-d/decay) exp(i q d).

    ``d`` is the distance to the nearest edge cell. The field lives on edge
    cells and extends into hBN-covered cells; it is cut off beyond
    ``cutoff`` decay lengths.
    """
    q_map = polariton_q_map(scene) if q_map is None else q_map
    edges = edge_cells(scene.conductor_mask)
    if not edges.any():
        return ComplexField2D(scene.grid, np.zeros(scene.grid.shape, dtype=complex))
    d = ndimage.distance_transform_edt(~edges) * scene.grid.dx
    support = (edges | (q_map > 0)) & (d <= cutoff * params.edge_decay)
    vals = params.E_edge * np.exp(-d / params.edge_decay) * np.exp(1j * q_map * d)
    return ComplexField2D(scene.grid, np.where(support, vals, 0.0))


def heating_values(total: np.ndarray, dx: float, incident_power: float,
                   efficiency: float = 1.0, extra: np.ndarray | None = None) -> np.ndarray:
    """Absorbed power density (nW/um^2) from a summed complex field array."""
    P = np.abs(total) ** 2
    if extra is not None:
        P = P + extra
    cell_area = (dx * 1e-3) ** 2
    s = P.sum() * cell_area
    if s == 0:
        return P
    return P * (incident_power * efficiency / s)


def heating_profile(E_p: ComplexField2D, E_F: ComplexField2D, E_Nb: ComplexField2D,
                    incident_power: float, efficiency: float = 1.0,
                    extra_intensity: np.ndarray | None = None) -> ScalarField2D:
    """|E_p + E_F + E_Nb|^2 scaled so the grid integral is power x efficiency.

    Returns an absorbed power density in nW/um^2. ``extra_intensity`` is added
    incoherently before scaling (the apex hotspot).
    """
    _require_same_grid(E_p.grid, E_F.grid)
    _require_same_grid(E_p.grid, E_Nb.grid)
    if incident_power < 0:
        raise ValueError("incident power must be non-negative")
    total = E_p.values + E_F.values + E_Nb.values
    return ScalarField2D(E_p.grid, heating_values(total, E_p.grid.dx, incident_power,
                                                  efficiency, extra_intensity))
