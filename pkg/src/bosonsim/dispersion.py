"""hBN permittivity and hyperbolic phonon-polariton slab modes.

Frequencies are in cm^-1, lengths in nm, wavevectors in rad/nm.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.optimize import brentq

from .config import from_mapping

CM1_TO_RAD_PER_NM = 2.0 * np.pi * 1e-7


@dataclass(frozen=True)
class Oscillator:
    omega_TO: float
    omega_LO: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (self.omega_LO > self.omega_TO > 0):
            raise ValueError("oscillator needs omega_LO > omega_TO > 0")
        if self.gamma < 0:
            raise ValueError("damping must be non-negative")


@dataclass(frozen=True)
class AxisResponse:
    eps_inf: float
    oscillators: tuple[Oscillator, ...]

    def __post_init__(self):
        if not self.eps_inf > 0:
            raise ValueError("eps_inf must be positive")

    def __call__(self, frequency):
        w = np.asarray(frequency, dtype=float)
        eps = np.ones_like(w, dtype=complex)
        for osc in self.oscillators:
            eps = eps + (osc.omega_LO**2 - osc.omega_TO**2) / (
                osc.omega_TO**2 - w**2 - 1j * osc.gamma * w
            )
        return self.eps_inf * eps


@dataclass(frozen=True)
class AnisotropicDielectric:
    """Uniaxial crystal: ``inplane`` is eps_t (perpendicular to the c axis),
    ``outofplane`` is eps_z (along the c axis)."""

    name: str
    inplane: AxisResponse
    outofplane: AxisResponse
    version: str = "1"


def load_material(path: str | Path | None = None) -> AnisotropicDielectric:
    """Read a material parameter file; the bundled hBN set when ``path`` is None."""
    if path is None:
        text = (resources.files("bosonsim") / "data" / "hbn.json").read_text()
    else:
        text = Path(path).read_text()
    data = json.loads(text)
    data.pop("source", None)
    return from_mapping(AnisotropicDielectric, data, "material")


HBN = load_material()


def permittivity(model: AnisotropicDielectric, frequency):
    """(eps_t, eps_z) at ``frequency`` (cm^-1)."""
    if np.any(np.asarray(frequency) <= 0):
        raise ValueError("frequency must be positive")
    return model.inplane(frequency), model.outofplane(frequency)


class NonHyperbolicError(ValueError):
    pass


def ray_angle(eps_t, eps_z) -> float:
    """Propagation angle in degrees, tan(theta) = sqrt(-eps_z / eps_t)."""
    et, ez = float(np.real(eps_t)), float(np.real(eps_z))
    if not et * ez < 0:
        raise NonHyperbolicError(
            f"permittivity components have the same sign (eps_t={et:g}, eps_z={ez:g})"
        )
    return float(np.degrees(np.arctan(np.sqrt(-ez / et))))


@dataclass(frozen=True)
class Substrate:
    kind: Literal["metal", "dielectric"] = "dielectric"
    eps: float = 1.4

    def __post_init__(self):
        if self.kind == "dielectric" and not self.eps > 0:
            raise ValueError("dielectric substrate needs eps > 0")

    @classmethod
    def parse(cls, text: str) -> "Substrate":
        """``metal``, ``dielectric`` or ``dielectric:<eps>``."""
        kind, _, eps = text.partition(":")
        if kind == "metal" and not eps:
            return cls("metal")
        if kind == "dielectric":
            return cls("dielectric", float(eps)) if eps else cls("dielectric")
        raise ValueError(f"unknown substrate {text!r}")


METAL = Substrate("metal")


@dataclass(frozen=True)
class SlabMode:
    frequency: float
    thickness: float
    substrate: Substrate
    order: int
    q: float
    residual: float

    @property
    def wavelength(self) -> float:
        return 2.0 * np.pi / self.q


class ModeConvergenceError(RuntimeError):
    pass


def _real_eps(model, frequency):
    et, ez = permittivity(model, frequency)
    return float(np.real(et)), float(np.real(ez))


def mode_condition(q, model, frequency, thickness, substrate: Substrate, order=0,
                   superstrate_eps=1.0):
    """TM guided-mode phase condition of an hBN slab; zero at a mode.

    k_z d - phi_top - phi_bottom - pi * order, with k_z the (real) vertical
    wavevector inside the slab and phi the reflection phases at the two
    interfaces. A perfect metal substrate contributes a phase of pi/2.
    Damping is ignored.
    """
    et, ez = _real_eps(model, frequency)
    k0 = frequency * CM1_TO_RAD_PER_NM
    q = np.asarray(q, dtype=float)
    kz = np.sqrt(et * (k0**2 - q**2 / ez))
    k_top = np.sqrt(q**2 - superstrate_eps * k0**2)
    phi_top = np.arctan(superstrate_eps * kz / (-et * k_top))
    if substrate.kind == "metal":
        phi_bottom = np.pi / 2
    else:
        k_bot = np.sqrt(q**2 - substrate.eps * k0**2)
        phi_bottom = np.arctan(substrate.eps * kz / (-et * k_bot))
    return kz * thickness - phi_top - phi_bottom - np.pi * order


def slab_mode(model: AnisotropicDielectric, frequency: float, thickness: float,
              substrate: Substrate = Substrate(), order: int = 0,
              superstrate_eps: float = 1.0) -> SlabMode:
    """Solve for the in-plane wavevector of mode ``order`` of a slab."""
    if not thickness > 0:
        raise ValueError("thickness must be positive")
    if order < 0:
        raise ValueError("mode order must be >= 0")
    et, ez = _real_eps(model, frequency)
    if not (et < 0 < ez):
        raise NonHyperbolicError(
            f"no type-II hyperbolic response at {frequency} cm^-1 "
            f"(eps_t={et:.3g}, eps_z={ez:.3g})"
        )
    k0 = frequency * CM1_TO_RAD_PER_NM
    cladding = max(superstrate_eps, ez, substrate.eps if substrate.kind == "dielectric" else 1.0)
    lo = k0 * np.sqrt(cladding) * (1.0 + 1e-12)
    # k_z grows ~ q / psi, so this is past the root of any order
    psi = np.sqrt(-ez / et)
    hi = max(10 * lo, psi * (np.pi * (order + 2)) / thickness * 4.0)

    def f(q):
        return float(mode_condition(q, model, frequency, thickness, substrate, order,
                                    superstrate_eps))

    f_lo, f_hi = f(lo), f(hi)
    if not (f_lo < 0 < f_hi):
        raise ModeConvergenceError(
            f"root not bracketed for order {order}: F({lo:.4g})={f_lo:.3g}, "
            f"F({hi:.4g})={f_hi:.3g} (thickness={thickness} nm, "
            f"frequency={frequency} cm^-1, substrate={substrate.kind})"
        )
    q = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return SlabMode(float(frequency), float(thickness), substrate, int(order), float(q), f(q))
