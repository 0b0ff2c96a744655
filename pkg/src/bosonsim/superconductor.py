"""Parametric transport model of a superconducting film near its transition.

R(T, I, B) is a logistic step of width ``w`` centred on an effective edge
temperature that is pulled down by the applied field and by the bias current.
The bias coupling is chosen so that R(T, I_c(T)) = R_N / 2, which makes the
resistance-temperature and resistance-bias transition edges coincide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import expit

from .config import from_mapping


@dataclass(frozen=True)
class SCParams:
    """Transport parameters. Units: K, Ohm, uA, T; ``eta`` in K um^2 / nW.

    ``eta`` is the heating responsivity: an absorbed power density of
    1 nW/um^2 spread uniformly raises the film temperature by ``eta`` kelvin.
    """

    T_c0: float = 8.5
    w: float = 0.08
    R_N: float = 10.0
    I_c0: float = 2000.0
    B_c2: float = 4.0
    p_ic: float = 1.5
    eta: float = 1e-3
    runaway_threshold: float = 0.05  # Ohm/uA

    def __post_init__(self):
        for name in ("T_c0", "w", "R_N", "I_c0", "B_c2", "p_ic", "eta", "runaway_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.w >= 0.5 * self.T_c0:
            raise ValueError("transition width must be much smaller than T_c0")


def load_defaults(name: str) -> SCParams:
    """Named parameter set shipped with the package: ``nb_50nm`` or ``nb_20nm``."""
    path = resources.files("bosonsim") / "data" / f"{name}.json"
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise KeyError(f"no superconductor defaults named {name!r}") from None
    data.pop("description", None)
    return from_mapping(SCParams, data, name)


def tc_at_field(params: SCParams, B, local_tc=None):
    """Field-suppressed critical temperature, linear in B up to B_c2."""
    B = np.asarray(B, dtype=float)
    if np.any(B < 0):
        raise ValueError("magnetic field must be non-negative")
    tc = params.T_c0 if local_tc is None else np.asarray(local_tc, dtype=float)
    return tc * np.maximum(0.0, 1.0 - B / params.B_c2)


def critical_current(params: SCParams, T, B=0.0, local_tc=None):
    """I_c = I_c0 (1 - T/T_c(B))^p_ic, zero at and above T_c(B)."""
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise ValueError("temperature must be non-negative")
    tc = tc_at_field(params, B, local_tc)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(tc > 0, 1.0 - T / np.where(tc > 0, tc, 1.0), 0.0)
    return params.I_c0 * np.maximum(0.0, x) ** params.p_ic


def edge_temperature(params: SCParams, I, B=0.0, local_tc=None):
    """T_eff: local T_c(B) reduced by bias proximity."""
    tc = tc_at_field(params, B, local_tc)
    ratio = np.abs(np.asarray(I, dtype=float)) / params.I_c0
    return tc * (1.0 - ratio ** (1.0 / params.p_ic))


def _u(params, T, I, B, local_tc):
    T = np.asarray(T, dtype=float)
    if np.any(T < 0):
        raise ValueError("temperature must be non-negative")
    return (T - edge_temperature(params, I, B, local_tc)) / params.w


def resistance(params: SCParams, T, I=0.0, B=0.0, local_tc=None):
    """R in Ohm. Broadcasts over T, I, B and local_tc."""
    return params.R_N * expit(_u(params, T, I, B, local_tc))


def dR_dT(params: SCParams, T, I=0.0, B=0.0, local_tc=None):
    """Analytic temperature derivative of :func:`resistance` (Ohm/K)."""
    s = expit(_u(params, T, I, B, local_tc))
    return params.R_N * s * (1.0 - s) / params.w


def dR_dI(params: SCParams, T, I, B=0.0, local_tc=None):
    """Derivative of R with respect to |I| (Ohm/uA); infinite slope at I = 0 is clipped."""
    I = np.abs(np.asarray(I, dtype=float))
    tc = tc_at_field(params, B, local_tc)
    s = expit(_u(params, T, I, B, local_tc))
    with np.errstate(divide="ignore"):
        dteff = -tc / params.p_ic * np.where(
            I > 0, (I / params.I_c0) ** (1.0 / params.p_ic - 1.0), 0.0
        ) / params.I_c0
    return params.R_N * s * (1.0 - s) / params.w * (-dteff)


def runaway_flag(params: SCParams, T, I, B=0.0, local_tc=None):
    """True where dR/dI exceeds the configured threshold.

    Marks the switching regime where the measured signal becomes noisy.
    Nothing electrothermal is simulated.
    """
    return dR_dI(params, T, I, B, local_tc) > params.runaway_threshold


def ffpc_response(params: SCParams, T, I_bias, P_abs, B=0.0):
    """Far-field photocurrent I * dR/dT * eta * P_abs (arbitrary units).

    ``P_abs`` is an absorbed power density in nW/um^2.
    """
    P_abs = np.asarray(P_abs, dtype=float)
    if np.any(P_abs < 0):
        raise ValueError("absorbed power must be non-negative")
    I_bias = np.asarray(I_bias, dtype=float)
    return I_bias * dR_dT(params, T, I_bias, B) * params.eta * P_abs


@dataclass(frozen=True)
class BiasSweep:
    current: np.ndarray
    signal: np.ndarray

    def peak(self) -> tuple[float, float]:
        """(|I| at the largest |signal|, that |signal|)."""
        k = int(np.argmax(np.abs(self.signal)))
        return float(abs(self.current[k])), float(abs(self.signal[k]))


def bias_sweep(params: SCParams, T, P_abs, I_range, B=0.0) -> BiasSweep:
    """FFPC versus bias current at fixed bath temperature and absorbed power."""
    I = np.asarray(I_range, dtype=float)
    return BiasSweep(I, ffpc_response(params, T, I, P_abs, B))


_CM2_TO_NM2 = 1e14
_M_TO_NM = 1e9


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")


def thermal_length(D: float, tau_th: float) -> float:
    """Quasiparticle diffusion length sqrt(D tau) in nm. D in cm^2/s, tau in s."""
    _check_positive(D=D, tau_th=tau_th)
    return float(np.sqrt(D * tau_th * _CM2_TO_NM2))


def thermal_length_conduction(kappa: float, tau_th: float, C_e: float) -> float:
    """Thermal conduction length sqrt(kappa tau / C_e) in nm.

    SI units: kappa in W/(m K), tau in s, C_e in J/(m^3 K).
    """
    _check_positive(kappa=kappa, tau_th=tau_th, C_e=C_e)
    return float(np.sqrt(kappa * tau_th / C_e) * _M_TO_NM)
