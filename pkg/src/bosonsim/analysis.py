"""Data reduction: temperature calibration, transition-edge maps,
integrated stacks, linecuts and fringe wavelengths."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage, optimize, signal

from .grid import ScalarField2D
from .scan import MapStack


# -- temperature calibration ------------------------------------------------

@dataclass(frozen=True)
class CalibrationModel:
    """T_sample = (T_raw^alpha + dT^alpha)^(1/alpha)."""

    alpha: float
    dT: float
    rms_residual: float = 0.0

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if not self.dT >= 0:
            raise ValueError(f"dT must be >= 0, got {self.dT}")


def apply_calibration(model: CalibrationModel, T_raw):
    T_raw = np.asarray(T_raw, dtype=float)
    if np.any(T_raw < 0):
        raise ValueError("raw temperature must be non-negative")
    a = model.alpha
    out = (T_raw**a + model.dT**a) ** (1.0 / a)
    return float(out) if out.ndim == 0 else out


class DegenerateAnchorsError(ValueError):
    pass


def _exact_alpha(anchors, alpha_max=50.0):
    (r1, s1), (r2, s2) = anchors

    def f(a):
        return (s1**a - r1**a) - (s2**a - r2**a)

    grid = np.linspace(1.0, alpha_max, 2000)
    vals = np.array([f(a) for a in grid])
    scale = max(abs(s1**a - r1**a) + abs(s2**a - r2**a) for a in (grid[0], grid[-1]))
    if np.all(np.abs(vals) <= 1e-12 * max(scale, 1e-300)):
        raise DegenerateAnchorsError("anchors leave alpha unidentifiable")
    if vals[0] == 0:
        return 1.0
    change = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)
    if change.size == 0:
        raise DegenerateAnchorsError("no alpha >= 1 reproduces both anchors")
    k = change[0]
    return optimize.brentq(f, grid[k], grid[k + 1], xtol=1e-15, rtol=1e-15, maxiter=500)


def fit_calibration(anchors: Sequence[tuple[float, float]]) -> CalibrationModel:
    """Fit (alpha, dT) to (T_raw, T_sample) anchors.

    Two anchors are solved exactly (root in alpha); more are fitted by least
    squares. The RMS residual in K is stored on the result.
    """
    pts = [(float(r), float(s)) for r, s in anchors]
    if len(pts) < 2:
        raise ValueError("need at least two anchors")
    raws = [r for r, _ in pts]
    if len(set(raws)) != len(raws):
        raise DegenerateAnchorsError("anchors must have distinct raw temperatures")
    for r, s in pts:
        if r < 0 or s < r:
            raise ValueError(f"anchor ({r}, {s}) must satisfy 0 <= T_raw <= T_sample")
    if all(s == r for r, s in pts):
        raise DegenerateAnchorsError("T_sample == T_raw everywhere: dT = 0 and alpha is free")

    if len(pts) == 2:
        alpha = _exact_alpha(pts)
        r1, s1 = pts[0]
        dT = max(s1**alpha - r1**alpha, 0.0) ** (1.0 / alpha)
        model = CalibrationModel(alpha, dT)
    else:
        raw = np.array(raws)
        sample = np.array([s for _, s in pts])

        def resid(p):
            return (raw ** p[0] + p[1] ** p[0]) ** (1.0 / p[0]) - sample

        x0 = [1.5, float(np.max(sample - raw))]
        sol = optimize.least_squares(resid, x0, bounds=([1.0, 0.0], [50.0, np.inf]),
                                     xtol=1e-15, ftol=1e-15, gtol=1e-15)
        model = CalibrationModel(float(sol.x[0]), float(sol.x[1]))
    pred = apply_calibration(model, np.array(raws))
    rms = float(np.sqrt(np.mean((pred - np.array([s for _, s in pts])) ** 2)))
    return CalibrationModel(model.alpha, model.dT, rms)


# -- transition-edge maps ---------------------------------------------------

OK, NO_SIGNAL, BOUNDARY = 0, 1, 2


@dataclass(frozen=True, eq=False)
class TEMap:
    """Per-pixel transition-edge temperature; NaN where masked.

    ``reason`` codes: 0 valid, 1 no signal, 2 peak at the first or last
    stack temperature.
    """

    xs: np.ndarray
    ys: np.ndarray
    step: float
    temperature: np.ndarray = field(repr=False)
    reason: np.ndarray = field(repr=False)
    threshold: float = 0.05

    @property
    def valid(self) -> np.ndarray:
        return self.reason == OK


def _parabolic_vertex(x0, x1, x2, y0, y1, y2):
    """Abscissa of the vertex of the parabola through three points (vectorized)."""
    a, c = x1 - x0, x1 - x2
    num = a * a * (y1 - y2) - c * c * (y1 - y0)
    den = a * (y1 - y2) - c * (y1 - y0)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = x1 - 0.5 * num / den
    v = np.where((den != 0) & np.isfinite(v), v, x1)
    return np.clip(v, x0, x2)


def extract_te_map(stack: MapStack, threshold: float = 0.05) -> TEMap:
    """Temperature of maximum |signal| per pixel, parabola-refined."""
    if len(stack) == 0:
        raise ValueError("empty stack")
    if len(stack) < 3:
        raise ValueError("need at least 3 temperatures")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    T = np.asarray(stack.values, dtype=float)
    order = np.argsort(T)
    T = T[order]
    cube = np.abs(stack.array())[order]
    n = len(T)
    k = np.argmax(cube, axis=0)
    peak = np.take_along_axis(cube, k[None], axis=0)[0]
    global_max = cube.max()
    reason = np.zeros(k.shape, dtype=np.int8)
    reason[(k == 0) | (k == n - 1)] = BOUNDARY
    reason[peak <= threshold * global_max] = NO_SIGNAL
    kc = np.clip(k, 1, n - 2)
    y0 = np.take_along_axis(cube, (kc - 1)[None], axis=0)[0]
    y1 = np.take_along_axis(cube, kc[None], axis=0)[0]
    y2 = np.take_along_axis(cube, (kc + 1)[None], axis=0)[0]
    te = _parabolic_vertex(T[kc - 1], T[kc], T[kc + 1], y0, y1, y2)
    te = np.where(reason == OK, te, np.nan)
    m = stack.maps[0]
    return TEMap(m.xs, m.ys, m.step, te, reason, threshold)


@dataclass(frozen=True)
class Curve:
    parameter: str
    x: np.ndarray
    y: np.ndarray
    x_unit: str = ""
    y_unit: str = "arb."


def integrate_stack(stack: MapStack) -> Curve:
    """Sum of |signal| times pixel area for each stack entry."""
    if len(stack) == 0:
        raise ValueError("empty stack")
    area = stack.step**2
    y = np.array([np.abs(m.values).sum() * area for m in stack.maps])
    from .scan import UNITS
    return Curve(stack.parameter, np.asarray(stack.values, dtype=float), y,
                 UNITS.get(stack.parameter, ""), "arb. nm^2")


# -- linecuts and fringes ---------------------------------------------------

@dataclass(frozen=True)
class Profile:
    distance: np.ndarray  # nm from p0
    values: np.ndarray
    dx: float


def extract_linecut(map_: ScalarField2D, p0, p1, width_px: int = 1) -> Profile:
    """Bilinear samples along p0 -> p1 every dx, averaged over ``width_px``
    parallel lines spaced dx apart."""
    grid = map_.grid
    if width_px < 1:
        raise ValueError("width_px must be >= 1")
    xs, ys = grid.x_centers(), grid.y_centers()
    for p in (p0, p1):
        if not (xs[0] - 1e-9 <= p[0] <= xs[-1] + 1e-9 and ys[0] - 1e-9 <= p[1] <= ys[-1] + 1e-9):
            raise ValueError(f"linecut endpoint {tuple(p)} lies outside the map")
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    n = int(np.floor(length / grid.dx + 1e-9)) + 1
    t = np.arange(n) * grid.dx
    u = (p1 - p0) / length if length > 0 else np.array([1.0, 0.0])
    normal = np.array([-u[1], u[0]])
    offsets = (np.arange(width_px) - (width_px - 1) / 2.0) * grid.dx
    acc = np.zeros(n)
    for off in offsets:
        px = p0[0] + t * u[0] + off * normal[0]
        py = p0[1] + t * u[1] + off * normal[1]
        col = (px - xs[0]) / grid.dx
        row = (py - ys[0]) / grid.dx
        acc += ndimage.map_coordinates(map_.values, [row, col], order=1, mode="nearest")
    return Profile(t, acc / width_px, grid.dx)


class NoFringeError(ValueError):
    pass


@dataclass(frozen=True)
class FringeEstimate:
    wavelength: float
    peaks: tuple[float, ...]
    strengths: tuple[float, ...]
    method: str = "linear detrend, Hann window, zero-pad x8, 3-point parabolic peak"


def estimate_fringe_wavelength(profile, band: tuple[float, float], dx: float | None = None,
                               significance: float = 0.3, pad: int = 8) -> FringeEstimate:
    """Dominant fringe wavelength (nm) inside ``band`` = (lambda_min, lambda_max).

    Every local periodogram maximum in the band above ``significance`` times
    the dominant one is also reported, strongest first. A peak must exceed
    ten times the median periodogram level to count as a fringe.
    """
    if isinstance(profile, Profile):
        values, dx = profile.values, profile.dx
    else:
        values = np.asarray(profile, dtype=float)
        if dx is None:
            raise ValueError("dx is required for a bare array profile")
    lo, hi = float(band[0]), float(band[1])
    if not 0 < lo < hi:
        raise ValueError("band must satisfy 0 < lambda_min < lambda_max")
    n = len(values)
    if n * dx < 4 * lo:
        raise ValueError(f"profile of {n * dx:g} nm is shorter than 4 periods of {lo:g} nm")
    x = signal.detrend(values, type="linear") * np.hanning(n)
    nfft = pad * n
    power = np.abs(np.fft.rfft(x, nfft)) ** 2
    freq = np.fft.rfftfreq(nfft, dx)
    floor = 10.0 * np.median(power) + 1e-24 * max(np.sum(values**2), 1e-300)
    inband = (freq >= 1.0 / hi) & (freq <= 1.0 / lo)
    idx = np.flatnonzero(inband)
    peaks = [i for i in idx if 0 < i < len(power) - 1
             and power[i] > power[i - 1] and power[i] >= power[i + 1] and power[i] > floor]
    if not peaks:
        raise NoFringeError(f"no fringe above the noise floor between {lo:g} and {hi:g} nm")
    df = freq[1] - freq[0]
    refined = []
    for i in peaks:
        a, b, c = power[i - 1], power[i], power[i + 1]
        den = a - 2 * b + c
        shift = 0.5 * (a - c) / den if den != 0 else 0.0
        refined.append((b - 0.25 * (a - c) * shift, freq[i] + shift * df))
    refined.sort(key=lambda p: -p[0])
    top = refined[0][0]
    sig = [(p, f) for p, f in refined if p >= significance * top]
    return FringeEstimate(1.0 / sig[0][1], tuple(1.0 / f for _, f in sig),
                          tuple(p / top for p, _ in sig))


def thickness_wavelength_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Least-squares line lambda = slope * thickness + intercept, with R^2."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need at least two (thickness, wavelength) points")
    d, lam = pts[:, 0], pts[:, 1]
    if np.ptp(d) == 0:
        raise ValueError("thicknesses must not all be equal")
    slope, intercept = np.polyfit(d, lam, 1)
    resid = lam - (slope * d + intercept)
    ss_tot = np.sum((lam - lam.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)
