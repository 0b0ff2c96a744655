"""Thermalization of absorbed power: convolution with a normalized 2D kernel.

The default kernel is the screened-diffusion Green's function
K0(r / l_D) / (2 pi l_D^2), i.e. the steady state of diffusion with a finite
relaxation time. Kernels are truncated at ``cutoff`` thermalization lengths
and renormalized to unit sum on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy import fft, integrate, sparse
from scipy.sparse.linalg import splu
from scipy.special import k0

from .grid import GridSpec, ScalarField2D


@dataclass(frozen=True)
class ThermalParams:
    l_D: float = 500.0
    kernel: Literal["screened-diffusion", "gaussian"] = "screened-diffusion"
    boundary: Literal["zero-pad"] = "zero-pad"
    domain: Literal["plane", "conductor"] = "plane"
    cutoff: float = 5.0

    def __post_init__(self):
        if not self.l_D > 0:
            raise ValueError("l_D must be positive")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")


def _center_cell_k0(dx: float, l_D: float) -> float:
    """Cell average of K0(r/l_D) / (2 pi l_D^2) over the central cell."""
    h = 0.5 * dx / l_D
    # one quadrant in units of l_D; the log singularity sits at a corner
    val, _ = integrate.dblquad(lambda y, x: k0(np.hypot(x, y)), 0.0, h, 0.0, h,
                               epsabs=1e-13, epsrel=1e-11)
    # 4 * val * l_D^2 is the integral of K0 over the cell in nm^2
    return 4.0 * val * l_D**2 / (2.0 * np.pi * l_D**2) / dx**2


@lru_cache(maxsize=32)
def _kernel_cached(dx: float, l_D: float, kind: str, cutoff: float, max_half: int):
    if l_D < dx:
        return np.ones((1, 1))
    radius = cutoff * l_D
    half = min(int(np.floor(radius / dx)), max_half)
    offs = np.arange(-half, half + 1) * dx
    X, Y = np.meshgrid(offs, offs)
    r = np.hypot(X, Y)
    if kind == "screened-diffusion":
        with np.errstate(divide="ignore"):
            K = k0(r / l_D) / (2.0 * np.pi * l_D**2)
        K[half, half] = _center_cell_k0(dx, l_D)
    elif kind == "gaussian":
        K = np.exp(-0.5 * (r / l_D) ** 2) / (2.0 * np.pi * l_D**2)
    else:
        raise ValueError(f"unknown kernel {kind!r}")
    K[r > radius] = 0.0
    K = K / K.sum()
    K.setflags(write=False)
    return K


def kernel(grid: GridSpec, params: ThermalParams) -> np.ndarray:
    """Discrete kernel (unit sum), square with odd side, centred.

    Collapses to a single cell when l_D is below the grid spacing. Offsets
    beyond the grid size are dropped since they never connect two cells.
    """
    max_half = max(grid.nx, grid.ny) - 1
    return _kernel_cached(grid.dx, params.l_D, params.kernel, params.cutoff, max_half)


class Diffuser:
    """Precomputed convolution for one (grid, params) pair.

    Shareable read-only across scan workers.
    """

    def __init__(self, grid: GridSpec, params: ThermalParams, eta: float,
                 conductor_mask: np.ndarray | None = None):
        self.grid = grid
        self.params = params
        self.eta = float(eta)
        self.K = kernel(grid, params)
        half = self.K.shape[0] // 2
        self.half = half
        ny, nx = grid.shape
        # offsets longer than the grid never connect two cells
        hy, hx = min(half, ny - 1), min(half, nx - 1)
        self._h = (hy, hx)
        K = self.K[half - hy : half + hy + 1, half - hx : half + hx + 1]
        self.fft_shape = (fft.next_fast_len(ny + hy, real=True),
                          fft.next_fast_len(nx + hx, real=True))
        padded = np.zeros(self.fft_shape)
        padded[: 2 * hy + 1, : 2 * hx + 1] = K
        self._K_hat = fft.rfft2(padded)
        self._solver = None
        if params.domain == "conductor":
            if conductor_mask is None:
                raise ValueError("conductor-restricted diffusion needs a conductor mask")
            self._solver = _ConductorDiffusion(grid, params.l_D, conductor_mask)

    def apply(self, P: np.ndarray) -> np.ndarray:
        """Temperature rise (K) for an absorbed power density array (nW/um^2)."""
        P = np.asarray(P, dtype=float)
        if not np.all(np.isfinite(P)):
            raise ValueError("absorbed power must be finite")
        if self._solver is not None:
            return self.eta * self._solver.solve(P)
        if self.half == 0:
            return self.eta * P
        ny, nx = self.grid.shape
        conv = fft.irfft2(fft.rfft2(P, s=self.fft_shape) * self._K_hat, s=self.fft_shape)
        hy, hx = self._h
        return self.eta * conv[hy : hy + ny, hx : hx + nx]


def diffuse(P: ScalarField2D, params: ThermalParams, eta: float = 1.0,
            conductor_mask: np.ndarray | None = None) -> ScalarField2D:
    """Smear an absorbed power density into a temperature rise field."""
    if np.any(P.values < 0):
        raise ValueError("absorbed power must be non-negative")
    return ScalarField2D(P.grid, Diffuser(P.grid, params, eta, conductor_mask).apply(P.values))


def diffuse_direct(P: ScalarField2D, params: ThermalParams, eta: float = 1.0) -> ScalarField2D:
    """O(N^2) direct summation; reference path for the FFT convolution."""
    K = kernel(P.grid, params)
    h = K.shape[0] // 2
    ny, nx = P.grid.shape
    src = np.pad(P.values, h)
    out = np.zeros((ny, nx))
    for a in range(2 * h + 1):
        for b in range(2 * h + 1):
            w = K[a, b]
            if w:
                # out[i, j] += K[a, b] * P[i + h - a, j + h - b]
                out += w * src[2 * h - a : 2 * h - a + ny, 2 * h - b : 2 * h - b + nx]
    return ScalarField2D(P.grid, eta * out)


class _ConductorDiffusion:
    """Screened diffusion (1 - l_D^2 lap) T = P restricted to the conductor.

    Zero-flux walls at the conductor boundary; cells outside stay at zero.
    """

    def __init__(self, grid: GridSpec, l_D: float, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        self.mask = mask
        idx = -np.ones(mask.shape, dtype=np.int64)
        idx[mask] = np.arange(int(mask.sum()))
        self.idx = idx
        n = int(mask.sum())
        a = (l_D / grid.dx) ** 2
        rows, cols, vals = [], [], []
        diag = np.ones(n)
        for di, dj in ((0, 1), (1, 0)):
            src = idx[: mask.shape[0] - di, : mask.shape[1] - dj]
            dst = idx[di:, dj:]
            both = (src >= 0) & (dst >= 0)
            s, d = src[both], dst[both]
            rows += [s, d]
            cols += [d, s]
            vals += [np.full(s.size, -a), np.full(s.size, -a)]
            np.add.at(diag, s, a)
            np.add.at(diag, d, a)
        A = sparse.csc_matrix(
            (np.concatenate(vals + [diag]),
             (np.concatenate(rows + [np.arange(n)]), np.concatenate(cols + [np.arange(n)]))),
            shape=(n, n),
        )
        self._lu = splu(A)

    def solve(self, P: np.ndarray) -> np.ndarray:
        out = np.zeros(self.mask.shape)
        out[self.mask] = self._lu.solve(np.ascontiguousarray(P[self.mask], dtype=float))
        return out
