"""Uniform 2D grids and the real/complex fields sampled on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Cell-centred uniform grid. Lengths in nm.

    Cell (row i, column j) has its centre at
    ``(x0 + (j + 0.5) * dx, y0 + (i + 0.5) * dx)``. Arrays are indexed
    ``[row, col]`` = ``[y, x]`` and stored row-major.
    """

    nx: int
    ny: int
    dx: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.nx) < 2 or int(self.ny) < 2:
            raise ValueError(f"grid needs nx, ny >= 2, got {self.nx}x{self.ny}")
        if not self.dx > 0:
            raise ValueError(f"grid dx must be positive, got {self.dx}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "dx", float(self.dx))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def extent(self) -> tuple[float, float]:
        return (self.nx * self.dx, self.ny * self.dx)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the covered area."""
        x0, y0 = self.origin
        w, h = self.extent
        return (x0, y0, x0 + w, y0 + h)

    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.dx

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """X, Y arrays of cell-centre coordinates, shape (ny, nx)."""
        return np.meshgrid(self.x_centers(), self.y_centers())

    def contains(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def index_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) of the cell containing the point, clipped to the grid."""
        col = int(np.floor((x - self.origin[0]) / self.dx))
        row = int(np.floor((y - self.origin[1]) / self.dx))
        return (min(max(row, 0), self.ny - 1), min(max(col, 0), self.nx - 1))

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "dx": self.dx, "origin": list(self.origin)}


def _check_values(grid: GridSpec, values: np.ndarray, dtype) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.shape != grid.shape:
        if arr.size != grid.nx * grid.ny:
            raise ValueError(
                f"value count {arr.size} does not match grid {grid.nx}x{grid.ny}"
            )
        arr = arr.reshape(grid.shape)
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class ScalarField2D:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, float))

    def __add__(self, other: "ScalarField2D") -> "ScalarField2D":
        _require_same_grid(self.grid, other.grid)
        return ScalarField2D(self.grid, self.values + other.values)

    def __mul__(self, factor: float) -> "ScalarField2D":
        return ScalarField2D(self.grid, self.values * factor)

    __rmul__ = __mul__

    def integral(self) -> float:
        """Sum of values times the cell area (nm^2)."""
        return float(self.values.sum() * self.grid.dx**2)


@dataclass(frozen=True, eq=False)
class ComplexField2D:
    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values, complex))

    def __add__(self, other: "ComplexField2D") -> "ComplexField2D":
        _require_same_grid(self.grid, other.grid)
        return ComplexField2D(self.grid, self.values + other.values)

    def abs(self) -> ScalarField2D:
        return ScalarField2D(self.grid, np.abs(self.values))

    def conj(self) -> "ComplexField2D":
        return ComplexField2D(self.grid, np.conj(self.values))


class GridMismatchError(ValueError):
    pass


def _require_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")
