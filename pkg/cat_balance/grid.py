"""Uniform node-based meshes with ghost-node bookkeeping."""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError

Array = NDArray[np.float64]


@dataclass(frozen=True)
class GridSpec:
    """N nodes spanning the closed interval [a, b], plus `ghost` nodes per side."""

    a: float
    b: float
    n: int
    ghost: int = 2

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DimensionError(f"A mesh needs at least 2 nodes, got {self.n}")
        if self.b <= self.a:
            raise DimensionError(f"Empty interval [{self.a}, {self.b}]")
        if self.ghost < 1:
            raise DimensionError(f"Ghost width must be positive, got {self.ghost}")

    dim = 1

    @property
    def dx(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @property
    def shape(self) -> tuple[int]:
        return (self.n + 2 * self.ghost,)

    @property
    def interior(self) -> slice:
        return slice(self.ghost, self.ghost + self.n)

    @cached_property
    def x(self) -> Array:
        """Interior node coordinates."""
        return self.a + self.dx * np.arange(self.n)

    @cached_property
    def x_ext(self) -> Array:
        """Node coordinates including ghosts."""
        return self.a + self.dx * np.arange(-self.ghost, self.n + self.ghost)

    def with_ghost(self, ghost: int) -> "GridSpec":
        return replace(self, ghost=ghost)

    def refined(self, factor: int) -> "GridSpec":
        """Mesh whose every `factor`-th node coincides with a node of this one."""
        return replace(self, n=(self.n - 1) * factor + 1)

    @property
    def points(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class GridSpec2D:
    """Tensor-product node mesh on [ax, bx] x [ay, by]."""

    ax: float
    bx: float
    nx: int
    ay: float
    by: float
    ny: int
    ghost: int = 2

    def __post_init__(self) -> None:
        if min(self.nx, self.ny) < 2:
            raise DimensionError(f"A mesh needs at least 2 nodes per axis, got {self.nx}x{self.ny}")
        if self.bx <= self.ax or self.by <= self.ay:
            raise DimensionError("Empty rectangle")
        if self.ghost < 1:
            raise DimensionError(f"Ghost width must be positive, got {self.ghost}")

    dim = 2

    @property
    def dx(self) -> float:
        return (self.bx - self.ax) / (self.nx - 1)

    @property
    def dy(self) -> float:
        return (self.by - self.ay) / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 2 * self.ghost, self.ny + 2 * self.ghost)

    @property
    def interior(self) -> tuple[slice, slice]:
        g = self.ghost
        return slice(g, g + self.nx), slice(g, g + self.ny)

    @cached_property
    def x_ext(self) -> Array:
        return self.ax + self.dx * np.arange(-self.ghost, self.nx + self.ghost)

    @cached_property
    def y_ext(self) -> Array:
        return self.ay + self.dy * np.arange(-self.ghost, self.ny + self.ghost)

    @cached_property
    def mesh_ext(self) -> tuple[Array, Array]:
        """Coordinate arrays of shape `shape` (indexing ij)."""
        return tuple(np.meshgrid(self.x_ext, self.y_ext, indexing="ij"))  # type: ignore[return-value]

    @property
    def mesh(self) -> tuple[Array, Array]:
        sx, sy = self.interior
        xx, yy = self.mesh_ext
        return xx[sx, sy], yy[sx, sy]

    def with_ghost(self, ghost: int) -> "GridSpec2D":
        return replace(self, ghost=ghost)

    def refined(self, factor: int) -> "GridSpec2D":
        return replace(self, nx=(self.nx - 1) * factor + 1, ny=(self.ny - 1) * factor + 1)

    @property
    def points(self) -> str:
        return f"{self.nx}x{self.ny}"


Grid = GridSpec | GridSpec2D


@dataclass
class StateField:
    """Conserved variables at one time level, ghosts included; last axis = variables."""

    values: Array
    t: float = 0.0

    def interior(self, grid: Grid) -> Array:
        return self.values[grid.interior]

    def copy(self) -> "StateField":
        return StateField(self.values.copy(), self.t)

    @classmethod
    def from_interior(cls, interior: Array, grid: Grid, t: float = 0.0) -> "StateField":
        """Embed interior values into an array with (unfilled, zero) ghosts."""
        interior = np.asarray(interior, dtype=float)
        if interior.ndim == grid.dim:
            interior = interior[..., None]
        values = np.zeros((*grid.shape, interior.shape[-1]))
        values[grid.interior] = interior
        return cls(values, t)
