"""Named bathymetries and gravitational potentials H with analytic gradients."""

from dataclasses import dataclass, fields, replace
from typing import Any

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError

Array = NDArray[np.float64]


@dataclass(frozen=True)
class Geometry1D:
    """Base class: H(x) and H_x(x) evaluated on arrays."""

    name: str = "geometry"
    dim: int = 1

    @property
    def flat(self) -> bool:
        """True when H_x vanishes identically."""
        return False

    def height(self, x: Array) -> Array:
        raise NotImplementedError

    def slope(self, x: Array) -> Array:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearGeometry(Geometry1D):
    name: str = "linear"
    slope_coefficient: float = 1.0

    def height(self, x: Array) -> Array:
        return self.slope_coefficient * np.asarray(x, dtype=float)

    def slope(self, x: Array) -> Array:
        return np.full_like(np.asarray(x, dtype=float), self.slope_coefficient)


@dataclass(frozen=True)
class FlatGeometry(Geometry1D):
    name: str = "flat"
    level: float = 0.0

    @property
    def flat(self) -> bool:
        return True

    def height(self, x: Array) -> Array:
        return np.full_like(np.asarray(x, dtype=float), self.level)

    def slope(self, x: Array) -> Array:
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class OscillatoryGeometry(Geometry1D):
    """H = x + amplitude * sin(frequency * x)."""

    name: str = "oscillatory"
    amplitude: float = 0.1
    frequency: float = 10.0

    def height(self, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return x + self.amplitude * np.sin(self.frequency * x)

    def slope(self, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        return 1.0 + self.amplitude * self.frequency * np.cos(self.frequency * x)


@dataclass(frozen=True)
class BumpGeometry(Geometry1D):
    """Cosine bump of depth 2*amplitude, H = -amplitude(1 + cos(pi (x-c)/w)) on |x-c| <= w."""

    name: str = "bump"
    amplitude: float = 0.25
    center: float = 0.0
    half_width: float = 0.2

    def height(self, x: Array) -> Array:
        s = np.asarray(x, dtype=float) - self.center
        inside = np.abs(s) <= self.half_width
        return np.where(inside, -self.amplitude * (1.0 + np.cos(np.pi * s / self.half_width)), 0.0)

    def slope(self, x: Array) -> Array:
        s = np.asarray(x, dtype=float) - self.center
        inside = np.abs(s) <= self.half_width
        k = np.pi / self.half_width
        return np.where(inside, self.amplitude * k * np.sin(k * s), 0.0)


@dataclass(frozen=True)
class Geometry2D:
    """Base class: H(x, y) and its gradient."""

    name: str = "potential"
    dim: int = 2

    @property
    def flat(self) -> bool:
        return False

    def height(self, x: Array, y: Array) -> Array:
        raise NotImplementedError

    def gradient(self, x: Array, y: Array) -> tuple[Array, Array]:
        raise NotImplementedError


@dataclass(frozen=True)
class PlanarPotential(Geometry2D):
    """H = ax * x + ay * y."""

    name: str = "planar"
    ax: float = 1.0
    ay: float = 1.0

    def height(self, x: Array, y: Array) -> Array:
        return self.ax * np.asarray(x, dtype=float) + self.ay * np.asarray(y, dtype=float)

    def gradient(self, x: Array, y: Array) -> tuple[Array, Array]:
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return np.full(shape, self.ax), np.full(shape, self.ay)


@dataclass(frozen=True)
class PointMassPotential(Geometry2D):
    """H = 1 / |x - x0| for a point mass outside the domain."""

    name: str = "point-mass"
    x0: float = 1.0 / 3.0
    y0: float = -0.5

    def height(self, x: Array, y: Array) -> Array:
        dx = np.asarray(x, dtype=float) - self.x0
        dy = np.asarray(y, dtype=float) - self.y0
        return 1.0 / np.sqrt(dx**2 + dy**2)

    def gradient(self, x: Array, y: Array) -> tuple[Array, Array]:
        dx = np.asarray(x, dtype=float) - self.x0
        dy = np.asarray(y, dtype=float) - self.y0
        r3 = (dx**2 + dy**2) ** 1.5
        return -dx / r3, -dy / r3


Geometry = Geometry1D | Geometry2D

_REGISTRY: dict[str, tuple[type, dict[str, Any]]] = {
    "linear": (LinearGeometry, {}),
    "flat": (FlatGeometry, {}),
    "oscillatory": (OscillatoryGeometry, {}),
    "bump": (BumpGeometry, {}),
    "sw-bump": (BumpGeometry, {}),
    "planar": (PlanarPotential, {}),
    "H1": (PlanarPotential, {}),
    "point-mass": (PointMassPotential, {}),
    "H2": (PointMassPotential, {"x0": 1.0 / 3.0, "y0": -0.5}),
    "H3": (PointMassPotential, {"x0": 0.4, "y0": -0.1}),
}

# configuration key -> dataclass field
_ALIASES = {"slope": "slope_coefficient"}


def geometry_names() -> list[str]:
    return sorted(_REGISTRY)


def make_geometry(name: str, **params: float) -> Geometry:
    """Build a named geometry with closed-form parameter overrides.

    Raises:
        ConfigurationError: For unknown names or parameters
    """
    if name not in _REGISTRY:
        raise ConfigurationError("geometry.name", f"unknown geometry '{name}' (known: {', '.join(geometry_names())})")
    cls, defaults = _REGISTRY[name]
    geometry = cls(**defaults)
    allowed = {f.name for f in fields(cls)} - {"name", "dim"}
    overrides = {}
    for key, value in params.items():
        attr = _ALIASES.get(key, key)
        if attr not in allowed:
            raise ConfigurationError(f"geometry.{key}", f"not a parameter of '{name}'")
        overrides[attr] = float(value)
    return replace(geometry, **overrides)
