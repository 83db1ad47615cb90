"""PDE systems U_t + F(U)_x (+ G(U)_y) = S(U) H_x (+ S2(U) H_y) behind one model interface.

States are numpy arrays whose last axis holds the conserved variables, so every model
function accepts any leading batch shape.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field
from math import comb
from typing import ClassVar

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import elementwise

from .errors import AmbiguousRegimeError, PositivityError, StationaryUnavailableError
from .geometry import FlatGeometry, Geometry1D, Geometry2D, PointMassPotential

Array = NDArray[np.float64]

GRAVITY = 9.81
GAMMA = 1.4
CRITICAL_FROUDE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class ShallowWaterState:
    """Water thickness h (m) and discharge q (m^2/s)."""

    h: float
    q: float

    @property
    def u(self) -> float:
        return self.q / self.h

    def froude(self, g: float = GRAVITY) -> float:
        return float(froude_number(self.h, self.q, g))

    def as_array(self) -> Array:
        return np.array([self.h, self.q])


@dataclass(frozen=True)
class EulerState2D:
    """Density, momenta and energy (excluding gravitational energy)."""

    rho: float
    rho_u: float
    rho_v: float
    E: float
    gamma: float = GAMMA

    @property
    def pressure(self) -> float:
        kinetic = 0.5 * (self.rho_u**2 + self.rho_v**2) / self.rho
        return (self.gamma - 1.0) * (self.E - kinetic)

    def as_array(self) -> Array:
        return np.array([self.rho, self.rho_u, self.rho_v, self.E])

    @classmethod
    def from_array(cls, values: Array, gamma: float = GAMMA) -> "EulerState2D":
        rho, rho_u, rho_v, energy = (float(v) for v in values)
        return cls(rho, rho_u, rho_v, energy, gamma)


def smooth_transition_profile(x: Array | float) -> Array:
    """C^5 step: 0 for x < 0, x^6 sum_k (-1)^k C(5+k,k)(x-1)^k on [0,1], 1 for x > 1."""
    x = np.asarray(x, dtype=float)
    s = np.clip(x, 0.0, 1.0)
    poly = sum((-1) ** k * comb(5 + k, k) * (s - 1.0) ** k for k in range(6))
    return np.where(x < 0.0, 0.0, np.where(x > 1.0, 1.0, s**6 * poly))


def linear_exact(
    x: Array | float,
    t: float,
    u0: Callable[[Array], Array],
    H: Geometry1D | None = None,
    velocity: float = 1.0,
) -> Array:
    """Exact solution of u_t + a u_x = u H_x along the characteristics x - a t.

    u(x, t) = u0(x - a t) exp((H(x) - H(x - a t)) / a), which is u0(x - t) e^t for
    H = x and a = 1 (the default when H is None).
    """
    x = np.asarray(x, dtype=float)
    foot = x - velocity * t
    if H is None:
        return u0(foot) * np.exp(t)
    return u0(foot) * np.exp((H.height(x) - H.height(foot)) / velocity)


def burgers_stationary_through(x0: float, u0: float, H: Geometry1D) -> Callable[[Array], Array]:
    """Stationary Burgers solution u*(x) = u0 e^{H(x) - H(x0)}."""
    h0 = H.height(np.asarray(x0, dtype=float))

    def profile(x: Array) -> Array:
        return u0 * np.exp(H.height(np.asarray(x, dtype=float)) - h0)

    return profile


def froude_number(h: Array | float, q: Array | float, g: float = GRAVITY) -> Array:
    h = np.asarray(h, dtype=float)
    return np.abs(np.asarray(q, dtype=float) / h) / np.sqrt(g * h)


def critical_depth(q: Array | float, g: float = GRAVITY) -> Array:
    """h_c = (q^2/g)^(1/3), the depth of minimum specific energy."""
    return np.cbrt(np.asarray(q, dtype=float) ** 2 / g)


def _specific_energy(h: Array, q: Array, g: float) -> Array:
    return 0.5 * q**2 / h**2 + g * h


def energy_depths(q: Array, energy: Array, subcritical: Array, g: float = GRAVITY) -> tuple[Array, Array]:
    """Solve q^2/(2h^2) + g h = energy for h on the branch given by `subcritical`.

    This is the positive root of h^3 - (energy/g) h^2 + q^2/(2g) on the matching side
    of the critical depth, found elementwise inside a bracket. Arrays broadcast together.

    Returns:
        Tuple of (depths, found) where `found` is False where no root exists
    """
    q, energy, subcritical = np.broadcast_arrays(
        np.abs(np.asarray(q, dtype=float)), np.asarray(energy, dtype=float), np.asarray(subcritical)
    )
    hc = critical_depth(q, g)
    still = q == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        e_min = np.where(still, 0.0, _specific_energy(hc, q, g))
        found = np.isfinite(energy) & (energy > 0.0) & (energy >= e_min) & (subcritical | ~still)
        moving = found & ~still

        # E(h) >= g h bounds the subcritical root, E(h) >= q^2/(2h^2) the supercritical one
        lo = np.where(subcritical, hc, q / np.sqrt(2.0 * np.maximum(energy, 1e-300)))
        hi = np.where(subcritical, np.maximum(energy / g, hc), hc)
        # rows without a root get the trivial bracket [1, 1] of E(h) - E(1)
        lo, hi = np.where(moving, lo, 1.0), np.where(moving, hi, 1.0)
        safe_q = np.where(moving, q, 0.0)
        target = np.where(moving, energy, g)

        def residual(h: Array, discharge: Array, target: Array) -> Array:
            return _specific_energy(h, discharge, g) - target

        roots = elementwise.find_root(residual, (lo, hi), args=(safe_q, target))

    depth = np.where(still, energy / g, roots.x)
    found = found & (still | roots.success)
    return np.where(found, depth, np.nan), found


def sw_stationary_solve(
    h0: float, q0: float, x0: float, x: float, g: float, H: Geometry1D
) -> ShallowWaterState:
    """Stationary shallow-water state at x on the solution through (h0, q0) at x0.

    Raises:
        PositivityError: If h0 <= 0
        AmbiguousRegimeError: If the anchor state is critical
        StationaryUnavailableError: If no root of the matching regime exists at x
    """
    if h0 <= 0.0:
        raise PositivityError(f"Water thickness must be positive, got h0={h0}")
    froude = float(froude_number(h0, q0, g))
    if abs(froude - 1.0) < CRITICAL_FROUDE_TOLERANCE:
        raise AmbiguousRegimeError(f"Critical anchor state (Fr={froude:.12f}) has no regime")
    b0 = H.height(np.asarray(x0, dtype=float))
    bx = H.height(np.asarray(x, dtype=float))
    if bx == b0:
        return ShallowWaterState(h0, q0)
    energy = _specific_energy(np.asarray(h0), np.asarray(q0), g) - g * b0 + g * bx
    depth, found = energy_depths(np.asarray(q0), energy, np.asarray(froude < 1.0), g)
    if not bool(found):
        raise StationaryUnavailableError(f"No stationary depth at x={x} through h0={h0}, q0={q0}")
    return ShallowWaterState(float(depth), q0)


def euler_family_fit(
    state: EulerState2D | Array,
    x: Array,
    x_anchor: Array,
    H: Geometry2D,
    gamma: float = GAMMA,
) -> EulerState2D:
    """Isothermal hydrostatic state at x through the density of `state` at x_anchor.

    Raises:
        StationaryUnavailableError: If the anchor density is not positive
    """
    values = state.as_array() if isinstance(state, EulerState2D) else np.asarray(state, dtype=float)
    rho0 = float(values[0])
    if rho0 <= 0.0:
        raise StationaryUnavailableError(f"Non-positive anchor density {rho0}")
    x, x_anchor = np.asarray(x, dtype=float), np.asarray(x_anchor, dtype=float)
    factor = np.exp(-(H.height(x[0], x[1]) - H.height(x_anchor[0], x_anchor[1])))
    rho = rho0 * float(factor)
    return EulerState2D(rho, 0.0, 0.0, rho / (gamma - 1.0), gamma)


class ModelSpec(ABC):
    """Flux, source, geometry and wave speeds of a balance law."""

    name: ClassVar[str]
    dim: ClassVar[int] = 1
    variables: ClassVar[tuple[str, ...]]
    primitive_variables: ClassVar[tuple[str, ...]]
    stationary_family: ClassVar[str | None] = None
    geometry: Geometry1D | Geometry2D

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def scalar(self) -> bool:
        return self.n_vars == 1

    @abstractmethod
    def flux(self, U: Array) -> Array:
        """F(U) along x."""

    @abstractmethod
    def source(self, U: Array) -> Array:
        """S(U), multiplied by H_x in the balance law."""

    @abstractmethod
    def max_wave_speed(self, U: Array) -> Array:
        """Upper bound on the spectral radius of dF/dU, per node."""

    def flux_derivative(self, U: Array) -> Array:
        """f'(u) for scalar models."""
        raise NotImplementedError(f"{self.name} has no scalar characteristic speed")

    def check_admissible(self, U: Array) -> None:
        """Raise PositivityError when a state is outside the model's domain."""

    def primitive(self, U: Array) -> Array:
        return np.array(U, dtype=float, copy=True)

    def conservative(self, W: Array) -> Array:
        return np.array(W, dtype=float, copy=True)

    def derived(self, U: Array, height: Array) -> dict[str, Array]:
        """Extra snapshot columns computed from the state and H at the nodes."""
        return {}

    def stationary_states(self, anchors: Array, anchor_x: Array, targets: Array) -> tuple[Array, Array]:
        """Evaluate the stationary solution through each anchor state at the target points.

        Args:
            anchors: Anchor states, shape (M, d)
            anchor_x: Anchor coordinates, shape (M,) in 1D or (M, 2) in 2D
            targets: Target coordinates, shape (M, K) in 1D or (M, K, 2) in 2D

        Returns:
            Tuple of (states of shape (M, K, d), validity mask of shape (M,))
        """
        raise StationaryUnavailableError(f"{self.name} has no stationary solutions")


@dataclass(frozen=True)
class _ExponentialFamily:
    """u* = u_i exp((H(x) - H(x_i)) / a), shared by the linear and Burgers models."""

    geometry: Geometry1D

    def _exponential_states(
        self, anchors: Array, anchor_x: Array, targets: Array, rate: float
    ) -> tuple[Array, Array]:
        exponent = self.geometry.height(targets) - self.geometry.height(anchor_x)[:, None]
        if rate != 1.0:
            exponent = exponent / rate
        states = anchors[:, None, :] * np.exp(exponent)[..., None]
        return states, np.ones(anchors.shape[0], dtype=bool)


@dataclass(frozen=True)
class LinearModel(_ExponentialFamily, ModelSpec):
    """u_t + a u_x = u H_x."""

    geometry: Geometry1D = field(default_factory=FlatGeometry)
    velocity: float = 1.0

    name: ClassVar[str] = "linear"
    variables: ClassVar[tuple[str, ...]] = ("u",)
    primitive_variables: ClassVar[tuple[str, ...]] = ("u",)
    stationary_family: ClassVar[str | None] = "exponential"

    def flux(self, U: Array) -> Array:
        return self.velocity * U

    def source(self, U: Array) -> Array:
        return np.array(U, dtype=float, copy=True)

    def max_wave_speed(self, U: Array) -> Array:
        return np.full(U.shape[:-1], abs(self.velocity))

    def flux_derivative(self, U: Array) -> Array:
        return np.full_like(U, self.velocity)

    def stationary_states(self, anchors: Array, anchor_x: Array, targets: Array) -> tuple[Array, Array]:
        return self._exponential_states(anchors, anchor_x, targets, self.velocity)


@dataclass(frozen=True)
class BurgersModel(_ExponentialFamily, ModelSpec):
    """u_t + (u^2/2)_x = u^2 H_x."""

    geometry: Geometry1D = field(default_factory=FlatGeometry)

    name: ClassVar[str] = "burgers"
    variables: ClassVar[tuple[str, ...]] = ("u",)
    primitive_variables: ClassVar[tuple[str, ...]] = ("u",)
    stationary_family: ClassVar[str | None] = "exponential"

    def flux(self, U: Array) -> Array:
        return 0.5 * U**2

    def source(self, U: Array) -> Array:
        return U**2

    def max_wave_speed(self, U: Array) -> Array:
        return np.abs(U[..., 0])

    def flux_derivative(self, U: Array) -> Array:
        return np.array(U, dtype=float, copy=True)

    def stationary_states(self, anchors: Array, anchor_x: Array, targets: Array) -> tuple[Array, Array]:
        return self._exponential_states(anchors, anchor_x, targets, 1.0)


@dataclass(frozen=True)
class ShallowWaterModel(ModelSpec):
    """h_t + q_x = 0, q_t + (q^2/h + g h^2/2)_x = g h H_x, with H the depth of the bottom."""

    geometry: Geometry1D = field(default_factory=FlatGeometry)
    gravity: float = GRAVITY

    name: ClassVar[str] = "shallow-water"
    variables: ClassVar[tuple[str, ...]] = ("h", "q")
    primitive_variables: ClassVar[tuple[str, ...]] = ("h", "q")
    stationary_family: ClassVar[str | None] = "energy"

    def flux(self, U: Array) -> Array:
        h, q = U[..., 0], U[..., 1]
        return np.stack([q, q**2 / h + 0.5 * self.gravity * h**2], axis=-1)

    def source(self, U: Array) -> Array:
        h = U[..., 0]
        return np.stack([np.zeros_like(h), self.gravity * h], axis=-1)

    def max_wave_speed(self, U: Array) -> Array:
        h, q = U[..., 0], U[..., 1]
        return np.abs(q / h) + np.sqrt(self.gravity * h)

    def check_admissible(self, U: Array) -> None:
        h = U[..., 0]
        if not np.all(h > 0.0):
            raise PositivityError(f"Dry state: min water thickness {np.nanmin(h):.3g}")

    def derived(self, U: Array, height: Array) -> dict[str, Array]:
        h = U[..., 0]
        return {"velocity": U[..., 1] / h, "free_surface": h - height}

    def stationary_states(self, anchors: Array, anchor_x: Array, targets: Array) -> tuple[Array, Array]:
        g = self.gravity
        h0, q0 = anchors[:, 0], anchors[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            froude = froude_number(h0, q0, g)
        regular = (h0 > 0.0) & (np.abs(froude - 1.0) >= CRITICAL_FROUDE_TOLERANCE)
        b0 = self.geometry.height(anchor_x)[:, None]
        bx = self.geometry.height(targets)
        constant = _specific_energy(h0, q0, g)[:, None] - g * b0
        depth, found = energy_depths(q0[:, None], constant + g * bx, (froude < 1.0)[:, None], g)
        depth = np.where(bx == b0, h0[:, None], depth)
        found = found | (bx == b0)
        states = np.stack([depth, np.broadcast_to(q0[:, None], depth.shape)], axis=-1)
        return states, regular & np.all(found, axis=1)


class ModelSpec2D(ModelSpec):
    """Adds the y-direction flux G, source S2 and wave speed."""

    dim: ClassVar[int] = 2
    geometry: Geometry2D

    @abstractmethod
    def flux_y(self, U: Array) -> Array:
        """G(U) along y."""

    @abstractmethod
    def source_y(self, U: Array) -> Array:
        """S2(U), multiplied by H_y."""

    @abstractmethod
    def max_wave_speed_y(self, U: Array) -> Array:
        """Upper bound on the spectral radius of dG/dU."""

    def flux_derivative_y(self, U: Array) -> Array:
        """g'(u) for scalar models."""
        raise NotImplementedError(f"{self.name} has no scalar characteristic speed")


@dataclass(frozen=True)
class LinearModel2D(ModelSpec2D):
    """u_t + a u_x + b u_y = u H_x + u H_y."""

    geometry: Geometry2D = field(default_factory=PointMassPotential)
    velocity: float = 1.0
    velocity_y: float = 0.0

    name: ClassVar[str] = "linear2d"
    variables: ClassVar[tuple[str, ...]] = ("u",)
    primitive_variables: ClassVar[tuple[str, ...]] = ("u",)

    def flux(self, U: Array) -> Array:
        return self.velocity * U

    def flux_y(self, U: Array) -> Array:
        return self.velocity_y * U

    def source(self, U: Array) -> Array:
        return np.array(U, dtype=float, copy=True)

    def source_y(self, U: Array) -> Array:
        return np.array(U, dtype=float, copy=True)

    def max_wave_speed(self, U: Array) -> Array:
        return np.full(U.shape[:-1], abs(self.velocity))

    def max_wave_speed_y(self, U: Array) -> Array:
        return np.full(U.shape[:-1], abs(self.velocity_y))

    def flux_derivative(self, U: Array) -> Array:
        return np.full_like(U, self.velocity)

    def flux_derivative_y(self, U: Array) -> Array:
        return np.full_like(U, self.velocity_y)


@dataclass(frozen=True)
class EulerModel2D(ModelSpec2D):
    """Compressible Euler equations with gravitational potential H (ideal gas)."""

    geometry: Geometry2D = field(default_factory=PointMassPotential)
    gamma: float = GAMMA

    name: ClassVar[str] = "euler2d"
    variables: ClassVar[tuple[str, ...]] = ("rho", "rho_u", "rho_v", "E")
    primitive_variables: ClassVar[tuple[str, ...]] = ("rho", "u", "v", "p")
    stationary_family: ClassVar[str | None] = "isothermal"

    def pressure(self, U: Array) -> Array:
        rho, mx, my, energy = (U[..., n] for n in range(4))
        return (self.gamma - 1.0) * (energy - 0.5 * (mx**2 + my**2) / rho)

    def _sound_speed(self, U: Array) -> Array:
        return np.sqrt(self.gamma * self.pressure(U) / U[..., 0])

    def flux(self, U: Array) -> Array:
        mx, my, energy = U[..., 1], U[..., 2], U[..., 3]
        u = mx / U[..., 0]
        p = self.pressure(U)
        return np.stack([mx, mx * u + p, my * u, (energy + p) * u], axis=-1)

    def flux_y(self, U: Array) -> Array:
        mx, my, energy = U[..., 1], U[..., 2], U[..., 3]
        v = my / U[..., 0]
        p = self.pressure(U)
        return np.stack([my, mx * v, my * v + p, (energy + p) * v], axis=-1)

    def source(self, U: Array) -> Array:
        rho, mx = U[..., 0], U[..., 1]
        zero = np.zeros_like(rho)
        return np.stack([zero, -rho, zero, -mx], axis=-1)

    def source_y(self, U: Array) -> Array:
        rho, my = U[..., 0], U[..., 2]
        zero = np.zeros_like(rho)
        return np.stack([zero, zero, -rho, -my], axis=-1)

    def max_wave_speed(self, U: Array) -> Array:
        return np.abs(U[..., 1] / U[..., 0]) + self._sound_speed(U)

    def max_wave_speed_y(self, U: Array) -> Array:
        return np.abs(U[..., 2] / U[..., 0]) + self._sound_speed(U)

    def check_admissible(self, U: Array) -> None:
        rho = U[..., 0]
        if not np.all(rho > 0.0):
            raise PositivityError(f"Non-positive density {np.nanmin(rho):.3g}")
        p = self.pressure(U)
        if not np.all(p > 0.0):
            raise PositivityError(f"Non-positive pressure {np.nanmin(p):.3g}")

    def primitive(self, U: Array) -> Array:
        rho = U[..., 0]
        return np.stack([rho, U[..., 1] / rho, U[..., 2] / rho, self.pressure(U)], axis=-1)

    def conservative(self, W: Array) -> Array:
        rho, u, v, p = (W[..., n] for n in range(4))
        energy = p / (self.gamma - 1.0) + 0.5 * rho * (u**2 + v**2)
        return np.stack([rho, rho * u, rho * v, energy], axis=-1)

    def derived(self, U: Array, height: Array) -> dict[str, Array]:
        rho = U[..., 0]
        return {"u": U[..., 1] / rho, "v": U[..., 2] / rho, "p": self.pressure(U)}

    def stationary_states(self, anchors: Array, anchor_x: Array, targets: Array) -> tuple[Array, Array]:
        rho0 = anchors[:, 0]
        h0 = self.geometry.height(anchor_x[:, 0], anchor_x[:, 1])[:, None]
        hx = self.geometry.height(targets[..., 0], targets[..., 1])
        rho = rho0[:, None] * np.exp(-(hx - h0))
        zero = np.zeros_like(rho)
        states = np.stack([rho, zero, zero, rho / (self.gamma - 1.0)], axis=-1)
        return states, rho0 > 0.0


MODELS: dict[str, type[ModelSpec]] = {
    model.name: model for model in (LinearModel, BurgersModel, ShallowWaterModel, LinearModel2D, EulerModel2D)
}
