"""Exceptions raised by the solver library and the experiment harness."""

from typing import Any


class CatBalanceError(Exception):
    """Base class for all cat-balance errors."""


class InvalidOrderError(CatBalanceError, ValueError):
    """Derivative order or stencil half-width out of range."""


class InvalidSubintervalError(CatBalanceError, ValueError):
    """Quadrature subinterval index outside -P+2..P."""


class InvalidOffsetError(CatBalanceError, ValueError):
    """Evaluation offset not precomputed in a differentiation table."""


class DimensionError(CatBalanceError, ValueError):
    """Array lengths or grids do not match."""


class StationaryUnavailableError(CatBalanceError):
    """No stationary solution through the given state."""


class AmbiguousRegimeError(StationaryUnavailableError):
    """The anchor state is critical, so the flow regime cannot be chosen."""


class PositivityError(CatBalanceError, ValueError):
    """A state left the admissible set (dry water column, vacuum, negative pressure)."""


class DivergenceError(CatBalanceError, ArithmeticError):
    """A non-finite value appeared during a step."""

    def __init__(self, message: str, stage: int | None = None, node: Any = None):
        super().__init__(message)
        self.stage = stage
        self.node = node

    def at_node(self, node: Any) -> "DivergenceError":
        """Return a copy of this error tagged with a mesh node."""
        return type(self)(f"{self.args[0]} at node {node}", stage=self.stage, node=node)


class TimeStepUnderflowError(DivergenceError):
    """The CFL time step collapsed or became non-finite."""

    def __init__(self, message: str, t: float, dt: float, max_speed: float):
        super().__init__(f"{message} (t={t:.6g}, dt={dt:.3g}, max speed={max_speed:.6g})")
        self.t = t
        self.dt = dt
        self.max_speed = max_speed


class ConfigurationError(CatBalanceError, ValueError):
    """Invalid experiment configuration; `field` holds the dotted key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
