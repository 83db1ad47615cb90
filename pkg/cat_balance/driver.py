"""Time marching, boundary conditions and error norms for 1D and 2D runs."""

import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import cast

import numpy as np
from numpy.typing import NDArray

from .adaptive import acat_step, lf_step
from .cat1d import WorkspacePool, cat_step
from .config import BOUNDARY_KINDS, SchemeConfig
from .errors import ConfigurationError, DimensionError, DivergenceError, TimeStepUnderflowError
from .grid import Grid, GridSpec, GridSpec2D, StateField
from .logger import Logger
from .models import ModelSpec, ModelSpec2D
from .solver2d import acat2d_step, cat2d_step, lf2d_step, wbacat2d_step, wbcat2d_step
from .wellbalanced1d import wb_step

Array = NDArray[np.float64]
Stepper = Callable[[StateField, float], StateField]
Reference = Callable[..., Array] | StateField | Array

# dt below this fraction of t_end aborts the run
MIN_RELATIVE_DT = 1e-12
# remaining time below this fraction of t_end counts as t_end reached
END_TOLERANCE = 1e-14

_OPPOSITE = {"left": "right", "right": "left", "bottom": "top", "top": "bottom"}


@dataclass(frozen=True)
class BoundaryConditions:
    """Per-side boundary kind plus the exact and stationary solutions ghosts may sample.

    `exact` is called as exact(x, t) in 1D and exact(x, y, t) in 2D; `stationary` as
    stationary(x) or stationary(x, y). Both return states with a trailing variable axis.
    """

    left: str = "free"
    right: str = "free"
    bottom: str = "free"
    top: str = "free"
    exact: Callable[..., Array] | None = None
    stationary: Callable[..., Array] | None = None

    def __post_init__(self) -> None:
        for side in _OPPOSITE:
            kind = getattr(self, side)
            if kind not in BOUNDARY_KINDS:
                raise ConfigurationError(f"boundary.{side}", f"expected one of {', '.join(BOUNDARY_KINDS)}")

    def check(self, dim: int) -> None:
        """Raise ConfigurationError when a side lacks what its kind needs."""
        sides = ("left", "right") if dim == 1 else tuple(_OPPOSITE)
        for side in sides:
            kind = getattr(self, side)
            if kind == "periodic" and getattr(self, _OPPOSITE[side]) != "periodic":
                raise ConfigurationError(f"boundary.{side}", "periodic boundaries come in pairs")
            if kind == "dirichlet-exact" and self.exact is None:
                raise ConfigurationError(f"boundary.{side}", "dirichlet-exact needs an exact solution")
            if kind == "dirichlet-stationary" and self.stationary is None:
                raise ConfigurationError(f"boundary.{side}", "dirichlet-stationary needs a stationary solution")


def _fill_side(
    values: Array, coords: tuple[Array, ...], g: int, n: int, kind: str, low: bool, bc: BoundaryConditions, t: float
) -> None:
    """Fill the ghosts of one side; values and coords have the normal axis first."""
    ghosts = slice(0, g) if low else slice(g + n, g + n + g)
    if kind == "free":
        values[ghosts] = values[g] if low else values[g + n - 1]
    elif kind == "periodic":
        if n < g:
            raise DimensionError(f"Periodic boundaries need at least {g} nodes, got {n}")
        values[ghosts] = values[n : n + g] if low else values[g : 2 * g]
    else:
        points = tuple(c[ghosts] for c in coords)
        if kind == "dirichlet-exact":
            assert bc.exact is not None
            values[ghosts] = bc.exact(*points, t)
        else:
            assert bc.stationary is not None
            values[ghosts] = bc.stationary(*points)


def fill_ghosts(state: StateField, grid: Grid, bc: BoundaryConditions, t: float | None = None) -> StateField:
    """Return a copy of the state with ghosts set; interior nodes are left untouched.

    In 2D the x ghosts are filled first, then the y ghosts over the full x extent, which
    also sets the corners.
    """
    bc.check(grid.dim)
    t = state.t if t is None else t
    values = state.values.copy()
    g = grid.ghost
    if isinstance(grid, GridSpec):
        coords: tuple[Array, ...] = (grid.x_ext,)
        axes = [(0, grid.n, "left", "right")]
    else:
        coords = grid.mesh_ext
        axes = [(0, grid.nx, "left", "right"), (1, grid.ny, "bottom", "top")]
    for axis, n, low_side, high_side in axes:
        view = np.moveaxis(values, axis, 0)
        moved = tuple(np.moveaxis(c, axis, 0) for c in coords)
        _fill_side(view, moved, g, n, getattr(bc, low_side), True, bc, t)
        _fill_side(view, moved, g, n, getattr(bc, high_side), False, bc, t)
    return StateField(values, state.t)


def stable_dt(state: StateField, grid: Grid, model: ModelSpec, cfl: float) -> tuple[float, float]:
    """CFL time step from the largest wave speed over the interior nodes.

    Returns:
        Tuple of (dt, max wave speed); dt is inf when every speed vanishes
    """
    interior = state.interior(grid)
    with np.errstate(all="ignore"):
        speed_x = float(np.max(model.max_wave_speed(interior)))
        if isinstance(grid, GridSpec2D):
            speed_y = float(np.max(model.max_wave_speed_y(interior)))  # type: ignore[attr-defined]
            rate = speed_x / grid.dx + speed_y / grid.dy
            speed = max(speed_x, speed_y)
        else:
            rate = speed_x / grid.dx
            speed = speed_x
    if not np.isfinite(rate):
        return float("nan"), speed
    return (cfl / rate if rate > 0.0 else float("inf")), speed


def required_ghost(scheme: SchemeConfig) -> int:
    """Ghost width a scheme needs: its stencil half-width, and 2 for the limiter stencils."""
    return max(scheme.p, 2)


def make_stepper(scheme: SchemeConfig, grid: Grid, model: ModelSpec, logger: Logger | None = None) -> Stepper:
    """Bind the step kernel of a scheme to a grid and a model."""
    p = scheme.p
    if isinstance(grid, GridSpec2D):
        mesh, law = grid, cast(ModelSpec2D, model)
        kernels: dict[str, Stepper] = {
            "cat": lambda s, dt: cat2d_step(s, mesh, p, dt, law),
            "wbcat": lambda s, dt: wbcat2d_step(s, mesh, p, dt, law, logger=logger),
            "acat": lambda s, dt: acat2d_step(s, mesh, p, dt, law, settings=scheme, logger=logger),
            "wbacat": lambda s, dt: wbacat2d_step(s, mesh, p, dt, law, settings=scheme, logger=logger),
            "lf": lambda s, dt: lf2d_step(s, mesh, dt, law),
            "wblf": lambda s, dt: lf2d_step(s, mesh, dt, law, wb=True, logger=logger),
        }
    else:
        line, pool = grid, WorkspacePool()
        kernels = {
            "cat": lambda s, dt: cat_step(s, line, p, dt, model, pool),
            "wbcat": lambda s, dt: wb_step(s, line, p, dt, model, logger=logger, pool=pool),
            "acat": lambda s, dt: acat_step(s, line, p, dt, model, settings=scheme, logger=logger, pool=pool),
            "wbacat": lambda s, dt: acat_step(
                s, line, p, dt, model, wb=True, settings=scheme, logger=logger, pool=pool
            ),
            "lf": lambda s, dt: lf_step(s, line, dt, model),
            "wblf": lambda s, dt: lf_step(s, line, dt, model, wb=True, logger=logger),
        }
    return kernels[scheme.kind]


@dataclass(frozen=True)
class ErrorNorms:
    """Absolute per-variable errors."""

    l1: Array
    linf: Array

    @property
    def l1_total(self) -> float:
        return float(np.sum(self.l1))

    @property
    def linf_max(self) -> float:
        return float(np.max(self.linf))


@dataclass
class RunResult:
    state: StateField
    t: float
    steps: int
    dt_history: list[float] = field(default_factory=list)
    errors: ErrorNorms | None = None
    wall_time: float = 0.0


def restrict(values: Array, source: Grid, target: Grid) -> Array:
    """Sample interior values of a finer (or equal) mesh at the nodes of `target`.

    Nodes are taken by index when the interval counts divide evenly, otherwise the
    nearest node is used.

    Raises:
        DimensionError: If the meshes cover different domains or dimensions
    """
    if source.dim != target.dim:
        raise DimensionError(f"Cannot compare a {source.dim}D with a {target.dim}D mesh")
    if isinstance(source, GridSpec) and isinstance(target, GridSpec):
        axes = [(source.a, source.b, source.n, target.a, target.b, target.n)]
    elif isinstance(source, GridSpec2D) and isinstance(target, GridSpec2D):
        axes = [
            (source.ax, source.bx, source.nx, target.ax, target.bx, target.nx),
            (source.ay, source.by, source.ny, target.ay, target.by, target.ny),
        ]
    else:
        raise DimensionError("Mixed mesh types")
    index = []
    for lo, hi, n, target_lo, target_hi, target_n in axes:
        if not (np.isclose(lo, target_lo) and np.isclose(hi, target_hi)):
            raise DimensionError(f"Meshes cover [{lo}, {hi}] and [{target_lo}, {target_hi}]")
        if (n - 1) % (target_n - 1) == 0:
            index.append(np.arange(target_n) * ((n - 1) // (target_n - 1)))
        else:
            spacing = (hi - lo) / (n - 1)
            points = target_lo + (target_hi - target_lo) / (target_n - 1) * np.arange(target_n)
            index.append(np.clip(np.rint((points - lo) / spacing).astype(int), 0, n - 1))
    return values[np.ix_(*index)]


def error_norms(
    numeric: StateField,
    reference: Reference,
    grid: Grid,
    t: float | None = None,
    reference_grid: Grid | None = None,
) -> ErrorNorms:
    """L1 = cell volume * sum |diff| and Linf per variable over the interior nodes.

    The reference may be an exact solution callable (evaluated at time t), a StateField on
    `reference_grid` (restricted to this grid) or an array of interior values.

    Raises:
        DimensionError: If the reference does not match the grid
    """
    values = numeric.interior(grid)
    t = numeric.t if t is None else t
    if callable(reference):
        coords = (grid.x,) if isinstance(grid, GridSpec) else grid.mesh
        expected = np.asarray(reference(*coords, t), dtype=float)
    elif isinstance(reference, StateField):
        ref_grid = reference_grid or grid
        expected = restrict(reference.interior(ref_grid), ref_grid, grid)
    else:
        expected = np.asarray(reference, dtype=float)
    if expected.ndim == grid.dim:
        expected = expected[..., None]
    if expected.shape != values.shape:
        raise DimensionError(f"Reference of shape {expected.shape} does not match {values.shape}")
    diff = np.abs(values - expected)
    volume = grid.dx if isinstance(grid, GridSpec) else grid.dx * grid.dy
    axes = tuple(range(grid.dim))
    return ErrorNorms(volume * np.sum(diff, axis=axes), np.max(diff, axis=axes))


def convergence_orders(errors: Sequence[float], spacings: Sequence[float]) -> list[float | None]:
    """log(E_coarse / E_fine) / log(dx_coarse / dx_fine) between successive meshes; None first."""
    orders: list[float | None] = [None]
    for (e_c, h_c), (e_f, h_f) in zip(
        zip(errors, spacings, strict=True), zip(errors[1:], spacings[1:], strict=True), strict=False
    ):
        if e_c > 0.0 and e_f > 0.0:
            orders.append(float(np.log(e_c / e_f) / np.log(h_c / h_f)))
        else:
            orders.append(None)
    return orders


def advance(
    state: StateField,
    grid: Grid,
    scheme: SchemeConfig,
    model: ModelSpec,
    t_end: float,
    bc: BoundaryConditions,
    exact: Reference | None = None,
    logger: Logger | None = None,
) -> RunResult:
    """March from state.t to t_end: fill ghosts, pick the CFL step, apply the scheme.

    The last step is clipped so that the final time equals t_end exactly. When less than
    two CFL steps remain, the remainder is split evenly between the last two steps.

    Raises:
        ConfigurationError: If t_end does not lie after the initial time
        TimeStepUnderflowError: If the time step collapses or becomes non-finite
        DivergenceError: If the solution stops being finite
        PositivityError: If the model rejects the updated state
    """
    if not t_end > state.t:
        raise ConfigurationError("time.t_end", f"must exceed the initial time {state.t}, got {t_end}")
    if grid.ghost < required_ghost(scheme):
        raise DimensionError(f"{scheme.label} needs {required_ghost(scheme)} ghost nodes, grid has {grid.ghost}")
    bc.check(grid.dim)
    stepper = make_stepper(scheme, grid, model, logger)
    if logger:
        logger.run_started(scheme.label, grid.points, t_end)

    started = time.perf_counter()
    current = state
    history: list[float] = []
    while t_end - current.t > END_TOLERANCE * max(1.0, abs(t_end)):
        current = fill_ghosts(current, grid, bc)
        dt, speed = stable_dt(current, grid, model, scheme.cfl)
        remaining = t_end - current.t
        if not np.isfinite(speed) or np.isnan(dt):
            raise TimeStepUnderflowError("Non-finite wave speed", current.t, dt, speed)
        last = dt >= remaining
        if last:
            dt = remaining
        elif 2.0 * dt > remaining:
            # fewer than two CFL steps left: split the remainder evenly
            dt = 0.5 * remaining
        if not last and dt < MIN_RELATIVE_DT * abs(t_end):
            raise TimeStepUnderflowError("Time step underflow", current.t, dt, speed)

        current = stepper(current, dt)
        if last:
            current.t = t_end
        interior = current.interior(grid)
        if not np.all(np.isfinite(interior)):
            raise DivergenceError(f"Non-finite state after step {len(history) + 1} at t={current.t:.6g}")
        model.check_admissible(interior)
        history.append(dt)
        if logger:
            logger.step_progress(len(history), current.t, dt)

    current = fill_ghosts(current, grid, bc)
    wall_time = time.perf_counter() - started
    errors = error_norms(current, exact, grid, t_end) if exact is not None else None
    if logger:
        logger.run_finished(scheme.label, len(history), wall_time)
    return RunResult(current, current.t, len(history), history, errors, wall_time)
