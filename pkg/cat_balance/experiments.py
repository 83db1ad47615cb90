"""Experiment harness: single runs, convergence studies and well-balance checks.

Every file written here starts with ``# key = value`` lines holding the resolved
configuration, followed by a CSV table with a header row.
"""

import multiprocessing as mp
import os
import tempfile
from collections.abc import Callable, Iterable
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import IO, Any, cast

import numpy as np
import pandas as pd
from numpy.typing import NDArray

from .config import ROE_TOLERANCE, ExperimentConfig, SchemeConfig
from .driver import BoundaryConditions, ErrorNorms, RunResult, advance, convergence_orders, error_norms, required_ghost
from .errors import ConfigurationError, StationaryUnavailableError
from .geometry import make_geometry
from .grid import Grid, GridSpec, GridSpec2D, StateField
from .logger import Logger
from .models import (
    MODELS,
    LinearModel,
    ModelSpec,
    ShallowWaterModel,
    linear_exact,
    smooth_transition_profile,
    sw_stationary_solve,
)
from .presets import PRESETS

Array = NDArray[np.float64]
Profile = Callable[..., Array]


@dataclass(frozen=True)
class Setup:
    """Everything one simulation needs, built from a configuration."""

    config: ExperimentConfig
    scheme: SchemeConfig
    model: ModelSpec
    grid: Grid
    initial: StateField
    bc: BoundaryConditions
    exact: Profile | None
    stationary: Profile | None


@dataclass(frozen=True)
class FineReference:
    state: StateField
    grid: Grid
    label: str


def build_model(config: ExperimentConfig) -> ModelSpec:
    """Instantiate the configured model on its named geometry.

    Raises:
        ConfigurationError: If the geometry does not match the model dimension
    """
    geometry = make_geometry(config.geometry, **config.geometry_params)
    cls = MODELS[config.model]
    if geometry.dim != cls.dim:
        raise ConfigurationError(
            "geometry.name", f"'{config.geometry}' is {geometry.dim}D, {config.model} is {cls.dim}D"
        )
    accepted = {f.name for f in fields(cast(Any, cls))}
    params = {key: value for key, value in config.model_params.items() if key in accepted}
    return cast(Any, cls)(geometry=geometry, **params)


def build_grid(config: ExperimentConfig, points: int | None = None, ghost: int = 2) -> Grid:
    """Mesh of `points` nodes along x (default grid.points); y keeps the configured aspect."""
    spec = config.grid
    n = points or spec.points
    if config.dim == 1:
        return GridSpec(spec.x_min, spec.x_max, n, ghost)
    ny = n if spec.points_y is None else round((spec.points_y - 1) * (n - 1) / (spec.points - 1)) + 1
    assert spec.y_min is not None and spec.y_max is not None
    return GridSpec2D(spec.x_min, spec.x_max, n, spec.y_min, spec.y_max, ny, ghost)


def node_coordinates(grid: Grid) -> tuple[Array, ...]:
    return (grid.x,) if isinstance(grid, GridSpec) else grid.mesh


def stationary_solution(config: ExperimentConfig, model: ModelSpec) -> Profile:
    """Stationary state selected by the initial.* keys, as U*(x) or U*(x, y) of shape (..., d).

    Exponential family: u* = C exp(H / a) (a = 1 for Burgers). Energy family: the
    shallow-water solution through (depth, discharge) at anchor_x. Isothermal family:
    rho* = p* = C exp(-H) at rest.

    Raises:
        StationaryUnavailableError: If the model has no stationary family
        PositivityError: If the shallow-water anchor depth is not positive
    """
    init = config.initial
    family = model.stationary_family
    if family is None:
        raise StationaryUnavailableError(f"{model.name} has no stationary solutions")

    if family == "exponential":
        rate = model.velocity if isinstance(model, LinearModel) else 1.0
        H1 = model.geometry

        def exponential(x: Array) -> Array:
            return (init.constant * np.exp(H1.height(x) / rate))[..., None]

        return exponential

    if family == "isothermal":
        H2 = model.geometry

        def isothermal(x: Array, y: Array) -> Array:
            rho = init.constant * np.exp(-H2.height(x, y))
            zero = np.zeros_like(rho)
            return model.conservative(np.stack([rho, zero, zero, rho], axis=-1))

        return isothermal

    water = cast(ShallowWaterModel, model)
    sw_stationary_solve(init.depth, init.discharge, init.anchor_x, init.anchor_x, water.gravity, water.geometry)
    anchor = np.array([[init.depth, init.discharge]])
    anchor_x = np.array([init.anchor_x])

    def energy(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        states, valid = model.stationary_states(anchor, anchor_x, x.reshape(1, -1))
        if not valid[0]:
            raise StationaryUnavailableError(f"No stationary solution through h={init.depth}, q={init.discharge}")
        return states[0].reshape(*x.shape, model.n_vars)

    return energy


def _base_values(config: ExperimentConfig, model: ModelSpec) -> Array:
    init = config.initial
    values = init.values or (init.base,) * model.n_vars
    if len(values) != model.n_vars:
        raise ConfigurationError("initial.values", f"expected {model.n_vars} values, got {len(values)}")
    return np.array(values, dtype=float)


def smooth_transition(config: ExperimentConfig, model: ModelSpec) -> Callable[[Array], Array]:
    """U0(x) = base + scale * p(x) for every conserved variable, p the C^5 step."""
    base = _base_values(config, model)
    scale = config.initial.scale
    return lambda x: base + scale * smooth_transition_profile(x)[..., None]


def perturb(U: Array, coords: tuple[Array, ...], config: ExperimentConfig, model: ModelSpec) -> Array:
    """Add amplitude * exp(-width r^2) to the chosen primitive variables.

    Raises:
        ConfigurationError: If a variable is not a primitive variable of the model
    """
    init = config.initial
    names = init.variables or model.primitive_variables[:1]
    for name in names:
        if name not in model.primitive_variables:
            raise ConfigurationError(
                "initial.variables", f"'{name}' is not one of {', '.join(model.primitive_variables)}"
            )
    r2 = (coords[0] - init.center_x) ** 2
    if len(coords) == 2:
        r2 = r2 + (coords[1] - init.center_y) ** 2
    bump = init.amplitude * np.exp(-init.width * r2)
    W = model.primitive(U)
    for name in names:
        W[..., model.primitive_variables.index(name)] += bump
    return model.conservative(W)


def exact_solution(config: ExperimentConfig, model: ModelSpec, stationary: Profile | None) -> Profile | None:
    """Exact solution called as exact(x, t) or exact(x, y, t), or None when unknown."""
    kind = config.initial.kind
    if kind == "stationary" and stationary is not None:
        profile = stationary
        return lambda *args: profile(*args[:-1])
    if isinstance(model, LinearModel) and kind in ("smooth-transition", "constant"):
        if kind == "constant":
            value = _base_values(config, model)[0]

            def u0(x: Array) -> Array:
                return np.full_like(x, value)

        else:
            start = smooth_transition(config, model)

            def u0(x: Array) -> Array:
                return start(x)[..., 0]

        H, a = model.geometry, model.velocity
        return lambda x, t: linear_exact(x, t, u0, H, a)[..., None]
    return None


def initial_state(config: ExperimentConfig, model: ModelSpec, grid: Grid, stationary: Profile | None) -> StateField:
    """Initial interior values embedded in a state with unfilled ghosts."""
    coords = node_coordinates(grid)
    kind = config.initial.kind
    if kind == "constant":
        values = _base_values(config, model)
        U = np.broadcast_to(values, (*coords[0].shape, model.n_vars)).copy()
    elif kind == "smooth-transition":
        U = smooth_transition(config, model)(coords[0])
    else:
        if stationary is None:
            raise ConfigurationError("initial.kind", f"{model.name} has no stationary solutions")
        U = stationary(*coords)
        if kind == "perturbed-stationary":
            U = perturb(U, coords, config, model)
    return StateField.from_interior(U, grid)


def prepare(config: ExperimentConfig, scheme: SchemeConfig, points: int | None = None) -> Setup:
    """Build model, mesh, initial state and boundary conditions for one run.

    Raises:
        ConfigurationError: If the reference or the boundaries need a solution the
            configuration does not provide
    """
    model = build_model(config)
    grid = build_grid(config, points, required_ghost(scheme))
    try:
        stationary: Profile | None = stationary_solution(config, model)
    except StationaryUnavailableError:
        stationary = None
    exact = exact_solution(config, model, stationary)
    if config.reference.kind == "exact" and exact is None:
        raise ConfigurationError("reference.kind", f"no exact solution for {model.name} with {config.initial.kind}")
    if config.output.subtract_stationary and stationary is None:
        raise ConfigurationError("output.subtract_stationary", f"{model.name} has no stationary solutions")
    bound = config.boundary
    bc = BoundaryConditions(bound.left, bound.right, bound.bottom, bound.top, exact=exact, stationary=stationary)
    bc.check(grid.dim)
    initial = initial_state(config, model, grid, stationary)
    return Setup(config.with_scheme(scheme), scheme, model, grid, initial, bc, exact, stationary)


def simulate(
    config: ExperimentConfig, scheme: SchemeConfig, points: int | None = None, logger: Logger | None = None
) -> tuple[Setup, RunResult]:
    setup = prepare(config, scheme, points)
    result = advance(setup.initial, setup.grid, scheme, setup.model, config.t_end, setup.bc, logger=logger)
    return setup, result


def reference_scheme(config: ExperimentConfig) -> SchemeConfig:
    """Scheme of the fine reference run with the adaptation settings of scheme.*"""
    parsed = SchemeConfig.from_label(config.reference.scheme)
    return replace(config.scheme, kind=parsed.kind, p=parsed.p)


def fine_reference(
    config: ExperimentConfig, finest: int, logger: Logger | None = None, meshes: Iterable[int] = ()
) -> FineReference:
    """Run the reference scheme on reference.points nodes, or refinement x the finest mesh.

    Meshes of `meshes` whose interval count does not divide the reference one are compared
    at the nearest reference node, which is reported as a warning.
    """
    points = config.reference.points or (finest - 1) * config.reference.refinement + 1
    scheme = reference_scheme(config)
    if logger:
        logger.info(f"🔍 Reference solution: {scheme.label} on {points} points")
        unnested = [n for n in meshes if n > 1 and (points - 1) % (n - 1) != 0]
        if unnested:
            logger.warning(f"⚠️ Meshes {unnested} do not nest in the {points} point reference; using nearest nodes")
    setup, result = simulate(config, scheme, points, logger)
    return FineReference(result.state, setup.grid, scheme.label)


def measure(setup: Setup, result: RunResult, fine: FineReference | None = None) -> ErrorNorms | None:
    """Errors against the configured reference, or None when there is none."""
    kind = setup.config.reference.kind
    if kind == "none":
        return None
    if kind == "exact":
        assert setup.exact is not None
        return error_norms(result.state, setup.exact, setup.grid, result.t)
    if kind == "stationary":
        if setup.stationary is None:
            raise ConfigurationError("reference.kind", f"{setup.model.name} has no stationary solutions")
        return error_norms(result.state, setup.stationary(*node_coordinates(setup.grid)), setup.grid)
    if fine is None:
        raise ConfigurationError("reference.kind", "fine reference was not computed")
    return error_norms(result.state, fine.state, setup.grid, reference_grid=fine.grid)


def snapshot_frame(setup: Setup, result: RunResult) -> pd.DataFrame:
    """Coordinates, conserved and derived variables, and optionally the deviation from U*."""
    coords = node_coordinates(setup.grid)
    U = result.state.interior(setup.grid)
    model = setup.model
    columns: dict[str, Array] = {name: c.ravel() for name, c in zip(("x", "y"), coords, strict=False)}
    for k, name in enumerate(model.variables):
        columns[name] = U[..., k].ravel()
    height = model.geometry.height(*coords)
    columns["H"] = np.asarray(height, dtype=float).ravel()
    for name, values in model.derived(U, height).items():
        columns[name] = values.ravel()
    if setup.config.output.subtract_stationary and setup.stationary is not None:
        deviation = U - setup.stationary(*coords)
        for k, name in enumerate(model.variables):
            columns[f"{name}_minus_stationary"] = deviation[..., k].ravel()
    return pd.DataFrame(columns)


def _header(config: ExperimentConfig, extra: dict[str, Any] | None = None) -> dict[str, str]:
    header = config.resolved_items()
    for key, value in (extra or {}).items():
        header[key] = str(value)
    return header


def _write_atomically(path: Path, write: Callable[[IO[str]], None], newline: str | None = None) -> Path:
    """Write through a temp file in the target directory, then rename it over `path`."""
    with tempfile.NamedTemporaryFile(
        "w", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False, encoding="utf-8", newline=newline
    ) as handle:
        temp = Path(handle.name)
        try:
            write(handle)
            handle.close()
            os.replace(temp, path)
        except BaseException:
            temp.unlink(missing_ok=True)
            raise
    return path


def write_table(path: Path, frame: pd.DataFrame, header: dict[str, str]) -> Path:
    """Write `# key = value` lines and a CSV table atomically (temp file, then rename)."""

    def write(handle: IO[str]) -> None:
        for key, value in header.items():
            handle.write(f"# {key} = {value}\n")
        frame.to_csv(handle, index=False, float_format="%.17g")

    return _write_atomically(path, write, newline="")


def write_metadata(path: Path, items: dict[str, str]) -> Path:
    lines = [f"{key} = {value}\n" for key, value in items.items()]
    return _write_atomically(path, lambda handle: handle.writelines(lines))


def run_decisions(setup: Setup, result: RunResult) -> dict[str, Any]:
    """Resolved numerical choices of a run, written into its metadata."""
    grid, scheme = setup.grid, setup.scheme
    decisions: dict[str, Any] = {
        "run.scheme": scheme.label,
        "run.points": grid.points,
        "run.ghost": grid.ghost,
        "run.dx": grid.dx,
        "run.dt_rule": "cfl * dx / max|lambda|" if grid.dim == 1 else "cfl / (max|lambda_x|/dx + max|lambda_y|/dy)",
        "run.epsilon": scheme.epsilon_value(grid.dx),
        "run.roe_tolerance": f"{ROE_TOLERANCE:g} * max(1, |u_i|, |u_i+1|)",
        "run.threshold": scheme.threshold,
        "run.steps": result.steps,
        "run.t_final": result.t,
        "run.wall_time": f"{result.wall_time:.3f}",
    }
    if isinstance(grid, GridSpec2D):
        decisions["run.dy"] = grid.dy
    if result.dt_history:
        decisions["run.dt_min"] = min(result.dt_history)
        decisions["run.dt_max"] = max(result.dt_history)
    return decisions


def run(config: ExperimentConfig, out_dir: str | Path, logger: Logger | None = None) -> list[Path]:
    """Run config.scheme once and write the snapshot, metadata and error summary.

    Returns:
        Paths of the written files
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fine = (
        fine_reference(config, config.grid.points, logger, [config.grid.points])
        if config.reference.kind == "fine"
        else None
    )
    setup, result = simulate(config, config.scheme, logger=logger)
    errors = measure(setup, result, fine)

    stem = f"{config.name}_{config.scheme.label}_{setup.grid.points}"
    decisions = run_decisions(setup, result)
    written = []
    if config.output.snapshot:
        written.append(write_table(out / f"{stem}.csv", snapshot_frame(setup, result), _header(config, decisions)))
    written.append(write_metadata(out / f"{stem}.meta", _header(config, decisions)))
    if errors is not None:
        frame = pd.DataFrame({"variable": setup.model.variables, "l1": errors.l1, "linf": errors.linf})
        written.append(write_table(out / f"{stem}_errors.csv", frame, _header(config, decisions)))
        if logger:
            logger.info(f"📊 {config.scheme.label} L1 error {errors.l1_total:.3e}, Linf {errors.linf_max:.3e}")
    return written


# (config, scheme, points, fine reference)
Job = tuple[ExperimentConfig, SchemeConfig, int, FineReference | None]
JobResult = tuple[str, int, float, Array, Array]


def measure_job(job: Job, logger: Logger | None = None) -> JobResult:
    """Run one (scheme, mesh) pair and return its errors; top level so worker processes can pickle it."""
    config, scheme, points, fine = job
    setup, result = simulate(config, scheme, points, logger)
    errors = measure(setup, result, fine)
    if errors is None:
        raise ConfigurationError("reference.kind", "a study needs a reference")
    return scheme.label, points, setup.grid.dx, errors.l1, errors.linf


def run_jobs(jobs: list[Job], processes: int = 1, logger: Logger | None = None) -> list[JobResult]:
    """Run jobs serially or on a process pool; results keep the job order."""
    if processes <= 1 or len(jobs) == 1:
        return [measure_job(job, logger) for job in jobs]
    if logger:
        logger.info(f"🚀 {len(jobs)} runs on {min(processes, len(jobs))} processes")
    with mp.Pool(processes=min(processes, len(jobs))) as pool:
        return pool.map(measure_job, jobs)


def _study_jobs(config: ExperimentConfig, fine: FineReference | None) -> list[Job]:
    return [(config, scheme, points, fine) for scheme in config.schemes for points in config.meshes]


def convergence_table(results: Iterable[JobResult], variables: tuple[str, ...]) -> pd.DataFrame:
    """One row per mesh with the L1 error and observed order of every scheme (and variable)."""
    by_label: dict[str, list[JobResult]] = {}
    for entry in results:
        by_label.setdefault(entry[0], []).append(entry)
    columns: dict[str, list[Any]] = {}
    for label, entries in by_label.items():
        entries.sort(key=lambda entry: entry[1])
        columns.setdefault("points", [entry[1] for entry in entries])
        spacings = [entry[2] for entry in entries]
        for k, name in enumerate(variables):
            prefix = label if len(variables) == 1 else f"{label}_{name}"
            errors = [float(entry[3][k]) for entry in entries]
            columns[f"{prefix}_error"] = errors
            columns[f"{prefix}_order"] = convergence_orders(errors, spacings)
    return pd.DataFrame(columns)


def convergence(
    config: ExperimentConfig, out_dir: str | Path, jobs: int = 1, logger: Logger | None = None
) -> Path:
    """Errors and orders of every scheme of schemes.list on every mesh of convergence.meshes.

    Raises:
        ConfigurationError: If no reference is configured
    """
    if config.reference.kind == "none":
        raise ConfigurationError("reference.kind", "a convergence study needs a reference")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fine = (
        fine_reference(config, max(config.meshes), logger, config.meshes) if config.reference.kind == "fine" else None
    )
    results = run_jobs(_study_jobs(config, fine), jobs, logger)
    table = convergence_table(results, MODELS[config.model].variables)
    if logger:
        logger.info(f"📊 Convergence of {config.name}:\n{table.to_string(index=False)}")
    extra = {"convergence.reference": fine.label if fine else config.reference.kind}
    return write_table(out / f"{config.name}_convergence.csv", table, _header(config, extra))


def wb_check(config: ExperimentConfig, out_dir: str | Path, jobs: int = 1, logger: Logger | None = None) -> Path:
    """Start from the nodal stationary state and report its L1 and Linf drift at t_end.

    Raises:
        ConfigurationError: If the model has no stationary solutions
    """
    if MODELS[config.model].stationary_family is None:
        raise ConfigurationError("model.name", f"{config.model} has no stationary solutions")
    config = config.override(
        {"initial.kind": "stationary", "reference.kind": "stationary", "output.subtract_stationary": "false"}
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = run_jobs(_study_jobs(config, None), jobs, logger)
    variables = MODELS[config.model].variables
    rows = [
        {"points": points, "scheme": label, "variable": name, "l1": float(l1[k]), "linf": float(linf[k])}
        for label, points, _, l1, linf in results
        for k, name in enumerate(variables)
    ]
    table = pd.DataFrame(rows, columns=["points", "scheme", "variable", "l1", "linf"])
    if logger:
        logger.info(f"📊 Stationary drift of {config.name}:\n{table.to_string(index=False)}")
    return write_table(out / f"{config.name}_wb_check.csv", table, _header(config))


def list_presets() -> list[tuple[str, str]]:
    return [(name, preset.description) for name, preset in sorted(PRESETS.items())]
