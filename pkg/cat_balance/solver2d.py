"""CAT2P, WBCAT2P, ACAT2P and Lax-Friedrichs on 2D node meshes.

The Taylor recursion runs on (2P)x(2P) blocks of nodes c + (j1, j2), j1, j2 = -P+1..P.
The block centred at c + (1/2, 1/2) provides the x-flux at (c1+1/2, c2) from its row
j2 = 0, the y-flux at (c1, c2+1/2) from its column j1 = 0, and the subinterval
integrals of that row and column. Blocks are processed in chunks to bound memory.
"""

from dataclasses import dataclass, fields

import numpy as np
from numpy.typing import NDArray

from .adaptive import lf_flux, lf_source, line_indicators, select_orders, wb_lf_source
from .cat1d import assemble_source, check_finite
from .config import SchemeConfig
from .errors import DimensionError, DivergenceError, InvalidOrderError
from .grid import GridSpec2D, StateField
from .logger import Logger
from .models import ModelSpec2D
from .stencil_calculus import cat_tables, taylor_factors

Array = NDArray[np.float64]

DEFAULT_CHUNK = 1024


@dataclass(frozen=True)
class MultiIndexStencil:
    """Nodes c + (j1, j2), j1, j2 = -P+1..P, of the block centred at c + (1/2, 1/2)."""

    P: int

    def __post_init__(self) -> None:
        if self.P < 1:
            raise InvalidOrderError(f"Stencil half-width must be positive, got {self.P}")

    @property
    def offsets(self) -> NDArray[np.int64]:
        return np.arange(-self.P + 1, self.P + 1)

    def indices(self, centres: NDArray[np.int64]) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        """Index arrays of shape (M, 2P, 2P) for block centres of shape (M, 2)."""
        centres = np.asarray(centres, dtype=int).reshape(-1, 2)
        width = 2 * self.P
        rows = centres[:, 0, None, None] + self.offsets[None, :, None]
        cols = centres[:, 1, None, None] + self.offsets[None, None, :]
        shape = (centres.shape[0], width, width)
        return np.broadcast_to(rows, shape), np.broadcast_to(cols, shape)

    def gather(self, values: Array, centres: NDArray[np.int64]) -> Array:
        rows, cols = self.indices(centres)
        return values[rows, cols]


@dataclass(frozen=True)
class BlockOffsets:
    """Stationary values subtracted from every stage: F*, G*, S1*, S2* on each block."""

    flux: Array
    flux_y: Array
    source: Array
    source_y: Array

    @classmethod
    def from_states(cls, states: Array, model: ModelSpec2D) -> "BlockOffsets":
        return cls(model.flux(states), model.flux_y(states), model.source(states), model.source_y(states))

    def take(self, part: slice) -> "BlockOffsets":
        return BlockOffsets(self.flux[part], self.flux_y[part], self.source[part], self.source_y[part])


@dataclass(frozen=True)
class BlockResult:
    """Fluxes of shape (M, d) and row/column integrals of shape (2P, M, 2P-1, d) or None."""

    flux: Array
    flux_y: Array
    integrals: Array | None
    integrals_y: Array | None


def taylor_blocks(
    P: int,
    blocks: Array,
    hx: Array | None,
    hy: Array | None,
    dx: float,
    dy: float,
    dt: float,
    model: ModelSpec2D,
    offsets: BlockOffsets | None = None,
) -> BlockResult:
    """Run the 2D CAT2P recursion on a batch of (2P)x(2P) blocks of shape (M, 2P, 2P, d).

    Raises:
        DivergenceError: If a stage produces non-finite values; `node` is the batch index
    """
    blocks = np.asarray(blocks, dtype=float)
    batch, rows, cols, n_vars = blocks.shape
    width = 2 * P
    if (rows, cols) != (width, width):
        raise DimensionError(f"Block of shape {rows}x{cols} does not match P={P}")
    tables = cat_tables(P)
    balance = hx is not None and hy is not None
    D, Q = tables.first_derivative, tables.quadrature

    def evaluate(states: Array, staged: bool) -> tuple[Array, Array, Array | None, Array | None]:
        def shifted(values: Array, offset: Array | None) -> Array:
            if offset is None:
                return values
            return values - (offset[:, None] if staged else offset)

        f = shifted(model.flux(states), offsets.flux if offsets else None)
        g = shifted(model.flux_y(states), offsets.flux_y if offsets else None)
        if not balance:
            return f, g, None, None
        wx, wy = hx[..., None], hy[..., None]  # type: ignore[index]
        if staged:
            wx, wy = wx[:, None], wy[:, None]
        s1 = shifted(model.source(states), offsets.source if offsets else None) * wx
        s2 = shifted(model.source_y(states), offsets.source_y if offsets else None) * wy
        ix = dx * np.einsum("sa,...abd->...sbd", Q, s1)
        jy = dy * np.einsum("sb,...abd->...asd", Q, s2)
        return f, g, ix, jy

    F = np.zeros((width, batch, width, width, n_vars))
    G = np.zeros_like(F)
    I = np.zeros((width, batch, width - 1, width, n_vars))  # noqa: E741
    J = np.zeros((width, batch, width, width - 1, n_vars))
    time_derivatives = np.zeros_like(F)

    F[0], G[0], ix, jy = evaluate(blocks, False)
    check_finite(F[0], 0)
    check_finite(G[0], 0)
    if balance:
        I[0], J[0] = ix, jy

    factors = taylor_factors(P, dt)
    cum_x = np.zeros((batch, width, width, n_vars))
    cum_y = np.zeros((batch, width, width, n_vars))
    for k in range(1, width):
        derivative = (
            -np.einsum("ja,mabd->mjbd", D, F[k - 1]) / dx - np.einsum("jb,mabd->majd", D, G[k - 1]) / dy
        )
        if balance:
            np.cumsum(I[k - 1], axis=1, out=cum_x[:, 1:])
            np.cumsum(J[k - 1], axis=2, out=cum_y[:, :, 1:])
            derivative += np.einsum("ja,mabd->mjbd", D, cum_x) / dx + np.einsum("jb,mabd->majd", D, cum_y) / dy
        time_derivatives[k] = derivative

        stages = blocks[:, None] + np.einsum("rk,kmabd->mrabd", factors[:, :k], time_derivatives[1 : k + 1])
        f, g, ix, jy = evaluate(stages, True)
        check_finite(f, k)
        check_finite(g, k)
        time_weights = tables.time_derivatives[k] / dt**k
        F[k] = np.einsum("r,mrabd->mabd", time_weights, f)
        G[k] = np.einsum("r,mrabd->mabd", time_weights, g)
        if balance:
            check_finite(ix, k)
            check_finite(jy, k)
            I[k] = np.einsum("r,mrsbd->msbd", time_weights, ix)
            J[k] = np.einsum("r,mrasd->masd", time_weights, jy)

    centre = P - 1
    coefficients = tables.flux_factors * dt ** np.arange(width)
    return BlockResult(
        flux=np.einsum("k,a,kmad->md", coefficients, tables.midpoint, F[:, :, :, centre]),
        flux_y=np.einsum("k,b,kmbd->md", coefficients, tables.midpoint, G[:, :, centre]),
        integrals=I[:, :, :, centre].copy() if balance else None,
        integrals_y=J[:, :, centre].copy() if balance else None,
    )


def block_terms(
    state: StateField,
    grid: GridSpec2D,
    P: int,
    dt: float,
    model: ModelSpec2D,
    centres: NDArray[np.int64],
    offsets: BlockOffsets | None = None,
    chunk_size: int = DEFAULT_CHUNK,
) -> BlockResult:
    """Run `taylor_blocks` on the blocks centred at `centres` (extended indices), chunk by chunk."""
    if grid.ghost < P:
        raise DimensionError(f"Ghost width {grid.ghost} smaller than P={P}")
    stencil = MultiIndexStencil(P)
    hx_all = hy_all = None
    if not model.geometry.flat:
        hx_all, hy_all = model.geometry.gradient(*grid.mesh_ext)

    parts = []
    for start in range(0, len(centres), chunk_size):
        part = slice(start, start + chunk_size)
        rows, cols = stencil.indices(centres[part])
        hx = hy = None
        if hx_all is not None and hy_all is not None:
            hx, hy = hx_all[rows, cols], hy_all[rows, cols]
        try:
            parts.append(
                taylor_blocks(
                    P,
                    state.values[rows, cols],
                    hx,
                    hy,
                    grid.dx,
                    grid.dy,
                    dt,
                    model,
                    offsets.take(part) if offsets else None,
                )
            )
        except DivergenceError as e:
            node = centres[part][int(e.node)]
            raise e.at_node((int(node[0]), int(node[1]))) from e

    def joined(name: str, axis: int) -> Array | None:
        values = [getattr(result, name) for result in parts]
        return None if values[0] is None else np.concatenate(values, axis=axis)

    flux, flux_y = joined("flux", 0), joined("flux_y", 0)
    assert flux is not None and flux_y is not None
    return BlockResult(flux, flux_y, joined("integrals", 1), joined("integrals_y", 1))


@dataclass(frozen=True)
class NodeTerms2D:
    """Per-node flux pairs and sources, each of shape (Nx, Ny, d)."""

    west: Array
    east: Array
    south: Array
    north: Array
    source_x: Array
    source_y: Array

    def where(self, mask: Array, other: "NodeTerms2D") -> "NodeTerms2D":
        """Take this object's terms where mask holds and `other`'s elsewhere."""
        keep = np.asarray(mask)[..., None]
        return NodeTerms2D(
            *(np.where(keep, getattr(self, f.name), getattr(other, f.name)) for f in fields(self))
        )

    def blend(self, weight: Array, other: "NodeTerms2D") -> "NodeTerms2D":
        """weight * self + (1 - weight) * other, node by node."""
        w = np.asarray(weight)[..., None]
        return NodeTerms2D(
            *(w * getattr(self, f.name) + (1.0 - w) * getattr(other, f.name) for f in fields(self))
        )


def _interior_nodes(grid: GridSpec2D) -> NDArray[np.int64]:
    g = grid.ghost
    rows, cols = np.meshgrid(np.arange(g, g + grid.nx), np.arange(g, g + grid.ny), indexing="ij")
    return np.stack([rows.ravel(), cols.ravel()], axis=-1)


def cat2d_terms(
    state: StateField, grid: GridSpec2D, P: int, dt: float, model: ModelSpec2D, chunk_size: int = DEFAULT_CHUNK
) -> NodeTerms2D:
    """CAT2P fluxes and sources at every interior node."""
    g, nx, ny = grid.ghost, grid.nx, grid.ny
    n_vars = state.values.shape[-1]
    rows, cols = np.meshgrid(np.arange(g - 1, g + nx), np.arange(g - 1, g + ny), indexing="ij")
    centres = np.stack([rows.ravel(), cols.ravel()], axis=-1)
    result = block_terms(state, grid, P, dt, model, centres, chunk_size=chunk_size)

    fx = result.flux.reshape(nx + 1, ny + 1, n_vars)[:, 1:]
    fy = result.flux_y.reshape(nx + 1, ny + 1, n_vars)[1:, :]
    if result.integrals is None or result.integrals_y is None:
        sx = sy = np.zeros((nx, ny, n_vars))
    else:
        ix = result.integrals.reshape(2 * P, nx + 1, ny + 1, 2 * P - 1, n_vars)
        jy = result.integrals_y.reshape(2 * P, nx + 1, ny + 1, 2 * P - 1, n_vars)
        sx = assemble_source(P, ix[:, :-1, 1:], ix[:, 1:, 1:], dt)
        sy = assemble_source(P, jy[:, 1:, :-1], jy[:, 1:, 1:], dt)
    return NodeTerms2D(fx[:-1], fx[1:], fy[:, :-1], fy[:, 1:], sx, sy)


@dataclass(frozen=True)
class NodeProfiles2D:
    """U*_i sampled on the (2W+1)x(2W+1) window around every interior node."""

    half_width: int
    states: Array  # (Nx, Ny, 2W+1, 2W+1, d)
    valid: Array  # (Nx, Ny)

    def window(self, half_width: int) -> Array:
        lo, hi = self.half_width - half_width, self.half_width + half_width + 1
        return self.states[:, :, lo:hi, lo:hi]


def node_profiles_2d(state: StateField, grid: GridSpec2D, model: ModelSpec2D, half_width: int) -> NodeProfiles2D:
    """Evaluate the local stationary solutions of all interior nodes in one call."""
    nodes = _interior_nodes(grid)
    offsets = np.arange(-half_width, half_width + 1)
    rows = nodes[:, 0, None, None] + offsets[None, :, None]
    cols = nodes[:, 1, None, None] + offsets[None, None, :]
    rows, cols = np.broadcast_arrays(rows, cols)
    xx, yy = grid.mesh_ext
    U = state.values
    anchor_x = np.stack([xx[nodes[:, 0], nodes[:, 1]], yy[nodes[:, 0], nodes[:, 1]]], axis=-1)
    targets = np.stack([xx[rows, cols], yy[rows, cols]], axis=-1).reshape(len(nodes), -1, 2)
    with np.errstate(all="ignore"):
        states, valid = model.stationary_states(U[nodes[:, 0], nodes[:, 1]], anchor_x, targets)
    side = 2 * half_width + 1
    states = states.reshape(len(nodes), side, side, -1)
    states = np.where(valid[:, None, None, None] & np.isfinite(states), states, U[rows, cols])
    shape = (grid.nx, grid.ny)
    return NodeProfiles2D(half_width, states.reshape(*shape, side, side, -1), np.asarray(valid, bool).reshape(shape))


def wb2d_terms(
    state: StateField,
    grid: GridSpec2D,
    P: int,
    dt: float,
    model: ModelSpec2D,
    profiles: NodeProfiles2D,
    chunk_size: int = DEFAULT_CHUNK,
) -> NodeTerms2D:
    """WBCAT2P terms from three blocks per node: its own and those shifted by -e1 and -e2."""
    nx, ny = grid.nx, grid.ny
    nodes = _interior_nodes(grid)
    windows = profiles.window(P).reshape(nx * ny, 2 * P + 1, 2 * P + 1, -1)
    n_vars = windows.shape[-1]

    def run(shift: tuple[int, int], stationary: Array) -> BlockResult:
        offsets = BlockOffsets.from_states(stationary, model)
        return block_terms(state, grid, P, dt, model, nodes - np.array(shift), offsets, chunk_size)

    own = run((0, 0), windows[:, 1:, 1:])
    west = run((1, 0), windows[:, :-1, 1:])
    south = run((0, 1), windows[:, 1:, :-1])

    shape = (nx, ny, n_vars)
    if own.integrals is None or west.integrals is None or own.integrals_y is None or south.integrals_y is None:
        sx = sy = np.zeros(shape)
    else:
        sx = assemble_source(P, west.integrals, own.integrals, dt).reshape(shape)
        sy = assemble_source(P, south.integrals_y, own.integrals_y, dt).reshape(shape)
    return NodeTerms2D(
        west.flux.reshape(shape),
        own.flux.reshape(shape),
        south.flux_y.reshape(shape),
        own.flux_y.reshape(shape),
        sx,
        sy,
    )


def lf2d_terms(
    state: StateField, grid: GridSpec2D, dt: float, model: ModelSpec2D, profiles: NodeProfiles2D | None = None
) -> NodeTerms2D:
    """Lax-Friedrichs fluxes and sources; well-balanced sources where profiles are valid."""
    U = state.values
    g, nx, ny = grid.ghost, grid.nx, grid.ny
    sx_, sy_ = grid.interior
    fx = lf_flux(U[g - 1 : g + nx, sy_], U[g : g + nx + 1, sy_], grid.dx, dt, model, axis=0, dims=2)
    fy = lf_flux(U[sx_, g - 1 : g + ny], U[sx_, g : g + ny + 1], grid.dy, dt, model, axis=1, dims=2)
    if model.geometry.flat:
        source_x = source_y = np.zeros_like(U[sx_, sy_])
    else:
        hx, hy = model.geometry.gradient(*grid.mesh)
        source_x = lf_source(U[sx_, sy_], hx, grid.dx, model, axis=0)
        source_y = lf_source(U[sx_, sy_], hy, grid.dy, model, axis=1)
    if profiles is not None:
        window = profiles.window(1)
        keep = profiles.valid[..., None]
        source_x = np.where(keep, wb_lf_source(window[:, :, :, 1], grid.dx, dt, model, axis=0, dims=2), source_x)
        source_y = np.where(keep, wb_lf_source(window[:, :, 1, :], grid.dy, dt, model, axis=1, dims=2), source_y)
    return NodeTerms2D(fx[:-1], fx[1:], fy[:, :-1], fy[:, 1:], source_x, source_y)


def update_2d(state: StateField, grid: GridSpec2D, dt: float, terms: NodeTerms2D) -> StateField:
    """U_i + dt/dx (F_w - F_e + S1) + dt/dy (G_s - G_n + S2); ghosts unchanged."""
    values = state.values.copy()
    values[grid.interior] += dt / grid.dx * (terms.west - terms.east + terms.source_x) + dt / grid.dy * (
        terms.south - terms.north + terms.source_y
    )
    return StateField(values, state.t + dt)


def cat2d_step(
    state: StateField, grid: GridSpec2D, P: int, dt: float, model: ModelSpec2D, chunk_size: int = DEFAULT_CHUNK
) -> StateField:
    """One 2D CAT2P step."""
    return update_2d(state, grid, dt, cat2d_terms(state, grid, P, dt, model, chunk_size))


def _well_balanced_terms(
    state: StateField,
    grid: GridSpec2D,
    p: int,
    dt: float,
    model: ModelSpec2D,
    profiles: NodeProfiles2D,
    chunk_size: int,
) -> NodeTerms2D:
    terms = wb2d_terms(state, grid, p, dt, model, profiles, chunk_size)
    if profiles.valid.all():
        return terms
    return terms.where(profiles.valid, cat2d_terms(state, grid, p, dt, model, chunk_size))


def _report_fallback(logger: Logger | None, profiles: NodeProfiles2D) -> None:
    if logger and logger.verbose and not profiles.valid.all():
        logger.stationary_fallback(int(np.count_nonzero(~profiles.valid)), profiles.valid.size)


def wbcat2d_step(
    state: StateField,
    grid: GridSpec2D,
    P: int,
    dt: float,
    model: ModelSpec2D,
    logger: Logger | None = None,
    chunk_size: int = DEFAULT_CHUNK,
) -> StateField:
    """One 2D WBCAT2P step; nodes without a stationary solution use CAT2P."""
    profiles = node_profiles_2d(state, grid, model, P)
    _report_fallback(logger, profiles)
    return update_2d(state, grid, dt, _well_balanced_terms(state, grid, P, dt, model, profiles, chunk_size))


@dataclass(frozen=True)
class IndicatorField2D:
    """Indicators along x lines (Nx+1, Ny) and y lines (Nx, Ny+1), reduced per node."""

    P: int
    psi_x: dict[int, Array]
    psi_y: dict[int, Array]
    phi_x: Array
    phi_y: Array
    phi: Array
    selected: Array
    admissible: Array


def compute_indicators_2d(
    state: StateField, grid: GridSpec2D, P: int, model: ModelSpec2D, settings: SchemeConfig
) -> IndicatorField2D:
    """psi and phi at the four interfaces of every node; an order must pass all four."""
    U = state.values
    g, nx, ny = grid.ghost, grid.nx, grid.ny
    psi_x, phi_x = line_indicators(
        U[:, g : g + ny],
        P,
        g - 1,
        nx + 1,
        settings.epsilon_value(grid.dx),
        settings,
        model,
        flux=model.flux,
        characteristic=model.flux_derivative,
    )
    psi_y_lines, phi_y_lines = line_indicators(
        np.swapaxes(U[g : g + nx], 0, 1),
        P,
        g - 1,
        ny + 1,
        settings.epsilon_value(grid.dy),
        settings,
        model,
        flux=model.flux_y,
        characteristic=model.flux_derivative_y,
    )
    psi_y = {p: value.T for p, value in psi_y_lines.items()}
    phi_y = phi_y_lines.T
    phi = np.minimum.reduce([phi_x[:-1], phi_x[1:], phi_y[:, :-1], phi_y[:, 1:]])
    if P >= 2:
        sides = [
            {p: value[:-1] for p, value in psi_x.items()},
            {p: value[1:] for p, value in psi_x.items()},
            {p: value[:, :-1] for p, value in psi_y.items()},
            {p: value[:, 1:] for p, value in psi_y.items()},
        ]
        selected, admissible = select_orders(P, sides, settings.threshold)
    else:
        selected, admissible = np.ones((nx, ny), dtype=int), np.zeros((nx, ny, 0), dtype=bool)
    return IndicatorField2D(P, psi_x, psi_y, phi_x, phi_y, phi, selected, admissible)


def acat2d_step(
    state: StateField,
    grid: GridSpec2D,
    P: int,
    dt: float,
    model: ModelSpec2D,
    wb: bool = False,
    settings: SchemeConfig | None = None,
    logger: Logger | None = None,
    chunk_size: int = DEFAULT_CHUNK,
) -> StateField:
    """One 2D ACAT2P step (WBACAT2P when wb is set)."""
    settings = settings or SchemeConfig(kind="wbacat" if wb else "acat", p=P)
    field = compute_indicators_2d(state, grid, P, model, settings)
    profiles = node_profiles_2d(state, grid, model, P) if wb else None
    if profiles is not None:
        _report_fallback(logger, profiles)

    combined: NodeTerms2D | None = None
    for order in np.unique(field.selected):
        p = int(order)
        if profiles is not None:
            terms = _well_balanced_terms(state, grid, p, dt, model, profiles, chunk_size)
        else:
            terms = cat2d_terms(state, grid, p, dt, model, chunk_size)
        if p == 1:
            terms = terms.blend(field.phi, lf2d_terms(state, grid, dt, model, profiles))
        combined = terms if combined is None else terms.where(field.selected == p, combined)

    assert combined is not None
    return update_2d(state, grid, dt, combined)


def lf2d_step(
    state: StateField,
    grid: GridSpec2D,
    dt: float,
    model: ModelSpec2D,
    wb: bool = False,
    logger: Logger | None = None,
) -> StateField:
    """One 2D Lax-Friedrichs step, well-balanced when wb is set."""
    profiles = node_profiles_2d(state, grid, model, 1) if wb else None
    if profiles is not None:
        _report_fallback(logger, profiles)
    return update_2d(state, grid, dt, lf2d_terms(state, grid, dt, model, profiles))


def wbacat2d_step(
    state: StateField,
    grid: GridSpec2D,
    P: int,
    dt: float,
    model: ModelSpec2D,
    settings: SchemeConfig | None = None,
    logger: Logger | None = None,
) -> StateField:
    """One 2D WBACAT2P step."""
    return acat2d_step(state, grid, P, dt, model, wb=True, settings=settings, logger=logger)
