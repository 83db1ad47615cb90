"""CAT2P update for 1D conservation and balance laws.

The local space-time Taylor recursion is vectorized over a batch of interfaces: every
array carries a leading batch axis M, a stencil axis j = -P+1..P (local index j+P-1)
and a trailing variable axis d.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionError, DivergenceError
from .grid import GridSpec, StateField
from .models import ModelSpec
from .stencil_calculus import cat_tables, taylor_factors

Array = NDArray[np.float64]


@dataclass
class LocalWorkspace:
    """Scratch arrays of the Taylor recursion for a batch of interfaces.

    Layout: stage_states[M, r, j, d]; time_derivatives[k, M, j, d] (k = 0 unused);
    flux_derivatives[k, M, j, d]; subinterval_integrals[k, M, s, d] with s = j+P-2
    for the subinterval [j-1, j].
    """

    P: int
    stage_states: Array
    time_derivatives: Array
    flux_derivatives: Array
    subinterval_integrals: Array

    @classmethod
    def allocate(cls, P: int, batch: int, n_vars: int) -> "LocalWorkspace":
        width = 2 * P
        return cls(
            P=P,
            stage_states=np.zeros((batch, width, width, n_vars)),
            time_derivatives=np.zeros((width, batch, width, n_vars)),
            flux_derivatives=np.zeros((width, batch, width, n_vars)),
            subinterval_integrals=np.zeros((width, batch, width - 1, n_vars)),
        )

    def fits(self, P: int, batch: int, n_vars: int) -> bool:
        return self.P == P and self.stage_states.shape == (batch, 2 * P, 2 * P, n_vars)


class WorkspacePool:
    """LocalWorkspaces of one stepper, allocated on first use of each (P, batch, d)."""

    def __init__(self) -> None:
        self._spaces: dict[tuple[int, int, int], LocalWorkspace] = {}

    def get(self, P: int, batch: int, n_vars: int) -> LocalWorkspace:
        key = (P, batch, n_vars)
        if key not in self._spaces:
            self._spaces[key] = LocalWorkspace.allocate(P, batch, n_vars)
        return self._spaces[key]

    def __len__(self) -> int:
        return len(self._spaces)


def check_finite(values: Array, stage: int) -> None:
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise DivergenceError(f"Non-finite value in Taylor stage {stage}", stage=stage, node=int(bad[0]))


def taylor_interfaces(
    P: int,
    stencil: Array,
    hx: Array | None,
    dx: float,
    dt: float,
    model: ModelSpec,
    flux_offset: Array | None = None,
    source_offset: Array | None = None,
    workspace: LocalWorkspace | None = None,
) -> tuple[Array, Array | None, LocalWorkspace]:
    """Run the CAT2P recursion on a batch of interface stencils.

    Args:
        P: Half stencil width
        stencil: States U^n on each stencil, shape (M, 2P, d)
        hx: H_x at the stencil nodes, shape (M, 2P), or None for a conservation law
        dx: Mesh spacing
        dt: Time step
        model: Balance law
        flux_offset: Per-node values subtracted from every stage flux, shape (M, 2P, d)
        source_offset: Per-node values subtracted from every stage source, shape (M, 2P, d)
        workspace: Reusable scratch arrays

    Returns:
        Tuple of (fluxes of shape (M, d), integrals Ĩ^{(k)} of shape (2P, M, 2P-1, d) or
        None, workspace). The integrals already carry the dx factor.

    Raises:
        DivergenceError: If a stage produces non-finite values; `node` is the batch index
    """
    stencil = np.asarray(stencil, dtype=float)
    batch, width, n_vars = stencil.shape
    if width != 2 * P:
        raise DimensionError(f"Stencil of width {width} does not match P={P}")
    tables = cat_tables(P)
    ws = workspace if workspace is not None and workspace.fits(P, batch, n_vars) else None
    ws = ws or LocalWorkspace.allocate(P, batch, n_vars)
    balance = hx is not None

    flux0 = model.flux(stencil)
    ws.flux_derivatives[0] = flux0 if flux_offset is None else flux0 - flux_offset
    check_finite(ws.flux_derivatives[0], 0)
    if balance:
        weights = hx[..., None]
        integrand = model.source(stencil)
        if source_offset is not None:
            integrand = integrand - source_offset
        ws.subinterval_integrals[0] = dx * np.einsum("sl,mld->msd", tables.quadrature, integrand * weights)

    factors = taylor_factors(P, dt)
    cumulative = np.zeros((batch, width, n_vars))
    for k in range(1, width):
        derivative = -np.einsum("jl,mld->mjd", tables.first_derivative, ws.flux_derivatives[k - 1])
        if balance:
            np.cumsum(ws.subinterval_integrals[k - 1], axis=1, out=cumulative[:, 1:])
            derivative += np.einsum("jl,mld->mjd", tables.first_derivative, cumulative)
        ws.time_derivatives[k] = derivative / dx

        # U^{k,n+r}_j = U^n_j + sum_m (r dt)^m/m! U^{(m)}_j
        ws.stage_states[:] = stencil[:, None]
        ws.stage_states += np.einsum("rm,mbjd->brjd", factors[:, :k], ws.time_derivatives[1 : k + 1])

        stage_flux = model.flux(ws.stage_states)
        if flux_offset is not None:
            stage_flux = stage_flux - flux_offset[:, None]
        check_finite(stage_flux, k)
        time_weights = tables.time_derivatives[k] / dt**k
        ws.flux_derivatives[k] = np.einsum("r,mrjd->mjd", time_weights, stage_flux)

        if balance:
            stage_source = model.source(ws.stage_states)
            if source_offset is not None:
                stage_source = stage_source - source_offset[:, None]
            stage_integrals = dx * np.einsum("sl,mrld->mrsd", tables.quadrature, stage_source * weights[:, None])
            check_finite(stage_integrals, k)
            ws.subinterval_integrals[k] = np.einsum("r,mrsd->msd", time_weights, stage_integrals)

    coefficients = tables.flux_factors * dt ** np.arange(width)
    flux = np.einsum("k,j,kmjd->md", coefficients, tables.midpoint, ws.flux_derivatives)
    integrals = ws.subinterval_integrals.copy() if balance else None
    return flux, integrals, ws


def cat_flux_conservative(P: int, stencil: Array, dx: float, dt: float, model: ModelSpec) -> Array:
    """CAT2P numerical flux F^P_{i+1/2} of a conservation law on one 2P-point stencil."""
    flux, _, _ = taylor_interfaces(P, np.asarray(stencil, dtype=float)[None], None, dx, dt, model)
    return flux[0]


def cat_interface_balance(
    P: int, stencil: Array, stencil_hx: Array, dx: float, dt: float, model: ModelSpec
) -> tuple[Array, Array]:
    """CAT2P flux and time-differentiated subinterval integrals at one interface.

    Returns:
        Tuple of (flux of shape (d,), integrals of shape (2P, 2P-1, d) indexed [k, j+P-2])
    """
    stencil = np.asarray(stencil, dtype=float)[None]
    hx = np.asarray(stencil_hx, dtype=float)[None]
    flux, integrals, _ = taylor_interfaces(P, stencil, hx, dx, dt, model)
    assert integrals is not None
    return flux[0], integrals[:, 0]


def assemble_source(P: int, left_integrals: Array, right_integrals: Array, dt: float) -> Array:
    """Numerical source S̃^P_i spliced from the integrals of the two adjacent interfaces.

    Both integral arrays are shaped (2P, ..., 2P-1, d); the left one comes from the
    interface i-1/2 and the right one from i+1/2.
    """
    left = np.asarray(left_integrals, dtype=float)
    right = np.asarray(right_integrals, dtype=float)
    if left.shape != right.shape or left.shape[0] != 2 * P or left.shape[-2] != 2 * P - 1:
        raise DimensionError(f"Integral arrays {left.shape} / {right.shape} do not match P={P}")
    tables = cat_tables(P)
    # j = -P+1..0 from [i-1; j, j+1], j = 1..P from [i; j-1, j]
    spliced = np.concatenate([left[..., :P, :], right[..., P - 1 :, :]], axis=-2)
    coefficients = tables.flux_factors * dt ** np.arange(2 * P)
    return np.einsum("k,j,k...jd->...d", coefficients, tables.midpoint, spliced)


def interface_stencils(values: Array, P: int, first: int, count: int) -> Array:
    """Stencils of the `count` interfaces i+1/2, i = first..first+count-1, shape (count, 2P, d)."""
    windows = np.lib.stride_tricks.sliding_window_view(values, 2 * P, axis=0)
    return np.moveaxis(windows[first - P + 1 : first - P + 1 + count], -1, 1)


def cat_terms(
    state: StateField, grid: GridSpec, P: int, dt: float, model: ModelSpec, pool: WorkspacePool | None = None
) -> tuple[Array, Array]:
    """Interface fluxes and node sources of CAT2P at every interior node.

    Returns:
        Tuple of (fluxes at i+1/2 for i = first-1..last, shape (N+1, d); sources, shape (N, d))
    """
    g, n = grid.ghost, grid.n
    if g < P:
        raise DimensionError(f"Ghost width {g} smaller than P={P}")
    U = state.values
    stencils = interface_stencils(U, P, g - 1, n + 1)
    hx = None
    if not model.geometry.flat:
        hx = interface_stencils(model.geometry.slope(grid.x_ext)[:, None], P, g - 1, n + 1)[..., 0]
    workspace = pool.get(P, n + 1, U.shape[-1]) if pool is not None else None
    try:
        flux, integrals, _ = taylor_interfaces(P, stencils, hx, grid.dx, dt, model, workspace=workspace)
    except DivergenceError as e:
        raise e.at_node(g - 1 + int(e.node)) from e
    if integrals is None:
        return flux, np.zeros((n, U.shape[-1]))
    return flux, assemble_source(P, integrals[:, :-1], integrals[:, 1:], dt)


def cat_step(
    state: StateField, grid: GridSpec, P: int, dt: float, model: ModelSpec, pool: WorkspacePool | None = None
) -> StateField:
    """One CAT2P step: U_i + dt/dx (F_{i-1/2} - F_{i+1/2} + S̃_i) at every interior node."""
    flux, source = cat_terms(state, grid, P, dt, model, pool)
    return conservative_update(state, grid, dt, flux[:-1], flux[1:], source)


def conservative_update(
    state: StateField, grid: GridSpec, dt: float, left: Array, right: Array, source: Array
) -> StateField:
    """Apply per-node flux pairs and sources; ghosts are copied unchanged."""
    values = state.values.copy()
    values[grid.interior] += dt / grid.dx * (left - right + source)
    return StateField(values, state.t + dt)
