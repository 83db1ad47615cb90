"""WBCAT2P: CAT2P applied to the deviation from a local stationary solution.

For every node i the stationary solution U*_i through (x_i, U_i^n) is evaluated on the
union of the stencils of i-1/2 and i+1/2. Both interface computations of node i then run
on F(U) - F(U*_i) and (S(U) - S(U*_i)) H_x, which vanish identically on stationary data.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .cat1d import WorkspacePool, assemble_source, cat_terms, conservative_update, taylor_interfaces
from .errors import DivergenceError, StationaryUnavailableError
from .grid import GridSpec, StateField
from .logger import Logger
from .models import ModelSpec

Array = NDArray[np.float64]


@dataclass(frozen=True)
class StationaryProfile:
    """Stationary solution U*_i anchored at one node."""

    evaluator: Callable[[Array], Array]
    anchor_index: int
    anchor_x: Array
    valid: bool = True

    def __call__(self, x: Array) -> Array:
        """Evaluate at points x (shape (K,) in 1D, (K, 2) in 2D); returns (K, d)."""
        return self.evaluator(np.asarray(x, dtype=float))


def family_stationary_solve(
    state_at_node: Array,
    model: ModelSpec,
    family_kind: str,
    x_node: Array | float,
    anchor_index: int = 0,
) -> StationaryProfile:
    """Select the member of the model's stationary family through the node state.

    Raises:
        StationaryUnavailableError: If the model has no such family or no member matches
    """
    if model.stationary_family != family_kind:
        raise StationaryUnavailableError(
            f"{model.name} exposes family '{model.stationary_family}', not '{family_kind}'"
        )
    anchor = np.asarray(state_at_node, dtype=float).reshape(1, model.n_vars)
    anchor_x = np.atleast_1d(np.asarray(x_node, dtype=float))
    coords = anchor_x.reshape(1, -1) if model.dim == 2 else anchor_x
    _, valid = model.stationary_states(anchor, coords, coords[:, None])
    if not valid[0]:
        raise StationaryUnavailableError(f"No {family_kind} stationary solution through node {anchor_index}")

    def evaluate(x: Array) -> Array:
        targets = x.reshape(1, -1, 2) if model.dim == 2 else x.reshape(1, -1)
        states, ok = model.stationary_states(anchor, coords, targets)
        if not ok[0]:
            raise StationaryUnavailableError(f"Stationary solution through node {anchor_index} not defined")
        return states[0]

    return StationaryProfile(evaluate, anchor_index, anchor_x)


@dataclass(frozen=True)
class NodeProfiles:
    """U*_i sampled at x_{i-W}..x_{i+W} for a set of nodes (extended indices)."""

    nodes: Array
    half_width: int
    states: Array  # (M, 2W+1, d)
    valid: Array  # (M,)

    def window(self, lo: int, hi: int) -> Array:
        """Samples at offsets lo..hi-1 relative to the anchor node."""
        w = self.half_width
        return self.states[:, w + lo : w + hi]


def node_profiles(
    state: StateField, grid: GridSpec, model: ModelSpec, half_width: int, nodes: Array | None = None
) -> NodeProfiles:
    """Evaluate the local stationary solutions of all requested nodes in one call.

    Rows without a stationary solution are marked invalid and filled with the
    numerical data so that downstream arithmetic stays finite.
    """
    if nodes is None:
        nodes = np.arange(grid.ghost, grid.ghost + grid.n)
    nodes = np.asarray(nodes, dtype=int)
    U = state.values
    index = nodes[:, None] + np.arange(-half_width, half_width + 1)
    with np.errstate(all="ignore"):
        states, valid = model.stationary_states(U[nodes], grid.x_ext[nodes], grid.x_ext[index])
    states = np.where(valid[:, None, None] & np.isfinite(states), states, U[index])
    return NodeProfiles(nodes, half_width, states, np.asarray(valid, dtype=bool))


@dataclass(frozen=True)
class WellBalancedTerms:
    """Per-node flux pair and source of a well-balanced step."""

    left: Array
    right: Array
    source: Array
    valid: Array


def wb_terms(
    state: StateField,
    grid: GridSpec,
    P: int,
    dt: float,
    model: ModelSpec,
    profiles: NodeProfiles,
    pool: WorkspacePool | None = None,
) -> WellBalancedTerms:
    """WBCAT2P flux pairs F_{i;i-1/2}, F_{i;i+1/2} and sources for the profiled nodes."""
    U = state.values
    nodes = profiles.nodes
    index = nodes[:, None] + np.arange(-P, P + 1)
    stationary_left, stationary_right = profiles.window(-P, P), profiles.window(-P + 1, P + 1)
    hx_left = hx_right = None
    if not model.geometry.flat:
        hx = model.geometry.slope(grid.x_ext)[index]
        hx_left, hx_right = hx[:, :-1], hx[:, 1:]
    workspace = pool.get(P, len(nodes), U.shape[-1]) if pool is not None else None

    results = []
    for stencil_index, stationary, hx in (
        (index[:, :-1], stationary_left, hx_left),
        (index[:, 1:], stationary_right, hx_right),
    ):
        try:
            results.append(
                taylor_interfaces(
                    P,
                    U[stencil_index],
                    hx,
                    grid.dx,
                    dt,
                    model,
                    flux_offset=model.flux(stationary),
                    source_offset=model.source(stationary),
                    workspace=workspace,
                )
            )
        except DivergenceError as e:
            raise e.at_node(int(nodes[int(e.node)])) from e
    (left, left_integrals, _), (right, right_integrals, _) = results
    if left_integrals is None or right_integrals is None:
        source = np.zeros_like(left)
    else:
        source = assemble_source(P, left_integrals, right_integrals, dt)
    return WellBalancedTerms(left, right, source, profiles.valid)


def wb_interface_pair(
    i: int, P: int, state: StateField, grid: GridSpec, dt: float, model: ModelSpec
) -> tuple[Array, Array, Array]:
    """(F_{i;i-1/2}, F_{i;i+1/2}, S̃_i) of node i (extended index).

    Raises:
        StationaryUnavailableError: If node i has no stationary solution over its stencils
    """
    profiles = node_profiles(state, grid, model, P, nodes=np.array([i]))
    if not profiles.valid[0]:
        raise StationaryUnavailableError(f"No stationary solution through node {i}")
    terms = wb_terms(state, grid, P, dt, model, profiles)
    return terms.left[0], terms.right[0], terms.source[0]


def merge_fallback(
    terms: WellBalancedTerms, flux: Array, source: Array
) -> tuple[Array, Array, Array]:
    """Replace the terms of invalid nodes by the plain scheme's fluxes and sources."""
    keep = terms.valid[:, None]
    return (
        np.where(keep, terms.left, flux[:-1]),
        np.where(keep, terms.right, flux[1:]),
        np.where(keep, terms.source, source),
    )


def wb_step(
    state: StateField,
    grid: GridSpec,
    P: int,
    dt: float,
    model: ModelSpec,
    logger: Logger | None = None,
    pool: WorkspacePool | None = None,
) -> StateField:
    """One WBCAT2P step; nodes without a stationary solution use the CAT2P update."""
    profiles = node_profiles(state, grid, model, P)
    terms = wb_terms(state, grid, P, dt, model, profiles, pool)
    left, right, source = terms.left, terms.right, terms.source
    if not terms.valid.all():
        flux, plain_source = cat_terms(state, grid, P, dt, model, pool)
        left, right, source = merge_fallback(terms, flux, plain_source)
        if logger and logger.verbose:
            logger.stationary_fallback(int(np.count_nonzero(~terms.valid)), grid.n)
    return conservative_update(state, grid, dt, left, right, source)
