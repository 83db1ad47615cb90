"""ACAT2P and WBACAT2P: order selection driven by smoothness indicators.

At every node the highest order 2p whose indicators accept both neighbouring interfaces
is used. When no order p >= 2 qualifies, the node falls back to a flux-limited blend of
CAT2 and Lax-Friedrichs, weighted by phi_i.
"""

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray

from .cat1d import WorkspacePool, cat_terms, conservative_update
from .config import ROE_TOLERANCE, SchemeConfig
from .errors import ConfigurationError, InvalidOrderError
from .grid import GridSpec, StateField
from .logger import Logger
from .models import ModelSpec
from .stencil_calculus import undivided_difference
from .wellbalanced1d import merge_fallback, node_profiles, wb_terms

Array = NDArray[np.float64]
FluxFunction = Callable[[Array], Array]

# |ratio| used when the denominator vanishes but the numerator does not
LARGE_RATIO = 1e12


def minmod(r: Array) -> Array:
    return np.clip(r, 0.0, 1.0)


def superbee(r: Array) -> Array:
    return np.clip(np.maximum(np.minimum(2.0 * r, 1.0), np.minimum(r, 2.0)), 0.0, 1.0)


def vanleer(r: Array) -> Array:
    magnitude = np.abs(r)
    return np.clip((r + magnitude) / (1.0 + magnitude), 0.0, 1.0)


LIMITER_FUNCTIONS: dict[str, Callable[[Array], Array]] = {
    "minmod": minmod,
    "superbee": superbee,
    "vanleer": vanleer,
}


def safe_ratio(numerator: Array, denominator: Array, tol: float | Array = 0.0) -> Array:
    """numerator / denominator, with 1 for 0/0 and a large signed value for x/0."""
    numerator = np.asarray(numerator, dtype=float)
    denominator = np.asarray(denominator, dtype=float)
    small = np.abs(denominator) <= tol
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = numerator / np.where(small, 1.0, denominator)
    degenerate = np.where(np.abs(numerator) <= tol, 1.0, np.sign(numerator) * LARGE_RATIO)
    return np.where(small, degenerate, ratio)


def smoothness_indicator(p: int, samples: Array, eps: float) -> float | Array:
    """psi in [0, 1] of 2p samples (last axis); close to 1 on smooth data.

    The lateral weight is the half harmonic mean of the squared increments on the left
    and right of the central one, each regularized by eps; it is compared with the
    squared undivided difference of order 2p-1.
    """
    if p < 2:
        raise InvalidOrderError(f"Smoothness indicators need p >= 2, got {p}")
    samples = np.asarray(samples, dtype=float)
    if samples.shape[-1] != 2 * p:
        raise InvalidOrderError(f"Expected {2 * p} samples, got {samples.shape[-1]}")
    increments = np.diff(samples, axis=-1)
    left = np.sum(increments[..., : p - 1] ** 2, axis=-1) + eps
    right = np.sum(increments[..., p:] ** 2, axis=-1) + eps
    total = left + right
    with np.errstate(divide="ignore", invalid="ignore"):
        lateral = np.where(total > 0.0, left * right / total, 0.0)
        jump = np.asarray(undivided_difference(p, np.moveaxis(samples, -1, 0))) ** 2
        psi = np.where(lateral + jump > 0.0, lateral / (lateral + jump), 1.0)
    return float(psi) if np.ndim(psi) == 0 else psi


def flux_limiter_phi(
    stencil: Array,
    model: ModelSpec,
    kind: str = "minmod",
    strategy: str = "two-sided-min",
    tol: float | None = None,
    flux: FluxFunction | None = None,
    characteristic: FluxFunction | None = None,
) -> float | Array:
    """Limiter value phi in [0, 1] at the interface of a 4-point stencil (..., 4, d).

    Vector states reduce to the smallest componentwise value. `flux` and `characteristic`
    replace F and f' along other directions.

    Raises:
        ConfigurationError: If the roe-speed strategy is requested for a system
    """
    limiter = LIMITER_FUNCTIONS[kind]
    u = np.asarray(stencil, dtype=float)
    jump = u[..., 2, :] - u[..., 1, :]
    scale = np.maximum(1.0, np.maximum(np.abs(u[..., 1, :]), np.abs(u[..., 2, :])))
    threshold = ROE_TOLERANCE * scale if tol is None else tol
    r_minus = safe_ratio(u[..., 1, :] - u[..., 0, :], jump, threshold)
    r_plus = safe_ratio(u[..., 3, :] - u[..., 2, :], jump, threshold)
    if strategy == "two-sided-min":
        phi = np.minimum(limiter(r_minus), limiter(r_plus))
    elif strategy == "roe-speed":
        if not model.scalar:
            raise ConfigurationError("scheme.limiter_strategy", "roe-speed needs a scalar model")
        flux = flux or model.flux
        with np.errstate(divide="ignore", invalid="ignore"):
            secant = (flux(u[..., 2:3, :])[..., 0, :] - flux(u[..., 1:2, :])[..., 0, :]) / jump
        fallback_speed = (characteristic or model.flux_derivative)(u[..., 1, :])
        speed = np.where(np.abs(jump) > threshold, secant, fallback_speed)
        phi = limiter(np.where(speed >= 0.0, r_minus, r_plus))
    else:
        raise ConfigurationError("scheme.limiter_strategy", f"unknown strategy '{strategy}'")
    phi = np.min(np.clip(phi, 0.0, 1.0), axis=-1)
    return float(phi) if np.ndim(phi) == 0 else phi


def line_indicators(
    values: Array,
    P: int,
    first: int,
    count: int,
    eps: float,
    settings: SchemeConfig,
    model: ModelSpec,
    flux: FluxFunction | None = None,
    characteristic: FluxFunction | None = None,
) -> tuple[dict[int, Array], Array]:
    """psi^p (p = 2..P) and phi at interfaces first+1/2 .. first+count-1/2 along axis 0.

    Returns:
        Tuple of ({p: psi of shape (count, ...)}, phi of shape (count, ...)), reduced over variables
    """
    shape = (count, *values.shape[1:-1])
    if settings.pin_indicators:
        return {p: np.ones(shape) for p in range(2, P + 1)}, np.ones(shape)
    psi = {}
    for p in range(2, P + 1):
        windows = sliding_window_view(values, 2 * p, axis=0)[first - p + 1 : first - p + 1 + count]
        psi[p] = np.min(smoothness_indicator(p, windows, eps), axis=-1)
    stencil = sliding_window_view(values, 4, axis=0)[first - 1 : first - 1 + count]
    phi = flux_limiter_phi(
        np.swapaxes(stencil, -1, -2),
        model,
        settings.limiter,
        settings.limiter_strategy,
        flux=flux,
        characteristic=characteristic,
    )
    return psi, np.asarray(phi)


def select_orders(P: int, sides: Sequence[dict[int, Array]], threshold: float) -> tuple[Array, Array]:
    """Largest admissible p per node, or 1 when only the blended fallback is left.

    Args:
        P: Maximal half-width
        sides: One {p: psi} mapping per interface adjacent to the node
        threshold: Acceptance level for psi

    Returns:
        Tuple of (selected p per node, admissibility mask with one column per p = 2..P)
    """
    if P < 2:
        raise InvalidOrderError(f"Order selection needs P >= 2, got {P}")
    shape = sides[0][2].shape
    admissible = np.stack(
        [np.all([side[p] >= threshold for side in sides], axis=0) for p in range(2, P + 1)], axis=-1
    )
    selected = np.ones(shape, dtype=int)
    for column, p in enumerate(range(2, P + 1)):
        selected = np.where(admissible[..., column], p, selected)
    return selected, admissible


@dataclass(frozen=True)
class IndicatorField:
    """Indicators of one time level: per-interface psi and phi, per-node selection."""

    P: int
    psi: dict[int, Array]
    phi_interface: Array
    phi: Array
    selected: Array
    admissible: Array

    def admissible_orders(self, node: int) -> set[int]:
        """The set of admissible p at an interior node (0-based)."""
        if self.P < 2:
            return set()
        return {p for column, p in enumerate(range(2, self.P + 1)) if self.admissible[node, column]}


def compute_indicators(
    state: StateField, grid: GridSpec, P: int, model: ModelSpec, settings: SchemeConfig
) -> IndicatorField:
    """Indicators at the N+1 interfaces around the interior nodes and their per-node reduction."""
    g, n = grid.ghost, grid.n
    psi, phi_interface = line_indicators(
        state.values, P, g - 1, n + 1, settings.epsilon_value(grid.dx), settings, model
    )
    phi = np.minimum(phi_interface[:-1], phi_interface[1:])
    if P >= 2:
        sides = [{p: value[:-1] for p, value in psi.items()}, {p: value[1:] for p, value in psi.items()}]
        selected, admissible = select_orders(P, sides, settings.threshold)
    else:
        selected, admissible = np.ones(n, dtype=int), np.zeros((n, 0), dtype=bool)
    return IndicatorField(P, psi, phi_interface, phi, selected, admissible)


def lf_flux(
    U_left: Array,
    U_right: Array,
    dx: float,
    dt: float,
    model: ModelSpec,
    axis: int = 0,
    dims: int = 1,
) -> Array:
    """Lax-Friedrichs flux 1/2 (F_l + F_r) - dx / (2 dims dt) (U_r - U_l)."""
    flux = model.flux if axis == 0 else model.flux_y  # type: ignore[attr-defined]
    return 0.5 * (flux(U_left) + flux(U_right)) - dx / (2.0 * dims * dt) * (U_right - U_left)


def lf_source(U: Array, hx: Array, dx: float, model: ModelSpec, axis: int = 0) -> Array:
    """Pointwise source dx S(U_i) H_x(x_i)."""
    source = model.source if axis == 0 else model.source_y  # type: ignore[attr-defined]
    return dx * source(U) * np.asarray(hx)[..., None]


def wb_lf_source(
    profile_values: Array, dx: float, dt: float, model: ModelSpec, axis: int = 0, dims: int = 1
) -> Array:
    """Well-balanced Lax-Friedrichs source from U*_i at x_{i-1}, x_i, x_{i+1} (shape (..., 3, d))."""
    stationary = np.asarray(profile_values, dtype=float)
    left, centre, right = stationary[..., 0, :], stationary[..., 1, :], stationary[..., 2, :]
    return lf_flux(centre, right, dx, dt, model, axis, dims) - lf_flux(left, centre, dx, dt, model, axis, dims)


def lf_step(
    state: StateField,
    grid: GridSpec,
    dt: float,
    model: ModelSpec,
    wb: bool = False,
    logger: Logger | None = None,
) -> StateField:
    """One Lax-Friedrichs step, well-balanced when wb is set."""
    U = state.values
    g, n = grid.ghost, grid.n
    flux = lf_flux(U[g - 1 : g + n], U[g : g + n + 1], grid.dx, dt, model)
    source = lf_source(U[g : g + n], model.geometry.slope(grid.x), grid.dx, model)
    if wb:
        profiles = node_profiles(state, grid, model, 1)
        wb_source = wb_lf_source(profiles.window(-1, 2), grid.dx, dt, model)
        source = np.where(profiles.valid[:, None], wb_source, source)
        _report_fallback(logger, profiles.valid, n)
    return conservative_update(state, grid, dt, flux[:-1], flux[1:], source)


def _report_fallback(logger: Logger | None, valid: Array, total: int) -> None:
    if logger and logger.verbose and not valid.all():
        logger.stationary_fallback(int(np.count_nonzero(~valid)), total)


def acat_step(
    state: StateField,
    grid: GridSpec,
    P: int,
    dt: float,
    model: ModelSpec,
    wb: bool = False,
    settings: SchemeConfig | None = None,
    logger: Logger | None = None,
    pool: WorkspacePool | None = None,
) -> StateField:
    """One ACAT2P step (WBACAT2P when wb is set).

    Nodes with selected order p use the (well-balanced) CAT2p flux pair and source;
    the remaining nodes blend CAT2 and Lax-Friedrichs with weight phi_i.
    """
    settings = settings or SchemeConfig(kind="wbacat" if wb else "acat", p=P)
    field = compute_indicators(state, grid, P, model, settings)
    U = state.values
    g, n, d = grid.ghost, grid.n, U.shape[-1]
    left, right, source = np.empty((n, d)), np.empty((n, d)), np.empty((n, d))

    profiles = node_profiles(state, grid, model, P) if wb else None
    if profiles is not None:
        _report_fallback(logger, profiles.valid, n)

    for order in np.unique(field.selected):
        mask = field.selected == order
        p = int(order)
        flux, plain_source = cat_terms(state, grid, p, dt, model, pool)
        if profiles is not None:
            terms = wb_terms(state, grid, p, dt, model, profiles, pool)
            node_left, node_right, node_source = merge_fallback(terms, flux, plain_source)
        else:
            node_left, node_right, node_source = flux[:-1], flux[1:], plain_source

        if p == 1:
            lf = lf_flux(U[g - 1 : g + n], U[g : g + n + 1], grid.dx, dt, model)
            lf_src = lf_source(U[g : g + n], model.geometry.slope(grid.x), grid.dx, model)
            if profiles is not None:
                wb_src = wb_lf_source(profiles.window(-1, 2), grid.dx, dt, model)
                lf_src = np.where(profiles.valid[:, None], wb_src, lf_src)
            phi = field.phi[:, None]
            node_left = phi * node_left + (1.0 - phi) * lf[:-1]
            node_right = phi * node_right + (1.0 - phi) * lf[1:]
            node_source = phi * node_source + (1.0 - phi) * lf_src

        left[mask], right[mask], source[mask] = node_left[mask], node_right[mask], node_source[mask]

    if logger and logger.verbose:
        orders, counts = np.unique(2 * field.selected, return_counts=True)
        logger.debug(f"Selected orders: {dict(zip(orders.tolist(), counts.tolist(), strict=True))}")
    return conservative_update(state, grid, dt, left, right, source)
