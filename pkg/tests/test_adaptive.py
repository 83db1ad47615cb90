"""Tests for the smoothness indicators, flux limiters and the adaptive ACAT2P update."""

import numpy as np
import pytest

from cat_balance.adaptive import (
    LARGE_RATIO,
    LIMITER_FUNCTIONS,
    acat_step,
    compute_indicators,
    flux_limiter_phi,
    lf_flux,
    lf_step,
    minmod,
    safe_ratio,
    select_orders,
    smoothness_indicator,
    superbee,
    vanleer,
    wb_lf_source,
)
from cat_balance.cat1d import cat_step
from cat_balance.config import SchemeConfig
from cat_balance.driver import BoundaryConditions, advance, fill_ghosts
from cat_balance.errors import ConfigurationError, InvalidOrderError
from cat_balance.grid import GridSpec, StateField
from cat_balance.models import BurgersModel, ShallowWaterModel

EPSILON = 1e-4
DT = 0.004


def _step_state(grid, low=0.5, high=1.5):
    """Burgers data with a jump in the middle of the mesh."""
    interior = np.where(grid.x < 0.0, high, low) + 0.1 * np.sin(np.pi * grid.x)
    return fill_ghosts(StateField.from_interior(interior, grid), grid, BoundaryConditions())


@pytest.fixture
def step_grid():
    """41 nodes on [-1, 1] with three ghost nodes."""
    return GridSpec(-1.0, 1.0, 41, ghost=3)


def test_indicator_of_constant_data():
    """Test that psi is 1 on constant data, with and without regularization."""
    assert smoothness_indicator(2, np.ones(4), EPSILON) == 1.0
    assert smoothness_indicator(3, np.ones(6), 0.0) == 1.0


def test_indicator_of_step():
    """Test that psi falls well below 1/2 across a jump."""
    assert smoothness_indicator(2, np.array([0.0, 0.0, 1.0, 1.0]), EPSILON) < 0.5
    assert smoothness_indicator(3, np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), EPSILON) < 0.5


def test_indicator_of_smooth_data():
    """Test that psi stays close to 1 on resolved smooth data."""
    dx = 0.01
    x = 0.3 + dx * np.arange(-1, 3)
    assert smoothness_indicator(2, np.sin(x), dx * dx) > 0.99
    # Verify polynomials below the difference order are flagged smooth regardless of eps
    assert smoothness_indicator(2, (x - 0.2) ** 2, 0.0) == pytest.approx(1.0)


def test_indicator_is_vectorized():
    """Test that leading axes are batch axes and values stay in [0, 1]."""
    rng = np.random.default_rng(7)
    samples = rng.normal(size=(20, 6))
    psi = smoothness_indicator(3, samples, EPSILON)
    assert psi.shape == (20,)
    assert np.all((psi >= 0.0) & (psi <= 1.0))


def test_indicator_needs_p_two():
    """Test that p < 2 or a wrong sample count raises InvalidOrderError."""
    with pytest.raises(InvalidOrderError):
        smoothness_indicator(1, np.ones(2), EPSILON)
    with pytest.raises(InvalidOrderError):
        smoothness_indicator(2, np.ones(5), EPSILON)


@pytest.mark.parametrize("limiter", [minmod, superbee, vanleer])
def test_limiters_in_unit_interval(limiter):
    """Test that every limiter maps ratios into [0, 1], is 0 for r <= 0 and 1 at r = 1."""
    r = np.linspace(-5.0, 5.0, 101)
    values = limiter(r)
    assert np.all((values >= 0.0) & (values <= 1.0))
    np.testing.assert_array_equal(values[r <= 0.0], 0.0)
    assert limiter(np.array(1.0)) == pytest.approx(1.0)


def test_limiter_values():
    """Test a few reference values of the limiters."""
    assert minmod(np.array(0.5)) == 0.5
    assert superbee(np.array(0.5)) == 1.0
    assert vanleer(np.array(0.5)) == pytest.approx(2.0 / 3.0)
    assert set(LIMITER_FUNCTIONS) == {"minmod", "superbee", "vanleer"}


def test_safe_ratio():
    """Test 0/0 -> 1, x/0 -> signed large value, plain division otherwise."""
    ratios = safe_ratio(np.array([0.0, 1.0, -1.0, 2.0]), np.array([0.0, 0.0, 0.0, 4.0]))
    np.testing.assert_array_equal(ratios, [1.0, LARGE_RATIO, -LARGE_RATIO, 0.5])
    assert safe_ratio(np.array(1e-14), np.array(1e-13), 1e-12) == 1.0


def test_phi_of_monotone_and_extremum_stencils():
    """Test phi = 1 on linear data and 0 at a local extremum."""
    model = BurgersModel()
    assert flux_limiter_phi(np.array([[0.0], [1.0], [2.0], [3.0]]), model) == 1.0
    assert flux_limiter_phi(np.array([[0.0], [1.0], [0.5], [0.0]]), model) == 0.0
    assert flux_limiter_phi(np.full((4, 1), 2.0), model) == 1.0


def test_phi_reduces_over_variables():
    """Test that systems take the smallest componentwise limiter value."""
    stencil = np.array([[1.0, 0.0], [2.0, 1.0], [3.0, 0.5], [4.0, 0.0]])
    assert flux_limiter_phi(stencil, ShallowWaterModel()) == 0.0


def test_roe_speed_strategy():
    """Test that the upwind ratio follows the sign of the secant speed."""
    model = BurgersModel()
    # Only the downwind ratio is negative for positive speeds
    stencil = np.array([[1.0], [2.0], [3.0], [2.5]])
    assert flux_limiter_phi(stencil, model, strategy="roe-speed") == 1.0
    assert flux_limiter_phi(stencil, model, strategy="two-sided-min") == 0.0
    assert flux_limiter_phi(-stencil[::-1], model, strategy="roe-speed") == 1.0


def test_roe_speed_needs_scalar_model():
    """Test that roe-speed on a system raises ConfigurationError."""
    with pytest.raises(ConfigurationError):
        flux_limiter_phi(np.ones((4, 2)), ShallowWaterModel(), strategy="roe-speed")


def test_select_orders():
    """Test that the largest order admitted by every adjacent interface wins."""
    sides = [
        {2: np.array([1.0, 1.0, 0.2]), 3: np.array([1.0, 0.5, 0.2])},
        {2: np.array([1.0, 1.0, 1.0]), 3: np.array([0.95, 1.0, 1.0])},
    ]
    selected, admissible = select_orders(3, sides, 0.9)
    np.testing.assert_array_equal(selected, [3, 2, 1])
    np.testing.assert_array_equal(admissible, [[True, True], [True, False], [False, False]])
    with pytest.raises(InvalidOrderError):
        select_orders(1, sides, 0.9)


def test_indicators_on_step(step_grid):
    """Test that nodes at the jump fall back to the blended scheme and smooth nodes keep P."""
    model = BurgersModel()
    settings = SchemeConfig(kind="acat", p=2)
    field = compute_indicators(_step_state(step_grid), step_grid, 2, model, settings)
    jump = int(np.argmin(np.abs(step_grid.x)))
    assert field.selected.shape == (41,)
    assert field.selected[jump] == 1
    assert field.selected[5] == 2
    assert field.admissible_orders(5) == {2}
    assert field.admissible_orders(jump) == set()
    assert np.all((field.phi >= 0.0) & (field.phi <= 1.0))


def test_pinned_indicators(step_grid):
    """Test that pinned indicators select P everywhere with phi = 1."""
    settings = SchemeConfig(kind="acat", p=2, pin_indicators=True)
    field = compute_indicators(_step_state(step_grid), step_grid, 2, BurgersModel(), settings)
    np.testing.assert_array_equal(field.selected, 2)
    np.testing.assert_array_equal(field.phi, 1.0)


@pytest.mark.parametrize("P", [1, 2, 3])
def test_pinned_acat_is_cat(step_grid, P):
    """Test that ACAT2P with pinned indicators reproduces CAT2P bit for bit."""
    model = BurgersModel()
    state = _step_state(step_grid)
    settings = SchemeConfig(kind="acat", p=P, pin_indicators=True)
    adaptive = acat_step(state, step_grid, P, DT, model, settings=settings)
    plain = cat_step(state, step_grid, P, DT, model)
    np.testing.assert_array_equal(adaptive.values, plain.values)


def test_acat2_blends_cat2_and_lax_friedrichs(step_grid):
    """Test that the ACAT2 update is the phi-weighted mix of the CAT2 and LF updates."""
    model = BurgersModel()
    state = _step_state(step_grid)
    settings = SchemeConfig(kind="acat", p=1)
    phi = compute_indicators(state, step_grid, 1, model, settings).phi[:, None]
    assert phi.min() < 1.0

    adaptive = acat_step(state, step_grid, 1, DT, model, settings=settings).interior(step_grid)
    high = cat_step(state, step_grid, 1, DT, model).interior(step_grid)
    low = lf_step(state, step_grid, DT, model).interior(step_grid)
    np.testing.assert_allclose(adaptive, phi * high + (1.0 - phi) * low, rtol=1e-13, atol=1e-13)


def test_selected_orders_logged(step_grid, mock_logger):
    """Test that verbose runs report the order distribution."""
    acat_step(_step_state(step_grid), step_grid, 2, DT, BurgersModel(), logger=mock_logger)
    # Verify that debug logging occurred
    mock_logger.debug.assert_called()


def test_lax_friedrichs_flux():
    """Test 1/2 (F_l + F_r) - dx / (2 dt) (u_r - u_l)."""
    model = BurgersModel()
    flux = lf_flux(np.array([[1.0]]), np.array([[3.0]]), 0.1, 0.05, model)
    assert flux[0, 0] == pytest.approx(0.5 * (0.5 + 4.5) - 0.1 / 0.1 * 2.0)
    # Verify the 2D splitting halves the diffusion
    flux_2d = lf_flux(np.array([[1.0]]), np.array([[3.0]]), 0.1, 0.05, model, dims=2)
    assert flux_2d[0, 0] == pytest.approx(2.5 - 1.0)


def test_wb_lax_friedrichs_source_balances_flux(burgers_model):
    """Test that on stationary data the WB LF source cancels the flux difference."""
    x = np.array([0.1, 0.2, 0.3])
    u = np.exp(burgers_model.geometry.height(x))[:, None]
    source = wb_lf_source(u[None], 0.1, 0.02, burgers_model)
    right = lf_flux(u[1:2], u[2:3], 0.1, 0.02, burgers_model)
    left = lf_flux(u[0:1], u[1:2], 0.1, 0.02, burgers_model)
    difference = right - left
    np.testing.assert_allclose(source, difference)


@pytest.mark.parametrize("label", ["wbacat2", "wbacat4", "wblf"])
def test_well_balanced_adaptive_preserves_stationary(burgers_model, label):
    """Test that the adaptive and LF well-balanced schemes keep u* = e^H."""
    scheme = SchemeConfig.from_label(label, cfl=0.8)
    grid = GridSpec(-1.0, 1.0, 50, ghost=max(scheme.p, 2))

    def profile(x):
        return np.exp(burgers_model.geometry.height(x))[..., None]

    bc = BoundaryConditions("dirichlet-stationary", "dirichlet-stationary", stationary=profile)
    state = StateField.from_interior(profile(grid.x), grid)
    result = advance(state, grid, scheme, burgers_model, 0.1, bc)
    assert np.max(np.abs(result.state.interior(grid) - profile(grid.x))) < 1e-12


def test_acat_stays_bounded_at_a_jump(step_grid):
    """Test that ACAT4 on a jump creates no large new extrema."""
    model = BurgersModel()
    scheme = SchemeConfig(kind="acat", p=2, cfl=0.8)
    state = StateField.from_interior(np.where(step_grid.x < 0.0, 1.5, 0.5), step_grid)
    result = advance(state, step_grid, scheme, model, 0.2, BoundaryConditions())
    interior = result.state.interior(step_grid)
    assert interior.max() < 1.5 + 0.1
    assert interior.min() > 0.5 - 0.1
