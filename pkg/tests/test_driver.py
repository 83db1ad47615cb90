"""Tests for boundary filling, time-step selection, time marching and error norms."""

import numpy as np
import pytest

from cat_balance.cat1d import LocalWorkspace
from cat_balance.config import SchemeConfig
from cat_balance.driver import (
    BoundaryConditions,
    ErrorNorms,
    advance,
    convergence_orders,
    error_norms,
    fill_ghosts,
    make_stepper,
    required_ghost,
    restrict,
    stable_dt,
)
from cat_balance.errors import ConfigurationError, DimensionError, TimeStepUnderflowError
from cat_balance.grid import GridSpec, GridSpec2D, StateField
from cat_balance.models import BurgersModel, LinearModel, LinearModel2D


@pytest.fixture
def small_grid():
    """Five nodes on [0, 1] with two ghost nodes."""
    return GridSpec(0.0, 1.0, 5, ghost=2)


def _ramp(grid):
    return StateField.from_interior(np.arange(float(grid.n)), grid)


def test_free_ghosts_copy_end_nodes(small_grid):
    """Test that free boundaries extrapolate the end values."""
    filled = fill_ghosts(_ramp(small_grid), small_grid, BoundaryConditions())
    np.testing.assert_array_equal(filled.values[:, 0], [0, 0, 0, 1, 2, 3, 4, 4, 4])


def test_periodic_ghosts_wrap(small_grid):
    """Test that periodic ghosts continue the interior with period n dx."""
    filled = fill_ghosts(_ramp(small_grid), small_grid, BoundaryConditions("periodic", "periodic"))
    np.testing.assert_array_equal(filled.values[:, 0], [3, 4, 0, 1, 2, 3, 4, 0, 1])


def test_dirichlet_ghosts_sample_solutions(small_grid):
    """Test that Dirichlet ghosts sample the exact solution at time t and the stationary one."""
    bc = BoundaryConditions(
        "dirichlet-exact",
        "dirichlet-stationary",
        exact=lambda x, t: (x + t)[..., None],
        stationary=lambda x: (10.0 * x)[..., None],
    )
    filled = fill_ghosts(_ramp(small_grid), small_grid, bc, t=0.5)
    np.testing.assert_allclose(filled.values[:2, 0], small_grid.x_ext[:2] + 0.5)
    np.testing.assert_allclose(filled.values[-2:, 0], 10.0 * small_grid.x_ext[-2:])
    # Verify the interior is untouched
    np.testing.assert_array_equal(filled.interior(small_grid)[:, 0], np.arange(5.0))


def test_ghosts_2d_fill_corners():
    """Test that 2D free boundaries also fill the corner ghosts."""
    grid = GridSpec2D(0.0, 1.0, 3, 0.0, 1.0, 4, ghost=2)
    interior = np.arange(12.0).reshape(3, 4)
    filled = fill_ghosts(StateField.from_interior(interior, grid), grid, BoundaryConditions())
    assert filled.values[0, 0, 0] == interior[0, 0]
    assert filled.values[-1, -1, 0] == interior[-1, -1]
    np.testing.assert_array_equal(filled.values[3, :2, 0], interior[1, 0])


def test_boundary_checks():
    """Test that incomplete boundary settings name the offending side."""
    with pytest.raises(ConfigurationError) as excinfo:
        BoundaryConditions("periodic", "free").check(1)
    assert excinfo.value.field == "boundary.left"
    with pytest.raises(ConfigurationError) as excinfo:
        BoundaryConditions("free", "dirichlet-exact").check(1)
    assert excinfo.value.field == "boundary.right"
    with pytest.raises(ConfigurationError) as excinfo:
        BoundaryConditions(top="dirichlet-stationary").check(2)
    assert excinfo.value.field == "boundary.top"
    with pytest.raises(ConfigurationError):
        BoundaryConditions("reflective")
    # Verify 1D runs ignore the y sides
    BoundaryConditions(bottom="periodic").check(1)


def test_stable_dt():
    """Test dt = CFL dx / max speed in 1D and CFL / (a/dx + b/dy) in 2D."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.full(11, 2.0), grid)
    dt, speed = stable_dt(state, grid, BurgersModel(), 0.5)
    assert speed == 2.0
    assert dt == pytest.approx(0.025)

    plane = GridSpec2D(0.0, 1.0, 11, 0.0, 1.0, 11, ghost=2)
    model = LinearModel2D(velocity=1.0, velocity_y=2.0)
    dt, speed = stable_dt(StateField.from_interior(np.ones((11, 11)), plane), plane, model, 0.9)
    assert dt == pytest.approx(0.03)
    assert speed == 2.0


def test_stable_dt_without_motion():
    """Test that vanishing wave speeds give an unbounded step."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    dt, _ = stable_dt(StateField.from_interior(np.ones(11), grid), grid, LinearModel(velocity=0.0), 0.9)
    assert dt == float("inf")


def test_required_ghost():
    """Test the ghost width of each half-width."""
    assert required_ghost(SchemeConfig.from_label("cat2")) == 2
    assert required_ghost(SchemeConfig.from_label("wbacat6")) == 3
    assert required_ghost(SchemeConfig.from_label("lf")) == 2


def test_last_step_is_clipped():
    """Test that the run ends exactly at t_end and the step sizes add up to it."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.ones(11), grid)
    result = advance(state, grid, SchemeConfig(), BurgersModel(), 0.123, BoundaryConditions())
    assert result.t == 0.123
    assert result.state.t == 0.123
    assert result.steps == len(result.dt_history)
    assert sum(result.dt_history) == pytest.approx(0.123)
    np.testing.assert_allclose(result.state.interior(grid), 1.0)
    assert result.errors is None


def test_last_two_steps_share_the_remainder():
    """Test that a run never ends on a sliver step when the CFL step barely misses t_end."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.ones(11), grid)
    result = advance(state, grid, SchemeConfig(), BurgersModel(), 0.181, BoundaryConditions())
    # Verify the CFL step 0.09 is followed by two equal halves of the last 0.091
    assert result.dt_history == pytest.approx([0.09, 0.0455, 0.0455])
    assert result.t == 0.181


def test_runs_are_deterministic():
    """Test that repeated runs give identical states."""
    grid = GridSpec(0.0, 1.0, 21, ghost=2)
    initial = StateField.from_interior(1.0 + 0.5 * np.sin(2.0 * np.pi * grid.x), grid)
    bc = BoundaryConditions("periodic", "periodic")
    scheme = SchemeConfig(kind="acat", p=2)
    first = advance(initial, grid, scheme, BurgersModel(), 0.1, bc)
    second = advance(initial, grid, scheme, BurgersModel(), 0.1, bc)
    np.testing.assert_array_equal(first.state.values, second.state.values)
    assert first.dt_history == second.dt_history


def test_advance_reports_to_logger(mock_logger):
    """Test that runs report their start, steps and end."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.ones(11), grid)
    advance(state, grid, SchemeConfig(), BurgersModel(), 0.1, BoundaryConditions(), logger=mock_logger)
    mock_logger.run_started.assert_called()
    mock_logger.step_progress.assert_called()
    mock_logger.run_finished.assert_called()


def test_advance_with_exact_reference():
    """Test that an exact solution yields error norms at t_end."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.ones(11), grid)
    result = advance(
        state, grid, SchemeConfig(), BurgersModel(), 0.1, BoundaryConditions(), exact=lambda x, t: np.ones_like(x)
    )
    assert result.errors is not None
    assert result.errors.l1_total == pytest.approx(0.0, abs=1e-14)


def test_time_step_underflow(mocker):
    """Test that a collapsing time step aborts the run."""
    mocker.patch("cat_balance.driver.stable_dt", return_value=(1e-20, 1.0))
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.ones(11), grid)
    with pytest.raises(TimeStepUnderflowError) as excinfo:
        advance(state, grid, SchemeConfig(), BurgersModel(), 1.0, BoundaryConditions())
    assert excinfo.value.dt == 1e-20


def test_non_finite_speed():
    """Test that an infinite wave speed aborts the run before stepping."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    values = np.ones(11)
    values[4] = np.inf
    with pytest.raises(TimeStepUnderflowError):
        advance(StateField.from_interior(values, grid), grid, SchemeConfig(), BurgersModel(), 1.0, BoundaryConditions())


def test_advance_argument_checks():
    """Test that a past end time or a narrow ghost layer is refused."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.ones(11), grid, t=0.5)
    with pytest.raises(ConfigurationError) as excinfo:
        advance(state, grid, SchemeConfig(), BurgersModel(), 0.5, BoundaryConditions())
    assert excinfo.value.field == "time.t_end"
    narrow = GridSpec(0.0, 1.0, 11, ghost=1)
    narrow_state = StateField.from_interior(np.ones(11), narrow)
    with pytest.raises(DimensionError):
        advance(narrow_state, narrow, SchemeConfig(), BurgersModel(), 1.0, BoundaryConditions())


@pytest.mark.parametrize(
    ("label", "kernel"),
    [
        ("cat4", "cat_step"),
        ("wbcat2", "wb_step"),
        ("acat2", "acat_step"),
        ("wbacat4", "acat_step"),
        ("lf", "lf_step"),
        ("wblf", "lf_step"),
    ],
)
def test_make_stepper_dispatch(mocker, label, kernel):
    """Test that each scheme kind binds its 1D kernel."""
    mock_kernel = mocker.patch(f"cat_balance.driver.{kernel}")
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    state = StateField.from_interior(np.ones(11), grid)
    stepper = make_stepper(SchemeConfig.from_label(label), grid, BurgersModel())
    stepper(state, 0.01)
    mock_kernel.assert_called_once()


def test_make_stepper_dispatch_2d(mocker):
    """Test that 2D grids bind the 2D kernels."""
    mock_kernel = mocker.patch("cat_balance.driver.wbcat2d_step")
    grid = GridSpec2D(0.0, 1.0, 5, 0.0, 1.0, 5, ghost=2)
    stepper = make_stepper(SchemeConfig.from_label("wbcat2"), grid, LinearModel2D())
    stepper(StateField.from_interior(np.ones((5, 5)), grid), 0.01)
    mock_kernel.assert_called_once()


@pytest.mark.parametrize("label", ["cat4", "acat4", "wbacat4"])
def test_stepper_keeps_workspaces_across_steps(mocker, label):
    """Test that a 1D stepper allocates its Taylor workspaces once per shape, not once per step."""
    allocate = mocker.spy(LocalWorkspace, "allocate")
    grid = GridSpec(0.0, 1.0, 21, ghost=2)
    state = StateField.from_interior(1.0 + 0.1 * np.sin(2.0 * np.pi * grid.x), grid)
    bc = BoundaryConditions("periodic", "periodic")
    result = advance(state, grid, SchemeConfig.from_label(label), BurgersModel(), 0.4, bc)
    # Verify at most one shape per order and per batch (all interfaces or all nodes)
    assert allocate.call_count <= 4 < result.steps


def test_error_norms():
    """Test L1 = dx sum |e| and Linf = max |e| per variable."""
    grid = GridSpec(0.0, 1.0, 11, ghost=2)
    numeric = StateField.from_interior(np.zeros(11), grid)
    norms = error_norms(numeric, lambda x, t: np.ones_like(x), grid, t=0.0)
    assert norms.l1_total == pytest.approx(1.1)
    assert norms.linf_max == 1.0
    same = error_norms(numeric, numeric, grid)
    assert same.l1_total == 0.0
    with pytest.raises(DimensionError):
        error_norms(numeric, np.zeros(7), grid)


def test_error_norms_against_fine_run():
    """Test that a finer StateField reference is restricted before comparing."""
    coarse = GridSpec(0.0, 1.0, 11, ghost=2)
    fine = GridSpec(0.0, 1.0, 41, ghost=2)
    reference = StateField.from_interior(fine.x**2, fine)
    numeric = StateField.from_interior(coarse.x**2, coarse)
    norms = error_norms(numeric, reference, coarse, reference_grid=fine)
    assert norms.linf_max == pytest.approx(0.0, abs=1e-15)


def test_restrict_by_index_and_nearest():
    """Test index sampling when meshes nest and nearest nodes otherwise."""
    source = GridSpec(0.0, 1.0, 21)
    values = source.x[:, None]
    nested = restrict(values, source, GridSpec(0.0, 1.0, 11))
    np.testing.assert_allclose(nested[:, 0], np.linspace(0.0, 1.0, 11))
    target = GridSpec(0.0, 1.0, 8)
    nearest = restrict(values, source, target)
    assert np.max(np.abs(nearest[:, 0] - target.x)) <= 0.5 * source.dx + 1e-12
    with pytest.raises(DimensionError):
        restrict(values, source, GridSpec(0.0, 2.0, 11))


def test_convergence_orders():
    """Test observed orders between successive meshes."""
    assert convergence_orders([4e-2, 1e-2], [0.2, 0.1]) == [None, pytest.approx(2.0)]
    assert convergence_orders([1e-3, 0.0], [0.2, 0.1]) == [None, None]


def test_error_norm_totals():
    """Test the scalar summaries of per-variable norms."""
    norms = ErrorNorms(np.array([1.0, 2.0]), np.array([0.5, 3.0]))
    assert norms.l1_total == 3.0
    assert norms.linf_max == 3.0
