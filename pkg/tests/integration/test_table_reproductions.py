"""End-to-end studies on the named presets.

The full-size tables are marked slow; run them with ``./run_tests.sh --slow``. Every table
has a reduced companion on coarse meshes or short times that keeps the default suite quick.
"""

import pandas as pd
import pytest

from cat_balance.config import load_config
from cat_balance.experiments import convergence, wb_check


def _convergence(tmp_path, preset, *overrides):
    path = convergence(load_config(preset, overrides=list(overrides)), tmp_path)
    return pd.read_csv(path, comment="#").set_index("points")


def _drift(tmp_path, preset, *overrides):
    path = wb_check(load_config(preset, overrides=list(overrides)), tmp_path)
    return pd.read_csv(path, comment="#")


def _within(value, expected, factor):
    return expected / factor <= value <= expected * factor


@pytest.mark.slow
def test_linear_order_table(tmp_path):
    """Test CAT2/CAT4 errors and orders for u_t + u_x = u with pinned indicators."""
    table = _convergence(tmp_path, "linear-order")
    assert _within(table.loc[41, "cat2_error"], 3.93e-3, 2.0)
    assert _within(table.loc[41, "cat4_error"], 4.69e-5, 2.0)
    assert table.loc[81, "cat2_order"] == pytest.approx(2.02, abs=0.15)
    assert table.loc[81, "cat4_order"] == pytest.approx(3.88, abs=0.2)
    for label in ("cat2", "cat4"):
        ratio = table[f"wb{label}_error"] / table[f"{label}_error"]
        assert ratio.between(0.95, 1.05).all()


def test_linear_order_table_short(tmp_path):
    """Test the CAT2/CAT4 errors and orders on the two coarsest meshes."""
    table = _convergence(tmp_path, "linear-order", "convergence.meshes=11, 21", "schemes.list=cat2, wbcat2, cat4")
    assert _within(table.loc[21, "cat2_error"], 1.60e-2, 3.0)
    assert _within(table.loc[21, "cat4_error"], 6.94e-4, 3.0)
    assert table.loc[21, "cat2_order"] >= 1.6
    assert table.loc[21, "cat4_order"] >= 3.0
    # Verify the well-balanced variant costs no accuracy on a non-stationary solution
    assert (table["wbcat2_error"] / table["cat2_error"]).between(0.9, 1.1).all()


@pytest.mark.slow
def test_linear_order_adaptive_table(tmp_path):
    """Test that ACAT4 keeps fourth order on smooth data."""
    table = _convergence(tmp_path, "linear-order-adaptive", "schemes.list=acat4")
    assert _within(table.loc[481, "acat4_error"], 2.22e-9, 3.0)
    assert table.loc[481, "acat4_order"] == pytest.approx(4.0, abs=0.2)


def test_linear_order_adaptive_table_short(tmp_path):
    """Test the adaptive schemes on the two coarsest meshes."""
    table = _convergence(
        tmp_path, "linear-order-adaptive", "convergence.meshes=16, 31", "schemes.list=acat2, wbacat2, acat4"
    )
    assert table.loc[31, "acat4_error"] < table.loc[31, "acat2_error"] / 10.0
    assert (table["wbacat2_error"] / table["acat2_error"]).between(0.8, 1.25).all()


@pytest.mark.slow
def test_burgers_equilibrium_tables(tmp_path):
    """Test round-off drift of WBACAT and the orders of ACAT on the Burgers stationary solution."""
    drift = _drift(tmp_path / "wb", "burgers-equilibrium", "schemes.list=wbacat2, wbacat4")
    assert drift["l1"].max() <= 1e-13

    table = _convergence(
        tmp_path / "orders", "burgers-equilibrium", "schemes.list=acat2, acat4", "convergence.meshes=100, 200, 400"
    )
    assert _within(table.loc[100, "acat2_error"], 1.82e-3, 2.0)
    assert _within(table.loc[100, "acat4_error"], 1.93e-5, 2.0)
    assert table.loc[400, "acat2_order"] == pytest.approx(2.0, abs=0.15)
    assert table.loc[400, "acat4_order"] == pytest.approx(4.0, abs=0.15)


def test_burgers_equilibrium_tables_short(tmp_path):
    """Test the drift and the orders on the Burgers stationary solution over a short time."""
    drift = _drift(
        tmp_path / "wb", "burgers-equilibrium", "schemes.list=wbacat2", "convergence.meshes=100", "time.t_end=0.5"
    )
    assert drift["l1"].max() <= 1e-13

    table = _convergence(
        tmp_path / "orders",
        "burgers-equilibrium",
        "schemes.list=acat2, acat4",
        "convergence.meshes=100, 200",
        "time.t_end=0.5",
    )
    assert table.loc[200, "acat2_order"] >= 1.5
    assert table.loc[200, "acat4_order"] >= 3.0


@pytest.mark.slow
def test_burgers_perturbation_table(tmp_path):
    """Test that the well-balanced and fourth-order schemes gain on the perturbed Burgers solution."""
    table = _convergence(tmp_path, "burgers-perturbation", "convergence.meshes=81")
    assert table.loc[81, "wbacat2_error"] < table.loc[81, "acat2_error"]
    assert table.loc[81, "acat4_error"] < table.loc[81, "acat2_error"]
    assert table.loc[81, "wbacat4_error"] < table.loc[81, "wbacat2_error"]


def test_burgers_perturbation_table_short(tmp_path):
    """Test that WBACAT2 beats ACAT2 on the perturbed Burgers solution with a cheaper reference."""
    table = _convergence(
        tmp_path,
        "burgers-perturbation",
        "convergence.meshes=81",
        "reference.points=641",
        "schemes.list=acat2, wbacat2",
    )
    assert table.loc[81, "wbacat2_error"] < table.loc[81, "acat2_error"]


@pytest.mark.slow
def test_burgers_order_table(tmp_path):
    """Test the ACAT2/ACAT4 errors and orders for Burgers with H = x."""
    table = _convergence(tmp_path, "burgers-order", "schemes.list=acat2, acat4")
    assert _within(table.loc[81, "acat2_error"], 1.74e-3, 3.0)
    assert _within(table.loc[81, "acat4_error"], 2.41e-4, 3.0)
    assert table.loc[641, "acat2_order"] == pytest.approx(2.0, abs=0.3)
    assert table.loc[641, "acat4_order"] >= 3.0


def test_burgers_order_table_short(tmp_path):
    """Test that ACAT4 is more accurate than ACAT2 for Burgers with H = x on coarse meshes."""
    table = _convergence(
        tmp_path,
        "burgers-order",
        "convergence.meshes=41, 81",
        "reference.points=321",
        "time.t_end=0.1",
        "schemes.list=acat2, acat4",
    )
    assert (table["acat4_error"] < table["acat2_error"]).all()
    assert table.loc[81, "acat2_order"] >= 1.5


@pytest.mark.slow
def test_oscillatory_geometry_separation(tmp_path):
    """Test that only the well-balanced schemes keep u* for H = x + sin(100x)/10."""
    drift = _drift(tmp_path, "burgers-oscillatory", "convergence.meshes=100").set_index("scheme")
    assert drift.loc[["wbacat2", "wbacat4"], "l1"].max() <= 1e-13
    assert drift.loc[["acat2", "acat4"], "l1"].min() > 1e-6


def test_oscillatory_geometry_separation_short(tmp_path):
    """Test the same separation over a short time."""
    drift = _drift(
        tmp_path, "burgers-oscillatory", "convergence.meshes=100", "time.t_end=0.02", "schemes.list=wbacat2, acat2"
    ).set_index("scheme")
    assert drift.loc["wbacat2", "l1"] <= 1e-13
    assert drift.loc["acat2", "l1"] > 1e-6


@pytest.mark.slow
def test_shallow_water_preservation(tmp_path):
    """Test that the subcritical flow over the bump is kept for 50 to 400 nodes."""
    drift = _drift(tmp_path, "sw-subcritical-equilibrium")
    assert set(drift["points"]) == {50, 100, 200, 400}
    assert drift["l1"].max() <= 1e-12


def test_shallow_water_preservation_short(tmp_path):
    """Test that the subcritical flow is kept over a few steps on the coarse mesh."""
    drift = _drift(tmp_path, "sw-subcritical-equilibrium", "convergence.meshes=50", "time.t_end=0.1")
    assert set(drift["variable"]) == {"h", "q"}
    assert drift["l1"].max() <= 1e-12


@pytest.mark.slow
def test_shallow_water_perturbation_orders(tmp_path):
    """Test that WBACAT keeps its order on a small perturbation of the stationary flow."""
    table = _convergence(tmp_path, "sw-perturbation", "schemes.list=wbacat2, wbacat4")
    assert table.loc[801, "wbacat2_h_order"] == pytest.approx(2.0, abs=0.15)
    assert table.loc[801, "wbacat4_h_order"] >= 3.8


def test_shallow_water_perturbation_short(tmp_path):
    """Test that WBACAT2 resolves the small perturbation far better than ACAT2 on coarse meshes."""
    table = _convergence(
        tmp_path,
        "sw-perturbation",
        "convergence.meshes=51, 101",
        "reference.points=401",
        "schemes.list=acat2, wbacat2",
    )
    assert (table["wbacat2_h_error"] < table["acat2_h_error"] / 10.0).all()


@pytest.mark.slow
def test_flat_bottom_equivalence(tmp_path):
    """Test that WB and plain schemes agree when the bottom is flat."""
    table = _convergence(tmp_path, "sw-flat-bottom")
    for label in ("acat2", "acat4"):
        for name in ("h", "q"):
            plain, balanced = table[f"{label}_{name}_error"], table[f"wb{label}_{name}_error"]
            assert ((balanced - plain).abs() <= 5e-4 * plain.abs()).all()
    assert table.loc[1601, "acat2_h_order"] == pytest.approx(2.0, abs=0.1)
    assert table.loc[1601, "acat4_h_order"] == pytest.approx(4.0, abs=0.1)


def test_flat_bottom_equivalence_short(tmp_path):
    """Test that WBACAT2 and ACAT2 agree on a flat bottom over a short time."""
    table = _convergence(
        tmp_path,
        "sw-flat-bottom",
        "convergence.meshes=51, 101",
        "reference.points=401",
        "time.t_end=0.05",
        "schemes.list=acat2, wbacat2",
    )
    for name in ("h", "q"):
        plain, balanced = table[f"acat2_{name}_error"], table[f"wbacat2_{name}_error"]
        assert ((balanced - plain).abs() <= 1e-2 * plain.abs()).all()


@pytest.mark.slow
@pytest.mark.parametrize("preset", ["euler-hydrostatic-planar", "euler-hydrostatic-point"])
def test_hydrostatic_preservation(tmp_path, preset):
    """Test that WBACAT keeps the isothermal atmosphere on 20x20 to 160x160 nodes."""
    drift = _drift(tmp_path, preset, "schemes.list=wbacat2, wbacat4")
    assert drift.loc[drift["variable"] == "rho", "l1"].max() <= 1e-13


def test_hydrostatic_preservation_short(tmp_path):
    """Test that WBACAT2 keeps the point-mass atmosphere over a few steps."""
    drift = _drift(
        tmp_path, "euler-hydrostatic-point", "schemes.list=wbacat2", "convergence.meshes=12", "time.t_end=0.02"
    )
    assert drift["l1"].max() <= 1e-13


@pytest.mark.slow
def test_hydrostatic_errors_of_plain_scheme(tmp_path):
    """Test the ACAT2 density error for the planar potential."""
    table = _convergence(tmp_path, "euler-hydrostatic-planar", "schemes.list=acat2")
    assert _within(table.loc[20, "acat2_rho_error"], 4.87e-6, 3.0)
    assert table.loc[160, "acat2_rho_order"] == pytest.approx(2.0, abs=0.3)


def test_hydrostatic_errors_of_plain_scheme_short(tmp_path):
    """Test that ACAT2 drifts off the planar atmosphere while WBACAT2 stays on it."""
    drift = _drift(
        tmp_path,
        "euler-hydrostatic-planar",
        "schemes.list=acat2, wbacat2",
        "convergence.meshes=11",
        "time.t_end=0.05",
    )
    rho = drift[drift["variable"] == "rho"].set_index("scheme")
    assert rho.loc["acat2", "l1"] > 1e-10
    assert rho.loc["wbacat2", "l1"] <= 1e-13


@pytest.mark.slow
def test_euler_perturbation(tmp_path):
    """Test the WBACAT4 density error and order on the perturbed atmosphere."""
    table = _convergence(tmp_path, "euler-perturbation", "schemes.list=wbacat4", "convergence.meshes=21, 41, 81")
    assert _within(table.loc[41, "wbacat4_rho_error"], 4.92e-8, 3.0)
    assert table.loc[81, "wbacat4_rho_order"] >= 2.7


def test_euler_perturbation_short(tmp_path):
    """Test that WBACAT4 beats ACAT4 on the perturbed atmosphere with a coarse reference."""
    table = _convergence(
        tmp_path,
        "euler-perturbation",
        "convergence.meshes=21",
        "reference.points=41",
        "schemes.list=acat4, wbacat4",
    )
    assert table.loc[21, "wbacat4_rho_error"] < table.loc[21, "acat4_rho_error"]
