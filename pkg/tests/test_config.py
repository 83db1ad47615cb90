"""Tests for scheme labels, config resolution and validation."""

import pytest

from cat_balance.config import (
    SCHEMA,
    ExperimentConfig,
    SchemeConfig,
    check_doubling,
    load_config,
    parse_override,
    read_config_file,
)
from cat_balance.errors import ConfigurationError
from cat_balance.presets import PRESETS


@pytest.mark.parametrize(
    ("label", "kind", "p"),
    [("cat2", "cat", 1), ("wbcat4", "wbcat", 2), ("acat6", "acat", 3), ("WBACAT2", "wbacat", 1), ("lf", "lf", 1)],
)
def test_scheme_labels(label, kind, p):
    """Test that labels parse into kind and half-width and print back."""
    scheme = SchemeConfig.from_label(label)
    assert (scheme.kind, scheme.p) == (kind, p)
    assert scheme.label == label.lower()


@pytest.mark.parametrize("label", ["cat3", "cat8", "weno5", "cat"])
def test_invalid_scheme_labels(label):
    """Test that odd, too large and unknown labels are refused."""
    with pytest.raises(ConfigurationError):
        SchemeConfig.from_label(label)


def test_scheme_properties():
    """Test the derived flags of a scheme."""
    scheme = SchemeConfig.from_label("wbacat4", epsilon="0.5")
    assert scheme.order == 4
    assert scheme.well_balanced
    assert scheme.adaptive
    assert scheme.epsilon_value(0.1) == 0.5
    assert SchemeConfig().epsilon_value(0.1) == pytest.approx(0.01)
    assert not SchemeConfig.from_label("wblf").adaptive


@pytest.mark.parametrize(
    ("settings", "field"),
    [
        ({"cfl": 0.0}, "scheme.cfl"),
        ({"threshold": 1.5}, "scheme.threshold"),
        ({"limiter": "koren"}, "scheme.limiter"),
        ({"epsilon": "tiny"}, "scheme.epsilon"),
        ({"epsilon": "-1"}, "scheme.epsilon"),
    ],
)
def test_scheme_validation(settings, field):
    """Test that invalid scheme settings name their key."""
    with pytest.raises(ConfigurationError) as excinfo:
        SchemeConfig(**settings)
    assert excinfo.value.field == field


def test_defaults_resolve():
    """Test that an empty configuration resolves to the schema defaults."""
    config = ExperimentConfig.from_flat({})
    assert config.model == "burgers"
    assert config.scheme.label == "acat2"
    assert config.schemes == (config.scheme,)
    assert config.meshes == (100,)
    assert config.dim == 1
    assert set(config.resolved_items()) == set(SCHEMA)


@pytest.mark.parametrize(
    ("items", "field"),
    [
        ({"scheme.order": "3"}, "scheme.order"),
        ({"scheme.cfl": "fast"}, "scheme.cfl"),
        ({"grid.points": "-4"}, "grid.points"),
        ({"boundary.left": "reflective"}, "boundary.left"),
        ({"solver.tolerance": "1"}, "solver.tolerance"),
        ({"geometry.amplitude": "big"}, "geometry.amplitude"),
        ({"time.t_end": "0"}, "time.t_end"),
        ({"grid.x_max": "-1"}, "grid.x_max"),
        ({"boundary.left": "periodic"}, "boundary.left"),
        ({"model.name": "linear", "initial.kind": "constant", "scheme.limiter_strategy": "roe-speed"}, None),
        ({"model.name": "shallow-water", "scheme.limiter_strategy": "roe-speed"}, "scheme.limiter_strategy"),
        ({"model.name": "euler2d"}, "model.name"),
        ({"grid.y_min": "0"}, "grid.y_max"),
        ({"reference.scheme": "rk4"}, "schemes.list"),
        ({"convergence.meshes": "10, 30"}, "convergence.meshes"),
    ],
)
def test_validation_names_field(items, field):
    """Test that every invalid setting reports the dotted key at fault."""
    if field is None:
        ExperimentConfig.from_flat(items)
        return
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_flat(items)
    assert excinfo.value.field == field


def test_well_balanced_needs_stationary_family():
    """Test that well-balanced schemes are refused for models without stationary solutions."""
    items = {
        "model.name": "linear2d",
        "grid.y_min": "0",
        "grid.y_max": "1",
        "initial.kind": "constant",
        "scheme.kind": "wbcat",
    }
    with pytest.raises(ConfigurationError) as excinfo:
        ExperimentConfig.from_flat(items)
    assert excinfo.value.field == "scheme.kind"


def test_check_doubling():
    """Test that meshes must double in nodes or in intervals."""
    check_doubling((50, 100, 200))
    check_doubling((6, 11, 21))
    with pytest.raises(ConfigurationError):
        check_doubling((50, 120))


def test_read_config_file(tmp_path):
    """Test that INI sections become dotted keys."""
    path = tmp_path / "run.ini"
    path.write_text("[scheme]\nkind = wbacat\norder = 4\n\n[geometry]\nname = oscillatory\nfrequency = 100\n")
    items = read_config_file(path)
    assert items == {
        "scheme.kind": "wbacat",
        "scheme.order": "4",
        "geometry.name": "oscillatory",
        "geometry.frequency": "100",
    }


def test_read_config_file_errors(tmp_path):
    """Test that missing and malformed files report --config."""
    with pytest.raises(ConfigurationError) as excinfo:
        read_config_file(tmp_path / "missing.ini")
    assert excinfo.value.field == "--config"
    broken = tmp_path / "broken.ini"
    broken.write_text("kind = cat\n")
    with pytest.raises(ConfigurationError):
        read_config_file(broken)


def test_parse_override():
    """Test key=value splitting."""
    assert parse_override(" scheme.cfl = 0.5 ") == ("scheme.cfl", "0.5")
    with pytest.raises(ConfigurationError) as excinfo:
        parse_override("scheme.cfl")
    assert excinfo.value.field == "--override"


def test_resolution_order(tmp_path):
    """Test that files override presets and command-line overrides win over both."""
    path = tmp_path / "run.ini"
    path.write_text("[scheme]\ncfl = 0.5\norder = 4\n")
    config = load_config("burgers-equilibrium", path, ["scheme.cfl=0.3"])
    assert config.scheme.cfl == 0.3
    assert config.scheme.order == 4
    assert config.geometry == "oscillatory"
    assert config.geometry_params == {"amplitude": 0.1, "frequency": 10.0}


def test_override_re_resolves():
    """Test that overriding a resolved config validates again."""
    config = load_config("burgers-equilibrium")
    assert config.override({"grid.points": "50"}).grid.points == 50
    with pytest.raises(ConfigurationError):
        config.override({"scheme.kind": "magic"})


def test_with_scheme_refreshes_items():
    """Test that the flat items follow a replaced scheme."""
    config = load_config("burgers-equilibrium")
    changed = config.with_scheme(SchemeConfig.from_label("cat6", cfl=0.5, pin_indicators=True))
    items = changed.resolved_items()
    assert (items["scheme.kind"], items["scheme.order"], items["scheme.cfl"]) == ("cat", "6", "0.5")
    assert items["scheme.pin_indicators"] == "true"
    # Verify re-resolving the items gives back the same scheme
    assert ExperimentConfig.from_flat(changed.items).scheme == changed.scheme
    assert config.resolved_items()["scheme.kind"] == "wbacat"


def test_unknown_preset():
    """Test that an unknown preset reports --preset."""
    with pytest.raises(ConfigurationError) as excinfo:
        load_config("sod-tube")
    assert excinfo.value.field == "--preset"


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_load(name):
    """Test that every preset resolves without errors."""
    config = load_config(name)
    assert config.name == name
    assert config.schemes


def test_two_dimensional_preset():
    """Test that 2D presets give square meshes with matching model dimension."""
    config = load_config("euler-hydrostatic-point")
    assert config.dim == 2
    assert config.grid.points_y is None
    assert [scheme.label for scheme in config.schemes] == ["acat2", "acat4", "wbacat2", "wbacat4"]
