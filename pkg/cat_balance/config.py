"""Experiment configuration: flat dotted keys resolved from defaults, presets, files and overrides.

A configuration file is INI text; the key ``cfl`` of section ``[scheme]`` is the dotted
key ``scheme.cfl``. Every key is documented in docs/CONFIG.md.
"""

import configparser
import re
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ConfigurationError
from .models import MODELS

SCHEME_KINDS = ("cat", "wbcat", "acat", "wbacat", "lf", "wblf")
LIMITERS = ("minmod", "superbee", "vanleer")
LIMITER_STRATEGIES = ("two-sided-min", "roe-speed")
BOUNDARY_KINDS = ("dirichlet-exact", "dirichlet-stationary", "free", "periodic")
INITIAL_KINDS = ("stationary", "perturbed-stationary", "smooth-transition", "constant")
REFERENCE_KINDS = ("none", "exact", "stationary", "fine")
MAX_HALF_WIDTH = 3
ROE_TOLERANCE = 1e-12

_LABEL = re.compile(r"^(wbacat|acat|wbcat|cat)(\d+)$")


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme kind, half-width p (order 2p) and adaptation settings."""

    kind: str = "acat"
    p: int = 1
    cfl: float = 0.9
    limiter: str = "minmod"
    limiter_strategy: str = "two-sided-min"
    threshold: float = 0.9
    epsilon: str = "dx2"
    pin_indicators: bool = False

    def __post_init__(self) -> None:
        if self.kind not in SCHEME_KINDS:
            raise ConfigurationError("scheme.kind", f"expected one of {', '.join(SCHEME_KINDS)}, got '{self.kind}'")
        if not 1 <= self.p <= MAX_HALF_WIDTH:
            raise ConfigurationError("scheme.order", f"order must be 2, 4 or 6, got {2 * self.p}")
        if not self.cfl > 0.0:
            raise ConfigurationError("scheme.cfl", f"must be positive, got {self.cfl}")
        if self.limiter not in LIMITERS:
            raise ConfigurationError("scheme.limiter", f"expected one of {', '.join(LIMITERS)}")
        if self.limiter_strategy not in LIMITER_STRATEGIES:
            raise ConfigurationError(
                "scheme.limiter_strategy", f"expected one of {', '.join(LIMITER_STRATEGIES)}"
            )
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigurationError("scheme.threshold", f"must lie in (0, 1], got {self.threshold}")
        if self.epsilon != "dx2":
            try:
                value = float(self.epsilon)
            except ValueError as e:
                raise ConfigurationError("scheme.epsilon", f"expected 'dx2' or a number, got '{self.epsilon}'") from e
            if value < 0.0:
                raise ConfigurationError("scheme.epsilon", "must be non-negative")

    @property
    def order(self) -> int:
        return 2 * self.p

    @property
    def label(self) -> str:
        return self.kind if self.kind.endswith("lf") else f"{self.kind}{self.order}"

    @property
    def well_balanced(self) -> bool:
        return self.kind.startswith("wb")

    @property
    def adaptive(self) -> bool:
        return self.kind in ("acat", "wbacat")

    def epsilon_value(self, dx: float) -> float:
        """Lateral-weight regularization for mesh spacing dx."""
        return dx * dx if self.epsilon == "dx2" else float(self.epsilon)

    @classmethod
    def from_label(cls, label: str, **settings: Any) -> "SchemeConfig":
        """Parse labels such as ``cat2``, ``wbacat4`` or ``lf``."""
        label = label.strip().lower()
        if label in ("lf", "wblf"):
            return cls(kind=label, **settings)
        match = _LABEL.match(label)
        if not match or int(match.group(2)) % 2:
            raise ConfigurationError("schemes.list", f"invalid scheme label '{label}'")
        return cls(kind=match.group(1), p=int(match.group(2)) // 2, **settings)


@dataclass(frozen=True)
class GridConfig:
    x_min: float
    x_max: float
    points: int
    y_min: float | None = None
    y_max: float | None = None
    points_y: int | None = None

    @property
    def dim(self) -> int:
        return 1 if self.y_min is None else 2


@dataclass(frozen=True)
class BoundaryConfig:
    left: str = "free"
    right: str = "free"
    bottom: str = "free"
    top: str = "free"


@dataclass(frozen=True)
class InitialConfig:
    kind: str = "stationary"
    constant: float = 1.0
    anchor_x: float = 0.0
    depth: float = 1.0
    discharge: float = 0.0
    amplitude: float = 0.0
    center_x: float = 0.0
    center_y: float = 0.0
    width: float = 0.0
    variables: tuple[str, ...] = ()
    base: float = 0.0
    scale: float = 1.0
    values: tuple[float, ...] = ()


@dataclass(frozen=True)
class ReferenceConfig:
    kind: str = "none"
    points: int | None = None
    refinement: int = 10
    scheme: str = "wbacat4"


@dataclass(frozen=True)
class OutputConfig:
    snapshot: bool = True
    subtract_stationary: bool = False


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got '{text}'")


def _parse_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _choice(options: Iterable[str]) -> Callable[[str], str]:
    allowed = tuple(options)

    def parse(text: str) -> str:
        value = text.strip()
        if value not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}, got '{value}'")
        return value

    return parse


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise ValueError(f"must be a positive integer, got {value}")
    return value


def _optional(parser: Callable[[str], Any]) -> Callable[[str], Any]:
    return lambda text: None if text.strip() == "" else parser(text)


# dotted key -> (parser, default text, description)
SCHEMA: dict[str, tuple[Callable[[str], Any], str, str]] = {
    "experiment.name": (str, "experiment", "name written into outputs"),
    "experiment.description": (str, "", "free text"),
    "model.name": (_choice(MODELS), "burgers", "balance law"),
    "model.velocity": (float, "1.0", "advection speed a of the linear models"),
    "model.velocity_y": (float, "0.0", "advection speed b of the 2D linear model"),
    "model.gravity": (float, "9.81", "gravity g of the shallow-water model"),
    "model.gamma": (float, "1.4", "ratio of specific heats of the Euler model"),
    "geometry.name": (str, "flat", "named bathymetry or potential H"),
    "scheme.kind": (_choice(SCHEME_KINDS), "acat", "scheme family"),
    "scheme.order": (_positive_int, "2", "formal order 2P"),
    "scheme.cfl": (float, "0.9", "CFL number"),
    "scheme.limiter": (_choice(LIMITERS), "minmod", "first-order flux limiter"),
    "scheme.limiter_strategy": (_choice(LIMITER_STRATEGIES), "two-sided-min", "limiter ratio selection"),
    "scheme.threshold": (float, "0.9", "smoothness indicator threshold"),
    "scheme.epsilon": (str, "dx2", "lateral weight regularization: 'dx2' or a number"),
    "scheme.pin_indicators": (_parse_bool, "false", "force all indicators to 1"),
    "schemes.list": (_parse_list, "", "scheme labels of convergence and wb-check tables"),
    "grid.x_min": (float, "0.0", "left end of the x interval"),
    "grid.x_max": (float, "1.0", "right end of the x interval"),
    "grid.y_min": (_optional(float), "", "bottom of the y interval (2D only)"),
    "grid.y_max": (_optional(float), "", "top of the y interval (2D only)"),
    "grid.points": (_positive_int, "100", "nodes along x (and y unless grid.points_y is set)"),
    "grid.points_y": (_optional(_positive_int), "", "nodes along y"),
    "boundary.left": (_choice(BOUNDARY_KINDS), "free", "left boundary"),
    "boundary.right": (_choice(BOUNDARY_KINDS), "free", "right boundary"),
    "boundary.bottom": (_choice(BOUNDARY_KINDS), "free", "bottom boundary (2D)"),
    "boundary.top": (_choice(BOUNDARY_KINDS), "free", "top boundary (2D)"),
    "time.t_end": (float, "1.0", "final time"),
    "initial.kind": (_choice(INITIAL_KINDS), "stationary", "initial condition"),
    "initial.constant": (float, "1.0", "family constant C of exponential and isothermal solutions"),
    "initial.anchor_x": (float, "0.0", "anchor abscissa of the shallow-water stationary solution"),
    "initial.depth": (float, "1.0", "water thickness at the anchor"),
    "initial.discharge": (float, "0.0", "discharge of the shallow-water stationary solution"),
    "initial.amplitude": (float, "0.0", "Gaussian perturbation amplitude"),
    "initial.center_x": (float, "0.0", "perturbation centre x"),
    "initial.center_y": (float, "0.0", "perturbation centre y"),
    "initial.width": (float, "0.0", "perturbation decay coefficient w in exp(-w r^2)"),
    "initial.variables": (_parse_list, "", "primitive variables perturbed or set by the profile"),
    "initial.base": (float, "0.0", "smooth-transition offset"),
    "initial.scale": (float, "1.0", "smooth-transition amplitude"),
    "initial.values": (lambda text: tuple(float(v) for v in _parse_list(text)), "", "constant state"),
    "convergence.meshes": (lambda text: tuple(int(v) for v in _parse_list(text)), "", "mesh sizes"),
    "reference.kind": (_choice(REFERENCE_KINDS), "none", "error reference"),
    "reference.points": (_optional(_positive_int), "", "nodes of the fine reference run"),
    "reference.refinement": (_positive_int, "10", "fine reference refinement factor"),
    "reference.scheme": (str, "wbacat4", "scheme of the fine reference run"),
    "output.snapshot": (_parse_bool, "true", "write the final state"),
    "output.subtract_stationary": (_parse_bool, "false", "add columns of state minus stationary field"),
}

# parameter keys accepted under a dynamic prefix
FREE_PREFIXES = ("geometry.",)


def _parse(items: dict[str, str], key: str) -> Any:
    parser, default, _ = SCHEMA[key]
    text = items.get(key, default)
    try:
        return parser(text)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(key, str(e)) from e


def check_doubling(meshes: tuple[int, ...]) -> None:
    """Each mesh must double the previous one (in nodes or in intervals)."""
    for coarse, fine in zip(meshes, meshes[1:], strict=False):
        if fine not in (2 * coarse, 2 * (coarse - 1) + 1):
            raise ConfigurationError("convergence.meshes", f"{fine} does not double {coarse}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment; `items` holds the flat dotted keys it was built from."""

    name: str
    model: str
    model_params: dict[str, float]
    geometry: str
    geometry_params: dict[str, float]
    scheme: SchemeConfig
    schemes: tuple[SchemeConfig, ...]
    grid: GridConfig
    boundary: BoundaryConfig
    t_end: float
    initial: InitialConfig
    meshes: tuple[int, ...]
    reference: ReferenceConfig
    output: OutputConfig
    items: dict[str, str] = field(repr=False, default_factory=dict)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @classmethod
    def from_flat(cls, items: dict[str, str]) -> "ExperimentConfig":
        """Parse and validate flat dotted keys.

        Raises:
            ConfigurationError: With the dotted path of the first invalid key
        """
        for key in items:
            if key not in SCHEMA and not key.startswith(FREE_PREFIXES):
                raise ConfigurationError(key, "unknown configuration key")
        value = {key: _parse(items, key) for key in SCHEMA}

        order = value["scheme.order"]
        if order % 2:
            raise ConfigurationError("scheme.order", f"order must be even, got {order}")
        settings = {
            "cfl": value["scheme.cfl"],
            "limiter": value["scheme.limiter"],
            "limiter_strategy": value["scheme.limiter_strategy"],
            "threshold": value["scheme.threshold"],
            "epsilon": value["scheme.epsilon"],
            "pin_indicators": value["scheme.pin_indicators"],
        }
        scheme = SchemeConfig(kind=value["scheme.kind"], p=order // 2, **settings)
        labels = value["schemes.list"] or (scheme.label,)
        schemes = tuple(SchemeConfig.from_label(label, **settings) for label in labels)

        geometry_params = {}
        for key, text in items.items():
            if key.startswith("geometry.") and key != "geometry.name":
                try:
                    geometry_params[key.split(".", 1)[1]] = float(text)
                except ValueError as e:
                    raise ConfigurationError(key, f"expected a number, got '{text}'") from e

        grid = GridConfig(
            value["grid.x_min"],
            value["grid.x_max"],
            value["grid.points"],
            value["grid.y_min"],
            value["grid.y_max"],
            value["grid.points_y"],
        )
        meshes = value["convergence.meshes"] or (grid.points,)
        check_doubling(meshes)

        config = cls(
            name=value["experiment.name"],
            model=value["model.name"],
            model_params={
                "velocity": value["model.velocity"],
                "velocity_y": value["model.velocity_y"],
                "gravity": value["model.gravity"],
                "gamma": value["model.gamma"],
            },
            geometry=value["geometry.name"],
            geometry_params=geometry_params,
            scheme=scheme,
            schemes=schemes,
            grid=grid,
            boundary=BoundaryConfig(
                value["boundary.left"], value["boundary.right"], value["boundary.bottom"], value["boundary.top"]
            ),
            t_end=value["time.t_end"],
            initial=InitialConfig(
                kind=value["initial.kind"],
                constant=value["initial.constant"],
                anchor_x=value["initial.anchor_x"],
                depth=value["initial.depth"],
                discharge=value["initial.discharge"],
                amplitude=value["initial.amplitude"],
                center_x=value["initial.center_x"],
                center_y=value["initial.center_y"],
                width=value["initial.width"],
                variables=value["initial.variables"],
                base=value["initial.base"],
                scale=value["initial.scale"],
                values=value["initial.values"],
            ),
            meshes=meshes,
            reference=ReferenceConfig(
                value["reference.kind"],
                value["reference.points"],
                value["reference.refinement"],
                value["reference.scheme"],
            ),
            output=OutputConfig(value["output.snapshot"], value["output.subtract_stationary"]),
            items={key: str(items.get(key, SCHEMA[key][1] if key in SCHEMA else "")) for key in (*SCHEMA, *items)},
        )
        config.validate()
        return config

    def validate(self) -> None:
        """Cross-field checks: dimension, model capabilities, boundary and time settings."""
        if not self.t_end > 0.0:
            raise ConfigurationError("time.t_end", f"must be positive, got {self.t_end}")
        if self.grid.x_max <= self.grid.x_min:
            raise ConfigurationError("grid.x_max", "must exceed grid.x_min")
        model_cls = MODELS[self.model]
        if (self.grid.y_min is None) != (self.grid.y_max is None):
            raise ConfigurationError("grid.y_max", "grid.y_min and grid.y_max go together")
        if model_cls.dim != self.dim:
            raise ConfigurationError("model.name", f"{self.model} is {model_cls.dim}D but the grid is {self.dim}D")
        if self.dim == 2 and self.grid.y_max <= self.grid.y_min:  # type: ignore[operator]
            raise ConfigurationError("grid.y_max", "must exceed grid.y_min")
        for scheme in (self.scheme, *self.schemes):
            if scheme.well_balanced and model_cls.stationary_family is None:
                raise ConfigurationError("scheme.kind", f"{scheme.label} needs a model with stationary solutions")
            if scheme.limiter_strategy == "roe-speed" and len(model_cls.variables) != 1:
                raise ConfigurationError("scheme.limiter_strategy", "roe-speed needs a scalar model")
        sides = ("left", "right") if self.dim == 1 else ("left", "right", "bottom", "top")
        for side in sides:
            kind = getattr(self.boundary, side)
            if kind == "periodic":
                opposite = {"left": "right", "right": "left", "bottom": "top", "top": "bottom"}[side]
                if getattr(self.boundary, opposite) != "periodic":
                    raise ConfigurationError(f"boundary.{side}", "periodic boundaries come in pairs")
        if self.initial.kind in ("stationary", "perturbed-stationary") and model_cls.stationary_family is None:
            raise ConfigurationError("initial.kind", f"{self.model} has no stationary solutions")
        if self.reference.kind == "stationary" and model_cls.stationary_family is None:
            raise ConfigurationError("reference.kind", f"{self.model} has no stationary solutions")
        SchemeConfig.from_label(self.reference.scheme)

    def resolved_items(self) -> dict[str, str]:
        """Flat dotted keys with every default filled in."""
        return dict(sorted(self.items.items()))

    def override(self, updates: dict[str, str]) -> "ExperimentConfig":
        """Re-resolve with some keys replaced."""
        return ExperimentConfig.from_flat({**self.items, **updates})

    def with_scheme(self, scheme: SchemeConfig) -> "ExperimentConfig":
        """The same experiment with another scheme; the scheme.* items follow it."""
        items = {
            **self.items,
            "scheme.kind": scheme.kind,
            "scheme.order": str(scheme.order),
            "scheme.cfl": str(scheme.cfl),
            "scheme.limiter": scheme.limiter,
            "scheme.limiter_strategy": scheme.limiter_strategy,
            "scheme.threshold": str(scheme.threshold),
            "scheme.epsilon": scheme.epsilon,
            "scheme.pin_indicators": str(scheme.pin_indicators).lower(),
        }
        return replace(self, scheme=scheme, items=items)


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read an INI file into flat dotted keys.

    Raises:
        ConfigurationError: If the file is missing or malformed
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        with open(path, encoding="utf-8") as handle:
            parser.read_file(handle)
    except OSError as e:
        raise ConfigurationError("--config", f"cannot read {path}: {e}") from e
    except configparser.Error as e:
        raise ConfigurationError("--config", f"malformed file {path}: {e}") from e
    return {f"{section}.{key}": value for section in parser.sections() for key, value in parser[section].items()}


def parse_override(text: str) -> tuple[str, str]:
    """Split ``key=value``."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError("--override", f"expected key=value, got '{text}'")
    return key.strip(), value.strip()


def load_config(
    preset: str | None = None,
    path: str | Path | None = None,
    overrides: Iterable[str] = (),
) -> ExperimentConfig:
    """Resolve defaults < preset < file < overrides into an ExperimentConfig."""
    from .presets import PRESETS  # noqa: PLC0415

    items: dict[str, str] = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigurationError("--preset", f"unknown preset '{preset}'")
        items.update(PRESETS[preset].items)
    if path is not None:
        items.update(read_config_file(path))
    for text in overrides:
        key, value = parse_override(text)
        items[key] = value
    return ExperimentConfig.from_flat(items)
