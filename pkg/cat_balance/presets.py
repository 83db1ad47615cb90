"""Named experiments, stored as flat dotted keys on top of the schema defaults."""

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Preset:
    description: str
    items: dict[str, str] = field(default_factory=dict)


def _preset(description: str, **sections: dict[str, object]) -> Preset:
    """Flatten ``scheme={"cfl": 0.8}`` into ``{"scheme.cfl": "0.8"}``."""
    items = {"experiment.description": description}
    for section, values in sections.items():
        for key, value in values.items():
            items[f"{section}.{key}"] = ", ".join(map(str, value)) if isinstance(value, tuple) else str(value)
    return Preset(description, items)


_LINEAR = {
    "model": {"name": "linear", "velocity": 1.0},
    "geometry": {"name": "linear"},
    "grid": {"x_min": -0.2, "x_max": 2.0, "points": 41},
    "boundary": {"left": "dirichlet-exact", "right": "free"},
    "time": {"t_end": 1.0},
    "initial": {"kind": "smooth-transition", "base": 0.0, "scale": 1.0},
    "reference": {"kind": "exact"},
}

_BURGERS_OSCILLATORY = {
    "model": {"name": "burgers"},
    "geometry": {"name": "oscillatory", "amplitude": 0.1, "frequency": 10.0},
    "grid": {"x_min": -1.0, "x_max": 1.0, "points": 100},
}

_SW_BUMP = {
    "model": {"name": "shallow-water", "gravity": 9.81},
    "geometry": {"name": "sw-bump", "amplitude": 0.25, "center": 0.0, "half_width": 0.2},
    "grid": {"x_min": -3.0, "x_max": 3.0, "points": 200},
    "boundary": {"left": "dirichlet-stationary", "right": "dirichlet-stationary"},
}

_SW_ANCHOR = {"anchor_x": -3.0, "depth": 2.0, "discharge": 2.5}

_EULER_SQUARE = {"x_min": 0.0, "x_max": 1.0, "y_min": 0.0, "y_max": 1.0, "points": 20}

_EULER_WALLS = {side: "dirichlet-stationary" for side in ("left", "right", "bottom", "top")}

_ADAPTIVE_SCHEMES = ("acat2", "acat4", "wbacat2", "wbacat4")


def _merge(*parts: dict[str, dict[str, object]]) -> dict[str, dict[str, object]]:
    merged: dict[str, dict[str, object]] = {}
    for part in parts:
        for section, values in part.items():
            merged.setdefault(section, {}).update(values)
    return merged


PRESETS: dict[str, Preset] = {
    "linear-order": _preset(
        "Linear equation with H = x, smooth initial data, CAT2P/WBCAT2P with pinned indicators",
        **_merge(
            _LINEAR,
            {
                "experiment": {"name": "linear-order"},
                "scheme": {"kind": "cat", "order": 2, "cfl": 0.9, "pin_indicators": "true"},
                "schemes": {"list": ("cat2", "wbcat2", "cat4", "wbcat4")},
                "convergence": {"meshes": (6, 11, 21, 41, 81)},
            },
        ),
    ),
    "linear-order-adaptive": _preset(
        "Linear equation with H = x, smooth initial data, adaptive ACAT2P/WBACAT2P",
        **_merge(
            _LINEAR,
            {
                "experiment": {"name": "linear-order-adaptive"},
                "scheme": {"kind": "acat", "order": 4, "cfl": 0.9},
                "schemes": {"list": _ADAPTIVE_SCHEMES},
                "grid": {"points": 241},
                "convergence": {"meshes": (16, 31, 61, 121, 241, 481)},
            },
        ),
    ),
    "burgers-equilibrium": _preset(
        "Burgers equation, stationary solution u = exp(H) with H = x + 0.1 sin(10x)",
        **_merge(
            _BURGERS_OSCILLATORY,
            {
                "experiment": {"name": "burgers-equilibrium"},
                "scheme": {"kind": "wbacat", "order": 2, "cfl": 0.9},
                "schemes": {"list": _ADAPTIVE_SCHEMES},
                "boundary": {"left": "dirichlet-stationary", "right": "dirichlet-stationary"},
                "time": {"t_end": 8.0},
                "initial": {"kind": "stationary", "constant": 1.0},
                "reference": {"kind": "stationary"},
                "convergence": {"meshes": (100, 200, 400, 800, 1600)},
            },
        ),
    ),
    "burgers-perturbation": _preset(
        "Burgers equation, Gaussian bump of height 0.2 on the stationary solution u = exp(H)",
        **_merge(
            _BURGERS_OSCILLATORY,
            {
                "experiment": {"name": "burgers-perturbation"},
                "grid": {"points": 81},
                "scheme": {"kind": "wbacat", "order": 2, "cfl": 0.9},
                "schemes": {"list": _ADAPTIVE_SCHEMES},
                "boundary": {"left": "dirichlet-stationary", "right": "free"},
                "time": {"t_end": 0.2},
                "initial": {
                    "kind": "perturbed-stationary",
                    "constant": 1.0,
                    "amplitude": 0.2,
                    "center_x": -0.7,
                    "width": 200.0,
                    "variables": "u",
                },
                "reference": {"kind": "fine", "points": 2561, "scheme": "wbacat4"},
                "convergence": {"meshes": (81, 161, 321, 641, 1281)},
                "output": {"subtract_stationary": "true"},
            },
        ),
    ),
    "burgers-oscillatory": _preset(
        "Burgers equation, stationary solution with the fast oscillating H = x + sin(100x)/10",
        **_merge(
            _BURGERS_OSCILLATORY,
            {
                "experiment": {"name": "burgers-oscillatory"},
                "geometry": {"frequency": 100.0},
                "scheme": {"kind": "wbacat", "order": 2, "cfl": 0.9},
                "schemes": {"list": _ADAPTIVE_SCHEMES},
                "boundary": {"left": "dirichlet-stationary", "right": "dirichlet-stationary"},
                "time": {"t_end": 1.0},
                "initial": {"kind": "stationary", "constant": 1.0},
                "reference": {"kind": "stationary"},
                "output": {"subtract_stationary": "true"},
            },
        ),
    ),
    "burgers-order": _preset(
        "Burgers equation with H = x and smooth initial data",
        model={"name": "burgers"},
        geometry={"name": "linear"},
        experiment={"name": "burgers-order"},
        scheme={"kind": "acat", "order": 4, "cfl": 0.9},
        schemes={"list": _ADAPTIVE_SCHEMES},
        grid={"x_min": -0.2, "x_max": 2.0, "points": 81},
        boundary={"left": "free", "right": "free"},
        time={"t_end": 0.5},
        initial={"kind": "smooth-transition", "base": 0.0, "scale": 1.0},
        reference={"kind": "fine", "points": 2561, "scheme": "wbacat4"},
        convergence={"meshes": (81, 161, 321, 641)},
    ),
    "sw-subcritical-equilibrium": _preset(
        "Shallow water over a cosine bump, subcritical stationary solution with q = 2.5",
        **_merge(
            _SW_BUMP,
            {
                "experiment": {"name": "sw-subcritical-equilibrium"},
                "scheme": {"kind": "wbacat", "order": 2, "cfl": 0.8},
                "schemes": {"list": ("wbacat2", "wbacat4")},
                "time": {"t_end": 4.0},
                "initial": {"kind": "stationary", **_SW_ANCHOR},
                "reference": {"kind": "stationary"},
                "convergence": {"meshes": (50, 100, 200, 400)},
            },
        ),
    ),
    "sw-perturbation": _preset(
        "Shallow water over a cosine bump, thickness bump 0.006 exp(-20(x+1)^2) on the subcritical state",
        **_merge(
            _SW_BUMP,
            {
                "experiment": {"name": "sw-perturbation"},
                "grid": {"points": 201},
                "scheme": {"kind": "wbacat", "order": 2, "cfl": 0.8},
                "schemes": {"list": _ADAPTIVE_SCHEMES},
                "time": {"t_end": 0.15},
                "initial": {
                    "kind": "perturbed-stationary",
                    **_SW_ANCHOR,
                    "amplitude": 0.006,
                    "center_x": -1.0,
                    "width": 20.0,
                    "variables": "h",
                },
                "reference": {"kind": "fine", "points": 3201, "scheme": "wbacat4"},
                "convergence": {"meshes": (51, 101, 201, 401, 801)},
                "output": {"subtract_stationary": "true"},
            },
        ),
    ),
    "sw-flat-bottom": _preset(
        "Shallow water with flat bottom and smooth data h = 1 + p(x), q = p(x)",
        model={"name": "shallow-water", "gravity": 9.81},
        geometry={"name": "flat"},
        experiment={"name": "sw-flat-bottom"},
        scheme={"kind": "wbacat", "order": 2, "cfl": 0.9},
        schemes={"list": _ADAPTIVE_SCHEMES},
        grid={"x_min": -2.0, "x_max": 4.0, "points": 201},
        boundary={"left": "free", "right": "free"},
        time={"t_end": 0.2},
        initial={"kind": "smooth-transition", "values": (1.0, 0.0), "scale": 1.0},
        reference={"kind": "fine", "points": 3201, "scheme": "wbacat4"},
        convergence={"meshes": (201, 401, 801, 1601)},
    ),
    "euler-hydrostatic-planar": _preset(
        "2D Euler with gravity, isothermal hydrostatic state for the planar potential H = x + y",
        model={"name": "euler2d", "gamma": 1.4},
        geometry={"name": "H1"},
        experiment={"name": "euler-hydrostatic-planar"},
        scheme={"kind": "wbacat", "order": 2, "cfl": 0.9},
        schemes={"list": _ADAPTIVE_SCHEMES},
        grid=_EULER_SQUARE,
        boundary=_EULER_WALLS,
        time={"t_end": 0.3},
        initial={"kind": "stationary", "constant": 1.0},
        reference={"kind": "stationary"},
        convergence={"meshes": (20, 40, 80, 160)},
    ),
    "euler-hydrostatic-point": _preset(
        "2D Euler with gravity, isothermal hydrostatic state for a point mass at (1/3, -1/2)",
        model={"name": "euler2d", "gamma": 1.4},
        geometry={"name": "H2"},
        experiment={"name": "euler-hydrostatic-point"},
        scheme={"kind": "wbacat", "order": 2, "cfl": 0.9},
        schemes={"list": _ADAPTIVE_SCHEMES},
        grid=_EULER_SQUARE,
        boundary=_EULER_WALLS,
        time={"t_end": 0.3},
        initial={"kind": "stationary", "constant": 1.0},
        reference={"kind": "stationary"},
        convergence={"meshes": (20, 40, 80, 160)},
    ),
    "euler-perturbation": _preset(
        "2D Euler with gravity, Gaussian density and pressure bump on the point-mass hydrostatic state",
        model={"name": "euler2d", "gamma": 1.4},
        geometry={"name": "H2"},
        experiment={"name": "euler-perturbation"},
        scheme={"kind": "wbacat", "order": 4, "cfl": 0.9},
        schemes={"list": _ADAPTIVE_SCHEMES},
        grid={**_EULER_SQUARE, "points": 21},
        boundary=_EULER_WALLS,
        time={"t_end": 0.2},
        initial={
            "kind": "perturbed-stationary",
            "constant": 1.0,
            "amplitude": 0.008,
            "center_x": 0.5,
            "center_y": 0.5,
            "width": 200.0,
            "variables": ("rho", "p"),
        },
        reference={"kind": "fine", "points": 321, "scheme": "wbacat4"},
        convergence={"meshes": (21, 41, 81, 161)},
        output={"subtract_stationary": "true"},
    ),
    "euler-acoustic": _preset(
        "2D Euler with gravity, acoustic wave from a 1e-6 bump near the point mass at (0.4, -0.1)",
        model={"name": "euler2d", "gamma": 1.4},
        geometry={"name": "H3"},
        experiment={"name": "euler-acoustic"},
        scheme={"kind": "wbacat", "order": 2, "cfl": 0.8},
        schemes={"list": ("acat2", "wbacat2")},
        grid={"x_min": 0.0, "x_max": 2.0, "y_min": 0.0, "y_max": 2.0, "points": 101},
        boundary=_EULER_WALLS,
        time={"t_end": 0.75},
        initial={
            "kind": "perturbed-stationary",
            "constant": 1.0,
            "amplitude": 1e-6,
            "center_x": 1.0,
            "center_y": 1.0,
            "width": 200.0,
            "variables": ("rho", "p"),
        },
        output={"subtract_stationary": "true"},
    ),
}
