"""Run configuration: a structured key-value file with nested sections.

Unknown sections or keys are hard errors; a silent typo in a tolerance
name would corrupt physics results.  Values are plain ``key = value``
pairs in INI syntax read by :mod:`configparser`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .dmrg import DmrgSettings, PROFILES
from .model import ModelParams
from .selfconsist import FixedPointConfig

__all__ = ["RunConfig", "SweepSpec", "ConfigError", "load_config", "DELTA_E_FLOORS"]

DELTA_E_FLOORS = {"default": 1e-10, "tight": 1e-12}

FIXED_POINT_PROFILES = {
    "default": FixedPointConfig(tol=1e-10),
    "tight": FixedPointConfig(tol=1e-13),
}


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float
    fine_step: float
    directions: str  # up | down | both


@dataclass(frozen=True)
class GridAxis:
    name: str
    start: float
    stop: float
    step: float


@dataclass(frozen=True)
class LandscapeSpec:
    max: float = 0.5
    points: int = 41
    m_s_policy: str = "pinned_zero"


@dataclass(frozen=True)
class MulticriticalSpec:
    bracket_lo: float
    bracket_hi: float
    xtol: float = 1e-3
    floor: float | None = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    mode: str = "ferro"
    sizes: tuple[int, int] = (100, 101)
    profile: str = "default"
    output_dir: str = "out"
    rng_seed: int = 0
    jobs: int = 1
    sweep: SweepSpec | None = None
    solver: DmrgSettings = field(default_factory=DmrgSettings)
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)
    multicritical: MulticriticalSpec | None = None
    grid_axes: tuple[GridAxis, ...] = ()
    landscape: LandscapeSpec = field(default_factory=LandscapeSpec)

    @property
    def delta_e_floor(self) -> float:
        if self.multicritical is not None and self.multicritical.floor is not None:
            return self.multicritical.floor
        return DELTA_E_FLOORS[self.profile]

    def flat_items(self) -> list[tuple[str, str]]:
        """Resolved settings as sorted (key, value) pairs for CSV headers."""
        out = []
        m = self.model
        out += [
            ("model.J", repr(m.J)),
            ("model.eps", repr(m.eps)),
            ("model.g", repr(m.g)),
            ("model.omega_c", repr(m.omega_c)),
            ("model.D", repr(m.D)),
            ("run.mode", self.mode),
            ("run.sizes", f"{self.sizes[0]},{self.sizes[1]}"),
            ("run.profile", self.profile),
            ("run.rng_seed", str(self.rng_seed)),
            ("run.jobs", str(self.jobs)),
        ]
        s = self.solver
        out += [
            ("solver.cutoff", repr(s.cutoff)),
            ("solver.energy_tol", repr(s.energy_tol)),
            ("solver.max_bond_dim", str(s.max_bond_dim)),
            ("solver.max_sweeps", str(s.max_sweeps)),
            ("solver.lanczos_tol", repr(s.lanczos_tol)),
            ("solver.noise", repr(s.noise)),
        ]
        f = self.fixed_point
        out += [
            ("fixed_point.tol", repr(f.tol)),
            ("fixed_point.max_iters", str(f.max_iters)),
            ("fixed_point.anderson_window", str(f.anderson_window)),
            ("fixed_point.damping", repr(f.damping)),
            ("fixed_point.seed_floor", repr(f.seed_floor)),
        ]
        if self.sweep is not None:
            w = self.sweep
            out += [
                ("sweep.variable", w.variable),
                ("sweep.start", repr(w.start)),
                ("sweep.stop", repr(w.stop)),
                ("sweep.step", repr(w.step)),
                ("sweep.fine_step", repr(w.fine_step)),
                ("sweep.directions", w.directions),
            ]
        if self.multicritical is not None:
            mc = self.multicritical
            out += [
                ("multicritical.bracket_lo", repr(mc.bracket_lo)),
                ("multicritical.bracket_hi", repr(mc.bracket_hi)),
                ("multicritical.xtol", repr(mc.xtol)),
                ("multicritical.floor", repr(self.delta_e_floor)),
            ]
        for ax in self.grid_axes:
            out += [
                (f"grid.{ax.name}.start", repr(ax.start)),
                (f"grid.{ax.name}.stop", repr(ax.stop)),
                (f"grid.{ax.name}.step", repr(ax.step)),
            ]
        return sorted(out)


_SCHEMA = {
    "model": {"J": float, "eps": float, "g": float, "omega_c": float, "D": float},
    "run": {
        "mode": str,
        "sizes": str,
        "profile": str,
        "output_dir": str,
        "rng_seed": int,
        "jobs": int,
    },
    "sweep": {
        "variable": str,
        "start": float,
        "stop": float,
        "step": float,
        "fine_step": float,
        "directions": str,
    },
    "solver": {
        "cutoff": float,
        "energy_tol": float,
        "max_bond_dim": int,
        "max_sweeps": int,
        "lanczos_tol": float,
        "noise": float,
    },
    "fixed_point": {
        "tol": float,
        "max_iters": int,
        "anderson_window": int,
        "damping": float,
        "seed_floor": float,
    },
    "multicritical": {"bracket_lo": float, "bracket_hi": float, "xtol": float, "floor": float},
    "landscape": {"max": float, "points": int, "m_s_policy": str},
}
_GRID_AXES = ("g", "J", "eps")


def _parse_section(parser, name, schema) -> dict:
    if name not in parser:
        return {}
    out = {}
    for key, raw in parser[name].items():
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' in section [{name}]")
        typ = schema[key]
        try:
            out[key] = typ(raw) if typ is not str else raw.strip()
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}.{key}: {raw!r}") from exc
    return out


def load_config(path: str, profile_override: str | None = None) -> RunConfig:
    """Parse and validate a run configuration file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keys are case-sensitive (J vs j)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    for section in parser.sections():
        if section in _SCHEMA:
            continue
        if section.startswith("grid."):
            axis = section[len("grid."):]
            if axis not in _GRID_AXES:
                raise ConfigError(f"unknown grid axis [{section}] (use g, J or eps)")
            continue
        raise ConfigError(f"unknown section [{section}]")

    model_kw = _parse_section(parser, "model", _SCHEMA["model"])
    for required in ("J", "eps", "g"):
        if required not in model_kw:
            raise ConfigError(f"missing model.{required}")
    model = ModelParams(**model_kw)

    run = _parse_section(parser, "run", _SCHEMA["run"])
    profile = profile_override or run.get("profile", "default")
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r} (use default or tight)")
    mode = run.get("mode", "ferro")
    if mode not in ("ferro", "af"):
        raise ConfigError(f"unknown mode {mode!r} (use ferro or af)")
    sizes_raw = run.get("sizes")
    if sizes_raw is None:
        sizes = (100, 101) if mode == "ferro" else (100, 102)
    else:
        try:
            ns, nl = (int(t) for t in sizes_raw.split(","))
        except ValueError as exc:
            raise ConfigError(f"run.sizes must be 'N_small, N_large', got {sizes_raw!r}") from exc
        sizes = (ns, nl)
    if mode == "ferro" and sizes[1] - sizes[0] != 1:
        raise ConfigError(f"ferro mode needs sizes (N, N+1), got {sizes}")
    if mode == "af" and (sizes[1] - sizes[0] != 2 or sizes[0] % 2 or sizes[1] % 2):
        raise ConfigError(f"af mode needs even sizes (N, N+2), got {sizes}")

    solver = PROFILES[profile]
    overrides = _parse_section(parser, "solver", _SCHEMA["solver"])
    if overrides:
        solver = solver.with_(**overrides)
    fixed_point = FIXED_POINT_PROFILES[profile]
    overrides = _parse_section(parser, "fixed_point", _SCHEMA["fixed_point"])
    if overrides:
        fixed_point = fixed_point.with_(**overrides)

    sweep = None
    if "sweep" in parser:
        sw = _parse_section(parser, "sweep", _SCHEMA["sweep"])
        for required in ("variable", "start", "stop", "step"):
            if required not in sw:
                raise ConfigError(f"missing sweep.{required}")
        if sw["variable"] not in ("g", "eps"):
            raise ConfigError(f"sweep.variable must be g or eps, got {sw['variable']!r}")
        if sw["step"] <= 0:
            raise ConfigError("sweep.step must be positive")
        if sw["start"] == sw["stop"]:
            raise ConfigError("sweep.start and sweep.stop must differ")
        directions = sw.get("directions", "both")
        if directions not in ("up", "down", "both"):
            raise ConfigError(f"sweep.directions must be up, down or both, got {directions!r}")
        sweep = SweepSpec(
            variable=sw["variable"],
            start=sw["start"],
            stop=sw["stop"],
            step=sw["step"],
            fine_step=sw.get("fine_step", sw["step"] / 10.0),
            directions=directions,
        )
        if sweep.fine_step <= 0:
            raise ConfigError("sweep.fine_step must be positive")

    multicritical = None
    if "multicritical" in parser:
        mc = _parse_section(parser, "multicritical", _SCHEMA["multicritical"])
        for required in ("bracket_lo", "bracket_hi"):
            if required not in mc:
                raise ConfigError(f"missing multicritical.{required}")
        if not mc["bracket_lo"] < mc["bracket_hi"]:
            raise ConfigError("multicritical bracket must satisfy bracket_lo < bracket_hi")
        multicritical = MulticriticalSpec(
            bracket_lo=mc["bracket_lo"],
            bracket_hi=mc["bracket_hi"],
            xtol=mc.get("xtol", 1e-3),
            floor=mc.get("floor"),
        )

    axes = []
    for section in parser.sections():
        if section.startswith("grid."):
            ax = _parse_section(
                parser, section, {"start": float, "stop": float, "step": float}
            )
            for required in ("start", "stop", "step"):
                if required not in ax:
                    raise ConfigError(f"missing {section}.{required}")
            if ax["step"] <= 0:
                raise ConfigError(f"{section}.step must be positive")
            axes.append(GridAxis(section[len("grid."):], ax["start"], ax["stop"], ax["step"]))

    landscape = LandscapeSpec()
    if "landscape" in parser:
        ls = _parse_section(parser, "landscape", _SCHEMA["landscape"])
        landscape = LandscapeSpec(
            max=ls.get("max", 0.5),
            points=ls.get("points", 41),
            m_s_policy=ls.get("m_s_policy", "pinned_zero"),
        )
        if not 0 < landscape.max <= 0.5:
            raise ConfigError("landscape.max must lie in (0, 1/2]")
        if landscape.points < 3 or landscape.points % 2 == 0:
            raise ConfigError("landscape.points must be odd and >= 3 (symmetric grid)")
        if landscape.m_s_policy not in ("pinned_zero", "inner_converged"):
            raise ConfigError(f"unknown landscape.m_s_policy {landscape.m_s_policy!r}")

    return RunConfig(
        model=model,
        mode=mode,
        sizes=sizes,
        profile=profile,
        output_dir=run.get("output_dir", "out"),
        rng_seed=run.get("rng_seed", 0),
        jobs=run.get("jobs", 1),
        sweep=sweep,
        solver=solver,
        fixed_point=fixed_point,
        multicritical=multicritical,
        grid_axes=tuple(axes),
        landscape=landscape,
    )
