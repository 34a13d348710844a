"""Run configuration: an INI file with sections [grid] [material] [solver] [radial] [reconstruct] [output].

Coefficients are given either as a number (constant) or as a kind with
prefixed parameters, e.g.::

    [material]
    V = periodic
    V_value = 0.4
    V_amplitude = 0.1
    V_period = 1
    Gamma = 1

Unknown sections and keys are rejected so that typos do not silently fall
back to defaults.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .grid import GridSpec
from .material import COEFFICIENT_KINDS, Coefficient, MaterialParams
from .radial import RadialProblem
from .solver import InnerSolveConfig, SolverConfig

BUNDLED = ("kerr_constant.cfg", "kerr_periodicV.cfg")


class ConfigError(ValueError):
    def __init__(self, message: str, path=None, section=None, key=None, line=None):
        where = []
        if path:
            where.append(str(path) + (f":{line}" if line else ""))
        if section:
            where.append(f"[{section}]" + (f" {key}" if key else ""))
        super().__init__((" ".join(where) + ": " if where else "") + message)
        self.section = section
        self.key = key
        self.line = line


@dataclass
class SolverSection:
    tolerance: float = 1e-6
    max_iterations: int = 2000
    inner_tolerance: float = 1e-10
    inner_max_iterations: int = 2000
    step_rule: str = "bb"
    armijo_c1: float = 1e-4
    max_backtracks: int = 40
    stall_iterations: int = 30
    dealias_factor: Optional[float] = None
    seed: int = 0
    initial: str = "gaussian"  # gaussian | random | radial | file
    initial_path: Optional[str] = None
    polarization: tuple = (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    width: Optional[float] = None

    def solver_config(self) -> SolverConfig:
        inner = InnerSolveConfig(self.inner_tolerance, self.inner_max_iterations, self.step_rule)
        return SolverConfig(inner=inner, tolerance=self.tolerance, max_iterations=self.max_iterations,
                            armijo_c1=self.armijo_c1, max_backtracks=self.max_backtracks,
                            stall_iterations=self.stall_iterations, dealias_factor=self.dealias_factor)


@dataclass
class RadialSection:
    r_max: Optional[float] = None
    n_r: int = 480


@dataclass
class ReconstructSection:
    t: tuple = (0.0,)
    z: tuple = (0.0, 0.25, 0.5, 0.75)
    a: float = 0.0
    n_z: int = 16
    time_samples: int = 16


@dataclass
class OutputSection:
    summary: str = "summary.json"
    solution: str = "solution.maxw6"
    diagnostics: str = "diagnostics.csv"
    vtk: str = "fields.vtk"
    fields_csv: str = ""
    radial_csv: str = "radial.csv"


@dataclass
class RunConfig:
    side_length: float = 24.0
    n_points: int = 128
    k: float = 1.0
    omega: float = 1.0
    p: float = 4.0
    V: Coefficient = field(default_factory=lambda: Coefficient("constant", 0.5))
    Gamma: Coefficient = field(default_factory=lambda: Coefficient("constant", 1.0))
    V0: Optional[float] = None
    gamma_AR: Optional[float] = None
    p_min: float = 3.0
    solver: SolverSection = field(default_factory=SolverSection)
    radial: RadialSection = field(default_factory=RadialSection)
    reconstruct: ReconstructSection = field(default_factory=ReconstructSection)
    output: OutputSection = field(default_factory=OutputSection)
    source: Optional[str] = None

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.side_length, self.n_points)

    def material(self, validate: bool = True) -> MaterialParams:
        return MaterialParams.from_coefficients(self.grid, self.k, self.omega, self.p, self.V, self.Gamma,
                                                V0=self.V0, gamma_AR=self.gamma_AR, p_min=self.p_min,
                                                validate=validate)

    def radial_problem(self) -> RadialProblem:
        if self.V.kind != "constant" or self.Gamma.kind != "constant":
            raise ConfigError("the radial oracle needs constant V and Gamma", self.source, "material")
        return RadialProblem(self.k, self.omega, self.V.value, self.Gamma.value, self.p,
                             r_max=self.radial.r_max, n_r=self.radial.n_r)

    def describe(self) -> dict:
        def coef(c: Coefficient):
            d = {"kind": c.kind, "value": c.value}
            if c.kind in ("gaussian", "periodic"):
                d["amplitude"] = c.amplitude
            if c.kind == "gaussian":
                d["width"] = c.width
            if c.kind == "periodic":
                d["period"] = c.period
            if c.kind == "raster":
                d["path"] = Path(c.path).name
            return d

        return {
            "grid": {"side_length": self.side_length, "n_points": self.n_points},
            "material": {"k": self.k, "omega": self.omega, "p": self.p, "V": coef(self.V),
                         "Gamma": coef(self.Gamma), "V0": self.V0 if self.V0 is not None else self.V.value},
            "solver": {"tolerance": self.solver.tolerance, "inner_tolerance": self.solver.inner_tolerance,
                       "max_iterations": self.solver.max_iterations, "seed": self.solver.seed,
                       "initial": self.solver.initial},
        }


_SCHEMA = {
    "grid": {"side_length": float, "n_points": int},
    "material": {"k": float, "omega": float, "p": float, "V0": float, "gamma_AR": float, "p_min": float},
    "solver": {"tolerance": float, "max_iterations": int, "inner_tolerance": float,
               "inner_max_iterations": int, "step_rule": str, "armijo_c1": float, "max_backtracks": int,
               "stall_iterations": int, "dealias_factor": float, "seed": int, "initial": str,
               "initial_path": str, "polarization": "floats", "width": float},
    "radial": {"r_max": float, "n_r": int},
    "reconstruct": {"t": "floats", "z": "floats", "a": float, "n_z": int, "time_samples": int},
    "output": {k: str for k in ("summary", "solution", "diagnostics", "vtk", "fields_csv", "radial_csv")},
}
_COEF_KEYS = ("value", "amplitude", "width", "period", "path")


def _line_of(text: str, section: str, key: Optional[str]) -> Optional[int]:
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return i
        elif current == section and key is not None:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return i
    return None


def resolve_config_path(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    if p.name in BUNDLED and str(p) == p.name:
        return Path(str(resources.files("nlmaxwell") / "configs" / p.name))
    raise FileNotFoundError(f"config file not found: {path}")


def load_config(path=None) -> RunConfig:
    """Parse a config file; ``None`` gives the defaults (the constant Kerr configuration)."""
    if path is None:
        return RunConfig()
    path = resolve_config_path(path)
    text = path.read_text()
    return parse_config(text, path)


def parse_config(text: str, path=None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], path, line=line) from None
    base = Path(path).parent if path else Path(".")
    cfg = RunConfig(source=str(path) if path else None)

    def fail(msg, section, key=None):
        raise ConfigError(msg, path, section, key, _line_of(text, section, key))

    def convert(section, key, raw, kind):
        try:
            if kind == "floats":
                return tuple(float(x) for x in raw.replace(",", " ").split())
            return kind(raw)
        except ValueError:
            fail(f"invalid value {raw!r}", section, key)

    coef_raw = {"V": {}, "Gamma": {}}
    for section in cp.sections():
        if section not in _SCHEMA:
            fail(f"unknown section; expected one of {sorted(_SCHEMA)}", section)
        for key, raw in cp.items(section):
            if section == "material":
                head, _, tail = key.partition("_")
                if key in ("V", "Gamma"):
                    coef_raw[key]["kind"] = raw.strip()
                    continue
                if head in coef_raw and tail in _COEF_KEYS and key not in _SCHEMA["material"]:
                    coef_raw[head][tail] = raw.strip()
                    continue
            if key not in _SCHEMA[section]:
                fail("unknown key", section, key)
            val = convert(section, key, raw.strip(), _SCHEMA[section][key])
            if section in ("grid", "material"):
                setattr(cfg, key, val)
            else:
                target = getattr(cfg, section)
                setattr(target, key, val)

    for name, params in coef_raw.items():
        if not params:
            continue
        kind = params.pop("kind", "constant")
        try:
            value = float(kind)
            kind = "constant"
            params.setdefault("value", value)
        except ValueError:
            pass
        if kind not in COEFFICIENT_KINDS:
            fail(f"unknown coefficient kind {kind!r}; expected a number or one of {COEFFICIENT_KINDS}",
                 "material", name)
        kw = {}
        for key, raw in params.items():
            if key == "path":
                kw["path"] = str((base / raw).resolve()) if not Path(raw).is_absolute() else raw
            else:
                kw[key] = convert("material", f"{name}_{key}", raw, float)
        try:
            setattr(cfg, name, Coefficient(kind, **kw))
        except ValueError as exc:
            fail(str(exc), "material", name)

    s = cfg.solver
    if s.initial not in ("gaussian", "random", "radial", "file"):
        fail("initial must be gaussian, random, radial or file", "solver", "initial")
    if s.initial == "file":
        if not s.initial_path:
            fail("initial = file needs initial_path", "solver", "initial_path")
        s.initial_path = str((base / s.initial_path).resolve())
    if len(s.polarization) != 6:
        fail("polarization needs six numbers", "solver", "polarization")
    for key, check, msg in (
        ("tolerance", s.tolerance > 0, "must be > 0"),
        ("inner_tolerance", s.inner_tolerance > 0, "must be > 0"),
        ("max_iterations", s.max_iterations >= 0, "must be >= 0"),
        ("inner_max_iterations", s.inner_max_iterations >= 1, "must be >= 1"),
        ("step_rule", s.step_rule in ("bb", "fixed"), "must be bb or fixed"),
    ):
        if not check:
            fail(msg, "solver", key)
    try:
        GridSpec(cfg.side_length, cfg.n_points)
    except ValueError as exc:
        fail(str(exc), "grid")
    if cfg.k == 0:
        fail("wave number k must be nonzero (k != 0 is required for the operator L)", "material", "k")
    return cfg
