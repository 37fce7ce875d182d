"""Experiment configuration files (YAML).

A configuration fixes one protocol run: the target Fock number, drive,
cavity regime, the sweep axis and its values, bath occupancies, truncations,
the initial state, and integrator settings. Validation errors point at the
offending key's line and column.
"""

import hashlib
import json
import typing
from dataclasses import asdict, dataclass, field, fields
from importlib import resources

import numpy as np
import yaml

AXES = ("gamma_over_kappa_eff", "gamma_over_kappa")
REGIMES = ("bad", "good", "explicit")
SOLVERS = ("effective", "full")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Regime:
    mode: str = "bad"
    kappa: float | None = None
    chi_ref_multiple: float | None = None


@dataclass(frozen=True)
class Sweep:
    axis: str = "gamma_over_kappa_eff"
    start: float = 1e-6
    stop: float = 1e-2
    count: int = 13

    def values(self):
        return np.logspace(np.log10(self.start), np.log10(self.stop), self.count)


@dataclass(frozen=True)
class Truncation:
    N_c: int = 4
    N_m: int | None = None  # None: the |0>..|M> block


@dataclass(frozen=True)
class Integrator:
    rtol: float = 1e-8
    atol: float = 1e-10
    t_final: float | None = None
    samples: int = 101


@dataclass(frozen=True)
class WignerGrid:
    points: int = 121
    extent: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    target: int
    name: str = "run"
    sideband: int = 1
    drive: float = 0.02
    regime: Regime = field(default_factory=Regime)
    solver: str | None = None
    sweep: Sweep = field(default_factory=Sweep)
    point: float = 1e-4
    nbar_m: float = 0.0
    nbar_c: float = 0.0
    truncation: Truncation = field(default_factory=Truncation)
    initial: str = "thermal"
    integrator: Integrator = field(default_factory=Integrator)
    wigner: WignerGrid = field(default_factory=WignerGrid)
    output: str = "results"
    seed: int = 0

    @property
    def solver_name(self):
        if self.solver is not None:
            return self.solver
        return "full" if self.regime.mode == "good" else "effective"

    def to_dict(self):
        return asdict(self)

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def with_overrides(self, overrides):
        data = self.to_dict()
        for item in overrides:
            key, sep, raw = item.partition("=")
            if not sep:
                raise ConfigError(f"override {item!r} is not of the form key=value")
            node, parts = data, key.strip().split(".")
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    raise ConfigError(f"override key {key!r} does not name a section")
                node = node[part]
            if parts[-1] not in node:
                raise ConfigError(f"override key {key!r} is unknown")
            node[parts[-1]] = yaml.safe_load(raw)
        return from_dict(data)


# -- parsing --------------------------------------------------------------------

_SECTIONS = {
    "regime": Regime,
    "sweep": Sweep,
    "truncation": Truncation,
    "integrator": Integrator,
    "wigner": WignerGrid,
}


def _marks(node, prefix=(), out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (k.value,)
            out[path] = k.start_mark
            _marks(v, path, out)
    return out


def _where(marks, path):
    mark = marks.get(tuple(path))
    return f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""


def _coerce(value, typ, path, marks):
    # PyYAML reads 1e-6 as a string; numbers are accepted in any float notation
    name = ".".join(path)
    args = typing.get_args(typ)
    if value is None:
        if type(None) in args:
            return None
        raise ConfigError(f"{name} must not be empty{_where(marks, path)}")
    base = next((a for a in args if a is not type(None)), typ).__name__
    try:
        if base == "int":
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        if base == "float":
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if base == "str":
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be {base}, got {value!r}{_where(marks, path)}") from None
    return value


def _build(cls, data, path, marks):
    if not isinstance(data, dict):
        raise ConfigError(f"{'.'.join(path) or 'config'} must be a mapping{_where(marks, path)}")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"unknown key {'.'.join(path + (key,))!r}{_where(marks, path + (key,))}")
    kwargs = {}
    for key, value in data.items():
        sub = path + (key,)
        if key in _SECTIONS and cls is ExperimentConfig:
            kwargs[key] = _build(_SECTIONS[key], value or {}, sub, marks)
        else:
            kwargs[key] = _coerce(value, known[key].type, sub, marks)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{'.'.join(path) or 'config'}: {exc}") from None


def _validate(cfg, marks):
    def fail(msg, *path):
        raise ConfigError(msg + _where(marks, path))

    if not 1 <= cfg.target <= 40:
        fail("target must lie in 1..40", "target")
    if cfg.sideband != 1:
        fail("only the s = 1 sideband is supported", "sideband")
    if not cfg.drive > 0:
        fail("drive must be positive", "drive")
    r = cfg.regime
    if r.mode not in REGIMES:
        fail(f"regime.mode must be one of {REGIMES}", "regime", "mode")
    if r.mode == "explicit" and (r.kappa is None) == (r.chi_ref_multiple is None):
        fail("explicit regime needs exactly one of kappa, chi_ref_multiple", "regime")
    if cfg.solver is not None and cfg.solver not in SOLVERS:
        fail(f"solver must be one of {SOLVERS}", "solver")
    s = cfg.sweep
    if s.axis not in AXES:
        fail(f"sweep.axis must be one of {AXES}", "sweep", "axis")
    if not (0 < s.start < s.stop) or s.count < 2:
        fail("sweep values must be positive and increasing (start < stop, count >= 2)", "sweep")
    if not cfg.point > 0:
        fail("point must be positive", "point")
    if cfg.nbar_m < 0 or cfg.nbar_c < 0:
        fail("bath occupancies must be nonnegative", "nbar_m")
    t = cfg.truncation
    if t.N_c < 2:
        fail("truncation.N_c must be >= 2", "truncation", "N_c")
    if t.N_m is not None and t.N_m < cfg.target + 1:
        fail("truncation.N_m must exceed the target", "truncation", "N_m")
    try:
        parse_initial(cfg.initial)
    except ValueError as exc:
        fail(str(exc), "initial")
    if cfg.integrator.rtol <= 0 or cfg.integrator.atol <= 0:
        fail("integrator tolerances must be positive", "integrator")
    if cfg.wigner.points < 5:
        fail("wigner.points must be >= 5", "wigner", "points")
    return cfg


def parse_initial(text):
    """'thermal' | 'vacuum' | 'fock:k' | 'coherent:alpha' -> (kind, value)."""
    kind, _, arg = str(text).partition(":")
    if kind in ("thermal", "vacuum") and not arg:
        return kind, None
    if kind == "fock":
        try:
            return kind, int(arg)
        except ValueError:
            pass
    if kind == "coherent":
        try:
            return kind, complex(arg.replace(" ", ""))
        except ValueError:
            pass
    raise ValueError(f"unknown initial state {text!r}")


def from_dict(data, marks=None):
    marks = marks or {}
    return _validate(_build(ExperimentConfig, data, (), marks), marks)


def loads(text):
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    if data is None:
        raise ConfigError("empty configuration")
    return from_dict(data, _marks(node))


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def example_names():
    root = resources.files("optofock") / "examples"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_example(name):
    return loads((resources.files("optofock") / "examples" / f"{name}.yaml").read_text())


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Integrator",
    "Regime",
    "Sweep",
    "Truncation",
    "WignerGrid",
    "example_names",
    "from_dict",
    "load",
    "load_example",
    "loads",
    "parse_initial",
]
