"""JSON experiment configurations.

A configuration is parsed in three passes: JSON syntax, a strict JSON schema
(unknown keys are errors) and semantic checks such as matrix shapes. The
result is an immutable :class:`ExperimentConfig` with every default filled
in; :meth:`ExperimentConfig.to_dict` gives the echo block, which parses back
to an equal object.
"""
import json
import math
from dataclasses import asdict, dataclass, field as dc_field, fields, replace
from typing import Optional

import jsonschema
import numpy as np

from . import dynamics
from .exceptions import ValidationError
from .experiments import RunConfig

__all__ = ["ConfigError", "ExperimentConfig", "FieldSpec", "CouplingSpecConfig", "SystemConfig",
           "RunSettings", "SearchSettings", "AnalysisSettings", "OutputSettings", "COMMANDS",
           "SCHEMA", "parse_config", "build_system", "build_run_config"]

COMMANDS = ("analyze", "simulate", "critical", "sweep", "persistence")
FIELDS = ("lorenz", "nonautonomous_linear", "linear", "linear_decay")
COUPLINGS = ("linear", "tanh", "scalar", "jordan")


class ConfigError(ValidationError):
    """Invalid configuration; ``path`` is a JSON pointer when known."""

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_matrix = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": _num}}
_pair = {"type": "array", "minItems": 2, "maxItems": 2, "items": _num}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


SCHEMA = _obj({
    "command": {"enum": list(COMMANDS)},
    "system": _obj({
        "field": _obj({
            "name": {"enum": list(FIELDS)},
            "sigma": _num, "r": _num, "b": _num,
            "omega": _num,
            "A": _matrix,
            "eps": _num, "dim": {"type": "integer", "minimum": 1},
        }, ["name"]),
        "W": _matrix,
        "coupling": _obj({
            "name": {"enum": list(COUPLINGS)},
            "Gamma": _matrix,
            "beta": _num,
            "dim": {"type": "integer", "minimum": 1},
        }, ["name"]),
        "alpha": _nonneg,
        "perturbation": _obj({
            "kind": {"enum": ["constant"]},
            "eps0": _nonneg,
            "seed": {"type": "integer"},
        }, ["eps0"]),
        "laplacian_jordan": _obj({"O": _matrix, "J": _matrix}, ["O", "J"]),
        "coupling_jordan": _obj({"Q": _matrix, "J": _matrix}, ["Q", "J"]),
    }, ["W", "coupling"]),
    "run": _obj({
        "t0": _num, "t_burn": _num, "t_end": _num, "dt": _pos,
        "method": {"enum": sorted(dynamics.TABLEAUS)},
        "delta": _pos, "seed": {"type": "integer"},
        "sync_tol": _pos, "rate_min": _nonneg,
        "rate_fit_window": {"anyOf": [_pair, {"type": "null"}]},
        "ic_mode": {"enum": ["auto", "ball", "antipodal"]},
        "x_init": {"anyOf": [{"type": "array", "items": _num}, {"type": "null"}]},
        "divergence_guard": _pos, "sample_dt": _pos,
        "early_stop": {"type": "boolean"},
        "desync_factor": {"anyOf": [_pos, {"type": "null"}]},
    }),
    "search": _obj({
        "bracket": _pair, "tol": _pos, "rel_tol": _nonneg,
        "scan_points": {"type": "integer", "minimum": 0},
        "max_doublings": {"type": "integer", "minimum": 0},
        "beta_grid": {"anyOf": [{"type": "array", "items": _pos}, {"type": "null"}]},
        "fit_range": {"anyOf": [_pair, {"type": "null"}]},
    }),
    "analysis": _obj({
        "varrho": {"anyOf": [_pos, {"type": "null"}]},
        "c": _pos, "K": _pos,
        "jordan_eps_ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "eps_L": _pos,
        "tail_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    }),
    "output": _obj({
        "dir": {"type": "string"},
        "csv_form": {"enum": ["wide", "long"]},
    }),
})


def _tup(M):
    return tuple(tuple(float(v) for v in row) for row in M)


def _lists(v):
    if isinstance(v, tuple):
        return [_lists(x) for x in v]
    return v


@dataclass(frozen=True)
class FieldSpec:
    name: str
    params: tuple = ()  # sorted (key, value) pairs

    def get(self, key, default=None):
        return dict(self.params).get(key, default)


@dataclass(frozen=True)
class CouplingSpecConfig:
    name: str
    Gamma: Optional[tuple] = None
    beta: Optional[float] = None


@dataclass(frozen=True)
class SystemConfig:
    field: Optional[FieldSpec]
    W: tuple
    coupling: CouplingSpecConfig
    alpha: float = 0.0
    eps0: Optional[float] = None
    perturbation_seed: int = 0
    laplacian_jordan: Optional[tuple] = None
    coupling_jordan: Optional[tuple] = None

    @property
    def n(self):
        return len(self.W)

    @property
    def m(self):
        return len(self.coupling.Gamma)


@dataclass(frozen=True)
class RunSettings:
    t0: float = 0.0
    t_burn: float = 0.0
    t_end: float = 50.0
    dt: float = 1e-3
    method: str = "rk6"
    delta: float = 1e-3
    seed: int = 0
    sync_tol: float = 1e-6
    rate_min: float = 0.05
    rate_fit_window: Optional[tuple] = None
    ic_mode: str = "auto"
    x_init: Optional[tuple] = None
    divergence_guard: float = 1e6
    sample_dt: float = 1e-2
    early_stop: bool = True
    desync_factor: Optional[float] = None


@dataclass(frozen=True)
class SearchSettings:
    bracket: tuple = (0.0, 10.0)
    tol: float = 1e-2
    rel_tol: float = 0.0
    scan_points: int = 0
    max_doublings: int = 10
    beta_grid: Optional[tuple] = None
    fit_range: Optional[tuple] = None


@dataclass(frozen=True)
class AnalysisSettings:
    varrho: Optional[float] = None
    c: float = 1.0
    K: float = 1.0
    jordan_eps_ratio: float = 0.5
    eps_L: float = 1e-2
    tail_fraction: float = 0.5


@dataclass(frozen=True)
class OutputSettings:
    dir: str = "."
    csv_form: str = "wide"


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration with all defaults filled in."""

    command: str
    system: SystemConfig
    run: RunSettings = dc_field(default_factory=RunSettings)
    search: SearchSettings = dc_field(default_factory=SearchSettings)
    analysis: AnalysisSettings = dc_field(default_factory=AnalysisSettings)
    output: OutputSettings = dc_field(default_factory=OutputSettings)

    def to_dict(self):
        """Echo block: plain JSON types, every effective value spelled out."""
        s = self.system
        if s.coupling.beta is None:
            coupling = {"name": s.coupling.name, "Gamma": _lists(s.coupling.Gamma)}
        else:
            coupling = {"name": s.coupling.name, "beta": s.coupling.beta, "dim": s.m}
        system = {"W": _lists(s.W), "coupling": coupling, "alpha": s.alpha}
        if s.field is not None:
            system["field"] = {"name": s.field.name, **{k: _lists(v) for k, v in s.field.params}}
        if s.eps0 is not None:
            system["perturbation"] = {"kind": "constant", "eps0": s.eps0, "seed": s.perturbation_seed}
        if s.laplacian_jordan is not None:
            system["laplacian_jordan"] = {"O": _lists(s.laplacian_jordan[0]),
                                          "J": _lists(s.laplacian_jordan[1])}
        if s.coupling_jordan is not None:
            system["coupling_jordan"] = {"Q": _lists(s.coupling_jordan[0]),
                                         "J": _lists(s.coupling_jordan[1])}
        return {"command": self.command, "system": system,
                "run": {k: _lists(v) for k, v in asdict(self.run).items()},
                "search": {k: _lists(v) for k, v in asdict(self.search).items()},
                "analysis": asdict(self.analysis), "output": asdict(self.output)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _pointer(path):
    return "/" + "/".join(str(p) for p in path)


def _square(M, path, n=None):
    rows = {len(r) for r in M}
    if len(rows) != 1:
        raise ConfigError("rows have different lengths", path)
    cols = rows.pop()
    if cols != len(M):
        raise ConfigError(f"matrix is {len(M)}x{cols}, expected a square matrix", path)
    if n is not None and len(M) != n:
        raise ConfigError(f"matrix is {len(M)}x{cols} but the system dimension is {n}", path)
    return _tup(M)


def _field_spec(raw, m_hint):
    name = raw["name"]
    p = dict(raw)
    p.pop("name")
    if name == "lorenz":
        allowed = {"sigma": 10.0, "r": 28.0, "b": 8.0 / 3.0}
    elif name == "nonautonomous_linear":
        allowed = {"omega": 6.0}
    elif name == "linear":
        if "A" not in p:
            raise ConfigError("linear field needs 'A'", "/system/field")
        allowed = {"A": None}
    else:
        allowed = {"eps": 0.1, "dim": m_hint or 1}
    extra = set(p) - set(allowed)
    if extra:
        raise ConfigError(f"field {name!r} does not take {sorted(extra)}", "/system/field")
    params = {k: p.get(k, v) for k, v in allowed.items()}
    if name == "linear":
        params["A"] = _square(params["A"], "/system/field/A")
    for k, v in params.items():
        if k not in ("A", "dim"):
            params[k] = float(v)
    return FieldSpec(name, tuple(sorted(params.items())))


def _field_dim(spec):
    if spec.name == "lorenz":
        return 3
    if spec.name == "nonautonomous_linear":
        return 2
    if spec.name == "linear":
        return len(spec.get("A"))
    return int(spec.get("dim"))


def _defaults_for(field):
    """dt and burn-in defaults per field type."""
    if field is not None and field.name == "lorenz":
        return {"dt": 1e-4, "t_burn": 20.0}
    return {"dt": 1e-3, "t_burn": 0.0}


def parse_config(text, command=None):
    """Parse and validate a JSON configuration.

    Parameters
    ----------
    text : str
        UTF-8 JSON document.
    command : str, optional
        Command from the command line; must agree with the document's
        ``command`` key when both are present.

    Raises
    ------
    ConfigError
        With line and column for syntax errors, and the JSON-pointer path of
        the offending value for schema and shape errors.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"schema violation: {err.message}", _pointer(err.absolute_path))

    cmd = raw.get("command", command)
    if cmd is None:
        raise ConfigError("no command given", "/command")
    if command is not None and cmd != command:
        raise ConfigError(f"config is for {cmd!r} but command line says {command!r}", "/command")

    sysraw = raw["system"]
    W = _square(sysraw["W"], "/system/W")
    n = len(W)
    craw = sysraw["coupling"]
    cname = craw["name"]
    m_field = None
    field = None
    if "field" in sysraw:
        gam = craw.get("Gamma")
        hint = len(gam) if gam else craw.get("dim")
        field = _field_spec(sysraw["field"], hint)
        m_field = _field_dim(field)
    elif cmd != "analyze":
        raise ConfigError(f"command {cmd!r} needs a field", "/system/field")

    if cname in ("linear", "tanh"):
        if "Gamma" not in craw or "beta" in craw:
            raise ConfigError(f"coupling {cname!r} takes 'Gamma' only", "/system/coupling")
        Gamma = _square(craw["Gamma"], "/system/coupling/Gamma")
        beta = None
    else:
        if "beta" not in craw or "Gamma" in craw:
            raise ConfigError(f"coupling {cname!r} takes 'beta' (and optionally 'dim')", "/system/coupling")
        beta = float(craw["beta"])
        m = craw.get("dim", m_field)
        if m is None:
            raise ConfigError("coupling dimension unknown: give 'dim' or a field", "/system/coupling")
        Gamma = _tup(dynamics.jordan_coupling(beta, m).Gamma if cname == "jordan"
                     else dynamics.scalar_coupling(beta, m).Gamma)
    m = len(Gamma)
    if m_field is not None and m_field != m:
        raise ConfigError(f"field {field.name!r} has dimension {m_field} but Gamma is {m}x{m}",
                          "/system/coupling")

    pert = sysraw.get("perturbation")
    lj = sysraw.get("laplacian_jordan")
    if lj is not None:
        lj = (_square(lj["O"], "/system/laplacian_jordan/O", n), _square(lj["J"], "/system/laplacian_jordan/J", n))
    cj = sysraw.get("coupling_jordan")
    if cj is not None:
        cj = (_square(cj["Q"], "/system/coupling_jordan/Q", m), _square(cj["J"], "/system/coupling_jordan/J", m))
    system = SystemConfig(field=field, W=W, coupling=CouplingSpecConfig(cname, Gamma, beta),
                          alpha=float(sysraw.get("alpha", 0.0)),
                          eps0=None if pert is None else float(pert["eps0"]),
                          perturbation_seed=0 if pert is None else int(pert.get("seed", 0)),
                          laplacian_jordan=lj, coupling_jordan=cj)

    run_raw = dict(_defaults_for(field))
    run_raw.update(raw.get("run", {}))
    run = _settings(RunSettings, run_raw, {"rate_fit_window", "x_init"})
    if run.x_init is not None and len(run.x_init) != m:
        raise ConfigError(f"x_init has length {len(run.x_init)} but the field dimension is {m}",
                          "/run/x_init")
    if not run.t0 <= run.t_burn < run.t_end:
        raise ConfigError(f"need t0 <= t_burn < t_end, got {run.t0}, {run.t_burn}, {run.t_end}", "/run")
    if run.ic_mode == "antipodal" and n != 2:
        raise ConfigError(f"antipodal initial conditions need 2 nodes, W has {n}", "/run/ic_mode")
    search = _settings(SearchSettings, raw.get("search", {}), {"bracket", "beta_grid", "fit_range"})
    lo, hi = search.bracket
    if not 0 <= lo < hi:
        raise ConfigError(f"bracket must satisfy 0 <= lo < hi, got {list(search.bracket)}", "/search/bracket")
    if cmd == "sweep":
        if not search.beta_grid:
            raise ConfigError("sweep needs a non-empty beta_grid", "/search/beta_grid")
        if cname not in ("scalar", "jordan"):
            raise ConfigError("sweep needs a 'scalar' or 'jordan' coupling", "/system/coupling/name")
        if any(b2 <= b1 for b1, b2 in zip(search.beta_grid, search.beta_grid[1:])):
            raise ConfigError("beta_grid must be increasing", "/search/beta_grid")
    if cmd == "persistence" and n < 2:
        raise ConfigError("persistence needs at least two nodes", "/system/W")
    analysis = _settings(AnalysisSettings, raw.get("analysis", {}), set())
    output = _settings(OutputSettings, raw.get("output", {}), set())
    return ExperimentConfig(command=cmd, system=system, run=run, search=search,
                            analysis=analysis, output=output)


def _settings(cls, raw, tuple_keys):
    kw = {}
    for f in fields(cls):
        if f.name not in raw:
            continue
        v = raw[f.name]
        if f.name in tuple_keys and v is not None:
            v = tuple(float(x) for x in v)
        elif isinstance(v, float) or (isinstance(v, int) and not isinstance(v, bool)
                                       and isinstance(f.default, float)):
            v = float(v)
        kw[f.name] = v
    return cls(**kw)


def build_field(spec):
    p = dict(spec.params)
    if spec.name == "lorenz":
        return dynamics.lorenz(p["sigma"], p["r"], p["b"])
    if spec.name == "nonautonomous_linear":
        return dynamics.nonautonomous_linear(p["omega"])[0]
    if spec.name == "linear":
        return dynamics.linear_field(np.array(p["A"]))
    return dynamics.linear_decay(p["eps"], int(p["dim"]))


def build_coupling(c):
    G = np.array(c.Gamma)
    if c.name == "tanh":
        return dynamics.tanh_coupling(G)
    return dynamics.linear_coupling(G, name=c.name)


def build_system(cfg):
    """``NetworkSystem`` described by ``cfg.system`` (needs a field)."""
    s = cfg.system
    if s.field is None:
        raise ConfigError("no field given", "/system/field")
    bias = None
    if s.eps0 is not None:
        bias = dynamics.constant_biases(s.n, s.m, s.eps0, seed=s.perturbation_seed)
    return dynamics.NetworkSystem(build_field(s.field), build_coupling(s.coupling), np.array(s.W),
                                  alpha=s.alpha, bias=bias, eps0=s.eps0)


def build_run_config(cfg, system=None):
    r = cfg.run
    return RunConfig(system=system or build_system(cfg), t0=r.t0, t_burn=r.t_burn, t_end=r.t_end,
                     dt=r.dt, method=r.method, delta=r.delta, seed=r.seed, sync_tol=r.sync_tol,
                     rate_min=r.rate_min, rate_fit_window=r.rate_fit_window, ic_mode=r.ic_mode,
                     x_init=r.x_init, divergence_guard=r.divergence_guard, sample_dt=r.sample_dt,
                     early_stop=r.early_stop, desync_factor=r.desync_factor)


def with_overrides(cfg, seed=None, out=None):
    if seed is not None:
        cfg = replace(cfg, run=replace(cfg.run, seed=int(seed)))
    if out is not None:
        cfg = replace(cfg, output=replace(cfg.output, dir=str(out)))
    return cfg


def json_safe(obj):
    """Recursively replace non-finite floats and numpy scalars by JSON values."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj
