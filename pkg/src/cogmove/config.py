"""Run configuration: TOML text to a validated, fully defaulted run plan."""

import copy
import difflib
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import ConfigurationError
from .expr import Expression
from .grid import BoundaryCondition, build_grid, total_mass
from .kernels import KernelSpec
from .memory import TemporalKernelSpec
from .models.spec import FAMILY_ALIASES, FAMILY_PARAMS, REQUIRED, make_model
from .stepper import StepConfig

AUTO = "auto"

# Documented defaults for every section except [model], whose defaults come
# from the family parameter tables.
DEFAULTS = {
    "grid": {"L": 1.0, "n": 128, "bc": "zero_flux", "robin_alpha": 1.0, "robin_beta": 0.0},
    "kernel": {"shape": "delta", "radius": 0.0, "boundary_mode": "cutoff"},
    "delay": {"kind": "none", "tau": 0.0, "horizon_multiplier": 20.0},
    "stepping": {"t_end": 1.0, "dt": AUTO, "cfl": 0.4, "dt_max": 0.01, "snapshot_every": AUTO,
                 "advection": "upwind", "mass_drift_tol": 1e-8, "linear_tol": 1e-12},
    "initial": {"noise": 0.0, "seed": 0, "normalize": False, "fields": {}},
    "measure": {"kind": "foraging_success", "t_prime": AUTO, "t_max": AUTO, "period": AUTO,
                "resource": "model", "species": AUTO},
    "stability": {"j_max": 64},
    "sweep": {"parameters": {}},
    "oracle": {"sigma": 0.05, "tau_step": 0.01, "length": 2.0, "spacing": AUTO, "t_final": 1.0,
               "covariates": [{"beta": 0.3, "a": "x"}]},
    "output": {"snapshots": True},
}

SECTIONS = ("model",) + tuple(DEFAULTS)
LANDSCAPE_KEYS = ("m", "potential", "a_s", "a_l")


def _suggest(word, options):
    close = difflib.get_close_matches(word, list(options), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def parse_toml(text):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed configuration: {exc}", key="config") from None


def _parse_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(raw, item):
    """Apply ``section.key=value`` (value in TOML syntax, bare text allowed)."""
    if "=" not in item:
        raise ConfigurationError(f"override {item!r} is not of the form key=value", key="override")
    path, value = item.split("=", 1)
    parts = path.strip().split(".")
    if len(parts) < 2:
        raise ConfigurationError(f"override key {path!r} needs a section prefix", key="override")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"{path!r} does not name a table entry", key="override")
    node[parts[-1]] = _parse_value(value.strip())
    return raw


def set_path(raw, path, value):
    parts = path.split(".")
    node = raw
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return raw


def merge_defaults(raw):
    """Fill every documented default; returns a new dict."""
    raw = copy.deepcopy(raw)
    for section in raw:
        if section not in SECTIONS:
            raise ConfigurationError(f"unknown section{_suggest(section, SECTIONS)}", key=section)
    if "model" not in raw or "family" not in raw["model"]:
        raise ConfigurationError("required", key="model.family")
    merged = {}
    for section, defaults in DEFAULTS.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigurationError("must be a table", key=section)
        for key in given:
            if key not in defaults:
                raise ConfigurationError(f"unknown key{_suggest(key, defaults)}", key=f"{section}.{key}")
        merged[section] = {**copy.deepcopy(defaults), **given}
    model = dict(raw["model"])
    family = FAMILY_ALIASES.get(model["family"], model["family"])
    table = FAMILY_PARAMS.get(family)
    if table is not None:
        for key, value in table.items():
            if key not in model and value is not REQUIRED:
                model[key] = value
    merged["model"] = model
    return merged


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def config_hash(merged):
    text = json.dumps(_jsonable(merged), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _auto(value):
    return None if value == AUTO else value


@dataclass
class RunPlan:
    config: dict
    model: object
    grid: object
    step: StepConfig
    initial: dict
    noise: float
    seed: int
    normalize: bool
    hash: str
    warnings: tuple = ()
    landscapes: dict = field(default_factory=dict)

    @property
    def echo(self):
        return _jsonable(self.config)

    def section(self, name):
        return self.config[name]

    def initial_fields(self):
        """Field arrays from ``[initial.fields]``; rescaled to unit mass when ``normalize`` is set."""
        x = self.grid.centers
        out = {}
        for name, expr in self.initial.items():
            values = expr(x, 0.0)
            if self.normalize:
                mass = total_mass(values, self.grid)
                if not mass > 0:
                    raise ConfigurationError("cannot normalize a field with non-positive mass",
                                             key=f"initial.fields.{name}")
                values = values / mass
            out[name] = values
        return out


def _expression(value, key):
    try:
        return Expression(value)
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(str(exc), key=key) from None


def build_grid_from(section):
    bc = section["bc"]
    if bc == "robin":
        beta = section["robin_beta"]
        bc = BoundaryCondition.robin(section["robin_alpha"], tuple(beta) if isinstance(beta, list) else beta)
    return build_grid(section["L"], section["n"], bc)


def build_plan(merged):
    """Validate a merged configuration into a :class:`RunPlan`."""
    grid = build_grid_from(merged["grid"])
    k = merged["kernel"]
    kernel = KernelSpec(k["shape"], k["radius"], k["boundary_mode"])
    d = merged["delay"]
    temporal = TemporalKernelSpec(d["kind"], d["tau"], d["horizon_multiplier"])
    params = {}
    landscapes = {}
    for key, value in merged["model"].items():
        if key == "family":
            continue
        if key in LANDSCAPE_KEYS and isinstance(value, str):
            expr = _expression(value, f"model.{key}")
            landscapes[key] = expr
            value = expr
        params[key] = value
    model = make_model(merged["model"]["family"], params, kernel, temporal)
    s = merged["stepping"]
    step = StepConfig(t_end=s["t_end"], dt=_auto(s["dt"]), cfl=s["cfl"], dt_max=s["dt_max"],
                      snapshot_every=_auto(s["snapshot_every"]), advection=s["advection"],
                      mass_drift_tol=s["mass_drift_tol"], linear_tol=s["linear_tol"])
    ini = merged["initial"]
    initial = {name: _expression(text, f"initial.fields.{name}") for name, text in ini["fields"].items()}
    return RunPlan(merged, model, grid, step, initial, float(ini["noise"]), int(ini["seed"]),
                   bool(ini["normalize"]), config_hash(merged), tuple(model.warnings), landscapes)


def parse_config(text, overrides=()):
    """TOML text plus ``key=value`` overrides to a validated plan."""
    raw = parse_toml(text)
    for item in overrides:
        apply_override(raw, item)
    return build_plan(merge_defaults(raw))


def default_count(family):
    """Number of documented defaults echoed for a family with no optional keys set."""
    fam = FAMILY_ALIASES.get(family, family)
    model_defaults = sum(1 for v in FAMILY_PARAMS[fam].values() if v is not REQUIRED)
    return sum(len(v) for v in DEFAULTS.values()) + model_defaults
