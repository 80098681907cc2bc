"""Model families, their parameter tables, and validation."""

import difflib
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError
from ..kernels import KernelSpec
from ..memory import TemporalKernelSpec

REQUIRED = object()

# Parameter tables: every key a family accepts, with its default.
FAMILY_PARAMS = {
    "prototype": {"d": 1.0, "potential": REQUIRED},
    "perception_foraging": {"d": 1.0, "gamma": 1.0, "m": REQUIRED},
    "static_map": {"variant": "den_site", "d": 1.0, "gamma": 1.0, "x0": None, "m": None},
    "aggregation": {"d": 1.0, "gamma": 1.0},
    "multi_aggregation": {"n_species": 2, "d": 1.0, "gamma": REQUIRED},
    "marks": {"n_species": 2, "d": 1.0, "gamma": 1.0, "alpha": REQUIRED, "mu": 1.0},
    "conflict_zones": {"n_species": 2, "d": 1.0, "gamma": 1.0, "rho": REQUIRED, "mu": 1.0,
                       "beta": 0.0, "variant": "magnitude", "epsilon": 0.0,
                       "nonlocal_conflict": False},
    "consumer_resource": {"map": "none", "D1": 1.0, "D2": 1.0, "gamma": 1.0, "c": 1.0,
                          "beta": 2.0, "alpha": 1.0, "death": 1.0, "r": 1.0, "K": 2.0,
                          "b": 1.0, "mu": 1.0, "xi": 0.0},
    "discrete_delay": {"variant": "scalar", "d": 1.0, "gamma": 1.0, "r": None, "K": None,
                       "growth": "local", "sigma": 0.0,
                       "d11": 1.0, "d22": 1.0, "d21": 1.0, "c": 1.0, "beta": 2.0,
                       "alpha": 1.0, "death": 1.0,
                       "D1": 1.0, "D2": 1.0, "D11": 0.0, "D12": 0.0, "D21": 0.0, "D22": 0.0,
                       "lv_alpha": 0.5, "lv_beta": 0.5, "lv_gamma": 1.0},
    "distributed": {"d": 1.0, "gamma": 1.0, "d3": None, "r": 0.0, "K": 1.0,
                    "method": "augmented", "maturation": False, "d2": 0.0,
                    "maturation_kind": "weak", "maturation_tau": 1.0},
    "short_long": {"d": 1.0, "alpha_s": 2.0, "alpha_l": 0.5, "beta_s": 2.0, "beta_l": 0.2,
                   "c1": -1.0, "c2": 1.0, "m": REQUIRED, "a_s": None, "a_l": None},
    "starvation_den_site": {"d": 1.0, "gamma": 0.5, "gamma_plus": 2.0, "x0": None,
                            "m": REQUIRED, "response": "step", "sharpness": 10.0,
                            "satisfaction": "supply_demand"},
}

FAMILY_ALIASES = {
    "foraging": "perception_foraging",
    "starvation": "starvation_den_site",
    "shortlong": "short_long",
    "conflict": "conflict_zones",
}

STATIC_VARIANTS = ("den_site", "given_map", "avg_density", "per_capita")
DELAY_VARIANTS = ("scalar", "consumer_resource", "competition")
GROWTH_KINDS = ("local", "spatial_average", "temporal_delay", "kernel_delay")
CR_MAPS = ("none", "linear_q", "bilinear_q")


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict
    kernel: KernelSpec = field(default_factory=KernelSpec)
    temporal: TemporalKernelSpec = field(default_factory=TemporalKernelSpec)
    warnings: tuple = ()
    flags: tuple = ()

    def __getitem__(self, key):
        return self.params[key]

    @property
    def n_species(self):
        return int(self.params.get("n_species", 1))


def _suggest(word, options):
    close = difflib.get_close_matches(word, list(options), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def _species_vector(value, n, key, positive=False, nonneg=False):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy() if np.ndim(value) == 0 \
        else np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ConfigurationError(f"expected {n} values, got shape {arr.shape}", key=f"model.{key}")
    if positive and np.any(arr <= 0):
        raise ConfigurationError("must be positive", key=f"model.{key}")
    if nonneg and np.any(arr < 0):
        raise ConfigurationError("must be non-negative", key=f"model.{key}")
    return arr


def _matrix(value, n, key):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n, n):
        raise ConfigurationError(f"expected a {n}x{n} matrix, got shape {arr.shape}",
                                 key=f"model.{key}")
    return arr


def _positive(p, *keys):
    for k in keys:
        if not p[k] > 0:
            raise ConfigurationError(f"must be positive, got {p[k]}", key=f"model.{k}")


def _nonneg(p, *keys):
    for k in keys:
        if not p[k] >= 0:
            raise ConfigurationError(f"must be non-negative, got {p[k]}", key=f"model.{k}")


def _choice(p, key, options):
    if p[key] not in options:
        raise ConfigurationError(f"{p[key]!r} is not one of {options}{_suggest(str(p[key]), options)}",
                                 key=f"model.{key}")


def make_model(family, params=None, kernel=None, temporal=None):
    """Validate parameters against the family table and fill defaults."""
    fam = FAMILY_ALIASES.get(family, family)
    if fam not in FAMILY_PARAMS:
        raise ConfigurationError(f"unknown family {family!r}{_suggest(family, FAMILY_PARAMS)}",
                                 key="model.family")
    table = FAMILY_PARAMS[fam]
    params = dict(params or {})
    for key in params:
        if key not in table:
            raise ConfigurationError(f"unknown parameter for {fam}{_suggest(key, table)}",
                                     key=f"model.{key}")
    p = {k: params.get(k, v) for k, v in table.items()}
    for k, v in p.items():
        if v is REQUIRED:
            raise ConfigurationError(f"required by family {fam}", key=f"model.{k}")
    kernel = kernel or KernelSpec()
    temporal = temporal or TemporalKernelSpec()
    warnings = []
    flags = []
    validator = _VALIDATORS.get(fam)
    if validator is not None:
        validator(p, kernel, temporal, warnings, flags)
    return ModelSpec(fam, p, kernel, temporal, tuple(warnings), tuple(flags))


def _v_scalar_d(p, kernel, temporal, warnings, flags):
    _positive(p, "d")


def _v_static(p, kernel, temporal, warnings, flags):
    _positive(p, "d")
    _choice(p, "variant", STATIC_VARIANTS)
    if p["variant"] != "den_site" and p["m"] is None:
        raise ConfigurationError(f"static map {p['variant']!r} needs a landscape", key="model.m")


def _v_multi(p, kernel, temporal, warnings, flags):
    n = int(p["n_species"])
    if n < 1:
        raise ConfigurationError("need at least one species", key="model.n_species")
    p["n_species"] = n
    p["d"] = _species_vector(p["d"], n, "d", positive=True)
    p["gamma"] = _matrix(p["gamma"], n, "gamma")


def _v_marks(p, kernel, temporal, warnings, flags):
    n = int(p["n_species"])
    p["n_species"] = n
    p["d"] = _species_vector(p["d"], n, "d", positive=True)
    p["gamma"] = _species_vector(p["gamma"], n, "gamma")
    p["alpha"] = _matrix(p["alpha"], n, "alpha")
    _nonneg(p, "mu")


def _v_conflict(p, kernel, temporal, warnings, flags):
    n = int(p["n_species"])
    p["n_species"] = n
    p["d"] = _species_vector(p["d"], n, "d", positive=True)
    p["gamma"] = _species_vector(p["gamma"], n, "gamma", nonneg=True)
    p["epsilon"] = _species_vector(p["epsilon"], n, "epsilon", nonneg=True)
    rho = _matrix(p["rho"], n, "rho")
    if np.any(rho < 0):
        raise ConfigurationError("encounter rates must be non-negative", key="model.rho")
    if not np.array_equal(rho, rho.T):
        raise ConfigurationError("encounter rates must be symmetric, rho_ij == rho_ji", key="model.rho")
    p["rho"] = rho
    _nonneg(p, "mu", "beta")
    _choice(p, "variant", ("magnitude", "probability"))
    p["nonlocal_conflict"] = bool(p["nonlocal_conflict"])


def _v_cr(p, kernel, temporal, warnings, flags):
    _choice(p, "map", CR_MAPS)
    _positive(p, "D1", "D2", "c", "beta", "alpha", "death", "r", "K")
    _nonneg(p, "b", "mu", "xi")


def _v_delay(p, kernel, temporal, warnings, flags):
    _choice(p, "variant", DELAY_VARIANTS)
    # r and K default per variant: no growth for the scalar law, coexistence for consumer-resource
    cr = p["variant"] == "consumer_resource"
    if p["r"] is None:
        p["r"] = 1.0 if cr else 0.0
    if p["K"] is None:
        p["K"] = 2.0 if cr else 1.0
    if temporal.kind != "discrete":
        raise ConfigurationError("discrete_delay needs a discrete temporal kernel", key="delay.kind")
    if p["variant"] == "scalar":
        _positive(p, "d", "K")
        _nonneg(p, "sigma")
        _choice(p, "growth", GROWTH_KINDS)
    elif p["variant"] == "consumer_resource":
        _positive(p, "d11", "d22", "c", "beta", "alpha", "death", "r", "K")
        _nonneg(p, "d21")
    else:
        _positive(p, "D1", "D2", "lv_alpha", "lv_beta", "lv_gamma")


def _v_distributed(p, kernel, temporal, warnings, flags):
    _positive(p, "d", "K")
    _nonneg(p, "r")
    if p["d3"] is None:
        p["d3"] = p["d"]
    _positive(p, "d3")
    _choice(p, "method", ("augmented", "quadrature"))
    if temporal.kind not in ("weak", "strong"):
        raise ConfigurationError("distributed family needs a weak or strong kernel", key="delay.kind")
    if p["maturation"]:
        if p["method"] != "quadrature":
            raise ConfigurationError("the maturation pathway is only available with method "
                                     "'quadrature'", key="model.method")
        _choice(p, "maturation_kind", ("weak", "strong"))
        _positive(p, "maturation_tau")
    if temporal.kind == "strong" and p["method"] == "augmented":
        flags.append("derived-construction")


def _v_short_long(p, kernel, temporal, warnings, flags):
    _positive(p, "d")
    _nonneg(p, "beta_s", "beta_l")
    if not p["alpha_l"] < p["alpha_s"]:
        warnings.append("alpha_l >= alpha_s: long-term uptake is not slower than short-term")
    if not p["beta_l"] < p["beta_s"]:
        warnings.append("beta_l >= beta_s: long-term decay is not slower than short-term")


def _v_sda(p, kernel, temporal, warnings, flags):
    _positive(p, "d")
    if not 0 < p["gamma"] < p["gamma_plus"]:
        raise ConfigurationError(f"need 0 < gamma < gamma_plus, got gamma={p['gamma']}, "
                                 f"gamma_plus={p['gamma_plus']}", key="model.gamma")
    _choice(p, "response", ("step", "smooth"))
    _choice(p, "satisfaction", ("supply_demand", "relative_average"))


_VALIDATORS = {
    "prototype": _v_scalar_d,
    "perception_foraging": _v_scalar_d,
    "static_map": _v_static,
    "aggregation": _v_scalar_d,
    "multi_aggregation": _v_multi,
    "marks": _v_marks,
    "conflict_zones": _v_conflict,
    "consumer_resource": _v_cr,
    "discrete_delay": _v_delay,
    "distributed": _v_distributed,
    "short_long": _v_short_long,
    "starvation_den_site": _v_sda,
}


def augment_model(model):
    """Distributed-memory model rewritten with auxiliary relaxation fields."""
    if model.family != "distributed":
        raise ConfigurationError("only the distributed family has a memory kernel to augment",
                                 key="model.family")
    if model.params["maturation"]:
        raise ConfigurationError("the maturation pathway has no augmented form; use method "
                                 "'quadrature'", key="model.method")
    params = dict(model.params)
    params["method"] = "augmented"
    flags = tuple(model.flags)
    if model.temporal.kind == "strong" and "derived-construction" not in flags:
        flags = flags + ("derived-construction",)
    return replace(model, params=params, flags=flags)
