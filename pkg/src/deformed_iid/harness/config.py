"""Experiment configuration: defaults, schema validation and overrides."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import jsonschema

from ..errors import ConfigError

EXPERIMENTS = ("esd", "outliers", "alignment", "power", "querybound", "twoside", "concentration")

_BASE = {"gap": None, "delta": 0.1, "seed": 0, "entry_law": "real-gaussian", "output_dir": None}

DEFAULTS: dict[str, dict] = {
    "esd": {"d": 2000, "lambdas": [3.0, 2.5, 2.0], "trials": 1,
            "options": {"ks_threshold": 0.05}},
    "outliers": {"d": 1000, "lambdas": [3.0, 2.0], "trials": 20,
                 "options": {"epsilon": 0.2, "location_tolerance": 0.1, "bulk_edge_interval": [0.95, 1.1],
                             "resolvent_d": 800, "resolvent_trials": 5, "resolvent_epsilon": 0.2,
                             "root_tolerance": 1e-6}},
    "alignment": {"d": 1000, "lambdas": [2.0], "trials": 20,
                  "options": {"overlap_tolerance": 0.05, "multi_d": 1500, "multi_lambdas": [3.0, 2.0],
                              "multi_trials": 10, "multi_tolerances": [0.4, 0.3]}},
    "power": {"d": 1000, "lambdas": [2.0], "trials": 20,
              "options": {"gaps": [0.1, 0.05, 0.025], "epsilon": 0.01, "bound_factor": 2.0,
                          "ratio_interval": [1.7, 2.3], "example2_theta": math.pi / 3}},
    "querybound": {"d": 1000, "lambdas": [2.0], "gap": 0.5, "trials": 50,
                   "options": {"k_max": 10}},
    "twoside": {"d": 200, "lambdas": [2.0], "trials": 5000,
                "options": {"history": 3, "covariance_tolerance": 0.2, "cross_sigma": 4.0,
                            "overlap_trials": 20}},
    "concentration": {"d": 500, "lambdas": [2.0], "trials": 2000,
                      "options": {"hw_r": 2, "hw_t": 15, "entropy_k": 5, "entropy_tau": 40.0,
                                  "entropy_draws": 100000, "moment_d": 1000, "moment_k_max": 3,
                                  "moment_trials": 200, "moment_tolerance": 0.1, "ratio_samples": 1000000,
                                  "ratio_tolerance": 0.05, "resolvent_lambda": 2.0, "resolvent_d": 1000,
                                  "resolvent_trials": 10, "resolvent_cap": 8.5}},
}


def _load_schema(name: str) -> dict:
    text = resources.files("deformed_iid.harness").joinpath("schemas", name).read_text(encoding="utf-8")
    return json.loads(text)


CONFIG_SCHEMA = _load_schema("config.schema.json")
REPORT_SCHEMA = _load_schema("report.schema.json")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d: int
    r: int
    lambdas: tuple
    gap: float | None
    delta: float
    trials: int
    seed: int
    entry_law: str
    output_dir: str | None
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambdas"] = list(self.lambdas)
        out["options"] = copy.deepcopy(self.options)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return make_config(data)

    def option(self, key: str):
        return self.options[key]


def _validate(data: dict) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(err.message, path)


def make_config(data: dict, experiment: str | None = None) -> ExperimentConfig:
    """Validate a (possibly partial) mapping and fill in experiment defaults."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    data = copy.deepcopy(data)
    if experiment is not None:
        if "experiment" in data and data["experiment"] != experiment:
            raise ConfigError(f"config is for {data['experiment']!r}, not {experiment!r}", "experiment")
        data["experiment"] = experiment
    if "experiment" not in data:
        raise ConfigError("missing experiment name", "experiment")
    _validate(data)
    name = data["experiment"]
    merged = {**_BASE, **copy.deepcopy(DEFAULTS[name])}
    options = merged.pop("options")
    options.update(data.pop("options", {}) or {})
    explicit_lambdas = "lambdas" in data
    merged.update(data)
    if name == "querybound":
        if explicit_lambdas and "gap" not in data:
            lam = float(merged["lambdas"][0])
            if lam <= 1:
                raise ConfigError("spike strength must exceed 1", "lambdas")
            merged["gap"] = 1.0 - 1.0 / lam
        if merged["gap"] is None:
            raise ConfigError("querybound needs a gap", "gap")
        merged["lambdas"] = [1.0 / (1.0 - merged["gap"])]
    lambdas = tuple(float(x) for x in merged["lambdas"])
    if "r" in data and data["r"] != len(lambdas):
        raise ConfigError(f"r={data['r']} does not match {len(lambdas)} spike strengths", "r")
    merged["r"] = len(lambdas)
    merged["lambdas"] = lambdas
    merged["options"] = options
    cfg = ExperimentConfig(**merged)
    _validate(cfg.to_dict())
    return cfg


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", "config") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}", "config") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}", "config") from exc
