"""Experiment configuration: YAML file -> validated, defaults-filled nested dict.

Every key is optional; see ``DEFAULTS`` for the full schema. Validation errors
carry the file position of the offending key (``file:line:col: path: message``).
"""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .bcd import BcdConfig
from .beamforming import SolverConfig
from .channel import ScenarioConfig
from .ddpg import AgentConfig
from .environment import RewardWeights
from .errors import ConfigurationError

METHODS = ("fpa", "fas_bcd_drl")

DEFAULTS = {
    "system": {
        "num_antennas": 4,
        "num_targets": 2,
        "num_tx_paths": 3,
        "num_rx_paths": 3,
        "target_paths": 3,
        "wavelength": 1.0,
        "p_max": 1.0,
        "rician_tau": 1.0,
        "gamma": 2.4,
        "d_s": None,  # wavelength / 2
        "region_size": None,  # side A; 4 * wavelength
        "ut_region_size": None,  # same as region_size
    },
    "sweep": {
        "snr_db": [0.0, 10.0, 20.0, 30.0],
        "num_scenarios": 20,
        "master_seed": 2024,
        "workers": 1,
        "methods": list(METHODS),
    },
    "reward": {"alpha1": 1.0, "alpha2": 1.0, "alpha3": 0.1, "sign_convention": "prose"},
    "env": {"episode_length": 100, "initial_layout": "fpa_grid"},
    "agent": {
        "actor_hidden": [400, 300],
        "critic_hidden": [400, 300],
        "actor_lr": 1e-4,
        "critic_lr": 1e-3,
        "gamma": 0.99,
        "tau": 0.001,
        "batch_size": 64,
        "buffer_capacity": 10000,
        "warmup": 1000,
        "ou_xi": 0.15,
        "ou_sigma_start": 0.2,
        "ou_sigma_end": 0.02,
        "critic_weight_decay": 0.0,
    },
    "solver": {
        "mu0": 1.0,
        "mu_factor": 0.2,
        "gap_tol": 1e-7,
        "max_newton": 400,
        "randomization_samples": 1000,
    },
    "bcd": {
        "max_outer_iters": 10,
        "rate_tolerance": 1e-3,
        "episodes_per_iter": 10,
        "num_candidates": 8,
    },
    "output": {"formats": ["csv", "json", "svg"], "record_wall_time": False},
}

# (kind, lower bound, lower inclusive, nullable)
_RULES = {
    "system.num_antennas": ("int", 1, True, False),
    "system.num_targets": ("int", 0, True, False),
    "system.num_tx_paths": ("int", 2, True, False),
    "system.num_rx_paths": ("int", 1, True, False),
    "system.target_paths": ("int", 1, True, False),
    "system.wavelength": ("float", 0, False, False),
    "system.p_max": ("float", 0, False, False),
    "system.rician_tau": ("float", 0, False, False),
    "system.gamma": ("float", 0, True, False),
    "system.d_s": ("float", 0, False, True),
    "system.region_size": ("float", 0, False, True),
    "system.ut_region_size": ("float", 0, False, True),
    "sweep.snr_db": ("floats", None, True, False),
    "sweep.num_scenarios": ("int", 1, True, False),
    "sweep.master_seed": ("int", 0, True, False),
    "sweep.workers": ("int", 1, True, False),
    "sweep.methods": ("choices", METHODS, True, False),
    "reward.alpha1": ("float", 0, True, False),
    "reward.alpha2": ("float", 0, True, False),
    "reward.alpha3": ("float", 0, True, False),
    "reward.sign_convention": ("choice", ("prose", "literal"), True, False),
    "env.episode_length": ("int", 1, True, False),
    "env.initial_layout": ("choice", ("fpa_grid", "random_valid"), True, False),
    "agent.actor_hidden": ("pair", 1, True, False),
    "agent.critic_hidden": ("pair", 1, True, False),
    "agent.actor_lr": ("float", 0, False, False),
    "agent.critic_lr": ("float", 0, False, False),
    "agent.gamma": ("unit", None, True, False),
    "agent.tau": ("tau", None, True, False),
    "agent.batch_size": ("int", 1, True, False),
    "agent.buffer_capacity": ("int", 1, True, False),
    "agent.warmup": ("int", 0, True, False),
    "agent.ou_xi": ("tau", None, True, False),
    "agent.ou_sigma_start": ("float", 0, True, False),
    "agent.ou_sigma_end": ("float", 0, True, False),
    "agent.critic_weight_decay": ("float", 0, True, False),
    "solver.mu0": ("float", 0, False, False),
    "solver.mu_factor": ("unit_open", None, True, False),
    "solver.gap_tol": ("float", 0, False, False),
    "solver.max_newton": ("int", 1, True, False),
    "solver.randomization_samples": ("int", 1, True, False),
    "bcd.max_outer_iters": ("int", 1, True, False),
    "bcd.rate_tolerance": ("float", 0, False, False),
    "bcd.episodes_per_iter": ("int", 0, True, False),
    "bcd.num_candidates": ("int", 1, True, False),
    "output.formats": ("choices", ("csv", "json", "svg"), True, False),
    "output.record_wall_time": ("bool", None, True, False),
}


class ConfigError(ConfigurationError):
    def __init__(self, message, source="<config>", line=None, column=None, path=None):
        self.source, self.line, self.column, self.path = source, line, column, path
        where = source if line is None else f"{source}:{line}:{column}"
        key = f"{path}: " if path else ""
        super().__init__(f"{where}: {key}{message}")


def _marks(node, prefix="", out=None):
    """Map dotted key paths to (line, col), 1-based, from a composed YAML tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for knode, vnode in node.value:
            path = f"{prefix}.{knode.value}" if prefix else str(knode.value)
            out[path] = (knode.start_mark.line + 1, knode.start_mark.column + 1)
            _marks(vnode, path, out)
    return out


def _check(path, value, rule):
    kind, arg, inclusive, nullable = rule
    if value is None:
        if nullable:
            return None
        raise ValueError("may not be null")

    def number(v, integer=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"expected a number, got {v!r}")
        if integer and not (isinstance(v, int) or float(v).is_integer()):
            raise ValueError(f"expected an integer, got {v!r}")
        return int(v) if integer else float(v)

    if kind in ("int", "float"):
        v = number(value, kind == "int")
        if arg is not None and (v < arg or (v == arg and not inclusive)):
            raise ValueError(f"must be {'>=' if inclusive else '>'} {arg}, got {v}")
        return v
    if kind == "unit":
        v = number(value)
        if not 0 <= v < 1:
            raise ValueError(f"must lie in [0, 1), got {v}")
        return v
    if kind == "unit_open":
        v = number(value)
        if not 0 < v < 1:
            raise ValueError(f"must lie in (0, 1), got {v}")
        return v
    if kind == "tau":
        v = number(value)
        if not 0 < v <= 1:
            raise ValueError(f"must lie in (0, 1], got {v}")
        return v
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValueError(f"expected true/false, got {value!r}")
        return value
    if kind == "choice":
        if value not in arg:
            raise ValueError(f"must be one of {list(arg)}, got {value!r}")
        return value
    if kind == "choices":
        if not isinstance(value, list) or not value or any(v not in arg for v in value):
            raise ValueError(f"must be a non-empty list drawn from {list(arg)}")
        return list(value)
    if kind == "floats":
        if not isinstance(value, list) or not value:
            raise ValueError("must be a non-empty list of numbers")
        return [number(v) for v in value]
    if kind == "pair":
        if not isinstance(value, list) or len(value) != 2:
            raise ValueError("must be a list of two layer widths")
        vals = [number(v, True) for v in value]
        if min(vals) < 1:
            raise ValueError("layer widths must be >= 1")
        return vals
    raise AssertionError(kind)


def validate(raw: dict | None, source: str = "<config>", marks: dict | None = None) -> dict:
    """Fill defaults and validate. Unknown keys are errors."""
    marks = marks or {}
    raw = raw or {}

    def fail(msg, path):
        line, col = marks.get(path, (None, None))
        raise ConfigError(msg, source, line, col, path)

    if not isinstance(raw, dict):
        fail("top level must be a mapping", None)
    cfg = copy.deepcopy(DEFAULTS)
    for section, body in raw.items():
        if section not in DEFAULTS:
            fail(f"unknown section (expected one of {sorted(DEFAULTS)})", section)
        if body is None:
            continue
        if not isinstance(body, dict):
            fail("section must be a mapping", section)
        for key, value in body.items():
            path = f"{section}.{key}"
            if key not in DEFAULTS[section]:
                fail(f"unknown key (expected one of {sorted(DEFAULTS[section])})", path)
            try:
                cfg[section][key] = _check(path, value, _RULES[path])
            except ValueError as exc:
                fail(str(exc), path)
    sysc = cfg["system"]
    lam = sysc["wavelength"]
    side = sysc["region_size"] if sysc["region_size"] is not None else 4 * lam
    d_s = sysc["d_s"] if sysc["d_s"] is not None else lam / 2
    if sysc["num_tx_paths"] != sysc["num_rx_paths"]:
        fail("diagonal Sigma needs num_tx_paths == num_rx_paths", "system.num_rx_paths")
    if d_s > side:
        fail("minimum spacing exceeds the region size", "system.d_s")
    if cfg["agent"]["ou_sigma_end"] > cfg["agent"]["ou_sigma_start"]:
        fail("ou_sigma_end must not exceed ou_sigma_start", "agent.ou_sigma_end")
    if cfg["agent"]["warmup"] > cfg["agent"]["buffer_capacity"]:
        fail("warmup exceeds buffer_capacity", "agent.warmup")
    return cfg


def load_config(path) -> dict:
    path = Path(path)
    text = path.read_text()
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}", str(path),
                          mark.line + 1 if mark else None, mark.column + 1 if mark else None) from None
    return validate(raw, str(path), _marks(node) if node is not None else {})


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False)


@dataclass
class ExperimentConfig:
    """Typed view over a validated config dict."""
    data: dict

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls(load_config(path))

    @classmethod
    def default(cls, **overrides) -> "ExperimentConfig":
        raw: dict = {}
        for dotted, value in overrides.items():
            section, key = dotted.split("__", 1) if "__" in dotted else dotted.split(".", 1)
            raw.setdefault(section, {})[key] = value
        return cls(validate(raw))

    @property
    def hash(self) -> str:
        return config_hash(self.data)

    @property
    def sweep(self) -> dict:
        return self.data["sweep"]

    def noise_power(self, snr_db: float) -> float:
        return self.data["system"]["p_max"] / 10.0 ** (snr_db / 10.0)

    def scenario_config(self, snr_db: float, num_targets: int | None = None) -> ScenarioConfig:
        s = self.data["system"]
        return ScenarioConfig(
            num_tx_paths=s["num_tx_paths"], num_rx_paths=s["num_rx_paths"],
            num_targets=s["num_targets"] if num_targets is None else num_targets,
            target_paths=s["target_paths"], rician_tau=s["rician_tau"], wavelength=s["wavelength"],
            noise_power=self.noise_power(snr_db), p_max=s["p_max"], gamma=s["gamma"], d_s=s["d_s"],
            region_size=s["region_size"], ut_region_size=s["ut_region_size"])

    def bcd_config(self) -> BcdConfig:
        a, b, r, e = self.data["agent"], self.data["bcd"], self.data["reward"], self.data["env"]
        agent = AgentConfig(**{**a, "actor_hidden": tuple(a["actor_hidden"]),
                               "critic_hidden": tuple(a["critic_hidden"])})
        return BcdConfig(
            num_antennas=self.data["system"]["num_antennas"],
            max_outer_iters=b["max_outer_iters"], rate_tolerance=b["rate_tolerance"],
            episodes_per_iter=b["episodes_per_iter"], steps_per_episode=e["episode_length"],
            num_candidates=b["num_candidates"], initial_layout=e["initial_layout"],
            solver=SolverConfig(**self.data["solver"]), agent=agent, reward=RewardWeights(**r))
