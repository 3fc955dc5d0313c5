"""JSON run configuration: loading, ``PCLPV_*`` environment overrides, validation."""

from __future__ import annotations

import copy
import json
import os
from importlib import resources
from pathlib import Path

import numpy as np

from .orthopoly import ParameterDistribution
from .plant import CostWeights, MissileConfig
from .synthesis import SynthesisOptions

__all__ = ["ConfigError", "REQUIRED", "load_config", "apply_env", "validate", "missile_from", "cost_from",
           "distribution_from", "options_from", "initial_conditions"]

ENV_PREFIX = "PCLPV_"

REQUIRED = {
    "model": ("mach", "K_alpha", "K_q", "a_n", "b_n", "c_n", "d_n", "a_m", "b_m", "c_m", "d_m"),
    "uncertainty": ("distribution", "range"),
    "cost": ("Q", "R"),
    "synthesis": ("method", "order", "samples", "quadrature_order", "epsilon_psd", "epsilon_stab", "wc_points"),
    "simulation": ("x0", "t_final", "dt"),
}


class ConfigError(KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "configuration error"


def reference_path() -> Path:
    return Path(str(resources.files("pclpv") / "data" / "reference.json"))


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_env(config: dict, environ=None) -> dict:
    """Override ``section.key`` from ``PCLPV_SECTION_KEY`` (case-insensitive)."""
    environ = os.environ if environ is None else environ
    out = copy.deepcopy(config)
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        if rest == "seed":
            out["seed"] = _parse_value(raw)
            continue
        for section, body in out.items():
            if isinstance(body, dict) and rest.startswith(section.lower() + "_"):
                key = rest[len(section) + 1:]
                match = next((k for k in body if k.lower() == key), key)
                body[match] = _parse_value(raw)
                break
    return out


def validate(config: dict) -> dict:
    for section, keys in REQUIRED.items():
        if section not in config:
            raise ConfigError(f"missing config key: {section}")
        for key in keys:
            if key not in config[section]:
                raise ConfigError(f"missing config key: {section}.{key}")
    return config


def load_config(path=None, environ=None) -> dict:
    """Read ``path`` (default: the shipped reference configuration).

    ``path`` may also be a run manifest, whose embedded configuration is used.
    """
    path = reference_path() if path is None else Path(path)
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    if isinstance(config, dict) and "config" in config and "model" not in config:
        config = config["config"]  # a run manifest embeds its configuration
    return validate(apply_env(config, environ))


def distribution_from(config: dict) -> ParameterDistribution:
    unc = config["uncertainty"]
    return ParameterDistribution.from_dict({"family": unc["distribution"], **unc})


def missile_from(config: dict) -> MissileConfig:
    dist = distribution_from(config)
    return MissileConfig.from_dict(config["model"], dist.support)


def cost_from(config: dict) -> CostWeights:
    return CostWeights(np.asarray(config["cost"]["Q"], dtype=float), np.asarray(config["cost"]["R"], dtype=float))


def options_from(config: dict) -> SynthesisOptions:
    syn = config["synthesis"]
    dist = distribution_from(config)
    wc = syn.get("wc_points")
    if wc is None:
        points = None
    elif isinstance(wc, int):
        lo, hi = dist.support
        points = tuple(np.linspace(lo, hi, wc + 2)) if wc > 0 else (lo, hi)
    else:
        points = tuple(float(p) for p in wc)
    return SynthesisOptions(
        epsilon_psd=float(syn["epsilon_psd"]),
        epsilon_stab=float(syn["epsilon_stab"]),
        wc_points=points,
        quadrature_order=syn.get("quadrature_order"),
    )


def initial_conditions(config: dict) -> list[list[float]]:
    sim = config["simulation"]
    return [list(map(float, x)) for x in sim.get("x0_list", [sim["x0"]])]
