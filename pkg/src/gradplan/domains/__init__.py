"""Benchmark domain registry with paper-faithful default sizes."""

from __future__ import annotations

import dataclasses

from ..errors import ConfigError
from . import hvac, navigation, reservoir
from .base import DomainSpec
from .hvac import HvacParams, hvac_reward, hvac_transition
from .navigation import NavigationParams, nav_lambda, nav_reward, nav_transition
from .reservoir import (
    ReservoirParams,
    reservoir_reward,
    reservoir_transition,
)

DOMAIN_NAMES = (
    "nav-nonlinear",
    "nav-bilinear",
    "nav-linear",
    "reservoir-nonlinear",
    "reservoir-linear",
    "hvac",
)

_FAMILIES = {
    "nav": (navigation, NavigationParams),
    "reservoir": (reservoir, ReservoirParams),
    "hvac": (hvac, HvacParams),
}


def _family(name: str):
    if name == "hvac":
        return "hvac", None
    if "-" in name:
        family, variant = name.split("-", 1)
        if family in _FAMILIES and family != "hvac":
            return family, variant
    raise ConfigError(
        f"unknown domain {name!r}; expected one of {DOMAIN_NAMES}"
    )


def default_params(name: str):
    """Paper-default parameters for a domain name."""
    family, variant = _family(name)
    module, params_cls = _FAMILIES[family]
    return params_cls() if variant is None else params_cls(variant=variant)


def make_domain(name: str, **overrides) -> DomainSpec:
    """Build a DomainSpec from a registry name plus parameter overrides."""
    params = default_params(name)
    if overrides:
        valid = {f.name for f in dataclasses.fields(params)}
        for key in overrides:
            if key not in valid or key == "variant":
                raise ConfigError(
                    f"unknown parameter {key!r} for domain {name!r}"
                )
        params = dataclasses.replace(params, **overrides)
    return spec_from_params(params)


def spec_from_params(params) -> DomainSpec:
    for module, params_cls in _FAMILIES.values():
        if isinstance(params, params_cls):
            return module.make_spec(params)
    raise ConfigError(f"unrecognized params object {type(params).__name__}")
