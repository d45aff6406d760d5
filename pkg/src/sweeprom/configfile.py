"""YAML config files: loading, validation with unknown-key warnings,
and access to the shipped checkerboard default.
"""

from __future__ import annotations

import warnings
from importlib import resources
from pathlib import Path

import yaml

from .problem import ConfigError, ProblemConfig

# Recognized keys, nested section -> entries. Unknown keys warn instead of
# failing so newer configs remain loadable.
_SCHEMA = {
    None: {
        "theta1",
        "theta2",
        "n_groups",
        "cells_per_block",
        "block_size_cm",
        "layout",
        "quadrature",
        "source",
        "solver",
        "sampling",
    },
    "quadrature": {"n_polar", "n_azimuthal"},
    "source": {"strength", "group"},
    "solver": {"gmres_tol", "gmres_restart", "gmres_maxiter"},
    "sampling": {"seed"},
}


class UnknownConfigKeyWarning(UserWarning):
    pass


def _warn_unknown(data: dict, section):
    known = _SCHEMA.get(section, set())
    for key in data:
        if key not in known:
            where = f"{section}.{key}" if section else key
            warnings.warn(
                f"ignoring unknown config key '{where}'",
                UnknownConfigKeyWarning,
                stacklevel=4,
            )


def _get(data: dict, key, default, caster, section=None):
    if key not in data:
        return default
    try:
        return caster(data[key])
    except (TypeError, ValueError) as exc:
        where = f"{section}.{key}" if section else key
        raise ConfigError(f"config key '{where}' has invalid value: {exc}", key=where)


def config_from_dict(data: dict) -> ProblemConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    _warn_unknown(data, None)
    defaults = ProblemConfig()

    sections = {}
    for name in ("quadrature", "source", "solver", "sampling"):
        sub = data.get(name, {})
        if sub is None:
            sub = {}
        if not isinstance(sub, dict):
            raise ConfigError(f"config section '{name}' must be a mapping", key=name)
        _warn_unknown(sub, name)
        sections[name] = sub

    layout = data.get("layout", defaults.layout)
    try:
        layout = tuple(tuple(int(v) for v in row) for row in layout)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config key 'layout' is malformed: {exc}", key="layout")

    return ProblemConfig(
        theta1=_get(data, "theta1", defaults.theta1, float),
        theta2=_get(data, "theta2", defaults.theta2, float),
        n_groups=_get(data, "n_groups", defaults.n_groups, int),
        cells_per_block=_get(data, "cells_per_block", defaults.cells_per_block, int),
        block_size_cm=_get(data, "block_size_cm", defaults.block_size_cm, float),
        layout=layout,
        n_polar=_get(sections["quadrature"], "n_polar", defaults.n_polar, int, "quadrature"),
        n_azimuthal=_get(
            sections["quadrature"], "n_azimuthal", defaults.n_azimuthal, int, "quadrature"
        ),
        source_strength=_get(
            sections["source"], "strength", defaults.source_strength, float, "source"
        ),
        source_group=_get(sections["source"], "group", defaults.source_group, int, "source"),
        gmres_tol=_get(sections["solver"], "gmres_tol", defaults.gmres_tol, float, "solver"),
        gmres_restart=_get(
            sections["solver"], "gmres_restart", defaults.gmres_restart, int, "solver"
        ),
        gmres_maxiter=_get(
            sections["solver"], "gmres_maxiter", defaults.gmres_maxiter, int, "solver"
        ),
        seed=_get(sections["sampling"], "seed", defaults.seed, int, "sampling"),
    )


def load_config(path) -> ProblemConfig:
    """Parse a YAML problem config; raises ConfigError naming the bad key."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}")
    if data is None:
        data = {}
    return config_from_dict(data)


def save_config(config: ProblemConfig, path):
    Path(path).write_text(yaml.safe_dump(config.to_dict(), sort_keys=False))


def default_config_path() -> Path:
    """Location of the shipped checkerboard config."""
    return Path(resources.files("sweeprom").joinpath("data/checkerboard.yaml"))


def load_default_config() -> ProblemConfig:
    return load_config(default_config_path())
