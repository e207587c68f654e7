import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import yaml

from pyredeem.models.config import (
    MECHANISMS,
    SWEEP_AXES,
    DistributionSpec,
    ExperimentConfig,
    distribution_spec,
)
from pyredeem.models.market import OversupplyStrategy, oversupply_strategy
from pyredeem.models.metrics import WelfareConvention
from pyredeem.models.server import ServerCostModel
from pyredeem.utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Parser = Callable[[Any, str], Any]


def _float(value: Any, key: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError) as error:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from error


def _int(value: Any, key: str) -> int:
    number = _float(value, key)
    if not number.is_integer():
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return int(number)


def _text(value: Any, key: str) -> str:
    if value is None or isinstance(value, (dict, list)):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return str(value)


def _listed(item: Parser) -> Parser:
    def parse(value: Any, key: str) -> Tuple[Any, ...]:
        values = value if isinstance(value, list) else [value]
        if not values:
            raise ConfigError(f"{key}: must not be empty")
        return tuple(item(v, f"{key}[{i}]") for i, v in enumerate(values))

    return parse


def _mechanism(value: Any, key: str) -> str:
    name = _text(value, key)
    if name not in MECHANISMS:
        raise ConfigError(f"{key}: unknown mechanism '{name}', expected one of {MECHANISMS}")
    return name


def _axis(value: Any, key: str) -> str:
    axis = _text(value, key)
    if axis not in SWEEP_AXES:
        raise ConfigError(f"{key}: unknown sweep axis '{axis}', expected one of {SWEEP_AXES}")
    return axis


def _server_field(name: str) -> Parser:
    def parse(value: Any, key: str) -> float:
        number = _float(value, key)
        try:
            ServerCostModel(**{name: number})
        except DomainError as error:
            raise ConfigError(f"{key}: {error}") from error
        return number

    return parse


def _preset(value: Any, key: str) -> str:
    preset = _text(value, key)
    if preset not in ("default", "over-supply"):
        raise ConfigError(f"{key}: unknown preset '{preset}'")
    return preset


def _strategy(value: Any, key: str) -> OversupplyStrategy:
    strategy = oversupply_strategy(_text(value, key))
    if strategy is None:
        raise ConfigError(f"{key}: unknown oversupply strategy {value!r}")
    return strategy


def _convention(value: Any, key: str) -> WelfareConvention:
    try:
        return WelfareConvention(_text(value, key))
    except ValueError as error:
        raise ConfigError(f"{key}: unknown welfare convention {value!r}") from error


SCHEMA: Dict[str, Any] = {
    "population": {
        "n_users": _int,
        "endowment": distribution_spec,
        "lambda_dist": distribution_spec,
        "theta_dist": distribution_spec,
        "k": _float,
    },
    "server": {
        "a": _server_field("a"),
        "A1": _server_field("A1"),
        "A2": _server_field("A2"),
        "A3": _server_field("A3"),
        "T0": _server_field("T0"),
        "alpha": _server_field("alpha"),
        "beta": _server_field("beta"),
        "preset": _preset,
    },
    "schedule": {"B0": _float, "dB": _float},
    "unit": _float,
    "mechanisms": _listed(_mechanism),
    "rho_grid": _listed(_float),
    "sigma_grid": _listed(_float),
    "sweep": {"axis": _axis, "values": _listed(_text), "runs": _int},
    "runs": _int,
    "master_seed": _int,
    "oversupply": _strategy,
    "ciq": {"grid_step": _float, "max_iterations": _int},
    "bsp": {"grid_points": _int},
    "convergence": {"dB_grid": _listed(_float), "n_users_grid": _listed(_int)},
    "free_rider_bins": _int,
    "welfare_convention": _convention,
    "workers": _int,
    "output_dir": _text,
}

_SECTIONS = ("population", "server", "schedule", "sweep", "ciq", "bsp", "convergence")


def _lines(node: Optional[yaml.Node], prefix: str = "") -> Dict[str, int]:
    lines: Dict[str, int] = {}
    if not isinstance(node, yaml.MappingNode):
        return lines
    for key_node, value_node in node.value:
        key = f"{prefix}{key_node.value}"
        lines[key] = key_node.start_mark.line + 1
        lines.update(_lines(value_node, f"{key}."))
    return lines


def _leaves(schema: Dict[str, Any], prefix: str = "") -> List[str]:
    keys: List[str] = []
    for name, entry in schema.items():
        if isinstance(entry, dict):
            keys.extend(_leaves(entry, f"{prefix}{name}."))
        else:
            keys.append(f"{prefix}{name}")
    return keys


def _parse_section(
    raw: Any,
    schema: Dict[str, Any],
    lines: Dict[str, int],
    prefix: str,
    parsed: Dict[str, Any],
) -> None:
    where = prefix.rstrip(".") or "config"
    if not isinstance(raw, dict):
        line = lines.get(where)
        at = f" (line {line})" if line else ""
        raise ConfigError(
            f"{where}{at}: expected a mapping, got {type(raw).__name__}",
            {"key": where, "line": line},
        )
    for name, value in raw.items():
        key = f"{prefix}{name}"
        line = lines.get(key)
        entry = schema.get(name)
        if entry is None:
            raise ConfigError(
                f"unknown key '{key}' (line {line})", {"key": key, "line": line}
            )
        if isinstance(entry, dict):
            _parse_section({} if value is None else value, entry, lines, f"{key}.", parsed)
            continue
        try:
            parsed[key] = entry(value, key)
        except ConfigError as error:
            raise ConfigError(f"{error} (line {line})", {"key": key, "line": line}) from error


def _build(parsed: Dict[str, Any]) -> ExperimentConfig:
    defaults = ExperimentConfig()
    updates: Dict[str, Any] = {}
    for section in _SECTIONS:
        values = {
            key.split(".", 1)[1]: value
            for key, value in parsed.items()
            if key.startswith(f"{section}.")
        }
        if values:
            try:
                updates[section] = replace(getattr(defaults, section), **values)
            except DomainError as error:
                raise ConfigError(f"{section}: {error}", {"key": section}) from error
    for key, value in parsed.items():
        if "." not in key:
            updates[key] = value
    config = replace(defaults, **updates)
    validate_config(config)
    return config


def validate_config(config: ExperimentConfig) -> None:
    """Cross-field checks that single-key parsing cannot make."""
    if config.runs < 1:
        raise ConfigError(f"runs must be at least 1, got {config.runs}")
    if config.sweep.runs < 1:
        raise ConfigError(f"sweep.runs must be at least 1, got {config.sweep.runs}")
    if config.population.n_users < 1:
        raise ConfigError("population.n_users must be at least 1")
    if not 0.0 <= config.population.k <= 1.0:
        raise ConfigError(f"population.k must lie in [0, 1], got {config.population.k}")
    if not config.unit > 0.0:
        raise ConfigError(f"unit must be positive, got {config.unit}")
    if config.workers < 1:
        raise ConfigError(f"workers must be at least 1, got {config.workers}")
    if config.free_rider_bins < 1:
        raise ConfigError(f"free_rider_bins must be at least 1, got {config.free_rider_bins}")
    if config.bsp.grid_points < 1:
        raise ConfigError("bsp.grid_points must be at least 1")
    if any(not 0.0 <= rho <= 1.0 for rho in config.rho_grid):
        raise ConfigError(f"rho_grid entries must lie in [0, 1], got {config.rho_grid}")
    if any(sigma < 0.0 for sigma in config.sigma_grid):
        raise ConfigError(f"sigma_grid entries must be nonnegative, got {config.sigma_grid}")
    if any(dB <= 0.0 for dB in config.convergence.dB_grid):
        raise ConfigError("convergence.dB_grid entries must be positive")
    for name in ("mechanisms", "rho_grid", "sigma_grid"):
        if not getattr(config, name):
            raise ConfigError(f"{name} must not be empty")


def config_from_mapping(
    raw: Optional[Dict[str, Any]], lines: Optional[Dict[str, int]] = None
) -> ExperimentConfig:
    """
    Description: Build an ExperimentConfig from an already loaded mapping.

    Args:
    - raw (dict, optional): Nested mapping following the documented schema.
    - lines (dict, optional): Dotted key to source line, used in error messages.

    Returns: ExperimentConfig with every missing key set to its default. The defaulted keys
    are listed in a single warning.

    Raises: ConfigError for unknown keys, malformed values or inconsistent settings.
    """
    parsed: Dict[str, Any] = {}
    _parse_section(raw or {}, SCHEMA, lines or {}, "", parsed)
    defaulted = [key for key in _leaves(SCHEMA) if key not in parsed]
    if defaulted:
        logger.warning("Config defaults applied for: %s", ", ".join(defaulted))
    return _build(parsed)


def parse_config(path: Optional[PathLike] = None) -> ExperimentConfig:
    """
    Description: Read a YAML experiment configuration in strict mode.

    Args:
    - path (str | Path, optional): Config file. Without one, every default applies.

    Returns: ExperimentConfig.

    Raises: ConfigError naming the key and line of the first problem found.
    """
    if path is None:
        return config_from_mapping({})
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigError(f"cannot read config '{path}': {error}") from error
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as error:
        raise ConfigError(f"invalid YAML in '{path}': {error}") from error
    logger.debug("Loaded config from %s", path)
    return config_from_mapping(raw, _lines(node))


def _plain(value: Any) -> Any:
    if isinstance(value, DistributionSpec):
        return str(value)
    if isinstance(value, (OversupplyStrategy, WelfareConvention)):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def config_to_mapping(config: ExperimentConfig) -> Dict[str, Any]:
    """The effective configuration as plain YAML-serializable values."""
    mapping: Dict[str, Any] = {}
    for name, entry in SCHEMA.items():
        value = getattr(config, name)
        if isinstance(entry, dict):
            mapping[name] = {key: _plain(getattr(value, key)) for key in entry}
        else:
            mapping[name] = _plain(value)
    return mapping


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_mapping(config), sort_keys=False, allow_unicode=True)


def write_config(config: ExperimentConfig, path: PathLike) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(dump_config(config))
    return target


def with_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    runs: Optional[int] = None,
    out: Optional[str] = None,
    strategy: Optional[str] = None,
    rho: Optional[Sequence[float]] = None,
    sigma: Optional[Sequence[float]] = None,
    preset: Optional[str] = None,
    workers: Optional[int] = None,
) -> ExperimentConfig:
    """Apply command-line flags on top of a parsed configuration."""
    updates: Dict[str, Any] = {}
    if seed is not None:
        updates["master_seed"] = seed
    if runs is not None:
        updates["runs"] = runs
        updates["sweep"] = replace(config.sweep, runs=runs)
    if out is not None:
        updates["output_dir"] = out
    if strategy is not None:
        updates["oversupply"] = _strategy(strategy, "--strategy")
    if rho:
        updates["rho_grid"] = tuple(rho)
    if sigma:
        updates["sigma_grid"] = tuple(sigma)
    if preset is not None:
        updates["server"] = replace(config.server, preset=_preset(preset, "--preset"))
    if workers is not None:
        updates["workers"] = workers
    overridden = replace(config, **updates)
    validate_config(overridden)
    if updates:
        logger.info("Command-line overrides: %s", ", ".join(sorted(updates)))
    return overridden
