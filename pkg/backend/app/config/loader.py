"""INI configuration loading.

Files hold the sections ``[encoder]``, ``[decoder]``, ``[train]`` and ``[data]``.
Values are coerced to the dataclass field types; tuple fields are
comma-separated. The objective keys ``lambda``, ``use_ctc`` and
``use_attention`` live in ``[train]``.
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, fields, replace
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union, get_type_hints

from ..exceptions import ConfigError
from .settings import AppConfig

# (section, key) -> (AppConfig attribute, dataclass field)
_ALIASES = {
    ("train", "lambda"): ("objective", "lambda_id"),
    ("train", "use_ctc"): ("objective", "use_ctc"),
    ("train", "use_attention"): ("objective", "use_attention"),
}
_SECTIONS = ("encoder", "decoder", "train", "data")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _resolve(section: str, key: str) -> Tuple[str, str]:
    if section not in _SECTIONS:
        raise ConfigError(f"unknown config section [{section}]", key=f"{section}.{key}")
    return _ALIASES.get((section, key), (section, key))


def _field_type(cfg: AppConfig, attr: str, name: str):
    target = getattr(cfg, attr)
    hints = get_type_hints(type(target))
    if name not in {f.name for f in fields(target)}:
        raise ConfigError(f"unknown config key '{name}' in [{attr}]", key=name)
    return hints[name]


def _coerce(raw: str, hint, key: str) -> Any:
    text = raw.strip()
    optional = getattr(hint, "__origin__", None) is Union and type(None) in hint.__args__
    if optional:
        if text.lower() in {"", "none"}:
            return None
        hint = next(arg for arg in hint.__args__ if arg is not type(None))
    try:
        if getattr(hint, "__origin__", None) is tuple:
            return tuple(int(part) for part in text.split(",") if part.strip())
        if hint is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(text)
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"value '{raw}' is not valid for '{key}'", key=key) from None


def apply_setting(cfg: AppConfig, section: str, key: str, raw: str) -> AppConfig:
    """Return a copy of ``cfg`` with one ``section.key`` set from text."""
    attr, name = _resolve(section, key)
    value = _coerce(raw, _field_type(cfg, attr, name), f"{section}.{key}")
    return replace(cfg, **{attr: replace(getattr(cfg, attr), **{name: value})})


def parse_override(text: str) -> Tuple[str, str, str]:
    """Split ``section.key=value``."""
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(f"override '{text}' is not section.key=value", key=text)
    lhs, value = text.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    return section, key, value


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    base: Optional[AppConfig] = None,
) -> AppConfig:
    """Load a config file over ``base`` (desk defaults) and apply overrides.

    Raises:
        ConfigError: For a missing file, unknown section or key, an uncoercible
            value, or a configuration that fails validation.
    """
    from ..validators.parameter_validator import validate_app_config

    cfg = base if base is not None else AppConfig.desk()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file does not exist: {path}", key="--config")
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        for section in parser.sections():
            for key, raw in parser.items(section):
                cfg = apply_setting(cfg, section, key, raw)

    for override in overrides:
        cfg = apply_setting(cfg, *parse_override(override))

    valid, error = validate_app_config(cfg)
    if not valid:
        raise ConfigError(error or "invalid configuration")
    return cfg


def config_snapshot(cfg: AppConfig) -> Dict[str, Dict[str, Any]]:
    """Section → key → value view of ``cfg`` using file key names."""
    snapshot = {section: dict(asdict(getattr(cfg, section))) for section in _SECTIONS}
    objective = asdict(cfg.objective)
    snapshot["train"]["lambda"] = objective["lambda_id"]
    snapshot["train"]["use_ctc"] = objective["use_ctc"]
    snapshot["train"]["use_attention"] = objective["use_attention"]
    return snapshot


def dump_config(cfg: AppConfig, path: Union[str, Path]) -> Path:
    """Write ``cfg`` as an INI file that ``load_config`` reads back unchanged."""
    parser = configparser.ConfigParser(interpolation=None)
    for section, values in config_snapshot(cfg).items():
        parser[section] = {
            key: _render(value) for key, value in values.items()
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        parser.write(handle)
    return path


def config_from_snapshot(snapshot: Dict[str, Dict[str, Any]]) -> AppConfig:
    cfg = AppConfig.desk()
    for section, values in snapshot.items():
        for key, value in values.items():
            cfg = apply_setting(cfg, section, key, _render(value))
    return cfg


def _render(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, (tuple, list)):
        return ",".join(str(item) for item in value)
    return str(value)
