"""Run configuration: command-line flags over an optional key=value file over defaults."""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv", "text")


class ConfigError(ValueError):
    """Raised for an invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    command: str = "verify"
    example: Optional[str] = None
    which: Optional[str] = None
    f_expr: Optional[str] = None
    g_expr: Optional[str] = None
    values: Optional[str] = None
    rmin: Optional[float] = None
    rmax: Optional[float] = None
    rcount: int = 16
    geometric: bool = True
    tol_quad: float = 1e-4
    tol_root: float = 1e-12
    slack_floor: float = 1.0
    out: Path = Path("out")
    format: str = "json"

    def __post_init__(self) -> None:
        if self.tol_quad <= 0 or self.tol_root <= 0 or self.slack_floor <= 0:
            raise ConfigError("容差必须为正数")
        if self.rmin is not None and self.rmin <= 0:
            raise ConfigError(f"rmin 必须为正: {self.rmin}")
        if self.rmin is not None and self.rmax is not None and self.rmin >= self.rmax:
            raise ConfigError(f"半径网格无效: rmin = {self.rmin} 不小于 rmax = {self.rmax}")
        if self.rcount < 4:
            raise ConfigError(f"rcount 至少为 4: {self.rcount}")
        if self.format not in FORMATS:
            raise ConfigError(f"未知的输出格式: {self.format}")

    def grid(self, rmin: float, rmax: float) -> np.ndarray:
        """Radius grid with this config's overrides applied to the given defaults."""
        lo = self.rmin if self.rmin is not None else rmin
        hi = self.rmax if self.rmax is not None else rmax
        if lo >= hi:
            raise ConfigError(f"半径网格无效: rmin = {lo} 不小于 rmax = {hi}")
        if self.geometric:
            return np.geomspace(lo, hi, self.rcount)
        return np.linspace(lo, hi, self.rcount)

    @classmethod
    def from_sources(cls, namespace: Any = None, config_file: Optional[Path] = None) -> "RunConfig":
        """Flags (non-None attributes of ``namespace``) win over the file, the file over defaults."""
        merged: Dict[str, Any] = {}
        if config_file is not None:
            merged.update(read_config_file(Path(config_file)))
        if namespace is not None:
            for item in fields(cls):
                value = getattr(namespace, item.name, None)
                if value is not None:
                    merged[item.name] = value
        return cls(**_convert(merged))

    def with_overrides(self, **changes: Any) -> "RunConfig":
        return replace(self, **_convert(changes))


_TYPES = {item.name: item.type for item in fields(RunConfig)}


def _to_bool(text: Any) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    if lowered in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(f"无法解析布尔值: {text!r}")


def _convert(raw: Mapping[str, Any]) -> Dict[str, Any]:
    converted: Dict[str, Any] = {}
    for key, value in raw.items():
        if key not in _TYPES:
            raise ConfigError(f"未知的配置项: {key}")
        kind = _TYPES[key]
        try:
            if key in {"rmin", "rmax", "tol_quad", "tol_root", "slack_floor"}:
                converted[key] = float(value)
            elif key == "rcount":
                converted[key] = int(value)
            elif key == "geometric":
                converted[key] = _to_bool(value)
            elif key == "out":
                converted[key] = Path(value)
            else:
                converted[key] = value if value is None else str(value)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"配置项 {key} 的值无效: {value!r} ({kind})") from exc
    return converted


def read_config_file(path: Path) -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; keys may use ``-`` or ``_``."""
    if not path.exists():
        raise ConfigError(f"配置文件缺失: {path}")
    entries: Dict[str, str] = {}
    with path.open("r", encoding="utf-8") as stream:
        for number, line in enumerate(stream, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{number}: 缺少 '='")
            key, value = (part.strip() for part in text.split("=", 1))
            key = key.lstrip("-").replace("-", "_")
            if key == "fmt":
                key = "format"
            entries[key] = value
    logger.debug("config file %s: %s", path, sorted(entries))
    return entries
