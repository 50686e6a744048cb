"""``key = value`` configuration files and option precedence (CLI > file > default)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from opinion_detect.classifier.newton import DEFAULT_C, DEFAULT_MAX_ITER, DEFAULT_TOL
from opinion_detect.corpus import DEFAULT_THRESHOLD


class ConfigError(ValueError):
    pass


def _bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


PATH_KEYS = frozenset(
    {"corpus", "keywords", "embedding", "lexicon", "labels", "model", "split", "input", "output", "output_dir"}
)

# key -> (parser, default)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "corpus": (str, None),
    "keywords": (str, None),
    "embedding": (str, None),
    "lexicon": (str, None),
    "labels": (str, None),
    "model": (str, None),
    "split": (str, None),
    "input": (str, None),
    "output": (str, None),
    "output_dir": (str, "."),
    "threshold": (int, DEFAULT_THRESHOLD),
    "test_fraction": (float, 0.2),
    "seed": (int, 0),
    "split_mode": (str, "stratified"),
    "C": (float, DEFAULT_C),
    "tol": (float, DEFAULT_TOL),
    "max_iter": (int, DEFAULT_MAX_ITER),
    "cg_max_iter": (int, None),
    "lenient": (_bool, False),
}


def read_config(path: str | Path) -> dict[str, Any]:
    """Parse a config file. Relative paths resolve against the file's directory."""
    path = Path(path)
    base = path.parent
    values: dict[str, Any] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            parser = SCHEMA[key][0]
            try:
                parsed = parser(value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
            if key in PATH_KEYS:
                parsed = str(base / parsed)
            values[key] = parsed
    return values


@dataclass
class Options:
    """Resolved options for one command."""

    values: dict[str, Any] = field(default_factory=dict)

    def __getattr__(self, name: str) -> Any:
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None


def resolve(cli: dict[str, Any], config_path: str | None, keys) -> Options:
    file_values = read_config(config_path) if config_path else {}
    values = {}
    for key in keys:
        if cli.get(key) is not None:
            values[key] = cli[key]
        elif key in file_values:
            values[key] = file_values[key]
        else:
            values[key] = SCHEMA[key][1]
    return Options(values)
