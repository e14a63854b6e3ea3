"""Scenario scripts shipped with the package."""

from __future__ import annotations

from importlib import resources

from .errors import UnknownName
from .scenario import Scenario, parse_scenario

SUFFIX = ".scn"


def _dir():
    return resources.files(__package__).joinpath("corpus")


def list_builtins() -> list[str]:
    return sorted(p.name[: -len(SUFFIX)] for p in _dir().iterdir() if p.name.endswith(SUFFIX))


def builtin_text(name: str) -> str:
    path = _dir().joinpath(name + SUFFIX)
    if not path.is_file():
        raise UnknownName(f"no builtin scenario {name!r}; try one of {', '.join(list_builtins())}")
    return path.read_text(encoding="utf-8")


def builtin_summary(name: str) -> str:
    for line in builtin_text(name).splitlines():
        if line.startswith("# summary:"):
            return line.split(":", 1)[1].strip()
    return ""


def load_builtin(name: str) -> Scenario:
    return parse_scenario(builtin_text(name), name=name)
