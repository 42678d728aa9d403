"""Game-semantics workbench.

Submodules are imported lazily so that light uses (say, run parsing) do not
pay for the heavier machinery (agents, proof checking, the HTTP service).
"""

from __future__ import annotations

from importlib import import_module
from typing import Any

__version__ = "0.1.0"

_SUBMODULES = (
    "runs",
    "bittrees",
    "games",
    "formulas",
    "interps",
    "agents",
    "proofs",
    "cli",
    "service",
    "errors",
)


def __getattr__(name: str) -> Any:
    if name in _SUBMODULES:
        module = import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__() -> list[str]:
    return sorted(set(globals()) | set(_SUBMODULES))
