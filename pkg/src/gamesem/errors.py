"""Exception types shared across the workbench."""

from __future__ import annotations


class GamesemError(Exception):
    """Base class for every error this package raises deliberately."""


class ParseError(GamesemError):
    """Malformed text input; carries a position when one is known."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class LengthCapExceeded(GamesemError):
    """A run is too long for an exhaustive enumeration to be sane."""


class CapExceeded(GamesemError):
    """A materialization or search hit its configured resource cap."""


class BlowupGuard(CapExceeded):
    """A move-set enumeration would exceed its configured cap."""


class NotUnilegal(GamesemError):
    """The given position is not a legal move sequence for every valuation."""


class NotALeaf(GamesemError):
    """The bitstring is not a leaf of the tree."""


class NotANode(GamesemError):
    """The bitstring is not a node of the tree."""


class IllegalStep(GamesemError):
    """A single-move evolution step that matches no legal case."""


class NotAdmissible(GamesemError):
    """The interpretation does not qualify for the formula."""


class ShapeMismatch(GamesemError):
    """Agent parameters do not fit the target formula's shape."""


class BudgetExceeded(GamesemError):
    """An interaction consumed its step or fuel allowance."""


class ProofError(GamesemError):
    """A proof object is malformed or fails its rule checks."""
