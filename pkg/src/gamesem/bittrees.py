"""Bitstring trees and their colored variant.

A bitstring tree is a nonempty, prefix-closed, sibling-paired set of
bitstrings: the empty string is the root, and whenever ``w0`` is present so
is ``w1``. These trees record how game copies have been replicated; the
colored variant interleaves two replication structures and is used by the
strategy that merges a doubled replication into a single one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import NotALeaf, ParseError
from .runs import (
    Labmove,
    Player,
    Run,
    is_bitstring,
    split_bits_move,
    split_replicative,
)


@dataclass(frozen=True)
class BT:
    """A finite bitstring tree."""

    members: frozenset[str]

    def __post_init__(self):
        if "" not in self.members:
            raise ParseError("a bitstring tree must contain the root")
        for w in self.members:
            if not is_bitstring(w):
                raise ParseError(f"not a bitstring: {w!r}")
            if w and w[:-1] not in self.members:
                raise ParseError(f"tree not prefix-closed at {w!r}")
            sibling = w[:-1] + ("1" if w.endswith("0") else "0")
            if w and sibling not in self.members:
                raise ParseError(f"unpaired sibling of {w!r}")

    def __contains__(self, w: str) -> bool:
        return w in self.members

    def is_leaf(self, w: str) -> bool:
        return w in self.members and w + "0" not in self.members

    def leaves(self) -> list[str]:
        return sorted(w for w in self.members if self.is_leaf(w))

    def nodes(self) -> list[str]:
        return sorted(self.members)

    def split(self, w: str) -> "BT":
        """Replicate at leaf ``w``: add its two children."""
        if not self.is_leaf(w):
            raise NotALeaf(f"{w!r} is not a leaf")
        return BT(self.members | {w + "0", w + "1"})


ROOT_BT = BT(frozenset({""}))


def bt_of(*members: str) -> BT:
    return BT(frozenset(members) | {""})


class TreeReport(NamedTuple):
    prelegal: bool
    tree: BT


def replicator(mode: str) -> Player:
    """Which player may replicate: the environment for ``brec`` (plain
    recurrence), the machine for ``bcor`` (co-recurrence)."""
    if mode == "brec":
        return Player.ENVIRONMENT
    if mode == "bcor":
        return Player.MACHINE
    raise ParseError(f"unknown mode {mode!r}")


def tree_of(t: BT, phi: Run, mode: str) -> TreeReport:
    """Replay ``phi`` over ``t``, growing the tree at replicative moves.

    A replicative move must be made by the replicating player at a leaf; a
    nonreplicative move must be addressed to an existing node. The first
    violation stops the replay with ``prelegal=False`` and the tree built so
    far.
    """
    rep_player = replicator(mode)
    tree = t
    for lm in phi:
        w = split_replicative(lm.move)
        if w is not None:
            if lm.player is not rep_player or not tree.is_leaf(w):
                return TreeReport(False, tree)
            tree = tree.split(w)
            continue
        parts = split_bits_move(lm.move)
        if parts is None or parts[0] not in tree:
            return TreeReport(False, tree)
    return TreeReport(True, tree)


# --- colored bitstrings ---

BLUE = "b"
YELLOW = "y"

Colored = tuple[tuple[str, str], ...]


def cbits(bits: str, colors: str) -> Colored:
    """Pair up a content string with a per-bit color string."""
    if len(bits) != len(colors):
        raise ParseError("content and colors must have equal length")
    if not is_bitstring(bits):
        raise ParseError(f"not a bitstring: {bits!r}")
    if any(c not in (BLUE, YELLOW) for c in colors):
        raise ParseError(f"colors must be drawn from {BLUE!r}/{YELLOW!r}")
    return tuple(zip(bits, colors))


class Projections(NamedTuple):
    content: str
    blue: str
    yellow: str


def cbt_projections(v: Colored) -> Projections:
    """Erase colors for the content; keep one color's bits for each side."""
    content = "".join(bit for bit, _ in v)
    blue = "".join(bit for bit, color in v if color == BLUE)
    yellow = "".join(bit for bit, color in v if color == YELLOW)
    return Projections(content, blue, yellow)


def is_cbt(s: Iterable[Colored]) -> bool:
    """Check the three colored-tree conditions.

    The members must be prefix-closed with contents forming a bitstring
    tree, contents must identify members uniquely, and the two children of
    any member must carry the same color.
    """
    members = set(s)
    if not members:
        return False
    contents = [cbt_projections(v).content for v in members]
    if len(set(contents)) != len(members):
        return False
    try:
        BT(frozenset(contents))
    except ParseError:
        return False
    for v in members:
        if v and v[:-1] not in members:
            return False
    for v in members:
        kids = [c for c in members if c and c[:-1] == v]
        zero = [c for c in kids if c[-1][0] == "0"]
        one = [c for c in kids if c[-1][0] == "1"]
        if zero and one and zero[0][-1][1] != one[0][-1][1]:
            return False
    return True


def cbt_extend(v: Colored, bit: str, color: str) -> Colored:
    return v + ((bit, color),)
