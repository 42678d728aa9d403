"""Moves, labmoves, runs, and run-level combinators.

A run is a finite sequence of player-labeled moves. Everything else in the
package (game evaluation, strategies, transcripts) consumes the helpers in
this module, so the conventions are fixed here once:

* moves are nonempty printable-ASCII strings without spaces or commas, and
  never equal the reserved sentinel ``SPADE``;
* a replicative move is written as the bitstring followed by ``":"``
  (so ``"01:"``, and bare ``":"`` for the empty bitstring);
* the text form of a run is ``⟨T:move, B:move⟩`` and round-trips bit-exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator

from .errors import LengthCapExceeded, ParseError

SPADE = "♠"

# Largest run enumerate_delays will accept before refusing to enumerate.
DELAY_LENGTH_CAP = 12


class Player(Enum):
    """The two players. The machine is the player whose strategies we run."""

    MACHINE = "T"
    ENVIRONMENT = "B"

    @property
    def token(self) -> str:
        return self.value

    @property
    def opponent(self) -> "Player":
        return Player.ENVIRONMENT if self is Player.MACHINE else Player.MACHINE

    def __invert__(self) -> "Player":
        return self.opponent

    @staticmethod
    def from_token(token: str) -> "Player":
        for p in Player:
            if p.value == token:
                return p
        raise ParseError(f"unknown player token {token!r}")


def is_valid_move(text: str) -> bool:
    """True iff ``text`` is usable as a move."""
    if not text or text == SPADE:
        return False
    return all(0x21 <= ord(c) <= 0x7E and c != "," for c in text)


def check_move(text: str) -> str:
    if not is_valid_move(text):
        raise ParseError(f"invalid move {text!r}")
    return text


@dataclass(frozen=True)
class Labmove:
    player: Player
    move: str

    def __post_init__(self):
        check_move(self.move)

    def negate(self) -> "Labmove":
        return Labmove(self.player.opponent, self.move)

    def text(self) -> str:
        return f"{self.player.token}:{self.move}"

    def __repr__(self) -> str:  # keeps pytest diffs readable
        return f"<{self.text()}>"


Run = tuple[Labmove, ...]

EMPTY_RUN: Run = ()


def run_of(*items: Labmove | tuple[Player, str]) -> Run:
    """Build a run from labmoves or (player, move) pairs."""
    out = []
    for it in items:
        out.append(it if isinstance(it, Labmove) else Labmove(*it))
    return tuple(out)


def tm(move: str) -> Labmove:
    """Machine-labeled move."""
    return Labmove(Player.MACHINE, move)


def bm(move: str) -> Labmove:
    """Environment-labeled move."""
    return Labmove(Player.ENVIRONMENT, move)


def negate_run(g: Run) -> Run:
    """Flip every label, leave moves alone. Involutive."""
    return tuple(lm.negate() for lm in g)


def project_player(g: Run, p: Player) -> Run:
    """The subsequence of ``g`` carrying ``p``'s label."""
    return tuple(lm for lm in g if lm.player is p)


def project_prefix(g: Run, prefix: str) -> Run:
    """Keep labmoves whose move starts with ``prefix``, strip the prefix."""
    out = []
    for lm in g:
        if lm.move.startswith(prefix) and len(lm.move) > len(prefix):
            out.append(Labmove(lm.player, lm.move[len(prefix):]))
    return tuple(out)


_BITS_MOVE = re.compile(r"^([01]*)\.(.+)$", re.DOTALL)
_REPLICATIVE = re.compile(r"^([01]*):$")


def is_bitstring(s: str) -> bool:
    return all(c in "01" for c in s)


def bits_prefix(w: str, u: str) -> bool:
    """Bitstring prefix order: w comes no later than u on one branch."""
    return u.startswith(w)


def split_bits_move(move: str) -> tuple[str, str] | None:
    """Decompose ``"w.rest"`` into (bitstring, rest), else None."""
    m = _BITS_MOVE.match(move)
    if m is None:
        return None
    return m.group(1), m.group(2)


def split_replicative(move: str) -> str | None:
    """Return the bitstring of a replicative move ``"w:"``, else None."""
    m = _REPLICATIVE.match(move)
    return None if m is None else m.group(1)


def project_bits(g: Run, u: str) -> Run:
    """Keep labmoves ``p(w.rest)`` with ``w`` a prefix of ``u``; strip ``w.``.

    Replicative moves and moves addressed off the ``u`` branch are dropped.
    """
    if not is_bitstring(u):
        raise ParseError(f"not a bitstring: {u!r}")
    out = []
    for lm in g:
        parts = split_bits_move(lm.move)
        if parts is None:
            continue
        w, rest = parts
        if bits_prefix(w, u):
            out.append(Labmove(lm.player, rest))
    return tuple(out)


def is_delay(d: Run, g: Run, p: Player) -> bool:
    """True iff ``d`` is a ``p``-delay of ``g``.

    Both player projections must agree, and whenever the k-th move of
    ``p``'s opponent precedes the n-th move of ``p`` in ``g``, the same
    precedence must hold in ``d``.
    """
    q = p.opponent
    if project_player(d, p) != project_player(g, p):
        return False
    if project_player(d, q) != project_player(g, q):
        return False
    pred_d = _pred_counts(d, p)
    pred_g = _pred_counts(g, p)
    return all(pd >= pg for pd, pg in zip(pred_d, pred_g))


def _pred_counts(g: Run, p: Player) -> list[int]:
    """For each n, how many opponent moves precede the n-th ``p``-move."""
    counts = []
    seen_opponent = 0
    for lm in g:
        if lm.player is p:
            counts.append(seen_opponent)
        else:
            seen_opponent += 1
    return counts


def enumerate_delays(g: Run, p: Player, cap: int = DELAY_LENGTH_CAP) -> set[Run]:
    """The exact set of ``p``-delays of ``g``.

    Interleaves the two player projections, placing the n-th ``p``-move only
    once every opponent move that preceded it in ``g`` has been placed.
    Refuses runs longer than ``cap``.
    """
    if len(g) > cap:
        raise LengthCapExceeded(f"run of length {len(g)} exceeds cap {cap}")
    own = list(project_player(g, p))
    other = list(project_player(g, p.opponent))
    pred = _pred_counts(g, p)
    out: set[Run] = set()

    def build(i: int, j: int, acc: list[Labmove]) -> None:
        if i == len(own) and j == len(other):
            out.add(tuple(acc))
            return
        if j < len(other):
            acc.append(other[j])
            build(i, j + 1, acc)
            acc.pop()
        if i < len(own) and j >= pred[i]:
            acc.append(own[i])
            build(i + 1, j, acc)
            acc.pop()

    build(0, 0, [])
    return out


LANGLE = "⟨"
RANGLE = "⟩"


def format_run(g: Run) -> str:
    return LANGLE + ", ".join(lm.text() for lm in g) + RANGLE


def parse_run(text: str) -> Run:
    """Parse the ``⟨T:move, B:move⟩`` form (ASCII ``<...>`` also accepted)."""
    s = text.strip()
    if s.startswith(LANGLE) and s.endswith(RANGLE):
        body = s[len(LANGLE):-len(RANGLE)]
    elif s.startswith("<") and s.endswith(">"):
        body = s[1:-1]
    else:
        raise ParseError(f"run must be bracketed: {text!r}")
    body = body.strip()
    if not body:
        return EMPTY_RUN
    items = []
    for chunk in body.split(","):
        chunk = chunk.strip()
        if len(chunk) < 3 or chunk[1] != ":":
            raise ParseError(f"bad labmove {chunk!r}")
        items.append(Labmove(Player.from_token(chunk[0]), chunk[2:]))
    return tuple(items)
