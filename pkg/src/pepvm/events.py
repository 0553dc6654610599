"""Events exchanged between instances and Machine Control.

An event is the 4-tuple ``(sender, destination, type, ack)``.  Instance id 0
means "no destination" (or "no context") and never names a live instance.
"""

from __future__ import annotations

import re
from typing import Iterable, NamedTuple

ACK_SUFFIX = "_ack"
HALT = "halt"

_TYPE_NAME = re.compile(r"[A-Za-z0-9_]+\Z")


class UnknownEventType(ValueError):
    """Raised when an event type is not part of the program's alphabet."""


class Event(NamedTuple):
    sndr: int
    dest: int
    etype: str
    ack: bool

    def to_json(self) -> list:
        return [self.sndr, self.dest, self.etype, int(self.ack)]

    @classmethod
    def from_json(cls, data) -> "Event":
        s, d, t, a = data
        return cls(int(s), int(d), str(t), bool(a))

    def __str__(self) -> str:
        return f"({self.sndr}, {self.dest}, {self.etype!r}, {'T' if self.ack else 'F'})"


# Initial value of an instance's "last event"; the empty type is never valid
# anywhere else.
SENTINEL = Event(0, 0, "", False)


def is_type_name(name: str) -> bool:
    return bool(_TYPE_NAME.match(name))


def make_event(sndr: int, dest: int, etype: str, ack: bool,
               alphabet: Iterable[str] | None = None) -> Event:
    """Build an event, checking ``etype`` against ``alphabet`` when given."""
    if sndr < 0 or dest < 0:
        raise ValueError(f"instance ids are natural numbers, got {sndr}, {dest}")
    if not is_type_name(etype):
        raise UnknownEventType(f"invalid event type {etype!r}")
    if alphabet is not None and etype not in alphabet:
        raise UnknownEventType(f"event type {etype!r} is not in the program alphabet")
    return Event(sndr, dest, etype, bool(ack))


def ack_type_of(etype: str) -> str:
    return etype + ACK_SUFFIX
