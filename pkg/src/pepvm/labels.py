"""Action labels, offer patterns and the encapsulation set.

Every sequential process offers a list of :class:`Offer` values.  An offer's
label may contain *patterns* (``ANY`` or a :class:`Where` predicate) in place of
concrete payload elements; two complementary offers communicate when one
side's pattern accepts the other side's concrete values.  This keeps the
enabled set finite even though the algebraic terms sum over infinite domains.
"""

from __future__ import annotations

import re
from typing import Any, Callable, NamedTuple

PLAIN = ""
PRIMED = "'"
COMM = "''"

# Names of communicating actions; everything else is an internal step.
COMM_NAMES = frozenset({
    "qempty", "deq", "enq", "get", "not_set", "set", "unset",
    "out", "distrib", "start", "new_id", "halt",
})


class _Any:
    __slots__ = ()

    def __repr__(self) -> str:
        return "ANY"


ANY = _Any()


class Where(NamedTuple):
    """Pattern element accepting any concrete value for which ``test`` holds."""

    test: Callable[[Any], bool]
    desc: str = "?"

    def __repr__(self) -> str:
        return f"<{self.desc}>"


def is_pattern(x: Any) -> bool:
    return x is ANY or isinstance(x, Where)


class ActionLabel(NamedTuple):
    name: str
    sub: Any  # subscript string such as "in(3)", "ctx(3)", "3", "MC"; may be a pattern
    polarity: str = PLAIN
    payload: tuple = ()

    def communicated(self, sub: str, payload: tuple) -> "ActionLabel":
        return ActionLabel(self.name, sub, COMM, payload)

    def __str__(self) -> str:
        args = ", ".join(_fmt(p) for p in self.payload)
        body = f"{self.name}{self.polarity}_{self.sub}"
        return f"{body}({args})" if self.payload else body


def _fmt(x: Any) -> str:
    if isinstance(x, str):
        return repr(x)
    return str(x)


class Offer(NamedTuple):
    """A label offered by a process plus an opaque tag the process uses when
    the offer fires."""

    label: ActionLabel
    tag: Any = None


def internal(name: str, *payload: Any, tag: Any = None) -> Offer:
    return Offer(ActionLabel(name, "", PLAIN, tuple(payload)), tag)


def _unify_elem(a: Any, b: Any) -> tuple[bool, Any]:
    pa, pb = is_pattern(a), is_pattern(b)
    if pa and pb:
        # both open: never materialised (would range over an infinite domain)
        return False, None
    if pa:
        a, b = b, a
    elif not pb:
        return a == b, a
    # a concrete, b pattern
    if b is ANY or b.test(a):
        return True, a
    return False, None


def unify(a: ActionLabel, b: ActionLabel) -> tuple[Any, tuple] | None:
    """Match two complementary labels; return the concrete (sub, payload) or None."""
    if a.name != b.name or {a.polarity, b.polarity} != {PLAIN, PRIMED}:
        return None
    if len(a.payload) != len(b.payload):
        return None
    ok, sub = _unify_elem(a.sub, b.sub)
    if not ok:
        return None
    out = []
    for x, y in zip(a.payload, b.payload):
        ok, v = _unify_elem(x, y)
        if not ok:
            return None
        out.append(v)
    return sub, tuple(out)


# --- subscripts ------------------------------------------------------------

def sub_in(n: int) -> str:
    return f"in({n})"


def sub_out(n: int) -> str:
    return f"out({n})"


def sub_ctx(n: int) -> str:
    return f"ctx({n})"


def sub_reactions(n: int) -> str:
    return f"reactions({n})"


def sub_q(qid: str) -> str:
    return f"q({qid})"


MC = "MC"
MC_IN = "MC(in)"

_QUEUE_IDS = re.compile(r"(?:in|out)\(\d+\)\Z|MC\Z")
_TABLE_IDS = re.compile(r"(?:ctx|reactions)\(\d+\)\Z")
_NUMERIC = re.compile(r"\d+\Z")
_HALT_IDS = re.compile(
    r"q\((?:in\(\d+\)|out\(\d+\)|MC)\)\Z|(?:ctx|reactions|in|out)\(\d+\)\Z|MC\(in\)\Z")


def in_encapsulation(name: str, sub: str) -> bool:
    """True when ``name_sub`` (primed or not) belongs to the encapsulation set,
    i.e. may only occur as half of a communication."""
    sub = str(sub)
    if name in ("qempty", "deq", "enq"):
        return bool(_QUEUE_IDS.match(sub))
    if name in ("get", "not_set", "set", "unset"):
        return bool(_TABLE_IDS.match(sub))
    if name in ("out", "distrib", "start", "new_id"):
        return bool(_NUMERIC.match(sub))
    if name == "halt":
        return bool(_NUMERIC.match(sub) or _HALT_IDS.match(sub))
    return False
