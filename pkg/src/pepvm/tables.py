"""Lookup-table process used for context variables and event reactions.

The algebraic table offers ``get``/``not_set`` for every index and ``set'``/
``unset'`` for every index/value pair.  Here the table offers one concrete
``get`` per stored entry, a single ``not_set`` pattern matching any absent
index, and open ``set'``/``unset'`` patterns; the engine materialises them only
against a concrete partner offer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Hashable, Mapping, NamedTuple

from .labels import ANY, PLAIN, PRIMED, ActionLabel, Offer, Where, sub_ctx, sub_reactions
from .queues import IllegalStep


class _NotFound:
    __slots__ = ()

    def __repr__(self) -> str:
        return "not_fnd"


NOT_FND = _NotFound()


class Fnd(NamedTuple):
    value: Any


def qry_pure(entries: Mapping, index: Hashable):
    if index in entries:
        return Fnd(entries[index])
    return NOT_FND


def ins_pure(entries: Mapping, index: Hashable, value: Any) -> dict:
    out = dict(entries)
    out[index] = value
    return out


def dlt_pure(entries: Mapping, index: Hashable) -> dict:
    out = dict(entries)
    out.pop(index, None)
    return out


def _freeze(entries: Mapping) -> tuple:
    return tuple(sorted(entries.items(), key=lambda kv: _sort_key(kv[0])))


def _sort_key(k):
    # ctx keys are strings, reaction keys are (machine, type) pairs
    return (0, k) if isinstance(k, str) else (1, k)


@dataclass(frozen=True)
class LookupTable:
    tid: str
    items: tuple = ()
    halted: bool = False

    kind = "table"

    @classmethod
    def of(cls, tid: str, entries: Mapping) -> "LookupTable":
        return cls(tid, _freeze(entries))

    @cached_property
    def entries(self) -> dict:
        return dict(self.items)

    @property
    def name(self) -> str:
        return self.tid

    @property
    def alive(self) -> bool:
        return not self.halted

    def offers(self, world=None) -> list[Offer]:
        if self.halted:
            return []
        tid = self.tid
        entries = self.entries
        out = [Offer(ActionLabel("get", tid, PLAIN, (i, v)), "get") for i, v in self.items]
        out.append(Offer(ActionLabel(
            "not_set", tid, PLAIN, (Where(lambda i: i not in entries, "unset index"),)), "not_set"))
        out.append(Offer(ActionLabel("set", tid, PRIMED, (ANY, ANY)), "set"))
        out.append(Offer(ActionLabel("unset", tid, PRIMED, (ANY,)), "unset"))
        out.append(Offer(ActionLabel("halt", tid, PRIMED), "halt"))
        return out

    def fire(self, tag, payload: tuple, world=None):
        if tag in ("get", "not_set"):
            return self, ()
        if tag == "set":
            return LookupTable.of(self.tid, ins_pure(self.entries, *payload)), ()
        if tag == "unset":
            return LookupTable.of(self.tid, dlt_pure(self.entries, payload[0])), ()
        if tag == "halt":
            return LookupTable(self.tid, self.items, True), ()
        raise IllegalStep(f"{self.tid}: unknown step {tag!r}")

    def snapshot(self) -> list:
        return [[list(k) if isinstance(k, tuple) else k, v] for k, v in self.items]


def table_offers(t: LookupTable) -> list[ActionLabel]:
    return [o.label for o in t.offers()]


def context_table(instance_id: int, ctxid: int) -> LookupTable:
    return LookupTable.of(sub_ctx(instance_id), {"ctx": ctxid})


def reaction_table(instance_id: int, ctxid: int) -> LookupTable:
    """Initial reaction table: the default halt reaction unless there is no context."""
    entries = {} if ctxid == 0 else {(ctxid, "halt"): "halt"}
    return LookupTable.of(sub_reactions(instance_id), entries)
