"""FIFO event queue process.

Offers ``qempty`` while empty, ``deq(first)`` while nonempty, and at all
times ``enq'`` for any event and ``halt'`` on ``q(id)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .events import Event
from .labels import ANY, PLAIN, PRIMED, ActionLabel, Offer, sub_q, unify


class IllegalStep(RuntimeError):
    """A label was applied to a process that does not offer it."""


@dataclass(frozen=True)
class EventQueue:
    qid: str
    items: tuple[Event, ...] = ()
    halted: bool = False

    kind = "queue"

    @property
    def name(self) -> str:
        return sub_q(self.qid)

    @property
    def alive(self) -> bool:
        return not self.halted

    def offers(self, world=None) -> list[Offer]:
        if self.halted:
            return []
        if self.items:
            head = Offer(ActionLabel("deq", self.qid, PLAIN, (self.items[0],)), "deq")
        else:
            head = Offer(ActionLabel("qempty", self.qid, PLAIN), "qempty")
        return [
            head,
            Offer(ActionLabel("enq", self.qid, PRIMED, (ANY,)), "enq"),
            Offer(ActionLabel("halt", self.name, PRIMED), "halt"),
        ]

    def fire(self, tag, payload: tuple, world=None):
        if tag == "qempty":
            return self, ()
        if tag == "deq":
            return replace(self, items=self.items[1:]), ()
        if tag == "enq":
            return replace(self, items=self.items + (payload[0],)), ()
        if tag == "halt":
            return replace(self, halted=True), ()
        raise IllegalStep(f"{self.name}: unknown step {tag!r}")

    def snapshot(self) -> list:
        return [e.to_json() for e in self.items]


def queue_offers(q: EventQueue) -> list[ActionLabel]:
    return [o.label for o in q.offers()]


def queue_apply(q: EventQueue, label: ActionLabel) -> EventQueue:
    """Apply the complementary half of ``label`` to ``q``.

    ``label`` is the partner's concrete label (e.g. ``enq_in(3)(e)`` from a
    producer) or one of the queue's own offered labels.
    """
    for offer in q.offers():
        own = offer.label
        if own == label:
            return q.fire(offer.tag, own.payload)[0]
        m = unify(own, label)
        if m is not None:
            return q.fire(offer.tag, m[1])[0]
    raise IllegalStep(f"{q.name} does not offer {label}")
