"""Machine Control: scheduler, incoming event handler and its queue.

The scheduler keeps the highest assigned id ``n`` and the ordered set of live
instance ids.  Start and halt requests are accepted only while it is idle;
distribution of a dequeued event runs to completion before anything else.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .events import HALT, Event
from .instance import World, init_instance
from .labels import ANY, MC, MC_IN, PLAIN, PRIMED, ActionLabel, Offer, Where, internal, sub_q
from .queues import EventQueue, IllegalStep

IDLE = ("idle",)


@dataclass(frozen=True)
class MCScheduler:
    n: int
    live: tuple
    phase: tuple = IDLE
    done: bool = False

    kind = "sched"
    name = "MC.sched"

    @property
    def alive(self) -> bool:
        return not self.done

    def offers(self, world: World) -> list[Offer]:
        if self.done:
            return []
        ph = self.phase
        tag = ph[0]
        if tag == "idle":
            machines = world.program.machines
            is_machine = Where(lambda m: m in machines, "machine")
            out = []
            for i in self.live:
                out.append(Offer(ActionLabel("start", str(i), PRIMED, (is_machine,)), ("start", i)))
                out.append(Offer(ActionLabel("halt", str(i), PRIMED), ("halt", i)))
            out.append(Offer(ActionLabel("deq", MC, PRIMED, (ANY,)), "deq"))
            return out
        if tag == "new_id":
            return [Offer(ActionLabel("new_id", str(ph[1]), PLAIN, (self.n + 1,)), "new_id")]
        if tag == "announce":
            e = Event(ph[1], 0, HALT, False)
            return [Offer(ActionLabel("enq", MC, PLAIN, (e,)), "announce")]
        if tag == "distrib":
            e = ph[1]
            return [Offer(ActionLabel("distrib", str(i), PLAIN, (e,)), ("distrib", i))
                    for i in sorted(ph[2])]
        if tag == "drop":
            return [internal("drop", ph[2], ph[1], tag="drop")]
        if tag == "teardown":
            return [Offer(ActionLabel("halt", sub, PLAIN), ("teardown", sub))
                    for sub in sorted(ph[1])]
        raise AssertionError(ph)

    def fire(self, tag, payload: tuple, world: World):
        ph = self.phase
        if isinstance(tag, tuple):
            kind = tag[0]
            if kind == "start":
                return replace(self, phase=("new_id", tag[1], payload[0])), ()
            if kind == "halt":
                return replace(self, phase=("announce", tag[1])), ()
            if kind == "distrib":
                left = ph[2] - {tag[1]}
                if left:
                    return replace(self, phase=("distrib", ph[1], left)), ()
                return replace(self, phase=IDLE), ()
            if kind == "teardown":
                left = ph[1] - {tag[1]}
                return replace(self, phase=("teardown", left), done=not left), ()
        if tag == "new_id":
            _, requester, machine = ph
            new = self.n + 1
            inst = init_instance(world.program.machines[machine], new, requester, world)
            return MCScheduler(new, self.live + (new,)), tuple(inst.processes())
        if tag == "announce":
            live = tuple(i for i in self.live if i != ph[1])
            if not live:
                return MCScheduler(self.n, live, ("teardown", frozenset({MC_IN, sub_q(MC)}))), ()
            return MCScheduler(self.n, live), ()
        if tag == "deq":
            return replace(self, phase=self._route(payload[0])), ()
        if tag == "drop":
            return replace(self, phase=IDLE), ()
        raise IllegalStep(f"{self.name}: unknown step {tag!r}")

    def _route(self, e: Event) -> tuple:
        if e.dest != 0:
            if e.dest in self.live:
                return ("distrib", e, frozenset({e.dest}))
            return ("drop", e, "dead-dest")
        targets = frozenset(self.live) - {e.sndr}
        if not targets:
            return ("drop", e, "no-recipient")
        return ("distrib", e, targets)


@dataclass(frozen=True)
class MCInHandler:
    """Receives ``out`` events from instances and enqueues them for distribution."""

    holding: Optional[Event] = None
    halted: bool = False

    kind = "mcin"
    name = "MC.in"

    @property
    def alive(self) -> bool:
        return not self.halted

    def offers(self, world: World) -> list[Offer]:
        if self.halted:
            return []
        halt = Offer(ActionLabel("halt", MC_IN, PRIMED), "halt")
        if self.holding is None:
            return [Offer(ActionLabel("out", ANY, PRIMED, (ANY,)), "take"), halt]
        put = Offer(ActionLabel("enq", MC, PLAIN, (self.holding,)), "pass")
        return [put, halt] if world.failsafe else [put]

    def fire(self, tag, payload, world: World):
        if tag == "take":
            return replace(self, holding=payload[0]), ()
        if tag == "pass":
            return replace(self, holding=None), ()
        if tag == "halt":
            return replace(self, halted=True), ()
        raise IllegalStep(f"{self.name}: unknown step {tag!r}")


def boot_control() -> list:
    """Machine Control right after boot: id 1 assigned and live."""
    return [MCScheduler(1, (1,)), EventQueue(MC), MCInHandler()]


def sched_offers(mc: MCScheduler, world: World) -> list[ActionLabel]:
    return [o.label for o in mc.offers(world)]


def mc_in_pump(h: MCInHandler, world: World) -> list[ActionLabel]:
    return [o.label for o in h.offers(world)]
