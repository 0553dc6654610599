"""A running state-machine instance.

An instance is the parallel composition of seven sequential processes: the
program process, the context and reaction tables, the incoming and outgoing
queues, and the incoming and outgoing event handlers.  Each is an immutable
value offering labelled steps; the engine pairs complementary offers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Optional

from .events import SENTINEL, Event, ack_type_of
from .frontend.ast import (
    HALT, LISTEN, AssignEmitter, Choice, Emit, MachineDef, Opaque, SetReaction,
    StartMachine, Transition, UnsetReaction,
)
from .labels import (
    ANY, PLAIN, PRIMED, ActionLabel, Offer, internal, sub_ctx, sub_in, sub_out, sub_q,
    sub_reactions,
)
from .queues import EventQueue, IllegalStep
from .tables import context_table, reaction_table


@dataclass(frozen=True)
class World:
    """Read-only execution context shared by all processes of one system."""

    program: Any  # ProgramDef
    failsafe: bool = True  # test-only: False removes halt' while a handler holds an event


_IDLE = ("idle",)
_NOTIFY = ("notify",)


@dataclass(frozen=True)
class ProgramProcess:
    id: int
    machine: str
    state: str
    pending: tuple = ()
    stage: Any = 0
    last: Event = SENTINEL
    bound: tuple = ()  # (var, id) pairs looked up or set earlier in this state body
    done: bool = False

    kind = "prog"

    @property
    def name(self) -> str:
        return f"prog({self.id})"

    @property
    def alive(self) -> bool:
        return not self.done

    # -- helpers ------------------------------------------------------------
    def _lookup(self, var: str) -> Optional[int]:
        for k, v in self.bound:
            if k == var:
                return v
        return None

    def _bind(self, var: str, n: int) -> tuple:
        return tuple(sorted({**dict(self.bound), var: n}.items()))

    def enter(self, state: str, last: Event, world: World) -> "ProgramProcess":
        """Resolve a transition, following bare transitions immediately."""
        mdef: MachineDef = world.program.machines[self.machine]
        for _ in range(len(mdef.states) + 2):
            if state == LISTEN:
                return ProgramProcess(self.id, self.machine, LISTEN, (), _IDLE, last)
            if state == HALT:
                return ProgramProcess(self.id, self.machine, HALT, (), _NOTIFY, last)
            body = mdef.states[state].body
            if isinstance(body[0], Transition):
                state = body[0].state
                continue
            return ProgramProcess(self.id, self.machine, state, body, 0, last)
        raise RuntimeError(f"unguarded transition cycle through {state!r}")

    def _advance(self, world: World, bound: Optional[tuple] = None) -> "ProgramProcess":
        """Drop the head action and settle on the next observable one."""
        rest = self.pending[1:]
        bound = self.bound if bound is None else bound
        if isinstance(rest[0], Transition):
            return self.enter(rest[0].state, self.last, world)
        return replace(self, pending=rest, stage=0, bound=bound)

    # -- offers -------------------------------------------------------------
    def offers(self, world: World) -> list[Offer]:
        if self.done:
            return []
        if self.state == LISTEN:
            return self._listen_offers()
        if self.state == HALT:
            return self._halt_offers()
        return self._action_offers(world)

    def _listen_offers(self) -> list[Offer]:
        i = self.id
        st = self.stage
        tag = st[0]
        if tag == "idle":
            return [Offer(ActionLabel("qempty", sub_in(i), PRIMED), "qempty"),
                    Offer(ActionLabel("deq", sub_in(i), PRIMED, (ANY,)), "deq")]
        if tag in ("machine", "regular"):
            e = st[1]
            key = (e.sndr if tag == "machine" else 0, e.etype)
            return [Offer(ActionLabel("get", sub_reactions(i), PRIMED, (key, ANY)), "hit"),
                    Offer(ActionLabel("not_set", sub_reactions(i), PRIMED, (key,)), "miss")]
        if tag == "ack":
            e = st[1]
            ack = Event(i, e.sndr, ack_type_of(e.etype), False)
            return [Offer(ActionLabel("enq", sub_out(i), PLAIN, (ack,)), "ack")]
        if tag == "drop":
            return [internal("drop", "no-reaction", st[1], tag="drop")]
        raise AssertionError(st)

    def _halt_offers(self) -> list[Offer]:
        if self.stage == _NOTIFY:
            return [Offer(ActionLabel("halt", str(self.id), PLAIN), "notify")]
        return [Offer(ActionLabel("halt", sub, PLAIN), ("cascade", sub))
                for sub in sorted(self.stage[1])]

    def _need(self, var: str):
        """Offer for looking up ``var`` in the context table, or its known id."""
        n = self._lookup(var)
        if n is not None:
            return n, None
        return None, Offer(ActionLabel("get", sub_ctx(self.id), PRIMED, (var, ANY)),
                           ("lookup", var))

    def _action_offers(self, world: World) -> list[Offer]:
        i = self.id
        a = self.pending[0]
        st = self.stage
        if isinstance(a, Opaque):
            return [internal("internal", a.label, tag="opaque")]
        if isinstance(a, StartMachine):
            if st == 0:
                return [Offer(ActionLabel("start", str(i), PLAIN, (a.machine,)), "start")]
            if st == 1:
                return [Offer(ActionLabel("new_id", str(i), PRIMED, (ANY,)), "new_id")]
            return [Offer(ActionLabel("set", sub_ctx(i), PLAIN, (a.var, st[1])), "set_var")]
        if isinstance(a, AssignEmitter):
            return [Offer(ActionLabel("set", sub_ctx(i), PLAIN, (a.var, self.last.sndr)),
                          "set_var")]
        if isinstance(a, (SetReaction, UnsetReaction)):
            m = 0
            if a.machine_var is not None:
                m, lookup = self._need(a.machine_var)
                if lookup is not None:
                    return [lookup]
            if isinstance(a, SetReaction):
                label = ActionLabel("set", sub_reactions(i), PLAIN, ((m, a.etype), a.state))
            else:
                label = ActionLabel("unset", sub_reactions(i), PLAIN, ((m, a.etype),))
            return [Offer(label, "done")]
        if isinstance(a, Emit):
            n = 0
            if a.to is not None:
                n, lookup = self._need(a.to)
                if lookup is not None:
                    return [lookup]
            if st == 0:
                e = Event(i, n, a.etype, a.ack_state is not None)
                return [Offer(ActionLabel("enq", sub_out(i), PLAIN, (e,)), "emitted")]
            label = ActionLabel("set", sub_reactions(i), PLAIN,
                                ((n, ack_type_of(a.etype)), a.ack_state))
            return [Offer(label, "done")]
        if isinstance(a, Choice):
            out = []
            for k, branch in enumerate(a.branches):
                sub = replace(self, pending=branch, stage=0)
                for o in sub._action_offers(world):
                    out.append(Offer(o.label, ("branch", k, o.tag)))
            return out
        raise AssertionError(a)

    # -- firing ---------------------------------------------------------------
    def fire(self, tag, payload: tuple, world: World):
        if self.state == LISTEN:
            return self._listen_fire(tag, payload, world), ()
        if self.state == HALT:
            if tag == "notify":
                subs = frozenset({sub_ctx(self.id), sub_reactions(self.id),
                                  sub_q(sub_in(self.id)), sub_q(sub_out(self.id)),
                                  sub_in(self.id), sub_out(self.id)})
                return replace(self, stage=("teardown", subs)), ()
            left = self.stage[1] - {tag[1]}
            if not left:
                return replace(self, stage=("teardown", left), done=True), ()
            return replace(self, stage=("teardown", left)), ()
        return self._action_fire(tag, payload, world), ()

    def _listen_fire(self, tag, payload, world: World) -> "ProgramProcess":
        st = self.stage
        if tag == "qempty":
            return self
        if tag == "deq":
            return replace(self, stage=("machine", payload[0]))
        if tag == "hit":
            e = st[1]
            target = payload[1]
            if e.ack:
                return replace(self, stage=("ack", e, target))
            return self.enter(target, e, world)
        if tag == "miss":
            e = st[1]
            if st[0] == "machine":
                return replace(self, stage=("regular", e))
            return replace(self, stage=("drop", e))
        if tag == "ack":
            return self.enter(st[2], st[1], world)
        if tag == "drop":
            return replace(self, stage=_IDLE)
        raise IllegalStep(f"{self.name}: unknown listen step {tag!r}")

    def _action_fire(self, tag, payload, world: World) -> "ProgramProcess":
        a = self.pending[0]
        if isinstance(tag, tuple) and tag[0] == "branch":
            _, k, inner = tag
            chosen = replace(self, pending=a.branches[k], stage=0)
            return chosen._action_fire(inner, payload, world)
        if isinstance(tag, tuple) and tag[0] == "lookup":
            return replace(self, bound=self._bind(tag[1], payload[1]))
        if tag == "opaque" or tag == "done":
            return self._advance(world)
        if tag == "start":
            return replace(self, stage=1)
        if tag == "new_id":
            return replace(self, stage=("set", payload[0]))
        if tag == "set_var":
            var, n = payload
            return self._advance(world, self._bind(var, n))
        if tag == "emitted":
            if a.ack_state is None:
                return self._advance(world)
            return replace(self, stage=1)
        raise IllegalStep(f"{self.name}: unknown step {tag!r}")


@dataclass(frozen=True)
class OutHandler:
    """Moves events from the outgoing queue to Machine Control."""

    id: int
    holding: Optional[Event] = None
    halted: bool = False

    kind = "out"

    @property
    def name(self) -> str:
        return sub_out(self.id)

    @property
    def alive(self) -> bool:
        return not self.halted

    def offers(self, world: World) -> list[Offer]:
        if self.halted:
            return []
        halt = Offer(ActionLabel("halt", sub_out(self.id), PRIMED), "halt")
        if self.holding is None:
            return [Offer(ActionLabel("deq", sub_out(self.id), PRIMED, (ANY,)), "take"), halt]
        send = Offer(ActionLabel("out", str(self.id), PLAIN, (self.holding,)), "pass")
        return [send, halt] if world.failsafe else [send]

    def fire(self, tag, payload, world: World):
        if tag == "take":
            return replace(self, holding=payload[0]), ()
        if tag == "pass":
            return replace(self, holding=None), ()
        if tag == "halt":
            return replace(self, halted=True), ()
        raise IllegalStep(f"{self.name}: unknown step {tag!r}")


@dataclass(frozen=True)
class InHandler:
    """Receives events distributed by Machine Control into the incoming queue."""

    id: int
    holding: Optional[Event] = None
    halted: bool = False

    kind = "in"

    @property
    def name(self) -> str:
        return sub_in(self.id)

    @property
    def alive(self) -> bool:
        return not self.halted

    def offers(self, world: World) -> list[Offer]:
        if self.halted:
            return []
        halt = Offer(ActionLabel("halt", sub_in(self.id), PRIMED), "halt")
        if self.holding is None:
            return [Offer(ActionLabel("distrib", str(self.id), PRIMED, (ANY,)), "take"), halt]
        put = Offer(ActionLabel("enq", sub_in(self.id), PLAIN, (self.holding,)), "pass")
        return [put, halt] if world.failsafe else [put]

    def fire(self, tag, payload, world: World):
        if tag == "take":
            return replace(self, holding=payload[0]), ()
        if tag == "pass":
            return replace(self, holding=None), ()
        if tag == "halt":
            return replace(self, halted=True), ()
        raise IllegalStep(f"{self.name}: unknown step {tag!r}")


@dataclass(frozen=True)
class InstanceState:
    """Snapshot view of one instance's seven subprocesses (None once terminated)."""

    id: int
    machine: str
    ctxid: int
    prog: Optional[ProgramProcess]
    ctx: Any
    reactions: Any
    qin: Optional[EventQueue]
    qout: Optional[EventQueue]
    hin: Optional[InHandler]
    hout: Optional[OutHandler]

    def processes(self) -> list:
        return [p for p in (self.prog, self.ctx, self.reactions, self.qin, self.qout,
                            self.hin, self.hout) if p is not None]


def init_instance(machine: MachineDef, id: int, ctxid: int, world: World) -> InstanceState:
    if id < 1:
        raise ValueError("instance ids start at 1")
    prog = ProgramProcess(id, machine.name, machine.init).enter(machine.init, SENTINEL, world)
    return InstanceState(
        id=id, machine=machine.name, ctxid=ctxid, prog=prog,
        ctx=context_table(id, ctxid), reactions=reaction_table(id, ctxid),
        qin=EventQueue(sub_in(id)), qout=EventQueue(sub_out(id)),
        hin=InHandler(id), hout=OutHandler(id),
    )


def listen_offers(prog: ProgramProcess) -> list[ActionLabel]:
    if prog.state != LISTEN:
        raise ValueError(f"{prog.name} is in state {prog.state!r}, not listening")
    return [o.label for o in prog._listen_offers()]


def exec_action(prog: ProgramProcess, world: World) -> list[ActionLabel]:
    """Labels offered for the action at the head of the current state body."""
    return [o.label for o in prog.offers(world)]


def halt_cascade(prog: ProgramProcess) -> list[ActionLabel]:
    if prog.state != HALT:
        raise ValueError(f"{prog.name} is not halting")
    return [o.label for o in prog._halt_offers()]
