"""Compiled form of PEP programs.

State bodies are tuples of primitive actions, each corresponding to one row of
the event-action encoding (transition, start, reactions, emits, ...).
Every branch of a body ends in a :class:`Transition`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

LISTEN = "listen"
HALT = "halt"
RESERVED_STATES = frozenset({LISTEN, HALT})
CTX = "ctx"


@dataclass(frozen=True)
class Transition:
    state: str


@dataclass(frozen=True)
class StartMachine:
    var: str
    machine: str


@dataclass(frozen=True)
class SetReaction:
    machine_var: Optional[str]  # None: regular reaction (any sender)
    etype: str
    state: str


@dataclass(frozen=True)
class UnsetReaction:
    machine_var: Optional[str]
    etype: str


@dataclass(frozen=True)
class Emit:
    etype: str
    to: Optional[str] = None
    ack_state: Optional[str] = None


@dataclass(frozen=True)
class AssignEmitter:
    var: str


@dataclass(frozen=True)
class Opaque:
    label: str


@dataclass(frozen=True)
class Choice:
    branches: tuple


Action = Union[Transition, StartMachine, SetReaction, UnsetReaction, Emit,
               AssignEmitter, Opaque, Choice]


@dataclass(frozen=True)
class StateDef:
    name: str
    param: str
    body: tuple
    line: int = 0


@dataclass
class MachineDef:
    name: str
    vars: frozenset
    states: dict
    init: str

    @property
    def state_names(self) -> frozenset:
        return frozenset(self.states) | RESERVED_STATES


@dataclass
class ProgramDef:
    machines: dict
    entry: str
    alphabet: frozenset = field(default_factory=frozenset)

    @property
    def machine_names(self) -> tuple:
        return tuple(sorted(self.machines))


def format_action(a, indent: int = 0) -> list[str]:
    pad = "  " * indent
    if isinstance(a, Choice):
        lines = [pad + "Choice"]
        for i, branch in enumerate(a.branches):
            lines.append(pad + f"  branch {i}")
            for b in branch:
                lines.extend(format_action(b, indent + 2))
        return lines
    if isinstance(a, Transition):
        return [pad + f"Transition {a.state}"]
    if isinstance(a, StartMachine):
        return [pad + f"StartMachine {a.var} = {a.machine}"]
    if isinstance(a, SetReaction):
        who = a.machine_var if a.machine_var is not None else "*"
        return [pad + f"SetReaction {who} {a.etype!r} -> {a.state}"]
    if isinstance(a, UnsetReaction):
        who = a.machine_var if a.machine_var is not None else "*"
        return [pad + f"UnsetReaction {who} {a.etype!r}"]
    if isinstance(a, Emit):
        to = a.to if a.to is not None else "*"
        ack = f" ack -> {a.ack_state}" if a.ack_state is not None else ""
        return [pad + f"Emit {a.etype!r} to {to}{ack}"]
    if isinstance(a, AssignEmitter):
        return [pad + f"AssignEmitter {a.var}"]
    if isinstance(a, Opaque):
        return [pad + f"Opaque <{a.label}>"]
    raise TypeError(a)


def dump_program(p: ProgramDef) -> str:
    """Canonical, sorted text tree of a compiled program."""
    lines = [f"program entry={p.entry}",
             "  alphabet " + " ".join(sorted(p.alphabet))]
    for name in sorted(p.machines):
        m = p.machines[name]
        lines.append(f"  machine {name} init={m.init}")
        lines.append("    vars " + " ".join(sorted(m.vars)))
        for sname in sorted(m.states):
            lines.append(f"    state {sname}")
            for a in m.states[sname].body:
                lines.extend(format_action(a, 3))
    return "\n".join(lines) + "\n"
