"""Interleaving executor.

A :class:`SystemState` is the tuple of all live sequential processes sorted
by a canonical key.  A step is either a solo internal action or a pair of
complementary offers merged into a communication ``a''``.  Offers in the
encapsulation set never fire alone.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Optional

from .control import boot_control
from .frontend.ast import ProgramDef
from .instance import World, init_instance
from .labels import COMM, COMM_NAMES, MC_IN, PLAIN, ActionLabel, in_encapsulation, unify
from .queues import IllegalStep
from .trace import Trace

_NUM = re.compile(r"\d+")
_RANK = {"prog": 0, "ctx": 1, "reactions": 2, "q(in": 3, "q(out": 4, "in": 5, "out": 6}
_MC_RANK = {"sched": 0, "queue": 1, "mcin": 2}


def proc_key(p) -> tuple:
    """Canonical sort key: (owner instance id, rank within the instance)."""
    kind = p.kind
    if kind in _MC_RANK and (kind != "queue" or p.qid == "MC"):
        return (0, _MC_RANK[kind])
    if kind == "prog" or kind == "in" or kind == "out":
        return (p.id, _RANK[kind])
    name = p.name
    owner = int(_NUM.search(name).group())
    prefix = name.split("(", 2)
    return (owner, _RANK[prefix[0] if kind == "table" else "(".join(prefix[:2])])


class Step(NamedTuple):
    label: ActionLabel       # communicated (a'') or solo label
    first: int               # index of the initiating (plain) process
    first_tag: object
    second: Optional[int]    # index of the receiving (primed) process, None for solo
    second_tag: object

    @property
    def solo(self) -> bool:
        return self.second is None


@dataclass(frozen=True)
class SystemState:
    procs: tuple
    steps_taken: int = 0

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self.procs)
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other) -> bool:
        return isinstance(other, SystemState) and self.procs == other.procs

    @property
    def terminated(self) -> bool:
        return not self.procs

    def find(self, name: str):
        for p in self.procs:
            if p.name == name:
                return p
        return None

    def prog(self, instance_id: int):
        return self.find(f"prog({instance_id})")

    @property
    def sched(self):
        return self.find("MC.sched")


def _sorted(procs: Iterable) -> tuple:
    return tuple(sorted(procs, key=proc_key))


def boot(program: ProgramDef, failsafe: bool = True) -> tuple[SystemState, World]:
    world = World(program, failsafe)
    entry = init_instance(program.machines[program.entry], 1, 0, world)
    return SystemState(_sorted(boot_control() + entry.processes())), world


def offers_of(p, world: World) -> list:
    """Offers of an (immutable) process, memoised on the process object."""
    d = p.__dict__
    cached = d.get("_offers")
    if cached is None or cached[0] is not world:
        cached = (world, p.offers(world))
        d["_offers"] = cached
    return cached[1]


def enabled(s: SystemState, world: World) -> list[Step]:
    plain: list = []
    primed: dict = {}
    primed_wild: dict = {}
    solo: list = []
    for idx, p in enumerate(s.procs):
        for offer in offers_of(p, world):
            lab = offer.label
            if lab.name not in COMM_NAMES:
                solo.append(Step(lab, idx, offer.tag, None, None))
            elif lab.polarity == PLAIN:
                plain.append((idx, offer))
            elif isinstance(lab.sub, str):
                primed.setdefault((lab.name, lab.sub), []).append((idx, offer))
            else:
                primed_wild.setdefault(lab.name, []).append((idx, offer))
    steps = []
    for i, o in plain:
        lab = o.label
        cands = primed.get((lab.name, lab.sub), ())
        wild = primed_wild.get(lab.name, ())
        for j, o2 in (*cands, *wild):
            if i == j:
                continue
            m = unify(lab, o2.label)
            if m is not None:
                steps.append(Step(ActionLabel(lab.name, m[0], COMM, m[1]), i, o.tag, j, o2.tag))
    steps.extend(solo)
    return steps


def step(s: SystemState, chosen: Step, world: World,
         trace: Optional[Trace] = None) -> SystemState:
    """Apply one enabled step atomically, appending a trace entry if asked."""
    procs = list(s.procs)
    label = chosen.label
    spawned: tuple = ()
    a = procs[chosen.first]
    if chosen.solo:
        if in_encapsulation(label.name, label.sub):
            raise IllegalStep(f"encapsulated action {label} cannot fire alone")
        new_a, spawned = a.fire(chosen.first_tag, label.payload, world)
        procs[chosen.first] = new_a
        actors = (a.name,)
    else:
        b = procs[chosen.second]
        new_a, sp1 = a.fire(chosen.first_tag, label.payload, world)
        new_b, sp2 = b.fire(chosen.second_tag, label.payload, world)
        procs[chosen.first] = new_a
        procs[chosen.second] = new_b
        spawned = sp1 + sp2
        actors = (a.name, b.name)
    live = [p for p in procs if p.alive]
    if spawned:
        live.extend(spawned)
        procs_t = _sorted(live)
    else:
        procs_t = tuple(live)  # removal keeps the canonical order
    if trace is not None:
        trace.record(label, actors, chosen.solo)
        for p in spawned:
            if p.kind == "prog":
                trace.instances[p.id] = p.machine
    return SystemState(procs_t, s.steps_taken + 1)


def step_matching(s: SystemState, world: World, label: ActionLabel,
                  trace: Optional[Trace] = None) -> SystemState:
    """Apply the unique enabled step whose label equals ``label``."""
    for st in enabled(s, world):
        if st.label == label:
            return step(s, st, world, trace)
    raise IllegalStep(f"{label} is not enabled")


# --- scheduling policies --------------------------------------------------

class SeededPolicy:
    """Uniform choice among enabled steps.

    Uses :class:`random.Random` (Mersenne Twister) seeded with the integer
    seed; the index is ``int(rng.random() * len(steps))``.  ``random()`` output
    for a given seed is stable across Python versions.
    """

    name = "seeded"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def choose(self, s: SystemState, steps: list[Step]) -> Step:
        return steps[int(self.rng.random() * len(steps))]


class RoundRobinPolicy:
    """Deterministic fair choice: cycle a cursor over process keys and serve
    the first process at or after it with an enabled step; each process
    rotates through its own enabled steps."""

    name = "roundrobin"
    seed = None

    def __init__(self):
        self.cursor: tuple = (-1, -1)
        self.turns: dict = {}

    def choose(self, s: SystemState, steps: list[Step]) -> Step:
        by_proc: dict = {}
        for st in steps:
            by_proc.setdefault(proc_key(s.procs[st.first]), []).append(st)
            if st.second is not None:
                by_proc.setdefault(proc_key(s.procs[st.second]), []).append(st)
        keys = sorted(by_proc)
        after = [k for k in keys if k > self.cursor]
        k = after[0] if after else keys[0]
        self.cursor = k
        mine = by_proc[k]
        turn = self.turns.get(k, 0)
        self.turns[k] = turn + 1
        return mine[turn % len(mine)]


def make_policy(name: str, seed: int = 0):
    if name == "seeded":
        return SeededPolicy(seed)
    if name == "roundrobin":
        return RoundRobinPolicy()
    raise ValueError(f"unknown policy {name!r}")


# --- running ---------------------------------------------------------------

TERMINATED = "Terminated"
DEADLOCKED = "Deadlocked"
STEP_CAP = "StepCapReached"


@dataclass
class Outcome:
    status: str
    state: SystemState
    trace: Trace
    steps: int


def run(program: ProgramDef, policy=None, max_steps: int = 1_000_000,
        failsafe: bool = True) -> Outcome:
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    policy = policy or SeededPolicy(0)
    s, world = boot(program, failsafe)
    trace = Trace(instances={1: program.entry},
                  meta={"program": program.entry, "policy": policy.name, "seed": policy.seed})
    return run_from(s, world, policy, max_steps, trace)


def run_from(s: SystemState, world: World, policy, max_steps: int, trace: Trace) -> Outcome:
    n = 0
    while True:
        if s.terminated:
            return Outcome(TERMINATED, s, trace, n)
        steps = enabled(s, world)
        if not steps:
            return Outcome(DEADLOCKED, s, trace, n)
        if n >= max_steps:
            return Outcome(STEP_CAP, s, trace, n)
        s = step(s, policy.choose(s, steps), world, trace)
        n += 1


def snapshot(s: SystemState) -> dict:
    """JSON-ready view of queues, tables and program positions."""
    out: dict = {}
    for p in s.procs:
        if p.kind == "queue":
            out[p.name] = p.snapshot()
        elif p.kind == "table":
            out[p.name] = p.snapshot()
        elif p.kind == "prog":
            out[p.name] = {"machine": p.machine, "state": p.state,
                           "last": p.last.to_json(), "done": p.done}
        elif p.kind == "sched":
            out[p.name] = {"n": p.n, "live": list(p.live), "phase": p.phase[0]}
        else:
            held = p.holding.to_json() if p.holding is not None else None
            out[p.name] = {"holding": held}
    return out


# --- bounded exploration ---------------------------------------------------

_ID = re.compile(r"\((\d+)\)")


def _owner(sub: str) -> str:
    return _ID.search(sub).group(1)


def _peers(p, label: ActionLabel) -> list[str]:
    """Names of processes that could ever offer the complement of ``label``.

    The static communication structure is fixed by the process inventory, so
    this is a pure function of the label and which side ``p`` is on.
    """
    name, sub = label.name, label.sub
    me = p.name
    if not isinstance(sub, str):  # MC.in accepts from any out handler
        return [_ALL_OUT, "MC.sched"]
    if sub.isdigit():
        if name == "out":
            return ["MC.in"] if me != "MC.in" else [f"out({sub})"]
        if name == "distrib":
            return [f"in({sub})"] if me == "MC.sched" else ["MC.sched"]
        return [f"prog({sub})"] if me == "MC.sched" else ["MC.sched"]
    if name == "halt":
        if sub == MC_IN:
            return ["MC.in"] if me == "MC.sched" else ["MC.sched"]
        if sub == "q(MC)":
            return ["q(MC)"] if me == "MC.sched" else ["MC.sched"]
        return [sub] if p.kind == "prog" else [f"prog({_owner(sub)})"]
    if name in ("enq", "deq", "qempty"):
        queue = f"q({sub})"
        if sub == "MC":
            writers, readers = ["MC.sched", "MC.in"], ["MC.sched"]
        elif sub.startswith("in("):
            n = _owner(sub)
            writers, readers = [f"in({n})"], [f"prog({n})"]
        else:
            n = _owner(sub)
            writers, readers = [f"prog({n})"], [f"out({n})"]
        if me != queue:
            return [queue]
        return writers if name == "enq" else readers
    # lookup tables
    return [f"prog({_owner(sub)})"] if p.kind == "table" else [sub]


_ALL_OUT = "*out"


def _parts(p) -> Optional[frozenset]:
    """Pending halts of a process that is tearing down, else None.

    A teardown is a parallel composition of single halt actions, so each
    pending halt is treated as a unit of its own.
    """
    if p.kind == "prog":
        st = p.stage
    elif p.kind == "sched":
        st = p.phase
    else:
        return None
    if isinstance(st, tuple) and st and st[0] == "teardown":
        return st[1]
    return None


def _peer_names(p, world: World) -> frozenset:
    d = p.__dict__
    cached = d.get("_peers")
    if cached is None:
        names = set()
        for offer in offers_of(p, world):
            lab = offer.label
            if lab.name in COMM_NAMES:
                names.update((peer, lab.name, lab.sub) for peer in _peers(p, lab))
        cached = d["_peers"] = frozenset(names)
    return cached


def _resolve(s: SystemState, index: dict, peer: str, name: str, sub) -> list:
    if peer == _ALL_OUT:
        return [(j, None) for j, q in enumerate(s.procs) if q.kind == "out"]
    j = index.get(peer)
    if j is None:
        return []
    parts = _parts(s.procs[j])
    if parts is None:
        return [(j, None)]
    # a tearing-down process will only ever offer its pending halts
    return [(j, sub)] if name == "halt" and sub in parts else []


def _closure(s: SystemState, world: World, seed: Iterable[tuple], index: dict) -> set:
    todo = list(seed)
    closed = set(todo)
    while todo:
        i, part = todo.pop()
        p = s.procs[i]
        if part is None:
            peers = _peer_names(p, world)
        else:
            peers = [(peer, "halt", part) for peer in _peers(p, ActionLabel("halt", part, PLAIN))]
        for peer, name, sub in peers:
            for u in _resolve(s, index, peer, name, sub):
                if u not in closed:
                    closed.add(u)
                    todo.append(u)
    return closed


def _unit(s: SystemState, i: int, label: ActionLabel) -> tuple:
    return (i, None) if _parts(s.procs[i]) is None else (i, label.sub)


def ample(s: SystemState, world: World, steps: list[Step]) -> list[Step]:
    """A stubborn subset of ``steps`` that preserves every reachable deadlock.

    Picks a set of process units closed under "could communicate with, given
    current offers"; steps outside it touch only other units and so commute
    with everything inside.  The smallest such candidate wins.
    """
    if len(steps) <= 1:
        return steps
    index = {p.name: i for i, p in enumerate(s.procs)}
    units = [(_unit(s, st.first, st.label),
              None if st.second is None else _unit(s, st.second, st.label)) for st in steps]
    memo: dict = {}

    def closure_of(u: tuple) -> set:
        c = memo.get(u)
        if c is None:
            c = memo[u] = _closure(s, world, (u,), index)
        return c

    best = steps
    for u, v in units:
        closed = closure_of(u)
        if v is not None and v not in closed:
            closed = closed | closure_of(v)
        sub = [st for st, (x, _) in zip(steps, units) if x in closed]
        if len(sub) < len(best):
            best = sub
            if len(best) == 1:
                break
    return best


@dataclass(frozen=True)
class Deadlock:
    state: SystemState
    witness: tuple  # labels from the initial state
    stuck: dict     # remaining process -> offers nobody can answer


def stuck_offers(s: SystemState, world: World) -> dict:
    return {p.name: [str(o.label) for o in offers_of(p, world)] for p in s.procs}


@dataclass
class Report:
    deadlocks: list
    state_count: int
    terminated_count: int
    truncated: bool
    max_depth: int


def explore(s0: SystemState, world: World, max_depth: int, visit: Optional[Callable] = None,
            max_states: Optional[int] = None, reduce: bool = True) -> Report:
    """Breadth-first search of all interleavings up to ``max_depth`` steps.

    States are memoised by their canonical process tuple.  With ``reduce``
    only a stubborn subset of the enabled steps is followed, which still
    reaches every deadlock reachable within the bound, at the same depth.
    ``visit(state, steps)`` is called once per distinct state with its full
    enabled set.  ``truncated`` is set if the bound cut off any successor.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    parent: dict = {s0: None}
    frontier = [s0]
    deadlocks: list = []
    terminated = 0
    truncated = False
    depth = 0
    while frontier:
        nxt = []
        for s in frontier:
            if s.terminated:
                terminated += 1
                if visit is not None:
                    visit(s, [])
                continue
            steps = enabled(s, world)
            if visit is not None:
                visit(s, steps)
            if not steps:
                deadlocks.append(Deadlock(s, _witness(parent, s), stuck_offers(s, world)))
                continue
            if depth >= max_depth:
                truncated = True
                continue
            for st in (ample(s, world, steps) if reduce else steps):
                t = step(s, st, world)
                t = SystemState(t.procs, depth + 1)
                if t not in parent:
                    if max_states is not None and len(parent) >= max_states:
                        truncated = True
                        continue
                    parent[t] = (s, st.label)
                    nxt.append(t)
        frontier = nxt
        depth += 1
    return Report(deadlocks, len(parent), terminated, truncated, max_depth)


def _witness(parent: dict, s: SystemState) -> tuple:
    labels = []
    while parent[s] is not None:
        s, lab = parent[s]
        labels.append(lab)
    return tuple(reversed(labels))


def naive_deadlocks(s: SystemState, world: World, depth: int) -> set:
    """Deadlocked states within ``depth`` steps, by plain recursion without
    memoisation or reduction.  Exponential; only for small cross-checks."""
    if s.terminated:
        return set()
    steps = enabled(s, world)
    if not steps:
        return {SystemState(s.procs)}
    if depth == 0:
        return set()
    found: set = set()
    for st in steps:
        found |= naive_deadlocks(step(s, st, world), world, depth - 1)
    return found
