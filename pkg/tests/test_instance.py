import pytest

from pepvm.events import SENTINEL, Event
from pepvm.frontend import parse_program
from pepvm.instance import (
    InHandler, OutHandler, World, exec_action, halt_cascade, init_instance, listen_offers,
)
from pepvm.labels import ANY, PLAIN, PRIMED, ActionLabel, unify
from pepvm.tables import LookupTable

SRC = """
machine Main {
    w = null;

    init state setup(e) {
        w = ctl.start(Worker, null);
        when w emits "t" => a;
        emit ("go") to w;
    }

    state a(e) {
        <in_a>;
    }

    state b(e) {
        <in_b>;
    }
}

machine Worker {
    init state go(e) {
        => listen;
    }
}

ctl.run(Main);
"""


@pytest.fixture
def world():
    return World(parse_program(SRC))


def fire_with(proc, partner: ActionLabel, world):
    """Fire the offer of ``proc`` that communicates with ``partner``."""
    for o in proc.offers(world):
        m = unify(o.label, partner)
        if m is not None:
            return proc.fire(o.tag, m[1], world)[0]
    raise AssertionError(f"{partner} does not match any offer of {proc.name}")


def fire_solo(proc, world):
    (o,) = proc.offers(world)
    return proc.fire(o.tag, o.label.payload, world)[0]


def listening(world, id=1):
    inst = init_instance(world.program.machines["Worker"], id, 0, world)
    return inst.prog


def test_instance_inventory(world):
    inst = init_instance(world.program.machines["Main"], 3, 1, world)
    names = [p.name for p in inst.processes()]
    assert names == ["prog(3)", "ctx(3)", "reactions(3)", "q(in(3))", "q(out(3))",
                     "in(3)", "out(3)"]
    assert inst.ctx.entries == {"ctx": 1}
    assert inst.reactions.entries == {(1, "halt"): "halt"}
    assert inst.prog.state == "setup" and inst.prog.last == SENTINEL


def test_ids_start_at_one(world):
    with pytest.raises(ValueError):
        init_instance(world.program.machines["Main"], 0, 0, world)


def test_start_then_lookup_coalesced(world):
    p = init_instance(world.program.machines["Main"], 1, 0, world).prog
    assert exec_action(p, world) == [ActionLabel("start", "1", PLAIN, ("Worker",))]
    p = fire_with(p, ActionLabel("start", "1", PRIMED, (ANY,)), world)
    assert exec_action(p, world) == [ActionLabel("new_id", "1", PRIMED, (ANY,))]
    p = fire_with(p, ActionLabel("new_id", "1", PLAIN, (2,)), world)
    assert exec_action(p, world) == [ActionLabel("set", "ctx(1)", PLAIN, ("w", 2))]
    p = fire_with(p, ActionLabel("set", "ctx(1)", PRIMED, (ANY, ANY)), world)
    # w was just set in this state: no get' lookup before using it
    assert exec_action(p, world) == [
        ActionLabel("set", "reactions(1)", PLAIN, ((2, "t"), "a"))]
    p = fire_with(p, ActionLabel("set", "reactions(1)", PRIMED, (ANY, ANY)), world)
    assert exec_action(p, world) == [
        ActionLabel("enq", "out(1)", PLAIN, (Event(1, 2, "go", False),))]
    p = fire_with(p, ActionLabel("enq", "out(1)", PRIMED, (ANY,)), world)
    assert p.state == "listen"


def test_listen_idle_offers(world):
    p = listening(world)
    assert listen_offers(p) == [ActionLabel("qempty", "in(1)", PRIMED),
                                ActionLabel("deq", "in(1)", PRIMED, (ANY,))]
    assert fire_with(p, ActionLabel("qempty", "in(1)", PLAIN), world) == p


def test_listen_requires_listen_state(world):
    p = init_instance(world.program.machines["Main"], 1, 0, world).prog
    with pytest.raises(ValueError):
        listen_offers(p)


def test_machine_reaction_wins_over_regular(world):
    table = LookupTable.of("reactions(1)", {(2, "t"): "a", (0, "t"): "b"})
    p = listening(world)
    p = fire_with(p, ActionLabel("deq", "in(1)", PLAIN, (Event(2, 1, "t", False),)), world)
    assert listen_offers(p)[0] == ActionLabel("get", "reactions(1)", PRIMED, ((2, "t"), ANY))
    hits = [o.label for o in table.offers() if any(
        unify(o.label, mine) for mine in listen_offers(p))]
    assert hits == [ActionLabel("get", "reactions(1)", PLAIN, ((2, "t"), "a"))]


def test_regular_reaction_after_machine_miss(world):
    p = listening(world)
    e = Event(5, 1, "t", False)
    p = fire_with(p, ActionLabel("deq", "in(1)", PLAIN, (e,)), world)
    p = fire_with(p, ActionLabel("not_set", "reactions(1)", PLAIN, ((5, "t"),)), world)
    assert listen_offers(p)[0].payload[0] == (0, "t")
    p = fire_with(p, ActionLabel("not_set", "reactions(1)", PLAIN, ((0, "t"),)), world)
    (drop,) = listen_offers(p)
    assert drop.name == "drop" and drop.payload == ("no-reaction", e)
    p = fire_solo(p, world)
    assert p.stage == ("idle",) and p.last == SENTINEL


def test_ack_sent_before_entering_target(world):
    p = listening(world, id=2)
    e = Event(1, 2, "go", True)
    p = fire_with(p, ActionLabel("deq", "in(2)", PLAIN, (e,)), world)
    p = fire_with(p, ActionLabel("get", "reactions(2)", PLAIN, ((1, "go"), "halt")), world)
    assert p.state == "listen"
    assert listen_offers(p) == [
        ActionLabel("enq", "out(2)", PLAIN, (Event(2, 1, "go_ack", False),))]
    p = fire_with(p, ActionLabel("enq", "out(2)", PRIMED, (ANY,)), world)
    assert p.state == "halt" and p.last == e


def test_halt_cascade(world):
    p = listening(world, id=4)
    p = fire_with(p, ActionLabel("deq", "in(4)", PLAIN, (Event(0, 4, "halt", False),)), world)
    p = fire_with(p, ActionLabel("not_set", "reactions(4)", PLAIN, ((0, "halt"),)), world)
    p = fire_with(p, ActionLabel("get", "reactions(4)", PLAIN, ((0, "halt"), "halt")), world)
    assert halt_cascade(p) == [ActionLabel("halt", "4", PLAIN)]
    p = fire_with(p, ActionLabel("halt", "4", PRIMED), world)
    subs = {"ctx(4)", "reactions(4)", "q(in(4))", "q(out(4))", "in(4)", "out(4)"}
    assert {l.sub for l in halt_cascade(p)} == subs
    for sub in sorted(subs, reverse=True):  # any order
        assert p.alive
        p = fire_with(p, ActionLabel("halt", sub, PRIMED), world)
    assert not p.alive and p.offers(world) == []


def test_halt_cascade_requires_halt_state(world):
    with pytest.raises(ValueError):
        halt_cascade(listening(world))


@pytest.mark.parametrize("cls,take,put", [
    (OutHandler, ("deq", "out(3)"), ("out", "3")),
    (InHandler, ("distrib", "3"), ("enq", "in(3)")),
])
def test_handler_pumps(world, cls, take, put):
    e = Event(3, 0, "x", False)
    h = cls(3)
    labels = [o.label for o in h.offers(world)]
    assert labels[0] == ActionLabel(take[0], take[1], PRIMED, (ANY,))
    assert labels[1].name == "halt" and labels[1].polarity == PRIMED
    h = fire_with(h, ActionLabel(take[0], take[1], PLAIN, (e,)), world)
    held = [o.label for o in h.offers(world)]
    assert held[0] == ActionLabel(put[0], put[1], PLAIN, (e,))
    assert any(l.name == "halt" for l in held)  # fail-safe while holding
    unsafe = World(world.program, failsafe=False)
    assert [o.label.name for o in h.offers(unsafe)] == [put[0]]
    h = fire_with(h, ActionLabel(put[0], put[1], PRIMED, (ANY,)), world)
    assert h.holding is None
