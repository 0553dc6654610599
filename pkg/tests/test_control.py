import pytest

from pepvm.control import MCInHandler, MCScheduler, boot_control, mc_in_pump, sched_offers
from pepvm.events import Event
from pepvm.instance import World
from pepvm.labels import ANY, PLAIN, PRIMED, ActionLabel, unify
from pepvm.queues import IllegalStep


@pytest.fixture
def world(harddrive):
    return World(harddrive)


def fire_with(proc, partner, world):
    for o in proc.offers(world):
        m = unify(o.label, partner)
        if m is not None:
            return proc.fire(o.tag, m[1], world)
    raise AssertionError(f"{partner} not accepted by {proc.name}")


def fire_own(proc, world):
    (o,) = proc.offers(world)
    return proc.fire(o.tag, o.label.payload, world)


def start(mc, requester, machine, world):
    mc, _ = fire_with(mc, ActionLabel("start", str(requester), PLAIN, (machine,)), world)
    (label,) = sched_offers(mc, world)
    assert label.name == "new_id" and label.sub == str(requester)
    mc, spawned = fire_own(mc, world)
    return mc, label.payload[0], spawned


def test_boot_state(world):
    mc, q, h = boot_control()
    assert (mc.n, mc.live) == (1, (1,))
    assert [p.name for p in (mc, q, h)] == ["MC.sched", "q(MC)", "MC.in"]


def test_idle_offers(world):
    labels = sched_offers(MCScheduler(2, (1, 2)), world)
    assert [(l.name, l.sub, l.polarity) for l in labels] == [
        ("start", "1", PRIMED), ("halt", "1", PRIMED),
        ("start", "2", PRIMED), ("halt", "2", PRIMED), ("deq", "MC", PRIMED)]


def test_start_accepts_only_known_machines(world):
    mc = MCScheduler(1, (1,))
    start_offer = sched_offers(mc, world)[0]
    assert unify(start_offer, ActionLabel("start", "1", PLAIN, ("HD",))) is not None
    assert unify(start_offer, ActionLabel("start", "1", PLAIN, ("Nope",))) is None


def test_id_assignment_schedule(world):
    """CPU(1) starts HD(2), ProgA, ProgB; HD starts HDHead after them."""
    mc = MCScheduler(1, (1,))
    mc, hd, _ = start(mc, 1, "HD", world)
    mc, a, _ = start(mc, 1, "ProgA", world)
    mc, b, _ = start(mc, 1, "ProgB", world)
    mc, head, spawned = start(mc, hd, "HDHead", world)
    assert (hd, a, b, head) == (2, 3, 4, 5)
    assert mc.live == (1, 2, 3, 4, 5) and mc.n == 5
    assert [p.name for p in spawned][0] == "prog(5)"
    ctx = next(p for p in spawned if p.name == "ctx(5)")
    assert ctx.entries == {"ctx": 2}


def test_halt_announces_and_removes(world):
    mc = MCScheduler(3, (1, 2, 3))
    mc, _ = fire_with(mc, ActionLabel("halt", "2", PLAIN), world)
    assert sched_offers(mc, world) == [
        ActionLabel("enq", "MC", PLAIN, (Event(2, 0, "halt", False),))]
    mc, _ = fire_own(mc, world)
    assert mc.live == (1, 3) and mc.phase == ("idle",)


def test_last_halt_tears_down_control(world):
    mc = MCScheduler(3, (3,))
    mc, _ = fire_with(mc, ActionLabel("halt", "3", PLAIN), world)
    mc, _ = fire_own(mc, world)
    assert {l.sub for l in sched_offers(mc, world)} == {"MC(in)", "q(MC)"}
    mc, _ = fire_with(mc, ActionLabel("halt", "q(MC)", PRIMED), world)
    assert mc.alive
    mc, _ = fire_with(mc, ActionLabel("halt", "MC(in)", PRIMED), world)
    assert not mc.alive and sched_offers(mc, world) == []


def deq(mc, e, world):
    return fire_with(mc, ActionLabel("deq", "MC", PLAIN, (e,)), world)[0]


def test_directed_distribution(world):
    mc = deq(MCScheduler(3, (1, 2, 3)), Event(3, 1, "read", False), world)
    assert sched_offers(mc, world) == [
        ActionLabel("distrib", "1", PLAIN, (Event(3, 1, "read", False),))]
    mc, _ = fire_with(mc, ActionLabel("distrib", "1", PRIMED, (ANY,)), world)
    assert mc.phase == ("idle",)


def test_broadcast_skips_sender(world):
    e = Event(2, 0, "b", False)
    mc = deq(MCScheduler(3, (1, 2, 3)), e, world)
    assert [l.sub for l in sched_offers(mc, world)] == ["1", "3"]
    mc, _ = fire_with(mc, ActionLabel("distrib", "3", PRIMED, (ANY,)), world)
    assert [l.sub for l in sched_offers(mc, world)] == ["1"]
    mc, _ = fire_with(mc, ActionLabel("distrib", "1", PRIMED, (ANY,)), world)
    assert mc.phase == ("idle",)


def test_halt_announcement_reaches_everyone(world):
    e = Event(2, 0, "halt", False)
    mc = deq(MCScheduler(3, (1, 3)), e, world)
    assert [l.sub for l in sched_offers(mc, world)] == ["1", "3"]


@pytest.mark.parametrize("live,e,reason", [
    ((1, 2), Event(1, 7, "x", False), "dead-dest"),
    ((1,), Event(1, 0, "x", False), "no-recipient"),
])
def test_drops(world, live, e, reason):
    mc = deq(MCScheduler(7, live), e, world)
    (label,) = sched_offers(mc, world)
    assert label.name == "drop" and label.payload == (reason, e)
    mc, _ = fire_own(mc, world)
    assert mc.phase == ("idle",)


def test_start_refused_while_busy(world):
    mc = deq(MCScheduler(2, (1, 2)), Event(1, 2, "x", False), world)
    assert not any(l.name in ("start", "halt") for l in sched_offers(mc, world))


def test_mc_in_handler(world):
    h = MCInHandler()
    assert mc_in_pump(h, world) == [ActionLabel("out", ANY, PRIMED, (ANY,)),
                                    ActionLabel("halt", "MC(in)", PRIMED)]
    e = Event(4, 0, "x", False)
    h, _ = fire_with(h, ActionLabel("out", "4", PLAIN, (e,)), world)
    assert mc_in_pump(h, world)[0] == ActionLabel("enq", "MC", PLAIN, (e,))
    assert [l.name for l in mc_in_pump(h, World(world.program, failsafe=False))] == ["enq"]


def test_unknown_step(world):
    with pytest.raises(IllegalStep):
        MCScheduler(1, (1,)).fire("bogus", (), world)
