import io
import json

from pepvm.engine import SeededPolicy, run
from pepvm.events import Event
from pepvm.labels import COMM, PLAIN, ActionLabel
from pepvm.trace import Trace, export_msc, export_trace, msc_arrow, read_trace


def small_trace():
    t = Trace(instances={1: "CPU", 3: "ProgA"})
    e = Event(3, 0, "read", False)
    t.record(ActionLabel("out", "3", COMM, (e,)), ("out(3)", "MC.in"), False)
    t.record(ActionLabel("distrib", "1", COMM, (Event(3, 1, "read", False),)),
             ("MC.sched", "in(1)"), False)
    t.record(ActionLabel("internal", "", PLAIN, ("cycle",)), ("prog(1)",), True)
    t.record(ActionLabel("drop", "", PLAIN, ("no-reaction", e)), ("prog(1)",), True)
    t.record(ActionLabel("halt", "3", COMM), ("prog(3)", "MC.sched"), False)
    t.record(ActionLabel("halt", "ctx(3)", COMM), ("prog(3)", "ctx(3)"), False)
    return t


def test_entry_kinds_and_steps():
    t = small_trace()
    assert [e.kind for e in t] == ["comm", "comm", "solo", "drop", "comm", "comm"]
    assert [e.step for e in t] == list(range(6))
    assert t.entries[0].event == Event(3, 0, "read", False)
    assert all(len(e.actors) == (2 if e.kind == "comm" else 1) for e in t)


def test_json_lines_round_trip():
    t = small_trace()
    buf = io.StringIO()
    n = export_trace(t, buf, header={"seed": 1}, footer={"status": "Terminated"})
    lines = buf.getvalue().splitlines()
    assert n == 6 and len(lines) == 8
    assert json.loads(lines[0])["kind"] == "meta"
    assert json.loads(lines[-1])["kind"] == "final"
    recs = read_trace(lines)
    assert [r["step"] for r in recs] == list(range(6))
    assert recs[0]["label"] == "out''_3"
    assert recs[0]["payload"] == [[3, 0, "read", 0]]
    assert recs[0]["event"] == [3, 0, "read", 0]
    assert recs[2]["label"] == "internal" and recs[2]["payload"] == ["cycle"]


def test_msc_arrows():
    t = small_trace()
    arrows = [msc_arrow(e, t) for e in t]
    assert arrows == [
        "ProgA_3 ->> MC : out read",
        "MC ->> CPU_1 : distrib read",
        None, None,
        "ProgA_3 ->> MC : halt",
        None,
    ]


def test_msc_document():
    t = small_trace()
    buf = io.StringIO()
    assert export_msc(t, buf) == 3
    text = buf.getvalue()
    assert text.startswith("sequenceDiagram\n    participant MC\n")
    assert "participant CPU_1" in text and "participant ProgA_3" in text
    verbose = io.StringIO()
    export_msc(t, verbose, verbose=True)
    notes = [l for l in verbose.getvalue().splitlines() if "Note over" in l]
    assert len(notes) == 3
    assert notes[-1].startswith("    Note over ProgA_3 : comm halt''_ctx(3)")


def test_trace_of_a_real_run_is_consistent(harddrive):
    out = run(harddrive, SeededPolicy(5), 5000)
    assert sorted(out.trace.instances.values()) == ["CPU", "HD", "HDHead", "ProgA", "ProgB"]
    assert out.trace.instances[1] == "CPU" and out.trace.instances[2] == "HD"
    buf = io.StringIO()
    export_trace(out.trace, buf)
    recs = read_trace(buf.getvalue().splitlines())
    assert len(recs) == out.steps
    assert all(r["label"].endswith("''_" + r["sub"]) for r in recs if r["kind"] == "comm")
