"""Trace recording and export (JSON lines and Mermaid sequence diagrams)."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import IO, Any, Optional

from .events import Event
from .labels import ActionLabel

MSC_NAMES = frozenset({"out", "distrib", "start", "new_id", "halt"})
_NUMERIC = re.compile(r"\d+\Z")
_OWNER = re.compile(r"\((\d+)\)")


@dataclass(frozen=True)
class TraceEntry:
    step: int
    kind: str  # comm | solo | drop
    label: ActionLabel
    actors: tuple
    event: Optional[Event] = None

    def to_record(self) -> dict:
        lab = self.label
        return {
            "step": self.step,
            "kind": self.kind,
            "label": f"{lab.name}{lab.polarity}_{lab.sub}" if lab.sub != "" else lab.name,
            "name": lab.name,
            "sub": str(lab.sub),
            "payload": [to_json(x) for x in lab.payload],
            "actors": list(self.actors),
            "event": self.event.to_json() if self.event is not None else None,
        }


def to_json(x: Any) -> Any:
    if isinstance(x, Event):
        return x.to_json()
    if isinstance(x, tuple):
        return [to_json(y) for y in x]
    return x


@dataclass
class Trace:
    entries: list = field(default_factory=list)
    instances: dict = field(default_factory=dict)  # id -> machine name
    meta: dict = field(default_factory=dict)

    def record(self, label: ActionLabel, actors: tuple, solo: bool) -> TraceEntry:
        if not solo:
            kind = "comm"
        elif label.name == "drop":
            kind = "drop"
        else:
            kind = "solo"
        event = next((x for x in label.payload if isinstance(x, Event)), None)
        entry = TraceEntry(len(self.entries), kind, label, actors, event)
        self.entries.append(entry)
        return entry

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def participant(self, instance_id: int) -> str:
        return f"{self.instances.get(instance_id, 'M')}_{instance_id}"


def export_trace(trace: Trace, sink: IO[str], header: Optional[dict] = None,
                 footer: Optional[dict] = None) -> int:
    """Write one JSON object per trace entry, one per line.

    ``header``/``footer`` records (``kind`` ``meta``/``final``) are written only
    when given.  Returns the number of entry records written.
    """
    dump = lambda obj: sink.write(json.dumps(obj, separators=(",", ":")) + "\n")  # noqa: E731
    if header is not None:
        dump({"kind": "meta", **header})
    for entry in trace.entries:
        dump(entry.to_record())
    if footer is not None:
        dump({"kind": "final", **footer})
    return len(trace.entries)


def read_trace(lines) -> list[dict]:
    """Parse entry records back from exported JSON lines (meta/final skipped)."""
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if rec["kind"] in ("comm", "solo", "drop"):
            out.append(rec)
    return out


def _owner(sub: str, actors: tuple) -> Optional[int]:
    if _NUMERIC.match(sub):
        return int(sub)
    for text in (sub, *actors):
        m = _OWNER.search(text)
        if m:
            return int(m.group(1))
    return None


def msc_arrow(entry: TraceEntry, trace: Trace) -> Optional[str]:
    lab = entry.label
    if entry.kind != "comm" or lab.name not in MSC_NAMES or not _NUMERIC.match(str(lab.sub)):
        return None
    who = trace.participant(int(lab.sub))
    if lab.name == "out":
        return f"{who} ->> MC : out {entry.event.etype}"
    if lab.name == "distrib":
        return f"MC ->> {who} : distrib {entry.event.etype}"
    if lab.name == "start":
        return f"{who} ->> MC : start {lab.payload[0]}"
    if lab.name == "new_id":
        return f"MC ->> {who} : new_id {lab.payload[0]}"
    return f"{who} ->> MC : halt"


def export_msc(trace: Trace, sink: IO[str], verbose: bool = False) -> int:
    """Write a Mermaid ``sequenceDiagram``; returns the number of arrows."""
    sink.write("sequenceDiagram\n")
    if trace.meta:
        desc = " ".join(f"{k}={trace.meta[k]}" for k in sorted(trace.meta))
        sink.write(f"    %% pepvm {desc}\n")
    sink.write("    participant MC\n")
    for i in sorted(trace.instances):
        sink.write(f"    participant {trace.participant(i)}\n")
    arrows = 0
    for entry in trace.entries:
        arrow = msc_arrow(entry, trace)
        if arrow is not None:
            sink.write(f"    {arrow}\n")
            arrows += 1
        elif verbose:
            owner = _owner(str(entry.label.sub), entry.actors)
            where = "MC" if owner is None else trace.participant(owner)
            text = str(entry.label).replace(";", ",").replace("#", "")
            sink.write(f"    Note over {where} : {entry.kind} {text}\n")
    return arrows
