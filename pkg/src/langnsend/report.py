"""Line-delimited JSON run reports.

One ``event`` record per fired rule, one ``trace`` record per finished program
execution, then a single ``final`` record holding the printed final state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .process import Trace
from .semantics import RedexEvent, RunResult
from .syntax import parse_term


@dataclass
class RunReport:
    events: list = field(default_factory=list)
    final: str = "0"
    traces: list = field(default_factory=list)  # (channel, Trace)


def report_from_run(result: RunResult) -> RunReport:
    return RunReport(
        list(result.events),
        str(result.final),
        [(t.channel, t.trace) for t in result.traces],
    )


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def emit_report(r: RunReport) -> str:
    lines = [
        _dump({"record": "event", "step": e.step_index, "rule": e.path, "detail": e.detail})
        for e in r.events
    ]
    lines += [
        _dump({"record": "trace", "channel": ch, "labels": [str(t) for t in tr.labels]})
        for ch, tr in r.traces
    ]
    lines.append(_dump({"record": "final", "final": r.final}))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> RunReport:
    r = RunReport()
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        kind = rec["record"]
        if kind == "event":
            parent, _, rule = rec["rule"].rpartition("/")
            r.events.append(RedexEvent(rule, rec["detail"], rec["step"], parent or None))
        elif kind == "trace":
            labels = tuple(parse_term(s) for s in rec["labels"])
            r.traces.append((rec["channel"], Trace(labels)))
        elif kind == "final":
            r.final = rec["final"]
        else:
            raise ValueError(f"unknown record kind {kind!r}")
    return r
