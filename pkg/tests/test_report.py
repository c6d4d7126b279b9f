import json

from langnsend.cli import load_script
from langnsend.lang import node
from langnsend.process import NIL, Trace
from langnsend.report import RunReport, emit_report, parse_report, report_from_run
from langnsend.semantics import RedexEvent, explore, run


def test_bpa_report_records():
    p, _ = load_script("corpus/bpa_walkthrough.lns")
    text = emit_report(report_from_run(run(p)))
    recs = [json.loads(line) for line in text.splitlines()]
    assert [r["rule"] for r in recs if r["record"] == "event"] == [
        "exec/program-step", "exec/program-step", "exec/program-end",
    ]
    assert [r["labels"] for r in recs if r["record"] == "trace"] == [["(a)", "(b)"]]
    assert recs[-1] == {"record": "final", "final": "sendtrace x<(a) (b)>.0"}
    assert list(recs[0]) == ["record", "step", "rule", "detail"]


def test_empty_report():
    text = emit_report(report_from_run(run(NIL)))
    assert text == '{"record": "final", "final": "0"}\n'


def test_report_round_trip():
    for script in ("bpa_walkthrough", "disrupt_system", "quitmode_system", "ccs_system"):
        p, _ = load_script(f"corpus/{script}.lns")
        for seed in range(4):
            r = report_from_run(run(p, "seeded", seed))
            assert parse_report(emit_report(r)) == r


def test_round_trip_handcrafted():
    r = RunReport(
        [RedexEvent("union", "u(a, b)", 3, "comm-lang"), RedexEvent("comm", "x<y>", 4)],
        "send x<y>.0",
        [("ν0", Trace((node("a"), node("in", node("y"))))), ("r", Trace())],
    )
    assert parse_report(emit_report(r)) == r


def test_disrupt_report_with_preemption():
    # the quit-mode system preempts under the interrupt rules for some seeds
    p, _ = load_script("corpus/quitmode_system.lns")
    texts = [emit_report(report_from_run(run(p, "seeded", s))) for s in range(32)]
    assert any('"(sorry)"' in t for t in texts)
    assert explore(p).traces
