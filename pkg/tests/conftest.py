import sys
import time
from pathlib import Path

import pytest

from langnsend.cli import CORPUS, load_languages
from langnsend.lang import MetaVar, Node, union

sys.path.insert(0, str(Path(__file__).parent))

LANGUAGE_FILES = [
    "bpa", "loopOnNil", "almostDisrupt", "disruptRules", "interruptRules",
    "partialCCS", "synchOutput", "asynchOutput",
]


@pytest.fixture(scope="session")
def langs():
    ls = load_languages(LANGUAGE_FILES, [CORPUS])
    ls["disrupt"] = union(ls["almostDisrupt"], ls["disruptRules"])
    ls["interrupt"] = union(ls["almostDisrupt"], ls["interruptRules"])
    ls["bpa_disrupt"] = union(ls["bpa"], ls["disrupt"])
    ls["bpa_interrupt"] = union(ls["bpa"], ls["interrupt"])
    ls["ccs_sync"] = union(ls["partialCCS"], ls["synchOutput"])
    ls["ccs_async"] = union(ls["partialCCS"], ls["asynchOutput"])
    return ls


def to_tuple(t):
    if isinstance(t, MetaVar):
        return ("?", t.name)
    return (t.op,) + tuple(to_tuple(c) for c in t.children)


def from_tuple(t):
    if t[0] == "?":
        return MetaVar(t[1])
    return Node(t[0], tuple(from_tuple(c) for c in t[1:]))


def formula_tuple(f):
    return (f.pred,) + tuple(to_tuple(a) for a in f.args)


def rules_as_tuples(lang):
    return [
        ([formula_tuple(p) for p in r.premises], formula_tuple(r.conclusion))
        for r in lang.rules
    ]


def grammar_as_dict(lang):
    return {
        g.category: (g.root, [to_tuple(p) for p in g.productions]) for g in lang.grammar
    }


# -- acceptance bookkeeping: one summary line per criterion ----------------------

SESSION = {"start": None}
_CRITERIA: dict[str, str] = {}
_OUTCOMES: dict[str, list] = {}


def pytest_sessionstart(session):
    SESSION["start"] = time.monotonic()


def pytest_collection_modifyitems(config, items):
    # acceptance tests run last so the suite-time check sees the whole run
    items.sort(key=lambda it: it.get_closest_marker("criterion") is not None)
    for it in items:
        m = it.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA[it.nodeid] = m.args[0]


def pytest_runtest_logreport(report):
    cid = _CRITERIA.get(report.nodeid)
    if cid is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _OUTCOMES.setdefault(cid, []).append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_OUTCOMES):
        results = _OUTCOMES[cid]
        ok = all(outcome == "passed" for _, outcome in results)
        tests = ", ".join(nodeid.split("::")[-1] for nodeid, _ in results)
        tr.write_line(f"{cid} {'PASS' if ok else 'FAIL'}  ({tests})")
