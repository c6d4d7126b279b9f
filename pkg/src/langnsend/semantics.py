"""Reduction of processes: language building, program execution, communication.

States are kept in structural normal form.  ``reduce_candidates`` lists every
enabled redex of a state in a deterministic order; ``run`` follows one path
through them under a scheduling policy and ``explore`` enumerates them all.
"""
from __future__ import annotations

import random
from collections import Counter, deque
from dataclasses import dataclass, field, replace

from .engine import DEFAULT_BUDGET, SearchBudget, compile_language, query_step
from .errors import LnsError, SortMismatch, StateLimit, StepLimit, UnboundVariable
from .lang import Language, Term, union
from .process import (
    NIL, Choice, Exec, Input, IsInTrace, LangExpr, LangInput, LangLit, LangOutput,
    LangVar, NormalForm, Output, Process, Replicate, Restrict, Trace, TraceInput,
    TraceOutput, TraceVar, Union_, _flatten, _fresh, free_names, free_lang_vars,
    free_trace_vars, normalize, par, render, subst_channel, subst_lang, subst_trace,
)

RULE_NAMES = frozenset({
    "comm", "comm-lang", "comm-trace", "exec", "exec-ctx", "is-in-trace1",
    "is-in-trace2", "program-step", "program-end", "union", "union-ctx1", "union-ctx2",
})


@dataclass(frozen=True)
class RedexEvent:
    rule_name: str
    detail: str
    step_index: int = 0
    parent: str | None = None

    def __post_init__(self):
        if self.rule_name not in RULE_NAMES:
            raise ValueError(f"unknown rule {self.rule_name!r}")

    @property
    def path(self) -> str:
        return f"{self.parent}/{self.rule_name}" if self.parent else self.rule_name


@dataclass(frozen=True)
class CompletedTrace:
    channel: str
    trace: Trace
    language: Language = field(compare=True)

    @property
    def labels(self) -> tuple:
        return self.trace.labels


@dataclass(frozen=True)
class Candidate:
    process: Process
    events: tuple
    unfolded: tuple = ()
    completed: CompletedTrace | None = None

    @property
    def event(self) -> RedexEvent:
        return self.events[0]


def describe_lang(e: LangExpr) -> str:
    if isinstance(e, LangVar):
        return e.name
    if isinstance(e, Union_):
        return f"union({describe_lang(e.left)}, {describe_lang(e.right)})"
    lang = e.language
    if lang.name:
        return lang.name
    return f"⟨{len(lang.grammar)} categories, {len(lang.rules)} rules⟩"


# -- language building ------------------------------------------------------

@dataclass(frozen=True)
class Done:
    language: Language


def lan_step(e: LangExpr) -> LangExpr | Done:
    """One language-building step; a literal reports Done."""
    if isinstance(e, LangLit):
        return Done(e.language)
    return _lan_step(e)[0]


def _lan_step(e):
    """Return ``(next expression, rule names used, leftmost first)``."""
    if isinstance(e, LangVar):
        raise UnboundVariable(f"language variable {e.name} is not bound")
    if isinstance(e, LangLit):
        raise ValueError("a literal does not step")
    if not isinstance(e.left, LangLit):
        left, rules = _lan_step(e.left)
        return Union_(left, e.right), ["union-ctx1", *rules]
    if not isinstance(e.right, LangLit):
        right, rules = _lan_step(e.right)
        return Union_(e.left, right), ["union-ctx2", *rules]
    return LangLit(union(e.left.language, e.right.language)), ["union"]


def evaluate_lang(e: LangExpr) -> tuple[Language, list[str]]:
    """Run ``lan_step`` to a literal; also return every rule name fired."""
    fired: list[str] = []
    while not isinstance(e, LangLit):
        e, rules = _lan_step(e)
        fired.extend(rules)
    return e.language, fired


# -- program execution ------------------------------------------------------

def is_in_trace(t: Term, trace: Trace) -> bool:
    return t in trace.labels


def exe_steps(e: Exec, budget: SearchBudget = DEFAULT_BUDGET) -> list[tuple[Process, RedexEvent]]:
    """Every →exe successor of an execution whose language is a literal."""
    if not isinstance(e.lang, LangLit):
        raise ValueError("language of the execution is not evaluated yet")
    if not isinstance(e.trace, Trace):
        raise UnboundVariable(f"trace variable {e.trace} is not bound")
    prog = compile_language(e.lang.language)
    steps = query_step(prog, e.program, budget, e.step_pred)
    if not steps:
        ev = RedexEvent("program-end", f"{e.program} stuck, {e.chan}<{e.trace}>", parent="exec")
        return [(TraceOutput(e.chan, e.trace, NIL), ev)]
    out = []
    for label, target in steps:
        ev = RedexEvent("program-step", f"{e.chan}: {e.program} --{label}--> {target}", parent="exec")
        out.append((Exec(e.lang, e.chan, target, e.trace.append(label), e.step_pred), ev))
    return out


def exe_step(e: Exec, budget: SearchBudget = DEFAULT_BUDGET, pick=None) -> Process:
    """One →exe step; ``pick`` chooses among several successors (default: first)."""
    succ = exe_steps(e, budget)
    i = pick(len(succ)) if pick else 0
    return succ[i][0]


# -- candidate enumeration ---------------------------------------------------

@dataclass(frozen=True)
class _Offer:
    kind: str  # "in" | "out"
    sort: str  # "name" | "lang" | "trace"
    chan: str
    payload: object  # binder for inputs, value for outputs
    cont: Process


def _offers(t):
    if isinstance(t, Input):
        return [_Offer("in", "name", t.chan, t.param, t.cont)]
    if isinstance(t, Output):
        return [_Offer("out", "name", t.chan, t.arg, t.cont)]
    if isinstance(t, LangInput):
        return [_Offer("in", "lang", t.chan, t.var, t.cont)]
    if isinstance(t, LangOutput):
        return [_Offer("out", "lang", t.chan, t.lang, t.cont)]
    if isinstance(t, TraceInput):
        return [_Offer("in", "trace", t.chan, t.var, t.cont)]
    if isinstance(t, TraceOutput):
        return [_Offer("out", "trace", t.chan, t.trace, t.cont)]
    if isinstance(t, Choice):
        # a branch commits only through its top prefix
        return _offers(t.left) + _offers(t.right)
    return []


def _rebuild(names, threads):
    out = par(*threads)
    for n in reversed(names):
        out = Restrict(n, out)
    return out


def _local(t, budget):
    """Thread-local redexes: (new thread, events, completed trace)."""
    out = []
    if isinstance(t, Exec):
        if not isinstance(t.lang, LangLit):
            new_lang, rules = _lan_step(t.lang)
            evs = [RedexEvent("exec-ctx", f"{describe_lang(t.lang)} → {describe_lang(new_lang)}")]
            evs += [RedexEvent(r, describe_lang(t.lang), parent="exec-ctx") for r in rules]
            out.append((Exec(new_lang, t.chan, t.program, t.trace, t.step_pred), evs, None))
        else:
            for proc, ev in exe_steps(t, budget):
                done = None
                if ev.rule_name == "program-end":
                    done = CompletedTrace(t.chan, t.trace, t.lang.language)
                out.append((proc, [ev], done))
    elif isinstance(t, IsInTrace):
        if not isinstance(t.trace, Trace):
            raise UnboundVariable(f"trace variable {t.trace} is not bound")
        if is_in_trace(t.label, t.trace):
            out.append((t.then, [RedexEvent("is-in-trace1", f"{t.label} in {t.trace}")], None))
        else:
            out.append((t.orelse, [RedexEvent("is-in-trace2", f"{t.label} not in {t.trace}")], None))
    return out


def _communicate(inp, outp):
    """Continuation of the receiver after the exchange, plus events."""
    if inp.sort == "name":
        cont = subst_channel(inp.cont, outp.payload, inp.payload)
        return cont, [RedexEvent("comm", f"{inp.chan}<{outp.payload}>")]
    if inp.sort == "lang":
        lang, rules = evaluate_lang(outp.payload)
        evs = [RedexEvent("comm-lang", f"{inp.chan}<{describe_lang(outp.payload)}>")]
        evs += [RedexEvent(r, describe_lang(outp.payload), parent="comm-lang") for r in rules]
        return subst_lang(inp.cont, lang, inp.payload), evs
    if isinstance(outp.payload, TraceVar):
        raise UnboundVariable(f"trace variable {outp.payload} is not bound")
    cont = subst_trace(inp.cont, outp.payload, inp.payload)
    return cont, [RedexEvent("comm-trace", f"{inp.chan}<{outp.payload}>")]


def _enumerate(names, threads, budget, touch=None):
    out = []
    offers = [_offers(t) for t in threads]
    for i, t in enumerate(threads):
        if touch is None or i in touch:
            for new, evs, done in _local(t, budget):
                ts = list(threads)
                ts[i] = new
                out.append(Candidate(_rebuild(names, ts), tuple(evs), (), done))
        for inp in offers[i]:
            if inp.kind != "in":
                continue
            for j, other in enumerate(threads):
                if j == i or (touch is not None and i not in touch and j not in touch):
                    continue
                for outp in offers[j]:
                    if outp.kind != "out" or outp.chan != inp.chan:
                        continue
                    if outp.sort != inp.sort:
                        raise SortMismatch(
                            f"{outp.sort} output meets {inp.sort} input on channel {inp.chan}"
                        )
                    cont, evs = _communicate(inp, outp)
                    ts = list(threads)
                    ts[i] = cont
                    ts[j] = outp.cont
                    out.append(Candidate(_rebuild(names, ts), tuple(evs)))
    return out


def replication_key(t: Replicate) -> str:
    return render(t)


def reduce_candidates(
    p: Process | NormalForm, budget: SearchBudget = DEFAULT_BUDGET
) -> list[Candidate]:
    """Every enabled reduction of ``p``, in a deterministic order.

    Replicated threads contribute redexes of one freshly unfolded copy; such
    candidates record which replication they unfolded.
    """
    nf = p if isinstance(p, NormalForm) else normalize(p)
    names, threads = list(nf.restricted), list(nf.threads)
    cands = _enumerate(names, threads, budget)
    for t in threads:
        if not isinstance(t, Replicate):
            continue
        copy_names: list[str] = []
        copy_threads: list = []
        _flatten(t.body, copy_names, copy_threads)
        used = set(names)
        for th in threads:
            used |= free_names(th)
        renamed = []
        for n in copy_names:
            fresh = _fresh("ν", used)
            used.add(fresh)
            renamed.append(fresh)
            copy_threads = [subst_channel(c, fresh, n) for c in copy_threads]
        ext = threads + copy_threads
        touch = set(range(len(threads), len(ext)))
        key = replication_key(t)
        for c in _enumerate(names + renamed, ext, budget, touch):
            cands.append(replace(c, unfolded=c.unfolded + (key,)))
    return cands


def _check_closed(p):
    if isinstance(p, NormalForm):
        p = p.to_process()
    open_vars = free_lang_vars(p) | free_trace_vars(p)
    if open_vars:
        raise UnboundVariable("unbound variables: " + ", ".join(sorted(open_vars)))


# -- drivers -----------------------------------------------------------------

@dataclass
class RunResult:
    final: NormalForm
    events: list = field(default_factory=list)
    traces: list = field(default_factory=list)
    steps: int = 0


def run(
    p: Process,
    policy: str = "first",
    seed: int | None = None,
    max_steps: int = 10_000,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> RunResult:
    """Reduce ``p`` until no redex remains, picking one candidate per step.

    ``policy="first"`` always takes the first candidate; ``policy="seeded"``
    picks uniformly with a PRNG seeded by ``seed``.  Raises StepLimit (with
    the partial result attached) if redexes remain after ``max_steps`` steps.
    """
    _check_closed(p)
    if policy == "seeded":
        if seed is None:
            raise ValueError("seeded policy needs a seed")
        rng = random.Random(seed)
    elif policy != "first":
        raise ValueError(f"unknown policy {policy!r}")
    state = normalize(p)
    result = RunResult(state)
    for step in range(max_steps + 1):
        cands = reduce_candidates(state, budget)
        if not cands:
            return result
        if step == max_steps:
            raise StepLimit(f"still reducible after {max_steps} steps", result)
        c = cands[0] if policy == "first" else cands[rng.randrange(len(cands))]
        result.events.extend(replace(e, step_index=step) for e in c.events)
        if c.completed is not None:
            result.traces.append(c.completed)
        state = normalize(c.process)
        result.final = state
        result.steps = step + 1
    return result


@dataclass
class ExploreResult:
    states: set = field(default_factory=set)
    terminal: set = field(default_factory=set)
    traces: set = field(default_factory=set)
    truncated: bool = False

    def trace_labels(self) -> set:
        return {t.trace.labels for t in self.traces}


def explore(
    p: Process,
    max_depth: int = 50,
    max_states: int = 10_000,
    repl_bound: int = 2,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> ExploreResult:
    """Breadth-first closure of ``reduce_candidates``.

    Each replicated thread is unfolded at most ``repl_bound`` times along any
    path.  Terminal states are states with no candidate left within the bound.
    """
    _check_closed(p)
    start = normalize(p)
    result = ExploreResult()
    seen = {(start, frozenset())}
    result.states.add(start)
    frontier = deque([(start, Counter(), 0)])
    while frontier:
        state, unfolds, depth = frontier.popleft()
        cands = [
            c for c in reduce_candidates(state, budget)
            if all(unfolds[k] < repl_bound for k in c.unfolded)
        ]
        if not cands:
            result.terminal.add(state)
            continue
        if depth >= max_depth:
            result.truncated = True
            continue
        for c in cands:
            if c.completed is not None:
                result.traces.add(c.completed)
            nxt = normalize(c.process)
            counts = unfolds.copy()
            counts.update(c.unfolded)
            key = (nxt, frozenset(counts.items()))
            if key in seen:
                continue
            seen.add(key)
            result.states.add(nxt)
            if len(seen) > max_states:
                raise StateLimit(f"more than {max_states} states", result)
            frontier.append((nxt, counts, depth + 1))
    return result
