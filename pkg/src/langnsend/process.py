"""Process terms, capture-avoiding substitution and structural normal forms.

Channel names, language variables and trace variables live in three separate
namespaces.  Names starting with ``ν`` are reserved for the canonical names
that normalization introduces.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from .lang import STEP, Language, Term, cached_hash, format_language


# -- traces and language expressions ---------------------------------------

@dataclass(frozen=True)
class Trace:
    labels: tuple = ()

    __hash__ = cached_hash

    def __str__(self):
        return " ".join(str(t) for t in self.labels) if self.labels else "[]"

    def __len__(self):
        return len(self.labels)

    def append(self, label: Term) -> "Trace":
        return Trace(self.labels + (label,))


@dataclass(frozen=True)
class TraceVar:
    name: str

    def __str__(self):
        return self.name


TraceRef = Union[Trace, TraceVar]


@dataclass(frozen=True)
class LangVar:
    name: str


@dataclass(frozen=True)
class LangLit:
    language: Language

    __hash__ = cached_hash


@dataclass(frozen=True)
class Union_:
    left: "LangExpr"
    right: "LangExpr"

    __hash__ = cached_hash


LangExpr = Union[LangVar, LangLit, Union_]


# -- processes --------------------------------------------------------------

@dataclass(frozen=True)
class Nil:
    pass


NIL = Nil()


@dataclass(frozen=True)
class Input:
    chan: str
    param: str
    cont: "Process" = NIL

    __hash__ = cached_hash


@dataclass(frozen=True)
class Output:
    chan: str
    arg: str
    cont: "Process" = NIL

    __hash__ = cached_hash


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"

    __hash__ = cached_hash


@dataclass(frozen=True)
class Choice:
    left: "Process"
    right: "Process"

    __hash__ = cached_hash


@dataclass(frozen=True)
class Restrict:
    name: str
    body: "Process"

    __hash__ = cached_hash


@dataclass(frozen=True)
class Replicate:
    body: "Process"

    __hash__ = cached_hash


@dataclass(frozen=True)
class Exec:
    lang: LangExpr
    chan: str
    program: Term
    trace: TraceRef = Trace()
    step_pred: str = STEP

    __hash__ = cached_hash


@dataclass(frozen=True)
class IsInTrace:
    label: Term
    trace: TraceRef
    then: "Process" = NIL
    orelse: "Process" = NIL

    __hash__ = cached_hash


@dataclass(frozen=True)
class LangInput:
    chan: str
    var: str
    cont: "Process" = NIL

    __hash__ = cached_hash


@dataclass(frozen=True)
class LangOutput:
    chan: str
    lang: LangExpr
    cont: "Process" = NIL

    __hash__ = cached_hash


@dataclass(frozen=True)
class TraceInput:
    chan: str
    var: str
    cont: "Process" = NIL

    __hash__ = cached_hash


@dataclass(frozen=True)
class TraceOutput:
    chan: str
    trace: TraceRef
    cont: "Process" = NIL

    __hash__ = cached_hash


Process = Union[
    Nil, Input, Output, Par, Choice, Restrict, Replicate, Exec, IsInTrace,
    LangInput, LangOutput, TraceInput, TraceOutput,
]

PREFIXES = (Input, Output, LangInput, LangOutput, TraceInput, TraceOutput)


def par(*procs: Process) -> Process:
    """Right-nested parallel composition; ``par()`` is Nil."""
    if not procs:
        return NIL
    out = procs[-1]
    for p in reversed(procs[:-1]):
        out = Par(p, out)
    return out


# -- free names and variables ----------------------------------------------

def free_names(p: Process) -> frozenset:
    return _free_names(p)


@lru_cache(maxsize=65536)
def _free_names(p):
    if isinstance(p, Nil):
        return frozenset()
    if isinstance(p, Input):
        return frozenset({p.chan}) | (_free_names(p.cont) - {p.param})
    if isinstance(p, Output):
        return frozenset({p.chan, p.arg}) | _free_names(p.cont)
    if isinstance(p, (Par, Choice)):
        return _free_names(p.left) | _free_names(p.right)
    if isinstance(p, Restrict):
        return _free_names(p.body) - {p.name}
    if isinstance(p, Replicate):
        return _free_names(p.body)
    if isinstance(p, Exec):
        return frozenset({p.chan})
    if isinstance(p, IsInTrace):
        return _free_names(p.then) | _free_names(p.orelse)
    if isinstance(p, (LangInput, LangOutput, TraceInput, TraceOutput)):
        return frozenset({p.chan}) | _free_names(p.cont)
    raise TypeError(p)


def lang_vars(e: LangExpr) -> frozenset:
    if isinstance(e, LangVar):
        return frozenset({e.name})
    if isinstance(e, Union_):
        return lang_vars(e.left) | lang_vars(e.right)
    return frozenset()


def free_lang_vars(p: Process) -> frozenset:
    return _free_vars(p, "lang")


def free_trace_vars(p: Process) -> frozenset:
    return _free_vars(p, "trace")


def _free_vars(p, sort):
    if isinstance(p, Nil):
        return frozenset()
    if isinstance(p, (Input, Output, Restrict, Replicate)):
        return _free_vars(p.body if isinstance(p, (Restrict, Replicate)) else p.cont, sort)
    if isinstance(p, (Par, Choice)):
        return _free_vars(p.left, sort) | _free_vars(p.right, sort)
    if isinstance(p, Exec):
        if sort == "lang":
            return lang_vars(p.lang)
        return frozenset({p.trace.name}) if isinstance(p.trace, TraceVar) else frozenset()
    if isinstance(p, IsInTrace):
        inner = _free_vars(p.then, sort) | _free_vars(p.orelse, sort)
        if sort == "trace" and isinstance(p.trace, TraceVar):
            inner |= {p.trace.name}
        return inner
    if isinstance(p, LangInput):
        inner = _free_vars(p.cont, sort)
        return inner - {p.var} if sort == "lang" else inner
    if isinstance(p, LangOutput):
        inner = _free_vars(p.cont, sort)
        return inner | lang_vars(p.lang) if sort == "lang" else inner
    if isinstance(p, TraceInput):
        inner = _free_vars(p.cont, sort)
        return inner - {p.var} if sort == "trace" else inner
    if isinstance(p, TraceOutput):
        inner = _free_vars(p.cont, sort)
        if sort == "trace" and isinstance(p.trace, TraceVar):
            inner |= {p.trace.name}
        return inner
    raise TypeError(p)


def is_closed(p: Process) -> bool:
    return not free_lang_vars(p) and not free_trace_vars(p)


# -- capture-avoiding substitution -----------------------------------------

def _fresh(base: str, avoid) -> str:
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in avoid:
            return cand


def subst_channel(p: Process, new: str, old: str) -> Process:
    """``p{new/old}``: replace free occurrences of channel ``old`` by ``new``."""
    if new == old:
        return p
    return _subst_chan(p, new, old)


def _rn(n, new, old):
    return new if n == old else n


def _subst_chan(p, new, old):
    if old not in _free_names(p):
        return p
    if isinstance(p, Input):
        param, cont = p.param, p.cont
        if param == old:
            return Input(_rn(p.chan, new, old), param, cont)
        if param == new:
            param = _fresh(param, _free_names(cont) | {new, old})
            cont = _subst_chan(cont, param, p.param)
        return Input(_rn(p.chan, new, old), param, _subst_chan(cont, new, old))
    if isinstance(p, Restrict):
        name, body = p.name, p.body
        if name == new:
            name = _fresh(name, _free_names(body) | {new, old})
            body = _subst_chan(body, name, p.name)
        return Restrict(name, _subst_chan(body, new, old))
    if isinstance(p, Output):
        return Output(_rn(p.chan, new, old), _rn(p.arg, new, old), _subst_chan(p.cont, new, old))
    if isinstance(p, Par):
        return Par(_subst_chan(p.left, new, old), _subst_chan(p.right, new, old))
    if isinstance(p, Choice):
        return Choice(_subst_chan(p.left, new, old), _subst_chan(p.right, new, old))
    if isinstance(p, Replicate):
        return Replicate(_subst_chan(p.body, new, old))
    if isinstance(p, Exec):
        return Exec(p.lang, _rn(p.chan, new, old), p.program, p.trace, p.step_pred)
    if isinstance(p, IsInTrace):
        return IsInTrace(p.label, p.trace, _subst_chan(p.then, new, old), _subst_chan(p.orelse, new, old))
    if isinstance(p, LangInput):
        return LangInput(_rn(p.chan, new, old), p.var, _subst_chan(p.cont, new, old))
    if isinstance(p, LangOutput):
        return LangOutput(_rn(p.chan, new, old), p.lang, _subst_chan(p.cont, new, old))
    if isinstance(p, TraceInput):
        return TraceInput(_rn(p.chan, new, old), p.var, _subst_chan(p.cont, new, old))
    if isinstance(p, TraceOutput):
        return TraceOutput(_rn(p.chan, new, old), p.trace, _subst_chan(p.cont, new, old))
    raise TypeError(p)


def _subst_lexpr(e, lang, var):
    if isinstance(e, LangVar):
        return LangLit(lang) if e.name == var else e
    if isinstance(e, Union_):
        return Union_(_subst_lexpr(e.left, lang, var), _subst_lexpr(e.right, lang, var))
    return e


def subst_lang(p: Process, lang: Language, var: str) -> Process:
    """``p{lang/var}``.  Language values are closed, so no capture can occur."""
    if var not in free_lang_vars(p):
        return p
    return _map_vars(p, lambda e: _subst_lexpr(e, lang, var), None, "lang", var)


def subst_trace(p: Process, trace: Trace, var: str) -> Process:
    """``p{trace/var}``.  Trace values are closed, so no capture can occur."""
    if var not in free_trace_vars(p):
        return p

    def tr(t):
        return trace if isinstance(t, TraceVar) and t.name == var else t

    return _map_vars(p, None, tr, "trace", var)


def _map_vars(p, on_lang, on_trace, sort, var):
    def go(q):
        if isinstance(q, Nil):
            return q
        if isinstance(q, Input):
            return Input(q.chan, q.param, go(q.cont))
        if isinstance(q, Output):
            return Output(q.chan, q.arg, go(q.cont))
        if isinstance(q, Par):
            return Par(go(q.left), go(q.right))
        if isinstance(q, Choice):
            return Choice(go(q.left), go(q.right))
        if isinstance(q, Restrict):
            return Restrict(q.name, go(q.body))
        if isinstance(q, Replicate):
            return Replicate(go(q.body))
        if isinstance(q, Exec):
            lang = on_lang(q.lang) if on_lang else q.lang
            trace = on_trace(q.trace) if on_trace else q.trace
            return Exec(lang, q.chan, q.program, trace, q.step_pred)
        if isinstance(q, IsInTrace):
            trace = on_trace(q.trace) if on_trace else q.trace
            return IsInTrace(q.label, trace, go(q.then), go(q.orelse))
        if isinstance(q, LangInput):
            if sort == "lang" and q.var == var:
                return q
            return LangInput(q.chan, q.var, go(q.cont))
        if isinstance(q, LangOutput):
            lang = on_lang(q.lang) if on_lang else q.lang
            return LangOutput(q.chan, lang, go(q.cont))
        if isinstance(q, TraceInput):
            if sort == "trace" and q.var == var:
                return q
            return TraceInput(q.chan, q.var, go(q.cont))
        if isinstance(q, TraceOutput):
            trace = on_trace(q.trace) if on_trace else q.trace
            return TraceOutput(q.chan, trace, go(q.cont))
        raise TypeError(q)

    return go(p)


def _rename_lang_binder(p: LangInput, new: str) -> LangInput:
    cont = _map_vars(
        p.cont, lambda e: _rename_lexpr(e, p.var, new), None, "lang", p.var
    )
    return LangInput(p.chan, new, cont)


def _rename_lexpr(e, old, new):
    if isinstance(e, LangVar):
        return LangVar(new) if e.name == old else e
    if isinstance(e, Union_):
        return Union_(_rename_lexpr(e.left, old, new), _rename_lexpr(e.right, old, new))
    return e


def _rename_trace_binder(p: TraceInput, new: str) -> TraceInput:
    def tr(t):
        return TraceVar(new) if isinstance(t, TraceVar) and t.name == p.var else t

    return TraceInput(p.chan, new, _map_vars(p.cont, None, tr, "trace", p.var))


# -- printing ----------------------------------------------------------------

def render_lang(e: LangExpr) -> str:
    if isinstance(e, LangVar):
        return e.name
    if isinstance(e, Union_):
        return f"union({render_lang(e.left)}, {render_lang(e.right)})"
    if e.language.name:
        return e.language.name
    body = format_language(e.language).strip().replace("\n", "; ")
    return "{" + " ".join(body.split()) + "}"


def render_trace(t: TraceRef) -> str:
    return str(t)


def render(p: Process) -> str:
    """Concrete syntax accepted by the script parser."""
    return _render(p, 0)


# precedence: 0 = parallel, 1 = choice, 2 = prefix/atomic
def _render(p, prec, lang=render_lang):
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Par):
        s = f"{_render(p.left, 1, lang)} | {_render(p.right, 0, lang)}"
        return s if prec == 0 else f"({s})"
    if isinstance(p, Choice):
        s = f"{_render(p.left, 2, lang)} + {_render(p.right, 1, lang)}"
        return s if prec <= 1 else f"({s})"
    if isinstance(p, Restrict):
        return f"new {p.name}.{_render(p.body, 2, lang)}"
    if isinstance(p, Replicate):
        return f"!{_render(p.body, 2, lang)}"
    if isinstance(p, Input):
        return f"{p.chan}({p.param}).{_render(p.cont, 2, lang)}"
    if isinstance(p, Output):
        return f"send {p.chan}<{p.arg}>.{_render(p.cont, 2, lang)}"
    if isinstance(p, LangInput):
        return f"recvlang {p.chan}({p.var}).{_render(p.cont, 2, lang)}"
    if isinstance(p, LangOutput):
        return f"sendlang {p.chan}<{lang(p.lang)}>.{_render(p.cont, 2, lang)}"
    if isinstance(p, TraceInput):
        return f"recvtrace {p.chan}({p.var}).{_render(p.cont, 2, lang)}"
    if isinstance(p, TraceOutput):
        return f"sendtrace {p.chan}<{render_trace(p.trace)}>.{_render(p.cont, 2, lang)}"
    if isinstance(p, Exec):
        args = [lang(p.lang), p.chan, str(p.program)]
        if p.trace != Trace() or p.step_pred != STEP:
            args.append(render_trace(p.trace))
        if p.step_pred != STEP:
            args.append(p.step_pred)
        return "exec(" + ", ".join(args) + ")"
    if isinstance(p, IsInTrace):
        return (
            f"(if {p.label} in {render_trace(p.trace)} then "
            f"{_render(p.then, 1, lang)} else {_render(p.orelse, 1, lang)})"
        )
    raise TypeError(p)


# -- structural normal form --------------------------------------------------

@dataclass(frozen=True)
class NormalForm:
    """``new ν0 ... νk.(t1 | ... | tn)`` with canonical names and sorted threads."""

    restricted: tuple = ()
    threads: tuple = ()

    __hash__ = cached_hash

    def to_process(self) -> Process:
        out = par(*self.threads)
        for n in reversed(self.restricted):
            out = Restrict(n, out)
        return out

    def __str__(self):
        return render(self.to_process())


_TEMP = "\x00"
_PERMUTE_LIMIT = 5
_temp_counter = itertools.count()


def normalize(p: Process) -> NormalForm:
    names, threads = _canon(p, 0)
    return NormalForm(tuple(names), tuple(threads))


def canonical(p: Process, depth: int = 0) -> Process:
    """Canonical representative of the congruence class of ``p``."""
    names, threads = _canon(p, depth)
    out = par(*threads)
    for n in reversed(names):
        out = Restrict(n, out)
    return out


def _flatten(p, names, threads):
    if isinstance(p, Nil):
        return
    if isinstance(p, Par):
        _flatten(p.left, names, threads)
        _flatten(p.right, names, threads)
    elif isinstance(p, Restrict):
        tmp = f"{_TEMP}{next(_temp_counter)}"
        names.append(tmp)
        _flatten(_subst_chan(p.body, tmp, p.name), names, threads)
    else:
        threads.append(p)


def _canon(p, depth):
    names: list[str] = []
    raw: list = []
    _flatten(p, names, raw)
    while True:
        used = [n for n in names if any(n in _free_names(t) for t in raw)]
        k = len(used)
        threads = [_canon_thread(t, depth + k) for t in raw]
        keep = _absorb(raw, threads, used, depth + k)
        if len(keep) == len(raw):
            names = used
            break
        raw = [raw[i] for i in keep]
        names = used
    if not names:
        threads.sort(key=_key)
        return [], threads
    k = len(names)
    final = [f"ν{depth + i}" for i in range(k)]
    if k <= _PERMUTE_LIMIT:
        orders = itertools.permutations(names)
    else:
        orders = [_heuristic_order(names, threads)]
    best = None
    for order in orders:
        mapping = dict(zip(order, final))
        cand = sorted(
            (_canon_thread(_rename_free(t, mapping), depth + k) for t in raw), key=_key
        )
        ckey = tuple(_key(t) for t in cand)
        if best is None or ckey < best[0]:
            best = (ckey, cand)
    return final, best[1]


def _rename_free(t, mapping):
    # temp names are unique and never clash with binders
    for old, new in mapping.items():
        t = _subst_chan(t, new, old)
    return t


def _heuristic_order(names, threads):
    masked = sorted(threads, key=lambda t: _masked_key(t))
    order = []
    for t in masked:
        for n in _occurrence_order(t):
            if n in names and n not in order:
                order.append(n)
    order.extend(n for n in names if n not in order)
    return tuple(order)


def _occurrence_order(t):
    out = []
    for tok in render(t).replace("(", " ").replace(")", " ").replace("<", " ").replace(">", " ").replace(".", " ").replace(",", " ").split():
        if tok.startswith(_TEMP):
            out.append(tok)
    return out


def _masked_key(t):
    s = render(t)
    out = []
    i = 0
    while i < len(s):
        if s[i] == _TEMP:
            out.append("*")
            i += 1
            while i < len(s) and s[i].isdigit():
                i += 1
        else:
            out.append(s[i])
            i += 1
    return "".join(out)


def _absorb(raw, threads, names, depth):
    """Indices of threads kept after folding copies ``P | !P`` into ``!P``."""
    alive = list(range(len(threads)))
    changed = True
    while changed:
        changed = False
        for r in alive:
            if not isinstance(threads[r], Replicate):
                continue
            hit = None
            for body in _unfoldable_bodies(threads[r].body):
                hit = _find_copy(body, r, alive, raw, threads, names, depth)
                if hit:
                    break
            if hit:
                alive = [i for i in alive if i not in hit]
                changed = True
                break
    return alive


def _unfoldable_bodies(body):
    """``body`` plus the bodies of replications it exposes when unfolded.

    A copy of an inner ``!Q`` can be produced by unfolding the outer
    replication, absorbing the copy of Q and folding again, so those bodies
    count too (unless they mention the outer body's own restrictions).
    """
    out = [body]
    bnames: list[str] = []
    parts: list = []
    _flatten(body, bnames, parts)
    for c in parts:
        if isinstance(c, Replicate) and not any(n in _free_names(c) for n in bnames):
            out += _unfoldable_bodies(c.body)
    return out


def _find_copy(body, r, alive, raw, threads, names, depth):
    """Threads forming one unfolded copy of ``body``, or None.

    The copy's own restrictions must map onto outer restricted names that
    nothing outside the copy mentions.
    """
    bnames: list[str] = []
    parts: list = []
    _flatten(body, bnames, parts)
    if not parts:
        return None
    bnames = [n for n in bnames if any(n in _free_names(c) for c in parts)]
    pool = [i for i in alive if i != r]
    for targets in itertools.permutations(names, len(bnames)):
        cand = parts
        for old, new in zip(bnames, targets):
            cand = [_subst_chan(c, new, old) for c in cand]
        hit: list[int] = []
        for c in (_canon_thread(c, depth) for c in cand):
            i = next((i for i in pool if i not in hit and threads[i] == c), None)
            if i is None:
                break
            hit.append(i)
        else:
            rest = [i for i in alive if i not in hit]
            if not any(n in _free_names(raw[i]) for n in targets for i in rest):
                return hit
    return None


def _canon_thread(t, depth):
    if isinstance(t, Input):
        n = f"ν{depth}"
        # ν-names at this depth are never free below it, so renaming cannot capture
        cont = _subst_chan(t.cont, n, t.param) if t.param != n else t.cont
        return Input(t.chan, n, canonical(cont, depth + 1))
    if isinstance(t, Output):
        return Output(t.chan, t.arg, canonical(t.cont, depth))
    if isinstance(t, Choice):
        return Choice(canonical(t.left, depth), canonical(t.right, depth))
    if isinstance(t, Replicate):
        return Replicate(canonical(t.body, depth))
    if isinstance(t, IsInTrace):
        return IsInTrace(t.label, t.trace, canonical(t.then, depth), canonical(t.orelse, depth))
    if isinstance(t, LangInput):
        q = _rename_lang_binder(t, f"l{depth}")
        return LangInput(q.chan, q.var, canonical(q.cont, depth + 1))
    if isinstance(t, LangOutput):
        return LangOutput(t.chan, t.lang, canonical(t.cont, depth))
    if isinstance(t, TraceInput):
        q = _rename_trace_binder(t, f"tr{depth}")
        return TraceInput(q.chan, q.var, canonical(q.cont, depth + 1))
    if isinstance(t, TraceOutput):
        return TraceOutput(t.chan, t.trace, canonical(t.cont, depth))
    if isinstance(t, Exec):
        return t
    raise TypeError(t)


def _key(t) -> str:
    return _render_key(t)


@lru_cache(maxsize=65536)
def _render_key(t):
    # sort keys must not depend on language names, which equality ignores
    return _render(t, 0, _anon_lang)


def _anon_lang(e):
    if isinstance(e, LangVar):
        return e.name
    if isinstance(e, Union_):
        return f"union({_anon_lang(e.left)}, {_anon_lang(e.right)})"
    return _lang_body(e.language)


@lru_cache(maxsize=4096)
def _lang_body(lang):
    return "{" + " ".join(format_language(lang, with_name=False).split()) + "}"
