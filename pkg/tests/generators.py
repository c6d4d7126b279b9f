"""Seeded random generators for terms, processes and congruence rewrites."""
from __future__ import annotations

import dataclasses
import itertools
import random

from langnsend.lang import MetaVar, Node
from langnsend.process import (
    NIL, Choice, Exec, Input, IsInTrace, LangInput, LangLit, LangOutput, LangVar, Nil, Output,
    Par, Replicate, Restrict, Trace, TraceInput, TraceOutput, TraceVar, Union_, free_names,
    subst_channel,
)

NAMES = ["a", "b", "c", "x", "y"]
VARS = ["X", "Y", "Z", "W"]
_fresh = itertools.count()


def fresh(base="n"):
    return f"{base}{next(_fresh)}"


# -- terms -------------------------------------------------------------------------

def random_term(rng: random.Random, depth=4, vars=VARS):
    r = rng.random()
    if depth == 0 or r < 0.3:
        if rng.random() < 0.6:
            return MetaVar(rng.choice(vars))
        return Node(rng.choice("ab"), ())
    op = rng.choice(["f", "f", "g", "h"])
    arity = {"f": 2, "g": 1, "h": 3}[op]
    return Node(op, tuple(random_term(rng, depth - 1, vars) for _ in range(arity)))


def mutate(rng, t, depth=3):
    """A term sharing structure with t, so unification often succeeds."""
    if isinstance(t, MetaVar) or rng.random() < 0.25:
        return random_term(rng, depth)
    kids = list(t.children)
    if kids:
        i = rng.randrange(len(kids))
        kids[i] = mutate(rng, kids[i], depth)
    return Node(t.op, tuple(kids))


def random_term_pair(rng):
    t1 = random_term(rng)
    r = rng.random()
    if r < 0.4:
        return t1, mutate(rng, t1)
    if r < 0.5:
        v = MetaVar(rng.choice(VARS))
        return v, Node("f", (v, random_term(rng, 2)))  # forces an occurs check
    return t1, random_term(rng)


# -- processes ---------------------------------------------------------------------

ACT = [Node(a, ()) for a in ("a", "b", "c", "sorry")]


def random_program(rng, depth=2):
    if depth == 0 or rng.random() < 0.4:
        return Node("act", (rng.choice(ACT),))
    return Node(rng.choice(["seq", "+"]), (random_program(rng, depth - 1), random_program(rng, depth - 1)))


def random_trace(rng):
    return Trace(tuple(rng.choice(ACT) for _ in range(rng.randrange(3))))


def random_process(rng, depth, langs, bound=()):
    """A closed process of nesting depth <= depth over a small name pool."""
    names = NAMES + list(bound)
    if depth <= 0:
        return NIL
    k = rng.randrange(12)
    d = depth - 1
    if k == 0:
        return NIL
    if k == 1:
        return Output(rng.choice(names), rng.choice(names), random_process(rng, d, langs, bound))
    if k == 2:
        y = rng.choice(["u", "v", "w"])
        return Input(rng.choice(names), y, random_process(rng, d, langs, (*bound, y)))
    if k in (3, 4):
        return Par(random_process(rng, d, langs, bound), random_process(rng, d, langs, bound))
    if k == 5:
        return Choice(
            Input(rng.choice(names), "u", random_process(rng, d - 1, langs, (*bound, "u"))),
            Output(rng.choice(names), rng.choice(names), random_process(rng, d - 1, langs, bound)),
        )
    if k == 6:
        x = rng.choice(["x", "y", "r", "s"])
        return Restrict(x, random_process(rng, d, langs, (*bound, x)))
    if k == 7:
        return Replicate(random_process(rng, min(d, 2), langs, bound))
    if k == 8:
        lang = LangLit(rng.choice(langs))
        return Exec(lang, rng.choice(names), random_program(rng), random_trace(rng))
    if k == 9:
        return IsInTrace(rng.choice(ACT), random_trace(rng),
                         random_process(rng, d, langs, bound), random_process(rng, d, langs, bound))
    if k == 10:
        body = Exec(Union_(LangVar("l"), LangLit(langs[0])), rng.choice(names), random_program(rng))
        return Par(LangInput(rng.choice(names), "l", body),
                   LangOutput(rng.choice(names), LangLit(rng.choice(langs)), random_process(rng, d, langs, bound)))
    body = IsInTrace(rng.choice(ACT), TraceVar("tr"), random_process(rng, d, langs, bound), NIL)
    return Par(TraceInput(rng.choice(names), "tr", body),
               TraceOutput(rng.choice(names), random_trace(rng), NIL))


# -- structural congruence moves ------------------------------------------------------

def _children(p):
    if isinstance(p, (Par, Choice)):
        return ["left", "right"]
    if isinstance(p, (Restrict, Replicate)):
        return ["body"]
    if isinstance(p, IsInTrace):
        return ["then", "orelse"]
    if isinstance(p, (Input, Output, LangInput, LangOutput, TraceInput, TraceOutput)):
        return ["cont"]
    return []


def _with(p, field, value):
    return dataclasses.replace(p, **{field: value})


def congruent_move(rng, p):
    """Apply one congruence axiom (either direction) at one random position."""
    kids = _children(p)
    if kids and rng.random() < 0.6:
        f = rng.choice(kids)
        return _with(p, f, congruent_move(rng, getattr(p, f)))
    return _axiom(rng, p)


def _axiom(rng, p):
    moves = ["unit"]
    if isinstance(p, Par):
        moves += ["comm", "assoc", "fold", "extrude_in"]
    if isinstance(p, Replicate):
        moves.append("unfold")
    if isinstance(p, Restrict):
        moves += ["alpha", "extrude_out", "swap", "drop"]
    if isinstance(p, Input):
        moves.append("alpha_in")
    if isinstance(p, Nil):
        moves.append("new_nil")
    m = rng.choice(moves)
    if m == "unit":
        return Par(p, NIL) if rng.random() < 0.5 else Par(NIL, p)
    if m == "comm":
        return Par(p.right, p.left)
    if m == "assoc":
        if isinstance(p.left, Par):
            return Par(p.left.left, Par(p.left.right, p.right))
        if isinstance(p.right, Par):
            return Par(Par(p.left, p.right.left), p.right.right)
        return p
    if m == "fold":
        # P | !P -> !P
        if isinstance(p.right, Replicate) and p.right.body == p.left:
            return p.right
        return p
    if m == "unfold":
        return Par(p.body, p)
    if m == "alpha":
        n = fresh("z")
        return Restrict(n, subst_channel(p.body, n, p.name))
    if m == "alpha_in":
        n = fresh("w")
        return Input(p.chan, n, subst_channel(p.cont, n, p.param))
    if m == "swap":
        if isinstance(p.body, Restrict):
            return Restrict(p.body.name, Restrict(p.name, p.body.body))
        return p
    if m == "drop":
        if isinstance(p.body, Nil):
            return NIL
        return p
    if m == "new_nil":
        return Restrict(fresh("z"), NIL)
    if m == "extrude_out":
        # (nu x)(P | Q) -> (nu x)P | Q when x is not free in Q
        b = p.body
        if isinstance(b, Par) and p.name not in free_names(b.right):
            return Par(Restrict(p.name, b.left), b.right)
        return p
    if m == "extrude_in":
        # (nu x)P | Q -> (nu x)(P | Q), renaming x away from Q first
        if isinstance(p.left, Restrict):
            n = fresh("z")
            return Restrict(n, Par(subst_channel(p.left.body, n, p.left.name), p.right))
        return p
    raise AssertionError(m)


def congruent_variant(rng, p, moves=6):
    for _ in range(moves):
        p = congruent_move(rng, p)
    return p
