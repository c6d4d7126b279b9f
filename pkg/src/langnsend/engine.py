"""Logic-program view of a language and a depth-first proof search over it.

Each inference rule becomes one Horn clause (head = conclusion, body =
premises).  Without binders every clause is first order, so plain SLD
resolution with occurs check decides the provability queries needed to run
programs.  Search is depth first in clause order, leftmost premise first.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Mapping

from .errors import BudgetExhausted, NonGroundAnswer
from .lang import STEP, Formula, Language, MetaVar, Node, Term, is_ground


@dataclass(frozen=True)
class SearchBudget:
    max_depth: int = 512
    max_nodes: int = 1_000_000

    def __post_init__(self):
        if self.max_depth <= 0 or self.max_nodes <= 0:
            raise ValueError("search budget bounds must be positive")


DEFAULT_BUDGET = SearchBudget()


@dataclass(frozen=True)
class Clause:
    head: Formula
    body: tuple = ()

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- " + ", ".join(str(b) for b in self.body) + "."


@dataclass(frozen=True)
class ClauseProgram:
    clauses: tuple
    source: Language = field(compare=False, hash=False)

    def __len__(self):
        return len(self.clauses)

    def by_predicate(self, pred: str, arity: int) -> tuple:
        return _index(self)[pred, arity]


@lru_cache(maxsize=256)
def _index(prog: ClauseProgram) -> dict:
    idx: dict = {}
    for i, c in enumerate(prog.clauses):
        idx.setdefault((c.head.pred, len(c.head.args)), []).append((i, c))
    return _Index(idx)


class _Index(dict):
    def __missing__(self, key):
        return ()


def compile_language(lang: Language) -> ClauseProgram:
    return ClauseProgram(
        tuple(Clause(r.conclusion, tuple(r.premises)) for r in lang.rules), lang
    )


class Substitution(Mapping):
    """Idempotent map from metavariable names to terms."""

    __slots__ = ("_b",)

    def __init__(self, bindings=None):
        self._b = dict(bindings or {})

    def __getitem__(self, k):
        return self._b[k]

    def __iter__(self):
        return iter(self._b)

    def __len__(self):
        return len(self._b)

    def __eq__(self, other):
        if isinstance(other, Substitution):
            return self._b == other._b
        if isinstance(other, Mapping):
            return self._b == dict(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._b.items()))

    def __repr__(self):
        inner = ", ".join(f"{k} ↦ {v}" for k, v in sorted(self._b.items()))
        return "{" + inner + "}"

    def apply(self, t: Term) -> Term:
        return resolve(t, self._b)

    def apply_formula(self, f: Formula) -> Formula:
        return Formula(f.pred, tuple(resolve(a, self._b) for a in f.args))


# Triangular bindings: variables may be bound to terms containing other bound
# variables.  `walk` follows variable chains; `resolve` applies fully.

def walk(t, b):
    while isinstance(t, MetaVar) and t.name in b:
        t = b[t.name]
    return t


def resolve(t, b):
    t = walk(t, b)
    if isinstance(t, MetaVar) or not t.children:
        return t
    return Node(t.op, tuple(resolve(c, b) for c in t.children))


def _occurs(name, t, b):
    t = walk(t, b)
    if isinstance(t, MetaVar):
        return t.name == name
    return any(_occurs(name, c, b) for c in t.children)


def _unify(x, y, b) -> bool:
    """Extend ``b`` in place; on failure ``b`` may be partially extended."""
    stack = [(x, y)]
    while stack:
        x, y = stack.pop()
        x = walk(x, b)
        y = walk(y, b)
        if x is y:
            continue
        if isinstance(x, MetaVar):
            if isinstance(y, MetaVar) and y.name == x.name:
                continue
            if _occurs(x.name, y, b):
                return False
            b[x.name] = y
        elif isinstance(y, MetaVar):
            if _occurs(y.name, x, b):
                return False
            b[y.name] = x
        else:
            if x.op != y.op or len(x.children) != len(y.children):
                return False
            stack.extend(zip(x.children, y.children))
    return True


def unify(t1: Term, t2: Term, s: Substitution | None = None) -> Substitution | None:
    """Most general unifier of ``t1`` and ``t2`` extending ``s``; None on failure."""
    b = dict(s._b) if s is not None else {}
    if not _unify(t1, t2, b):
        return None
    return Substitution({k: resolve(MetaVar(k), b) for k in b})


def _rename(t, suffix):
    if isinstance(t, MetaVar):
        return MetaVar(t.name + suffix)
    if not t.children:
        return t
    return Node(t.op, tuple(_rename(c, suffix) for c in t.children))


def _renamed(clause: Clause, n: int) -> Clause:
    suffix = f"#{n}"
    return Clause(
        Formula(clause.head.pred, tuple(_rename(a, suffix) for a in clause.head.args)),
        tuple(Formula(f.pred, tuple(_rename(a, suffix) for a in f.args)) for f in clause.body),
    )


@dataclass(frozen=True)
class Derivation:
    """One node of a proof tree: a ground-or-open formula and the clause used."""

    conclusion: Formula
    clause_index: int
    premises: tuple = ()


def derivations(
    prog: ClauseProgram, goal: Formula, budget: SearchBudget = DEFAULT_BUDGET
) -> Iterator[tuple[Substitution, Derivation]]:
    """Yield ``(answer, proof)`` pairs for ``goal`` in depth-first order.

    Raises BudgetExhausted as soon as the search explores more than
    ``budget.max_nodes`` resolution steps or needs a derivation deeper than
    ``budget.max_depth``.
    """
    goal_vars = sorted(goal.metavars())
    fresh = itertools.count()
    nodes = 0
    # a state is (pending goals as a cons list of (formula, depth), bindings, proof log)
    stack = [(((goal, 1), None), {}, None)]
    while stack:
        goals, b, log = stack.pop()
        if goals is None:
            yield _answer(goal_vars, b), _rebuild(prog, log, b)
            continue
        (g, depth), rest = goals
        if depth > budget.max_depth:
            raise BudgetExhausted(f"derivation deeper than {budget.max_depth} at {g}")
        pushes = []
        args = [walk(a, b) for a in g.args]
        for idx, clause in prog.by_predicate(g.pred, len(g.args)):
            if _clash(args, clause.head.args):
                continue
            c = _renamed(clause, next(fresh))
            nb = dict(b)
            if not all(_unify(x, y, nb) for x, y in zip(g.args, c.head.args)):
                continue
            nodes += 1
            if nodes > budget.max_nodes:
                raise BudgetExhausted(f"more than {budget.max_nodes} resolution steps")
            new_goals = rest
            for prem in reversed(c.body):
                new_goals = ((prem, depth + 1), new_goals)
            pushes.append((new_goals, nb, ((g, idx), log)))
        stack.extend(reversed(pushes))


def _clash(args, head_args) -> bool:
    # cheap outermost-symbol test so most non-matching clauses skip renaming
    for x, y in zip(args, head_args):
        if isinstance(x, Node) and isinstance(y, Node):
            if x.op != y.op or len(x.children) != len(y.children):
                return True
    return False


def solve(
    prog: ClauseProgram, goal: Formula, budget: SearchBudget = DEFAULT_BUDGET
) -> Iterator[Substitution]:
    for answer, _ in derivations(prog, goal, budget):
        yield answer


def _answer(goal_vars, b) -> Substitution:
    out = {v: resolve(MetaVar(v), b) for v in goal_vars}
    # residual clause variables get neutral names that no clause can contain
    residual: dict[str, MetaVar] = {}

    def tidy(t):
        if isinstance(t, MetaVar):
            if t.name in goal_vars:
                return t
            if t.name not in residual:
                residual[t.name] = MetaVar(f"_{len(residual)}")
            return residual[t.name]
        if not t.children:
            return t
        return Node(t.op, tuple(tidy(c) for c in t.children))

    return Substitution({v: tidy(t) for v, t in out.items() if t != MetaVar(v)})


def _rebuild(prog, log, b) -> Derivation:
    steps = []
    while log is not None:
        steps.append(log[0])
        log = log[1]
    steps.reverse()
    it = iter(steps)

    def build():
        g, idx = next(it)
        kids = tuple(build() for _ in prog.clauses[idx].body)
        return Derivation(
            Formula(g.pred, tuple(resolve(a, b) for a in g.args)), idx, kids
        )

    return build()


_LABEL = MetaVar("?label")
_TARGET = MetaVar("?target")


def query_step(
    prog: ClauseProgram,
    t: Term,
    budget: SearchBudget = DEFAULT_BUDGET,
    step_pred: str = STEP,
) -> list[tuple[Term, Term]]:
    """All ``(label, target)`` pairs with ``(step_pred label t target)`` provable.

    Answers come in proof-search order with repeats removed.  An empty list
    means the search finished within budget and found nothing.
    """
    if not is_ground(t):
        raise ValueError(f"cannot query steps of non-ground term {t}")
    return list(_query_step(prog, t, budget, step_pred))


@lru_cache(maxsize=65536)
def _query_step(prog, t, budget, step_pred):
    out = []
    seen = set()
    for s in solve(prog, Formula(step_pred, (_LABEL, t, _TARGET)), budget):
        label = s.get(_LABEL.name, _LABEL)
        target = s.get(_TARGET.name, _TARGET)
        if not (is_ground(label) and is_ground(target)):
            raise NonGroundAnswer(f"step of {t} leaves {label} / {target} open")
        if (label, target) not in seen:
            seen.add((label, target))
            out.append((label, target))
    return tuple(out)
