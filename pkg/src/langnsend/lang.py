"""Terms, inference rules and language definitions.

A language is a grammar (categories with a metavariable root and a list of
productions) together with an ordered list of inference rules.  Everything here
is immutable and hashable so languages can be sent between processes, used as
cache keys and compared structurally.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Union

from .errors import CategoryClash, LanguageError, UnknownCategory

STEP = "-->"


def cached_hash(self) -> int:
    """Hash of a frozen dataclass, computed once: deep trees get hashed a lot."""
    try:
        return self.__dict__["_hash"]
    except KeyError:
        h = hash((type(self).__name__, *(getattr(self, n) for n in _hash_fields(type(self)))))
        object.__setattr__(self, "_hash", h)
        return h


@lru_cache(maxsize=None)
def _hash_fields(cls) -> tuple:
    return tuple(n for n, f in cls.__dataclass_fields__.items() if f.compare)

_METAVAR_RE = re.compile(r"^([^\W\d_]+)(\d*)(['′]*)$")


@dataclass(frozen=True)
class MetaVar:
    name: str

    __hash__ = cached_hash

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Node:
    op: str
    children: tuple = ()

    __hash__ = cached_hash

    def __str__(self):
        if not self.children:
            return f"({self.op})"
        return "(" + self.op + " " + " ".join(str(c) for c in self.children) + ")"


Term = Union[MetaVar, Node]


def node(op: str, *children: Term) -> Node:
    return Node(op, tuple(children))


def metavar_root(name: str) -> str | None:
    """Return the root of a metavariable spelling (``P1'`` -> ``P``), or None."""
    m = _METAVAR_RE.match(name)
    return m.group(1) if m else None


def is_ground(t: Term) -> bool:
    if isinstance(t, MetaVar):
        return False
    return all(is_ground(c) for c in t.children)


def free_metavars(t: Term) -> set[str]:
    out: set[str] = set()
    _collect_vars(t, out)
    return out


def _collect_vars(t, out):
    if isinstance(t, MetaVar):
        out.add(t.name)
    else:
        for c in t.children:
            _collect_vars(c, out)


def term_size(t: Term) -> int:
    if isinstance(t, MetaVar):
        return 1
    return 1 + sum(term_size(c) for c in t.children)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Node):
        for c in t.children:
            yield from subterms(c)


@dataclass(frozen=True)
class Formula:
    pred: str
    args: tuple = ()

    __hash__ = cached_hash

    def __str__(self):
        return "(" + " ".join([self.pred, *(str(a) for a in self.args)]) + ")"

    def metavars(self) -> set[str]:
        out: set[str] = set()
        for a in self.args:
            _collect_vars(a, out)
        return out


def formula(pred: str, *args: Term) -> Formula:
    return Formula(pred, tuple(args))


@dataclass(frozen=True)
class Rule:
    premises: tuple
    conclusion: Formula

    __hash__ = cached_hash

    def __str__(self):
        if not self.premises:
            return str(self.conclusion)
        return ", ".join(str(p) for p in self.premises) + " --- " + str(self.conclusion)

    def metavars(self) -> set[str]:
        out = self.conclusion.metavars()
        for p in self.premises:
            out |= p.metavars()
        return out


def rule(conclusion: Formula, *premises: Formula) -> Rule:
    return Rule(tuple(premises), conclusion)


@dataclass(frozen=True)
class GrammarRule:
    category: str
    root: str
    productions: tuple = ()

    __hash__ = cached_hash

    def __post_init__(self):
        for p in self.productions:
            if not isinstance(p, Node):
                raise LanguageError(
                    f"production {p} of {self.category} has no top constructor"
                )

    def __str__(self):
        return f"{self.category} {self.root} ::= " + " | ".join(
            str(p) for p in self.productions
        )


@dataclass(frozen=True)
class Language:
    grammar: tuple = ()
    rules: tuple = ()
    name: str | None = field(default=None, compare=False)

    __hash__ = cached_hash

    def __post_init__(self):
        cats: set[str] = set()
        roots: set[str] = set()
        for g in self.grammar:
            if g.category in cats:
                raise LanguageError(f"category {g.category!r} declared twice")
            if g.root in roots:
                raise LanguageError(f"metavariable root {g.root!r} used by two categories")
            cats.add(g.category)
            roots.add(g.root)

    def category(self, name: str) -> GrammarRule:
        for g in self.grammar:
            if g.category == name:
                return g
        raise UnknownCategory(f"no category {name!r} in language")

    def root_categories(self) -> dict[str, str]:
        return {g.root: g.category for g in self.grammar}

    def metavar_roots(self) -> set[str]:
        """Roots of every metavariable mentioned in grammar or rules."""
        roots = {g.root for g in self.grammar}
        for r in self.rules:
            for v in r.metavars():
                roots.add(metavar_root(v) or v)
        for g in self.grammar:
            for p in g.productions:
                for v in free_metavars(p):
                    roots.add(metavar_root(v) or v)
        return roots

    def productions(self) -> set[tuple[str, Node]]:
        return {(g.category, p) for g in self.grammar for p in g.productions}

    def __str__(self):
        return format_language(self)


EMPTY_LANGUAGE = Language()


def _dedup(items: Iterable) -> tuple:
    seen = set()
    out = []
    for x in items:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return tuple(out)


def union(left: Language, right: Language) -> Language:
    """Syntactic union: append the right operand's productions and rules.

    Categories keep the left operand's order; exact duplicates are dropped so
    the operation is idempotent.
    """
    right_by_cat = {g.category: g for g in right.grammar}
    grammar = []
    for g in left.grammar:
        other = right_by_cat.get(g.category)
        if other is None:
            grammar.append(GrammarRule(g.category, g.root, _dedup(g.productions)))
            continue
        if other.root != g.root:
            raise CategoryClash(g.category, g.root, other.root)
        grammar.append(
            GrammarRule(g.category, g.root, _dedup(g.productions + other.productions))
        )
    left_cats = {g.category for g in left.grammar}
    for g in right.grammar:
        if g.category not in left_cats:
            grammar.append(GrammarRule(g.category, g.root, _dedup(g.productions)))
    return Language(tuple(grammar), _dedup(left.rules + right.rules))


def check_term(lang: Language, category: str, t: Term) -> bool:
    """Does ground term ``t`` belong to ``category`` of the grammar?"""
    lang.category(category)
    roots = lang.root_categories()
    prods = {g.category: g.productions for g in lang.grammar}
    memo: dict[tuple[str, Term], bool] = {}

    def in_cat(term, cat):
        key = (cat, term)
        if key not in memo:
            memo[key] = any(fits(term, p) for p in prods[cat])
        return memo[key]

    def fits(term, pattern):
        if isinstance(pattern, MetaVar):
            cat = roots.get(metavar_root(pattern.name) or "")
            return cat is not None and in_cat(term, cat)
        if not isinstance(term, Node):
            return False
        return (
            term.op == pattern.op
            and len(term.children) == len(pattern.children)
            and all(fits(a, b) for a, b in zip(term.children, pattern.children))
        )

    return in_cat(t, category)


def conforms(lang: Language, t: Term) -> bool:
    """True if ``t`` belongs to some category of the grammar."""
    return any(check_term(lang, g.category, t) for g in lang.grammar)


def format_language(lang: Language, with_name: bool = True) -> str:
    """Canonical text of a language; parses back to an equal value."""
    body = _format_body(lang)
    if with_name and lang.name:
        return f"language {lang.name}\n" + body
    return body


# keyed on structural equality, which ignores the name
@lru_cache(maxsize=None)
def _format_body(lang: Language) -> str:
    lines = []
    declared = {g.root for g in lang.grammar}
    extra = sorted(lang.metavar_roots() - declared)
    if extra:
        lines.append("metavars " + " ".join(extra))
    lines.append("grammar")
    lines.extend("  " + str(g) for g in lang.grammar)
    lines.append("rules")
    lines.extend("  " + str(r) for r in lang.rules)
    return "\n".join(lines) + "\n"
