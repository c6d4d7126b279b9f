"""Independent reference semantics used as test oracles.

Nothing here imports the interpreter's engine or process layer.  Terms are
plain nested tuples ``(op, child, ...)``; ``("a",)`` is the nullary action a.
"""
from __future__ import annotations

import itertools


# -- BPA with the preemption operator |> -----------------------------------------

def bpa_marks(p, mode=None):
    """Actions A with checkMark A p: p can finish by performing A."""
    op = p[0]
    if op == "act":
        return {p[1]}
    if op == "+":
        return bpa_marks(p[1], mode) | bpa_marks(p[2], mode)
    if op == "|>" and mode is not None:
        out = set(bpa_marks(p[1], mode))
        if mode == "disrupt":
            out |= bpa_marks(p[2], mode)
        return out
    return set()


def bpa_steps(p, mode=None):
    """Labelled steps (A, p') of a BPA term; mode is None, "disrupt" or "interrupt"."""
    op = p[0]
    out = []
    if op == "+":
        out += bpa_steps(p[1], mode)
        out += bpa_steps(p[2], mode)
    elif op == "seq":
        out += [(a, ("seq", q, p[2])) for a, q in bpa_steps(p[1], mode)]
        out += [(a, p[2]) for a in sorted(bpa_marks(p[1], mode))]
    elif op == "|>" and mode is not None:
        out += [(a, ("|>", q, p[2])) for a, q in bpa_steps(p[1], mode)]
        if mode == "disrupt":
            out += bpa_steps(p[2], mode)
        else:
            out += [(a, ("seq", q, p[1])) for a, q in bpa_steps(p[2], mode)]
            out += [(a, p[1]) for a in sorted(bpa_marks(p[2], mode))]
    return out


def completed_traces(p, steps, max_len=20):
    """Traces of every maximal run: the labels collected until no step applies."""
    out = set()
    stack = [(p, ())]
    while stack:
        q, tr = stack.pop()
        nxt = steps(q)
        if not nxt or len(tr) >= max_len:
            out.add(tr)
            continue
        for a, q2 in nxt:
            stack.append((q2, tr + (a,)))
    return out


# -- partial CCS with synchronous or asynchronous output -----------------------

def ccs_steps(p, output):
    """Steps of the partial CCS; output is "sync" or "async".

    Labels: ("tau",), ("in", ch), ("out", ch) with ch one of ("x",), ("y",).
    """
    op = p[0]
    out = []
    if op == "in":
        out.append((("in", p[1]), p[2]))
    elif op == "out":
        if output == "sync":
            out.append((("out", p[1]), p[2]))
        else:
            out.append((("tau",), ("par", ("out'", p[1]), p[2])))
    elif op == "out'" and output == "async":
        out.append((("out", p[1]), ("nil",)))
    elif op == "res":
        a = p[1]
        for lab, q in ccs_steps(p[2], output):
            if lab == ("tau",) or lab[1] != a:
                out.append((lab, ("res", a, q)))
    elif op == "par":
        left = ccs_steps(p[1], output)
        right = ccs_steps(p[2], output)
        out += [(lab, ("par", q, p[2])) for lab, q in left]
        out += [(lab, ("par", p[1], q)) for lab, q in right]
        for (l1, q1), (l2, q2) in itertools.product(left, right):
            if l1[0] != "tau" and l2[0] != "tau" and l1[0] != l2[0] and l1[1] == l2[1]:
                out.append((("tau",), ("par", q1, q2)))
    return out


def ccs_completed_traces(p, output, depth=6):
    return completed_traces(p, lambda q: ccs_steps(q, output), max_len=depth)


# -- naive bottom-up derivation enumerator ---------------------------------------
#
# Rules are given as (premises, conclusion) with formulas (pred, args...) over
# tuple terms and variables written as ("?", name).

def is_var(t):
    return t[0] == "?"


def match(pattern, term, env):
    """Extend env so that pattern instantiated by env equals the ground term."""
    if is_var(pattern):
        bound = env.get(pattern[1])
        if bound is None:
            env = dict(env)
            env[pattern[1]] = term
            return env
        return env if bound == term else None
    if is_var(term) or pattern[0] != term[0] or len(pattern) != len(term):
        return None
    for p, t in zip(pattern[1:], term[1:]):
        env = match(p, t, env)
        if env is None:
            return None
    return env


def instantiate(t, env):
    if is_var(t):
        return env.get(t[1], t)
    return (t[0],) + tuple(instantiate(c, env) for c in t[1:])


def ground(t):
    return not is_var(t) and all(ground(c) for c in t[1:])


def subterm_set(t, acc=None):
    acc = set() if acc is None else acc
    acc.add(t)
    for c in t[1:]:
        subterm_set(c, acc)
    return acc


def bottom_up(rules, query_term, rounds=5):
    """All ground facts of height <= rounds whose subject is a subterm of query_term.

    The subject of a fact is its second argument (the source of a step, the
    process of a checkMark).  Every corpus rule only looks at subterms of its
    conclusion's subject, so restricting to them loses nothing.
    """
    universe = subterm_set(query_term)
    facts = set()
    for _ in range(rounds):
        new = set(facts)
        for premises, concl in rules:
            for s in universe:
                env = match(concl[2], s, {})
                if env is None:
                    continue
                for env2 in _premise_envs(premises, facts, env):
                    fact = (concl[0],) + tuple(instantiate(a, env2) for a in concl[1:])
                    if all(ground(a) for a in fact[1:]):
                        new.add(fact)
        if new == facts:
            break
        facts = new
    return facts


def _premise_envs(premises, facts, env):
    if not premises:
        yield env
        return
    first, rest = premises[0], premises[1:]
    for f in facts:
        if f[0] != first[0] or len(f) != len(first):
            continue
        e = env
        for pa, fa in zip(first[1:], f[1:]):
            e = match(pa, fa, e)
            if e is None:
                break
        if e is not None:
            yield from _premise_envs(rest, facts, e)


def step_answers(rules, t, rounds=5, pred="-->"):
    return {
        (f[1], f[3]) for f in bottom_up(rules, t, rounds) if f[0] == pred and f[2] == t
    }


def terms_of_category(grammar, category, max_size):
    """All ground terms of a category with at most max_size nodes.

    grammar maps category -> (root, productions); productions use ("?", name)
    holes whose category is found through the roots.
    """
    roots = {root: cat for cat, (root, _) in grammar.items()}
    table = {}

    def hole_cat(name):
        stem = name.rstrip("'′0123456789")
        return roots.get(stem)

    def of(cat, size):
        key = (cat, size)
        if key not in table:
            table[key] = []
            result = []
            for prod in grammar[cat][1]:
                result += fill(prod, size)
            table[key] = result
        return table[key]

    def fill(pattern, size):
        if is_var(pattern):
            cat = hole_cat(pattern[1])
            # a fragment may refer to categories it does not define itself
            return of(cat, size) if cat is not None else []
        kids = pattern[1:]
        if not kids:
            return [pattern] if size == 1 else []
        out = []
        for split in _compositions(size - 1, len(kids)):
            options = [fill(k, s) for k, s in zip(kids, split)]
            out += [(pattern[0],) + combo for combo in itertools.product(*options)]
        return out

    return [t for n in range(1, max_size + 1) for t in of(category, n)]


def _compositions(total, parts):
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# -- textbook unification over tuple terms ----------------------------------------

def robinson_unify(t1, t2):
    """Most general unifier as a dict, or None; substitution is applied eagerly."""
    subst = {}
    work = [(t1, t2)]
    while work:
        a, b = work.pop()
        a, b = apply_all(a, subst), apply_all(b, subst)
        if a == b:
            continue
        if not is_var(a) and is_var(b):
            a, b = b, a
        if is_var(a):
            if occurs(a[1], b):
                return None
            subst = {k: apply_all(v, {a[1]: b}) for k, v in subst.items()}
            subst[a[1]] = b
            continue
        if a[0] != b[0] or len(a) != len(b):
            return None
        work.extend(zip(a[1:], b[1:]))
    return subst


def occurs(name, t):
    if is_var(t):
        return t[1] == name
    return any(occurs(name, c) for c in t[1:])


def apply_all(t, subst):
    if is_var(t):
        return subst.get(t[1], t)
    return (t[0],) + tuple(apply_all(c, subst) for c in t[1:])
