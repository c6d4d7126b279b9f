"""Concrete syntax for language definitions (``.lnsl``) and process scripts (``.lns``).

Language files::

    language bpa                     # optional header
    metavars A                       # roots used by rules but not by the grammar
    grammar
      Action A ::= (a) | (b) | (c)
      Process P ::= (act A) | (+ P P) | (seq P P)
    rules
      (checkMark A (act A))
      (checkMark A P1) --- (checkMark A (+ P1 P2))

Entries end at a newline outside parentheses or at ``;``.  A bare token inside
a term is a metavariable; its root (the leading letters) must be declared.

Process scripts hold ``import``/``lang``/``term``/``define`` declarations
followed by one process; see :func:`parse_process` for the process grammar.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, SortMismatch, UnboundVariable, UndeclaredMetavarRoot
from .lang import (
    STEP, Formula, GrammarRule, Language, MetaVar, Node, Rule, format_language, metavar_root,
)
from .process import (
    NIL, Choice, Exec, Input, IsInTrace, LangInput, LangLit, LangOutput, LangVar, Output,
    Par, Process, Replicate, Restrict, Trace, TraceInput, TraceOutput, TraceVar, Union_,
    render,
)

OP_ALIASES = {"⟶": STEP, "->": STEP}

_LANG_TOKEN = re.compile(r"\(|\)|,|;|\n|[^\s(),;]+")


@dataclass(frozen=True)
class SourceFile:
    path: str
    kind: str  # "language" | "process"
    text: str


def read_source(path) -> SourceFile:
    p = Path(path)
    kind = "language" if p.suffix == ".lnsl" else "process"
    return SourceFile(str(p), kind, p.read_text(encoding="utf-8"))


# -- language files ----------------------------------------------------------

def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _lang_tokens(text: str):
    """Yield (token, line, col); newlines are tokens."""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        for m in _LANG_TOKEN.finditer(line):
            yield m.group(), lineno, m.start() + 1
        yield "\n", lineno, len(line) + 1


def _entries(text: str):
    """Split into entries: lists of (token, line, col)."""
    entries, cur, depth = [], [], 0
    for tok, line, col in _lang_tokens(text):
        if tok == "(":
            depth += 1
        elif tok == ")":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced ')'", line, col)
        if tok == "\n" and cur and cur[-1][0] in (",", "---"):
            continue  # rule continues on the next line
        if tok == ";" or (tok == "\n" and depth == 0):
            if cur:
                entries.append(cur)
            cur = []
        elif tok == "---" and not cur and entries:
            cur = entries.pop()
            cur.append((tok, line, col))
        elif tok != "\n":
            cur.append((tok, line, col))
    if depth:
        raise ParseError("unbalanced '('", *(cur[-1][1:] if cur else (None, None)))
    if cur:
        entries.append(cur)
    return entries


class _TermReader:
    def __init__(self, toks, roots, term_macros=None):
        self.toks = toks
        self.i = 0
        self.roots = roots
        self.term_macros = term_macros

    def at_end(self):
        return self.i >= len(self.toks)

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def where(self):
        if self.i < len(self.toks):
            return self.toks[self.i][1:]
        return (self.toks[-1][1:] if self.toks else (None, None))

    def next(self):
        if self.i >= len(self.toks):
            raise ParseError("unexpected end of input", *self.where())
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def term(self):
        tok, line, col = self.next()
        if tok == "(":
            op, oline, ocol = self.next()
            if op in "(),;":
                raise ParseError(f"expected operator name, got {op!r}", oline, ocol)
            op = OP_ALIASES.get(op, op)
            kids = []
            while self.peek() != ")":
                if self.peek() is None:
                    raise ParseError("missing ')'", line, col)
                kids.append(self.term())
            self.next()
            return Node(op, tuple(kids))
        if tok in "),;":
            raise ParseError(f"unexpected {tok!r}", line, col)
        if self.term_macros is not None:
            if tok not in self.term_macros:
                raise UnboundVariable(f"unknown term {tok!r}", line, col)
            return self.term_macros[tok]
        root = metavar_root(tok)
        if root is None or root not in self.roots:
            raise UndeclaredMetavarRoot(f"metavariable {tok!r} has no declared root", line, col)
        return MetaVar(tok)

    def formula(self):
        line, col = self.where()
        t = self.term()
        if not isinstance(t, Node):
            raise ParseError("a formula must be parenthesized", line, col)
        return Formula(t.op, t.children)


def parse_language(text: str, name: str | None = None) -> Language:
    entries = _entries(text)
    section = None
    header_name = None
    roots: set[str] = set()
    grammar_raw, rule_raw = [], []
    for ent in entries:
        head, line, col = ent[0]
        if head in ("grammar", "rules") and len(ent) == 1:
            section = head
            continue
        if head == "language" and section is None:
            if len(ent) != 2:
                raise ParseError("expected 'language NAME'", line, col)
            header_name = ent[1][0]
            continue
        if head == "metavars" and section in (None, "grammar"):
            roots.update(t for t, _, _ in ent[1:])
            continue
        if section == "grammar":
            if len(ent) < 3 or ent[2][0] != "::=":
                raise ParseError("expected 'Category ROOT ::= productions'", line, col)
            roots.add(ent[1][0])
            grammar_raw.append(ent)
        elif section == "rules":
            rule_raw.append(ent)
        else:
            raise ParseError(f"unexpected {head!r} outside a section", line, col)

    grammar = []
    for ent in grammar_raw:
        cat, root = ent[0][0], ent[1][0]
        if metavar_root(root) != root:
            raise ParseError(f"metavariable root {root!r} must be letters only", *ent[1][1:])
        prods = []
        toks = [t for t in ent[3:]]
        # productions are separated by '|' tokens at depth 0
        chunk: list = []
        depth = 0
        for tok in toks + [("|", None, None)]:
            if tok[0] == "|" and depth == 0:
                if not chunk:
                    raise ParseError("empty production", *ent[0][1:])
                r = _TermReader(chunk, roots)
                t = r.term()
                if not r.at_end():
                    raise ParseError("junk after production", *r.where())
                if not isinstance(t, Node):
                    raise ParseError("a production needs a top constructor", *chunk[0][1:])
                prods.append(t)
                chunk = []
                continue
            depth += tok[0] == "("
            depth -= tok[0] == ")"
            chunk.append(tok)
        grammar.append(GrammarRule(cat, root, tuple(prods)))

    rules = []
    for ent in rule_raw:
        r = _TermReader(ent, roots)
        forms = []
        premises = None
        while not r.at_end():
            tok = r.peek()
            if tok == "---":
                if premises is not None:
                    raise ParseError("two '---' in one rule", *r.where())
                r.next()
                premises = forms
                forms = []
                continue
            forms.append(r.formula())
            if r.peek() == ",":
                r.next()
        if len(forms) != 1:
            raise ParseError("a rule needs exactly one conclusion", *ent[0][1:])
        rules.append(Rule(tuple(premises or ()), forms[0]))
    return Language(tuple(grammar), tuple(rules), header_name or name)


def print_language(lang: Language) -> str:
    return format_language(lang)


def parse_term(text: str, roots=()) -> Node | MetaVar:
    """Parse one term; bare tokens must have a root in ``roots``."""
    toks = [t for t in _lang_tokens(text) if t[0] != "\n"]
    r = _TermReader(toks, set(roots))
    t = r.term()
    if not r.at_end():
        raise ParseError("junk after term", *r.where())
    return t


# -- process scripts ---------------------------------------------------------

KEYWORDS = {
    "send", "recvlang", "sendlang", "recvtrace", "sendtrace", "new", "exec", "if",
    "in", "then", "else", "union", "import", "define", "term", "lang",
}

_IDENT = re.compile(r"[^\W\d][\w'′]*")


class _Scanner:
    def __init__(self, text):
        self.text = text
        self.pos = 0

    def where(self):
        line = self.text.count("\n", 0, self.pos) + 1
        col = self.pos - (self.text.rfind("\n", 0, self.pos) + 1) + 1
        return line, col

    def error(self, msg, cls=ParseError):
        return cls(msg, *self.where())

    def skip(self):
        t = self.text
        while self.pos < len(t):
            c = t[self.pos]
            if c.isspace():
                self.pos += 1
            elif c == "#":
                nl = t.find("\n", self.pos)
                self.pos = len(t) if nl < 0 else nl
            else:
                break

    def peek(self, s=None):
        self.skip()
        if s is None:
            return self.text[self.pos] if self.pos < len(self.text) else ""
        return self.text.startswith(s, self.pos)

    def peek_word(self):
        self.skip()
        m = _IDENT.match(self.text, self.pos)
        return m.group() if m else None

    def eat(self, s):
        if not self.peek(s):
            found = self.text[self.pos:self.pos + 10] or "end of input"
            raise self.error(f"expected {s!r}, found {found!r}")
        self.pos += len(s)

    def ident(self):
        w = self.peek_word()
        if w is None:
            raise self.error("expected an identifier")
        self.pos += len(w)
        return w

    def at_end(self):
        self.skip()
        return self.pos >= len(self.text)

    def raw_term(self):
        """Read one parenthesized s-expression or bare token, verbatim."""
        self.skip()
        t = self.text
        start = self.pos
        if self.peek() == "(":
            depth = 0
            while self.pos < len(t):
                c = t[self.pos]
                depth += c == "("
                depth -= c == ")"
                self.pos += 1
                if depth == 0:
                    return t[start:self.pos]
            raise self.error("unbalanced '(' in term")
        m = _IDENT.match(t, self.pos)
        if not m:
            raise self.error("expected a term")
        self.pos = m.end()
        return m.group()


class _ProcessParser:
    def __init__(self, text, imports):
        self.s = _Scanner(text)
        self.imports = dict(imports or {})
        self.langs: dict = {}
        self.terms: dict = {}
        self.defs: dict = {}

    # declarations
    def script(self):
        s = self.s
        while True:
            w = s.peek_word()
            if w == "import":
                s.ident()
                names = [s.ident()]
                while s.peek(","):
                    s.eat(",")
                    names.append(s.ident())
                for n in names:
                    if n not in self.imports:
                        raise s.error(f"language {n!r} was not provided", UnboundVariable)
            elif w == "lang":
                s.ident()
                name = s.ident()
                s.eat("=")
                self.langs[name] = self.lexpr({})
            elif w == "term":
                s.ident()
                name = s.ident()
                s.eat("=")
                self.terms[name] = self.term()
            elif w == "define":
                s.ident()
                name = s.ident()
                s.eat("=")
                self.defs[name] = self.process({})
            else:
                break
        p = self.process({})
        if not s.at_end():
            raise s.error("unexpected text after the process")
        return p

    def term(self):
        line, col = self.s.where()
        raw = self.s.raw_term()
        try:
            return parse_term_with_macros(raw, self.terms)
        except ParseError as e:
            raise type(e)(e.message, line, col) from None

    # processes: par > choice > prefix
    def process(self, env):
        left = self.choice(env)
        if self.s.peek("|"):
            self.s.eat("|")
            return Par(left, self.process(env))
        return left

    def choice(self, env):
        left = self.atom(env)
        if self.s.peek("+"):
            self.s.eat("+")
            return Choice(left, self.choice(env))
        return left

    def chan(self, env):
        name = self.s.ident()
        if name in KEYWORDS:
            raise self.s.error(f"keyword {name!r} used as a channel")
        sort = env.get(name)
        if sort not in (None, "chan"):
            raise self.s.error(f"{name} is a {sort} variable, used as a channel", SortMismatch)
        return name

    def cont(self, env):
        self.s.eat(".")
        return self.atom(env)

    def atom(self, env):
        s = self.s
        c = s.peek()
        if c == "(":
            s.eat("(")
            p = self.process(env)
            s.eat(")")
            return p
        if c == "0":
            s.eat("0")
            return NIL
        if c == "!":
            s.eat("!")
            return Replicate(self.atom(env))
        w = s.peek_word()
        if w is None:
            raise s.error("expected a process")
        if w == "new":
            s.ident()
            x = s.ident()
            return Restrict(x, self.cont({**env, x: "chan"}))
        if w in ("send", "sendlang", "sendtrace"):
            s.ident()
            x = self.chan(env)
            s.eat("<")
            if w == "send":
                y = self.chan(env)
                s.eat(">")
                return Output(x, y, self.cont(env))
            if w == "sendlang":
                e = self.lexpr(env)
                s.eat(">")
                return LangOutput(x, e, self.cont(env))
            tr = self.trace(env, stop=">")
            s.eat(">")
            return TraceOutput(x, tr, self.cont(env))
        if w in ("recvlang", "recvtrace"):
            s.ident()
            x = self.chan(env)
            s.eat("(")
            v = s.ident()
            s.eat(")")
            sort = "lang" if w == "recvlang" else "trace"
            body = self.cont({**env, v: sort})
            return LangInput(x, v, body) if sort == "lang" else TraceInput(x, v, body)
        if w == "exec":
            return self.exec_(env)
        if w == "if":
            s.ident()
            label = self.term()
            if s.peek_word() != "in":
                raise s.error("expected 'in'")
            s.ident()
            tr = self.trace(env, stop="then")
            if s.peek_word() != "then":
                raise s.error("expected 'then'")
            s.ident()
            then = self.choice(env)
            if s.peek_word() != "else":
                raise s.error("expected 'else'")
            s.ident()
            orelse = self.choice(env)
            return IsInTrace(label, tr, then, orelse)
        if w in KEYWORDS:
            raise s.error(f"unexpected keyword {w!r}")
        # input prefix or a defined process
        save = s.pos
        s.ident()
        if s.peek("("):
            s.pos = save
            x = self.chan(env)
            s.eat("(")
            y = s.ident()
            s.eat(")")
            return Input(x, y, self.cont({**env, y: "chan"}))
        if w in self.defs:
            return self.defs[w]
        s.pos = save
        raise s.error(f"unknown process {w!r}", UnboundVariable)

    def exec_(self, env):
        s = self.s
        s.ident()
        s.eat("(")
        lang = self.lexpr(env)
        s.eat(",")
        x = self.chan(env)
        s.eat(",")
        prog = self.term()
        trace = Trace()
        pred = STEP
        if s.peek(","):
            s.eat(",")
            trace = self.trace(env, stop=",)")
            if s.peek(","):
                s.eat(",")
                s.skip()
                m = re.match(r"[^\s()]+?(?=\s*\))", s.text[s.pos:])
                if not m:
                    raise s.error("expected a step predicate")
                pred = OP_ALIASES.get(m.group(), m.group())
                s.pos += m.end()
        s.eat(")")
        return Exec(lang, x, prog, trace, pred)

    def trace(self, env, stop):
        s = self.s
        if s.peek("["):
            s.eat("[")
            labels = []
            while not s.peek("]"):
                labels.append(self.term())
            s.eat("]")
            return Trace(tuple(labels))
        if s.peek("("):
            labels = []
            while s.peek("("):
                labels.append(self.term())
            return Trace(tuple(labels))
        w = s.peek_word()
        if w is None or w in KEYWORDS:
            raise s.error("expected a trace")
        s.ident()
        sort = env.get(w)
        if sort == "trace":
            return TraceVar(w)
        if sort is not None:
            raise s.error(f"{w} is a {sort} variable, used as a trace", SortMismatch)
        raise s.error(f"trace variable {w!r} is not bound", UnboundVariable)

    def lexpr(self, env):
        s = self.s
        if s.peek("{"):
            start = s.pos + 1
            end = s.text.find("}", start)
            if end < 0:
                raise s.error("unterminated language literal")
            lang = parse_language(s.text[start:end])
            s.pos = end + 1
            return LangLit(lang)
        w = s.ident()
        if w == "union":
            s.eat("(")
            left = self.lexpr(env)
            s.eat(",")
            right = self.lexpr(env)
            s.eat(")")
            return Union_(left, right)
        sort = env.get(w)
        if sort == "lang":
            return LangVar(w)
        if sort is not None:
            raise s.error(f"{w} is a {sort} variable, used as a language", SortMismatch)
        if w in self.langs:
            return self.langs[w]
        if w in self.imports:
            return LangLit(self.imports[w])
        raise s.error(f"unknown language {w!r}", UnboundVariable)


def parse_term_with_macros(text: str, macros: dict):
    toks = [t for t in _lang_tokens(text) if t[0] != "\n"]
    r = _TermReader(toks, set(), term_macros=macros)
    t = r.term()
    if not r.at_end():
        raise ParseError("junk after term", *r.where())
    return t


def parse_process(text: str, imports: dict | None = None) -> Process:
    """Parse a process script.

    Processes::

        P ::= 0 | x(y).P | send x<y>.P | recvlang x(l).P | sendlang x<LEXPR>.P
            | recvtrace x(tr).P | sendtrace x<TR>.P | P | P | P + P | new x.P | !P
            | exec(LEXPR, x, TERM [, TR [, PRED]]) | if TERM in TR then P else P
            | NAME | ( P )
        LEXPR ::= NAME | union(LEXPR, LEXPR) | { inline language }
        TR ::= [] | [TERM ...] | TERM TERM ... | tr

    ``imports`` maps language names to languages.  Prefixes bind tighter
    than ``+``, which binds tighter than ``|``.
    """
    return _ProcessParser(text, imports).script()


def script_imports(text: str) -> list[str]:
    """Language names listed on ``import`` lines."""
    out = []
    for line in text.splitlines():
        line = _strip_comment(line).strip()
        if line.startswith("import "):
            out.extend(n.strip() for n in line[len("import "):].split(",") if n.strip())
    return out


def print_process(p: Process) -> str:
    return render(p)
