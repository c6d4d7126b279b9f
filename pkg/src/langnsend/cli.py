"""Command-line entry point: ``lns run|explore|check|examples``."""
from __future__ import annotations

import argparse
import contextlib
import json
import shutil
import sys
from pathlib import Path

from .engine import SearchBudget
from .errors import BudgetExhausted, LnsError, ParseError, StateLimit, StepLimit
from .lang import Language, conforms
from .process import (
    Choice, Exec, IsInTrace, LangInput, LangLit, LangOutput, Par, Replicate, Restrict,
    TraceInput, TraceOutput, Input, Output, Union_,
)
from .report import emit_report, report_from_run
from .semantics import evaluate_lang, explore, run
from .syntax import parse_language, parse_process, script_imports

CORPUS = Path(__file__).parent / "corpus"

EXIT_OK, EXIT_ERROR, EXIT_STEPS, EXIT_BUDGET, EXIT_STATES = 0, 1, 2, 3, 4


def resolve_script(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    packaged = CORPUS / p.name
    if p.parent.name == "corpus" and packaged.exists():
        return packaged
    raise FileNotFoundError(path)


def load_languages(names, search) -> dict[str, Language]:
    out = {}
    for name in names:
        for d in search:
            f = Path(d) / f"{name}.lnsl"
            if f.exists():
                out[name] = parse_language(f.read_text(encoding="utf-8"), name=name)
                break
        else:
            raise ParseError(f"language {name!r} not found in {', '.join(map(str, search))}")
    return out


def load_script(path: str, lang_paths=()):
    script = resolve_script(path)
    text = script.read_text(encoding="utf-8")
    search = [*lang_paths, script.parent, CORPUS]
    imports = load_languages(script_imports(text), search)
    return parse_process(text, imports), imports


def language_label(lang: Language, imports: dict) -> str:
    if lang.name:
        return lang.name
    parts = [
        n for n, l in imports.items()
        if l.rules and set(l.rules) <= set(lang.rules) and l.productions() <= lang.productions()
    ]
    return "+".join(parts) if parts else f"<{len(lang.rules)} rules>"


def _budget(args) -> SearchBudget:
    return SearchBudget(max_depth=args.max_depth, max_nodes=args.max_nodes)


def _out(args):
    if args.out:
        return open(args.out, "w", encoding="utf-8")
    return contextlib.nullcontext(sys.stdout)


def cmd_run(args) -> int:
    p, _ = load_script(args.script, args.lang_path)
    policy = args.policy or ("seeded" if args.seed is not None else "first")
    if policy == "seeded" and args.seed is None:
        print("error: --policy seeded needs --seed", file=sys.stderr)
        return EXIT_ERROR
    code = EXIT_OK
    try:
        result = run(p, policy, args.seed, args.max_steps, _budget(args))
    except StepLimit as e:
        print(f"error: {e}", file=sys.stderr)
        result, code = e.result, EXIT_STEPS
    with _out(args) as fh:
        fh.write(emit_report(report_from_run(result)))
    return code


def cmd_explore(args) -> int:
    p, imports = load_script(args.script, args.lang_path)
    code = EXIT_OK
    try:
        res = explore(p, args.max_explore_depth, args.max_states, args.repl_bound, _budget(args))
    except StateLimit as e:
        print(f"error: {e}", file=sys.stderr)
        res, code = e.result, EXIT_STATES
    recs = sorted(
        (
            {
                "record": "trace",
                "channel": t.channel,
                "labels": [str(x) for x in t.trace.labels],
                "language": language_label(t.language, imports),
            }
            for t in res.traces
        ),
        key=lambda r: (r["language"], r["labels"], r["channel"]),
    )
    recs.append({
        "record": "summary",
        "states": len(res.states),
        "terminal": len(res.terminal),
        "traces": len(res.traces),
        "truncated": res.truncated,
    })
    with _out(args) as fh:
        for r in recs:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")
    return code


def _execs(p, acc):
    if isinstance(p, Exec):
        acc.append(p)
    elif isinstance(p, (Par, Choice)):
        _execs(p.left, acc)
        _execs(p.right, acc)
    elif isinstance(p, (Restrict, Replicate)):
        _execs(p.body, acc)
    elif isinstance(p, IsInTrace):
        _execs(p.then, acc)
        _execs(p.orelse, acc)
    elif isinstance(p, (Input, Output, LangInput, LangOutput, TraceInput, TraceOutput)):
        _execs(p.cont, acc)
    return acc


def _closed_lang(e) -> bool:
    if isinstance(e, Union_):
        return _closed_lang(e.left) and _closed_lang(e.right)
    return isinstance(e, LangLit)


def check_script(path: str, lang_paths=()) -> list[str]:
    """Lint a script: parse, closedness and sorts, grammar conformance of programs."""
    try:
        p, _ = load_script(path, lang_paths)
    except LnsError as e:
        return [f"{path}: {e}"]
    problems = []
    for e in _execs(p, []):
        if not _closed_lang(e.lang):
            continue  # language arrives at run time
        lang, _ = evaluate_lang(e.lang)
        if lang.grammar and not conforms(lang, e.program):
            problems.append(f"{path}: program {e.program} is not in the grammar of its language")
    return problems


def cmd_check(args) -> int:
    problems = []
    for s in args.scripts:
        problems += check_script(s, args.lang_path)
    for msg in problems:
        print(msg, file=sys.stderr)
    return EXIT_ERROR if problems else EXIT_OK


def cmd_examples(args) -> int:
    files = sorted(CORPUS.glob("*.lns*"))
    if args.copy_to:
        dest = Path(args.copy_to)
        dest.mkdir(parents=True, exist_ok=True)
        for f in files:
            shutil.copy(f, dest / f.name)
    for f in files:
        print(f.name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lns", description="Lang-n-Send interpreter")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--lang-path", action="append", default=[], metavar="DIR",
                        help="extra directory searched for imported .lnsl files")
    common.add_argument("--max-depth", type=_positive, default=512, help="proof depth budget")
    common.add_argument("--max-nodes", type=_positive, default=1_000_000, help="proof node budget")
    common.add_argument("--out", metavar="PATH", help="write the JSONL report here")

    r = sub.add_parser("run", parents=[common], help="run a script under a scheduling policy")
    r.add_argument("script")
    r.add_argument("--policy", choices=["first", "seeded"], help="scheduling policy")
    r.add_argument("--seed", type=int, help="PRNG seed for --policy seeded")
    r.add_argument("--max-steps", type=_positive, default=10_000)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("explore", parents=[common], help="enumerate every reachable state")
    e.add_argument("script")
    e.add_argument("--repl-bound", type=_positive, default=2, help="unfoldings per replication per path")
    e.add_argument("--max-states", type=_positive, default=10_000)
    e.add_argument("--max-explore-depth", type=_positive, default=50)
    e.set_defaults(func=cmd_explore)

    c = sub.add_parser("check", parents=[common], help="lint scripts")
    c.add_argument("scripts", nargs="+")
    c.set_defaults(func=cmd_check)

    x = sub.add_parser("examples", help="list (or copy out) the bundled corpus")
    x.add_argument("--copy-to", metavar="DIR", help="copy the corpus into DIR")
    x.set_defaults(func=cmd_examples)
    return ap


def _positive(s):
    v = int(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExhausted as e:
        print(f"error: proof search budget exhausted: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (LnsError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
