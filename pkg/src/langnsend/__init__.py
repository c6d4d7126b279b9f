"""Interpreter for a pi-calculus whose processes exchange and execute language definitions."""
from .errors import (
    BudgetExhausted, CategoryClash, LanguageError, LnsError, NonGroundAnswer, ParseError,
    SortMismatch, StateLimit, StepLimit, UnboundVariable, UndeclaredMetavarRoot, UnknownCategory,
)
from .lang import (
    EMPTY_LANGUAGE, Formula, GrammarRule, Language, MetaVar, Node, Rule, check_term,
    free_metavars, union,
)
from .engine import SearchBudget, compile_language, query_step, solve, unify
from .process import Trace, normalize, render
from .semantics import explore, reduce_candidates, run
from .syntax import parse_language, parse_process, parse_term, print_language, print_process

__version__ = "0.1.0"
