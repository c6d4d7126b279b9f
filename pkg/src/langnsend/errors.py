"""Exception hierarchy shared by every layer of the interpreter."""


class LnsError(Exception):
    """Base class for all interpreter errors."""


class LanguageError(LnsError):
    """A language definition violates a structural invariant."""


class CategoryClash(LanguageError):
    def __init__(self, category, left_root, right_root):
        super().__init__(
            f"category {category!r} declared with metavariable {left_root!r} "
            f"on one side and {right_root!r} on the other"
        )
        self.category = category
        self.left_root = left_root
        self.right_root = right_root


class UnknownCategory(LanguageError):
    pass


class ParseError(LnsError):
    def __init__(self, message, line=None, column=None):
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)
        self.message = message
        self.line = line
        self.column = column


class UndeclaredMetavarRoot(ParseError):
    pass


class UnboundVariable(ParseError):
    pass


class SortMismatch(LnsError):
    """A channel or variable is used at two different sorts."""


class BudgetExhausted(LnsError):
    """Proof search hit its node or depth ceiling.

    This is never evidence of non-provability.
    """


class NonGroundAnswer(LnsError):
    pass


class StepLimit(LnsError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class StateLimit(LnsError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
