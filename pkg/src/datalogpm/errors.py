class DatalogError(Exception):
    pass


class StrictModeUnbound(DatalogError):
    def __init__(self, variable):
        super().__init__(f"variable {variable} is not bound by the substitution")
        self.variable = variable


class NotBoolean(DatalogError):
    pass


class NotATgd(DatalogError):
    pass


class HardFailure(DatalogError):
    """Raised when an EGD would equate two distinct constants."""

    def __init__(self, dependency, left, right):
        super().__init__(f"cannot equate distinct constants {left} and {right}")
        self.dependency = dependency
        self.left = left
        self.right = right


class ParseError(DatalogError):
    def __init__(self, message, line=None, column=None, expected=()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        where = f"{line}:{column}: " if line is not None else ""
        hint = ""
        if self.expected:
            hint = " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(f"{where}{message}{hint}")


class ArityMismatch(ParseError):
    pass


class UnsafeRule(ParseError):
    pass
