"""Pratt parser for the expression grammar.

Grammar summary::

    expr    := expr ('+'|'-') expr | expr ('*'|'/') expr | '-' expr
             | expr '^' expr | atom
    atom    := NUMBER | NAME | JET | FUNC '(' expr ')' | '(' expr ')'
    JET     := ('y'|'y0'|'y1') "'"*  |  ('y'|'y0'|'y1') '^(' INT ')'

``^`` is right associative and binds tighter than unary minus, which binds
tighter than ``*`` and ``/``.
"""

import re
from fractions import Fraction

from .tree import FUNCTIONS, Add, Call, Div, Jet, Mul, Name, Neg, Num, Pow, Sub

FAMILIES = ("y", "y0", "y1")
BUILTIN_NAMES = {"x", "z", "eps", "c", "pi"}
_NAME_PATTERNS = re.compile(r"^(?:[A-Z][0-9]*|a[0-9]+|k|lam|lambda)$")

_TOKEN = re.compile(
    r"(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-zε_][A-Za-z0-9_]*)(?P<primes>'*)|(?P<op>[-+*/^(),]))"
)


class ParseError(ValueError):
    def __init__(self, message, position, text=""):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.text = text


class UnknownIdentifier(ParseError):
    def __init__(self, token, position, text=""):
        super().__init__(f"unknown identifier {token!r}", position, text)
        self.token = token


def tokenize(text):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), pos))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name") + m.group("primes"), pos))
        else:
            tokens.append(("op", m.group("op"), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_RBP = 30


class _Parser:
    def __init__(self, text, names):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0
        self.names = names

    def peek(self, k=0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.advance()
        if text != value:
            found = text or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", pos, self.text)

    def expression(self, rbp=0):
        left = self.nud(self.advance())
        while True:
            kind, text, pos = self.peek()
            if kind != "op" or text not in _LBP or _LBP[text] <= rbp:
                break
            self.advance()
            left = self.led(text, left)
        return left

    def nud(self, tok):
        kind, text, pos = tok
        if kind == "num":
            return Num(Fraction(text))
        if kind == "name":
            return self.name(text, pos)
        if kind == "op" and text == "-":
            return Neg(self.expression(_UNARY_RBP))
        if kind == "op" and text == "+":
            return self.expression(_UNARY_RBP)
        if kind == "op" and text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        found = text or "end of input"
        raise ParseError(f"unexpected {found!r}", pos, self.text)

    def name(self, text, pos):
        base = text.rstrip("'")
        primes = len(text) - len(base)
        if base in FAMILIES:
            if primes == 0 and self._jet_power_follows():
                self.advance()
                self.advance()
                order = int(self.advance()[1])
                self.advance()
                return Jet(order, base)
            return Jet(primes, base)
        if primes:
            raise ParseError(f"derivative marks on non-jet identifier {base!r}", pos, self.text)
        if base in FUNCTIONS:
            if self.peek()[1] != "(":
                raise ParseError(f"function {base!r} needs an argument", pos, self.text)
            self.advance()
            arg = self.expression()
            self.expect(")")
            return Call(base, arg)
        if base in ("ε", "epsilon"):
            return Name("eps")
        if base in BUILTIN_NAMES or base in self.names or _NAME_PATTERNS.match(base):
            return Name(base)
        raise UnknownIdentifier(base, pos, self.text)

    def _jet_power_follows(self):
        t1, t2, t3, t4 = (self.peek(k) for k in range(4))
        return (
            t1[1] == "^" and t2[1] == "(" and t3[0] == "num"
            and t3[1].isdigit() and t4[1] == ")"
        )

    def led(self, op, left):
        if op == "^":
            # right associative
            return Pow(left, self.expression(_LBP["^"] - 1))
        right = self.expression(_LBP[op])
        return {"+": Add, "-": Sub, "*": Mul, "/": Div}[op](left, right)


def parse(text, names=()):
    """Parse ``text`` into an expression tree.

    ``names`` adds identifiers beyond the built-in ones (``x``, ``z``, ``eps``,
    ``c``, ``pi``, ``C1``-style constants and ``a1``-style unknowns).
    """
    p = _Parser(text, set(names))
    if p.peek()[0] == "end":
        raise ParseError("empty expression", 0, text)
    tree = p.expression()
    kind, tok, pos = p.peek()
    if kind != "end":
        raise ParseError(f"unexpected {tok!r}", pos, text)
    return tree
