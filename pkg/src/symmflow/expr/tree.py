"""Expression trees for formulas that may fall outside the canonical fragment."""

import math
from dataclasses import dataclass
from fractions import Fraction

from .canon import jet_name


class DomainError(ArithmeticError):
    """Numeric evaluation hit a division by zero or a negative square root."""


class Node:
    __slots__ = ()

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True)
class Num(Node):
    value: Fraction


@dataclass(frozen=True)
class Name(Node):
    name: str


@dataclass(frozen=True)
class Jet(Node):
    order: int
    family: str = "y"


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Sub(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Div(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exp: Node


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


FUNCTIONS = ("sin", "cos", "sqrt")
INDEPENDENT = ("x", "z")

# binding strength used by the printer
_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _prec(node):
    return _PREC.get(type(node), 5)


def _num_text(v):
    if v.denominator == 1:
        return str(v.numerator) if v >= 0 else f"({v.numerator})"
    d = v.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1 and v > 0:
        digits = 0
        while (v * 10 ** digits).denominator != 1:
            digits += 1
        return f"{float(v):.{digits}f}"
    return f"({v})"


def to_text(node):
    """Print ``node`` in the parser grammar with minimal parentheses."""
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Jet):
        return jet_name(node.family, node.order)
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, 4)
    if isinstance(node, Pow):
        return _wrap(node.base, 5) + "^" + _wrap(node.exp, 4)
    op = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(node)]
    p = _prec(node)
    return _wrap(node.left, p) + op + _wrap(node.right, p + 1)


def _wrap(node, min_prec):
    text = to_text(node)
    return text if _prec(node) >= min_prec else f"({text})"


# -- numeric evaluation -------------------------------------------------------

def _lookup(env, name):
    if name in env:
        return env[name]
    if name in INDEPENDENT:
        other = "z" if name == "x" else "x"
        if other in env:
            return env[other]
    if name == "pi":
        return math.pi
    if name in ("eps", "ε") and "eps" in env:
        return env["eps"]
    raise KeyError(f"no value for {name!r}")


def eval_numeric(node, env):
    """IEEE double evaluation; raises :class:`DomainError` on invalid operations."""
    if isinstance(node, Num):
        return float(node.value)
    if isinstance(node, Name):
        return float(_lookup(env, node.name))
    if isinstance(node, Jet):
        return float(_lookup(env, jet_name(node.family, node.order)))
    if isinstance(node, Neg):
        return -eval_numeric(node.operand, env)
    if isinstance(node, Call):
        a = eval_numeric(node.arg, env)
        if node.func == "sqrt":
            if a < 0:
                raise DomainError(f"sqrt of negative value {a}")
            return math.sqrt(a)
        return math.sin(a) if node.func == "sin" else math.cos(a)
    a = eval_numeric(node.left if not isinstance(node, Pow) else node.base, env)
    b = eval_numeric(node.right if not isinstance(node, Pow) else node.exp, env)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    if isinstance(node, Div):
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    if a == 0 and b < 0:
        raise DomainError("zero to a negative power")
    if a < 0 and b != int(b):
        raise DomainError("negative base with fractional exponent")
    return a ** b


# -- symbolic derivative ------------------------------------------------------

ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def _is_num(node, value=None):
    return isinstance(node, Num) and (value is None or node.value == value)


def _add(a, b):
    if _is_num(a, 0):
        return b
    if _is_num(b, 0):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value)
    return Add(a, b)


def _sub(a, b):
    if _is_num(b, 0):
        return a
    if _is_num(a, 0):
        return _neg(b)
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value)
    return Sub(a, b)


def _neg(a):
    if _is_num(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _mul(a, b):
    if _is_num(a, 0) or _is_num(b, 0):
        return ZERO
    if _is_num(a, 1):
        return b
    if _is_num(b, 1):
        return a
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value)
    return Mul(a, b)


def _div(a, b):
    if _is_num(a, 0):
        return ZERO
    if _is_num(b, 1):
        return a
    return Div(a, b)


def diff(node, var="x"):
    """Total derivative in the independent variable (jets shift one order up)."""
    if isinstance(node, Num):
        return ZERO
    if isinstance(node, Name):
        return ONE if node.name in INDEPENDENT else ZERO
    if isinstance(node, Jet):
        return Jet(node.order + 1, node.family)
    if isinstance(node, Neg):
        return _neg(diff(node.operand))
    if isinstance(node, Add):
        return _add(diff(node.left), diff(node.right))
    if isinstance(node, Sub):
        return _sub(diff(node.left), diff(node.right))
    if isinstance(node, Mul):
        return _add(_mul(diff(node.left), node.right), _mul(node.left, diff(node.right)))
    if isinstance(node, Div):
        num = _sub(_mul(diff(node.left), node.right), _mul(node.left, diff(node.right)))
        return _div(num, Pow(node.right, Num(Fraction(2))))
    if isinstance(node, Call):
        da = diff(node.arg)
        if _is_num(da, 0):
            return ZERO
        if node.func == "sin":
            return _mul(Call("cos", node.arg), da)
        if node.func == "cos":
            return _neg(_mul(Call("sin", node.arg), da))
        return _div(da, _mul(Num(Fraction(2)), node))
    if isinstance(node, Pow):
        if _free_of_independent(node.exp):
            db = diff(node.base)
            if _is_num(db, 0):
                return ZERO
            lowered = Pow(node.base, _sub(node.exp, ONE)) if not _is_num(node.exp, 2) else node.base
            return _mul(_mul(node.exp, lowered), db)
        raise ValueError("variable exponents are not supported")
    raise TypeError(node)


def diff_n(node, n):
    for _ in range(n):
        node = diff(node)
    return node


def _free_of_independent(node):
    return not any(isinstance(n, (Jet,)) or (isinstance(n, Name) and n.name in INDEPENDENT) for n in walk(node))


def walk(node):
    yield node
    if isinstance(node, (Neg,)):
        yield from walk(node.operand)
    elif isinstance(node, Call):
        yield from walk(node.arg)
    elif isinstance(node, Pow):
        yield from walk(node.base)
        yield from walk(node.exp)
    elif isinstance(node, (Add, Sub, Mul, Div)):
        yield from walk(node.left)
        yield from walk(node.right)


def free_names(node):
    out = set()
    for n in walk(node):
        if isinstance(n, Name):
            out.add(n.name)
        elif isinstance(n, Jet):
            out.add(jet_name(n.family, n.order))
    return out


def substitute(node, mapping):
    """Replace :class:`Name` nodes by trees (or numbers) given in ``mapping``."""
    if isinstance(node, Name):
        if node.name in mapping:
            v = mapping[node.name]
            return v if isinstance(v, Node) else Num(Fraction(v))
        return node
    if isinstance(node, (Num, Jet)):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, mapping), substitute(node.exp, mapping))
    return type(node)(substitute(node.left, mapping), substitute(node.right, mapping))


# -- compilation --------------------------------------------------------------

def _source(node):
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Name):
        if node.name == "pi":
            return "_pi"
        return f"_v({node.name!r})"
    if isinstance(node, Jet):
        return f"_v({jet_name(node.family, node.order)!r})"
    if isinstance(node, Neg):
        return f"(-{_source(node.operand)})"
    if isinstance(node, Call):
        return f"_{node.func}({_source(node.arg)})"
    if isinstance(node, Pow):
        if _is_num(node.exp) and node.exp.value.denominator == 1:
            return f"({_source(node.base)}**{node.exp.value.numerator})"
        return f"({_source(node.base)}**{_source(node.exp)})"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    return f"({_source(node.left)}{op}{_source(node.right)})"


def compile_tree(node):
    """Return ``f(env)`` evaluating ``node`` with numpy (arrays broadcast)."""
    import numpy as np

    code = _source(node)
    namespace = {"_sin": np.sin, "_cos": np.cos, "_sqrt": np.sqrt, "_pi": math.pi}
    body = f"def _f(env):\n    _v = lambda k: _get(env, k)\n    return {code}\n"
    namespace["_get"] = _lookup
    exec(compile(body, "<symmflow>", "exec"), namespace)
    return namespace["_f"]
