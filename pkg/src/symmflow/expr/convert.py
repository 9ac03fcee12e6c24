"""Conversion of expression trees into the canonical fragment."""

from fractions import Fraction

from .canon import ONE_EXPR, CanonExpr, _mul_raw, truncate as _truncate
from .linform import LinForm
from .tree import INDEPENDENT, Add, Call, Div, Jet, Mul, Name, Neg, Num, Pow, Sub


class NotCanonical(ValueError):
    """The expression lies outside the canonical fragment."""

    def __init__(self, message, subtree=None):
        super().__init__(message if subtree is None else f"{message}: {subtree}")
        self.subtree = subtree


def _exact_root(r, n):
    """Exact rational n-th root of ``r`` or None."""
    if r < 0:
        if n % 2 == 0:
            return None
        root = _exact_root(-r, n)
        return -root if root is not None else None

    def iroot(k):
        lo, hi = 0, 1
        while hi ** n <= k:
            hi *= 2
        while lo < hi - 1:
            mid = (lo + hi) // 2
            if mid ** n <= k:
                lo = mid
            else:
                hi = mid
        return lo if lo ** n == k else None

    p = iroot(r.numerator)
    q = iroot(r.denominator)
    if p is None or q is None:
        return None
    return Fraction(p, q)


def _rational_power(base, exp):
    if exp.denominator == 1:
        if base == 0 and exp < 0:
            raise ZeroDivisionError
        return base ** exp.numerator
    root = _exact_root(base, exp.denominator)
    if root is None:
        return None
    return root ** exp.numerator


def _raw_mul(a, b):
    return CanonExpr._raw(_mul_raw(a, b))


def _raw_pow(a, n):
    result = ONE_EXPR
    for _ in range(n):
        result = _raw_mul(result, a)
    return result


def canonicalize(node, params=None, truncate=False):
    """Canonical form of ``node``.

    ``params`` binds names (e.g. ``c`` or ``C1``) to rationals or canonical
    expressions before conversion. Remaining non-reserved names become
    unknowns of the coefficient field. Any surviving ``eps**2`` term raises
    :class:`NotCanonical` unless ``truncate`` is set.
    """
    params = {k: (v if isinstance(v, CanonExpr) else CanonExpr.const(Fraction(v)))
              for k, v in (params or {}).items()}
    result = _convert(node, params)
    if result.max_epspow() >= 2:
        if not truncate:
            raise NotCanonical("eps^2 terms present before truncation", node)
        result = _truncate(result)
    return result


def _convert(node, params):
    if isinstance(node, Num):
        return CanonExpr.const(node.value)
    if isinstance(node, Name):
        name = node.name
        if name in params:
            return params[name]
        if name in INDEPENDENT:
            return CanonExpr.x()
        if name in ("eps", "ε"):
            return CanonExpr.eps()
        if name == "pi":
            raise NotCanonical("irrational constant", node)
        return CanonExpr.const(LinForm.symbol(name))
    if isinstance(node, Jet):
        return CanonExpr.jet(node.order, node.family)
    if isinstance(node, Neg):
        return -_convert(node.operand, params)
    if isinstance(node, Add):
        return _convert(node.left, params) + _convert(node.right, params)
    if isinstance(node, Sub):
        return _convert(node.left, params) - _convert(node.right, params)
    if isinstance(node, Mul):
        return _raw_mul(_convert(node.left, params), _convert(node.right, params))
    if isinstance(node, Div):
        den = _convert(node.right, params).constant_value()
        if den is None:
            raise NotCanonical("division by a non-constant", node)
        if den == 0:
            raise NotCanonical("division by zero", node)
        return _convert(node.left, params).scale(1 / den)
    if isinstance(node, Pow):
        exp = _convert(node.exp, params).constant_value()
        if exp is None:
            raise NotCanonical("non-constant exponent", node)
        base = _convert(node.base, params)
        if exp.denominator == 1 and exp >= 0:
            return _raw_pow(base, exp.numerator)
        b = base.constant_value()
        if b is None:
            raise NotCanonical("negative or fractional power of a non-constant", node)
        try:
            value = _rational_power(b, exp)
        except ZeroDivisionError:
            raise NotCanonical("zero to a negative power", node) from None
        if value is None:
            raise NotCanonical("irrational power", node)
        return CanonExpr.const(value)
    if isinstance(node, Call):
        arg = _convert(node.arg, params)
        if node.func == "sqrt":
            v = arg.constant_value()
            if v is None:
                raise NotCanonical("sqrt of a non-constant", node)
            root = _exact_root(v, 2)
            if root is None:
                raise NotCanonical("sqrt of a non-square rational", node)
            return CanonExpr.const(root)
        m = _frequency(arg)
        if m is None:
            raise NotCanonical("trig argument is not an integer multiple of x", node)
        return CanonExpr.sin(m) if node.func == "sin" else CanonExpr.cos(m)
    raise TypeError(f"unsupported node {node!r}")


def _frequency(arg):
    if arg.is_zero():
        return 0
    items = list(arg.items())
    if len(items) != 1:
        return None
    key, c = items[0]
    if key != (1, (), (), 0) or not c.is_constant() or c.constant.denominator != 1:
        return None
    return int(c.constant)


def from_text(text, params=None, truncate=False, names=()):
    """``canonicalize(parse(text))`` convenience."""
    from .parser import parse

    return canonicalize(parse(text, names), params=params, truncate=truncate)


def to_tree(expr):
    """Expression tree for a canonical expression (used for numeric compilation)."""
    from .parser import parse

    return parse(str(expr), names=expr.unknowns())

