"""Canonical sums of monomials in x, trig(m*x), jet variables and eps.

A term is ``coeff * x**k * trig * prod((y_f^(j))**a) * eps**e`` where ``coeff``
is a :class:`LinForm`, ``trig`` is ``()``, ``("cos", m)`` or ``("sin", m)``
with ``m >= 1``, the jet part is a sorted tuple of ``((family, order), exp)``
pairs and ``e`` is 0 or 1. Terms are stored in a dict keyed by
``(xpow, trig, jet, epspow)`` so structural equality is semantic equality.
"""

import math
from fractions import Fraction

from .linform import LinForm, as_fraction

HALF = Fraction(1, 2)

_EMPTY_KEY = (0, (), (), 0)


def jet_name(family, order):
    if order == 0:
        return family
    if order <= 3:
        return family + "'" * order
    return f"{family}^({order})"


def _trig_norm(kind, m, factor):
    if m == 0:
        return [(factor, ())] if kind == "cos" else []
    if m < 0:
        return [(factor, ("cos", -m))] if kind == "cos" else [(-factor, ("sin", -m))]
    return [(factor, (kind, m))]


def trig_product(t1, t2):
    """Linearize ``t1 * t2`` into a list of ``(factor, trig)`` pairs."""
    if not t1:
        return [(Fraction(1), t2)]
    if not t2:
        return [(Fraction(1), t1)]
    (k1, a), (k2, b) = t1, t2
    if k1 == "sin" and k2 == "sin":
        return _trig_norm("cos", a - b, HALF) + _trig_norm("cos", a + b, -HALF)
    if k1 == "cos" and k2 == "cos":
        return _trig_norm("cos", a - b, HALF) + _trig_norm("cos", a + b, HALF)
    if k1 == "cos":
        a, b = b, a
    # sin(a) cos(b)
    return _trig_norm("sin", a + b, HALF) + _trig_norm("sin", a - b, HALF)


def _jet_merge(j1, j2):
    if not j1:
        return j2
    if not j2:
        return j1
    d = dict(j1)
    for v, e in j2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


class Term:
    """Read-only view of one monomial of a :class:`CanonExpr`."""

    __slots__ = ("coeff", "xpow", "trig", "jet", "epspow")

    def __init__(self, coeff, xpow, trig, jet, epspow):
        self.coeff = coeff
        self.xpow = xpow
        self.trig = trig
        self.jet = jet
        self.epspow = epspow

    @property
    def key(self):
        return (self.xpow, self.trig, self.jet, self.epspow)

    def jet_degree(self, family=None):
        return sum(e for (f, _), e in self.jet if family is None or f == family)

    def __repr__(self):
        return f"Term({self.coeff}, x^{self.xpow}, {self.trig}, {self.jet}, eps^{self.epspow})"


class CanonExpr:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms=None):
        self._terms = {}
        if terms:
            for k, c in terms.items():
                if not isinstance(c, LinForm):
                    c = LinForm(c)
                if not c.is_zero():
                    self._terms[k] = c
        self._hash = None

    @classmethod
    def _raw(cls, terms):
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def const(cls, value):
        c = value if isinstance(value, LinForm) else LinForm(as_fraction(value))
        return cls({_EMPTY_KEY: c})

    @classmethod
    def symbol(cls, name):
        return cls({_EMPTY_KEY: LinForm.symbol(name)})

    @classmethod
    def x(cls, power=1):
        return cls({(power, (), (), 0): LinForm(1)})

    @classmethod
    def jet(cls, order=0, family="y", power=1):
        if power == 0:
            return cls.const(1)
        return cls({(0, (), (((family, order), power),), 0): LinForm(1)})

    @classmethod
    def eps(cls):
        return cls({(0, (), (), 1): LinForm(1)})

    @classmethod
    def sin(cls, m=1):
        return cls({(0, t, (), 0): LinForm(f) for f, t in _trig_norm("sin", m, Fraction(1))})

    @classmethod
    def cos(cls, m=1):
        return cls({(0, t, (), 0): LinForm(f) for f, t in _trig_norm("cos", m, Fraction(1))})

    @classmethod
    def monomial(cls, coeff=1, xpow=0, trig=(), jet=(), epspow=0):
        jet = tuple(sorted((v, e) for v, e in jet if e))
        return cls({(xpow, trig, jet, epspow): coeff})

    # -- inspection ---------------------------------------------------------

    def terms(self):
        """Terms in printing order ``(epspow, jet, trig, xpow)``."""
        items = sorted(self._terms.items(), key=lambda kv: (kv[0][3], kv[0][2], kv[0][1], kv[0][0]))
        return [Term(c, *k) for k, c in items]

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self):
        return not self._terms

    def unknowns(self):
        out = set()
        for c in self._terms.values():
            out |= c.unknowns()
        return out

    def has_unknowns(self):
        return any(c.terms for c in self._terms.values())

    def jet_vars(self):
        return {v for k in self._terms for v, _ in k[2]}

    def max_order(self, family="y"):
        orders = [o for f, o in self.jet_vars() if f == family]
        return max(orders) if orders else -1

    def families(self):
        return {f for f, _ in self.jet_vars()}

    def max_epspow(self):
        return max((k[3] for k in self._terms), default=0)

    def is_x_only(self):
        return all(not k[2] and k[3] == 0 for k in self._terms)

    def constant_value(self):
        """The rational value if this is a constant without unknowns, else None."""
        if not self._terms:
            return Fraction(0)
        if len(self._terms) == 1 and _EMPTY_KEY in self._terms:
            c = self._terms[_EMPTY_KEY]
            if c.is_constant():
                return c.constant
        return None

    def eps_part(self, k):
        """Coefficient of ``eps**k`` (with the eps factor removed)."""
        return CanonExpr._raw({(a, t, j, 0): c for (a, t, j, e), c in self._terms.items() if e == k})

    def eps_parts(self):
        return self.eps_part(0), self.eps_part(1)

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            if k in terms:
                s = terms[k] + c
                if s.is_zero():
                    del terms[k]
                else:
                    terms[k] = s
            else:
                terms[k] = c
        return CanonExpr._raw(terms)

    __radd__ = __add__

    def __neg__(self):
        return CanonExpr._raw({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def scale(self, r):
        if isinstance(r, LinForm):
            return self * CanonExpr.const(r)
        r = as_fraction(r)
        if r == 0:
            return ZERO_EXPR
        return CanonExpr._raw({k: c.scale(r) for k, c in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = ONE_EXPR
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- equality -----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CanonExpr.const(other)
        if not isinstance(other, CanonExpr):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # -- substitution / evaluation -----------------------------------------

    def substitute_unknowns(self, values):
        terms = {}
        for k, c in self._terms.items():
            nc = c.substitute(values)
            if not nc.is_zero():
                terms[k] = nc
        return CanonExpr._raw(terms)

    def coefficient_map(self):
        """Map each term key to its coefficient (a LinForm)."""
        return dict(self._terms)

    def evaluate(self, env):
        """Float value; ``env`` maps 'x', 'eps', jet names and unknowns to floats."""
        x = env.get("x", 0.0)
        total = 0.0
        for (xp, trig, jet, ep), c in self._terms.items():
            v = c.evaluate(env)
            if xp:
                v *= x ** xp
            if trig:
                v *= math.sin(trig[1] * x) if trig[0] == "sin" else math.cos(trig[1] * x)
            for (f, o), e in jet:
                v *= env[jet_name(f, o)] ** e
            if ep:
                v *= env["eps"] ** ep
            total += v
        return total

    def __repr__(self):
        return f"CanonExpr({self})"

    def __str__(self):
        return to_text(self)


def _coerce(value):
    if isinstance(value, CanonExpr):
        return value
    if isinstance(value, LinForm):
        return CanonExpr.const(value)
    return CanonExpr.const(as_fraction(value))


ZERO_EXPR = CanonExpr()
ONE_EXPR = CanonExpr.const(1)


# -- multiplication -----------------------------------------------------------

def _mul_raw(a, b):
    terms = {}
    for (xa, ta, ja, ea), ca in a._terms.items():
        for (xb, tb, jb, eb), cb in b._terms.items():
            c = ca * cb
            if c.is_zero():
                continue
            jet = _jet_merge(ja, jb)
            for f, t in trig_product(ta, tb):
                key = (xa + xb, t, jet, ea + eb)
                cc = c.scale(f) if f != 1 else c
                if key in terms:
                    s = terms[key] + cc
                    if s.is_zero():
                        del terms[key]
                    else:
                        terms[key] = s
                else:
                    terms[key] = cc
    return terms


def mul(a, b):
    """Product with trig linearization and ``eps**2`` truncation."""
    terms = _mul_raw(a, b)
    return CanonExpr._raw({k: c for k, c in terms.items() if k[3] < 2})


def add(a, b):
    return a + b


def neg(a):
    return -a


def scale(a, r):
    return a.scale(r)


def truncate(a, order=2):
    """Drop every term with ``eps**e``, ``e >= order``."""
    return CanonExpr._raw({k: c for k, c in a._terms.items() if k[3] < order})


# -- differentiation ----------------------------------------------------------

def _as_var(v):
    if v == "x":
        return "x"
    if isinstance(v, int):
        return ("y", v)
    if isinstance(v, str):
        return (v, 0)
    return tuple(v)


def partial(a, v):
    """Partial derivative w.r.t. ``'x'``, a jet order ``j`` or ``(family, j)``."""
    v = _as_var(v)
    terms = {}

    def put(key, c):
        if key in terms:
            s = terms[key] + c
            if s.is_zero():
                del terms[key]
            else:
                terms[key] = s
        else:
            terms[key] = c

    for (xp, trig, jet, ep), c in a._terms.items():
        if v == "x":
            if xp:
                put((xp - 1, trig, jet, ep), c.scale(xp))
            if trig:
                kind, m = trig
                if kind == "sin":
                    put((xp, ("cos", m), jet, ep), c.scale(m))
                else:
                    put((xp, ("sin", m), jet, ep), c.scale(-m))
        else:
            d = dict(jet)
            e = d.get(v)
            if not e:
                continue
            if e == 1:
                del d[v]
            else:
                d[v] = e - 1
            put((xp, trig, tuple(sorted(d.items())), ep), c.scale(e))
    return CanonExpr._raw(terms)


def total_derivative(a):
    """``D a = a_x + sum_j y^(j+1) * a_{y^(j)}`` over every jet family."""
    out = partial(a, "x")
    for f, o in sorted(a.jet_vars()):
        out = out + mul(partial(a, (f, o)), CanonExpr.jet(o + 1, f))
    return out


def total_derivative_n(a, n):
    for _ in range(n):
        a = total_derivative(a)
    return a


# -- substitution -------------------------------------------------------------

class _PowerCache:
    def __init__(self, base):
        self.powers = [ONE_EXPR, base]

    def get(self, e):
        while len(self.powers) <= e:
            self.powers.append(mul(self.powers[-1], self.powers[1]))
        return self.powers[e]


def _accumulate(terms, key, c):
    if key in terms:
        s = terms[key] + c
        if s.is_zero():
            del terms[key]
        else:
            terms[key] = s
    else:
        terms[key] = c


def _replace_jets(a, select, replacement):
    """Replace every jet variable ``v`` with ``select(v)`` true by ``replacement(v)``."""
    caches = {}
    out_terms = {}
    for (xp, trig, jet, ep), c in a._terms.items():
        keep = tuple((v, e) for v, e in jet if not select(v))
        repl = [(v, e) for v, e in jet if select(v)]
        if not repl:
            _accumulate(out_terms, (xp, trig, keep, ep), c)
            continue
        part = CanonExpr._raw({(xp, trig, keep, ep): c})
        for v, e in repl:
            if v not in caches:
                caches[v] = _PowerCache(replacement(v))
            part = mul(part, caches[v].get(e))
        for k, pc in part._terms.items():
            _accumulate(out_terms, k, pc)
    return CanonExpr._raw(out_terms)


def substitute_jet(a, n, r, family="y"):
    """Restrict ``a`` to ``y^(n) = r``: replace ``y^(n+k)`` by ``D^k r`` recursively.

    ``r`` must not contain jet orders ``>= n`` of ``family``.
    """
    if r.max_order(family) >= n:
        raise ValueError(f"replacement contains {jet_name(family, r.max_order(family))}")
    derivs = [truncate(r)]

    def repl(v):
        k = v[1] - n
        while len(derivs) <= k:
            d = total_derivative(derivs[-1])
            d = _replace_jets(d, lambda w: w == (family, n), lambda w: derivs[0])
            derivs.append(d)
        return derivs[k]

    return _replace_jets(a, lambda v: v[0] == family and v[1] >= n, repl)


def compose(a, family, value):
    """Substitute ``y_family := value`` (and its jets by total derivatives of value)."""
    derivs = [value]

    def repl(v):
        while len(derivs) <= v[1]:
            derivs.append(total_derivative(derivs[-1]))
        return derivs[v[1]]

    return _replace_jets(a, lambda v: v[0] == family, repl)


def at_zero(a):
    """Exact value of an x-only expression at ``x = 0`` (sin -> 0, cos -> 1)."""
    out = LinForm()
    for (xp, trig, jet, ep), c in a._terms.items():
        if jet or ep:
            raise ValueError("at_zero needs an expression in x only")
        if xp or (trig and trig[0] == "sin"):
            continue
        out = out + c
    return out


# -- printing -----------------------------------------------------------------

def _factor_text(xp, trig, jet, ep):
    parts = []
    if xp:
        parts.append("x" if xp == 1 else f"x^{xp}")
    for (f, o), e in jet:
        name = jet_name(f, o)
        parts.append(name if e == 1 else f"{name}^{e}")
    if trig:
        kind, m = trig
        parts.append(f"{kind}(x)" if m == 1 else f"{kind}({m}*x)")
    if ep:
        parts.append("eps")
    return parts


def _coeff_text(c):
    """Return (negative, text) for a coefficient; text is '' for a unit."""
    if c.is_constant():
        r = c.constant
        return r < 0, ("" if abs(r) == 1 else str(abs(r)))
    if c.constant == 0 and len(c.terms) == 1:
        (name, v), = c.terms.items()
        return v < 0, (name if abs(v) == 1 else f"{abs(v)}*{name}")
    return False, f"({c})"


def to_text(a):
    """Print in the parser grammar; terms ordered by (epspow, jet, trig, xpow)."""
    if not a._terms:
        return "0"
    out = []
    for t in a.terms():
        negative, ctext = _coeff_text(t.coeff)
        factors = _factor_text(t.xpow, t.trig, t.jet, t.epspow)
        if ctext:
            factors.insert(0, ctext)
        body = "*".join(factors) if factors else "1"
        if not out:
            out.append(("-" if negative else "") + body)
        else:
            out.append((" - " if negative else " + ") + body)
    return "".join(out)
