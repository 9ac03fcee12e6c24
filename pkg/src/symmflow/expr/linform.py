"""Affine forms over the rationals in a set of named unknowns."""

from fractions import Fraction


class NonlinearUnknowns(ArithmeticError):
    """Raised when two unknown-bearing coefficients are multiplied."""


def as_fraction(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot convert {value!r} to an exact rational")


class LinForm:
    """``constant + sum(coeff * unknown)`` with exact rational coefficients.

    Instances are immutable by convention; every operation returns a new
    object. Zero entries are never stored.
    """

    __slots__ = ("constant", "terms", "_hash")

    def __init__(self, constant=0, terms=None):
        self.constant = as_fraction(constant)
        if terms:
            self.terms = {k: as_fraction(v) for k, v in terms.items() if v != 0}
        else:
            self.terms = {}
        self._hash = None

    @classmethod
    def symbol(cls, name, coeff=1):
        return cls(0, {name: coeff})

    @classmethod
    def _raw(cls, constant, terms):
        obj = cls.__new__(cls)
        obj.constant = constant
        obj.terms = terms
        obj._hash = None
        return obj

    def is_zero(self):
        return self.constant == 0 and not self.terms

    def is_constant(self):
        return not self.terms

    def unknowns(self):
        return set(self.terms)

    def __add__(self, other):
        if not isinstance(other, LinForm):
            other = LinForm(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            s = terms.get(k, 0) + v
            if s:
                terms[k] = s
            else:
                terms.pop(k, None)
        return LinForm._raw(self.constant + other.constant, terms)

    __radd__ = __add__

    def __neg__(self):
        return LinForm._raw(-self.constant, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, LinForm):
            other = LinForm(other)
        return self + (-other)

    def scale(self, r):
        r = as_fraction(r)
        if r == 0:
            return ZERO
        return LinForm._raw(self.constant * r, {k: v * r for k, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, LinForm):
            return self.scale(other)
        if self.terms and other.terms:
            raise NonlinearUnknowns(
                f"product of unknown-bearing coefficients ({self}) * ({other})"
            )
        if not self.terms:
            return other.scale(self.constant)
        return self.scale(other.constant)

    __rmul__ = __mul__

    def substitute(self, values):
        """Replace unknowns by rationals (or LinForms) given in ``values``."""
        out = LinForm(self.constant)
        for k, v in self.terms.items():
            if k in values:
                val = values[k]
                out = out + (val.scale(v) if isinstance(val, LinForm) else LinForm(as_fraction(val) * v))
            else:
                out = out + LinForm._raw(Fraction(0), {k: v})
        return out

    def evaluate(self, env):
        total = float(self.constant)
        for k, v in self.terms.items():
            total += float(v) * env[k]
        return total

    def _key(self):
        return (self.constant, tuple(sorted(self.terms.items())))

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return not self.terms and self.constant == other
        if not isinstance(other, LinForm):
            return NotImplemented
        return self.constant == other.constant and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._key())
        return self._hash

    def __repr__(self):
        return f"LinForm({self})"

    def __str__(self):
        parts = []
        for name, v in sorted(self.terms.items()):
            parts.append(_signed(v, name))
        if self.constant or not parts:
            parts.append(_signed(self.constant, None))
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _signed(v, name):
    sign = "-" if v < 0 else "+"
    a = abs(v)
    if name is None:
        return f"{sign} {a}"
    if a == 1:
        return f"{sign} {name}"
    return f"{sign} {a}*{name}"


ZERO = LinForm()
ONE = LinForm(1)
