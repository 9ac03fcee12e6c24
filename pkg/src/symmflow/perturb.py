"""First-order perturbation series for ``y^(n) = f0 + eps*f1``.

Solutions are ``y = y0 + eps*y1``. The two coefficient equations use the jet
families ``y0`` and ``y1``. Linear constant-coefficient equations with
trigonometric-polynomial forcing are solved by undetermined coefficients.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .expr import CanonExpr, LinForm, at_zero, compose, to_tree, total_derivative, total_derivative_n, truncate
from .expr.canon import ZERO_EXPR, jet_name
from .expr.tree import Node, compile_tree, diff_n
from .linsolve import Inconsistent, LinearSystem, solve, split
from .symmetry import EvolutionaryGenerator, PerturbedODE

EPS = CanonExpr.eps()


class UnsupportedRoots(ValueError):
    """The characteristic polynomial has roots outside ``{0, +-i*m}``."""


class NotLinear(ValueError):
    """The equation is not linear with constant coefficients in the requested family."""


class NotAffineInY(ValueError):
    pass


class Underdetermined(ValueError):
    def __init__(self, order, free):
        super().__init__(f"initial conditions leave {free} free at order eps^{order}")
        self.order = order
        self.free = free


class InconsistentConditions(ValueError):
    def __init__(self, order):
        super().__init__(f"initial conditions are inconsistent at order eps^{order}")
        self.order = order


# -- order splitting -----------------------------------------------------------

@dataclass(frozen=True)
class OrderSplit:
    eq0: CanonExpr
    eq1: CanonExpr

    def to_dict(self):
        return {"order0": f"{self.eq0} = 0", "order1": f"{self.eq1} = 0"}


def split_orders(relation):
    """Coefficient equations of ``eps^0`` and ``eps^1`` after ``y := y0 + eps*y1``.

    ``relation`` is a :class:`PerturbedODE` or a canonical expression that is
    set to zero (for instance a first integral minus its constant).
    """
    if isinstance(relation, PerturbedODE):
        relation = relation.residual()
    value = CanonExpr.jet(0, "y0") + EPS * CanonExpr.jet(0, "y1")
    out = truncate(compose(relation, "y", value))
    return OrderSplit(*out.eps_parts())


# -- linear constant-coefficient equations ---------------------------------------

def _poly_divmod(p, d):
    """Exact division of coefficient lists (lowest degree first)."""
    p = list(p)
    q = [Fraction(0)] * max(len(p) - len(d) + 1, 1)
    for i in range(len(p) - len(d), -1, -1):
        f = p[i + len(d) - 1] / d[-1]
        q[i] = f
        for j, dj in enumerate(d):
            p[i + j] -= f * dj
    return q, p[:len(d) - 1]


def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


class ForcedLinearODE:
    """``sum(c_j * D^j) y = forcing`` with characteristic roots in ``{0, +-i*m}``."""

    def __init__(self, char_coeffs, forcing=ZERO_EXPR):
        coeffs = _trim(Fraction(c) for c in char_coeffs)
        if len(coeffs) < 2:
            raise ValueError("operator must have order >= 1")
        if not forcing.is_x_only() or forcing.has_unknowns():
            raise ValueError("forcing must be a rational trig polynomial in x")
        self.char_coeffs = coeffs
        self.forcing = forcing
        self.zero_multiplicity, self.multiplicities = self._roots(coeffs)

    @staticmethod
    def _roots(coeffs):
        p = list(coeffs)
        zero = 0
        while p[0] == 0:
            p.pop(0)
            zero += 1
        mults = {}
        lead = p[-1]
        bound = 1 + max(abs(c / lead) for c in p)
        m = 1
        while m <= bound and len(p) > 1:
            q, r = _poly_divmod(p, [Fraction(m * m), Fraction(0), Fraction(1)]) if len(p) >= 3 else (None, [1])
            if q is not None and all(v == 0 for v in r):
                mults[m] = mults.get(m, 0) + 1
                p = _trim(q)
            else:
                m += 1
        if len(p) > 1:
            raise UnsupportedRoots(f"characteristic polynomial {coeffs} has roots outside {{0, +-i*m}}")
        return zero, mults

    @property
    def order(self):
        return len(self.char_coeffs) - 1

    def apply(self, y):
        """``p(D) y`` for an expression in x."""
        out = ZERO_EXPR
        d = y
        for c in self.char_coeffs:
            if c:
                out = out + d.scale(c)
            d = total_derivative(d)
        return out

    def resonance(self, m):
        return self.zero_multiplicity if m == 0 else self.multiplicities.get(m, 0)

    def homogeneous_basis(self):
        out = []
        for j in range(self.zero_multiplicity):
            out.append(CanonExpr.x(j) if j else CanonExpr.const(1))
        for m in sorted(self.multiplicities):
            for j in range(self.multiplicities[m]):
                xp = CanonExpr.x(j) if j else CanonExpr.const(1)
                out.append(xp * CanonExpr.cos(m))
                out.append(xp * CanonExpr.sin(m))
        return out

    def __repr__(self):
        return f"ForcedLinearODE({[str(c) for c in self.char_coeffs]}, {self.forcing})"


def linear_operator(eq, family):
    """Read ``eq = 0`` as ``p(D) y_family = forcing``; raises :class:`NotLinear`."""
    coeffs = {}
    rest = {}
    for key, c in eq.items():
        xp, trig, jet, ep = key
        if not jet:
            rest[key] = c
            continue
        if len(jet) != 1 or ep or xp or trig:
            raise NotLinear(f"non-constant or nonlinear term in {family}")
        (f, order), e = jet[0]
        if f != family or e != 1 or not c.is_constant():
            raise NotLinear(f"term {jet_name(f, order)} is not linear in {family}")
        coeffs[order] = c.constant
    if not coeffs:
        raise NotLinear(f"no {family} terms")
    char = [coeffs.get(j, Fraction(0)) for j in range(max(coeffs) + 1)]
    forcing = -CanonExpr._raw(rest)
    if forcing.has_unknowns():
        raise NotLinear("forcing contains unknown constants")
    return ForcedLinearODE(char, forcing)


def solve_forced(p):
    """Particular solution of ``p(D) y = forcing`` with no homogeneous component."""
    groups = {}
    for (xp, trig, _, _), _c in p.forcing.items():
        m = trig[1] if trig else 0
        groups[m] = max(groups.get(m, 0), xp)
    trial = ZERO_EXPR
    names = []
    for m in sorted(groups):
        s = p.resonance(m)
        for i in range(groups[m] + 1):
            xp = CanonExpr.x(i + s) if i + s else CanonExpr.const(1)
            parts = [CanonExpr.const(1)] if m == 0 else [CanonExpr.cos(m), CanonExpr.sin(m)]
            for part in parts:
                n = f"u{len(names) + 1}"
                names.append(n)
                trial = trial + (xp * part).scale(LinForm.symbol(n))
    if not names:
        return ZERO_EXPR
    space = solve(split(p.apply(trial) - p.forcing, names))
    values = {n: space.particular.get(n, Fraction(0)) for n in names}
    return trial.substitute_unknowns(values)


# -- series solutions ---------------------------------------------------------

@dataclass
class SeriesSolution:
    """``y0 + eps*y1``; components are canonical expressions or expression trees."""

    y0: object
    y1: object = ZERO_EXPR
    constants: dict = field(default_factory=dict)

    @property
    def canonical(self):
        return isinstance(self.y0, CanonExpr) and isinstance(self.y1, CanonExpr)

    def as_canon(self):
        if not self.canonical:
            raise ValueError("series components are not canonical")
        return self.y0 + EPS * self.y1

    def trees(self):
        return tuple(c if isinstance(c, Node) else to_tree(c) for c in (self.y0, self.y1))

    def to_dict(self):
        consts = {k: (v if isinstance(v, str) else str(v)) for k, v in sorted(self.constants.items())}
        return {"y0": str(self.y0), "y1": str(self.y1), "constants": consts}

    def __str__(self):
        return f"{self.y0} + eps*({self.y1})"


class SeriesFamily:
    """General first-order series of a linear-at-each-order equation.

    ``y0`` is affine in the constants ``K1..Kn``. ``first_order(y0)`` returns
    ``y1`` affine in ``L1..Ln`` once ``y0`` is concrete.
    """

    def __init__(self, y0, first_order, constants0, constants1):
        self.y0 = y0
        self.first_order = first_order
        self.constants0 = list(constants0)
        self.constants1 = list(constants1)


def _general(p, prefix):
    basis = p.homogeneous_basis()
    names = [f"{prefix}{i + 1}" for i in range(len(basis))]
    y = solve_forced(p)
    for n, b in zip(names, basis):
        y = y + b.scale(LinForm.symbol(n))
    return y, names


def series_family(relation):
    """Family of first-order series for an ODE whose split orders are linear."""
    s = relation if isinstance(relation, OrderSplit) else split_orders(relation)
    y0, names0 = _general(linear_operator(s.eq0, "y0"), "K")
    n = linear_operator(s.eq0, "y0").order

    def first_order(y0_value):
        eq1 = compose(s.eq1, "y0", y0_value)
        y1, _ = _general(linear_operator(eq1, "y1"), "L")
        return y1

    return SeriesFamily(y0, first_order, names0, [f"L{i + 1}" for i in range(n)])


def _fit(expr, names, conditions, order):
    rows = []
    for k, value in conditions:
        form = at_zero(total_derivative_n(expr, k))
        rows.append((dict(form.terms), Fraction(value) - form.constant))
    try:
        space = solve(LinearSystem(list(names), rows))
    except Inconsistent:
        raise InconsistentConditions(order) from None
    if space.nullspace:
        raise Underdetermined(order, [next(iter(v)) for v in space.nullspace])
    values = {u: space.particular.get(u, Fraction(0)) for u in names}
    return expr.substitute_unknowns(values), values


def apply_ics(family, ics):
    """Fit the family to ``y^(k)(0) = v0 + eps*v1`` order by order, exactly.

    ``ics`` is a list of ``(k, value)`` with ``value`` a canonical expression
    (or rational) in eps.
    """
    conds0, conds1 = [], []
    for k, value in ics:
        if not isinstance(value, CanonExpr):
            value = CanonExpr.const(Fraction(value))
        v0, v1 = value.eps_parts()
        c0, c1 = v0.constant_value(), v1.constant_value()
        if c0 is None or c1 is None:
            raise ValueError(f"initial value for derivative {k} is not a rational in eps")
        conds0.append((int(k), c0))
        conds1.append((int(k), c1))
    if not isinstance(family, SeriesFamily):
        raise TypeError("apply_ics expects a SeriesFamily")
    y0, vals0 = _fit(family.y0, family.constants0, conds0, 0)
    y1_general = family.first_order(y0)
    y1, vals1 = _fit(y1_general, family.constants1, conds1, 1)
    consts = {**vals0, **vals1}
    return SeriesSolution(y0, y1, consts)


def invariant_solution(g, constants=None):
    """Series invariant under ``(zeta0 + eps*zeta1) d/dy`` with ``zeta0 = y - h(x)``."""
    if not isinstance(g, EvolutionaryGenerator):
        raise TypeError("expected an EvolutionaryGenerator")
    constants = {k: Fraction(v) for k, v in (constants or {}).items()}
    z0 = g.zeta0.substitute_unknowns(constants)
    z1 = g.zeta1.substitute_unknowns(constants)
    h = CanonExpr.jet(0) - z0
    if not h.is_x_only():
        raise NotAffineInY("zeta0 must be y - h(x)")
    y1 = -compose(z1, "y", h)
    if not y1.is_x_only():
        raise NotAffineInY("zeta1 may only depend on x, y and derivatives of y")
    return SeriesSolution(h, y1, dict(constants))


# -- verification ---------------------------------------------------------------

@dataclass
class ResidualReport:
    mode: str
    order0: object
    order1: object

    tol: float = 0.0

    @property
    def passed(self):
        if self.mode == "symbolic":
            return self.order0.is_zero() and self.order1.is_zero()
        return max(self.order0, self.order1) <= self.tol

    def to_dict(self):
        if self.mode == "symbolic":
            return {"mode": self.mode, "order0": str(self.order0), "order1": str(self.order1)}
        return {"mode": self.mode, "order0": self.order0, "order1": self.order1, "tol": self.tol}


def default_grid():
    return np.linspace(0.0, 10.0, 1001)


def verify_series(relation, s, mode="symbolic", grid=None, tol=1e-10, params=None):
    """Residuals of both coefficient equations for the series ``s``.

    ``params`` supplies numeric values for constants that remain symbolic.
    """
    split_ = relation if isinstance(relation, OrderSplit) else split_orders(relation)
    if mode == "symbolic":
        if not s.canonical:
            from .expr import NotCanonical

            raise NotCanonical("series is not in the canonical fragment")
        r0 = compose(split_.eq0, "y0", s.y0)
        r1 = compose(compose(split_.eq1, "y0", s.y0), "y1", s.y1)
        return ResidualReport("symbolic", r0, r1)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    x = default_grid() if grid is None else np.asarray(grid, dtype=float)
    env = {"x": x}
    for k, v in {**{k: v for k, v in s.constants.items() if not isinstance(v, str)},
                 **(params or {})}.items():
        env[k] = float(v)
    trees = dict(zip(("y0", "y1"), s.trees()))
    top = max(split_.eq0.max_order("y0"), split_.eq1.max_order("y0"), split_.eq1.max_order("y1"))
    for fam, tree in trees.items():
        for k in range(top + 1):
            val = compile_tree(diff_n(tree, k))(env)
            env[jet_name(fam, k)] = np.broadcast_to(np.asarray(val, dtype=float), x.shape)
    out = []
    for eq in (split_.eq0, split_.eq1):
        if eq.is_zero():
            out.append(0.0)
            continue
        val = compile_tree(to_tree(eq))(env)
        out.append(float(np.max(np.abs(np.broadcast_to(val, x.shape)))))
    return ResidualReport("numeric", out[0], out[1], tol=tol)


# -- BBM oscillatory family ------------------------------------------------------

def bbm_relations(c):
    """Second-order reduction, third-order ODE and first integral of the BBM wave ODE.

    The first integral relation keeps its constant as the unknown ``C1``.
    """
    from .expr import from_text

    c = Fraction(c)
    p = {"c": c}
    second = PerturbedODE.from_text(2, "((c-1)/c)*y", "-(3/(4*c))*(y^2-1)", p)
    third = PerturbedODE.from_text(3, "-((1-c)/c)*y'", "-(3/(2*c))*y*y'", p)
    integral = from_text(
        "y'^2 + ((1-c)/c)*y^2 + eps*(y'^2 + ((1-c)/c)*y^2 - 3*y/(2*c) + y^3/(2*c)) - C1", p)
    return second, third, integral


def bbm_oscillatory_series(c, amplitude, cos_coeff=0):
    """Series ``y0 = A*sin(w*z)`` (``w = sqrt((1-c)/c)``) for the BBM reductions.

    The construction runs exactly in ``t = w*z`` where every coefficient is
    rational, then maps back to ``z``. The ``sin(w*z)`` coefficient of ``y1`` is
    fixed so the first-integral constant has no eps part, ``C1 = A^2*(1-c)/c``.
    """
    from .expr.tree import Call, Mul, Name, Num, substitute

    c, A = Fraction(c), Fraction(amplitude)
    if not 0 < c < 1:
        raise ValueError("the oscillatory family needs 0 < c < 1")
    k = (1 - c) / c
    # y'' = -y - 3/(4(1-c)) eps (y^2 - 1) in t
    q = Fraction(3, 4) / (1 - c)
    y0 = CanonExpr.sin(1).scale(A)
    forcing = (y0 * y0 - CanonExpr.const(1)).scale(-q)
    y1 = solve_forced(ForcedLinearODE([1, 0, 1], forcing))
    y1 = y1 + CanonExpr.cos(1).scale(Fraction(cos_coeff)) + CanonExpr.sin(1).scale(LinForm.symbol("F"))
    # first integral in t, divided by k: Y'^2 + Y^2 + eps(Y'^2 + Y^2 - 3Y/(2ck) + Y^3/(2ck)) - C1/k
    r = Fraction(1) / (2 * c * k)
    rel1 = (CanonExpr.jet(1, "y0") * CanonExpr.jet(1, "y1")).scale(2) \
        + (CanonExpr.jet(0, "y0") * CanonExpr.jet(0, "y1")).scale(2) \
        + CanonExpr.jet(1, "y0") ** 2 + CanonExpr.jet(0, "y0") ** 2 \
        - CanonExpr.jet(0, "y0").scale(3 * r) + (CanonExpr.jet(0, "y0") ** 3).scale(r)
    residual = compose(compose(rel1, "y0", y0), "y1", y1)
    space = solve(split(residual, ["F"]))
    y1 = y1.substitute_unknowns({"F": space.particular.get("F", Fraction(0))})
    scale = {"x": Mul(Call("sqrt", Num(k)), Name("x"))}
    trees = [substitute(to_tree(e), scale) for e in (y0, y1)]
    consts = {"A": A, "c": c, "C1": A * A * k, "E": Fraction(cos_coeff)}
    return SeriesSolution(trees[0], trees[1], consts), (y0, y1)
