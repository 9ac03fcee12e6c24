"""Exact and first-order approximate symmetries of scalar ODEs.

Point generators are handled through their characteristic
``zeta = eta - y' * xi`` so exact and approximate determining equations share
one code path: ``D^n zeta - sum_j dF/dy^(j) * D^j zeta`` restricted to
solutions ``y^(n) = F`` and truncated at ``eps**2``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

from .expr import CanonExpr, LinForm, from_text, partial, substitute_jet, total_derivative, truncate
from .expr.canon import ZERO_EXPR
from .linsolve import Inconsistent, in_span, rref_basis, solve, split

EPS = CanonExpr.eps()


class NoSolutionInAnsatz(ValueError):
    """The linear system for the ansatz coefficients is inconsistent."""


@dataclass(frozen=True)
class PerturbedODE:
    """``y^(order) = f0 + eps * f1`` with ``f0``, ``f1`` free of eps."""

    order: int
    f0: CanonExpr
    f1: CanonExpr = ZERO_EXPR

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        for name in ("f0", "f1"):
            f = getattr(self, name)
            if f.max_epspow() > 0:
                raise ValueError(f"{name} must not contain eps")
            if f.max_order("y") >= self.order:
                raise ValueError(f"{name} contains derivatives of order >= {self.order}")

    @classmethod
    def from_text(cls, order, f0, f1="0", params=None):
        return cls(order, from_text(f0, params), from_text(f1, params))

    @property
    def rhs(self):
        return self.f0 + EPS * self.f1

    @property
    def unperturbed(self):
        return PerturbedODE(self.order, self.f0)

    def residual(self):
        """``y^(n) - f0 - eps*f1`` as a canonical expression."""
        return CanonExpr.jet(self.order) - self.rhs

    def __str__(self):
        f = str(self.rhs)
        return f"{CanonExpr.jet(self.order)} = {f}"


@dataclass(frozen=True)
class PointGenerator:
    """``(xi0 + eps*xi1) d/dx + (eta0 + eps*eta1) d/dy``."""

    xi0: CanonExpr = ZERO_EXPR
    eta0: CanonExpr = ZERO_EXPR
    xi1: CanonExpr = ZERO_EXPR
    eta1: CanonExpr = ZERO_EXPR
    name: str = field(default="", compare=False)

    def components(self):
        return (self.xi0, self.eta0, self.xi1, self.eta1)

    def exact_part(self):
        return PointGenerator(self.xi0, self.eta0, name=self.name)

    def is_trivial_point(self):
        return self.xi0.is_zero() and self.eta0.is_zero()

    def combine(self, other, a=1, b=1):
        return PointGenerator(*(x.scale(a) + y.scale(b) for x, y in zip(self.components(), other.components())))

    def to_dict(self):
        return {"name": self.name, "xi0": str(self.xi0), "eta0": str(self.eta0),
                "xi1": str(self.xi1), "eta1": str(self.eta1)}

    def __str__(self):
        def part(xi, eta):
            bits = []
            if not xi.is_zero():
                bits.append(f"({xi})*d/dx")
            if not eta.is_zero():
                bits.append(f"({eta})*d/dy")
            return " + ".join(bits) or "0"

        text = part(self.xi0, self.eta0)
        if not (self.xi1.is_zero() and self.eta1.is_zero()):
            text += f" + eps*[{part(self.xi1, self.eta1)}]"
        return (self.name + " = " if self.name else "") + text


@dataclass(frozen=True)
class EvolutionaryGenerator:
    """``(zeta0 + eps*zeta1) d/dy``."""

    zeta0: CanonExpr = ZERO_EXPR
    zeta1: CanonExpr = ZERO_EXPR
    name: str = field(default="", compare=False)

    @property
    def characteristic(self):
        return self.zeta0 + EPS * self.zeta1

    def to_dict(self):
        return {"name": self.name, "zeta0": str(self.zeta0), "zeta1": str(self.zeta1)}

    def __str__(self):
        text = f"[{self.zeta0} + eps*({self.zeta1})]*d/dy"
        return (self.name + " = " if self.name else "") + text


def _default_x_basis():
    return (CanonExpr.const(1), CanonExpr.x(), CanonExpr.sin(1), CanonExpr.cos(1),
            CanonExpr.sin(2), CanonExpr.cos(2))


def _default_local_x_basis():
    trig = (CanonExpr.const(1), CanonExpr.sin(1), CanonExpr.cos(1), CanonExpr.sin(2), CanonExpr.cos(2))
    return tuple(p * t for p in (CanonExpr.const(1), CanonExpr.x()) for t in trig)


@dataclass(frozen=True)
class AnsatzSpec:
    """Finite linear ansatz for generator components.

    Point components range over ``x_basis * y**d`` (``d <= y_degree``) unless
    ``monomials`` is given. Evolutionary components range over
    ``x_basis * prod(y^(j)**a_j)`` with ``j <= jet_order`` and total degree
    ``<= jet_degree`` unless ``jet_monomials`` is given.
    """

    x_basis: tuple = field(default_factory=_default_x_basis)
    y_degree: int = 2
    jet_order: int = 1
    jet_degree: int = 3
    monomials: tuple = ()
    jet_monomials: tuple = ()

    @classmethod
    def default_local(cls):
        return cls(x_basis=_default_local_x_basis())

    def point_monomials(self):
        if self.monomials:
            return list(self.monomials)
        out = []
        for d in range(self.y_degree, -1, -1):
            for b in self.x_basis:
                out.append(b * CanonExpr.jet(0, power=d) if d else b)
        return out

    def evolutionary_monomials(self, ode_order):
        if self.jet_monomials:
            return list(self.jet_monomials)
        top = min(self.jet_order, ode_order - 1)
        jets = list(range(top + 1))
        out = []
        for deg in range(self.jet_degree, -1, -1):
            for combo in combinations_with_replacement(jets, deg):
                mono = CanonExpr.const(1)
                for j in combo:
                    mono = mono * CanonExpr.jet(j)
                for b in self.x_basis:
                    out.append(b * mono)
        return out


def instantiate(monomials, prefix):
    """``sum(u_i * m_i)`` with fresh unknowns ``prefix + str(i)``."""
    names = [f"{prefix}{i + 1}" for i in range(len(monomials))]
    expr = ZERO_EXPR
    for n, m in zip(names, monomials):
        expr = expr + m.scale(LinForm.symbol(n))
    return expr, names


# -- core operations ---------------------------------------------------------

def to_evolutionary(g):
    """Characteristic form ``zeta_k = eta_k - y' * xi_k``."""
    if isinstance(g, EvolutionaryGenerator):
        return g
    yp = CanonExpr.jet(1)
    return EvolutionaryGenerator(g.eta0 - yp * g.xi0, g.eta1 - yp * g.xi1, name=g.name)


def prolong(zeta, k):
    """Evolutionary prolongation ``D^k zeta``."""
    for _ in range(k):
        zeta = total_derivative(zeta)
    return zeta


def determining_expr(ode, g):
    """Restricted linearized action of the generator on the ODE, mod eps^2.

    Zero iff ``g`` is a (first-order approximate) symmetry of ``ode``.
    """
    g = to_evolutionary(g)
    n = ode.order
    rhs = ode.rhs
    z = truncate(g.zeta0 + EPS * g.zeta1)
    derivs = [z]
    for _ in range(n):
        derivs.append(total_derivative(derivs[-1]))
    expr = derivs[n]
    for j in range(n):
        dF = partial(rhs, j)
        if not dF.is_zero():
            expr = expr - dF * derivs[j]
    return substitute_jet(expr, n, rhs)


def check_symmetry(ode, g):
    """Residual pair ``(eps^0 part, eps^1 part)`` of the determining expression."""
    return determining_expr(ode, g).eps_parts()


def is_symmetry(ode, g):
    e0, e1 = check_symmetry(ode, g)
    return e0.is_zero() and e1.is_zero()


def linearized_residual(ode, zeta):
    """Unperturbed linearized operator on ``zeta``; zero iff zeta is an exact symmetry."""
    return determining_expr(ode.unperturbed, EvolutionaryGenerator(zeta)).eps_part(0)


def zeta1_rhs(ode, zeta0):
    """Right side ``R`` of the order-eps equation ``L[zeta1] = R`` for a given zeta0."""
    return -determining_expr(ode, EvolutionaryGenerator(zeta0)).eps_part(1)


def _substitute_generator(g, values):
    return PointGenerator(*(c.substitute_unknowns(values) for c in g.components()), name=g.name)


def solve_exact(ode, ansatz=None):
    """Basis of exact point symmetries of ``y^(n) = f0`` within the ansatz.

    The basis is in reduced row echelon form over the ansatz coefficients with
    ``eta`` columns (highest y-degree first) ahead of ``xi`` columns.
    """
    ansatz = ansatz or AnsatzSpec()
    monos = ansatz.point_monomials()
    if not monos:
        return []
    eta, eta_names = instantiate(monos, "e")
    xi, xi_names = instantiate(monos, "f")
    columns = eta_names + xi_names
    g = PointGenerator(xi, eta)
    expr = determining_expr(ode.unperturbed, g).eps_part(0)
    space = solve(split(expr, columns))
    basis = rref_basis(space.nullspace, columns)
    out = []
    for i, vec in enumerate(basis):
        values = {u: vec.get(u, Fraction(0)) for u in columns}
        gi = _substitute_generator(g, values)
        out.append(PointGenerator(gi.xi0, gi.eta0, name=f"X{i + 1}"))
    return out


@dataclass
class ApproxSymmetries:
    """Result of the first-order approximate point symmetry classification."""

    basis: list
    generators: list
    trivial: list
    nontrivial: list
    constraints: list
    coordinates: list

    def stable_coordinates(self):
        """Exact-basis coordinates of the zeroth-order parts of the nontrivial generators."""
        return [c for c, g in zip(self.coordinates, self.generators) if not g.is_trivial_point()]


def _combination(basis, coeffs, attr_pairs):
    out = []
    for attr in attr_pairs:
        acc = ZERO_EXPR
        for g, c in zip(basis, coeffs):
            acc = acc + getattr(g, attr).scale(c)
        out.append(acc)
    return out


def solve_approx(ode, ansatz=None, basis=None):
    """First-order approximate point symmetries ``X0 + eps*X1``.

    ``X0`` ranges over ``sum(C_j * basis_j)`` (the exact symmetries of the
    unperturbed equation), ``X1`` over the ansatz. The result basis is in
    reduced row echelon form with the ``C`` columns first, so nontrivial
    generators come first and each is reduced modulo the trivial ``eps*X0_j``.
    """
    ansatz = ansatz or AnsatzSpec()
    if basis is None:
        basis = solve_exact(ode, ansatz)
    cnames = [f"C{j + 1}" for j in range(len(basis))]
    xi0 = eta0 = ZERO_EXPR
    for n, g in zip(cnames, basis):
        xi0 = xi0 + g.xi0.scale(LinForm.symbol(n))
        eta0 = eta0 + g.eta0.scale(LinForm.symbol(n))
    monos = ansatz.point_monomials()
    eta1, eta_names = instantiate(monos, "a")
    xi1, xi_names = instantiate(monos, "b")
    columns = cnames + eta_names + xi_names
    g = PointGenerator(xi0, eta0, xi1, eta1)
    expr = determining_expr(ode, g)
    space = solve(split(expr, columns))
    vectors = rref_basis(space.nullspace, columns)
    generators, coords = [], []
    for vec in vectors:
        values = {u: vec.get(u, Fraction(0)) for u in columns}
        generators.append(_substitute_generator(g, values))
        coords.append([values[n] for n in cnames])
    nontrivial = [gg for gg in generators if not gg.is_trivial_point()]
    trivial = [gg for gg in generators if gg.is_trivial_point()]
    for i, gg in enumerate(nontrivial):
        object.__setattr__(gg, "name", f"X{len(basis) + i + 1}")
    constraints = [n for n in cnames if n in space.forced_zero]
    return ApproxSymmetries(basis, generators, trivial, nontrivial, constraints, coords)


@dataclass
class StabilityReport:
    exact_basis: list
    stable: list      # (exact generator, completed approximate generator)
    unstable: list
    constraints: list

    def to_dict(self):
        return {
            "exact_basis": [g.to_dict() for g in self.exact_basis],
            "stable": [{"exact": g.name, "completion": c.to_dict()} for g, c in self.stable],
            "unstable": [g.name for g in self.unstable],
            "constraints": {n: "0" for n in self.constraints},
        }


def classify_stability(ode, ansatz=None, basis=None, approx=None):
    """Split the exact basis into stable and unstable point symmetries."""
    if approx is None:
        approx = solve_approx(ode, ansatz, basis)
    basis = approx.basis
    names = list(range(len(basis)))
    stable_rows = [dict(enumerate(c)) for c, g in zip(approx.coordinates, approx.generators)
                   if not g.is_trivial_point()]
    nontrivial = [g for g in approx.generators if not g.is_trivial_point()]
    stable, unstable = [], []
    for j, g in enumerate(basis):
        w = in_span({j: Fraction(1)}, stable_rows, names) if stable_rows else None
        if w is None:
            unstable.append(g)
            continue
        xi1, eta1 = _combination(nontrivial, w, ("xi1", "eta1"))
        stable.append((g, PointGenerator(g.xi0, g.eta0, xi1, eta1, name=g.name)))
    return StabilityReport(basis, stable, unstable, approx.constraints)


def local_counterpart(ode, g0, ansatz=None):
    """Approximate (possibly higher-order) symmetry ``zeta0 + eps*zeta1`` extending ``g0``.

    ``zeta1`` ranges over the evolutionary ansatz; the particular solution with
    all free coefficients zero is returned.
    """
    ansatz = ansatz or AnsatzSpec.default_local()
    g0 = to_evolutionary(g0)
    zeta0 = g0.zeta0
    if not linearized_residual(ode, zeta0).is_zero():
        raise ValueError("g0 is not an exact symmetry of the unperturbed equation")
    monos = ansatz.evolutionary_monomials(ode.order)
    zeta1, names = instantiate(monos, "b")
    expr = determining_expr(ode, EvolutionaryGenerator(zeta0, zeta1)).eps_part(1)
    try:
        space = solve(split(expr, names))
    except Inconsistent as exc:
        raise NoSolutionInAnsatz(f"no zeta1 in the ansatz for {g0.name or zeta0}") from exc
    values = {u: space.particular.get(u, Fraction(0)) for u in names}
    return EvolutionaryGenerator(zeta0, zeta1.substitute_unknowns(values), name=g0.name)


def counterparts_equivalent(ode, z1a, z1b):
    """True when two order-eps completions differ by a solution of the homogeneous equation."""
    return linearized_residual(ode, z1a - z1b).is_zero()


def generator_vector(g):
    """Coordinates of a point generator over its (component, monomial) keys."""
    vec = {}
    for label, comp in zip(("xi0", "eta0", "xi1", "eta1"), g.components()):
        for key, c in comp.items():
            if not c.is_constant():
                raise ValueError("generator has symbolic coefficients")
            vec[(label, key)] = c.constant
    return vec


def span_coordinates(g, basis):
    """Rational coefficients writing ``g`` in terms of ``basis``, or None."""
    vectors = [generator_vector(b) for b in basis]
    target = generator_vector(g)
    columns = sorted(set(target).union(*vectors), key=repr) if vectors else sorted(target, key=repr)
    if not vectors:
        return [] if not target else None
    return in_span(target, vectors, columns)
