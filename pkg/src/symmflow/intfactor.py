"""Approximate integrating factors and first integrals of ``y'' = f0 + eps*f1``."""

from dataclasses import dataclass
from fractions import Fraction

from .expr import CanonExpr, LinForm, from_text, partial, substitute_jet, total_derivative, truncate
from .expr.canon import ZERO_EXPR
from .linsolve import rref_basis, solve, split_many
from .symmetry import AnsatzSpec, NoSolutionInAnsatz, instantiate

EPS = CanonExpr.eps()
YP = CanonExpr.jet(1)


@dataclass(frozen=True)
class IntegratingFactor:
    mu0: CanonExpr
    mu1: CanonExpr = ZERO_EXPR

    def __post_init__(self):
        for m in (self.mu0, self.mu1):
            if m.max_epspow() > 0 or m.max_order("y") > 1:
                raise ValueError("factor components must be eps-free functions of x, y, y'")

    @classmethod
    def from_text(cls, text, params=None):
        e = from_text(text, params, truncate=True)
        return cls(*e.eps_parts())

    @property
    def full(self):
        return self.mu0 + EPS * self.mu1

    def __str__(self):
        return str(self.full)


@dataclass(frozen=True)
class FirstIntegral:
    """``psi0 + eps*psi1`` with ``D psi = lam * mu * (y'' - f0 - eps*f1) + O(eps^2)``."""

    psi0: CanonExpr
    psi1: CanonExpr
    lam: Fraction

    @property
    def psi(self):
        return self.psi0 + EPS * self.psi1

    def reduced_equation(self, constant="C1"):
        """The first-order equation ``psi = constant`` as a relation ``psi - constant``."""
        return self.psi - CanonExpr.symbol(constant)

    def on_solutions(self, ode):
        """``D psi`` restricted to solutions; zero for a genuine first integral."""
        return truncate(substitute_jet(total_derivative(self.psi), ode.order, ode.rhs))

    def to_dict(self, constant="C1"):
        return {"psi0": str(self.psi0), "psi1": str(self.psi1), "lambda": str(self.lam),
                "reduced_equation": f"{self.psi} = {constant}", "constant": constant}


def _d(e, *vars_):
    for v in vars_:
        e = partial(e, v)
    return e


def _conditions(mu0, mu1, f0, f1):
    yp = YP
    a0 = mu0 * f0
    a1 = mu1 * f0
    b = mu0 * f1
    r20 = yp * _d(mu0, 0, 1) + _d(mu0, "x", 1) + _d(mu0, 0).scale(2) + _d(a0, 1, 1)
    r21 = (yp * yp * _d(mu0, 0, 0) + (yp * _d(mu0, "x", 0)).scale(2) + _d(mu0, "x", "x")
           + yp * _d(a0, 0, 1) + _d(a0, "x", 1) - _d(a0, 0))
    r22 = yp * _d(mu1, 0, 1) + _d(mu1, "x", 1) + _d(mu1, 0).scale(2) + _d(a1, 1, 1) + _d(b, 1, 1)
    r23 = (yp * yp * _d(mu1, 0, 0) + (yp * _d(mu1, "x", 0)).scale(2) + _d(mu1, "x", "x")
           + yp * _d(a1, 0, 1) + _d(a1, "x", 1) - _d(a1, 0) - _d(b, 0)
           + yp * _d(b, 0, 1) + _d(b, "x", 1))
    return r20, r21, r22, r23


def _require_second_order(ode):
    if ode.order != 2:
        raise ValueError("integrating-factor conditions are defined for second-order equations")


def check_factor(ode, mu):
    """The four residuals of the approximate integrating-factor conditions."""
    _require_second_order(ode)
    return _conditions(mu.mu0, mu.mu1, ode.f0, ode.f1)


def is_factor(ode, mu):
    return all(r.is_zero() for r in check_factor(ode, mu))


def _ansatz_monomials(ansatz):
    if ansatz is None:
        return []
    if isinstance(ansatz, AnsatzSpec):
        return ansatz.evolutionary_monomials(2)
    return list(ansatz)


def solve_factor(ode, mu_ansatz):
    """Basis of approximate integrating factors with components in the ansatz span."""
    _require_second_order(ode)
    monos = _ansatz_monomials(mu_ansatz)
    if not monos:
        return []
    mu0, n0 = instantiate(monos, "m")
    mu1, n1 = instantiate(monos, "n")
    columns = n0 + n1
    space = solve(split_many(_conditions(mu0, mu1, ode.f0, ode.f1), columns))
    out = []
    for vec in rref_basis(space.nullspace, columns):
        values = {u: vec.get(u, Fraction(0)) for u in columns}
        out.append(IntegratingFactor(mu0.substitute_unknowns(values), mu1.substitute_unknowns(values)))
    return out


def psi_monomials(ode, mu):
    """Candidate monomials for the first integral.

    All ``x^i * t * y^b * y'^c`` with ``i`` up to one more than the largest x-power
    of the target ``mu*(y'' - f)``, ``t`` ranging over the trig factors of the
    target (both sin and cos of each frequency, plus 1), and ``b + c`` up to one
    more than the largest jet degree of a target term once ``y''`` is removed.
    The constant monomial is left out since it is annihilated by ``D``.
    """
    target = truncate(mu.full * (CanonExpr.jet(2) - ode.rhs))
    xmax, dmax, freqs = 0, 0, set()
    for (xp, trig, jet, _), _c in target.items():
        xmax = max(xmax, xp)
        if trig:
            freqs.add(trig[1])
        deg = sum(e for (f, o), e in jet if o != 2)
        dmax = max(dmax, deg)
    trigs = [CanonExpr.const(1)]
    for m in sorted(freqs):
        trigs += [CanonExpr.sin(m), CanonExpr.cos(m)]
    out = []
    for deg in range(dmax + 1, -1, -1):
        for b in range(deg, -1, -1):
            jet = CanonExpr.jet(0, power=b) * CanonExpr.jet(1, power=deg - b) if deg else CanonExpr.const(1)
            for i in range(xmax + 2):
                for t in trigs:
                    m = jet * CanonExpr.x(i) * t if i else jet * t
                    if m != CanonExpr.const(1):
                        out.append(m)
    return out


def find_first_integral(ode, mu, psi_ansatz=None):
    """First integral ``psi`` and scale ``lam`` with ``D psi = lam * mu * (y'' - f)``.

    ``lam`` is fixed by giving the highest power of ``y'`` in ``psi0`` unit
    coefficient.
    """
    _require_second_order(ode)
    monos = psi_monomials(ode, mu) if psi_ansatz is None else [
        m for m in _ansatz_monomials(psi_ansatz) if m.constant_value() is None]
    psi0, n0 = instantiate(monos, "p")
    psi1, n1 = instantiate(monos, "q")
    columns = ["lam"] + n0 + n1
    target = truncate(mu.full * (CanonExpr.jet(2) - ode.rhs))
    expr = total_derivative(psi0 + EPS * psi1) - target.scale(LinForm.symbol("lam"))
    space = solve(split_many([truncate(expr)], columns))
    for vec in rref_basis(space.nullspace, columns):
        lam = vec.get("lam", Fraction(0))
        if lam == 0:
            continue
        values = {u: vec.get(u, Fraction(0)) for u in columns}
        p0 = psi0.substitute_unknowns(values)
        p1 = psi1.substitute_unknowns(values)
        lead = _leading_coefficient(p0)
        if lead is None:
            continue
        s = 1 / lead
        return FirstIntegral(p0.scale(s), p1.scale(s), lam * s)
    raise NoSolutionInAnsatz("no first integral in the psi ansatz")


def _leading_coefficient(psi0):
    best = None
    for (xp, trig, jet, _), c in psi0.items():
        power = dict(jet).get(("y", 1), 0)
        rank = (power, -len(jet), -xp, trig == ())
        if best is None or rank > best[0]:
            best = (rank, c.constant)
    return None if best is None or best[1] == 0 else best[1]
