from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symmflow.expr import CanonExpr, from_text, total_derivative, truncate
from symmflow.intfactor import (
    FirstIntegral, IntegratingFactor, check_factor, find_first_integral, is_factor, psi_monomials, solve_factor,
)
from symmflow.symmetry import NoSolutionInAnsatz, PerturbedODE

E = from_text
MU = IntegratingFactor.from_text("(1+eps)*y'")


def bbm(c):
    return PerturbedODE.from_text(2, "((c-1)/c)*y", "-(3/(4*c))*(y^2-1)", {"c": Fraction(c)})


@pytest.mark.parametrize("c", ["1/2", "1/3", "1/4", "2/7"])
def test_bbm_factor(c):
    assert all(r.is_zero() for r in check_factor(bbm(c), MU))


def test_trivial_factors():
    free = PerturbedODE.from_text(2, "0")
    assert is_factor(free, IntegratingFactor(E("1")))
    r = check_factor(PerturbedODE.from_text(2, "-y"), IntegratingFactor(E("y")))
    assert r[0] == E("2")
    assert not is_factor(PerturbedODE.from_text(2, "-y"), IntegratingFactor(E("y")))


def test_factor_components_validated():
    with pytest.raises(ValueError):
        IntegratingFactor(E("y''"))
    assert MU.mu0 == E("y'") and MU.mu1 == E("y'")


def test_first_integral_bbm_half():
    ode = bbm("1/2")
    fi = find_first_integral(ode, MU)
    assert fi.lam == 2
    assert fi.psi0 == E("y'^2 + y^2")
    assert fi.psi1 == E("y'^2 + y^2 - 3*y + y^3")
    assert fi.on_solutions(ode).is_zero()


@pytest.mark.parametrize("c", ["1/3", "1/4"])
def test_first_integral_general_c(c):
    ode = bbm(c)
    fi = find_first_integral(ode, MU)
    cf = Fraction(c)
    k = (1 - cf) / cf
    assert fi.psi0 == E("y'^2") + E("y^2").scale(k)
    assert fi.psi1 == E("y'^2") + E("y^2").scale(k) - E("y").scale(3 / (2 * cf)) + E("y^3").scale(1 / (2 * cf))


def test_first_integral_simple_cases():
    fi = find_first_integral(PerturbedODE.from_text(2, "0"), IntegratingFactor(E("1")))
    assert (fi.psi0, fi.lam) == (E("y'"), 1)
    ode = PerturbedODE.from_text(2, "-y")
    fi = find_first_integral(ode, IntegratingFactor(E("y'")))
    assert (fi.psi0, fi.lam) == (E("y'^2 + y^2"), 2)
    assert total_derivative(fi.psi0) == E("2*y'*y'' + 2*y*y'")


def test_first_integral_missing():
    with pytest.raises(NoSolutionInAnsatz):
        find_first_integral(PerturbedODE.from_text(2, "-y"), IntegratingFactor(E("y")))


def test_psi_monomials_exclude_constant():
    monos = psi_monomials(bbm("1/2"), MU)
    assert CanonExpr.const(1) not in monos
    assert E("y^3") in monos and E("y'^2") in monos


def test_solve_factor_bbm():
    ode = bbm("1/2")
    ansatz = [E(t) for t in ("1", "y", "y'", "y*y'")]
    basis = solve_factor(ode, ansatz)
    assert basis == [IntegratingFactor(E("y'")), IntegratingFactor(E("0"), E("y'"))]
    for mu in basis:
        assert is_factor(ode, mu)
    assert solve_factor(ode, []) == []


def test_solve_factor_free_particle():
    ansatz = [E(t) for t in ("1", "x", "y'")]
    ode = PerturbedODE.from_text(2, "0")
    basis = solve_factor(ode, ansatz)
    for mu in basis:
        assert is_factor(ode, mu)
    # brute force: each single monomial and eps-shift checked directly
    expected = 0
    for m in ansatz:
        expected += is_factor(ode, IntegratingFactor(m))
    assert len(basis) == 2 * expected


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=-3, max_value=3), st.integers(min_value=-3, max_value=3))
def test_factor_conditions_are_linear(a, b):
    ode = bbm("1/2")
    mu = IntegratingFactor(E("y'").scale(a), E("y'").scale(b) + E("y'").scale(a))
    assert is_factor(ode, mu)


def test_factor_gives_exact_derivative_identity():
    ode = bbm("1/2")
    fi = find_first_integral(ode, MU)
    lhs = total_derivative(fi.psi)
    rhs = truncate(MU.full * (CanonExpr.jet(2) - ode.rhs)).scale(fi.lam)
    assert truncate(lhs - rhs).is_zero()


def test_reduced_equation_text():
    fi = FirstIntegral(E("y'"), E("y"), Fraction(1))
    assert fi.to_dict()["reduced_equation"] == "y' + y*eps = C1"
