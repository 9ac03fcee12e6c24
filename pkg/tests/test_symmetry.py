from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symmflow.expr import CanonExpr, from_text, partial, substitute_jet, total_derivative
from symmflow.linsolve import in_span
from symmflow.symmetry import (
    AnsatzSpec, EvolutionaryGenerator, PerturbedODE, PointGenerator, check_symmetry, classify_stability,
    counterparts_equivalent, determining_expr, generator_vector, is_symmetry, linearized_residual,
    local_counterpart, prolong, solve_approx, solve_exact, span_coordinates, to_evolutionary, zeta1_rhs,
)

E = from_text
BOUSS = PerturbedODE.from_text(2, "-y", "x + 1 + y^2")
LINEAR = BOUSS.unperturbed

EXACT = [
    ("-y*cos(x)", "y^2*sin(x)"), ("y*sin(x)", "y^2*cos(x)"), ("sin(2*x)", "y*cos(2*x)"),
    ("-cos(2*x)", "y*sin(2*x)"), ("1", "0"), ("0", "sin(x)"), ("0", "cos(x)"), ("0", "y"),
]


def point(xi, eta, xi1="0", eta1="0", name=""):
    return PointGenerator(E(xi), E(eta), E(xi1), E(eta1), name=name)


@pytest.fixture(scope="module")
def labelled():
    return [point(xi, eta, name=f"X{i + 1}") for i, (xi, eta) in enumerate(EXACT)]


@pytest.fixture(scope="module")
def approx(labelled):
    return solve_approx(BOUSS, AnsatzSpec(), labelled)


def test_ode_validation():
    with pytest.raises(ValueError):
        PerturbedODE.from_text(2, "y''")
    with pytest.raises(ValueError):
        PerturbedODE(2, E("y*eps"))
    assert str(BOUSS) == "y'' = -y + eps + x*eps + y^2*eps"


def test_evolutionary_form():
    assert to_evolutionary(point("0", "y")).zeta0 == E("y")
    assert to_evolutionary(point("-y*cos(x)", "y^2*sin(x)")).zeta0 == E("y^2*sin(x) + y*y'*cos(x)")
    assert to_evolutionary(point("1", "0")).zeta0 == E("-y'")


def test_prolongation_formulas():
    """Evolutionary prolongation reproduces the classical eta^(1), eta^(2) formulas."""
    xi, eta = E("x*y + sin(x)"), E("y^2*cos(x) + x")
    g = to_evolutionary(PointGenerator(xi, eta))
    yp, ypp, yppp = CanonExpr.jet(1), CanonExpr.jet(2), CanonExpr.jet(3)
    d_eta, d_xi = total_derivative(eta), total_derivative(xi)
    eta1 = d_eta - yp * d_xi
    eta2 = total_derivative(eta1) - ypp * d_xi
    assert prolong(g.zeta0, 1) == eta1 - xi * ypp
    assert prolong(g.zeta0, 2) == eta2 - xi * yppp
    assert prolong(E("y"), 2) == ypp
    assert prolong(E("sin(x)"), 2) == E("-sin(x)")


def test_check_symmetry_examples():
    assert is_symmetry(LINEAR, EvolutionaryGenerator(E("y")))
    assert check_symmetry(LINEAR, EvolutionaryGenerator(E("1")))[0] == E("1")
    e0, e1 = check_symmetry(BOUSS, EvolutionaryGenerator(E("y")))
    # by hand: D^2 y - F_y * y on y'' = F gives eps*(x + 1 - y^2)
    assert e0.is_zero() and e1 == E("x + 1 - y^2")
    assert is_symmetry(BOUSS, EvolutionaryGenerator(E("y"), E("2*y'^2/3 + y^2/3 - x - 1")))
    assert is_symmetry(BOUSS, point("1", "0", "0", "1"))


def test_exact_point_symmetries(labelled):
    basis = solve_exact(LINEAR)
    assert len(basis) == 8
    for g in basis:
        assert check_symmetry(LINEAR, g)[0].is_zero()
    for g in labelled:
        assert span_coordinates(g, basis) is not None


def test_first_order_equation_with_small_ansatz():
    ode = PerturbedODE.from_text(1, "0")
    basis = solve_exact(ode, AnsatzSpec(monomials=(E("1"), E("x"), E("y"))))
    assert len(basis) == 5
    for xi, eta in [("1", "0"), ("0", "1"), ("x", "0"), ("0", "y")]:
        assert span_coordinates(point(xi, eta), basis) is not None
    for g in basis:
        assert determining_expr(ode, g).is_zero()


def test_reduced_ansatz_intersects_full_space(labelled):
    ansatz = AnsatzSpec(x_basis=(E("1"), E("x"), E("sin(x)"), E("cos(x)")))
    basis = solve_exact(LINEAR, ansatz)
    assert len(basis) == 6
    for g in labelled[:2] + labelled[4:]:
        assert span_coordinates(g, basis) is not None


def test_empty_ansatz():
    assert solve_exact(LINEAR, AnsatzSpec(x_basis=())) == []


def test_approximate_classification(approx):
    assert approx.constraints == ["C1", "C2", "C3", "C4", "C8"]
    assert len(approx.trivial) == 8
    assert len(approx.nontrivial) == 3
    for g in approx.generators:
        assert is_symmetry(BOUSS, g)
    expected = [point("1", "0", "0", "1"),
                point("0", "sin(x)", "-4/3*cos(x)", "2/3*y*sin(x)"),
                point("0", "cos(x)", "4/3*sin(x)", "2/3*y*cos(x)")]
    span = approx.generators
    for g in expected:
        assert span_coordinates(g, span) is not None


def test_stability(approx):
    report = classify_stability(BOUSS, approx=approx)
    assert [g.name for g, _ in report.stable] == ["X5", "X6", "X7"]
    assert [g.name for g in report.unstable] == ["X1", "X2", "X3", "X4", "X8"]
    for _, completion in report.stable:
        assert is_symmetry(BOUSS, completion)


def test_unperturbed_keeps_everything_stable(labelled):
    ode = PerturbedODE.from_text(2, "-y", "0")
    report = classify_stability(ode, AnsatzSpec(), labelled)
    assert len(report.stable) == 8 and not report.unstable and not report.constraints


def test_proportional_perturbation_needs_secular_terms(labelled):
    """y'' = -(1 + eps)*y shifts the frequency, so X1 needs x*trig terms."""
    ode = PerturbedODE.from_text(2, "-y", "-y")
    narrow = classify_stability(ode, AnsatzSpec(), labelled)
    assert len(narrow.stable) < 8
    trig = [E(t) for t in ("1", "sin(x)", "cos(x)", "sin(2*x)", "cos(2*x)")]
    wide = AnsatzSpec(x_basis=tuple(trig + [E("x") * t for t in trig]))
    report = classify_stability(ode, wide, labelled)
    assert len(report.stable) == 8 and not report.constraints
    for _, completion in report.stable:
        assert is_symmetry(ode, completion)


def test_local_counterparts(labelled):
    z1 = local_counterpart(BOUSS, labelled[0])
    printed = E("(2/3*y'^3 + (y^2 - x - 1)*y' - y)*cos(x) - 2*(x + 1)*y*sin(x)")
    assert is_symmetry(BOUSS, z1)
    assert counterparts_equivalent(BOUSS, z1.zeta1, printed)
    z8 = local_counterpart(BOUSS, labelled[7])
    assert counterparts_equivalent(BOUSS, z8.zeta1, E("2*y'^2/3 + y^2/3 - x - 1"))
    z6 = local_counterpart(BOUSS, labelled[5])
    assert counterparts_equivalent(BOUSS, z6.zeta1, E("2/3*y*sin(x) + 4/3*y'*cos(x)"))


def test_counterpart_requires_exact_symmetry():
    with pytest.raises(ValueError):
        local_counterpart(BOUSS, point("0", "1"))


def test_zeta1_obstruction_for_x1():
    zeta0 = E("y^2*sin(x) + y*y'*cos(x)")
    assert zeta1_rhs(BOUSS, zeta0) == -E("((3*y^2 + 3*x + 3)*y' + y)*cos(x) - 2*y^3*sin(x)")


coeffs = st.lists(st.integers(min_value=-3, max_value=3), min_size=8, max_size=8)


@settings(max_examples=40, deadline=None)
@given(coeffs)
def test_exact_symmetries_form_a_linear_space(cs):
    g = PointGenerator()
    for c, (xi, eta) in zip(cs, EXACT):
        g = g.combine(point(xi, eta), 1, c)
    assert check_symmetry(LINEAR, g)[0].is_zero()


@settings(max_examples=40, deadline=None)
@given(coeffs, st.integers(min_value=-3, max_value=3))
def test_order_eps_equation_is_affine_in_zeta1(cs, k):
    """eps-part = L[zeta1] + obstruction(zeta0), with L the unperturbed linearization."""
    zeta0 = CanonExpr()
    for c, (xi, eta) in zip(cs, EXACT):
        zeta0 = zeta0 + to_evolutionary(point(xi, eta)).zeta0.scale(c)
    zeta1 = E("y'^2*sin(x) + x*y").scale(k)
    eps_part = check_symmetry(BOUSS, EvolutionaryGenerator(zeta0, zeta1))[1]
    assert eps_part == linearized_residual(BOUSS, zeta1) - zeta1_rhs(BOUSS, zeta0)


@settings(max_examples=40, deadline=None)
@given(coeffs)
def test_stable_combinations_extend(cs):
    """Any exact symmetry in the stable span extends to an approximate point symmetry."""
    g0 = PointGenerator()
    for j in (4, 5, 6):
        g0 = g0.combine(point(*EXACT[j]), 1, cs[j])
    basis = [point(xi, eta) for xi, eta in EXACT]
    approx = solve_approx(BOUSS, AnsatzSpec(), basis)
    vecs = [generator_vector(g.exact_part()) for g in approx.nontrivial]
    target = generator_vector(g0)
    cols = sorted(set(target).union(*vecs), key=repr)
    assert in_span(target, vecs, cols) is not None


def test_restriction_is_needed():
    # without y'' := f the determining expression is not zero for X8
    zeta = E("y")
    raw = prolong(zeta, 2) - partial(LINEAR.rhs, 0) * zeta
    assert not raw.is_zero()
    assert substitute_jet(raw, 2, LINEAR.rhs).is_zero()
