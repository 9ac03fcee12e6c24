import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symmflow.expr import from_text
from symmflow.numeric import (
    DORMAND_PRINCE, IvpSpec, NonFiniteState, StepSizeUnderflow, compare, fit_exponent, integrate, scaling_exponent,
)
from symmflow.symmetry import PerturbedODE

DP = DORMAND_PRINCE
OSC = PerturbedODE.from_text(2, "-y")
BOUSS = PerturbedODE.from_text(2, "-y", "x + 1 + y^2")
BOUSS_CLOSED = "sin(x) + cos(x) + eps*(x + 2 - sin(2*x)/3)"
BOUSS_ICS = ["1 + 2*eps", "1 + eps/3"]


def _exp_ivp(span=(0.0, 1.0), tol=1e-10):
    return IvpSpec(lambda x, s: s.copy(), [1.0], span, tol, tol)


def test_tableau_is_consistent():
    assert DP.stages == 7
    assert DP.row_sums_ok()
    assert DP.order_condition_defects() == (0, 0)
    assert DP.order_condition_defects(DP.b_hat) == (0, 0)


def test_fifth_order_quadrature_conditions():
    for q in range(1, 6):
        assert sum(b * c ** (q - 1) for b, c in zip(DP.b, DP.c)) == Fraction(1, q)
    # b_hat is only fourth order
    assert sum(b * c ** 4 for b, c in zip(DP.b_hat, DP.c)) != Fraction(1, 5)


def test_dense_output_endpoints():
    assert DP.dense_weights(1) == tuple(Fraction(v) for v in DP.b)
    assert all(w == 0 for w in DP.dense_weights(0))


def test_fsal_layout():
    assert DP.c[-1] == 1 and tuple(DP.a[-1]) == tuple(DP.b[:-1]) and DP.b[-1] == 0


def test_sine_quarter_period():
    traj = integrate(IvpSpec.from_ode(OSC, 0.0, [0, 1], (0.0, math.pi / 2), 1e-10))
    assert abs(traj.states[-1, 0] - 1.0) < 1e-8


def test_exponential():
    traj = integrate(_exp_ivp())
    assert abs(traj.states[-1, 0] - math.e) < 1e-8
    assert np.all(np.diff(traj.xs) > 0)
    assert traj.xs[-1] == 1.0


def test_fixed_step_convergence_order():
    errs = [abs(integrate(_exp_ivp(), fixed_step=h).states[-1, 0] - math.e) for h in (0.2, 0.1, 0.05)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 4


def test_energy_is_conserved():
    traj = integrate(IvpSpec.from_ode(OSC, 0.0, [0, 1], (0.0, 10.0), 1e-10))
    energy = traj.states[:, 0] ** 2 + traj.states[:, 1] ** 2
    assert np.max(np.abs(energy - 1.0)) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=10.0))
def test_dense_output_accuracy(x):
    traj = integrate(IvpSpec.from_ode(OSC, 0.0, [0, 1], (0.0, 10.0), 1e-10))
    y, yp = traj(x)[0]
    assert abs(y - math.sin(x)) < 1e-8 and abs(yp - math.cos(x)) < 1e-8


def test_dense_output_matches_nodes():
    traj = integrate(_exp_ivp())
    assert np.allclose(traj(traj.xs), traj.states, rtol=0, atol=1e-14)
    with pytest.raises(ValueError):
        traj(1.5)


def test_exact_closed_form_comparison():
    traj = integrate(IvpSpec.from_ode(OSC, 0.0, [0, 1], (0.0, 10.0), 1e-10))
    report = compare(traj, "sin(x)", 0.0)
    assert report.max_abs_error <= 1e-7
    assert report.max_abs_error == float(np.max(np.abs(report.approx - report.numeric)))


def test_csv_format():
    traj = integrate(IvpSpec.from_ode(OSC, 0.0, [0, 1], (0.0, 1.0), 1e-10))
    csv = compare(traj, "sin(x)", 0.0, grid=np.linspace(0, 1, 3)).csv()
    lines = csv.split("\n")
    assert lines[0] == "x,approx,numeric,abs_error"
    assert lines[-1] == "" and len(lines) == 5 and "\r" not in csv
    x, approx, numeric, err = map(float, lines[2].split(","))
    assert x == 0.5 and approx == math.sin(0.5)
    assert err == abs(approx - numeric)


def test_degenerate_scaling_flagged():
    result = scaling_exponent(OSC, "sin(x)", [0.01, 0.1], [0, 1])
    assert result.degenerate and result.to_dict()["exponent"] is None


def test_fit_exponent_exact_power():
    r = fit_exponent([0.1, 0.2, 0.4], [0.3 * e ** 2 for e in (0.1, 0.2, 0.4)])
    assert abs(r.exponent - 2) < 1e-12 and not r.degenerate
    with pytest.raises(ValueError):
        fit_exponent([0.1], [1.0])


def test_tolerance_halving_does_not_hurt():
    ivp = lambda tol: IvpSpec.from_ode(BOUSS, 0.1, BOUSS_ICS, (0.0, 10.0), tol)
    e1 = compare(integrate(ivp(1e-10)), BOUSS_CLOSED, 0.1).max_abs_error
    e2 = compare(integrate(ivp(5e-11)), BOUSS_CLOSED, 0.1).max_abs_error
    assert e2 <= 1.1 * e1


def test_invalid_specs():
    with pytest.raises(ValueError):
        _exp_ivp(span=(1.0, 1.0))
    with pytest.raises(ValueError):
        _exp_ivp(tol=0.0)
    with pytest.raises(ValueError):
        IvpSpec.from_ode(OSC, 0.0, [0], (0.0, 1.0))


def test_blow_up_is_reported():
    ivp = IvpSpec(lambda x, s: s ** 2, [1.0], (0.0, 2.0), 1e-8, 1e-8)
    with pytest.raises((StepSizeUnderflow, NonFiniteState)):
        integrate(ivp)


def test_perturbed_rhs_uses_eps():
    ivp = IvpSpec.from_ode(BOUSS, 0.5, BOUSS_ICS, (0.0, 1.0))
    assert ivp.state0.tolist() == [2.0, 1 + 0.5 / 3]
    assert np.allclose(ivp.rhs(0.0, np.array([1.0, 0.0])), [0.0, -1 + 0.5 * 2])
    assert from_text(BOUSS_CLOSED)  # closed form is in the canonical fragment
