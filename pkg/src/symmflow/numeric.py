"""Dormand-Prince 4(5) integration and comparison against closed forms."""

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction as Fr

import numpy as np

from .expr import CanonExpr, to_tree
from .expr.tree import Node, compile_tree
from .expr.parser import parse


class StepSizeUnderflow(ArithmeticError):
    pass


class NonFiniteState(ArithmeticError):
    pass


@dataclass(frozen=True)
class ButcherTableau:
    """Explicit embedded pair with a dense-output matrix, stored as exact rationals.

    ``dense[j][i]`` is the coefficient of ``theta**(i+1)`` in the weight of stage j.
    """

    c: tuple
    a: tuple
    b: tuple
    b_hat: tuple
    dense: tuple = ()

    @property
    def stages(self):
        return len(self.c)

    def row_sums_ok(self):
        return all(sum(row, Fr(0)) == ci for row, ci in zip(self.a, self.c))

    def order_condition_defects(self, weights=None):
        """Exact defects of the order-1 and order-2 conditions for ``weights``."""
        w = self.b if weights is None else weights
        return (sum(w, Fr(0)) - 1, sum((wi * ci for wi, ci in zip(w, self.c)), Fr(0)) - Fr(1, 2))

    def dense_weights(self, theta):
        theta = Fr(theta)
        return tuple(sum((p * theta ** (i + 1) for i, p in enumerate(row)), Fr(0)) for row in self.dense)

    def arrays(self):
        f = lambda seq: np.array([float(v) for v in seq])
        a = np.zeros((self.stages, self.stages))
        for i, row in enumerate(self.a):
            a[i, :len(row)] = [float(v) for v in row]
        return f(self.c), a, f(self.b), f(self.b_hat), np.array([[float(v) for v in r] for r in self.dense])


# Dormand-Prince 5(4) pair; the 7th stage is evaluated at the new point with
# the 5th-order weights (first same as last). Dense output is the usual
# quartic interpolant for this pair.
DORMAND_PRINCE = ButcherTableau(
    c=(Fr(0), Fr(1, 5), Fr(3, 10), Fr(4, 5), Fr(8, 9), Fr(1), Fr(1)),
    a=(
        (),
        (Fr(1, 5),),
        (Fr(3, 40), Fr(9, 40)),
        (Fr(44, 45), Fr(-56, 15), Fr(32, 9)),
        (Fr(19372, 6561), Fr(-25360, 2187), Fr(64448, 6561), Fr(-212, 729)),
        (Fr(9017, 3168), Fr(-355, 33), Fr(46732, 5247), Fr(49, 176), Fr(-5103, 18656)),
        (Fr(35, 384), Fr(0), Fr(500, 1113), Fr(125, 192), Fr(-2187, 6784), Fr(11, 84)),
    ),
    b=(Fr(35, 384), Fr(0), Fr(500, 1113), Fr(125, 192), Fr(-2187, 6784), Fr(11, 84), Fr(0)),
    b_hat=(Fr(5179, 57600), Fr(0), Fr(7571, 16695), Fr(393, 640), Fr(-92097, 339200),
           Fr(187, 2100), Fr(1, 40)),
    dense=(
        (Fr(1), Fr(-8048581381, 2820520608), Fr(8663915743, 2820520608), Fr(-12715105075, 11282082432)),
        (Fr(0), Fr(0), Fr(0), Fr(0)),
        (Fr(0), Fr(131558114200, 32700410799), Fr(-68118460800, 10900136933), Fr(87487479700, 32700410799)),
        (Fr(0), Fr(-1754552775, 470086768), Fr(14199869525, 1410260304), Fr(-10690763975, 1880347072)),
        (Fr(0), Fr(127303824393, 49829197408), Fr(-318862633887, 49829197408), Fr(701980252875, 199316789632)),
        (Fr(0), Fr(-282668133, 205662961), Fr(2019193451, 616988883), Fr(-1453857185, 822651844)),
        (Fr(0), Fr(40617522, 29380423), Fr(-110615467, 29380423), Fr(69997945, 29380423)),
    ),
)


def ode_rhs(ode, eps, params=None):
    """First-order system ``s' = F(x, s)`` for ``y^(n) = f0 + eps*f1`` with ``s = (y, ..., y^(n-1))``."""
    from .expr.canon import jet_name

    f = compile_tree(to_tree(ode.rhs))
    n = ode.order
    names = [jet_name("y", j) for j in range(n)]
    base = {"eps": float(eps), **{k: float(v) for k, v in (params or {}).items()}}

    def rhs(x, s):
        env = dict(base, x=x)
        env.update(zip(names, s))
        out = np.empty(n)
        out[:-1] = s[1:]
        out[-1] = f(env)
        return out

    return rhs


@dataclass
class IvpSpec:
    rhs: object
    state0: np.ndarray
    span: tuple
    atol: float = 1e-10
    rtol: float = 1e-10
    eps: float = 0.0

    def __post_init__(self):
        self.state0 = np.asarray(self.state0, dtype=float)
        if not self.span[1] > self.span[0]:
            raise ValueError("integration span must satisfy x0 < x1")
        if self.atol <= 0 or self.rtol <= 0:
            raise ValueError("tolerances must be positive")

    @classmethod
    def from_ode(cls, ode, eps, ics, span=(0.0, 10.0), tol=1e-10, params=None):
        """``ics`` lists values of ``y, y', ...`` at ``span[0]`` (numbers or expressions in eps)."""
        state = [_eval_in_eps(v, eps) for v in ics]
        if len(state) != ode.order:
            raise ValueError(f"expected {ode.order} initial values, got {len(state)}")
        return cls(ode_rhs(ode, eps, params), state, tuple(span), tol, tol, float(eps))


def _eval_in_eps(v, eps):
    if isinstance(v, CanonExpr):
        return v.evaluate({"eps": float(eps)})
    if isinstance(v, str):
        return float(compile_tree(parse(v))({"eps": float(eps), "x": 0.0}))
    return float(v)


@dataclass
class Trajectory:
    xs: np.ndarray
    states: np.ndarray
    accepted: int
    rejected: int
    # per step: (x_old, h, y_old, Q) with y(x_old + theta*h) = y_old + h * Q @ [theta, theta^2, ...]
    segments: list = field(default_factory=list, repr=False)

    def __call__(self, x):
        """Dense output at ``x`` (scalar or array); shape ``(..., n)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.xs[0] - 1e-12) or np.any(x > self.xs[-1] + 1e-12):
            raise ValueError("evaluation point outside the integrated span")
        idx = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty((len(x), self.states.shape[1]))
        for i, (xi, k) in enumerate(zip(x, idx)):
            x0, h, y0, Q = self.segments[k]
            theta = (xi - x0) / h
            powers = theta ** np.arange(1, Q.shape[1] + 1)
            out[i] = y0 + h * Q @ powers
        return out


def integrate(ivp, tableau=DORMAND_PRINCE, fixed_step=None, max_steps=1_000_000):
    """Adaptive (or fixed-step) Dormand-Prince integration over ``ivp.span``."""
    c, a, b, b_hat, P = tableau.arrays()
    err_w = b - b_hat
    s = tableau.stages
    x0, x1 = map(float, ivp.span)
    y = ivp.state0.copy()
    n = len(y)
    f = ivp.rhs
    x = x0
    fx = np.asarray(f(x, y), dtype=float)
    h = fixed_step if fixed_step else 0.01 * (x1 - x0)
    xs, states, segments = [x], [y.copy()], []
    accepted = rejected = 0
    K = np.empty((s, n))
    while x < x1:
        if accepted + rejected >= max_steps:
            raise StepSizeUnderflow("step budget exhausted")
        if x + h >= x1 - 64 * np.finfo(float).eps * max(1.0, abs(x1)):
            h = x1 - x
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(x)):
            raise StepSizeUnderflow(f"step size underflow at x = {x}")
        K[0] = fx
        for i in range(1, s):
            K[i] = f(x + c[i] * h, y + h * (a[i, :i] @ K[:i]))
        y_new = y + h * (b @ K)
        if not np.all(np.isfinite(y_new)):
            raise NonFiniteState(f"non-finite state at x = {x + h}")
        if fixed_step:
            err = 0.0
        else:
            scale = ivp.atol + ivp.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(h * (err_w @ K)) / scale))
        if err <= 1.0:
            segments.append((x, h, y.copy(), K.T @ P))
            x = x + h if x + h < x1 else x1
            y = y_new
            fx = K[-1] if tableau.c[-1] == 1 and tableau.a[-1] == tableau.b[:-1] else np.asarray(f(x, y))
            xs.append(x)
            states.append(y.copy())
            accepted += 1
            if not fixed_step:
                h *= 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
    return Trajectory(np.array(xs), np.array(states), accepted, rejected, segments)


# -- comparison -------------------------------------------------------------------

def default_grid():
    return np.linspace(0.0, 10.0, 1001)


def closed_form_evaluator(closed, params=None):
    """``g(x, eps)`` for a closed form given as text, tree or canonical expression."""
    if isinstance(closed, str):
        closed = parse(closed)
    tree = closed if isinstance(closed, Node) else to_tree(closed)
    fn = compile_tree(tree)
    base = {k: float(v) for k, v in (params or {}).items()}

    def g(x, eps):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(fn(dict(base, x=x, eps=float(eps))), dtype=float), x.shape)

    return g


@dataclass
class ComparisonReport:
    eps: float
    grid: np.ndarray
    approx: np.ndarray
    numeric: np.ndarray

    @property
    def abs_error(self):
        return np.abs(self.approx - self.numeric)

    @property
    def max_abs_error(self):
        return float(np.max(self.abs_error))

    @property
    def error_location(self):
        return float(self.grid[int(np.argmax(self.abs_error))])

    def csv(self):
        buf = io.StringIO()
        buf.write("x,approx,numeric,abs_error\n")
        for row in zip(self.grid, self.approx, self.numeric, self.abs_error):
            buf.write(",".join("%.17g" % v for v in row) + "\n")
        return buf.getvalue()

    def summary(self):
        return {"eps": self.eps, "max_abs_error": self.max_abs_error, "at_x": self.error_location,
                "points": int(len(self.grid))}


def compare(traj, closed, eps, grid=None, params=None):
    """Closed form against the dense output of ``traj`` on ``grid``."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    approx = closed_form_evaluator(closed, params)(grid, eps)
    numeric = traj(grid)[:, 0]
    return ComparisonReport(float(eps), grid, np.array(approx, dtype=float), numeric)


@dataclass
class ScalingResult:
    eps: list
    errors: list
    exponent: float
    degenerate: bool

    def ratio(self):
        return self.errors[-1] / self.errors[0] if self.errors[0] > 0 else math.inf

    def to_dict(self):
        return {"eps": self.eps, "max_errors": self.errors,
                "exponent": None if self.degenerate else self.exponent, "degenerate": self.degenerate}


def fit_exponent(eps, errors, floor=1e-7):
    """Least-squares slope of ``log(error)`` against ``log(eps)``.

    The fit is flagged degenerate when every error is below ``floor`` (the
    errors then measure the integrator, not the truncation).
    """
    eps = [float(e) for e in eps]
    errors = [float(e) for e in errors]
    if len(eps) < 2:
        raise ValueError("need at least two eps values")
    if all(e < floor for e in errors) or any(e <= 0 for e in errors):
        return ScalingResult(eps, errors, float("nan"), True)
    slope = float(np.polyfit(np.log(eps), np.log(errors), 1)[0])
    return ScalingResult(eps, errors, slope, False)


def scaling_exponent(ode, closed, eps_list, ics, span=(0.0, 10.0), grid=None, tol=1e-10, params=None):
    """Fit the eps-scaling of the max comparison error over ``eps_list``."""
    errors = []
    for eps in eps_list:
        traj = integrate(IvpSpec.from_ode(ode, eps, ics, span, tol, params))
        errors.append(compare(traj, closed, eps, grid, params).max_abs_error)
    return fit_exponent(eps_list, errors)
