"""Random expression trees shared by the property tests."""

import math
import random
from fractions import Fraction

from symmflow.expr.tree import Add, Call, Div, Jet, Mul, Name, Neg, Num, Pow, Sub

LEAVES = ("num", "x", "y", "y'", "y''")


def random_tree(rng, depth=3, eps=False):
    """Tree inside the canonical fragment; eps appears only when requested."""
    if depth == 0 or rng.random() < 0.25:
        kind = rng.choice(LEAVES + (("eps",) if eps else ()))
        if kind == "num":
            return Num(Fraction(rng.randint(-4, 4), rng.choice((1, 1, 2, 3))))
        if kind == "x":
            return Name("x")
        if kind == "eps":
            return Name("eps")
        return Jet(kind.count("'"))
    op = rng.choice(("add", "sub", "mul", "neg", "pow", "trig", "div"))
    if op == "add":
        return Add(random_tree(rng, depth - 1, eps), random_tree(rng, depth - 1, eps))
    if op == "sub":
        return Sub(random_tree(rng, depth - 1, eps), random_tree(rng, depth - 1, eps))
    if op == "mul":
        return Mul(random_tree(rng, depth - 1), random_tree(rng, depth - 1))
    if op == "neg":
        return Neg(random_tree(rng, depth - 1, eps))
    if op == "pow":
        return Pow(random_tree(rng, depth - 1), Num(Fraction(rng.randint(0, 2))))
    if op == "div":
        return Div(random_tree(rng, depth - 1, eps), Num(Fraction(rng.choice((-3, -2, 2, 3, 5)))))
    m = rng.randint(1, 3)
    return Call(rng.choice(("sin", "cos")), Mul(Num(Fraction(m)), Name("x")))


def random_env(rng):
    return {"x": rng.uniform(-2, 2), "y": rng.uniform(-1.5, 1.5), "y'": rng.uniform(-1.5, 1.5),
            "y''": rng.uniform(-1.5, 1.5), "y'''": rng.uniform(-1.5, 1.5), "eps": rng.uniform(-0.5, 0.5)}


def close(a, b, rel=1e-12):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def seeded(seed):
    return random.Random(seed)


def isclose(a, b, tol):
    return math.isclose(a, b, rel_tol=tol, abs_tol=tol)
