"""Exact rational linear algebra for coefficient matching.

A canonical expression whose coefficients are affine in unknowns vanishes
identically iff every coefficient vanishes; :func:`split` turns it into one
equation per monomial and :func:`solve` runs Gauss-Jordan elimination over
:class:`fractions.Fraction`.
"""

from dataclasses import dataclass, field
from fractions import Fraction


class Inconsistent(ArithmeticError):
    """The system has no solution.

    ``certificate`` maps row indices to multipliers whose combination of the
    rows reads ``0 = nonzero``.
    """

    def __init__(self, certificate, residual):
        super().__init__(f"inconsistent linear system (combination gives 0 = {residual})")
        self.certificate = certificate
        self.residual = residual


@dataclass
class LinearSystem:
    """Rows ``sum(coeffs[u] * u) = rhs`` over the ordered ``unknowns``."""

    unknowns: list
    rows: list = field(default_factory=list)

    def __post_init__(self):
        known = set(self.unknowns)
        seen = set()
        rows = []
        for coeffs, rhs in self.rows:
            coeffs = {u: Fraction(v) for u, v in coeffs.items() if v != 0}
            missing = set(coeffs) - known
            if missing:
                raise ValueError(f"row uses undeclared unknowns {sorted(missing)}")
            key = (tuple(sorted(coeffs.items())), Fraction(rhs))
            if key in seen or (not coeffs and rhs == 0):
                continue
            seen.add(key)
            rows.append((coeffs, Fraction(rhs)))
        self.rows = rows

    def __str__(self):
        lines = []
        for coeffs, rhs in self.rows:
            lhs = " + ".join(f"{v}*{u}" for u, v in coeffs.items()) or "0"
            lines.append(f"{lhs} = {rhs}")
        return "\n".join(lines)


@dataclass
class SolutionSpace:
    unknowns: list
    particular: dict
    nullspace: list
    forced_zero: list
    rank: int

    @property
    def nullity(self):
        return len(self.nullspace)

    def combine(self, weights):
        """``particular + sum(w_i * nullspace_i)`` as a dict over all unknowns."""
        out = {u: self.particular.get(u, Fraction(0)) for u in self.unknowns}
        for w, vec in zip(weights, self.nullspace):
            for u, v in vec.items():
                out[u] += Fraction(w) * v
        return out


def split(expr, unknowns=None):
    """One row per monomial of ``expr``: its LinForm coefficient set to zero."""
    rows = []
    for _, c in sorted(expr.items(), key=lambda kv: repr(kv[0])):
        rows.append((dict(c.terms), -c.constant))
    if unknowns is None:
        unknowns = sorted(expr.unknowns())
    return LinearSystem(list(unknowns), rows)


def split_many(exprs, unknowns):
    rows = []
    for e in exprs:
        rows.extend(split(e, unknowns).rows)
    return LinearSystem(list(unknowns), rows)


def _size(v):
    return abs(v.numerator * v.denominator)


def _rref(rows, ncols):
    """In-place Gauss-Jordan on sparse augmented rows ``(dict, rhs)``.

    Returns ``(pivot_rows, pivots)`` where ``pivots[i]`` is the column of row i.
    """
    remaining = [(dict(r), b) for r, b in rows]
    pivot_rows = []
    pivots = []
    for col in range(ncols):
        best = None
        for i, (r, _) in enumerate(remaining):
            v = r.get(col)
            if v is not None and (best is None or _size(v) < _size(remaining[best][0][col])):
                best = i
        if best is None:
            continue
        prow, pb = remaining.pop(best)
        inv = 1 / prow[col]
        prow = {k: v * inv for k, v in prow.items()}
        pb = pb * inv
        for lst in (remaining, pivot_rows):
            for i, (r, b) in enumerate(lst):
                f = r.get(col)
                if f is None:
                    continue
                for k, v in prow.items():
                    nv = r.get(k, 0) - f * v
                    if nv:
                        r[k] = nv
                    else:
                        r.pop(k, None)
                lst[i] = (r, b - f * pb)
        pivot_rows.append((prow, pb))
        pivots.append(col)
    return pivot_rows, pivots, remaining


def solve(system):
    """Exact solution space of ``system``; raises :class:`Inconsistent`."""
    unknowns = list(system.unknowns)
    index = {u: i for i, u in enumerate(unknowns)}
    rows = [({index[u]: v for u, v in coeffs.items()}, rhs) for coeffs, rhs in system.rows]
    pivot_rows, pivots, leftover = _rref(rows, len(unknowns))
    for r, b in leftover:
        if b != 0:
            raise Inconsistent(_certificate(system), b)
    pivot_set = set(pivots)
    free = [j for j in range(len(unknowns)) if j not in pivot_set]
    particular = {}
    for (r, b), p in zip(pivot_rows, pivots):
        if b != 0:
            particular[unknowns[p]] = b
    nullspace = []
    for f in free:
        vec = {unknowns[f]: Fraction(1)}
        for (r, _), p in zip(pivot_rows, pivots):
            v = r.get(f)
            if v:
                vec[unknowns[p]] = -v
        nullspace.append(vec)
    involved = set(particular)
    for vec in nullspace:
        involved |= set(vec)
    forced_zero = [u for u in unknowns if u not in involved]
    return SolutionSpace(unknowns, particular, nullspace, forced_zero, len(pivots))


def _certificate(system):
    """Multipliers ``m`` with ``m^T A = 0`` and ``m^T b != 0``."""
    nrows = len(system.rows)
    names = [f"r{i}" for i in range(nrows)]
    cols = {}
    for i, (coeffs, _) in enumerate(system.rows):
        for u, v in coeffs.items():
            cols.setdefault(u, {})[names[i]] = v
    rows = [(c, Fraction(0)) for c in cols.values()]
    rows.append(({names[i]: rhs for i, (_, rhs) in enumerate(system.rows)}, Fraction(1)))
    sol = solve(LinearSystem(names, rows))
    return {int(k[1:]): v for k, v in sol.particular.items()}


def rref_basis(vectors, columns):
    """Reduced row echelon basis of ``span(vectors)`` with column order ``columns``.

    Vectors are dicts keyed by column labels; the result is the unique basis
    whose pivots are leading ones with zeros elsewhere in pivot columns.
    """
    index = {c: i for i, c in enumerate(columns)}
    rows = [({index[k]: Fraction(v) for k, v in vec.items() if v}, Fraction(0)) for vec in vectors]
    pivot_rows, pivots, _ = _rref(rows, len(columns))
    order = sorted(range(len(pivots)), key=lambda i: pivots[i])
    return [{columns[k]: v for k, v in sorted(pivot_rows[i][0].items())} for i in order]


def in_span(vector, basis, columns):
    """Coefficients expressing ``vector`` in ``basis`` or None."""
    names = [f"w{i}" for i in range(len(basis))]
    rows = []
    for col in columns:
        coeffs = {names[i]: b.get(col, 0) for i, b in enumerate(basis)}
        rows.append((coeffs, vector.get(col, 0)))
    try:
        sol = solve(LinearSystem(names, rows))
    except Inconsistent:
        return None
    return [sol.particular.get(n, Fraction(0)) for n in names]


def satisfies(system, values):
    """Exact check of every row at ``values``."""
    for coeffs, rhs in system.rows:
        if sum((v * Fraction(values.get(u, 0)) for u, v in coeffs.items()), Fraction(0)) != rhs:
            return False
    return True
