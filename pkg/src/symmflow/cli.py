"""Command-line front end.

    symmflow {symmetries|approx|counterpart|intfactor|solve|validate} PROBLEM [flags]

Reports are JSON on stdout (and in ``--out DIR``); exit codes are 0 ok,
2 parse error, 3 solver failure, 4 bad configuration, 5 failed self-audit.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .expr import NotCanonical, ParseError
from .expr.tree import Add, Mul, Name, compile_tree, diff_n
from .intfactor import IntegratingFactor, check_factor, find_first_integral, is_factor, solve_factor
from .linsolve import Inconsistent
from .numeric import IvpSpec, StepSizeUnderflow, NonFiniteState, compare, fit_exponent, integrate
from .perturb import (
    InconsistentConditions, NotLinear, Underdetermined, UnsupportedRoots, apply_ics,
    bbm_oscillatory_series, bbm_relations, series_family, verify_series,
)
from .problem import FieldParseError, ProblemError, load_problem
from .symmetry import (
    NoSolutionInAnsatz, check_symmetry, classify_stability, counterparts_equivalent,
    is_symmetry, local_counterpart, solve_approx, solve_exact,
    span_coordinates, to_evolutionary,
)

EXIT_OK, EXIT_PARSE, EXIT_SOLVER, EXIT_CONFIG, EXIT_AUDIT = 0, 2, 3, 4, 5


class AuditFailure(RuntimeError):
    pass


def _threads(n_jobs):
    cap = os.environ.get("SYMMFLOW_THREADS")
    try:
        cap = int(cap) if cap else (os.cpu_count() or 1)
    except ValueError:
        raise ProblemError("SYMMFLOW_THREADS must be an integer") from None
    return max(1, min(cap, n_jobs))


def _audit(checks):
    failed = [name for name, ok in checks if not ok]
    if failed:
        raise AuditFailure("self-audit failed: " + ", ".join(failed))
    return {"checks": len(checks), "passed": True}


def _basis(problem):
    basis = problem.exact_basis
    return basis if basis is not None else solve_exact(problem.ode.unperturbed, problem.ansatz)


# -- commands -----------------------------------------------------------------

def cmd_symmetries(problem, args):
    ode = problem.ode.unperturbed
    gens = solve_exact(ode, problem.ansatz)
    checks = [(g.name, is_symmetry(ode, g)) for g in gens]
    result = {"ode": str(ode), "dimension": len(gens), "generators": [g.to_dict() for g in gens]}
    labelled = problem.exact_basis
    if labelled is not None:
        membership = {}
        for g in labelled:
            w = span_coordinates(g, gens)
            membership[g.name] = None if w is None else [str(v) for v in w]
        result["reference_membership"] = membership
    return result, _audit(checks)


def cmd_approx(problem, args):
    ode = problem.ode
    approx = solve_approx(ode, problem.ansatz, _basis(problem))
    report = classify_stability(ode, approx=approx)
    names = {f"C{j + 1}": g.name for j, g in enumerate(approx.basis)}
    checks = [(f"generator {i}", is_symmetry(ode, g)) for i, g in enumerate(approx.generators)]
    checks += [(f"exact part {i}", check_symmetry(ode.unperturbed, g.exact_part())[0].is_zero())
               for i, g in enumerate(approx.generators)]
    checks += [(f"completion {g.name}", is_symmetry(ode, c)) for g, c in report.stable]
    result = {
        "ode": str(ode),
        "exact_basis": [g.to_dict() for g in approx.basis],
        "constraints": {c: "0" for c in approx.constraints},
        "constrained_generators": [names[c] for c in approx.constraints],
        "nontrivial": [g.to_dict() for g in approx.nontrivial],
        "trivial_count": len(approx.trivial),
        "stability": {"stable": [g.name for g, _ in report.stable],
                      "unstable": [g.name for g in report.unstable],
                      "completions": [c.to_dict() for _, c in report.stable]},
    }
    return result, _audit(checks)


def cmd_counterpart(problem, args):
    ode = problem.ode
    basis = _basis(problem)
    chosen = [g for g in basis if g.name == args.generator]
    if not chosen:
        raise ProblemError(f"unknown generator {args.generator!r}; known: {[g.name for g in basis]}")
    g0 = chosen[0]
    hat = local_counterpart(ode, g0, problem.local_ansatz)
    checks = [("counterpart", is_symmetry(ode, hat))]
    result = {"ode": str(ode), "generator": g0.to_dict(), "counterpart": hat.to_dict()}
    stability = classify_stability(ode, problem.ansatz, basis)
    for g, completion in stability.stable:
        if g.name == g0.name:
            point = to_evolutionary(completion)
            same = counterparts_equivalent(ode, point.zeta1, hat.zeta1)
            checks.append(("point completion equivalence", same))
            result["point_completion"] = completion.to_dict()
            result["equivalent_to_point_completion"] = same
    result["stable"] = "point_completion" in result
    return result, _audit(checks)


def cmd_intfactor(problem, args):
    ode = problem.factor_ode
    result = {"ode": str(ode)}
    checks = []
    mu = IntegratingFactor.from_text(args.check, problem.params) if args.check else problem.mu
    if mu is not None:
        residuals = check_factor(ode, mu)
        ok = all(r.is_zero() for r in residuals)
        result["factor"] = {"mu0": str(mu.mu0), "mu1": str(mu.mu1),
                            "residuals": [str(r) for r in residuals], "is_factor": ok}
    if args.first_integral:
        if mu is None or not is_factor(ode, mu):
            raise NoSolutionInAnsatz("a valid integrating factor is required for --first-integral")
        fi = find_first_integral(ode, mu)
        checks.append(("first integral", fi.on_solutions(ode).is_zero()))
        result["first_integral"] = fi.to_dict()
    if args.solve:
        ansatz = problem.mu_ansatz
        if ansatz is None:
            raise ProblemError("--solve needs 'mu_ansatz' in the problem file")
        factors = solve_factor(ode, ansatz)
        checks += [(f"factor {i}", is_factor(ode, f)) for i, f in enumerate(factors)]
        result["factor_basis"] = [{"mu0": str(f.mu0), "mu1": str(f.mu1)} for f in factors]
    if len(result) == 1:
        raise ProblemError("nothing to do: give --check, --first-integral or --solve, or set 'mu'")
    return result, _audit(checks)


def _series(problem):
    """Solve the problem's ODE; returns (series, verification dict, checks)."""
    ode = problem.ode
    family = problem.family
    if family is not None:
        if family.get("kind") != "bbm_oscillatory":
            raise ProblemError(f"unknown family kind {family.get('kind')!r}")
        c = problem.params.get("c")
        if c is None:
            raise ProblemError("bbm_oscillatory needs params.c")
        try:
            s, _ = bbm_oscillatory_series(c, family.get("amplitude", "1"), family.get("cos_coeff", "0"))
        except ValueError as exc:
            raise ProblemError(str(exc)) from None
        lo, hi, step = problem.grid
        grid = np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)
        second, third, integral = bbm_relations(c)
        verification, checks = {}, []
        for name, rel in (("reduced_ode", second), ("ode", third), ("first_integral", integral)):
            rep = verify_series(rel, s, "numeric", grid=grid, tol=1e-9)
            verification[name] = rep.to_dict()
            checks.append((name, rep.passed))
        return s, verification, checks
    ics = problem.ics
    if ics is None:
        raise ProblemError("solve needs 'ics'")
    if len(ics) != ode.order:
        raise ProblemError(f"{len(ics)} initial conditions given for an order-{ode.order} equation")
    s = apply_ics(series_family(ode), ics)
    rep = verify_series(ode, s)
    return s, {"ode": rep.to_dict()}, [("series", rep.passed)]


def cmd_solve(problem, args):
    s, verification, checks = _series(problem)
    result = {"ode": str(problem.ode), "solution": s.to_dict(), "residuals": verification}
    ref = problem.reference("solution")
    if ref is not None and s.canonical:
        result["matches_reference"] = problem.expr(ref, "reference.solution", truncate=True) == s.as_canon()
    return result, _audit(checks)


def _closed_tree(s):
    y0, y1 = s.trees()
    return Add(y0, Mul(Name("eps"), y1))


def _grid(problem, args):
    lo, hi, step = problem.grid
    if args.grid:
        parts = args.grid.split(":")
        if len(parts) != 3:
            raise ProblemError("--grid expects START:STOP:STEP")
        lo, hi, step = map(float, parts)
    if not (hi > lo and step > 0):
        raise ProblemError("grid needs stop > start and step > 0")
    return np.linspace(lo, hi, int(round((hi - lo) / step)) + 1)


def _run_eps(problem, closed, eps, grid, tol, consts):
    ode = problem.ode
    ics = problem.ics
    x0 = float(grid[0])
    if ics is not None:
        if len(ics) != ode.order or [k for k, _ in ics] != list(range(ode.order)):
            raise ProblemError("validate needs initial values for y, y', ..., y^(n-1)")
        state = [v for _, v in ics]
    else:
        env = dict(consts, x=np.float64(x0), eps=eps)
        state = [float(compile_tree(diff_n(closed, k))(env)) for k in range(ode.order)]
    ivp = IvpSpec.from_ode(ode, eps, state, (x0, float(grid[-1])), tol)
    traj = integrate(ivp)
    return compare(traj, closed, eps, grid, consts)


def _eps_flag(text):
    try:
        return [float(e) for e in text.split(",") if e.strip()]
    except ValueError:
        raise ProblemError(f"--eps expects comma-separated numbers, got {text!r}") from None


def cmd_validate(problem, args):
    eps_list = _eps_flag(args.eps) if args.eps is not None else problem.eps_list
    if not eps_list:
        raise ProblemError("empty eps list")
    tol = args.tol or problem.tol
    grid = _grid(problem, args)
    s, verification, checks = _series(problem)
    closed = _closed_tree(s)
    consts = {k: float(v) for k, v in s.constants.items() if not isinstance(v, str)}
    scaling_eps = problem.scaling_eps if args.eps is None else eps_list
    jobs = list(eps_list) + [e for e in scaling_eps if e not in eps_list]
    with ThreadPoolExecutor(max_workers=_threads(len(jobs))) as pool:
        reports = list(pool.map(lambda e: _run_eps(problem, closed, e, grid, tol, consts), jobs))
    by_eps = dict(zip(jobs, reports))
    files = {}
    for e in eps_list:
        files[f"{problem.name}_eps_{e!r}.csv"] = by_eps[e].csv()
    scaling = fit_exponent(scaling_eps, [by_eps[e].max_abs_error for e in scaling_eps]) \
        if len(scaling_eps) >= 2 else None
    result = {
        "ode": str(problem.ode),
        "solution": s.to_dict(),
        "residuals": verification,
        "tol": tol,
        "grid": {"start": float(grid[0]), "stop": float(grid[-1]), "points": int(len(grid))},
        "comparisons": [by_eps[e].summary() for e in eps_list],
        "scaling": None if scaling is None else dict(scaling.to_dict(), ratio=scaling.ratio()),
        "csv_files": sorted(files),
    }
    return result, _audit(checks), files


COMMANDS = {
    "symmetries": cmd_symmetries,
    "approx": cmd_approx,
    "counterpart": cmd_counterpart,
    "intfactor": cmd_intfactor,
    "solve": cmd_solve,
    "validate": cmd_validate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="symmflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"symmflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("problem", help="problem JSON file or bundled problem name")
        if name == "counterpart":
            p.add_argument("generator", help="exact basis label, e.g. X1")
        if name == "intfactor":
            p.add_argument("--check", metavar="EXPR", help="integrating factor to verify")
            p.add_argument("--first-integral", action="store_true")
            p.add_argument("--solve", action="store_true", help="solve over the problem's mu_ansatz")
        p.add_argument("--out", metavar="DIR", help="write the report (and CSV files) here")
        p.add_argument("--tol", type=float, help="integrator tolerance")
        p.add_argument("--grid", help="comparison grid START:STOP:STEP")
        p.add_argument("--eps", help="comma-separated eps values")
    return parser


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def run(argv=None, stdout=None, stderr=None):
    """Execute a command; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.tol is not None and args.tol <= 0:
            raise ProblemError("--tol must be positive")
        problem = load_problem(args.problem)
        out = COMMANDS[args.command](problem, args)
        result, audit = out[0], out[1]
        files = out[2] if len(out) > 2 else {}
    except (FieldParseError, ParseError, NotCanonical) as exc:
        print(f"parse error: {exc}", file=stderr)
        return EXIT_PARSE
    except (Inconsistent, NoSolutionInAnsatz, InconsistentConditions, Underdetermined,
            UnsupportedRoots, NotLinear, StepSizeUnderflow, NonFiniteState) as exc:
        print(f"solver error: {exc}", file=stderr)
        return EXIT_SOLVER
    except ProblemError as exc:
        print(f"configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    except AuditFailure as exc:
        print(str(exc), file=stderr)
        return EXIT_AUDIT
    report = {
        "command": args.command,
        "problem": problem.name,
        "input_sha256": problem.digest,
        "engine_version": __version__,
        "result": result,
        "audit": audit,
    }
    text = dumps(report)
    stdout.write(text)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / f"{problem.name}_{args.command}.json").write_text(text)
        for name, payload in files.items():
            with open(out_dir / name, "w", newline="\n") as fh:
                fh.write(payload)
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
