"""Problem files: JSON descriptions of an ODE and the analyses to run on it."""

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .expr import NotCanonical, ParseError, from_text
from .symmetry import AnsatzSpec, PerturbedODE, PointGenerator


class ProblemError(ValueError):
    """Invalid or incomplete problem configuration."""


class FieldParseError(ValueError):
    """An expression in the problem file failed to parse or canonicalize."""

    def __init__(self, field_name, text, cause):
        super().__init__(f"{field_name}: {cause} in {text!r}")
        self.field = field_name
        self.position = getattr(cause, "position", None)
        self.text = text


BUNDLED = ("boussinesq_unperturbed", "boussinesq", "bbm", "bbm_quarter")


def bundled_path(name):
    return resources.files("symmflow") / "problems" / f"{name}.json"


def _resolve(path):
    p = Path(path)
    if p.exists():
        return p.read_bytes(), str(p)
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if stem in BUNDLED and p.parent == Path("."):
        return bundled_path(stem).read_bytes(), stem + ".json"
    raise ProblemError(f"problem file not found: {path}")


def _rational(value, name):
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise ProblemError(f"{name}: expected a rational number, got {value!r}") from None


@dataclass
class Problem:
    raw: dict
    source: str
    digest: str
    params: dict = field(default_factory=dict)

    # -- expressions -------------------------------------------------------

    def expr(self, text, name, truncate=False):
        try:
            return from_text(str(text), self.params, truncate=truncate)
        except (ParseError, NotCanonical) as exc:
            raise FieldParseError(name, text, exc) from exc

    def _ode(self, key):
        spec = self.raw.get(key)
        if not isinstance(spec, dict) or "order" not in spec or "f0" not in spec:
            raise ProblemError(f"{key}: needs 'order' and 'f0'")
        order = spec["order"]
        if not isinstance(order, int) or order < 1:
            raise ProblemError(f"{key}.order must be a positive integer")
        f0 = self.expr(spec["f0"], f"{key}.f0")
        f1 = self.expr(spec.get("f1", "0"), f"{key}.f1")
        try:
            return PerturbedODE(order, f0, f1)
        except ValueError as exc:
            raise ProblemError(f"{key}: {exc}") from None

    @property
    def name(self):
        return self.raw.get("name", Path(self.source).stem)

    @property
    def ode(self):
        return self._ode("ode")

    @property
    def factor_ode(self):
        """Second-order equation used for integrating factors."""
        return self._ode("reduced_ode" if "reduced_ode" in self.raw else "ode")

    def _ansatz(self, key, default):
        spec = self.raw.get(key)
        if spec is None:
            return default
        if not isinstance(spec, dict):
            raise ProblemError(f"{key} must be an object")
        kw = {}
        if "x_basis" in spec:
            kw["x_basis"] = tuple(self.expr(t, f"{key}.x_basis[{i}]") for i, t in enumerate(spec["x_basis"]))
        for k in ("y_degree", "jet_order", "jet_degree"):
            if k in spec:
                kw[k] = int(spec[k])
        if "monomials" in spec:
            kw["monomials"] = tuple(self.expr(t, f"{key}.monomials[{i}]") for i, t in enumerate(spec["monomials"]))
        if "jet_monomials" in spec:
            kw["jet_monomials"] = tuple(
                self.expr(t, f"{key}.jet_monomials[{i}]") for i, t in enumerate(spec["jet_monomials"]))
        return AnsatzSpec(**kw)

    @property
    def ansatz(self):
        return self._ansatz("ansatz", AnsatzSpec())

    @property
    def local_ansatz(self):
        return self._ansatz("local_ansatz", AnsatzSpec.default_local())

    @property
    def exact_basis(self):
        """Labelled exact basis from the file, or None."""
        items = self.raw.get("exact_basis")
        if items is None:
            return None
        out = []
        for i, item in enumerate(items):
            out.append(PointGenerator(self.expr(item.get("xi", "0"), f"exact_basis[{i}].xi"),
                                      self.expr(item.get("eta", "0"), f"exact_basis[{i}].eta"),
                                      name=item.get("name", f"X{i + 1}")))
        return out

    @property
    def ics(self):
        items = self.raw.get("ics")
        if items is None:
            return None
        out = []
        for i, item in enumerate(items):
            if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], int)):
                raise ProblemError(f"ics[{i}] must be [derivative order, value]")
            out.append((item[0], self.expr(item[1], f"ics[{i}]")))
        orders = [k for k, _ in out]
        if len(set(orders)) != len(orders):
            raise ProblemError("ics repeat a derivative order")
        return sorted(out)

    @property
    def eps_list(self):
        return self._eps("eps")

    @property
    def scaling_eps(self):
        return self._eps("scaling_eps") if "scaling_eps" in self.raw else self.eps_list

    def _eps(self, key):
        values = self.raw.get(key, [])
        if not isinstance(values, list):
            raise ProblemError(f"{key} must be a list")
        return [float(v) for v in values]

    @property
    def tol(self):
        return float(self.raw.get("tol", 1e-10))

    @property
    def grid(self):
        g = self.raw.get("grid", {})
        return (float(g.get("start", 0.0)), float(g.get("stop", 10.0)), float(g.get("step", 0.01)))

    @property
    def mu(self):
        from .intfactor import IntegratingFactor

        text = self.raw.get("mu")
        if text is None:
            return None
        e = self.expr(text, "mu", truncate=True)
        return IntegratingFactor(*e.eps_parts())

    @property
    def mu_ansatz(self):
        items = self.raw.get("mu_ansatz")
        if items is None:
            return None
        return [self.expr(t, f"mu_ansatz[{i}]") for i, t in enumerate(items)]

    @property
    def family(self):
        return self.raw.get("family")

    def reference(self, key):
        return self.raw.get("reference", {}).get(key)


def load_problem(path, overrides=None):
    """Load a problem file (or a bundled problem by name)."""
    data, source = _resolve(path)
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ProblemError(f"{source}: top level must be an object")
    raw.update(overrides or {})
    digest = hashlib.sha256(data).hexdigest()
    params = {k: _rational(v, f"params.{k}") for k, v in raw.get("params", {}).items()}
    return Problem(raw, source, digest, params)

