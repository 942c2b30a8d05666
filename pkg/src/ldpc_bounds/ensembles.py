"""Degree-distribution algebra for irregular (lambda, rho) LDPC ensembles."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from numpy.polynomial import polynomial as P

NORMALIZE_TOL = 1e-9


class EnsembleError(ValueError):
    """Raised for malformed degree distributions or ensemble files."""


@dataclass(frozen=True, eq=False)
class DegreePolynomial:
    """Edge-perspective degree distribution.

    ``coeffs[k]`` is the fraction of edges attached to nodes of degree ``k + 1``,
    i.e. the coefficient of ``x**k``. The vector starts at degree 1, so a
    degree-0 entry cannot be expressed.
    """

    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if c.size == 0:
            raise EnsembleError("degree distribution is empty")
        if not np.all(np.isfinite(c)) or np.any(c < 0):
            raise EnsembleError("degree fractions must be finite and nonnegative")
        total = c.sum()
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise EnsembleError(f"degree fractions sum to {total!r}, expected 1")
        c = c / total
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1].copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_degrees(cls, fractions: Mapping[int, float]) -> "DegreePolynomial":
        """Build from a sparse ``{degree: fraction}`` mapping (densified)."""
        if not fractions:
            raise EnsembleError("degree distribution is empty")
        degs = {}
        for d, f in fractions.items():
            d = int(d)
            if d < 1:
                raise EnsembleError(f"degree must be >= 1, got {d}")
            degs[d] = degs.get(d, 0.0) + float(f)
        c = np.zeros(max(degs))
        for d, f in degs.items():
            c[d - 1] = f
        return cls(c)

    @classmethod
    def monomial(cls, degree: int) -> "DegreePolynomial":
        return cls.from_degrees({degree: 1.0})

    @property
    def max_degree(self) -> int:
        return self.coeffs.size

    @property
    def degrees(self) -> np.ndarray:
        return np.arange(1, self.coeffs.size + 1)

    def as_dict(self) -> dict[int, float]:
        return {int(d): float(f) for d, f in zip(self.degrees, self.coeffs) if f > 0}

    def evaluate(self, x, check_domain: bool = True):
        """Return ``sum_i coeffs[i] * x**(i-1)``.

        With ``check_domain=False`` arguments outside [0, 1] are evaluated
        as-is, which the union-bound recursion needs once it turns vacuous.
        """
        if check_domain:
            xa = np.asarray(x, dtype=float)
            if np.any((xa < 0) | (xa > 1)) or np.any(np.isnan(xa)):
                raise ValueError(f"polynomial argument outside [0, 1]: {x!r}")
        with np.errstate(over="ignore", invalid="ignore"):
            return P.polyval(x, self.coeffs)

    __call__ = evaluate

    def derivative_at_one(self) -> float:
        return float(np.dot(self.degrees - 1, self.coeffs))

    def node_perspective(self) -> "DegreePolynomial":
        """Node-degree fractions ``(c_i / i) / sum_j (c_j / j)``."""
        w = self.coeffs / self.degrees
        return DegreePolynomial(w / w.sum())

    def edge_perspective(self) -> "DegreePolynomial":
        """Inverse of :meth:`node_perspective` (treats ``self`` as node fractions)."""
        w = self.coeffs * self.degrees
        return DegreePolynomial(w / w.sum())

    def __eq__(self, other):
        if not isinstance(other, DegreePolynomial):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(np.all(self.coeffs == other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        terms = ", ".join(f"{d}: {f:g}" for d, f in self.as_dict().items())
        return f"DegreePolynomial({{{terms}}})"


def eval_poly(poly: DegreePolynomial, x: float) -> float:
    return float(poly.evaluate(x))


def derivative_at_one(poly: DegreePolynomial) -> float:
    return poly.derivative_at_one()


def node_perspective(poly: DegreePolynomial) -> DegreePolynomial:
    return poly.node_perspective()


def design_rate(lam: DegreePolynomial, rho: DegreePolynomial) -> float:
    """Design rate ``1 - (sum rho_i/i) / (sum lambda_i/i)``."""
    lsum = float(np.sum(lam.coeffs / lam.degrees))
    rsum = float(np.sum(rho.coeffs / rho.degrees))
    if lsum == 0:
        raise EnsembleError("sum of lambda_i / i is zero")
    return 1.0 - rsum / lsum


@dataclass(frozen=True)
class Ensemble:
    lam: DegreePolynomial
    rho: DegreePolynomial
    name: str = ""

    def __post_init__(self):
        if self.lam.coeffs[0] > 0:
            warnings.warn(
                "lambda_1 > 0: degree-1 variable nodes keep the recursions away from zero",
                stacklevel=3,
            )
        if not self.name:
            object.__setattr__(self, "name", _default_name(self.lam, self.rho))

    @classmethod
    def regular(cls, d_v: int, d_c: int) -> "Ensemble":
        return cls(DegreePolynomial.monomial(d_v), DegreePolynomial.monomial(d_c), f"({d_v},{d_c})")

    @property
    def design_rate(self) -> float:
        return design_rate(self.lam, self.rho)

    def is_regular(self) -> bool:
        return len(self.lam.as_dict()) == 1 and len(self.rho.as_dict()) == 1

    def to_json(self) -> dict:
        return {
            "lambda": {str(d): f for d, f in self.lam.as_dict().items()},
            "rho": {str(d): f for d, f in self.rho.as_dict().items()},
        }


def _default_name(lam: DegreePolynomial, rho: DegreePolynomial) -> str:
    ld, rd = lam.as_dict(), rho.as_dict()
    if len(ld) == 1 and len(rd) == 1:
        return f"({next(iter(ld))},{next(iter(rd))})"
    fmt = lambda d: "+".join(f"{f:g}x^{k - 1}" for k, f in d.items())
    return f"lambda={fmt(ld)};rho={fmt(rd)}"


def _parse_side(obj, key: str) -> DegreePolynomial:
    if key not in obj:
        raise EnsembleError(f"missing key {key!r}")
    side = obj[key]
    if not isinstance(side, dict):
        raise EnsembleError(f"{key!r} must be an object mapping degree -> fraction")
    parsed = {}
    for k, v in side.items():
        try:
            d = int(k)
        except ValueError:
            raise EnsembleError(f"{key}.{k}: degree key is not an integer") from None
        if str(d) != k.strip():
            raise EnsembleError(f"{key}.{k}: degree key is not a decimal integer")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise EnsembleError(f"{key}.{k}: fraction must be a number")
        parsed[d] = float(v)
    try:
        return DegreePolynomial.from_degrees(parsed)
    except EnsembleError as e:
        raise EnsembleError(f"{key}: {e}") from None


def ensemble_from_dict(obj) -> Ensemble:
    if not isinstance(obj, dict):
        raise EnsembleError("ensemble spec must be a JSON object")
    return Ensemble(_parse_side(obj, "lambda"), _parse_side(obj, "rho"))


def load_ensemble(path) -> Ensemble:
    """Load ``{"lambda": {"3": 1.0}, "rho": {"6": 1.0}}`` from a JSON file."""
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise EnsembleError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return ensemble_from_dict(obj)


def parse_ensemble(spec: str) -> Ensemble:
    """Accept either ``regular:3,6`` or a path to an ensemble JSON file."""
    if spec.startswith("regular:"):
        try:
            d_v, d_c = (int(t) for t in spec[len("regular:"):].split(","))
        except ValueError:
            raise EnsembleError(f"bad regular ensemble spec {spec!r}; expected regular:DV,DC") from None
        return Ensemble.regular(d_v, d_c)
    return load_ensemble(spec)
