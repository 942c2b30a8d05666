"""Scalar and polynomial recursions bounding iterative-decoding error.

``ms_upper_bound``   z_0 = D,  z_l = lambda(rho'(1) z_{l-1})            (min-sum and sum-product)
``sp_lower_bound``   b_0 = P0, b_l = P0 lambda(1 - rho(1 - 2 b_{l-1}))  (sum-product)
``bec_de``           x_0 = eps, x_l = eps lambda(1 - rho(1 - x_{l-1}))

The union-bound recursion is kept in two flavours. The default follows the
textbook recursion; ``root_inclusive=True`` additionally counts the weight
of the root bit at every level, which is the enumerator that exhaustive
enumeration of the reduced codebook actually produces.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .ensembles import Ensemble

CONVERGED = 1e-10
START_CAP = 200
MAX_CAP = 12800


class TrajectoryKind(str, enum.Enum):
    MS_UPPER = "MS_UPPER"
    SP_LOWER = "SP_LOWER"
    BEC_DE = "BEC_DE"
    DE_EDGE = "DE_EDGE"
    DE_NODE = "DE_NODE"


@dataclass
class BoundTrajectory:
    kind: TrajectoryKind
    values: np.ndarray
    ensemble_id: str = ""
    figure_name: str = ""
    figure: float = float("nan")
    channel: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def iterations(self) -> int:
        return self.values.size - 1

    @property
    def vacuous_after(self) -> int | None:
        """First iteration whose value exceeds 1 (MS_UPPER only)."""
        if self.kind is not TrajectoryKind.MS_UPPER:
            return None
        over = np.flatnonzero(self.values > 1)
        return int(over[0]) if over.size else None

    def vacuous_mask(self) -> np.ndarray:
        if self.kind is not TrajectoryKind.MS_UPPER:
            return np.zeros(self.values.size, dtype=bool)
        return self.values > 1

    def __getitem__(self, l):
        return self.values[l]

    def __len__(self):
        return self.values.size

    def rows(self):
        vac = self.vacuous_mask()
        for l, (v, f) in enumerate(zip(self.values, vac)):
            yield {"iteration": l, "value": float(v), "kind": self.kind.value, "vacuous": int(f)}


CSV_FIELDS = ["iteration", "value", "kind", "vacuous"]


def trajectories_to_csv(trajectories, fh=None) -> str:
    """Serialize trajectories with columns iteration, value, kind, vacuous."""
    buf = fh if fh is not None else io.StringIO()
    w = csv.DictWriter(buf, CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for t in trajectories:
        for row in t.rows():
            row["value"] = repr(row["value"])
            w.writerow(row)
    return buf.getvalue() if fh is None else ""


def ms_upper_bound(ens: Ensemble, D: float, L: int, root_inclusive: bool = False) -> BoundTrajectory:
    if not 0 <= D <= 1:
        raise ValueError(f"Bhattacharyya parameter must lie in [0, 1], got {D!r}")
    if L < 0:
        raise ValueError("iteration count must be >= 0")
    c = ens.rho.derivative_at_one()
    z = float(D)
    vals = [z]
    for _ in range(L):
        if np.isfinite(z):
            z = float(ens.lam.evaluate(c * z, check_domain=False))
            if root_inclusive:
                z *= D
        vals.append(z)  # overflow sticks at inf (0 * inf would give nan)
    return BoundTrajectory(TrajectoryKind.MS_UPPER, np.array(vals), ens.name, "D", float(D))


def sp_lower_bound(ens: Ensemble, P0: float, L: int) -> BoundTrajectory:
    if not 0 <= P0 <= 0.5:
        raise ValueError(f"uncoded error probability must lie in [0, 0.5], got {P0!r}")
    if L < 0:
        raise ValueError("iteration count must be >= 0")
    b = float(P0)
    vals = [b]
    for _ in range(L):
        b = P0 * float(ens.lam.evaluate(1.0 - ens.rho.evaluate(1.0 - 2.0 * b)))
        vals.append(b)
    return BoundTrajectory(TrajectoryKind.SP_LOWER, np.array(vals), ens.name, "P0", float(P0))


def bec_de(ens: Ensemble, eps: float, L: int) -> BoundTrajectory:
    if not 0 <= eps <= 1:
        raise ValueError(f"erasure probability must lie in [0, 1], got {eps!r}")
    if L < 0:
        raise ValueError("iteration count must be >= 0")
    x = float(eps)
    vals = [x]
    for _ in range(L):
        nxt = eps * float(ens.lam.evaluate(1.0 - ens.rho.evaluate(1.0 - x)))
        assert nxt <= x * (1 + 1e-12), "BEC recursion must be nonincreasing"
        x = nxt
        vals.append(x)
    return BoundTrajectory(TrajectoryKind.BEC_DE, np.array(vals), ens.name, "eps", float(eps))


# --- thresholds -------------------------------------------------------------

@dataclass
class ThresholdResult:
    value: float
    lower: float
    upper: float
    steps: int
    max_iterations_used: int
    mode: str = ""
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "threshold": self.value,
            "bracket": [self.lower, self.upper],
            "bisection_steps": self.steps,
            "max_iterations_used": self.max_iterations_used,
            "notes": list(self.notes),
        }


def converges(step, x0: float, diverge_above: float = np.inf,
              start_cap: int = START_CAP, max_cap: int = MAX_CAP) -> tuple[bool, int]:
    """Iterate ``x <- step(x)`` and report whether it falls below 1e-10.

    The iteration cap starts at ``start_cap`` and doubles (up to ``max_cap``)
    while the sequence is still strictly decreasing, since convergence slows
    without bound near a threshold.
    """
    x = x0
    prev = np.inf
    n = 0
    cap = start_cap
    while True:
        while n < cap:
            if x < CONVERGED:
                return True, n
            if x > diverge_above or not np.isfinite(x):
                return False, n
            prev, x = x, step(x)
            n += 1
            if x == prev:
                return x < CONVERGED, n
        if x < CONVERGED:
            return True, n
        if cap >= max_cap or not x < prev:
            return False, n
        cap *= 2


def bisect_threshold(good, lo: float, hi: float, tol: float, mode: str = "") -> ThresholdResult:
    """Bisection for ``sup{t in [lo, hi] : good(t)}`` with ``good`` monotone.

    ``good(t)`` returns ``(converged, iterations_used)``.
    """
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    steps = 0
    most = 0
    while hi - lo > tol or steps == 0:
        mid = 0.5 * (lo + hi)
        ok, used = good(mid)
        most = max(most, used)
        steps += 1
        if ok:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return ThresholdResult(0.5 * (lo + hi), lo, hi, steps, most, mode)


def bhattacharyya_threshold_result(ens: Ensemble, tol: float = 1e-6,
                                   root_inclusive: bool = False) -> ThresholdResult:
    c = ens.rho.derivative_at_one()
    lam = ens.lam

    def good(D):
        if root_inclusive:
            step = lambda z: D * float(lam.evaluate(c * z, check_domain=False))
        else:
            step = lambda z: float(lam.evaluate(c * z, check_domain=False))
        # once z > 1 every later term is >= 1 (lambda(y) >= 1 for y >= 1)
        return converges(step, D, diverge_above=1.0)

    res = bisect_threshold(good, 0.0, 1.0, tol, "bhattacharyya")
    if lam.coeffs[0] >= 1 - 1e-12:
        res.notes.append("lambda_1 = 1: recursion is constant, threshold is 0")
    return res


def bhattacharyya_threshold(ens: Ensemble, tol: float = 1e-6) -> float:
    """Largest Bhattacharyya parameter for which the union-bound recursion goes to 0."""
    return bhattacharyya_threshold_result(ens, tol).value


def bec_threshold_result(ens: Ensemble, tol: float = 1e-6) -> ThresholdResult:
    lam, rho = ens.lam, ens.rho

    def good(eps):
        step = lambda x: eps * float(lam.evaluate(1.0 - rho.evaluate(1.0 - x)))
        return converges(step, eps)

    return bisect_threshold(good, 0.0, 1.0, tol, "bec")


def bec_threshold(ens: Ensemble, tol: float = 1e-6) -> float:
    """Largest erasure probability for which BEC density evolution goes to 0."""
    return bec_threshold_result(ens, tol).value


# --- weight enumerator --------------------------------------------------------

@dataclass
class WeightEnumerator:
    """Truncated average weight enumerator: ``coeffs[w]`` = expected A_w."""

    coeffs: np.ndarray
    truncated: bool = False

    @property
    def max_weight(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, x: float) -> float:
        return float(np.polynomial.polynomial.polyval(x, self.coeffs))

    def nonzero(self) -> dict[int, float]:
        return {int(w): float(a) for w, a in enumerate(self.coeffs) if a != 0}


def _truncmul(a, b, W):
    full = np.convolve(a, b)
    spill = bool(np.any(full[W + 1:] != 0))
    return full[: W + 1], spill


def weight_enumerator(ens: Ensemble, l: int, W: int = 512, root_inclusive: bool = False) -> WeightEnumerator:
    """Average enumerator of the reduced codebook of a level-``l`` tree.

    N_0(x) = x and N_l(x) = lambda(rho'(1) N_{l-1}(x)); the root-inclusive
    variant multiplies each level by x.
    """
    if l < 0 or W < 1:
        raise ValueError("need l >= 0 and W >= 1")
    c = ens.rho.derivative_at_one()
    N = np.zeros(W + 1)
    N[1] = 1.0
    truncated = False
    for _ in range(l):
        base = c * N
        out = np.zeros(W + 1)
        power = np.zeros(W + 1)
        power[0] = 1.0
        for i, w in enumerate(ens.lam.coeffs, start=1):
            if w > 0:
                out += w * power
            if i < ens.lam.max_degree:
                power, spill = _truncmul(power, base, W)
                truncated |= spill
        if root_inclusive:
            truncated |= bool(out[W] != 0)
            out = np.concatenate(([0.0], out[:W]))
        N = out
    return WeightEnumerator(N, truncated)
