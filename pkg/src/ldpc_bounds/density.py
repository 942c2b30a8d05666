"""Quantized symmetric LLR densities and sum-product density evolution.

A density lives on the grid ``{-K, ..., K} * delta`` plus atoms at +inf and
-inf. Densities carrying mass only at 0 and +inf (erasure-type, as produced
by the BEC) are propagated through the closed-form erasure recursion so the
result is arithmetically identical to the scalar BEC recursion.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bounds import BoundTrajectory, TrajectoryKind
from .ensembles import DegreePolynomial, Ensemble


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class QuantizationParams:
    delta: float = 0.02
    m_max: float = 40.0

    def __post_init__(self):
        if not (self.delta > 0 and self.m_max > 0):
            raise ValueError("delta and m_max must be positive")
        k = self.m_max / self.delta
        if abs(k - round(k)) > 1e-9 * max(1.0, k) or round(k) < 16:
            raise ValueError(f"m_max/delta must be an integer >= 16, got {k!r}")

    @property
    def half_width(self) -> int:
        return int(round(self.m_max / self.delta))


@dataclass(eq=False)
class QuantizedDensity:
    """LLR law under all-zero transmission.

    ``masses[j]`` sits at LLR ``(j - K) * delta``. With ``K == 0`` the grid is
    the single point 0 and ``delta`` may be ``None``.
    """

    masses: np.ndarray
    delta: float | None
    pos_inf: float = 0.0
    neg_inf: float = 0.0
    _erasure: bool | None = field(default=None, repr=False)

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.ndim != 1 or self.masses.size % 2 != 1:
            raise ValueError("grid masses must be a 1-D array of odd length")
        if self.masses.size > 1 and not (self.delta and self.delta > 0):
            raise ValueError("a nontrivial grid needs a positive delta")
        self.pos_inf = float(self.pos_inf)
        self.neg_inf = float(self.neg_inf)

    @property
    def K(self) -> int:
        return self.masses.size // 2

    @property
    def grid(self) -> np.ndarray:
        if self.K == 0:
            return np.zeros(1)
        return np.arange(-self.K, self.K + 1) * self.delta

    @property
    def zero_mass(self) -> float:
        return float(self.masses[self.K])

    def total_mass(self) -> float:
        return float(self.masses.sum()) + self.pos_inf + self.neg_inf

    @property
    def is_erasure(self) -> bool:
        """True when all mass sits at LLR 0 or +inf."""
        if self._erasure is None:
            K = self.K
            off = np.any(self.masses[:K] != 0) or np.any(self.masses[K + 1:] != 0)
            self._erasure = (not off) and self.neg_inf == 0
        return self._erasure

    def same_grid(self, other: "QuantizedDensity") -> bool:
        return self.K == other.K and (self.K == 0 or self.delta == other.delta)

    def error_prob(self) -> float:
        """Mass below zero plus half the mass exactly at zero."""
        K = self.K
        return float(self.masses[:K].sum()) + 0.5 * self.zero_mass + self.neg_inf

    def expected_tanh_half(self) -> float:
        t = np.tanh(np.abs(self.grid) / 2)
        return float(np.dot(t, self.masses)) + self.pos_inf + self.neg_inf

    def symmetry_residual(self) -> float:
        """``max_m |mass(-m) - exp(-m) mass(m)|`` over the finite grid (m >= 0)."""
        K = self.K
        if K == 0:
            return 0.0
        pos = self.masses[K + 1:]
        neg = self.masses[:K][::-1]
        m = np.arange(1, K + 1) * self.delta
        return float(np.max(np.abs(neg - np.exp(-m) * pos)))

    def magnitudes(self):
        """Split the finite part into (positive, negative) masses per |m| index.

        Index 0 holds the zero atom on the positive side.
        """
        K = self.K
        pos = self.masses[K:].copy()
        neg = np.zeros(K + 1)
        neg[1:] = self.masses[:K][::-1]
        return pos, neg

    @classmethod
    def from_magnitudes(cls, pos, neg, delta, pos_inf=0.0, neg_inf=0.0) -> "QuantizedDensity":
        K = len(pos) - 1
        masses = np.empty(2 * K + 1)
        masses[K:] = pos
        masses[K] += neg[0]
        masses[:K] = neg[1:][::-1]
        return cls(masses, delta, pos_inf, neg_inf)

    @classmethod
    def point_mass_inf(cls, K: int = 0, delta: float | None = None) -> "QuantizedDensity":
        return cls(np.zeros(2 * K + 1), delta, pos_inf=1.0)

    @classmethod
    def erasure(cls, eps: float, K: int = 0, delta: float | None = None) -> "QuantizedDensity":
        m = np.zeros(2 * K + 1)
        m[K] = eps
        d = cls(m, delta, pos_inf=1.0 - eps)
        d._erasure = True
        return d

    def scaled(self, w: float) -> "QuantizedDensity":
        return QuantizedDensity(self.masses * w, self.delta, self.pos_inf * w, self.neg_inf * w)

    def to_rows(self):
        """(m, mass) rows; +/-inf atoms as sentinel rows, zero-mass bins skipped."""
        rows = []
        if self.neg_inf:
            rows.append((float("-inf"), self.neg_inf))
        for m, w in zip(self.grid, self.masses):
            if w:
                rows.append((float(m), float(w)))
        if self.pos_inf:
            rows.append((float("inf"), self.pos_inf))
        return rows


def error_prob(d: QuantizedDensity) -> float:
    return d.error_prob()


def expected_tanh_half(d: QuantizedDensity) -> float:
    return d.expected_tanh_half()


def _mix(parts, delta, K):
    masses = np.zeros(2 * K + 1)
    pinf = ninf = 0.0
    for w, d in parts:
        masses += w * d.masses
        pinf += w * d.pos_inf
        ninf += w * d.neg_inf
    # total mass 1 is a repelling fixed point of the update maps; renormalize
    # so rounding deficits do not compound across iterations
    total = masses.sum() + pinf + ninf
    return QuantizedDensity(masses / total, delta, pinf / total, ninf / total)


def _fold(full, K):
    """Saturate a linear convolution (offset 2K) into the [-K, K] grid."""
    out = full[K: 3 * K + 1].copy()
    out[0] += full[:K].sum()
    out[-1] += full[3 * K + 1:].sum()
    return out


def var_combine(a: QuantizedDensity, b: QuantizedDensity) -> QuantizedDensity:
    """Law of ``M_a + M_b`` for independent messages."""
    if not a.same_grid(b):
        raise GridMismatchError("densities live on different grids")
    K = a.K
    fa, fb = a.masses.sum(), b.masses.sum()
    masses = _fold(np.convolve(a.masses, b.masses), K)
    # +inf and -inf colliding lands at zero
    masses[K] += a.pos_inf * b.neg_inf + a.neg_inf * b.pos_inf
    pinf = a.pos_inf * (fb + b.pos_inf) + fa * b.pos_inf
    ninf = a.neg_inf * (fb + b.neg_inf) + fa * b.neg_inf
    return QuantizedDensity(masses, a.delta, pinf, ninf)


@functools.lru_cache(maxsize=4)
def _check_table(K: int, delta: float):
    """Placement of ``2 atanh(tanh(a/2) tanh(b/2))`` for grid magnitudes a, b.

    Returns the lower neighbouring magnitude index and the weight it receives;
    the remainder goes to the next index up. Weights interpolate linearly in
    ``tanh(m/2)``, so E[tanh(|M|/2)] of the output is preserved exactly
    (up to saturation at the grid edge).
    """
    # u(m) = 1 - tanh(m/2) stays accurate where tanh rounds to 1
    m = np.arange(K + 1) * delta
    u_grid = 2.0 / (1.0 + np.exp(m))
    u = u_grid[:, None] + u_grid[None, :] - u_grid[:, None] * u_grid[None, :]
    # lower magnitude index k with u_k >= u > u_{k+1}
    lo = np.searchsorted(-u_grid, -u, side="right") - 1
    np.clip(lo, 0, K, out=lo)
    w = np.ones_like(u)
    inner = lo < K
    u0 = u_grid[lo[inner]]
    u1 = u_grid[lo[inner] + 1]
    w[inner] = (u[inner] - u1) / (u0 - u1)
    np.clip(w, 0.0, 1.0, out=w)
    lo = lo.astype(np.int32)
    lo.setflags(write=False)
    w.setflags(write=False)
    return lo, w


@njit(cache=True)
def _check_kernel(lo, w, ia, ib, pa, na, pb, nb, pos, neg):
    K = pos.size - 1
    for i in ia:
        for j in ib:
            same = pa[i] * pb[j] + na[i] * nb[j]
            diff = pa[i] * nb[j] + na[i] * pb[j]
            k = lo[i, j]
            f = w[i, j]
            pos[k] += f * same
            neg[k] += f * diff
            if k < K:
                pos[k + 1] += (1.0 - f) * same
                neg[k + 1] += (1.0 - f) * diff


def check_combine(a: QuantizedDensity, b: QuantizedDensity) -> QuantizedDensity:
    """Law of the check-node output for two independent inputs.

    The sign is the product of input signs; the magnitude follows the tanh
    rule and is split between the two neighbouring grid points so that both
    the sign masses and E[tanh(|M|/2)] are reproduced exactly.
    """
    if not a.same_grid(b):
        raise GridMismatchError("densities live on different grids")
    K = a.K
    pa, na = a.magnitudes()
    pb, nb = b.magnitudes()
    pos = np.zeros(K + 1)
    neg = np.zeros(K + 1)
    ia = np.flatnonzero(pa + na)
    ib = np.flatnonzero(pb + nb)
    if ia.size and ib.size:
        if K == 0:
            pos[0] = (pa[0] + na[0]) * (pb[0] + nb[0])
        else:
            lo, w = _check_table(K, a.delta)
            _check_kernel(lo, w, ia, ib, pa, na, pb, nb, pos, neg)
    # an infinite input passes the other finite input through, sign-adjusted
    pos += b.pos_inf * pa + b.neg_inf * na + a.pos_inf * pb + a.neg_inf * nb
    neg += b.pos_inf * na + b.neg_inf * pa + a.pos_inf * nb + a.neg_inf * pb
    pinf = a.pos_inf * b.pos_inf + a.neg_inf * b.neg_inf
    ninf = a.pos_inf * b.neg_inf + a.neg_inf * b.pos_inf
    return QuantizedDensity.from_magnitudes(pos, neg, a.delta, pinf, ninf)


def variable_update(ch_density: QuantizedDensity, incoming: QuantizedDensity,
                    lam: DegreePolynomial) -> QuantizedDensity:
    """Variable-to-check message law: channel plus (i-1) incoming, mixed by lambda."""
    if not ch_density.same_grid(incoming):
        raise GridMismatchError("channel and message densities live on different grids")
    K, delta = incoming.K, incoming.delta
    if ch_density.is_erasure and incoming.is_erasure:
        e = ch_density.zero_mass * lam.evaluate(incoming.zero_mass)
        return QuantizedDensity.erasure(float(e), K, delta)
    parts = []
    acc = ch_density
    for i, w in enumerate(lam.coeffs, start=1):
        if w > 0:
            parts.append((w, acc))
        if i < lam.max_degree:
            acc = var_combine(acc, incoming)
    return _mix(parts, delta, K)


def check_update(incoming: QuantizedDensity, rho: DegreePolynomial) -> QuantizedDensity:
    """Check-to-variable message law: (i-1)-fold tanh-rule combination, mixed by rho."""
    K, delta = incoming.K, incoming.delta
    if incoming.is_erasure:
        e = 1.0 - rho.evaluate(1.0 - incoming.zero_mass)
        return QuantizedDensity.erasure(float(e), K, delta)
    parts = []
    acc = QuantizedDensity.point_mass_inf(K, delta)
    for i, w in enumerate(rho.coeffs, start=1):
        if w > 0:
            parts.append((w, acc))
        if i < rho.max_degree:
            acc = check_combine(acc, incoming)
    return _mix(parts, delta, K)


def node_readout(ch_density: QuantizedDensity, check_msg: QuantizedDensity,
                 lam: DegreePolynomial) -> QuantizedDensity:
    """Bit-decision law: channel plus all d_v check messages, mixed by node fractions."""
    node = lam.node_perspective()
    K, delta = check_msg.K, check_msg.delta
    if ch_density.is_erasure and check_msg.is_erasure:
        # node polynomial sum_i L_i x^i
        e = ch_density.zero_mass * check_msg.zero_mass * node.evaluate(check_msg.zero_mass)
        return QuantizedDensity.erasure(float(e), K, delta)
    parts = []
    acc = var_combine(ch_density, check_msg)
    for i, w in enumerate(node.coeffs, start=1):
        if w > 0:
            parts.append((w, acc))
        if i < node.max_degree:
            acc = var_combine(acc, check_msg)
    return _mix(parts, delta, K)


@dataclass
class DensityEvolutionResult:
    edge: BoundTrajectory
    node: BoundTrajectory
    densities: list | None = None


def run_de_full(ens: Ensemble, ch, iterations: int, q: QuantizationParams | None = None,
                keep_densities: bool = False, stop_below: float | None = None,
                callback=None) -> DensityEvolutionResult:
    """Sum-product density evolution from the channel LLR density.

    ``edge.values[l]`` is the error probability of the variable-to-check
    message after ``l`` iterations; ``node.values[l]`` the bit-decision error.
    With ``stop_below`` set, iteration stops early once the edge error drops
    below it.
    """
    from .channels import llr_density

    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    ch_d = llr_density(ch, q or QuantizationParams())
    v = ch_d
    edge = [v.error_prob()]
    node = [v.error_prob()]
    kept = [("channel", ch_d)] if keep_densities else None
    for l in range(1, iterations + 1):
        c = check_update(v, ens.rho)
        v = variable_update(ch_d, c, ens.lam)
        edge.append(v.error_prob())
        node.append(node_readout(ch_d, c, ens.lam).error_prob())
        if keep_densities:
            kept.extend([(f"check{l}", c), (f"var{l}", v)])
        if callback is not None:
            callback(l, c, v)
        if stop_below is not None and edge[-1] < stop_below:
            break
    meta = dict(ensemble_id=ens.name, figure_name="channel", figure=ch.parameter, channel=str(ch))
    return DensityEvolutionResult(
        edge=BoundTrajectory(TrajectoryKind.DE_EDGE, np.array(edge), **meta),
        node=BoundTrajectory(TrajectoryKind.DE_NODE, np.array(node), **meta),
        densities=kept,
    )


def run_de(ens: Ensemble, ch, iterations: int, q: QuantizationParams | None = None) -> BoundTrajectory:
    return run_de_full(ens, ch, iterations, q).edge


def de_converges(ens: Ensemble, ch, max_iter: int, q: QuantizationParams | None = None,
                 target: float = 1e-10, stall: float = 1e-7, warmup: int = 10) -> tuple[bool, int]:
    """Whether DE drives the message error below ``target`` within ``max_iter``.

    After ``warmup`` iterations, gives up once the per-iteration relative
    decrease falls below ``stall`` (the trajectory has settled on a nonzero
    fixed point). Early iterations can be flat: on the BSC the first round of
    check messages is too weak to overturn the channel.
    """
    from .channels import llr_density

    ch_d = llr_density(ch, q or QuantizationParams())
    v = ch_d
    prev = v.error_prob()
    for l in range(1, max_iter + 1):
        v = variable_update(ch_d, check_update(v, ens.rho), ens.lam)
        e = v.error_prob()
        if e < target:
            return True, l
        if l > warmup and prev - e <= stall * prev:
            return False, l
        prev = e
    return False, max_iter


def channel_threshold(ens: Ensemble, kind: str, tol: float = 1e-3, max_iter: int = 200,
                      q: QuantizationParams | None = None):
    """Bisect the BSC crossover probability or BiAWGN sigma using DE convergence."""
    from .bounds import bisect_threshold
    from .channels import ChannelModel

    if kind == "bsc":
        return bisect_threshold(
            lambda p: de_converges(ens, ChannelModel.bsc(p), max_iter, q), 0.0, 0.5, tol, "de-channel:bsc")
    if kind == "biawgn":
        # sigma below 0.5 would push the LLR law past the default grid
        return bisect_threshold(
            lambda s: de_converges(ens, ChannelModel.biawgn(s), max_iter, q), 0.5, 2.0, tol, "de-channel:biawgn")
    raise ValueError(f"DE threshold search supports bsc and biawgn, not {kind!r}")
