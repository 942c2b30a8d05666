"""MBIOS channel models: BEC, BSC and binary-input AWGN.

All quantities are taken under transmission of bit 0. The BiAWGN channel maps
0 -> +1, 1 -> -1 with unit energy; its LLR is ``2 y / sigma**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .density import QuantizationParams, QuantizedDensity

TRUNCATION_LIMIT = 1e-12


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelModel:
    kind: str
    parameter: float

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        p = float(self.parameter)
        object.__setattr__(self, "parameter", p)
        if kind == "bec":
            ok = 0 <= p <= 1
        elif kind == "bsc":
            ok = 0 <= p <= 0.5
        elif kind == "biawgn":
            ok = p > 0 and math.isfinite(p)
        else:
            raise ChannelError(f"unknown channel kind {self.kind!r}")
        if not ok:
            raise ChannelError(f"parameter {p!r} out of range for {kind}")

    @classmethod
    def bec(cls, eps):
        return cls("bec", eps)

    @classmethod
    def bsc(cls, p):
        return cls("bsc", p)

    @classmethod
    def biawgn(cls, sigma):
        return cls("biawgn", sigma)

    def __str__(self):
        return f"{self.kind}:{self.parameter!r}"

    @property
    def is_discrete(self) -> bool:
        return self.kind in ("bec", "bsc")

    def bsc_llr(self) -> float:
        p = self.parameter
        return math.inf if p == 0 else math.log((1 - p) / p)

    def bhattacharyya(self) -> float:
        return bhattacharyya(self)

    def uncoded_error_prob(self) -> float:
        return uncoded_error_prob(self)


def parse_channel(spec: str) -> ChannelModel:
    """Parse ``bec:0.3``, ``bsc:0.1`` or ``biawgn:1.0`` (sigma)."""
    kind, sep, val = spec.partition(":")
    if not sep:
        raise ChannelError(f"bad channel spec {spec!r}; expected KIND:VALUE")
    try:
        x = float(val)
    except ValueError:
        raise ChannelError(f"bad channel parameter in {spec!r}") from None
    return ChannelModel(kind, x)


def bhattacharyya(ch: ChannelModel) -> float:
    """D = integral of sqrt(f(y|0) f(y|1))."""
    if ch.kind == "bec":
        return ch.parameter
    if ch.kind == "bsc":
        p = ch.parameter
        return 2.0 * math.sqrt(p * (1 - p))
    return math.exp(-1.0 / (2.0 * ch.parameter ** 2))


def uncoded_error_prob(ch: ChannelModel) -> float:
    """P(LLR < 0) + P(LLR = 0) / 2 under bit 0."""
    if ch.kind == "bec":
        return 0.5 * ch.parameter
    if ch.kind == "bsc":
        return ch.parameter
    return float(ndtr(-1.0 / ch.parameter))


def _grid_for_bsc(ch: ChannelModel, q: QuantizationParams):
    """Grid spacing adjusted so the BSC atoms +/-log((1-p)/p) fall exactly on grid points."""
    L = ch.bsc_llr()
    K = q.half_width
    if L == 0 or math.isinf(L):
        return q.delta, K, 0
    steps = max(1, round(L / q.delta))
    delta = L / steps
    K = max(int(round(q.m_max / delta)), steps)
    return delta, K, steps


def llr_density(ch: ChannelModel, q: QuantizationParams | None = None) -> QuantizedDensity:
    """Quantized LLR law under bit 0.

    BEC is atoms only (zero and +inf, no grid). BSC places two exact atoms on a
    grid whose spacing is nudged to contain them. BiAWGN integrates the
    Gaussian LLR law over bins of width ``delta``; tails beyond ``m_max``
    are folded into the boundary bins.
    """
    q = q or QuantizationParams()
    if ch.kind == "bec":
        return QuantizedDensity.erasure(ch.parameter)
    if ch.kind == "bsc":
        delta, K, steps = _grid_for_bsc(ch, q)
        p = ch.parameter
        masses = np.zeros(2 * K + 1)
        if p == 0:
            return QuantizedDensity(masses, delta, pos_inf=1.0)
        masses[K + steps] += 1 - p
        masses[K - steps] += p
        return QuantizedDensity(masses, delta)
    sigma = ch.parameter
    mean = 2.0 / sigma ** 2
    sd = 2.0 / sigma
    K, delta = q.half_width, q.delta
    edges = (np.arange(-K, K + 2) - 0.5) * delta
    cdf = ndtr((edges - mean) / sd)
    masses = np.diff(cdf)
    lower_tail = float(cdf[0])
    upper_tail = float(ndtr(-(edges[-1] - mean) / sd))
    if lower_tail + upper_tail > TRUNCATION_LIMIT:
        raise ChannelError(
            f"LLR range +/-{q.m_max} truncates {lower_tail + upper_tail:.3g} of the "
            f"{ch} density; widen m_max"
        )
    masses[0] += lower_tail
    masses[-1] += upper_tail
    masses /= masses.sum()
    return QuantizedDensity(masses, delta)


def sample_llr(ch: ChannelModel, rng: np.random.Generator, size=None):
    """Draw LLRs from the all-zero-codeword law (``inf`` for BEC non-erasures)."""
    n = 1 if size is None else size
    if ch.kind == "bec":
        out = np.where(rng.random(n) < ch.parameter, 0.0, np.inf)
    elif ch.kind == "bsc":
        L = ch.bsc_llr()
        flips = rng.random(n) < ch.parameter
        if L == 0:
            out = np.zeros(n)
        else:
            out = np.where(flips, -L, L)
    else:
        s = ch.parameter
        y = 1.0 + s * rng.standard_normal(n)
        out = 2.0 * y / s ** 2
    return float(out[0]) if size is None else out
