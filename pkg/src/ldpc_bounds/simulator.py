"""Finite-length Monte Carlo: configuration-model Tanner graphs and flooding decoders.

The all-zero codeword is sent in every trial; a bit decision is wrong when the
posterior LLR is negative and counts one half when it is exactly zero.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelModel, sample_llr
from .ensembles import DegreePolynomial, Ensemble

SATURATION = 1e6
WILSON_Z = 1.959963984540054


class GraphConstructionError(RuntimeError):
    pass


@dataclass
class TannerGraph:
    """Bipartite graph as an edge list; edges are sorted by check index."""

    n: int
    m: int
    edge_var: np.ndarray
    edge_chk: np.ndarray

    def __post_init__(self):
        order = np.lexsort((self.edge_var, self.edge_chk))
        self.edge_var = np.asarray(self.edge_var, dtype=np.int64)[order]
        self.edge_chk = np.asarray(self.edge_chk, dtype=np.int64)[order]
        self.var_degrees = np.bincount(self.edge_var, minlength=self.n)
        self.chk_degrees = np.bincount(self.edge_chk, minlength=self.m)
        self.chk_start = np.concatenate(([0], np.cumsum(self.chk_degrees)[:-1]))

    @property
    def num_edges(self) -> int:
        return self.edge_var.size

    def has_duplicate_edges(self) -> bool:
        key = self.edge_var * max(self.m, 1) + self.edge_chk
        return np.unique(key).size != key.size

    def validate(self):
        if self.var_degrees.sum() != self.chk_degrees.sum():
            raise GraphConstructionError("socket counts do not match")
        if self.has_duplicate_edges():
            raise GraphConstructionError("graph has parallel edges")

    def syndrome_ok(self, bits: np.ndarray) -> bool:
        par = np.bincount(self.edge_chk, weights=bits[self.edge_var], minlength=self.m)
        return bool(np.all(par % 2 == 0))


def _largest_remainder(fractions: np.ndarray, total: int) -> np.ndarray:
    raw = fractions * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def degree_sequences(ens: Ensemble, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Variable and check degree sequences with matching socket totals."""
    vnode = ens.lam.node_perspective()
    vcounts = _largest_remainder(vnode.coeffs, n)
    var_deg = np.repeat(vnode.degrees, vcounts)
    sockets = int(var_deg.sum())
    cnode = ens.rho.node_perspective()
    avg_dc = float(np.dot(cnode.degrees, cnode.coeffs))
    m = max(1, int(round(sockets / avg_dc)))
    ccounts = _largest_remainder(cnode.coeffs, m)
    chk_deg = np.repeat(cnode.degrees, ccounts)
    diff = sockets - int(chk_deg.sum())
    if diff:
        # absorb the mismatch in one highest-degree check node
        j = int(np.argmax(chk_deg))
        chk_deg[j] += diff
        if chk_deg[j] < 1:
            raise GraphConstructionError("cannot realize check degree sequence")
    return var_deg, chk_deg


def build_graph(ens: Ensemble, n: int, rng: np.random.Generator) -> TannerGraph:
    """Configuration-model graph; parallel edges removed by random socket swaps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    var_deg, chk_deg = degree_sequences(ens, n)
    m = chk_deg.size
    vs = np.repeat(np.arange(n), var_deg)
    cs = np.repeat(np.arange(m), chk_deg)
    cs = cs[rng.permutation(cs.size)]
    _repair_duplicates(vs, cs, m, rng, cap=100 * n)
    g = TannerGraph(n, m, vs, cs)
    g.validate()
    return g


def _repair_duplicates(vs, cs, m, rng, cap):
    E = vs.size
    key = vs * m + cs
    counts = {}
    for k in key.tolist():
        counts[k] = counts.get(k, 0) + 1
    bad = [e for e in range(E) if counts[int(key[e])] > 1]
    attempts = 0
    while bad:
        e = bad.pop()
        ke = int(vs[e] * m + cs[e])
        if counts[ke] <= 1:
            continue
        while True:
            attempts += 1
            if attempts > cap:
                raise GraphConstructionError("duplicate-edge repair exceeded retry cap")
            f = int(rng.integers(E))
            k1 = int(vs[e] * m + cs[f])
            k2 = int(vs[f] * m + cs[e])
            kf = int(vs[f] * m + cs[f])
            if f == e or k1 in counts and counts[k1] > 0 or k2 in counts and counts[k2] > 0 or k1 == k2:
                continue
            counts[ke] -= 1
            counts[kf] -= 1
            counts[k1] = counts.get(k1, 0) + 1
            counts[k2] = counts.get(k2, 0) + 1
            cs[e], cs[f] = cs[f], cs[e]
            break


def graph_from_tree(t) -> TannerGraph:
    """Tanner graph of a tree code from :mod:`ldpc_bounds.tree_oracle`."""
    ev, ec = [], []
    for c, (parent, kids) in enumerate(t.checks):
        for v in [parent, *kids]:
            ev.append(v)
            ec.append(c)
    return TannerGraph(t.n, len(t.checks), np.array(ev, dtype=np.int64), np.array(ec, dtype=np.int64))


# --- decoders -------------------------------------------------------------

def _phi(x):
    with np.errstate(divide="ignore", over="ignore"):
        return np.log1p(2.0 / np.expm1(x))


def _sp_check(g: TannerGraph, v2c: np.ndarray) -> np.ndarray:
    mag = np.abs(v2c)
    neg = v2c < 0
    zero = mag == 0
    ph = np.where(zero, 0.0, _phi(np.where(zero, 1.0, mag)))
    tot = np.bincount(g.edge_chk, weights=ph, minlength=g.m)
    nzero = np.bincount(g.edge_chk, weights=zero, minlength=g.m)
    nneg = np.bincount(g.edge_chk, weights=neg, minlength=g.m)
    others = np.maximum(tot[g.edge_chk] - ph, 0.0)
    out = np.minimum(_phi(others), SATURATION)
    out[(nzero[g.edge_chk] - zero) > 0] = 0.0
    sign = np.where(((nneg[g.edge_chk] - neg) % 2) == 1, -1.0, 1.0)
    return sign * out


def _ms_check(g: TannerGraph, v2c: np.ndarray) -> np.ndarray:
    mag = np.abs(v2c)
    neg = v2c < 0
    start = g.chk_start
    min1 = np.minimum.reduceat(mag, start)
    is_min = mag == min1[g.edge_chk]
    # first edge attaining the minimum in each check
    first = np.full(g.m, g.num_edges, dtype=np.int64)
    idx = np.flatnonzero(is_min)
    np.minimum.at(first, g.edge_chk[idx], idx)
    masked = mag.copy()
    masked[first] = np.inf
    min2 = np.minimum.reduceat(masked, start)
    out = min1[g.edge_chk].copy()
    out[first] = min2
    nneg = np.bincount(g.edge_chk, weights=neg, minlength=g.m)
    sign = np.where(((nneg[g.edge_chk] - neg) % 2) == 1, -1.0, 1.0)
    out[~np.isfinite(out)] = SATURATION  # degree-1 check
    return sign * out


def _decode(g: TannerGraph, llrs: np.ndarray, max_iter: int, check_rule, early_stop: bool):
    ch = np.clip(np.asarray(llrs, dtype=float), -SATURATION, SATURATION)
    if ch.size != g.n:
        raise ValueError("llrs must have one entry per variable node")
    beliefs = [ch.copy()]
    c2v = np.zeros(g.num_edges)
    done = False
    for _ in range(max_iter):
        if done:
            beliefs.append(beliefs[-1])
            continue
        total = ch + np.bincount(g.edge_var, weights=c2v, minlength=g.n)
        v2c = np.clip(total[g.edge_var] - c2v, -SATURATION, SATURATION)
        c2v = check_rule(g, v2c) if g.num_edges else c2v
        post = ch + np.bincount(g.edge_var, weights=c2v, minlength=g.n)
        beliefs.append(post)
        if early_stop and g.syndrome_ok((post < 0).astype(float)):
            done = True
    return beliefs


def sp_decode(g: TannerGraph, llrs, max_iter: int, early_stop: bool = False) -> list:
    """Flooding sum-product; returns the posterior LLRs after each iteration (index 0 = channel)."""
    return _decode(g, llrs, max_iter, _sp_check, early_stop)


def ms_decode(g: TannerGraph, llrs, max_iter: int, early_stop: bool = False) -> list:
    """Flooding min-sum; returns the posterior LLRs after each iteration (index 0 = channel)."""
    return _decode(g, llrs, max_iter, _ms_check, early_stop)


def hard_decisions(post: np.ndarray) -> np.ndarray:
    """1 for a negative posterior, 0.5 for an exact tie, 0 otherwise."""
    return np.where(post < 0, 1.0, np.where(post == 0, 0.5, 0.0))


def doubled_errors(post: np.ndarray) -> int:
    """Twice the error count, so half-counted ties stay integral."""
    return int(2 * np.count_nonzero(post < 0) + np.count_nonzero(post == 0))


# --- Monte Carlo -------------------------------------------------------------

@dataclass
class SimulationConfig:
    ensemble: Ensemble
    channel: ChannelModel
    n: int
    trials: int
    max_iter: int
    master_seed: int = 0
    target_error_events: int | None = None
    early_stop: bool = False
    batch: int = 8

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class SimulationResult:
    decoder: str
    ber: np.ndarray
    ci95: np.ndarray
    stderr: np.ndarray
    trials: int
    n: int
    wall_time: float = field(default=0.0, compare=False)

    def to_csv(self, channel: str, seed: int) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "ber", "ci95", "decoder", "n", "channel", "seed", "trials"])
        for l, (b, h) in enumerate(zip(self.ber, self.ci95)):
            w.writerow([l, repr(float(b)), repr(float(h)), self.decoder, self.n, channel, seed, self.trials])
        return buf.getvalue()


def wilson_halfwidth(k: float, N: int, z: float = WILSON_Z) -> float:
    """Half-width of the Wilson score interval for k successes in N."""
    if N == 0:
        return 0.0
    p = k / N
    return z / (1 + z * z / N) * math.sqrt(p * (1 - p) / N + z * z / (4 * N * N))


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


def run_trial(cfg: SimulationConfig, decoder: str, trial: int) -> np.ndarray:
    """Doubled error counts per iteration for one graph and one channel draw."""
    rng = trial_rng(cfg.master_seed, trial)
    g = build_graph(cfg.ensemble, cfg.n, rng)
    llr = sample_llr(cfg.channel, rng, g.n)
    dec = sp_decode if decoder == "SP" else ms_decode
    posts = dec(g, llr, cfg.max_iter, cfg.early_stop)
    return np.array([doubled_errors(p) for p in posts], dtype=np.int64)


def monte_carlo(cfg: SimulationConfig, decoder: str, threads: int | None = None) -> SimulationResult:
    """Estimate per-iteration BER; output is independent of ``threads``."""
    decoder = decoder.upper()
    if decoder not in ("SP", "MS"):
        raise ValueError("decoder must be SP or MS")
    threads = threads or os.cpu_count() or 1
    t0 = time.perf_counter()
    per_trial = []
    done = 0
    with ThreadPoolExecutor(max_workers=threads) as ex:
        while done < cfg.trials:
            stop = min(done + cfg.batch, cfg.trials)
            per_trial.extend(ex.map(lambda t: run_trial(cfg, decoder, t), range(done, stop)))
            done = stop
            if cfg.target_error_events is not None:
                if sum(int(c[-1]) for c in per_trial) >= 2 * cfg.target_error_events:
                    break
    counts = np.vstack(per_trial)  # doubled errors, trial order
    T = counts.shape[0]
    N = T * cfg.n
    ber = counts.sum(axis=0) / (2.0 * N)
    frac = counts / (2.0 * cfg.n)
    stderr = frac.std(axis=0, ddof=1) / math.sqrt(T) if T > 1 else np.zeros(ber.size)
    ci = np.array([wilson_halfwidth(b * N, N) for b in ber])
    return SimulationResult(decoder, ber, ci, stderr, T, cfg.n, time.perf_counter() - t0)
