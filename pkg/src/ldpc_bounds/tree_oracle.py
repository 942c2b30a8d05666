"""Exhaustive ground truth on small regular tree codes.

The tree is built in the message perspective by default: the root has
``d_v - 1`` child checks like every other variable node, matching the
edge-perspective recursions. ``node_perspective=True`` gives the root all
``d_v`` checks instead.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channels import ChannelModel, bhattacharyya

MAX_BITS = 22
_CHUNK = 1 << 14


class OracleSizeError(ValueError):
    pass


@dataclass
class TreeCode:
    d_v: int
    d_c: int
    levels: int
    node_perspective: bool
    checks: list  # (parent bit, [child bits]) in BFS order
    codebook: np.ndarray  # (codewords, n) uint8, root at column 0

    @property
    def n(self) -> int:
        return self.codebook.shape[1]

    @property
    def num_checks(self) -> int:
        return len(self.checks)

    def satisfies_checks(self, words: np.ndarray) -> np.ndarray:
        ok = np.ones(len(words), dtype=bool)
        for parent, kids in self.checks:
            ok &= (words[:, parent] ^ np.bitwise_xor.reduce(words[:, kids], axis=1)) == 0
        return ok


def tree_size(d_v: int, d_c: int, levels: int, node_perspective: bool = False) -> tuple[int, int]:
    """(bits, checks) of the tree without building it."""
    n, m = 1, 0
    width = 1
    for lev in range(levels):
        per_var = d_v if (lev == 0 and node_perspective) else d_v - 1
        new_checks = width * per_var
        m += new_checks
        width = new_checks * (d_c - 1)
        n += width
    return n, m


def build_tree_code(d_v: int, d_c: int, levels: int, node_perspective: bool = False) -> TreeCode:
    if not (2 <= d_v <= 3 and 3 <= d_c <= 4 and 0 <= levels <= 2):
        raise OracleSizeError("oracle supports 2 <= d_v <= 3, 3 <= d_c <= 4, levels <= 2")
    n, m = tree_size(d_v, d_c, levels, node_perspective)
    if n > MAX_BITS:
        raise OracleSizeError(f"tree has {n} bits; exhaustive limit is {MAX_BITS}")
    checks = []
    frontier = [0]
    nxt_bit = 1
    for lev in range(levels):
        per_var = d_v if (lev == 0 and node_perspective) else d_v - 1
        new_frontier = []
        for v in frontier:
            for _ in range(per_var):
                kids = list(range(nxt_bit, nxt_bit + d_c - 1))
                nxt_bit += d_c - 1
                checks.append((v, kids))
                new_frontier.extend(kids)
        frontier = new_frontier
    # free bits: root plus all but the last child of every check
    dependent = {kids[-1] for _, kids in checks}
    free = [b for b in range(n) if b not in dependent]
    k = len(free)
    idx = np.arange(1 << k, dtype=np.int64)
    words = np.zeros((1 << k, n), dtype=np.uint8)
    for pos, b in enumerate(free):
        words[:, b] = (idx >> (k - 1 - pos)) & 1
    for parent, kids in checks:  # BFS order: parents are set before children
        words[:, kids[-1]] = words[:, parent] ^ np.bitwise_xor.reduce(words[:, kids[:-1]], axis=1)
    return TreeCode(d_v, d_c, levels, node_perspective, checks, words)


def reduced_codebook(t: TreeCode) -> np.ndarray:
    """Codewords with root 1, exactly one 1-child under every 1-parent check and
    all-zero children under every 0-parent check."""
    words = t.codebook
    keep = words[:, 0] == 1
    for parent, kids in t.checks:
        ones = words[:, kids].sum(axis=1)
        keep &= np.where(words[:, parent] == 1, ones == 1, ones == 0)
    return words[keep]


def weight_profile(words: np.ndarray) -> dict[int, int]:
    return dict(sorted(Counter(int(w) for w in words.sum(axis=1)).items()))


def union_bound(t: TreeCode, D: float) -> float:
    """sum over the reduced codebook of D**weight."""
    return math.fsum(c * D ** w for w, c in weight_profile(reduced_codebook(t)).items())


def _patterns(n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int32)


def _pattern_probs(pat: np.ndarray, q: float) -> np.ndarray:
    k = pat.sum(axis=1)
    n = pat.shape[1]
    return q ** k * (1 - q) ** (n - k)


def _check_channel(t: TreeCode, ch: ChannelModel):
    if not ch.is_discrete:
        raise OracleSizeError("the oracle needs a finite-output channel (BEC or BSC)")
    if t.n > MAX_BITS:
        raise OracleSizeError(f"{t.n} bits exceeds the enumeration limit")


def _chunks(n: int):
    total = 1 << n
    return [(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]


def root_decisions(t: TreeCode, ch: ChannelModel, pat: np.ndarray, rule: str) -> np.ndarray:
    """Root-bit estimate (0, 1, or 0.5 for a tie) for each output pattern.

    ``pat`` rows are flip masks for the BSC and erasure masks for the BEC;
    ``rule`` is ``"ms"`` (sequence ML) or ``"sp"`` (bitwise MAP).
    """
    C = t.codebook.astype(np.int32)
    root = C[:, 0] == 1
    if ch.kind == "bec":
        # consistent codewords vanish on every non-erased position
        consistent = ((1 - pat) @ C.T) == 0
        n0 = consistent[:, ~root].sum(axis=1)
        n1 = consistent[:, root].sum(axis=1)
        if rule == "ms":
            # all consistent sequences are equally likely
            return np.where(n1 == 0, 0.0, np.where(n0 == 0, 1.0, 0.5))
        return np.where(n1 > n0, 1.0, np.where(n0 > n1, 0.0, 0.5))
    p = ch.parameter
    dist = pat.sum(axis=1)[:, None] + C.sum(axis=1)[None, :] - 2 * (pat @ C.T)
    if p == 0.5:
        return np.full(len(pat), 0.5)
    if rule == "ms":
        d0 = dist[:, ~root].min(axis=1)
        d1 = dist[:, root].min(axis=1)
        return np.where(d1 < d0, 1.0, np.where(d0 < d1, 0.0, 0.5))
    n = t.n
    # integer distance histograms per root class; a zero difference is an exact tie
    h0 = np.zeros((len(pat), n + 1), dtype=np.int64)
    h1 = np.zeros((len(pat), n + 1), dtype=np.int64)
    rows = np.repeat(np.arange(len(pat)), root.sum())
    np.add.at(h1, (rows, dist[:, root].ravel()), 1)
    rows = np.repeat(np.arange(len(pat)), (~root).sum())
    np.add.at(h0, (rows, dist[:, ~root].ravel()), 1)
    d = np.arange(n + 1)
    lik = p ** d * (1 - p) ** (n - d)
    diff = (h1 - h0) @ lik
    scale = (h1 + h0) @ lik
    tie = np.all(h1 == h0, axis=1) | (np.abs(diff) <= 1e-13 * scale)
    return np.where(tie, 0.5, np.where(diff > 0, 1.0, 0.0))


def _exact_root_error(t: TreeCode, ch: ChannelModel, rule: str, workers: int) -> float:
    _check_channel(t, ch)
    q = ch.parameter

    def part(bounds):
        pat = _patterns(t.n, *bounds)
        return float(np.dot(_pattern_probs(pat, q), root_decisions(t, ch, pat, rule)))

    chunks = _chunks(t.n)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(part, chunks))
    else:
        parts = [part(c) for c in chunks]
    return math.fsum(parts)


def exact_ms_root_error(t: TreeCode, ch: ChannelModel, workers: int = 1) -> float:
    """P(sequence-ML root estimate is 1 | all-zero sent); ties count one half."""
    return _exact_root_error(t, ch, "ms", workers)


def exact_sp_root_error(t: TreeCode, ch: ChannelModel, workers: int = 1) -> float:
    """P(bitwise-MAP root estimate is 1 | all-zero sent); ties count one half."""
    return _exact_root_error(t, ch, "sp", workers)


def oracle_record(d_v: int, d_c: int, levels: int, ch: ChannelModel,
                  node_perspective: bool = False, workers: int = 1) -> dict:
    t = build_tree_code(d_v, d_c, levels, node_perspective)
    cr = reduced_codebook(t)
    D = bhattacharyya(ch)
    return {
        "d_v": d_v,
        "d_c": d_c,
        "levels": levels,
        "channel": str(ch),
        "node_perspective": node_perspective,
        "n": t.n,
        "p_ms": exact_ms_root_error(t, ch, workers),
        "p_sp": exact_sp_root_error(t, ch, workers),
        "union_bound": union_bound(t, D),
        "|C_r|": int(len(cr)),
        "weight_profile": {str(w): c for w, c in weight_profile(cr).items()},
    }
