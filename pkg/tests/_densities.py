"""Random symmetric LLR densities for property tests."""

import numpy as np

from ldpc_bounds.density import QuantizedDensity


def random_symmetric(rng, K=400, delta=0.05, atoms=True):
    """g(-m) = exp(-m) g(m) on the grid, plus optional zero and +inf atoms."""
    m = np.arange(1, K + 1) * delta
    shape = rng.integers(1, 4)
    pos = np.zeros(K + 1)
    for _ in range(shape):
        centre = rng.uniform(0.5, 0.6 * K * delta)
        width = rng.uniform(0.3, 4.0)
        pos[1:] += rng.uniform(0.2, 1.0) * np.exp(-0.5 * ((m - centre) / width) ** 2)
    if rng.random() < 0.3:
        # a few sparse atoms, BSC-like
        idx = rng.integers(1, K + 1, size=3)
        pos[idx] += rng.uniform(0.1, 1.0, size=3)
    neg = np.zeros(K + 1)
    neg[1:] = np.exp(-m) * pos[1:]
    pos[0] = rng.uniform(0, 0.2) if atoms and rng.random() < 0.5 else 0.0
    pinf = rng.uniform(0, 0.3) if atoms and rng.random() < 0.5 else 0.0
    total = pos.sum() + neg.sum()
    scale = (1 - pinf) / total
    return QuantizedDensity.from_magnitudes(pos * scale, neg * scale, delta, pos_inf=pinf)
