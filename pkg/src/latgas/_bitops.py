"""Vectorized primitives over packed configuration integers (site x at bit x)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .lattice import Window
from .models import ModelSpec


def state_string(s: int, N: int) -> str:
    """String form of a packed state, site 0 leftmost."""
    return "".join("1" if (s >> x) & 1 else "0" for x in range(N))


def lex_ids(N: int) -> np.ndarray:
    """lex_ids(N)[s] = position of packed state s in lexicographic string order."""
    s = np.arange(1 << N, dtype=np.uint64)
    out = np.zeros_like(s)
    for x in range(N):
        out |= ((s >> np.uint64(x)) & np.uint64(1)) << np.uint64(N - 1 - x)
    return out


class StateEngine:
    """Occupancy and particle-count primitives over a vector of packed states."""

    def __init__(self, N: int, states: np.ndarray):
        self.N = N
        self.states = states

    def occ(self, x: int) -> np.ndarray:
        return ((self.states >> np.uint64(x % self.N)) & np.uint64(1)).astype(np.int64)

    def mask(self, sites: Sequence[int]) -> np.uint64:
        m = 0
        for s in sites:
            m |= 1 << (s % self.N)
        return np.uint64(m)

    def popcount(self, sites: Sequence[int]) -> np.ndarray:
        return np.bitwise_count(self.states & self.mask(sites)).astype(np.int64)

    def window_count(self, x: int, j: int, L: int) -> np.ndarray:
        return self.popcount(Window(j, L).sites(x, self.N))

    def box_count(self, x: int, L: int) -> np.ndarray:
        return self.popcount([(x + z) % self.N for z in range(L + 1)])


def rate_num(eng: StateEngine, model: ModelSpec, x: int) -> np.ndarray:
    """Integer numerator of the exchange rate over model.scale."""
    L = model.window_length
    w = np.asarray(model.weight_table, dtype=np.int64)
    total = np.zeros(len(eng.states), dtype=np.int64)
    for j in range(L + 1):
        total += w[eng.window_count(x, j, L)]
    return total
