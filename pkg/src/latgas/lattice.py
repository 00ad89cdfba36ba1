"""Occupancy configurations on the discrete torus and the counts built on them.

Sites are indexed modulo N. A configuration assigns an occupancy in {0, 1} to
each site; internally the occupancies are packed into one integer with site x
at bit x, which makes equality, hashing, shifts and particle-hole complement
cheap and lets the exhaustive checkers work on plain integer arrays.

String form: site 0 is the leftmost character, so "0110" puts particles on
sites 1 and 2 of a 4-site torus.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

__all__ = [
    "Configuration",
    "Window",
    "MAX_ENUMERATION_SITES",
    "occupancy",
    "shift",
    "swap",
    "particle_hole",
    "window_count",
    "box_count",
    "enumerate_configurations",
    "parse_configuration",
    "format_configuration",
]

# Exhaustive enumeration is capped here; beyond this the checkers sample.
MAX_ENUMERATION_SITES = 24

OccupancyLike = Union[str, Iterable[int], "Configuration"]


class Configuration:
    """Immutable occupancy configuration on a torus of N >= 1 sites."""

    __slots__ = ("_bits", "_n")

    def __init__(self, occupancies: OccupancyLike):
        if isinstance(occupancies, Configuration):
            self._bits = occupancies._bits
            self._n = occupancies._n
            return
        if isinstance(occupancies, str):
            values = [_char_to_occ(c) for c in occupancies]
        else:
            values = [int(v) for v in occupancies]
        if not values:
            raise ValueError("configuration needs at least one site")
        bits = 0
        for x, v in enumerate(values):
            if v not in (0, 1):
                raise ValueError(f"occupancy at site {x} is {v}, must be 0 or 1")
            bits |= v << x
        self._bits = bits
        self._n = len(values)

    @classmethod
    def from_bits(cls, bits: int, n: int) -> "Configuration":
        """Wrap an already-packed occupancy word (site x at bit x)."""
        if n < 1:
            raise ValueError("configuration needs at least one site")
        if bits < 0 or bits >> n:
            raise ValueError(f"bits {bits:#x} do not fit in {n} sites")
        obj = cls.__new__(cls)
        obj._bits = bits
        obj._n = n
        return obj

    @property
    def N(self) -> int:
        return self._n

    @property
    def bits(self) -> int:
        return self._bits

    @property
    def particles(self) -> int:
        """Total particle number; conserved by the exchange dynamics."""
        return self._bits.bit_count()

    @property
    def lex_id(self) -> int:
        """Position of this configuration in the lexicographic string order."""
        return int(self.string(), 2)

    def occupancy(self, x: int) -> int:
        return (self._bits >> (x % self._n)) & 1

    def occupancies(self) -> np.ndarray:
        out = np.empty(self._n, dtype=np.uint8)
        bits = self._bits
        for x in range(self._n):
            out[x] = (bits >> x) & 1
        return out

    def string(self) -> str:
        return "".join("1" if (self._bits >> x) & 1 else "0" for x in range(self._n))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self._n == other._n and self._bits == other._bits

    def __hash__(self) -> int:
        return hash((self._bits, self._n))

    def __len__(self) -> int:
        return self._n

    def __repr__(self) -> str:
        return f"Configuration({self.string()!r})"


def _char_to_occ(c: str) -> int:
    if c == "0":
        return 0
    if c == "1":
        return 1
    raise ValueError(f"configuration strings use '0'/'1' only, got {c!r}")


def parse_configuration(s: str) -> Configuration:
    """Parse a '0'/'1' string, site 0 leftmost."""
    return Configuration(s)


def format_configuration(eta: Configuration) -> str:
    return eta.string()


def occupancy(eta: Configuration, x: int) -> int:
    """eta(x) with periodic wrap in both directions."""
    return eta.occupancy(x)


def shift(eta: Configuration, k: int = 1) -> Configuration:
    """Translate by k sites: shift(eta, k)(x) == eta(x + k)."""
    n = eta.N
    k %= n
    if k == 0:
        return eta
    bits = eta.bits
    mask = (1 << n) - 1
    rotated = ((bits >> k) | (bits << (n - k))) & mask
    return Configuration.from_bits(rotated, n)


def swap(eta: Configuration, x: int) -> Configuration:
    """Exchange the contents of sites x and x+1 (an edge exchange, mod N)."""
    n = eta.N
    a = x % n
    b = (x + 1) % n
    bits = eta.bits
    if ((bits >> a) ^ (bits >> b)) & 1:
        bits ^= (1 << a) | (1 << b)
    return Configuration.from_bits(bits, n)


def particle_hole(eta: Configuration) -> Configuration:
    """Complement every site: particles become holes and vice versa."""
    mask = (1 << eta.N) - 1
    return Configuration.from_bits(eta.bits ^ mask, eta.N)


@dataclass(frozen=True)
class Window:
    """One of the L+1 observation windows of a node.

    Relative to the left node site, window j covers the integer box
    [-j, -j+L+1] with the two node offsets {0, 1} removed, so it always
    holds exactly L sites and straddles the node for every j in [0, L].
    j = 0 puts the window entirely to the right of the node, j = L
    entirely to the left.
    """

    j: int
    L: int

    def __post_init__(self):
        if self.L < 0:
            raise ValueError(f"window length L={self.L} must be >= 0")
        if not 0 <= self.j <= self.L:
            raise ValueError(f"window index j={self.j} outside [0, {self.L}]")

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(
            o for o in range(-self.j, -self.j + self.L + 2) if o != 0 and o != 1
        )

    def sites(self, x: int, N: int) -> tuple[int, ...]:
        """Absolute sites of the window when the node sits at (x, x+1)."""
        if N < self.L + 2:
            raise ValueError(f"torus of {N} sites cannot hold a window with L={self.L}")
        return tuple((x + o) % N for o in self.offsets)


def window_count(eta: Configuration, x: int, j: int, L: int) -> int:
    """Particle number in window j of the node (x, x+1).

    Requires N >= L+2 so the window and the node are disjoint on the torus.
    """
    w = Window(j, L)
    bits = eta.bits
    n = eta.N
    if n < L + 2:
        raise ValueError(f"torus of {n} sites cannot hold a window with L={L}")
    count = 0
    for o in w.offsets:
        count += (bits >> ((x + o) % n)) & 1
    return count


def box_count(eta: Configuration, x: int, L: int) -> int:
    """Particle number in the box [x, x+L] of L+1 consecutive sites.

    Requires N >= L+1; sites wrap but are never counted twice.
    """
    n = eta.N
    if n < L + 1:
        raise ValueError(f"box of {L + 1} sites does not fit on a torus of {n}")
    bits = eta.bits
    count = 0
    for z in range(L + 1):
        count += (bits >> ((x + z) % n)) & 1
    return count


def enumerate_configurations(N: int) -> Iterator[Configuration]:
    """Yield all 2**N configurations in lexicographic string order.

    For N = 2 the order is 00, 01, 10, 11. Capped at N = 24; the cap is
    16.7M states, so stream rather than materialize near it.
    """
    if not 1 <= N <= MAX_ENUMERATION_SITES:
        raise ValueError(f"enumeration supports 1 <= N <= {MAX_ENUMERATION_SITES}")
    for values in itertools.product((0, 1), repeat=N):
        yield Configuration(values)
