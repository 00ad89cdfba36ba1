"""Exchange-rate families on the torus and the exact quantities built from them.

Four families share one parametrization. A node is an ordered pair of adjacent
sites (x, x+1); every family's exchange rate is a weighted count over the L+1
observation windows of the node,

    rate(eta, x) = (1/scale) * sum_j w(m_j),

with m_j the particle number in window j and an integer weight table w:

    ssep               L = 0, w = (1,),            scale = 1
    pmm:n=<n>          L = n, w(m) = [m == n],     scale = n+1
    bernstein:n,L      w(m) = [m == n],            scale = L+1
    rpmm:l,L           w(m) = C(m, l),             scale = (L+1) * C(L, l)

All rates are rationals in [0, 1] and are returned as fractions.Fraction.
pmm:n coincides with bernstein:n=n,L=n and ssep with the degenerate L = 0
case; rpmm:l=L,L coincides with pmm:L. Exchanges only move mass when the two
node occupancies differ; the factor [eta(x) != eta(x+1)] is kept out of
``rate`` and applied by ``effective_rate``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Optional

from numpy.polynomial import Polynomial

from .lattice import Configuration, Window, box_count, window_count

__all__ = [
    "ModelSpec",
    "GradientPair",
    "parse_model",
    "rate",
    "exclusion",
    "effective_rate",
    "window_indicator",
    "monomial_bj",
    "current",
    "grad_h",
    "grad_g",
    "grad_H",
    "alt_sum_tilde_c",
    "canonical_diffusivity",
    "expected_rate",
]

_FAMILIES = ("ssep", "pmm", "bernstein", "rpmm")


@dataclass(frozen=True)
class ModelSpec:
    """A rate family plus its parameters.

    Textual forms: ``ssep``, ``pmm:n=4``, ``bernstein:n=2,L=4``,
    ``rpmm:l=2,L=4``. ``str()`` emits the canonical form back.
    """

    family: str
    n: Optional[int] = None
    ell: Optional[int] = None
    L: Optional[int] = None

    def __post_init__(self):
        fam = self.family
        if fam not in _FAMILIES:
            raise ValueError(f"unknown model family {fam!r}, expected one of {_FAMILIES}")
        if fam == "ssep":
            if (self.n, self.ell, self.L) != (None, None, None):
                raise ValueError("ssep takes no parameters")
        elif fam == "pmm":
            if self.n is None or self.ell is not None or self.L is not None:
                raise ValueError("pmm takes exactly one parameter n")
            if self.n < 1:
                raise ValueError(f"pmm needs n >= 1, got n={self.n}")
        elif fam == "bernstein":
            if self.n is None or self.L is None or self.ell is not None:
                raise ValueError("bernstein takes parameters n and L")
            if self.L < 1 or not 0 <= self.n <= self.L:
                raise ValueError(f"bernstein needs 0 <= n <= L and L >= 1, got n={self.n}, L={self.L}")
        else:
            if self.ell is None or self.L is None or self.n is not None:
                raise ValueError("rpmm takes parameters l and L")
            if self.L < 1 or not 1 <= self.ell <= self.L:
                raise ValueError(f"rpmm needs 1 <= l <= L, got l={self.ell}, L={self.L}")

    # convenience constructors

    @classmethod
    def ssep(cls) -> "ModelSpec":
        return cls("ssep")

    @classmethod
    def pmm(cls, n: int) -> "ModelSpec":
        return cls("pmm", n=n)

    @classmethod
    def bernstein(cls, n: int, L: int) -> "ModelSpec":
        return cls("bernstein", n=n, L=L)

    @classmethod
    def rpmm(cls, ell: int, L: int) -> "ModelSpec":
        return cls("rpmm", ell=ell, L=L)

    @property
    def window_length(self) -> int:
        """L: number of sites per observation window."""
        if self.family == "ssep":
            return 0
        if self.family == "pmm":
            return self.n
        return self.L

    @property
    def scale(self) -> int:
        """Common denominator of the rate; also the maximum window-weight sum."""
        L = self.window_length
        if self.family == "rpmm":
            return (L + 1) * comb(L, self.ell)
        return L + 1 if L > 0 else 1

    @property
    def weight_table(self) -> tuple[int, ...]:
        """Integer weights w(m) for m = 0..L."""
        L = self.window_length
        if self.family == "ssep":
            return (1,)
        if self.family == "rpmm":
            return tuple(comb(m, self.ell) for m in range(L + 1))
        return tuple(1 if m == self.n else 0 for m in range(L + 1))

    @property
    def h_table(self) -> tuple[int, ...]:
        """Numerators of the static gradient part h over ``scale``.

        Indexed by the particle number c of the (L+1)-site box [x, x+L],
        so c runs over 0..L+1.
        """
        L = self.window_length
        if self.family == "rpmm":
            return tuple(comb(c, self.ell + 1) for c in range(L + 2))
        thr = 1 if self.family == "ssep" else self.n + 1
        return tuple(1 if c >= thr else 0 for c in range(L + 2))

    @property
    def min_sites(self) -> int:
        """Smallest torus on which every window fits: L + 2."""
        return self.window_length + 2

    def __str__(self) -> str:
        if self.family == "ssep":
            return "ssep"
        if self.family == "pmm":
            return f"pmm:n={self.n}"
        if self.family == "bernstein":
            return f"bernstein:n={self.n},L={self.L}"
        return f"rpmm:l={self.ell},L={self.L}"


def parse_model(text: str) -> ModelSpec:
    """Parse a model string such as ``bernstein:n=2,L=4``."""
    head, sep, tail = text.strip().partition(":")
    fam = head.strip()
    params: dict[str, int] = {}
    if sep:
        for item in tail.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or not key:
                raise ValueError(f"malformed model parameter {item!r} in {text!r}")
            try:
                params[key] = int(val)
            except ValueError:
                raise ValueError(f"model parameter {key}={val!r} is not an integer") from None
    try:
        if fam == "ssep":
            allowed: set[str] = set()
            spec = ModelSpec("ssep")
        elif fam == "pmm":
            allowed = {"n"}
            spec = ModelSpec("pmm", n=params.get("n"))
        elif fam == "bernstein":
            allowed = {"n", "L"}
            spec = ModelSpec("bernstein", n=params.get("n"), L=params.get("L"))
        elif fam == "rpmm":
            allowed = {"l", "L"}
            spec = ModelSpec("rpmm", ell=params.get("l"), L=params.get("L"))
        else:
            raise ValueError(f"unknown model family {fam!r} in {text!r}")
    except ValueError:
        raise
    extra = set(params) - allowed
    if extra:
        raise ValueError(f"unexpected parameter(s) {sorted(extra)} for {fam} in {text!r}")
    return spec


def _require_fits(model: ModelSpec, eta: Configuration) -> None:
    if eta.N < model.min_sites:
        raise ValueError(
            f"{model} needs at least {model.min_sites} sites, configuration has {eta.N}"
        )


def rate(model: ModelSpec, eta: Configuration, x: int) -> Fraction:
    """Exchange rate of the node (x, x+1); a rational in [0, 1]."""
    _require_fits(model, eta)
    L = model.window_length
    w = model.weight_table
    num = sum(w[window_count(eta, x, j, L)] for j in range(L + 1))
    return Fraction(num, model.scale)


def exclusion(eta: Configuration, x: int) -> int:
    """Forward exclusion factor eta(x) * (1 - eta(x+1))."""
    return eta.occupancy(x) * (1 - eta.occupancy(x + 1))


def effective_rate(model: ModelSpec, eta: Configuration, x: int) -> Fraction:
    """Rate at which the node actually changes state: zero when the two
    node occupancies agree, the exchange rate otherwise."""
    if eta.occupancy(x) == eta.occupancy(x + 1):
        return Fraction(0)
    return rate(model, eta, x)


def window_indicator(model: ModelSpec, eta: Configuration, x: int, j: int) -> Fraction:
    """Per-window summand of the rate: w(m_j) normalized by its maximum.

    bernstein/pmm: the indicator [m_j == n]. rpmm: C(m_j, l) / C(L, l);
    the extra [m_j >= l] factor is implied since C(m, l) = 0 for m < l.
    ssep: identically 1.
    """
    _require_fits(model, eta)
    L = model.window_length
    if model.family == "ssep":
        Window(j, L)  # still validate j
        return Fraction(1)
    m = window_count(eta, x, j, L)
    if model.family == "rpmm":
        return Fraction(comb(m, model.ell), comb(L, model.ell))
    return Fraction(1 if m == model.n else 0)


def monomial_bj(eta: Configuration, x: int, j: int, n: int, L: int) -> int:
    """Monomial expansion of the window indicator [m_j == n]:

        sum_{l=0}^{L-n} (-1)^l C(n+l, l) sum_{|P| = n+l} prod_{z in P} eta(z)

    with P running over subsets of window j. Returns the evaluated sum,
    which always collapses to 0 or 1.
    """
    if not 0 <= n <= L:
        raise ValueError(f"need 0 <= n <= L, got n={n}, L={L}")
    sites = Window(j, L).sites(x, eta.N)
    occ = [eta.occupancy(s) for s in sites]
    total = 0
    for l in range(L - n + 1):
        size = n + l
        sub = sum(
            1
            for P in itertools.combinations(range(L), size)
            if all(occ[i] for i in P)
        )
        total += (-1) ** l * comb(n + l, l) * sub
    return total


def current(model: ModelSpec, eta: Configuration, x: int) -> Fraction:
    """Instantaneous particle current across the node (x, x+1):
    rate * (eta(x) - eta(x+1))."""
    return rate(model, eta, x) * (eta.occupancy(x) - eta.occupancy(x + 1))


@dataclass(frozen=True)
class GradientPair:
    """Static and fluctuating parts of the gradient potential H = h + g."""

    h: Fraction
    g: Fraction

    @property
    def total(self) -> Fraction:
        return self.h + self.g


def grad_h(model: ModelSpec, eta: Configuration, x: int) -> Fraction:
    """Static part of the gradient potential, a function of the particle
    number c in the (L+1)-site box [x, x+L]:

        bernstein/pmm: [c >= n+1] / (L+1)        ssep: eta(x)
        rpmm:          C(c, l+1) / ((L+1) * C(L, l))

    The rpmm case must be the binomial count, not a bare threshold
    indicator: the telescoping that produces the discrete gradient is
    exact only with C(c, l+1), and the two agree exactly when l = L.
    """
    _require_fits(model, eta)
    L = model.window_length
    c = box_count(eta, x, L)
    return Fraction(model.h_table[c], model.scale)


def grad_g(model: ModelSpec, eta: Configuration, x: int) -> Fraction:
    """Fluctuating part of the gradient potential:

        g(eta, x) = (1/scale) sum_{j=1}^{L} sum_{r=0}^{j-1}
                        w(m_j at node (x+r, x+r+1)) * (eta(x+r) - eta(x+r+1))

    The inner anchors run forward from the node (r >= 0): each window-j
    term telescopes across the j nodes it straddles to its right.
    Identically zero for ssep (L = 0).
    """
    _require_fits(model, eta)
    L = model.window_length
    w = model.weight_table
    num = 0
    for j in range(1, L + 1):
        for r in range(j):
            num += w[window_count(eta, x + r, j, L)] * (
                eta.occupancy(x + r) - eta.occupancy(x + r + 1)
            )
    return Fraction(num, model.scale)


def grad_H(model: ModelSpec, eta: Configuration, x: int) -> GradientPair:
    """Both parts of the gradient potential H = h + g at anchor x.

    The defining identity, checked exhaustively by the identity suite:

        current(eta, x) == grad_H(eta, x).total - grad_H(eta, x+1).total
    """
    return GradientPair(grad_h(model, eta, x), grad_g(model, eta, x))


def alt_sum_tilde_c(eta: Configuration, x: int, n: int, k: int) -> Fraction:
    """Alternating window-average combination

        sum_{i=0}^{k} (-1)^i C(k, i) * c~_{n+i}(eta, x),

    where c~_m is the pmm:m exchange rate (the fraction of the m+1
    node-straddling length-(m+2) boxes whose window sites are all
    occupied). Vanishes on the full configuration and can be negative,
    so it is not itself a rate. Requires n >= 1, k >= 0 and
    N >= 2(n+k)+2 so the largest windows fit without self-overlap.
    """
    if n < 1 or k < 0:
        raise ValueError(f"need n >= 1 and k >= 0, got n={n}, k={k}")
    if eta.N < 2 * (n + k) + 2:
        raise ValueError(
            f"need N >= 2(n+k)+2 = {2 * (n + k) + 2}, configuration has {eta.N}"
        )
    total = Fraction(0)
    for i in range(k + 1):
        m = n + i
        total += (-1) ** i * comb(k, i) * rate(ModelSpec.pmm(m), eta, x)
    return total


def canonical_diffusivity(model: ModelSpec) -> Polynomial:
    """Diffusion coefficient D(rho) of the hydrodynamic equation
    d_t rho = d_u (D(rho) d_u rho):

        ssep: 1    pmm:n: rho^n    rpmm: rho^l
        bernstein: C(L,n) rho^n (1-rho)^(L-n)

    Equals the equilibrium expectation of the exchange rate at density
    rho (the windows are node-free, so the rate and the exclusion factor
    decouple under the product measure).
    """
    fam = model.family
    if fam == "ssep":
        return Polynomial([1.0])
    if fam == "pmm":
        return Polynomial([0.0] * model.n + [1.0])
    if fam == "rpmm":
        return Polynomial([0.0] * model.ell + [1.0])
    n, L = model.n, model.L
    poly = Polynomial([0.0] * n + [float(comb(L, n))])
    if L > n:
        poly = poly * Polynomial([1.0, -1.0]) ** (L - n)
    return poly


def expected_rate(model: ModelSpec, rho: Fraction) -> Fraction:
    """Exact equilibrium expectation of the exchange rate at density rho,
    as a rational. Matches canonical_diffusivity evaluated at rho."""
    rho = Fraction(rho)
    if not 0 <= rho <= 1:
        raise ValueError(f"density must lie in [0, 1], got {rho}")
    fam = model.family
    if fam == "ssep":
        return Fraction(1)
    if fam == "pmm":
        return rho**model.n
    if fam == "rpmm":
        return rho**model.ell
    return comb(model.L, model.n) * rho**model.n * (1 - rho) ** (model.L - model.n)
