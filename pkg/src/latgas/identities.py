"""Exact verification of the combinatorial structure shared by the rate families.

Every identity is checked pointwise, per configuration and per node, in exact
integer arithmetic: both sides are expressed as integer numerators over a
common denominator and compared as numpy int64 arrays over the packed state
integers (site x at bit x). Exhaustive mode enumerates all 2**N states for
N <= 20; randomized mode draws states uniformly with replacement from a seeded
generator and can never report a failure that exhaustive mode would not.

Each checker accepts a ``mutate`` argument naming a deliberately broken
variant of the identity. Mutations are negative controls: the test suite runs
them to confirm the checker actually has the power to produce witnesses.

Checkers return an :class:`IdentityReport`; the first few failing
(configuration, node, lhs, rhs) witnesses are retained, the rest only counted.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from ._bitops import StateEngine as _StateEngine
from ._bitops import rate_num as _rate_num
from ._bitops import state_string as _state_string
from .lattice import Configuration, Window
from .models import ModelSpec, alt_sum_tilde_c, expected_rate, parse_model

__all__ = [
    "IdentityReport",
    "NegativityResult",
    "check_gradient",
    "check_inversion",
    "check_decomposition",
    "check_inequality",
    "check_monomial",
    "check_partition",
    "check_symmetry",
    "check_interpolation",
    "check_monotonicity",
    "check_threshold_identity",
    "check_expectation",
    "negativity_search",
    "negativity_profile",
    "standard_suite",
]

MAX_EXHAUSTIVE_SITES = 20
WITNESS_CAP = 16

ModelLike = Union[ModelSpec, str]


@dataclass
class IdentityReport:
    """Outcome of one identity check.

    failures holds up to WITNESS_CAP witnesses as tuples
    (configuration string, node, lhs, rhs); failure_count is the full count.
    """

    identity: str
    params: dict
    mode: str
    states_checked: int
    failures: list[tuple[str, int, str, str]] = field(default_factory=list)
    failure_count: int = 0
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "params": self.params,
            "mode": self.mode,
            "states_checked": self.states_checked,
            "failure_count": self.failure_count,
            "failures": [list(f) for f in self.failures],
            "passed": self.passed,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def __str__(self) -> str:
        status = "pass" if self.passed else f"FAIL ({self.failure_count} witnesses)"
        params = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.identity}[{params}] {self.mode}, {self.states_checked} states: {status}"


def _as_model(model: ModelLike) -> ModelSpec:
    return model if isinstance(model, ModelSpec) else parse_model(model)


def _draw_states(N: int, mode: str, samples: int, seed: int) -> tuple[np.ndarray, str]:
    if N < 1:
        raise ValueError("need N >= 1")
    if mode == "exhaustive":
        if N > MAX_EXHAUSTIVE_SITES:
            raise ValueError(
                f"exhaustive mode supports N <= {MAX_EXHAUSTIVE_SITES}; "
                f"use mode='randomized' for N = {N}"
            )
        return np.arange(1 << N, dtype=np.uint64), "exhaustive"
    if mode == "randomized":
        if samples < 1:
            raise ValueError("randomized mode needs samples >= 1")
        rng = np.random.default_rng(seed)
        states = rng.integers(0, 1 << N, size=samples, dtype=np.uint64)
        return states, f"randomized(samples={samples}, seed={seed})"
    raise ValueError(f"mode must be 'exhaustive' or 'randomized', got {mode!r}")


def _h_num(eng: _StateEngine, model: ModelSpec, x: int, mutate: Optional[str]) -> np.ndarray:
    L = model.window_length
    c = eng.box_count(x, L)
    if mutate == "h-printed-indicator":
        # bare threshold in place of the binomial count; exact only when l = L
        return comb(L, model.ell) * (c >= model.ell + 1).astype(np.int64)
    if mutate == "h-threshold-low":
        return (c >= model.n).astype(np.int64)
    htab = np.asarray(model.h_table, dtype=np.int64)
    return htab[c]


def _g_num(eng: _StateEngine, model: ModelSpec, x: int, mutate: Optional[str]) -> np.ndarray:
    L = model.window_length
    w = np.asarray(model.weight_table, dtype=np.int64)
    total = np.zeros(len(eng.states), dtype=np.int64)
    if mutate == "g-anchors-backward":
        # anchors walk left of the node instead of across the straddled nodes
        for j in range(1, L + 1):
            for i in range(1, j + 1):
                a = x - i
                total += w[eng.window_count(a, j, L)] * (eng.occ(a) - eng.occ(a + 1))
        return total
    for j in range(1, L + 1):
        for r in range(j):
            a = x + r
            total += w[eng.window_count(a, j, L)] * (eng.occ(a) - eng.occ(a + 1))
    return total


def _collect(
    report: IdentityReport,
    states: np.ndarray,
    N: int,
    node: int,
    bad: np.ndarray,
    lhs_num: np.ndarray,
    rhs_num: np.ndarray,
    denom: int,
) -> None:
    idx = np.flatnonzero(bad)
    if idx.size == 0:
        return
    report.failure_count += int(idx.size)
    report.passed = False
    for i in idx[: max(0, WITNESS_CAP - len(report.failures))]:
        report.failures.append(
            (
                _state_string(int(states[i]), N),
                node,
                str(Fraction(int(lhs_num[i]), denom)),
                str(Fraction(int(rhs_num[i]), denom)),
            )
        )


def check_gradient(
    model: ModelLike,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """Current across a node equals a discrete gradient of H = h + g:

        rate(eta, x) * (eta(x) - eta(x+1)) == H(eta, x) - H(eta, x+1)

    for every configuration and every node. ``model`` must be a bernstein
    or rpmm spec; ssep and pmm sit at the L = 0 and L = n corners of the
    bernstein family, so spell them as the equivalent bernstein form.

    Mutations: 'g-anchors-backward', 'h-printed-indicator' (rpmm only),
    'h-threshold-low' (bernstein only).
    """
    model = _as_model(model)
    if model.family not in ("bernstein", "rpmm"):
        raise ValueError(
            f"check_gradient takes bernstein or rpmm specs; {model} is the "
            "bernstein corner case, spell it explicitly"
        )
    if mutate not in (None, "g-anchors-backward", "h-printed-indicator", "h-threshold-low"):
        raise ValueError(f"unknown mutation {mutate!r}")
    if mutate == "h-printed-indicator" and model.family != "rpmm":
        raise ValueError("h-printed-indicator applies to rpmm only")
    if mutate == "h-threshold-low" and model.family != "bernstein":
        raise ValueError("h-threshold-low applies to bernstein only")
    L = model.window_length
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="gradient",
        params={"model": str(model), "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    h_mut = mutate if mutate in ("h-printed-indicator", "h-threshold-low") else None
    g_mut = mutate if mutate == "g-anchors-backward" else None
    H = [
        _h_num(eng, model, x, h_mut) + _g_num(eng, model, x, g_mut)
        for x in range(N)
    ]
    for x in range(N):
        lhs = _rate_num(eng, model, x) * (eng.occ(x) - eng.occ(x + 1))
        rhs = H[x] - H[(x + 1) % N]
        _collect(report, states, N, x, lhs != rhs, lhs, rhs, model.scale)
    return report


def check_inversion(
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """rpmm rates are binomial mixtures of bernstein rates at the same L:

        rate_rpmm(l, L) == sum_{n=l}^{L} [C(n,l)/C(L,l)] rate_bernstein(n, L)

    checked for every l in [1, L]. Mutation 'drop-endpoint' omits n = L.
    """
    if L < 1:
        raise ValueError("need L >= 1")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "drop-endpoint"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="inversion",
        params={"L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    bern = {n: ModelSpec.bernstein(n, L) for n in range(L + 1)}
    for ell in range(1, L + 1):
        rp = ModelSpec.rpmm(ell, L)
        denom = rp.scale  # (L+1) C(L,l); bernstein numerators rescale by C(n,l)
        top = L - 1 if mutate == "drop-endpoint" else L
        for x in range(N):
            lhs = _rate_num(eng, rp, x)
            rhs = np.zeros(len(states), dtype=np.int64)
            for n in range(ell, top + 1):
                rhs += comb(n, ell) * _rate_num(eng, bern[n], x)
            _collect(report, states, N, x, lhs != rhs, lhs, rhs, denom)
    return report


def check_decomposition(
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """Binomial inversion of :func:`check_inversion`: bernstein rates are
    alternating combinations of rpmm rates,

        rate_bernstein(n, L) == sum_{l=n}^{L} (-1)^(l-n) C(L,l) C(l,n) rate_rpmm(l, L)

    for every n in [0, L], where rate_rpmm at l = 0 is identically 1.
    Mutation 'unsigned' drops the alternating sign.
    """
    if L < 1:
        raise ValueError("need L >= 1")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "unsigned"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="decomposition",
        params={"L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )

    # rpmm numerator over the denominator (L+1) C(L,l); l = 0 means sum_j C(m_j,0) = L+1
    def rpmm_num(ell: int, x: int) -> np.ndarray:
        if ell == 0:
            return np.full(len(states), L + 1, dtype=np.int64)
        return _rate_num(eng, ModelSpec.rpmm(ell, L), x)

    for n in range(L + 1):
        bern = ModelSpec.bernstein(n, L)
        for x in range(N):
            lhs = _rate_num(eng, bern, x)  # over L+1
            rhs = np.zeros(len(states), dtype=np.int64)
            for ell in range(n, L + 1):
                sign = 1 if mutate == "unsigned" else (-1) ** (ell - n)
                # C(L,l) cancels the rpmm denominator back to L+1
                rhs += sign * comb(ell, n) * rpmm_num(ell, x)
            _collect(report, states, N, x, lhs != rhs, lhs, rhs, L + 1)
    return report


def check_inequality(
    n: int,
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """Domination of the bernstein rate by the matching rpmm rate:

        rate_bernstein(n, L) <= C(L, n) * rate_rpmm(n, L)

    pointwise, for 1 <= n <= L. Mutation 'reversed' asserts >= instead,
    which fails as soon as some window holds more than n particles.
    """
    if not 1 <= n <= L:
        raise ValueError(f"need 1 <= n <= L, got n={n}, L={L}")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "reversed"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="inequality",
        params={"n": n, "L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    bern = ModelSpec.bernstein(n, L)
    rp = ModelSpec.rpmm(n, L)
    for x in range(N):
        lhs = _rate_num(eng, bern, x)  # over L+1
        rhs = _rate_num(eng, rp, x)  # over (L+1) C(L,n); times C(L,n) -> over L+1
        bad = (lhs < rhs) if mutate == "reversed" else (lhs > rhs)
        _collect(report, states, N, x, bad, lhs, rhs, L + 1)
    return report


def check_partition(
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """The bernstein rates at fixed L partition unity:

        sum_{n=0}^{L} rate_bernstein(n, L) == 1

    pointwise, since every window holds exactly one particle number. Holds on
    any torus with N >= L+2; the report labels the regime (strict when
    L < N/2, tight otherwise). Mutation 'missing-term' omits n = L.
    """
    if L < 1:
        raise ValueError("need L >= 1")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "missing-term"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    regime = "strict (L < N/2)" if 2 * L < N else "tight (L >= N/2)"
    report = IdentityReport(
        identity="partition",
        params={"L": L, "N": N, "regime": regime, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    top = L - 1 if mutate == "missing-term" else L
    ones = np.full(len(states), L + 1, dtype=np.int64)
    for x in range(N):
        total = np.zeros(len(states), dtype=np.int64)
        for n in range(top + 1):
            total += _rate_num(eng, ModelSpec.bernstein(n, L), x)
        _collect(report, states, N, x, total != ones, total, ones, L + 1)
    return report


def check_symmetry(
    n: int,
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """Particle-hole duality of the bernstein family:

        rate_bernstein(n, L)(eta) == rate_bernstein(L-n, L)(complement of eta)

    Mutation 'same-n' compares against n on the complement, which can only
    hold identically when n == L - n.
    """
    if not 0 <= n <= L or L < 1:
        raise ValueError(f"need 0 <= n <= L and L >= 1, got n={n}, L={L}")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "same-n"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    flipped = _StateEngine(N, states ^ np.uint64((1 << N) - 1))
    report = IdentityReport(
        identity="symmetry",
        params={"n": n, "L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    dual = n if mutate == "same-n" else L - n
    m1 = ModelSpec.bernstein(n, L)
    m2 = ModelSpec.bernstein(dual, L)
    for x in range(N):
        lhs = _rate_num(eng, m1, x)
        rhs = _rate_num(flipped, m2, x)
        _collect(report, states, N, x, lhs != rhs, lhs, rhs, L + 1)
    return report


def check_interpolation(
    n: int,
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """The family corners coincide:

        rate_bernstein(n, n) == rate_pmm(n)   and   rate_rpmm(L, L) == rate_pmm(L)

    Mutation 'shift-l' compares rpmm(L-1, L) against pmm(L) (needs L >= 2).
    """
    if n < 1 or L < 1:
        raise ValueError(f"need n >= 1 and L >= 1, got n={n}, L={L}")
    need = max(n, L) + 2
    if N < need:
        raise ValueError(f"need N >= {need}, got N={N}")
    if mutate not in (None, "shift-l"):
        raise ValueError(f"unknown mutation {mutate!r}")
    if mutate == "shift-l" and L < 2:
        raise ValueError("shift-l needs L >= 2")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="interpolation",
        params={"n": n, "L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    pairs = [
        (ModelSpec.bernstein(n, n), ModelSpec.pmm(n)),
        (ModelSpec.rpmm(L - 1 if mutate == "shift-l" else L, L), ModelSpec.pmm(L)),
    ]
    for lhs_model, rhs_model in pairs:
        # numerators live over different scales; compare cross-multiplied
        ls, rs = lhs_model.scale, rhs_model.scale
        for x in range(N):
            lhs = _rate_num(eng, lhs_model, x) * rs
            rhs = _rate_num(eng, rhs_model, x) * ls
            _collect(report, states, N, x, lhs != rhs, lhs, rhs, ls * rs)
    return report


def check_monotonicity(
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """rpmm rates decrease in l:

        rate_rpmm(l, L) >= rate_rpmm(l+1, L)   for l = 1..L-1

    pointwise (the normalized binomial C(m,l)/C(L,l) is nonincreasing in l
    for m <= L). Needs L >= 2. Mutation 'reversed' asserts <=.
    """
    if L < 2:
        raise ValueError("need L >= 2")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "reversed"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="monotonicity",
        params={"L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    for ell in range(1, L):
        lo = ModelSpec.rpmm(ell, L)
        hi = ModelSpec.rpmm(ell + 1, L)
        # common denominator (L+1) C(L,l) C(L,l+1)
        for x in range(N):
            lhs = _rate_num(eng, lo, x) * comb(L, ell + 1)
            rhs = _rate_num(eng, hi, x) * comb(L, ell)
            bad = (lhs > rhs) if mutate == "reversed" else (lhs < rhs)
            _collect(
                report, states, N, x, bad, lhs, rhs, (L + 1) * comb(L, ell) * comb(L, ell + 1)
            )
    return report


def check_threshold_identity(
    n: int,
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """Alternating binomial representation of a box-count threshold:

        [box_count(eta, x, L) >= n+1]
            == sum_{l=n}^{L} (-1)^(l-n) C(l, n) C(box_count(eta, x, L), l+1)

    for every configuration and anchor, 0 <= n <= L. This is the per-box
    content of the bernstein/rpmm gradient correspondence. Mutation
    'indicator-weights' replaces C(c, l+1) by the bare threshold
    [c >= l+1], which breaks the alternating sum.
    """
    if not 0 <= n <= L or L < 1:
        raise ValueError(f"need 0 <= n <= L and L >= 1, got n={n}, L={L}")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "indicator-weights"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="threshold",
        params={"n": n, "L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    for x in range(N):
        c = eng.box_count(x, L)
        lhs = (c >= n + 1).astype(np.int64)
        rhs = np.zeros(len(states), dtype=np.int64)
        for ell in range(n, L + 1):
            if mutate == "indicator-weights":
                term = (c >= ell + 1).astype(np.int64)
            else:
                term = _comb_arr(c, ell + 1)
            rhs += (-1) ** (ell - n) * comb(ell, n) * term
        _collect(report, states, N, x, lhs != rhs, lhs, rhs, 1)
    return report


def _comb_arr(values: np.ndarray, k: int) -> np.ndarray:
    table = np.array([comb(int(v), k) for v in range(int(values.max()) + 1)], dtype=np.int64)
    return table[values]


def check_monomial(
    n: int,
    L: int,
    N: int,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """The window indicator equals its signed occupation-monomial expansion:

        [m_j == n] == sum_{l=0}^{L-n} (-1)^l C(n+l, l)
                          sum_{|P| = n+l} prod_{z in P} eta(z)

    with P running over subsets of window j's sites. Each subset product is
    evaluated literally (all sites of P occupied), batched over states with
    a bit mask per subset, for every node and every window placement.
    Mutation 'dropped-sign' makes all coefficients positive.
    """
    if not 0 <= n <= L or L < 1:
        raise ValueError(f"need 0 <= n <= L and L >= 1, got n={n}, L={L}")
    if N < L + 2:
        raise ValueError(f"need N >= L+2 = {L + 2}, got N={N}")
    if mutate not in (None, "dropped-sign"):
        raise ValueError(f"unknown mutation {mutate!r}")
    states, mode_label = _draw_states(N, mode, samples, seed)
    eng = _StateEngine(N, states)
    report = IdentityReport(
        identity="monomial",
        params={"n": n, "L": L, "N": N, **({"mutate": mutate} if mutate else {})},
        mode=mode_label,
        states_checked=len(states),
    )
    for x in range(N):
        for j in range(L + 1):
            sites = [(x + o) % N for o in Window(j, L).offsets]
            lhs = (eng.window_count(x, j, L) == n).astype(np.int64)
            rhs = np.zeros(len(states), dtype=np.int64)
            for l in range(L - n + 1):
                coeff = comb(n + l, l) if mutate == "dropped-sign" else (-1) ** l * comb(n + l, l)
                hits = np.zeros(len(states), dtype=np.int64)
                for P in itertools.combinations(sites, n + l):
                    mask = np.uint64(0)
                    for z in P:
                        mask |= np.uint64(1 << z)
                    hits += (states & mask) == mask
                rhs += coeff * hits
            _collect(report, states, N, x, lhs != rhs, lhs, rhs, 1)
    return report


def check_expectation(
    model: ModelLike,
    rho_points: Optional[Sequence[Fraction]] = None,
    mutate: Optional[str] = None,
) -> IdentityReport:
    """Equilibrium expectation of the rate matches the closed form exactly.

    Enumerates all 2**(2L+2) contents of the dependence box [x-L, x+L+1]
    (windows never reach farther) and sums rate * Bernoulli(rho) weights in
    exact rational arithmetic, then compares against
    :func:`latgas.models.expected_rate` at each density. At least L+1
    distinct densities are required; the default uses k/(L+2) for
    k = 0..L+2, which pins the degree-L polynomial. Mutation
    'shifted-density' evaluates the closed form at rho/2.
    """
    model = _as_model(model)
    if mutate not in (None, "shifted-density"):
        raise ValueError(f"unknown mutation {mutate!r}")
    L = model.window_length
    span = 2 * L + 2
    if rho_points is None:
        rho_points = [Fraction(k, L + 2) for k in range(L + 3)]
    rho_points = [Fraction(r) for r in rho_points]
    if len(set(rho_points)) < L + 1:
        raise ValueError(f"need at least L+1 = {L + 1} distinct densities")
    for r in rho_points:
        if not 0 <= r <= 1:
            raise ValueError(f"density {r} outside [0, 1]")

    states = np.arange(1 << span, dtype=np.uint64)
    eng = _StateEngine(span, states)
    num = _rate_num(eng, model, L)  # node at local sites (L, L+1); no wraparound
    pc = np.bitwise_count(states).astype(np.int64)
    coef = np.zeros(span + 1, dtype=np.int64)
    np.add.at(coef, pc, num)

    report = IdentityReport(
        identity="expectation",
        params={
            "model": str(model),
            "rho_points": [str(r) for r in rho_points],
            **({"mutate": mutate} if mutate else {}),
        },
        mode=f"exhaustive-local(2^{span})",
        states_checked=len(states),
    )
    for rho in rho_points:
        acc = Fraction(0)
        for k in range(span + 1):
            if coef[k]:
                acc += int(coef[k]) * rho**k * (1 - rho) ** (span - k)
        lhs = acc / model.scale
        rhs = expected_rate(model, rho / 2 if mutate == "shifted-density" else rho)
        if lhs != rhs:
            report.failure_count += 1
            report.passed = False
            if len(report.failures) < WITNESS_CAP:
                report.failures.append((f"rho={rho}", -1, str(lhs), str(rhs)))
    return report


class NegativityResult(NamedTuple):
    site: int
    value: Fraction


def negativity_profile(n: int, k: int, N: int) -> list[tuple[int, Fraction]]:
    """alt_sum_tilde_c over every single-vacancy configuration on N sites.

    The vacancy runs over all sites other than the node pair (0, 1); all
    other sites are occupied. Returns (site, value) pairs in site order.
    """
    if N < 2 * (n + k) + 2:
        raise ValueError(f"need N >= 2(n+k)+2 = {2 * (n + k) + 2}, got N={N}")
    out = []
    for v in range(2, N):
        occ = [1] * N
        occ[v] = 0
        out.append((v, alt_sum_tilde_c(Configuration(occ), 0, n, k)))
    return out


def negativity_search(n: int, k: int, N: int) -> NegativityResult:
    """Minimize alt_sum_tilde_c over single-vacancy configurations.

    Returns the first minimizing vacancy site (sites scanned in increasing
    order away from the node at (0, 1)) and the minimum value. Negative
    minima certify that the alternating sum is not itself a rate; with
    k <= n the scan stays >= 0.
    """
    profile = negativity_profile(n, k, N)
    site, value = min(profile, key=lambda sv: (sv[1], sv[0]))
    return NegativityResult(site, value)


def standard_suite(
    L_max: int = 4,
    N: Optional[int] = None,
    mode: str = "exhaustive",
    samples: int = 20000,
    seed: int = 0,
) -> list[IdentityReport]:
    """Run every checker over all families with window length up to L_max.

    For each L the torus defaults to N = 2L+4 (every window placement is
    then free of self-overlap next to its node). Gradient checks cover all
    bernstein(n, L) with 0 <= n <= L and rpmm(l, L) with 1 <= l <= L;
    expectation checks run per model at the default density grid.
    """
    reports: list[IdentityReport] = []
    for L in range(1, L_max + 1):
        NL = N if N is not None else 2 * L + 4
        kw = dict(mode=mode, samples=samples, seed=seed)
        for n in range(L + 1):
            reports.append(check_gradient(ModelSpec.bernstein(n, L), NL, **kw))
            reports.append(check_threshold_identity(n, L, NL, **kw))
            reports.append(check_symmetry(n, L, NL, **kw))
            reports.append(check_monomial(n, L, NL, **kw))
            if n >= 1:
                reports.append(check_inequality(n, L, NL, **kw))
        for ell in range(1, L + 1):
            reports.append(check_gradient(ModelSpec.rpmm(ell, L), NL, **kw))
        reports.append(check_inversion(L, NL, **kw))
        reports.append(check_decomposition(L, NL, **kw))
        reports.append(check_partition(L, NL, **kw))
        reports.append(check_partition(L, L + 2, **kw))  # tight regime
        reports.append(check_interpolation(L, L, 2 * L + 4, **kw))
        if L >= 2:
            reports.append(check_monotonicity(L, NL, **kw))
        for n in range(L + 1):
            reports.append(check_expectation(ModelSpec.bernstein(n, L)))
        for ell in range(1, L + 1):
            reports.append(check_expectation(ModelSpec.rpmm(ell, L)))
    reports.append(check_expectation(ModelSpec.ssep()))
    return reports
