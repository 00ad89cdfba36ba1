"""Finite state-space analysis of the exchange dynamics.

For a model on N <= 20 sites the full continuous-time chain is a finite graph:
states are packed configuration integers, edges are node exchanges with
positive effective rate. Particle number is conserved, so the graph splits
into N+1 sectors; within each sector the communicating classes are computed
by union-find and numbered in increasing order of the minimal lexicographic
state id they contain. Blocked states (every node frozen) are flagged, and
two structural claims about mobile clusters are checked mechanically:

* mobility: a box of L+2 consecutive sites whose content makes every rate
  around it positive (bernstein: exactly n+1 particles; rpmm: at least l+1
  particles and at least one hole) can traverse the torus. The check rotates
  the cluster box together with one displaced environment cell and asserts the
  rotated state communicates with the original. Only right-moves are
  enumerated; every left-move is the inverse of the right-move of the same
  cluster one cell over, so the set of checked pairs is identical.

* mass transport: an unbalanced node adjacent to such a cluster box can
  exchange: the swapped state communicates with the original.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

from ._bitops import StateEngine, lex_ids, rate_num, state_string
from .lattice import Configuration
from .models import ModelSpec, parse_model

__all__ = [
    "TransitionGraph",
    "ClassDecomposition",
    "BlockedSet",
    "ClusterPattern",
    "StructureReport",
    "build_graph",
    "decompose",
    "find_blocked",
    "cluster_pattern",
    "mobility_check",
    "mass_transport_check",
    "write_classes_csv",
]

MAX_GRAPH_SITES = 20
MAX_STRUCTURE_SITES = 18
WITNESS_CAP = 16

ModelLike = Union[ModelSpec, str]


def _as_model(model: ModelLike) -> ModelSpec:
    return model if isinstance(model, ModelSpec) else parse_model(model)


@dataclass
class TransitionGraph:
    """Effective exchange rates of every (state, node) pair.

    eff_num[s, x] is the integer numerator (over model.scale) of the rate at
    which state s swaps node (x, x+1); zero when the node occupancies agree.
    """

    model: ModelSpec
    N: int
    eff_num: np.ndarray

    @property
    def states(self) -> int:
        return self.eff_num.shape[0]

    def exit_rate_num(self) -> np.ndarray:
        return self.eff_num.sum(axis=1)


def build_graph(model: ModelLike, N: int) -> TransitionGraph:
    """Evaluate every effective exchange rate on the full state space."""
    model = _as_model(model)
    if N < model.min_sites:
        raise ValueError(f"{model} needs N >= {model.min_sites}, got {N}")
    if N > MAX_GRAPH_SITES:
        raise ValueError(f"full graphs are capped at N = {MAX_GRAPH_SITES}, got {N}")
    states = np.arange(1 << N, dtype=np.uint64)
    eng = StateEngine(N, states)
    eff = np.empty((1 << N, N), dtype=np.int32)
    for x in range(N):
        differ = eng.occ(x) != eng.occ(x + 1)
        eff[:, x] = rate_num(eng, model, x) * differ
    return TransitionGraph(model=model, N=N, eff_num=eff)


@dataclass
class ClassDecomposition:
    """Communicating classes of the exchange dynamics, per particle sector."""

    model: ModelSpec
    N: int
    sector: np.ndarray  # particle count per state
    class_id: np.ndarray  # within-sector class index per state
    root: np.ndarray  # union-find representative per state
    blocked: np.ndarray  # bool per state
    classes_per_sector: dict[int, int]

    @property
    def states(self) -> int:
        return len(self.sector)

    def same_class(self, a: int, b: int) -> bool:
        """Do two packed states communicate?"""
        return bool(self.root[a] == self.root[b])

    def class_of(self, eta: Configuration) -> tuple[int, int]:
        """(sector, class_id) of a configuration."""
        s = eta.bits
        return int(self.sector[s]), int(self.class_id[s])

    def blocked_count(self) -> int:
        return int(self.blocked.sum())


def _union_find(S: int, edge_src: list[np.ndarray], edge_dst: list[np.ndarray]) -> np.ndarray:
    parent = list(range(S))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]  # path halving
            a = parent[a]
        return a

    for src, dst in zip(edge_src, edge_dst):
        for a, b in zip(src.tolist(), dst.tolist()):
            ra, rb = find(a), find(b)
            if ra != rb:
                if ra < rb:
                    parent[rb] = ra
                else:
                    parent[ra] = rb
    return np.fromiter((find(a) for a in range(S)), dtype=np.int64, count=S)


def decompose(graph: TransitionGraph) -> ClassDecomposition:
    """Union states joined by positive-rate exchanges into classes."""
    N = graph.N
    S = graph.states
    states = np.arange(S, dtype=np.uint64)
    srcs, dsts = [], []
    for x in range(N):
        mask = (1 << x) | (1 << ((x + 1) % N))
        idx = np.flatnonzero(graph.eff_num[:, x] > 0)
        srcs.append(idx)
        dsts.append((idx.astype(np.uint64) ^ np.uint64(mask)).astype(np.int64))
    root = _union_find(S, srcs, dsts)

    sector = np.bitwise_count(states).astype(np.int16)
    lex = lex_ids(N)
    big = np.iinfo(np.int64).max
    min_lex = np.full(S, big, dtype=np.int64)
    np.minimum.at(min_lex, root, lex.astype(np.int64))

    # number classes within each sector by their minimal lexicographic id
    class_of_root = np.full(S, -1, dtype=np.int64)
    classes_per_sector: dict[int, int] = {}
    roots = np.flatnonzero(min_lex != big)
    for k in range(N + 1):
        rs = roots[sector[roots] == k]
        order = rs[np.argsort(min_lex[rs], kind="stable")]
        class_of_root[order] = np.arange(len(order))
        classes_per_sector[k] = len(order)

    return ClassDecomposition(
        model=graph.model,
        N=N,
        sector=sector,
        class_id=class_of_root[root],
        root=root,
        blocked=graph.exit_rate_num() == 0,
        classes_per_sector=classes_per_sector,
    )


@dataclass
class BlockedSet:
    """All states in which every node has zero effective rate."""

    model: ModelSpec
    N: int
    states: np.ndarray  # packed state integers

    @property
    def count(self) -> int:
        return len(self.states)

    def __contains__(self, eta: Configuration) -> bool:
        return bool(np.isin(np.uint64(eta.bits), self.states))

    def iter_configurations(self) -> Iterator[Configuration]:
        for s in self.states.tolist():
            yield Configuration.from_bits(int(s), self.N)


def find_blocked(model: ModelLike, N: int) -> BlockedSet:
    """Enumerate blocked states (the uniform states are trivially included)."""
    graph = build_graph(model, N)
    idx = np.flatnonzero(graph.exit_rate_num() == 0)
    return BlockedSet(model=graph.model, N=N, states=idx.astype(np.uint64))


@dataclass(frozen=True)
class ClusterPattern:
    """Content condition on a box of L+2 consecutive sites that makes it a
    mobile cluster for the model."""

    length: int
    exact_particles: Optional[int] = None  # bernstein/pmm: exactly n+1
    min_particles: Optional[int] = None  # rpmm: at least l+1 ...
    needs_hole: bool = False  # ... plus at least one hole

    def matches(self, eta: Configuration, p: int) -> bool:
        c = sum(eta.occupancy(p + i) for i in range(self.length))
        if self.exact_particles is not None:
            return c == self.exact_particles
        ok = c >= self.min_particles
        if self.needs_hole:
            ok = ok and c < self.length
        return ok


def cluster_pattern(model: ModelLike) -> ClusterPattern:
    model = _as_model(model)
    L = model.window_length
    if model.family in ("bernstein", "pmm"):
        return ClusterPattern(length=L + 2, exact_particles=model.n + 1)
    if model.family == "rpmm":
        return ClusterPattern(length=L + 2, min_particles=model.ell + 1, needs_hole=True)
    raise ValueError("ssep has no nontrivial cluster pattern: every state with "
                     "both phases present is already mobile")


@dataclass
class StructureReport:
    """Outcome of a mechanical structural check over all (state, position) pairs."""

    check: str
    model: str
    N: int
    params: dict
    pairs_checked: int
    failures: list[tuple[str, int]] = field(default_factory=list)
    failure_count: int = 0
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "model": self.model,
            "N": self.N,
            "params": self.params,
            "pairs_checked": self.pairs_checked,
            "failure_count": self.failure_count,
            "failures": [list(f) for f in self.failures],
            "passed": self.passed,
        }

    def __str__(self) -> str:
        status = "pass" if self.passed else f"FAIL ({self.failure_count} witnesses)"
        return f"{self.check}[{self.model}, N={self.N}] {self.pairs_checked} pairs: {status}"


def _pattern_mask(
    eng: StateEngine, pattern: ClusterPattern, p: int
) -> np.ndarray:
    sites = [(p + i) % eng.N for i in range(pattern.length)]
    c = eng.popcount(sites)
    if pattern.exact_particles is not None:
        return c == pattern.exact_particles
    ok = c >= pattern.min_particles
    if pattern.needs_hole:
        ok &= c < pattern.length
    return ok


def _rotate_right(states: np.ndarray, seg: list[int]) -> np.ndarray:
    """Cyclically shift the content of the given sites one step along the list."""
    keep = np.uint64((1 << 64) - 1)
    for s in seg:
        keep &= ~np.uint64(1 << s)
    out = states & keep
    k = len(seg)
    for i, s in enumerate(seg):
        bit = (states >> np.uint64(s)) & np.uint64(1)
        out |= bit << np.uint64(seg[(i + 1) % k])
    return out


def _structure_guard(model: ModelSpec, N: int) -> None:
    need = 2 * (model.window_length + 2) + 2
    if N < need:
        raise ValueError(
            f"structure checks for {model} need N >= 2(L+2)+2 = {need}, got {N}"
        )
    if N > MAX_STRUCTURE_SITES:
        raise ValueError(f"structure checks are capped at N = {MAX_STRUCTURE_SITES}")


def mobility_check(
    model: ModelLike,
    N: int,
    pattern_particles: Optional[int] = None,
    decomposition: Optional[ClassDecomposition] = None,
) -> StructureReport:
    """Every cluster box can move one cell to the right within its class.

    For each state and each box position matching the cluster pattern, the
    box content is shifted right by one cell and the displaced environment
    cell wraps to the vacated end; the resulting state must share the
    original's communicating class. ``pattern_particles`` overrides the
    bernstein particle count (negative control: n instead of n+1 produces
    violations).
    """
    model = _as_model(model)
    _structure_guard(model, N)
    pattern = cluster_pattern(model)
    if pattern_particles is not None:
        if model.family not in ("bernstein", "pmm"):
            raise ValueError("pattern_particles override applies to bernstein/pmm")
        pattern = ClusterPattern(length=pattern.length, exact_particles=pattern_particles)
    if decomposition is None:
        decomposition = decompose(build_graph(model, N))
    root = decomposition.root
    states = np.arange(1 << N, dtype=np.uint64)
    eng = StateEngine(N, states)
    report = StructureReport(
        check="mobility",
        model=str(model),
        N=N,
        params={
            "pattern": pattern.__dict__.copy(),
            **({"pattern_particles": pattern_particles} if pattern_particles is not None else {}),
        },
        pairs_checked=0,
    )
    for p in range(N):
        match = _pattern_mask(eng, pattern, p)
        idx = np.flatnonzero(match)
        if idx.size == 0:
            continue
        seg = [(p + i) % N for i in range(pattern.length + 1)]
        moved = _rotate_right(states[idx], seg)
        report.pairs_checked += int(idx.size)
        bad = root[idx] != root[moved.astype(np.int64)]
        nbad = int(bad.sum())
        if nbad:
            report.failure_count += nbad
            report.passed = False
            for i in idx[bad][: max(0, WITNESS_CAP - len(report.failures))]:
                report.failures.append((state_string(int(i), N), p))
    return report


def mass_transport_check(
    model: ModelLike,
    N: int,
    decomposition: Optional[ClassDecomposition] = None,
) -> StructureReport:
    """An unbalanced node flanked by a cluster box can exchange in-class.

    For each state and node (x, x+1) with differing occupancies, if the box
    [x+2, x+L+3] or the box [x-L-2, x-1] matches the cluster pattern, the
    swapped state must share the original's communicating class.
    """
    model = _as_model(model)
    _structure_guard(model, N)
    pattern = cluster_pattern(model)
    if decomposition is None:
        decomposition = decompose(build_graph(model, N))
    root = decomposition.root
    states = np.arange(1 << N, dtype=np.uint64)
    eng = StateEngine(N, states)
    report = StructureReport(
        check="mass-transport",
        model=str(model),
        N=N,
        params={"pattern": pattern.__dict__.copy()},
        pairs_checked=0,
    )
    for x in range(N):
        differ = eng.occ(x) != eng.occ(x + 1)
        right = _pattern_mask(eng, pattern, (x + 2) % N)
        left = _pattern_mask(eng, pattern, (x - pattern.length) % N)
        match = differ & (right | left)
        idx = np.flatnonzero(match)
        if idx.size == 0:
            continue
        mask = np.uint64((1 << x) | (1 << ((x + 1) % N)))
        swapped = (states[idx] ^ mask).astype(np.int64)
        report.pairs_checked += int(idx.size)
        bad = root[idx] != root[swapped]
        nbad = int(bad.sum())
        if nbad:
            report.failure_count += nbad
            report.passed = False
            for i in idx[bad][: max(0, WITNESS_CAP - len(report.failures))]:
                report.failures.append((state_string(int(i), N), x))
    return report


def write_classes_csv(decomp: ClassDecomposition, path_or_file, build: str = "") -> None:
    """Write one row per state: state_id,sector,class_id,blocked.

    Rows are ordered by state_id (the lexicographic index of the
    configuration string). Metadata rides in leading '#' comment lines.
    """
    own = isinstance(path_or_file, (str, bytes))
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        f.write(f"# model={decomp.model}\n")
        f.write(f"# N={decomp.N}\n")
        if build:
            f.write(f"# build={build}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["state_id", "sector", "class_id", "blocked"])
        lex = lex_ids(decomp.N)
        order = np.argsort(lex, kind="stable")  # state packed ints by lex id
        for s in order.tolist():
            writer.writerow(
                [
                    int(lex[s]),
                    int(decomp.sector[s]),
                    int(decomp.class_id[s]),
                    int(decomp.blocked[s]),
                ]
            )
    finally:
        if own:
            f.close()


def summary(decomp: ClassDecomposition) -> dict:
    """Sector sizes, class counts and blocked counts, JSON-ready."""
    N = decomp.N
    sectors = []
    for k in range(N + 1):
        in_sector = decomp.sector == k
        sectors.append(
            {
                "sector": k,
                "states": int(in_sector.sum()),
                "classes": decomp.classes_per_sector.get(k, 0),
                "blocked": int((in_sector & decomp.blocked).sum()),
            }
        )
    return {
        "model": str(decomp.model),
        "N": N,
        "states": decomp.states,
        "classes": int(sum(decomp.classes_per_sector.values())),
        "blocked": decomp.blocked_count(),
        "sectors": sectors,
    }
