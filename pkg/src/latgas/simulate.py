"""Kinetic Monte Carlo for the exchange dynamics at diffusive scaling.

Macroscopic time t corresponds to microscopic time t * N**2. A run draws the
initial configuration from a product measure with site marginals rho(x/N),
evolves it with the exact event kernel, snapshots the configuration at the
requested macroscopic times (state just before the first event at or past
each time) and coarse-grains into K boxes.

Two engines share initial conditions and semantics:

* ``thinning``: the JIT kernel in :mod:`latgas._kernels`; production path.
* ``reference``: a pure-Python Gillespie loop over a Fenwick-tree
  :class:`RateTable`. Orders of magnitude slower, used as the audited
  reference (exact rational rates feed the tree, drift is monitored and
  repaired by periodic rebuilds).

Each replica gets an independent Philox stream spawned from the run seed, so
results are reproducible and independent of execution order or thread count.
"""

from __future__ import annotations

import json
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import fsum, sqrt
from typing import Optional, Union

import numpy as np

from . import __version__
from ._kernels import STATUS_BLOCKED, kernel_for
from .lattice import Configuration, Window
from .models import ModelSpec, parse_model

__all__ = [
    "ProfileSpec",
    "parse_profile",
    "SimulationConfig",
    "Trajectory",
    "RateTable",
    "gillespie_step",
    "sample_product_measure",
    "coarse_grain",
    "run_trajectory",
    "monte_carlo_expectation",
    "write_trajectory",
    "write_trajectory_csv",
    "trajectory_metadata",
    "sidecar_path",
]

GENERATOR_NAME = "philox4x64"

ModelLike = Union[ModelSpec, str]


@dataclass(frozen=True)
class ProfileSpec:
    """Initial macroscopic density profile on the unit torus.

    Kinds: ``constant`` (rho), ``step`` (left on [0, 1/2), right on
    [1/2, 1); the wrap puts a second interface at u = 0) and ``cosine``
    (mean + amplitude * cos(2 pi u)). Textual forms like
    ``step:left=0.8,right=0.2`` round-trip through ``str()``.
    """

    kind: str
    rho: Optional[float] = None
    left: Optional[float] = None
    right: Optional[float] = None
    mean: Optional[float] = None
    amplitude: Optional[float] = None

    def __post_init__(self):
        def _unit(name, v):
            if v is None:
                raise ValueError(f"profile {self.kind} needs parameter {name}")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"profile {self.kind}: {name}={v} outside [0, 1]")

        if self.kind == "constant":
            _unit("rho", self.rho)
        elif self.kind == "step":
            _unit("left", self.left)
            _unit("right", self.right)
        elif self.kind == "cosine":
            if self.mean is None or self.amplitude is None:
                raise ValueError("profile cosine needs mean and amplitude")
            if not 0.0 <= self.mean - abs(self.amplitude) <= 1.0 or not (
                0.0 <= self.mean + abs(self.amplitude) <= 1.0
            ):
                raise ValueError(
                    f"cosine profile leaves [0, 1]: mean={self.mean}, amplitude={self.amplitude}"
                )
        else:
            raise ValueError(f"unknown profile kind {self.kind!r}")

    @classmethod
    def constant(cls, rho: float) -> "ProfileSpec":
        return cls("constant", rho=rho)

    @classmethod
    def step(cls, left: float, right: float) -> "ProfileSpec":
        return cls("step", left=left, right=right)

    @classmethod
    def cosine(cls, mean: float, amplitude: float) -> "ProfileSpec":
        return cls("cosine", mean=mean, amplitude=amplitude)

    def density(self, u) -> np.ndarray:
        """rho(u), vectorized, periodic in u."""
        u = np.mod(np.asarray(u, dtype=np.float64), 1.0)
        if self.kind == "constant":
            return np.full_like(u, self.rho)
        if self.kind == "step":
            return np.where(u < 0.5, self.left, self.right)
        return self.mean + self.amplitude * np.cos(2.0 * np.pi * u)

    def __str__(self) -> str:
        if self.kind == "constant":
            return f"constant:rho={self.rho:g}"
        if self.kind == "step":
            return f"step:left={self.left:g},right={self.right:g}"
        return f"cosine:mean={self.mean:g},amplitude={self.amplitude:g}"


_PROFILE_FIELDS = {"constant": ("rho",), "step": ("left", "right"), "cosine": ("mean", "amplitude")}


def parse_profile(text: str) -> ProfileSpec:
    """Parse a profile string.

    Accepts named parameters (``step:left=0.8,right=0.2``) or bare values in
    declaration order (``step:0.8,0.2``); mixing the two styles is an error.
    """
    head, sep, tail = text.strip().partition(":")
    kind = head.strip()
    params: dict[str, float] = {}
    if sep and tail:
        items = tail.split(",")
        named = ["=" in item for item in items]
        if any(named) and not all(named):
            raise ValueError(f"mixed named and positional profile parameters in {text!r}")
        if all(named):
            for item in items:
                key, _, val = item.partition("=")
                if not key.strip():
                    raise ValueError(f"malformed profile parameter {item!r} in {text!r}")
                params[key.strip()] = _profile_float(key, val)
        else:
            fields = _PROFILE_FIELDS.get(kind)
            if fields is None:
                raise ValueError(f"unknown profile kind {kind!r}")
            if len(items) != len(fields):
                raise ValueError(
                    f"profile {kind} takes {len(fields)} values {fields}, got {len(items)}"
                )
            params = {k: _profile_float(k, v) for k, v in zip(fields, items)}
    return ProfileSpec(kind, **params)


def _profile_float(key: str, val: str) -> float:
    try:
        return float(val)
    except ValueError:
        raise ValueError(f"profile parameter {key}={val!r} is not a number") from None


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to reproduce a trajectory byte for byte."""

    model: ModelSpec
    N: int
    K: int
    profile: ProfileSpec
    out_times: tuple[float, ...]  # macroscopic, strictly increasing
    replicas: int = 1
    seed: int = 0
    engine: str = "thinning"

    def __post_init__(self):
        model = self.model if isinstance(self.model, ModelSpec) else parse_model(self.model)
        object.__setattr__(self, "model", model)
        profile = (
            self.profile if isinstance(self.profile, ProfileSpec) else parse_profile(self.profile)
        )
        object.__setattr__(self, "profile", profile)
        object.__setattr__(self, "out_times", tuple(float(t) for t in self.out_times))
        if self.N < model.min_sites:
            raise ValueError(f"{model} needs N >= {model.min_sites}, got {self.N}")
        if self.K < 1 or self.N % self.K != 0:
            raise ValueError(f"K must divide N, got K={self.K}, N={self.N}")
        if not self.out_times:
            raise ValueError("need at least one output time")
        if any(t < 0 for t in self.out_times):
            raise ValueError("output times must be >= 0")
        if any(b <= a for a, b in zip(self.out_times, self.out_times[1:])):
            raise ValueError("output times must be strictly increasing")
        if self.replicas < 1:
            raise ValueError("need replicas >= 1")
        if self.engine not in ("thinning", "reference"):
            raise ValueError(f"engine must be 'thinning' or 'reference', got {self.engine!r}")

    @property
    def t_max(self) -> float:
        return self.out_times[-1]


@dataclass
class Trajectory:
    """Coarse-grained snapshots of every replica plus run bookkeeping."""

    config: SimulationConfig
    box_density: np.ndarray  # (replicas, times, K)
    events: np.ndarray  # (replicas,)
    attempts: np.ndarray  # (replicas,)
    blocked: np.ndarray  # (replicas,) bool
    t_block: np.ndarray  # (replicas,) macroscopic time the state froze (nan if it did not)
    generator: str = GENERATOR_NAME
    build: str = f"latgas {__version__}"
    wall_s: float = 0.0
    microstates: Optional[np.ndarray] = None  # (replicas, times, N) when kept

    @property
    def mean_density(self) -> np.ndarray:
        """Replica-averaged box densities, shape (times, K)."""
        return self.box_density.mean(axis=0)

    @property
    def any_blocked(self) -> bool:
        return bool(self.blocked.any())

    def box_centers(self) -> np.ndarray:
        K = self.config.K
        return (np.arange(K) + 0.5) / K


def _replica_generator(seed: int, replicas: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(replicas)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def sample_product_measure(profile: ProfileSpec, N: int, seed: int) -> Configuration:
    """Draw a configuration with independent sites, P(eta(x)=1) = rho(x/N)."""
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return Configuration(_sample_occ(profile, N, gen))


def _sample_occ(profile: ProfileSpec, N: int, gen: np.random.Generator) -> np.ndarray:
    target = profile.density(np.arange(N) / N)
    return (gen.random(N) < target).astype(np.uint8)


def coarse_grain(eta: Union[Configuration, np.ndarray], K: int) -> np.ndarray:
    """Mean occupancy of K equal boxes; K must divide the site count."""
    occ = eta.occupancies() if isinstance(eta, Configuration) else np.asarray(eta)
    N = occ.shape[-1]
    if N % K != 0:
        raise ValueError(f"K={K} does not divide N={N}")
    return occ.reshape(*occ.shape[:-1], K, N // K).mean(axis=-1)


# ---------------------------------------------------------------- reference path


@lru_cache(maxsize=None)
def _window_offsets(j: int, L: int) -> tuple[int, ...]:
    return Window(j, L).offsets


def _eff_rate_frac(model: ModelSpec, occ: np.ndarray, y: int) -> Fraction:
    N = len(occ)
    if occ[y] == occ[(y + 1) % N]:
        return Fraction(0)
    L = model.window_length
    w = model.weight_table
    num = 0
    for j in range(L + 1):
        m = 0
        for o in _window_offsets(j, L):
            m += occ[(y + o) % N]
        num += w[int(m)]
    return Fraction(num, model.scale)


class RateTable:
    """Fenwick tree over per-node effective rates (float64 leaves).

    Supports O(log N) rate updates and inverse-CDF sampling. Floating point
    drift between the tree and the leaf array is bounded by periodic exact
    rebuilds (every ``rebuild_every`` updates); ``audit()`` reports the
    current drift against the tolerance 1e-9 * N. With ``exact=True`` the
    table additionally keeps the exact rational rate of every node so tests
    can confirm the incremental state matches a from-scratch rebuild.
    """

    def __init__(self, model: ModelSpec, occ: np.ndarray, exact: bool = False,
                 rebuild_every: int = 4096):
        self.model = model
        self.N = len(occ)
        self.exact: Optional[list[Fraction]] = None
        rates = [_eff_rate_frac(model, occ, y) for y in range(self.N)]
        if exact:
            self.exact = list(rates)
        self.leaf = np.array([float(r) for r in rates], dtype=np.float64)
        self._positive = int(np.count_nonzero(self.leaf))
        self._ops = 0
        self.rebuild_every = int(rebuild_every)
        self._build()

    def _build(self) -> None:
        n = self.N
        tree = np.zeros(n + 1, dtype=np.float64)
        tree[1:] = self.leaf
        for i in range(1, n + 1):
            parent = i + (i & (-i))
            if parent <= n:
                tree[parent] += tree[i]
        self.tree = tree

    def rebuild(self) -> None:
        """Recompute the tree from the leaves, erasing accumulated drift."""
        self._build()
        self._ops = 0

    def total(self) -> float:
        i = self.N
        acc = 0.0
        while i > 0:
            acc += self.tree[i]
            i -= i & (-i)
        return acc

    @property
    def any_positive(self) -> bool:
        return self._positive > 0

    def set_rate(self, y: int, value: float, exact_value: Optional[Fraction] = None) -> None:
        old = self.leaf[y]
        if self.exact is not None:
            if exact_value is None:
                raise ValueError("exact table needs exact_value on every update")
            self.exact[y] = exact_value
        if value != old:
            self._positive += int(value != 0.0) - int(old != 0.0)
            delta = value - old
            self.leaf[y] = value
            i = y + 1
            n = self.N
            while i <= n:
                self.tree[i] += delta
                i += i & (-i)
        self._ops += 1
        if self._ops >= self.rebuild_every:
            self.rebuild()

    def sample(self, target: float) -> int:
        """Index y with prefix(y) <= target < prefix(y+1); clamps at the ends."""
        n = self.N
        idx = 0
        bit = 1 << (n.bit_length() - 1)
        rem = target
        while bit:
            nxt = idx + bit
            if nxt <= n and self.tree[nxt] <= rem:
                idx = nxt
                rem -= self.tree[nxt]
            bit >>= 1
        if idx >= n:
            idx = n - 1
        # float-edge guard: never return a zero-rate node
        while self.leaf[idx] == 0.0 and idx > 0:
            idx -= 1
        if self.leaf[idx] == 0.0:
            idx = int(np.argmax(self.leaf > 0.0))
        return idx

    def drift(self) -> float:
        return abs(self.total() - fsum(self.leaf.tolist()))

    def audit(self) -> dict:
        tol = 1e-9 * self.N
        d = self.drift()
        out = {"drift": d, "tol": tol, "ok": d <= tol, "ops_since_rebuild": self._ops}
        if self.exact is not None:
            out["leaves_match_exact"] = all(
                self.leaf[y] == float(self.exact[y]) for y in range(self.N)
            )
        return out


def gillespie_step(
    occ: np.ndarray, table: RateTable, rng: np.random.Generator
) -> Optional[tuple[int, float]]:
    """One exact Gillespie step; mutates occ and table.

    Returns (node, waiting time) or None when every rate is zero (the
    caller reports a frozen state; nothing crashes).
    """
    if not table.any_positive:
        return None
    R = table.total()
    dt = rng.standard_exponential() / R
    y = table.sample(rng.random() * R)
    N = len(occ)
    yn = (y + 1) % N
    occ[y], occ[yn] = occ[yn], occ[y]
    model = table.model
    L = model.window_length
    for z in range(y - L - 1, y + L + 2):
        zi = z % N
        r = _eff_rate_frac(model, occ, zi)
        table.set_rate(zi, float(r), r if table.exact is not None else None)
    return y, dt


def _run_reference(
    model: ModelSpec,
    occ: np.ndarray,
    out_times: np.ndarray,
    out_occ: np.ndarray,
    gen: np.random.Generator,
) -> tuple[int, float, int, int, float]:
    """Same contract as the thinning kernel, driven by RateTable sampling."""
    T = len(out_times)
    table = RateTable(model, occ)
    t = 0.0
    t_last = 0.0
    nev = 0
    oi = 0
    while oi < T and out_times[oi] <= 0.0:
        out_occ[oi] = occ
        oi += 1
    while oi < T:
        prev = occ.copy()
        step = gillespie_step(occ, table, gen)
        if step is None:
            for k in range(oi, T):
                out_occ[k] = occ
            return (STATUS_BLOCKED, t, nev, nev, t_last)
        _, dt = step
        t += dt
        while oi < T and out_times[oi] <= t:
            out_occ[oi] = prev
            oi += 1
        nev += 1
        t_last = t
    return (0, t, nev, nev, 0.0)


# ---------------------------------------------------------------- production path


def run_trajectory(
    config: SimulationConfig,
    threads: int = 1,
    keep_microstates: bool = False,
) -> Trajectory:
    """Simulate all replicas of a configuration; deterministic in the seed.

    Replica r always consumes child stream r of SeedSequence(seed), so the
    result does not depend on ``threads`` or scheduling.
    """
    t0 = _time.perf_counter()
    model = config.model
    N, K, R = config.N, config.K, config.replicas
    T = len(config.out_times)
    micro_times = np.asarray(config.out_times, dtype=np.float64) * (N * N)

    gens = _replica_generator(config.seed, R)
    box = np.empty((R, T, K), dtype=np.float64)
    micro = np.empty((R, T, N), dtype=np.uint8) if keep_microstates else None
    events = np.zeros(R, dtype=np.int64)
    attempts = np.zeros(R, dtype=np.int64)
    blocked = np.zeros(R, dtype=bool)
    t_block = np.full(R, np.nan, dtype=np.float64)

    kernel = kernel_for(model) if config.engine == "thinning" else None

    def _one(r: int) -> None:
        gen = gens[r]
        occ = _sample_occ(config.profile, N, gen)
        out_occ = np.empty((T, N), dtype=np.uint8)
        if kernel is not None:
            status, _, nev, natt, tb = kernel(occ, micro_times, out_occ, gen)
        else:
            status, _, nev, natt, tb = _run_reference(model, occ, micro_times, out_occ, gen)
        box[r] = out_occ.reshape(T, K, N // K).mean(axis=2)
        if micro is not None:
            micro[r] = out_occ
        events[r] = nev
        attempts[r] = natt
        if status == STATUS_BLOCKED:
            blocked[r] = True
            t_block[r] = tb / (N * N)

    _one(0)  # also warms the JIT before any thread fan-out
    rest = range(1, R)
    if threads > 1 and kernel is not None and R > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(_one, rest))
    else:
        for r in rest:
            _one(r)

    return Trajectory(
        config=config,
        box_density=box,
        events=events,
        attempts=attempts,
        blocked=blocked,
        t_block=t_block,
        wall_s=_time.perf_counter() - t0,
        microstates=micro,
    )


def monte_carlo_expectation(
    model: ModelLike,
    rho: float,
    samples: int = 20000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo estimate (mean, standard error) of the equilibrium
    exchange rate at density rho, on a torus of 4(L+2) sites.

    Cross-checks the exact enumeration in
    :func:`latgas.identities.check_expectation`; needs samples >= 100.
    """
    model = model if isinstance(model, ModelSpec) else parse_model(model)
    if samples < 100:
        raise ValueError("need samples >= 100")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {rho}")
    L = model.window_length
    M = 4 * (L + 2)
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    occ = (gen.random((samples, M)) < rho).astype(np.int64)
    w = np.asarray(model.weight_table, dtype=np.int64)
    num = np.zeros(samples, dtype=np.int64)
    for j in range(L + 1):
        cols = [o % M for o in _window_offsets(j, L)]
        num += w[occ[:, cols].sum(axis=1)]
    vals = num / model.scale
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / sqrt(samples))
    return est, se


# ---------------------------------------------------------------- output files


def sidecar_path(path: str) -> str:
    """Metadata JSON path for a CSV output: extension replaced by .json."""
    base, dot, ext = str(path).rpartition(".")
    if dot and ext.lower() == "csv":
        return f"{base}.json"
    return f"{path}.json"


def trajectory_metadata(traj: Trajectory) -> dict:
    """JSON-ready sidecar content. Wall time sits under 'timing' so
    determinism checks can drop that one key."""
    cfg = traj.config
    return {
        "model": str(cfg.model),
        "N": cfg.N,
        "K": cfg.K,
        "seed": cfg.seed,
        "replicas": cfg.replicas,
        "out_times": list(cfg.out_times),
        "engine": cfg.engine,
        "profile": str(cfg.profile),
        "generator": traj.generator,
        "build": traj.build,
        "events": traj.events.tolist(),
        "attempts": traj.attempts.tolist(),
        "blocked": traj.blocked.astype(int).tolist(),
        "t_block": [None if np.isnan(t) else t for t in traj.t_block.tolist()],
        "timing": {"wall_s": traj.wall_s},
    }


def write_trajectory_csv(traj: Trajectory, path_or_file) -> None:
    """replica,t_macro,box_index,box_center_u,density rows for every replica."""
    own = isinstance(path_or_file, (str, bytes))
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        cfg = traj.config
        f.write(f"# model={cfg.model}\n")
        f.write(f"# N={cfg.N} K={cfg.K} seed={cfg.seed} replicas={cfg.replicas}\n")
        f.write(f"# engine={cfg.engine} generator={traj.generator} build={traj.build}\n")
        f.write("replica,t_macro,box_index,box_center_u,density\n")
        centers = traj.box_centers()
        for r in range(cfg.replicas):
            for ti, t in enumerate(cfg.out_times):
                for b in range(cfg.K):
                    f.write(
                        f"{r},{t!r},{b},{float(centers[b])!r},"
                        f"{float(traj.box_density[r, ti, b])!r}\n"
                    )
    finally:
        if own:
            f.close()


def write_trajectory(traj: Trajectory, path: str) -> str:
    """Write the CSV and its JSON metadata sidecar; returns the sidecar path."""
    write_trajectory_csv(traj, path)
    side = sidecar_path(path)
    with open(side, "w") as f:
        json.dump(trajectory_metadata(traj), f, indent=2, sort_keys=True)
        f.write("\n")
    return side
