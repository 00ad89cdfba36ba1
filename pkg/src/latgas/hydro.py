"""Reference solver for the macroscopic density equation on the unit torus.

The limit equation is d_t rho = d_uu Phi(rho) with Phi the antiderivative of
the canonical diffusivity D (Phi(0) = 0). The solver is an explicit
finite-volume scheme in flux form on M equal cells,

    rho_i <- rho_i + (dt/du^2) (Phi(rho_{i+1}) - 2 Phi(rho_i) + Phi(rho_{i-1})),

which conserves mass to rounding because updates are differences of the same
flux values. Stability needs dt <= du^2 / (2 max D); the step function
refuses anything larger and the driver stays below it by a safety factor.
The discrete maximum principle (values confined to the initial range) is
monitored at every recording and a violation raises instead of clamping.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial

from .models import ModelSpec, canonical_diffusivity, parse_model
from .simulate import ProfileSpec, Trajectory, parse_profile

__all__ = [
    "GridProfile",
    "initial_profile",
    "flux_phi",
    "max_diffusivity",
    "pde_step",
    "PDESolution",
    "solve_pde",
    "compare_profiles",
    "write_profile_csv",
    "write_comparison",
]

ModelLike = Union[ModelSpec, str]

MAX_PRINCIPLE_TOL = 1e-12


@dataclass
class GridProfile:
    """Cell-centered density values on M equal cells of the unit torus."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or len(self.values) < 4:
            raise ValueError("need a 1-d grid with at least 4 cells")

    @property
    def M(self) -> int:
        return len(self.values)

    @property
    def du(self) -> float:
        return 1.0 / self.M

    def centers(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) / self.M

    def mass(self) -> float:
        return float(self.values.mean())


def initial_profile(profile: Union[ProfileSpec, str], M: int) -> GridProfile:
    spec = profile if isinstance(profile, ProfileSpec) else parse_profile(profile)
    return GridProfile(spec.density((np.arange(M) + 0.5) / M))


def flux_phi(model: ModelLike) -> Polynomial:
    """Antiderivative of the canonical diffusivity, normalized to Phi(0) = 0."""
    model = model if isinstance(model, ModelSpec) else parse_model(model)
    return canonical_diffusivity(model).integ(lbnd=0.0)


def max_diffusivity(model: ModelLike) -> float:
    """max of D over [0, 1], via critical points of the polynomial."""
    model = model if isinstance(model, ModelSpec) else parse_model(model)
    D = canonical_diffusivity(model)
    candidates = [0.0, 1.0]
    if D.degree() >= 1:
        for r in D.deriv().roots():
            if abs(r.imag) < 1e-12 and 0.0 <= r.real <= 1.0:
                candidates.append(float(r.real))
    return max(float(D(c)) for c in candidates)


def pde_step(rho: np.ndarray, dt: float, du: float, phi: Polynomial,
             max_D: float) -> np.ndarray:
    """One explicit update. Raises on a CFL violation instead of proceeding."""
    if max_D > 0 and dt > du * du / (2.0 * max_D) * (1.0 + 1e-12):
        raise ValueError(
            f"unstable step: dt={dt:g} exceeds du^2/(2 max D)={du*du/(2*max_D):g}"
        )
    f = phi(rho)
    lap = np.roll(f, -1) - 2.0 * f + np.roll(f, 1)
    return rho + (dt / (du * du)) * lap


@dataclass
class PDESolution:
    model: str
    M: int
    dt: float
    times_requested: tuple[float, ...]
    times_recorded: tuple[float, ...]  # actual step times, nearest to requested
    profiles: np.ndarray  # (times, M)
    mass_drift: float  # max |mean(t) - mean(0)| over recordings

    @property
    def du(self) -> float:
        return 1.0 / self.M

    def centers(self) -> np.ndarray:
        return (np.arange(self.M) + 0.5) / self.M


def solve_pde(
    model: ModelLike,
    profile: Union[ProfileSpec, str, GridProfile],
    out_times: Sequence[float],
    M: int = 256,
    safety: float = 0.4,
) -> PDESolution:
    """Integrate to the last output time, recording the step closest to each.

    ``safety`` scales the stability bound (dt = safety * du^2 / (2 max D)),
    so recorded times sit within dt/2 of the requested ones. Initial data may
    be a ProfileSpec (sampled at cell centers) or an explicit GridProfile.
    """
    model = model if isinstance(model, ModelSpec) else parse_model(model)
    times = tuple(float(t) for t in out_times)
    if not times or any(t < 0 for t in times):
        raise ValueError("output times must be nonempty and >= 0")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("output times must be strictly increasing")
    if not 0.0 < safety <= 1.0:
        raise ValueError("safety factor must lie in (0, 1]")

    grid = profile if isinstance(profile, GridProfile) else initial_profile(profile, M)
    rho = grid.values.copy()
    M = grid.M
    du = grid.du
    phi = flux_phi(model)
    mD = max_diffusivity(model)
    if mD <= 0.0:
        raise ValueError(f"{model} has vanishing diffusivity on [0, 1]")
    dt = safety * du * du / (2.0 * mD)

    lo = rho.min() - MAX_PRINCIPLE_TOL
    hi = rho.max() + MAX_PRINCIPLE_TOL
    mass0 = rho.mean()

    # number of steps whose time k*dt is nearest to each requested time
    targets = [int(round(t / dt)) for t in times]
    recorded = []
    profiles = np.empty((len(times), M), dtype=np.float64)
    drift = 0.0
    step = 0
    for ti, ksteps in enumerate(targets):
        while step < ksteps:
            rho = pde_step(rho, dt, du, phi, mD)
            step += 1
        if rho.min() < lo or rho.max() > hi:
            raise RuntimeError(
                f"maximum principle violated at step {step}: "
                f"range [{rho.min():g}, {rho.max():g}] left [{lo:g}, {hi:g}]"
            )
        profiles[ti] = rho
        recorded.append(step * dt)
        drift = max(drift, abs(float(rho.mean()) - float(mass0)))

    return PDESolution(
        model=str(model),
        M=M,
        dt=dt,
        times_requested=times,
        times_recorded=tuple(recorded),
        profiles=profiles,
        mass_drift=drift,
    )


def compare_profiles(traj: Trajectory, sol: PDESolution) -> list[dict]:
    """Replica-mean box densities against the PDE solution, per output time.

    The PDE grid is restricted to the simulation boxes by cell averaging
    (conservative since boxes are unions of cells), so M must be a multiple
    of K and both outputs must cover the same requested times. Returns one
    dict per time with keys t, L1, Linf and stderr (the replica-to-replica
    standard error of a box density, averaged over boxes).
    """
    cfg = traj.config
    if tuple(cfg.out_times) != tuple(sol.times_requested):
        raise ValueError(
            f"time grids differ: simulation {cfg.out_times} vs PDE {sol.times_requested}"
        )
    K = cfg.K
    if sol.M % K != 0:
        raise ValueError(f"box count K={K} must divide the PDE grid M={sol.M}")
    per = sol.M // K
    out = []
    R = cfg.replicas
    for ti, t in enumerate(cfg.out_times):
        pde_box = sol.profiles[ti].reshape(K, per).mean(axis=1)
        sim_box = traj.box_density[:, ti, :]  # (R, K)
        diff = sim_box.mean(axis=0) - pde_box
        if R > 1:
            se = float((sim_box.std(axis=0, ddof=1) / np.sqrt(R)).mean())
        else:
            se = float("nan")
        out.append(
            {
                "t": float(t),
                "L1": float(np.abs(diff).mean()),
                "Linf": float(np.abs(diff).max()),
                "stderr": se,
            }
        )
    return out


def write_profile_csv(sol: PDESolution, path_or_file) -> None:
    """t_macro,grid_index,u,rho rows for every recorded time."""
    own = isinstance(path_or_file, (str, bytes))
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        f.write(f"# model={sol.model}\n")
        f.write(f"# M={sol.M} dt={sol.dt!r} mass_drift={sol.mass_drift!r}\n")
        f.write("t_macro,grid_index,u,rho\n")
        centers = sol.centers()
        for ti, t in enumerate(sol.times_requested):
            for i in range(sol.M):
                f.write(f"{t!r},{i},{float(centers[i])!r},{float(sol.profiles[ti, i])!r}\n")
    finally:
        if own:
            f.close()


def write_comparison(results: list[dict], meta: dict, path: str) -> None:
    """JSON report for a simulation/PDE comparison run."""
    payload = dict(meta)
    payload["times"] = results
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
