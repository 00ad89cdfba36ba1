import io
import json
import math

import numpy as np
import pytest

from latgas.hydro import (
    GridProfile,
    compare_profiles,
    flux_phi,
    initial_profile,
    max_diffusivity,
    pde_step,
    solve_pde,
    write_comparison,
    write_profile_csv,
)
from latgas.models import ModelSpec, canonical_diffusivity
from latgas.simulate import SimulationConfig, run_trajectory

MODELS = ["ssep", "pmm:n=2", "bernstein:n=1,L=2", "bernstein:n=2,L=4", "rpmm:l=2,L=4"]


@pytest.mark.parametrize("name", MODELS)
def test_flux_derivative_is_diffusivity(name):
    from latgas.models import parse_model

    phi = flux_phi(name)
    D = canonical_diffusivity(parse_model(name))
    h = 1e-6
    for rho in np.linspace(h, 1 - h, 100):
        num = (phi(rho + h) - phi(rho - h)) / (2 * h)
        assert abs(num - D(rho)) < 1e-6


@pytest.mark.parametrize("name", MODELS)
def test_flux_monotone_and_anchored(name):
    phi = flux_phi(name)
    assert phi(0.0) == 0.0
    grid = phi(np.linspace(0, 1, 10001))
    assert (np.diff(grid) >= -1e-15).all()


def test_flux_endpoint_values():
    assert abs(flux_phi("bernstein:n=2,L=4")(1.0) - 1 / 5) < 1e-15
    assert abs(flux_phi("bernstein:n=1,L=2")(1.0) - 1 / 3) < 1e-15
    assert abs(flux_phi("ssep")(1.0) - 1.0) < 1e-15
    assert abs(flux_phi("rpmm:l=1,L=2")(1.0) - 0.5) < 1e-15  # integral of rho


def test_max_diffusivity():
    assert max_diffusivity("ssep") == 1.0
    assert max_diffusivity("pmm:n=3") == 1.0  # monomial peaks at rho = 1
    assert abs(max_diffusivity("bernstein:n=1,L=2") - 0.5) < 1e-12  # at rho = 1/2
    b24 = max_diffusivity("bernstein:n=2,L=4")
    D = canonical_diffusivity(ModelSpec.bernstein(2, 4))
    assert abs(b24 - D(0.5)) < 1e-12  # symmetric family peaks at the center


def test_grid_profile_validation():
    with pytest.raises(ValueError):
        GridProfile(np.array([0.5, 0.5]))
    g = initial_profile("step:0.8,0.2", 64)
    assert g.M == 64
    assert g.values[0] == 0.8 and g.values[-1] == 0.2
    assert abs(g.mass() - 0.5) < 1e-15


def test_pde_step_rejects_unstable_dt():
    g = initial_profile("constant:0.5", 32)
    with pytest.raises(ValueError):
        pde_step(g.values, dt=1.0, du=g.du, phi=flux_phi("ssep"), max_D=1.0)


def test_pde_step_conserves_mass_exactly():
    g = initial_profile("step:0.8,0.2", 128)
    phi = flux_phi("bernstein:n=1,L=2")
    rho = g.values
    for _ in range(50):
        rho = pde_step(rho, dt=1e-5, du=g.du, phi=phi, max_D=0.5)
    assert abs(rho.mean() - g.values.mean()) < 1e-14


class TestSolve:
    def test_cosine_mode_decay_rate(self):
        # heat equation: the first Fourier mode decays like exp(-4 pi^2 t)
        sol = solve_pde("ssep", "cosine:mean=0.5,amplitude=0.2", (0.05,), M=256)
        t = sol.times_recorded[0]
        amp = (sol.profiles[0].max() - sol.profiles[0].min()) / 2
        want = 0.2 * math.exp(-4 * math.pi**2 * t)
        assert abs(amp - want) / want < 0.01

    def test_mass_conserved_over_many_steps(self):
        sol = solve_pde("ssep", "step:0.8,0.2", (0.05,), M=256)
        assert sol.times_recorded[0] / sol.dt >= 10**4  # enough steps to matter
        assert sol.mass_drift <= 1e-10

    def test_recorded_times_are_nearest_steps(self):
        sol = solve_pde("rpmm:l=1,L=2", "step:0.7,0.3", (0.011, 0.029), M=64)
        for want, got in zip(sol.times_requested, sol.times_recorded):
            assert abs(want - got) <= sol.dt / 2 + 1e-15

    def test_solution_respects_bounds(self):
        sol = solve_pde("bernstein:n=2,L=4", "step:0.9,0.1", (0.02, 0.1), M=128)
        assert sol.profiles.min() >= 0.1 - 1e-12
        assert sol.profiles.max() <= 0.9 + 1e-12

    def test_profiles_flatten_in_time(self):
        sol = solve_pde("pmm:n=2", "cosine:0.5,0.3", (0.01, 0.05, 0.2), M=128)
        spreads = [p.max() - p.min() for p in sol.profiles]
        assert spreads[0] > spreads[1] > spreads[2]

    def test_input_validation(self):
        with pytest.raises(ValueError):
            solve_pde("ssep", "constant:0.5", ())
        with pytest.raises(ValueError):
            solve_pde("ssep", "constant:0.5", (0.2, 0.1))
        with pytest.raises(ValueError):
            solve_pde("ssep", "constant:0.5", (0.1,), safety=1.5)


class TestCompare:
    def _pair(self, **over):
        kw = dict(model="ssep", N=64, K=8, profile="step:0.8,0.2",
                  out_times=(0.02, 0.05), replicas=6, seed=4)
        kw.update(over)
        cfg = SimulationConfig(**kw)
        traj = run_trajectory(cfg, threads=2)
        sol = solve_pde(cfg.model, cfg.profile, cfg.out_times, M=64)
        return traj, sol

    def test_report_rows(self):
        traj, sol = self._pair()
        rows = compare_profiles(traj, sol)
        assert [r["t"] for r in rows] == [0.02, 0.05]
        for r in rows:
            assert 0 <= r["L1"] <= 1
            assert r["L1"] <= r["Linf"]
            assert r["stderr"] > 0

    def test_requires_matching_times(self):
        traj, _ = self._pair()
        sol = solve_pde("ssep", "step:0.8,0.2", (0.05,), M=64)
        with pytest.raises(ValueError):
            compare_profiles(traj, sol)

    def test_requires_compatible_grids(self):
        traj, _ = self._pair()
        sol = solve_pde("ssep", "step:0.8,0.2", (0.02, 0.05), M=60)
        with pytest.raises(ValueError):
            compare_profiles(traj, sol)

    def test_single_replica_has_no_stderr(self):
        traj, sol = self._pair(replicas=1)
        rows = compare_profiles(traj, sol)
        assert math.isnan(rows[0]["stderr"])


def test_profile_csv_format():
    sol = solve_pde("ssep", "constant:0.5", (0.01,), M=16)
    buf = io.StringIO()
    write_profile_csv(sol, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# model=ssep")
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == "t_macro,grid_index,u,rho"
    assert len(body) == 1 + 16
    t, i, u, rho = body[1].split(",")
    assert float(rho) == 0.5


def test_comparison_json(tmp_path):
    out = tmp_path / "cmp.json"
    write_comparison([{"t": 0.1, "L1": 0.01, "Linf": 0.02, "stderr": 0.005}],
                     {"model": "ssep", "N": 64}, str(out))
    payload = json.loads(out.read_text())
    assert payload["model"] == "ssep"
    assert payload["times"][0]["L1"] == 0.01
