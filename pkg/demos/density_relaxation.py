"""Relax a step profile under three dynamics and compare against the PDE.

Each model is run at diffusive scaling from the same step initial data,
box densities are averaged over replicas, and the deterministic solution
of d_t rho = d_uu Phi(rho) is coarse-grained onto the same boxes. The L1
gap should shrink roughly like 1/sqrt(N * replicas).
"""

from latgas.hydro import compare_profiles, solve_pde
from latgas.simulate import SimulationConfig, run_trajectory

MODELS = ("ssep", "bernstein:n=1,L=2", "rpmm:l=1,L=2")


def main():
    times = (0.02, 0.05, 0.1)
    for model in MODELS:
        config = SimulationConfig(
            model=model,
            N=512,
            K=32,
            profile="step:left=0.8,right=0.2",
            out_times=times,
            replicas=6,
            seed=99,
        )
        traj = run_trajectory(config)
        sol = solve_pde(model, config.profile, times, M=128)
        total = int(traj.events.sum())
        print(f"{model}: {total} events over {config.replicas} replicas")
        print(f"  {'t':>6} {'L1':>9} {'Linf':>9}")
        for row in compare_profiles(traj, sol):
            print(f"  {row['t']:>6.3f} {row['L1']:>9.5f} {row['Linf']:>9.5f}")
        print()


if __name__ == "__main__":
    main()
