"""Tour the finite state space: communicating classes, frozen states,
and the mobile cluster that certifies mass transport.

Constrained models fragment the configuration space: some states cannot
move at all, and particle sectors split into several communicating classes.
The two blocking mechanisms differ by family: a window that needs exactly
n particles freezes both overcrowded and overdiluted states, while the
binomial-weight family only freezes diluted ones.
"""

from latgas.graph import (
    build_graph,
    cluster_pattern,
    decompose,
    find_blocked,
    mass_transport_check,
    mobility_check,
    summary,
)
from latgas.lattice import Configuration
from latgas.models import ModelSpec


def main():
    N = 14
    for model in (ModelSpec.bernstein(2, 4), ModelSpec.rpmm(2, 4)):
        decomp = decompose(build_graph(model, N))
        s = summary(decomp)
        blocked = find_blocked(model, N)
        print(f"{model} on {N} sites: {s['states']} states, "
              f"{s['classes']} classes, {s['blocked']} blocked")

        one_hole = [1] * N
        one_hole[6] = 0
        print(f"  one hole frozen?        {Configuration(one_hole) in blocked}")
        print(f"  two far particles frozen? "
              f"{Configuration('10000001000000') in blocked}")

        pat = cluster_pattern(model)
        if pat.exact_particles is not None:
            print(f"  mobile cluster: exactly {pat.exact_particles} particles "
                  f"in a box of {pat.length}")
        else:
            print(f"  mobile cluster: >= {pat.min_particles} particles and a "
                  f"hole in a box of {pat.length}")
        mob = mobility_check(model, N, decomposition=decomp)
        mass = mass_transport_check(model, N, decomposition=decomp)
        print(f"  mobility: {mob.pairs_checked} moves in-class, "
              f"failures {mob.failure_count}")
        print(f"  mass transport: {mass.pairs_checked} exchanges in-class, "
              f"failures {mass.failure_count}\n")


if __name__ == "__main__":
    main()
