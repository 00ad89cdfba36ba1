"""Walk through the three worked single-node rate computations.

Each example evaluates the exchange rate of the node (4, 5) on a 12-site
torus and shows where every contribution comes from.
"""

from latgas import Configuration, ModelSpec, Window, rate, window_count


def show(model, eta, x):
    L = model.window_length
    print(f"\n{model}  on  {eta.string()}  at node ({x}, {x + 1})")
    for j in range(L + 1):
        sites = Window(j, L).sites(x, eta.N)
        m = window_count(eta, x, j, L)
        marks = "".join(str(eta.occupancy(s)) for s in sites)
        print(f"  window j={j}: sites {sites} contents {marks} -> m_j = {m}")
    r = rate(model, eta, x)
    print(f"  rate = {r}")
    return r


def main():
    eta = Configuration("001110111000")
    assert show(ModelSpec.pmm(4), eta, 4) == rate(ModelSpec.pmm(4), eta, 4)
    show(ModelSpec.bernstein(2, 4), eta, 4)

    sparse = Configuration("001110000000")
    show(ModelSpec.rpmm(2, 4), sparse, 4)

    print("\nThe same configurations under ssep (rate is 1 whenever the node")
    print("occupancies differ):")
    show(ModelSpec.ssep(), eta, 4)


if __name__ == "__main__":
    main()
