"""Scan the alternating window-average combination for negative values.

alt_sum_tilde_c combines pmm rates of consecutive orders with signed
binomial weights. Over configurations that are full except for one vacancy,
the scan shows how the minimum depends on the alternation depth k: positive
at k = 0, exactly zero at k = 1, strictly negative from k = 2 on.
"""

from latgas.identities import negativity_profile, negativity_search


def main():
    for n, k in ((1, 0), (1, 1), (1, 2), (2, 2), (2, 4)):
        N = max(2 * (n + k) + 2, 8)
        res = negativity_search(n, k, N)
        print(f"n={n} k={k} (N={N}): min {res.value} at vacancy site {res.site}")

    print("\nFull profile for n=1, k=2 on 8 sites (node at (0, 1)):")
    for site, value in negativity_profile(1, 2, 8):
        bar = "#" * int(24 * float(abs(value)))
        sign = "-" if value < 0 else " "
        print(f"  vacancy at {site}: {str(value):>6} {sign}{bar}")

    print("\nThe profile is symmetric under reflection through the node,")
    print("site v pairs with 1 - v (mod N).")


if __name__ == "__main__":
    main()
