"""Check the equilibrium diffusivity curve by Monte Carlo.

The coefficient multiplying the Laplacian is the product-measure average
of the jump rate at density rho. Here that polynomial is evaluated on a
density grid and compared against a direct sampling estimate; agreement
within a few standard errors at every point is the expected outcome.
"""

from fractions import Fraction

from latgas.models import ModelSpec, canonical_diffusivity, expected_rate
from latgas.simulate import monte_carlo_expectation

MODELS = (
    ModelSpec.ssep(),
    ModelSpec.pmm(2),
    ModelSpec.bernstein(1, 2),
    ModelSpec.rpmm(1, 3),
)


def main():
    grid = [Fraction(k, 8) for k in range(1, 8)]
    for model in MODELS:
        D = canonical_diffusivity(model)
        print(f"{model}: D(rho) coefficients {[float(c) for c in D.coef]}")
        print(f"  {'rho':>5} {'exact':>9} {'sampled':>9} {'se':>8} {'pull':>6}")
        worst = 0.0
        for rho in grid:
            exact = float(expected_rate(model, rho))
            est, se = monte_carlo_expectation(model, float(rho), samples=40000,
                                              seed=7)
            pull = 0.0 if se == 0 else (est - exact) / se
            worst = max(worst, abs(pull))
            print(f"  {str(rho):>5} {exact:>9.5f} {est:>9.5f} {se:>8.5f} "
                  f"{pull:>6.2f}")
        print(f"  worst |pull| = {worst:.2f} standard errors\n")


if __name__ == "__main__":
    main()
