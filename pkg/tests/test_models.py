from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latgas.lattice import Configuration, shift
from latgas.models import (
    ModelSpec,
    alt_sum_tilde_c,
    canonical_diffusivity,
    current,
    effective_rate,
    exclusion,
    expected_rate,
    grad_H,
    monomial_bj,
    parse_model,
    rate,
    window_indicator,
)

# Worked single-node examples with known exact total rates. Each uses the
# node (4, 5) of a 12-site torus; the trailing zeros only pad the torus.
FIG_ETA = Configuration("001110111000")
FIG_ETA_SPARSE = Configuration("001110000000")


def test_pmm4_worked_example():
    assert rate(ModelSpec.pmm(4), FIG_ETA, 4) == Fraction(2, 5)


def test_bernstein24_worked_example():
    m = ModelSpec.bernstein(2, 4)
    assert rate(m, FIG_ETA, 4) == Fraction(1, 5)
    # window occupancies for this node, j = 0..4
    from latgas.lattice import window_count

    assert [window_count(FIG_ETA, 4, j, 4) for j in range(5)] == [3, 4, 4, 3, 2]


def test_rpmm24_worked_example():
    assert rate(ModelSpec.rpmm(2, 4), FIG_ETA_SPARSE, 4) == Fraction(1, 10)


def test_parse_round_trip():
    for text in ("ssep", "pmm:n=3", "bernstein:n=2,L=4", "rpmm:l=1,L=2"):
        assert str(parse_model(text)) == text


def test_parse_rejects_bad_specs():
    for bad in ("pmm", "pmm:n=0", "bernstein:n=3,L=2", "rpmm:l=0,L=2",
                "rpmm:l=3,L=2", "nosuch:n=1", "bernstein:n=1", "ssep:n=1"):
        with pytest.raises(ValueError):
            parse_model(bad)


def test_ssep_rate_is_exclusion():
    eta = Configuration("0101100110")
    m = ModelSpec.ssep()
    for x in range(10):
        assert rate(m, eta, x) == 1
        assert effective_rate(m, eta, x) == (eta.occupancy(x) != eta.occupancy(x + 1))
        assert exclusion(eta, x) == eta.occupancy(x) * (1 - eta.occupancy(x + 1))


def test_scales():
    assert ModelSpec.pmm(3).scale == 4
    assert ModelSpec.bernstein(1, 3).scale == 4
    assert ModelSpec.rpmm(2, 4).scale == 30  # (L+1) * C(L, l) = 5 * 6


def test_rate_bounds_and_translation_invariance():
    m = ModelSpec.rpmm(1, 2)
    eta = Configuration("1101001010")
    for x in range(10):
        r = rate(m, eta, x)
        assert 0 <= r <= 1
        assert rate(m, shift(eta, 1), x) == rate(m, eta, x + 1)


def test_interpolation_corners():
    # bernstein with L = n reproduces the contiguous-block model exactly
    eta = Configuration("01110110101101")
    for n in (1, 2, 3):
        b = ModelSpec.bernstein(n, n)
        p = ModelSpec.pmm(n)
        for x in range(eta.N):
            assert rate(b, eta, x) == rate(p, eta, x)


def test_monomial_equals_indicator():
    m = ModelSpec.bernstein(2, 3)
    eta = Configuration("0110110010")
    for x in range(10):
        for j in range(4):
            ind = window_indicator(m, eta, x, j)
            assert monomial_bj(eta, x, j, 2, 3) == ind
            assert ind in (0, 1)


@given(st.integers(0, 2**10 - 1), st.integers(0, 9))
def test_monomial_collapses_to_binary(bits, x):
    eta = Configuration.from_bits(bits, 10)
    assert monomial_bj(eta, x, 1, 1, 2) in (0, 1)


def test_gradient_pair_sums_to_current():
    eta = Configuration("0110100111")
    for m in (ModelSpec.bernstein(1, 2), ModelSpec.rpmm(2, 3)):
        for x in range(10):
            H_here = grad_H(m, eta, x)
            H_next = grad_H(m, eta, x + 1)
            assert current(m, eta, x) == H_here.total - H_next.total


def test_alt_sum_can_go_negative():
    # a single vacancy well placed next to the node drives the signed sum
    # below zero, so it cannot itself serve as a rate
    empty = Configuration([0] * 12)
    assert alt_sum_tilde_c(empty, 0, 1, 2) == 0
    full = Configuration([1] * 12)
    assert alt_sum_tilde_c(full, 0, 1, 2) == 0  # binomial cancellation
    occ = [1] * 8
    occ[4] = 0
    assert alt_sum_tilde_c(Configuration(occ), 0, 1, 2) == Fraction(-1, 4)


def test_alt_sum_nonnegative_when_k_at_most_n():
    # with k <= n every single-vacancy value stays >= 0
    for v in range(2, 10):
        occ = [1] * 10
        occ[v] = 0
        assert alt_sum_tilde_c(Configuration(occ), 0, 2, 1) >= 0


def test_canonical_diffusivity_polynomials():
    D = canonical_diffusivity(ModelSpec.ssep())
    assert D.degree() == 0 and D(0.7) == 1.0
    D = canonical_diffusivity(ModelSpec.pmm(2))
    assert abs(D(0.5) - 0.25) < 1e-15
    D = canonical_diffusivity(ModelSpec.rpmm(2, 4))
    assert abs(D(0.3) - 0.09) < 1e-15
    D = canonical_diffusivity(ModelSpec.bernstein(1, 2))
    assert abs(D(0.5) - 0.5) < 1e-15  # 2 rho (1-rho)


@given(st.sampled_from(["ssep", "pmm:n=2", "bernstein:n=1,L=3", "rpmm:l=2,L=3"]),
       st.fractions(min_value=0, max_value=1))
@settings(max_examples=60)
def test_expected_rate_matches_polynomial(name, rho):
    m = parse_model(name)
    exact = expected_rate(m, rho)
    D = canonical_diffusivity(m)
    assert abs(float(exact) - D(float(rho))) < 1e-12


def test_expected_rate_closed_forms():
    assert expected_rate(ModelSpec.rpmm(2, 4), Fraction(1, 3)) == Fraction(1, 9)
    assert expected_rate(ModelSpec.bernstein(2, 4), Fraction(1, 2)) == Fraction(6, 16)
    assert expected_rate(ModelSpec.pmm(3), Fraction(2, 5)) == Fraction(8, 125)


def test_min_sites_enforced():
    m = ModelSpec.bernstein(2, 4)
    with pytest.raises(ValueError):
        rate(m, Configuration("01010"), 0)
