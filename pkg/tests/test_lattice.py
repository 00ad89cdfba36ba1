import pytest
from hypothesis import given
from hypothesis import strategies as st

from latgas.lattice import (
    MAX_ENUMERATION_SITES,
    Configuration,
    Window,
    box_count,
    enumerate_configurations,
    format_configuration,
    parse_configuration,
    particle_hole,
    shift,
    swap,
    window_count,
)

configs = st.text(alphabet="01", min_size=2, max_size=24).map(Configuration)


def test_construction_equivalent_forms():
    a = Configuration("0110")
    b = Configuration([0, 1, 1, 0])
    c = Configuration.from_bits(0b0110, 4)
    assert a == b == c
    assert a.N == 4
    assert a.particles == 2
    assert a.string() == "0110"
    assert [a.occupancy(x) for x in range(4)] == [0, 1, 1, 0]


def test_occupancy_wraps():
    eta = Configuration("100")
    assert eta.occupancy(3) == 1
    assert eta.occupancy(-1) == 0


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_configuration("01201")
    with pytest.raises(ValueError):
        Configuration("")


def test_format_round_trip():
    s = "0100110101"
    assert format_configuration(parse_configuration(s)) == s


def test_lex_id_orders_strings():
    # site 0 is the most significant character, so string order == id order
    etas = list(enumerate_configurations(4))
    ids = [e.lex_id for e in etas]
    assert ids == sorted(ids)
    strings = [e.string() for e in etas]
    assert strings == sorted(strings)


def test_shift_semantics():
    eta = Configuration("110010")
    one = shift(eta, 1)
    assert all(one.occupancy(x) == eta.occupancy(x + 1) for x in range(6))


@given(configs, st.integers(-30, 30), st.integers(-30, 30))
def test_shift_composes(eta, j, k):
    assert shift(shift(eta, j), k) == shift(eta, j + k)


@given(configs, st.integers(0, 40))
def test_swap_is_involution(eta, x):
    assert swap(swap(eta, x), x) == eta


def test_swap_preserves_particles():
    eta = Configuration("0101100")
    for x in range(7):
        assert swap(eta, x).particles == eta.particles


@given(configs)
def test_particle_hole_involution(eta):
    assert particle_hole(particle_hole(eta)) == eta
    assert particle_hole(eta).particles == eta.N - eta.particles


def test_window_offsets_exclude_node():
    for L in range(1, 6):
        for j in range(L + 1):
            offs = Window(j, L).offsets
            assert len(offs) == L
            assert set(offs) == set(range(-j, -j + L + 2)) - {0, 1}
    with pytest.raises(ValueError):
        Window(3, 2)


def test_window_straddles_node():
    # every window contains sites on both sides of the node once 0 < j < L+1
    offs = Window(1, 2).offsets
    assert any(o < 0 for o in offs) and any(o > 1 for o in offs)


def test_window_count_against_direct_sum():
    eta = Configuration("0011101011")
    for x in range(10):
        for j in range(4):
            want = sum(eta.occupancy(x + o) for o in Window(j, 3).offsets)
            assert window_count(eta, x, j, 3) == want


def test_window_count_needs_room():
    with pytest.raises(ValueError):
        window_count(Configuration("010"), 0, 0, 2)


def test_box_count_matches_windows_plus_node():
    # box [x-j, x-j+L+1] = window j + the two node sites
    eta = Configuration("1011001110")
    L = 3
    for x in range(10):
        node = eta.occupancy(x) + eta.occupancy(x + 1)
        for j in range(L + 1):
            assert box_count(eta, x - j, L + 1) == window_count(eta, x, j, L) + node


def test_enumeration_is_complete_and_ordered():
    etas = list(enumerate_configurations(5))
    assert len(etas) == 32
    assert len(set(etas)) == 32
    assert [e.lex_id for e in etas] == list(range(32))


def test_enumeration_cap():
    with pytest.raises(ValueError):
        list(enumerate_configurations(MAX_ENUMERATION_SITES + 1))


def test_hashable_and_usable_in_sets():
    pool = {Configuration("01"), Configuration("01"), Configuration("10")}
    assert len(pool) == 2
