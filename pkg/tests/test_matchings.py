import pytest
from hypothesis import given, strategies as st

from ginibre_lab.matchings import (PinchPair, balanced_spin_circles, brute_force_count, catalan,
                                   count_constrained_ncm, limiting_moment, pinch_pairs,
                                   pinch_recursion_value, spin_circle)
from ginibre_lab.sampling import MomentSignature

P, M = 1, -1


def sig(text):
    return MomentSignature.parse(text)


def test_spin_circle_examples():
    assert spin_circle(sig("(2,2);(2,2)")) == (P, P, M, M, P, P, M, M)
    assert spin_circle(sig("(1);(1)")) == (P, M)
    assert spin_circle(sig("(0);(0)")) == ()


def test_pinch_pairs_examples():
    pairs = pinch_pairs((P, P, M, M, P, P, M, M))
    # pairing the first +1 with the -1 at position 3 (1-based)
    assert PinchPair((P,), (M, P, P, M, M)) in pairs
    assert pinch_pairs((P, M)) == [PinchPair((), ())]
    assert pinch_pairs((P, M, P, M)) == [PinchPair((), (P, M)), PinchPair((M, P), ())]
    assert pinch_pairs((M, M)) == []


@pytest.mark.parametrize("spins,expected", [
    ((P, P, M, M, P, P, M, M), 3),
    ((P, M), 1),
    ((P, M, P, M), 2),
    ((P, P, M, M), 1),
    ((), 1),
    ((P, P, M), 0),
    ((P, P), 0),
])
def test_count_examples(spins, expected):
    assert count_constrained_ncm(spins) == expected


@pytest.mark.parametrize("m,expected", [(0, 1), (1, 1), (2, 2), (3, 5), (4, 14), (10, 16796)])
def test_catalan(m, expected):
    assert catalan(m) == expected


def test_catalan_big_integers():
    assert catalan(40) == 2622127042276492108820
    assert count_constrained_ncm((P, M) * 40) == catalan(40)


@pytest.mark.parametrize("text,expected", [("(2,2);(2,2)", 3), ("(3);(2)", 0), ("(2);(2)", 1),
                                           ("(1,1);(1,1)", 2), ("(1);(1)", 1)])
def test_limiting_moment_examples(text, expected):
    assert limiting_moment(sig(text)) == expected


@pytest.mark.parametrize("R", [0, 2, 4, 6, 8, 10])
def test_dp_equals_brute_force(R):
    for spins in balanced_spin_circles(R):
        assert count_constrained_ncm(spins) == brute_force_count(spins)


@pytest.mark.parametrize("R", [2, 4, 6, 8, 10, 12])
def test_pinching_recursion(R):
    for spins in balanced_spin_circles(R):
        assert count_constrained_ncm(spins) == pinch_recursion_value(spins)


spin_lists = st.lists(st.sampled_from([P, M]), min_size=0, max_size=16)


@given(spin_lists)
def test_bounded_by_catalan_with_equality_for_alternating(spins):
    spins = tuple(spins)
    c = count_constrained_ncm(spins)
    if len(spins) % 2 or sum(spins):
        assert c == 0
        return
    cat = catalan(len(spins) // 2)
    assert c <= cat
    alternating = all(spins[i] != spins[(i + 1) % len(spins)] for i in range(len(spins)))
    assert (c == cat) == alternating


@given(spin_lists, st.integers(0, 20))
def test_rotation_invariance(spins, shift):
    spins = tuple(spins)
    if not spins:
        return
    s = shift % len(spins)
    assert count_constrained_ncm(spins[s:] + spins[:s]) == count_constrained_ncm(spins)


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=4), st.integers(0, 3))
def test_block_rotation_of_signature(blocks, shift):
    s = shift % len(blocks)
    rot = blocks[s:] + blocks[:s]
    a = MomentSignature(tuple(b[0] for b in blocks), tuple(b[1] for b in blocks))
    b = MomentSignature(tuple(b[0] for b in rot), tuple(b[1] for b in rot))
    assert limiting_moment(a) == limiting_moment(b)


@given(spin_lists)
def test_pinch_pair_lengths(spins):
    spins = tuple(spins)
    for pp in pinch_pairs(spins):
        assert len(pp.left) + len(pp.right) == len(spins) - 2
