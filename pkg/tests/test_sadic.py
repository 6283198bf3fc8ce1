import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import rand_point
from mcfsadic.core import Substitution, abelianize, format_word, mat_vec
from mcfsadic.errors import NoNestedSeed, Unsaturated
from mcfsadic.mcf import CassaigneSelmer, ar_substitution, expand
from mcfsadic.sadic import (DirectiveSequence, balance, balance_constant, factor_complexity, language,
                            limit_word_bytes, limit_word_prefix, saturating_depth, seed_chain)

PERIODIC_123 = DirectiveSequence.periodic([Substitution.parse("1->123;2->123;3->123")])


def brute_factors(word: bytes, m: int) -> set:
    return {word[k:k + m] for k in range(len(word) - m + 1)}


def brute_balance(words, m, d):
    """max over pairs of equal-length factors of the count difference, per letter (quadratic oracle)."""
    facs = set()
    for w in words:
        facs |= brute_factors(w, m)
    counts = [abelianize(f, d) for f in facs]
    return [max(c[i] for c in counts) - min(c[i] for c in counts) for i in range(d)]


# ---------------------------------------------------------------- limit words

def test_limit_word_examples(tau_seq, trib_seq):
    assert format_word(limit_word_prefix(tau_seq, 9)) == "132121312"
    assert format_word(limit_word_prefix(trib_seq, 7)) == "1213121"
    assert limit_word_prefix(tau_seq, 0) == ()


def test_limit_word_is_fixed_point_prefix(tau_seq):
    w = limit_word_bytes(tau_seq, 5000)
    tau = tau_seq[0] @ tau_seq[1]
    assert tau.apply_bytes(w)[:5000] == w


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3000), st.integers(1, 3000))
def test_limit_word_prefix_stability(n1, n2):
    cs = CassaigneSelmer()
    D = DirectiveSequence.from_expansion(cs, rand_point(2))
    a, b = sorted((n1, n2))
    assert limit_word_bytes(D, b)[:a] == limit_word_bytes(D, a)


def test_limit_word_abelianization_matches_cocycle(tau_seq):
    for n in (4, 9, 14):
        chain = seed_chain(tau_seq, n)
        if chain[n] != 1:
            continue
        L = len(tau_seq.image(n, 1))
        w = limit_word_prefix(tau_seq, L)
        assert abelianize(w, 3) == mat_vec(tau_seq.product(n), (1, 0, 0))


def test_no_nested_seed_for_non_growing_sequence():
    D = DirectiveSequence.periodic([Substitution.identity(3)])
    with pytest.raises(NoNestedSeed):
        limit_word_prefix(D, 10)


# ---------------------------------------------------------------- sequences

def test_cf_sequence_products_match_expansion(cs):
    x = rand_point(4)
    D = DirectiveSequence.from_expansion(cs, x)
    rec = expand(cs, x, 25)
    assert [D.cell(k) for k in range(25)] == rec.cells
    assert D.product(25) == rec.products[25]
    assert D.source == "cf"


def test_shift_and_explicit_sources(tau_seq, cs):
    D = DirectiveSequence.explicit([cs.GAMMA[2]], [cs.GAMMA[1], cs.GAMMA[2]])
    assert D.source == "explicit" and D[0] == cs.GAMMA[2] and D[1] == cs.GAMMA[1] and D[4] == cs.GAMMA[2]
    S = D.shift(1)
    assert S.source == "shift" and all(S[k] == tau_seq[k] for k in range(10))
    finite = DirectiveSequence.explicit([cs.GAMMA[1]])
    with pytest.raises(IndexError):
        finite[1]


# ---------------------------------------------------------------- languages

def test_language_examples(tau_seq):
    t1 = language(tau_seq, 1, 10)
    assert {bytes(w) for w in t1.words(1)} == {b"\x01", b"\x02", b"\x03"}
    assert language(tau_seq, 2, 12).complexity() == [3, 5]
    t = language(PERIODIC_123, 3, 4)
    assert {format_word(w) for w in t.words(3)} == {"123", "231", "312"}
    assert factor_complexity(PERIODIC_123, 6, 4) == [3] * 6


def test_language_matches_long_prefix(tau_seq):
    depth = saturating_depth(tau_seq, 12)
    table = language(tau_seq, 12, depth)
    w = limit_word_bytes(tau_seq, 200_000)
    for m in range(1, 13):
        assert table.factors[m] == brute_factors(w, m)


def test_complexity_cs_point():
    cs = CassaigneSelmer()
    D = DirectiveSequence.from_expansion(cs, rand_point(1))
    depth = saturating_depth(D, 10)
    assert factor_complexity(D, 10, depth) == [2 * n + 1 for n in range(1, 11)]


def test_complexity_ar4_sequence():
    rng = random.Random(3)
    seq = [1, 2, 3, 4] + [rng.randint(1, 4) for _ in range(300)]
    D = DirectiveSequence.explicit([ar_substitution(i, 4) for i in seq])
    depth = saturating_depth(D, 8)
    assert factor_complexity(D, 8, depth) == [3 * n + 1 for n in range(1, 9)]


def test_unsaturated_table_raises(tau_seq):
    with pytest.raises(Unsaturated):
        factor_complexity(tau_seq, 12, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_complexity_monotone_and_bounded(seed):
    cs = CassaigneSelmer()
    D = DirectiveSequence.from_expansion(cs, rand_point(seed))
    depth = saturating_depth(D, 8)
    p = factor_complexity(D, 8, depth)
    assert all(b >= a for a, b in zip(p, p[1:]))
    assert all(b <= 3 * a for a, b in zip(p, p[1:]))


# ---------------------------------------------------------------- balance

def test_balance_periodic_word():
    rep = balance(PERIODIC_123, 30, 4)
    assert rep.letters == [1, 1, 1]


def test_balance_one_letter():
    D = DirectiveSequence.periodic([Substitution([(1, 1)])])
    assert balance(D, 10, 6).letters == [0]


def test_balance_matches_brute_force(tau_seq):
    depth = saturating_depth(tau_seq, 40)
    rep = balance(tau_seq, 40, depth)
    words = tau_seq.images(depth)
    expect = [0, 0, 0]
    for m in range(1, 41):
        expect = [max(a, b) for a, b in zip(expect, brute_balance(words, m, 3))]
    assert rep.letters == expect


def test_balance_constant_of_tau_is_stable(tau_seq):
    c200, d200 = balance_constant(tau_seq, 200)
    c400, d400 = balance_constant(tau_seq, 400)
    # regression fixture recorded from the first computation
    assert c200 == c400 == 2
    assert d400 >= d200


def test_balance_on_factors_regression(tau_seq):
    depth = saturating_depth(tau_seq, 200)
    values = balance(tau_seq, 200, depth, factors_up_to=3).factors
    assert values["212"] == 3
    assert all(c == 2 for v, c in values.items() if v != "212")


def test_balance_monotone_in_depth(tau_seq):
    d0 = saturating_depth(tau_seq, 60)
    a = balance(tau_seq, 60, d0).letters
    b = balance(tau_seq, 60, d0 + 6).letters
    assert all(x <= y for x, y in zip(a, b))
