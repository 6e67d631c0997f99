from math import comb

import numpy as np
import pytest

from qfsplit.errors import DomainError
from qfsplit.monomials import (
    ExponentTuple,
    Packing,
    basis,
    match_complement,
    reduce_mod_p,
    wics,
    wics_packed,
)


def test_wics_small_example():
    got = set(wics(2, 3))
    assert got == {(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)}


def test_wics_is_lex_ascending():
    seq = wics(5, 3)
    assert list(seq) == sorted(seq)


def test_wics_counts():
    assert len(wics(16, 4)) == 969
    for k, n in [(0, 1), (0, 4), (3, 2), (8, 4), (12, 3)]:
        assert len(wics(k, n)) == comb(k + n - 1, n - 1)


def test_basis_sizes():
    assert len(basis(8, 4)) == 165
    assert len(basis(16, 4)) == 969
    assert len(basis(4, 4)) == 35


def test_basis_order_and_lookup():
    b = basis(8, 4)
    assert b.tuple_at(0) == (0, 0, 0, 8)
    assert b.tuple_at(len(b) - 1) == (8, 0, 0, 0)
    words = np.array(b.words)
    assert (np.diff(words.astype(np.int64)) > 0).all()
    for i in (0, 1, 17, 164):
        assert b.index_of(b.tuple_at(i)) == i
    idx = b.indices_of(b.words[::7])
    assert list(idx) == list(range(0, len(b), 7))
    with pytest.raises(DomainError):
        b.index_of((1, 1, 1, 1))


def test_packing_layout_for_k3_range():
    # worst exponent for quartics at p=13 is 4 * 13 * 12 = 624, under 2**10
    pk = Packing.for_max_exponent(4, 624)
    assert pk.field_width == 10
    assert pk.pack((1, 0, 0, 0)) == 1 << 30


def test_pack_unpack_roundtrip_randomized():
    rng = np.random.default_rng(3)
    for nvars, width in [(1, 10), (2, 20), (4, 10), (4, 16), (6, 10)]:
        pk = Packing(nvars, width)
        rows = rng.integers(0, pk.mask + 1, size=(200, nvars), dtype=np.uint64)
        words = pk.pack_rows(rows)
        assert (pk.unpack_rows(words) == rows.astype(np.int64)).all()
        for row in rows[:20]:
            t = tuple(int(v) for v in row)
            assert pk.unpack(pk.pack(t)) == t


def test_word_compare_is_lex_order():
    rng = np.random.default_rng(4)
    pk = Packing(4, 10)
    rows = rng.integers(0, 600, size=(300, 4))
    for i in range(0, 300, 2):
        a, b = tuple(rows[i]), tuple(rows[i + 1])
        assert (pk.pack(a) < pk.pack(b)) == (a < b)


def test_word_add_is_componentwise():
    rng = np.random.default_rng(5)
    pk = Packing(4, 10)
    a = rng.integers(0, 500, size=(100, 4), dtype=np.uint64)
    b = rng.integers(0, 500, size=(100, 4), dtype=np.uint64)
    words = pk.pack_rows(a) + pk.pack_rows(b)
    assert (pk.unpack_rows(words) == (a + b).astype(np.int64)).all()


def test_exponent_tuple_arithmetic():
    pk = Packing(4, 10)
    x = ExponentTuple.of(pk, (1, 4, 2, 3))
    y = ExponentTuple.of(pk, (2, 0, 5, 1))
    assert (x + y).exponents == (3, 4, 7, 4)
    assert (x + y - y).exponents == x.exponents
    assert x.total_degree == 10
    with pytest.raises(DomainError):
        _ = y - x
    assert x < y  # (1,...) before (2,...)


def test_field_ops_vectorized():
    pk = Packing(4, 10)
    rows = np.array([[21, 19, 22, 18], [0, 5, 10, 15], [624, 1, 0, 7]], dtype=np.uint64)
    words = pk.pack_rows(rows)
    assert (pk.unpack_rows(pk.field_mod(words, 5)) == rows.astype(np.int64) % 5).all()
    assert (pk.field_sum(words) == rows.sum(axis=1).astype(np.int64)).all()
    even = pk.pack_rows(rows - rows % np.uint64(5))
    assert (pk.unpack_rows(pk.field_div_exact(even, 5)) == (rows - rows % np.uint64(5)).astype(np.int64) // 5).all()


def test_reduce_mod_p_example():
    pk = Packing(4, 10)
    x = ExponentTuple.of(pk, (21, 19, 22, 18))
    assert reduce_mod_p(x, 5).exponents == (1, 4, 2, 3)


def test_match_complement_example():
    pk = Packing(4, 10)
    x = ExponentTuple.of(pk, (1, 4, 2, 3))
    assert match_complement(x, 5).exponents == (3, 0, 2, 1)
    with pytest.raises(DomainError):
        match_complement(ExponentTuple.of(pk, (5, 0, 0, 0)), 5)


def test_match_complement_reverses_lex_order():
    rng = np.random.default_rng(6)
    pk = Packing(4, 10)
    p = 7
    for _ in range(100):
        a = ExponentTuple.of(pk, tuple(rng.integers(0, p, 4)))
        b = ExponentTuple.of(pk, tuple(rng.integers(0, p, 4)))
        if a.word == b.word:
            continue
        assert (a < b) == (match_complement(b, p) < match_complement(a, p))


def test_complement_word_identity():
    # complement is a single word subtraction from the all-(p-1) word
    pk = Packing(4, 10)
    p = 13
    rng = np.random.default_rng(7)
    cap = pk.all_ones_word(p - 1)
    for _ in range(50):
        exps = tuple(int(v) for v in rng.integers(0, p, 4))
        x = ExponentTuple.of(pk, exps)
        assert cap - x.word == match_complement(x, p).word


def test_wics_packed_matches_wics():
    pk = Packing(3, 8)
    words = wics_packed(6, 3, pk)
    assert [pk.unpack(w) for w in words] == list(wics(6, 3))
    assert not words.flags.writeable


def test_packing_validation():
    with pytest.raises(DomainError):
        Packing(4, 17)
    with pytest.raises(DomainError):
        Packing(0, 8)
    pk = Packing(2, 4)
    with pytest.raises(DomainError):
        pk.pack((16, 0))
    with pytest.raises(DomainError):
        pk.pack((1, 2, 3))


def test_basis_rejects_foreign_degree():
    b = basis(8, 4)
    bad = np.array([b.packing.pack((1, 1, 1, 1))], dtype=np.uint64)
    with pytest.raises(DomainError):
        b.indices_of(bad)
