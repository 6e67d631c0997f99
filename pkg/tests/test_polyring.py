"""Polynomial arithmetic, the splitting operator, and the carry map."""

import numpy as np
import pytest

from qfsplit.errors import DomainError, ParseError
from qfsplit.monomials import basis
from qfsplit.polyring import (
    DenseVector,
    SparsePoly,
    delta1,
    fedder_survives,
    from_dense,
    lift_to_integers,
    parse_poly,
    parse_poly_compact,
    parse_poly_text,
    poly_to_compact,
    poly_to_text,
    power_mod_p,
    reduce_mod,
    schoolbook_mul,
    split_u,
    to_dense,
    _mul_mod,
)

FERMAT4 = "x1^4+x2^4+x3^4+x4^4"


def random_poly(rng, nvars, degree, modulus, density=0.5):
    b = basis(degree, nvars)
    vals = rng.integers(0, modulus, size=len(b), dtype=np.uint64)
    vals[rng.random(len(b)) > density] = 0
    return from_dense(DenseVector(b, vals), modulus)


class TestParser:
    def test_fermat_text(self):
        n, terms = parse_poly_text(FERMAT4)
        assert n == 4
        assert terms == [
            ((4, 0, 0, 0), 1),
            ((0, 4, 0, 0), 1),
            ((0, 0, 4, 0), 1),
            ((0, 0, 0, 4), 1),
        ]

    def test_coefficients_and_repeats(self):
        n, terms = parse_poly_text("3*x1*x2^2 + x2^2*x1 + 7")
        assert n == 2
        f = SparsePoly.from_terms(n, terms, modulus=11)
        assert f.coefficient((1, 2)) == 4
        assert f.coefficient((0, 0)) == 7

    def test_whitespace_insensitive(self):
        a = parse_poly(" x1 ^ 2 * x2 + 5 ", modulus=7)
        b = parse_poly("x1^2*x2+5", modulus=7)
        assert a == b

    def test_explicit_nvars_pads(self):
        f = parse_poly("x1^4", nvars=4, modulus=5)
        assert f.nvars == 4
        assert f.coefficient((4, 0, 0, 0)) == 1

    def test_reports_position(self):
        with pytest.raises(ParseError) as e:
            parse_poly_text("x1^4 - x2")
        assert e.value.position == 5
        assert "(position 5)" in str(e.value)

    def test_caret_needs_integer(self):
        with pytest.raises(ParseError):
            parse_poly_text("x1^")
        with pytest.raises(ParseError):
            parse_poly_text("x1^x2")

    def test_trailing_plus(self):
        with pytest.raises(ParseError):
            parse_poly_text("x1 +")

    def test_empty(self):
        with pytest.raises(ParseError):
            parse_poly_text("   ")

    def test_nvars_too_small(self):
        with pytest.raises(ParseError):
            parse_poly_text("x3", nvars=2)

    def test_compact_basic(self):
        n, terms = parse_poly_compact("2:1,0\n1:0,3")
        assert n == 2
        assert terms == [((1, 0), 2), ((0, 3), 1)]

    def test_compact_semicolons_and_comments(self):
        n, terms = parse_poly_compact("# quartic\n1:4,0,0,0; 1:0,4,0,0")
        assert n == 4
        assert len(terms) == 2

    def test_compact_ragged(self):
        with pytest.raises(ParseError):
            parse_poly_compact("1:1,2\n1:1,2,3")

    def test_parse_dispatch(self):
        assert parse_poly("1:4,0,0,0", modulus=5) == parse_poly(
            "x1^4", nvars=4, modulus=5
        )


class TestFormat:
    def test_text_roundtrip(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            f = random_poly(rng, 3, 4, 11)
            assert parse_poly(poly_to_text(f), nvars=3, modulus=11) == f

    def test_compact_roundtrip(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            f = random_poly(rng, 4, 4, 7)
            assert parse_poly(poly_to_compact(f), modulus=7) == f

    def test_zero_renders(self):
        z = SparsePoly.zero(4, 4, modulus=5)
        assert poly_to_text(z) == "0"

    def test_leading_terms_first(self):
        f = parse_poly("x1 + x2^3", modulus=5)
        assert poly_to_text(f) == "x1 + x2^3"


class TestArithmetic:
    def test_mul_matches_schoolbook(self):
        rng = np.random.default_rng(21)
        for p in (3, 5, 13):
            for _ in range(10):
                a = random_poly(rng, 3, int(rng.integers(1, 4)), p)
                b = random_poly(rng, 3, int(rng.integers(1, 4)), p)
                got = _mul_mod(a, b)
                want = reduce_mod(
                    schoolbook_mul(lift_to_integers(a), lift_to_integers(b)), p
                )
                assert got == want

    def test_power_small_cases(self):
        f = parse_poly("x1+x2", modulus=3)
        cube = power_mod_p(f, 3)
        # (x+y)^3 = x^3 + y^3 over F_3
        assert cube == parse_poly("x1^3+x2^3", modulus=3)

    def test_power_zero_exponent(self):
        f = parse_poly(FERMAT4, modulus=5)
        assert power_mod_p(f, 0) == parse_poly("1", nvars=4, modulus=5)

    def test_power_matches_iterated_mul(self):
        rng = np.random.default_rng(22)
        f = random_poly(rng, 3, 2, 7)
        g = f
        for k in range(2, 6):
            g = _mul_mod(g, f)
            assert power_mod_p(f, k) == g

    def test_multinomial_coefficient(self):
        # (x1^4+x2^4+x3^4+x4^4)^3 has coefficient 3! = 6 on x1^4*x2^4*x3^4
        f = lift_to_integers(parse_poly(FERMAT4, modulus=7))
        cube = schoolbook_mul(schoolbook_mul(f, f), f)
        assert cube.coefficient((4, 4, 4, 0)) == 6
        assert cube.coefficient((12, 0, 0, 0)) == 1

    def test_lift_reduce_roundtrip(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            f = random_poly(rng, 4, 4, 11)
            assert reduce_mod(lift_to_integers(f), 11) == f

    def test_mismatched_moduli(self):
        a = parse_poly("x1", modulus=3)
        b = parse_poly("x1", modulus=5)
        with pytest.raises(DomainError):
            _mul_mod(a, b)

    def test_zero_degree_tracking(self):
        z = SparsePoly.zero(2, 5, modulus=3)
        f = parse_poly("x1+x2", modulus=3)
        prod = _mul_mod(z, f)
        assert prod.is_zero and prod.degree == 6


class TestSplit:
    def test_perfect_block_maps_to_one(self):
        f = parse_poly("x1^2*x2^2*x3^2*x4^2", modulus=3)
        u = split_u(f)
        assert u == parse_poly("1", nvars=4, modulus=3)

    def test_nonmatching_term_dies(self):
        f = parse_poly("x1^3", nvars=4, modulus=3)
        assert split_u(f).is_zero

    def test_mixed_terms(self):
        f = parse_poly("x1^2*x2^2*x3^2*x4^2 + 2*x1^5*x2^2*x3^2*x4^2 + x1^4", modulus=3)
        u = split_u(f)
        assert u == parse_poly("1 + 2*x1", nvars=4, modulus=3)

    def test_exponent_division(self):
        # exponents 3a + 2 map to a
        f = parse_poly("x1^8*x2^5*x3^2*x4^2", modulus=3)
        u = split_u(f)
        assert u == parse_poly("x1^2*x2", nvars=4, modulus=3)

    def test_semilinearity(self):
        # u(m^p * f) = m * u(f) for a monomial m
        rng = np.random.default_rng(31)
        p = 3
        for _ in range(10):
            f = random_poly(rng, 4, 8, p)
            exps = tuple(int(e) for e in rng.integers(0, 3, size=4))
            m = SparsePoly.from_terms(4, [(exps, 1)], modulus=p)
            mp = SparsePoly.from_terms(
                4, [(tuple(e * p for e in exps), 1)], modulus=p
            )
            assert split_u(_mul_mod(mp, f)) == _mul_mod(m, split_u(f))

    def test_degree_of_zero_result(self):
        f = parse_poly("x1^3", nvars=4, modulus=3)
        u = split_u(f)
        # (3 - 4*2)/3 clamps to zero
        assert u.degree == 0


class TestFedder:
    def test_fermat_p3_fails(self):
        f = parse_poly(FERMAT4, modulus=3)
        g = power_mod_p(f, 2)
        assert not fedder_survives(g)

    def test_fermat_p5_survives(self):
        f = parse_poly(FERMAT4, modulus=5)
        g = power_mod_p(f, 4)
        # multinomial 4!/(1,1,1,1) = 24 = 4 mod 5
        assert g.coefficient((4, 4, 4, 4)) == 4
        assert fedder_survives(g)

    def test_zero_fails(self):
        assert not fedder_survives(SparsePoly.zero(4, 8, modulus=3))

    def test_wrong_degree_rejected(self):
        g = parse_poly("x1^4", nvars=4, modulus=3)
        with pytest.raises(DomainError):
            fedder_survives(g)


class TestDelta1:
    def test_binary_hand_case(self):
        # delta1(x + y) over F_2: ((x+y)^2 - x^2 - y^2)/2 = xy
        f = parse_poly("x1+x2", modulus=2)
        assert delta1(f, backend="schoolbook") == parse_poly("x1*x2", modulus=2)

    def test_fermat_p3_closed_form(self):
        # multinomials of (a+b+c+d)^3: pure cubes cancel against the
        # corrections, (2,1) patterns give 3/3 = 1, (1,1,1) give 6/3 = 2
        f = parse_poly(FERMAT4, modulus=3)
        d = delta1(f, backend="schoolbook")
        expect = {}
        for i in range(4):
            for j in range(4):
                if i != j:
                    e = [0, 0, 0, 0]
                    e[i] = 8
                    e[j] = 4
                    expect[tuple(e)] = 1
        for i in range(4):
            for j in range(i + 1, 4):
                for k in range(j + 1, 4):
                    e = [0, 0, 0, 0]
                    e[i] = e[j] = e[k] = 4
                    expect[tuple(e)] = 2
        assert dict(d.terms()) == expect
        assert d.degree == 12 and len(d) == 16

    def test_square_expansion_before_carry(self):
        # the 10 term expansion of f^2 mod 3 behind the p=3 Fedder test
        f = parse_poly(FERMAT4, modulus=3)
        g = power_mod_p(f, 2)
        assert len(g) == 10
        assert g.coefficient((8, 0, 0, 0)) == 1
        assert g.coefficient((4, 4, 0, 0)) == 2
        assert g.coefficient((0, 4, 0, 4)) == 2

    def test_scalar_case(self):
        # constants: delta1(c) = (c^p - c^p)/p = 0
        f = parse_poly("2", nvars=3, modulus=5)
        assert delta1(f, backend="schoolbook").is_zero

    def test_monomial_case(self):
        # single terms always cancel exactly
        f = parse_poly("2*x1^3*x2", modulus=7)
        d = delta1(f, backend="schoolbook")
        assert d.is_zero and d.degree == 28

    def test_requires_modulus(self):
        f = lift_to_integers(parse_poly("x1", modulus=3))
        with pytest.raises(DomainError):
            delta1(f)

    def test_unknown_backend(self):
        f = parse_poly("x1", modulus=3)
        with pytest.raises(DomainError):
            delta1(f, backend="fft")


class TestDense:
    def test_roundtrip(self):
        rng = np.random.default_rng(41)
        b = basis(4, 4)
        for _ in range(10):
            f = random_poly(rng, 4, 4, 7)
            v = to_dense(f, b)
            assert from_dense(v, 7) == f

    def test_zero_poly(self):
        b = basis(4, 4)
        v = to_dense(SparsePoly.zero(4, 4, modulus=7), b)
        assert not v.values.any()

    def test_degree_mismatch(self):
        b = basis(3, 4)
        f = parse_poly(FERMAT4, modulus=5)
        with pytest.raises(DomainError):
            to_dense(f, b)

    def test_vector_equality(self):
        b = basis(2, 3)
        v1 = DenseVector(b, np.arange(len(b), dtype=np.uint64))
        v2 = DenseVector(b, np.arange(len(b), dtype=np.uint64))
        v3 = DenseVector(b, np.zeros(len(b), dtype=np.uint64))
        assert v1 == v2 and v1 != v3

    def test_length_validation(self):
        b = basis(2, 3)
        with pytest.raises(DomainError):
            DenseVector(b, np.zeros(len(b) + 1, dtype=np.uint64))


class TestNormalization:
    def test_merge_and_drop(self):
        terms = [((1, 0), 2), ((1, 0), 3), ((0, 1), 5)]
        f5 = SparsePoly.from_terms(2, terms, modulus=5)
        assert f5.is_zero  # both coefficients hit 5 = 0 mod 5
        f7 = SparsePoly.from_terms(2, terms, modulus=7)
        assert len(f7) == 2
        assert f7.coefficient((1, 0)) == 5
        assert f7.coefficient((0, 1)) == 5

    def test_words_sorted_is_lex(self):
        f = parse_poly("x1^2 + x1*x2 + x2^2", modulus=7)
        ts = [t for t, _ in f.terms()]
        assert ts == sorted(ts)

    def test_negative_exponent_rejected(self):
        with pytest.raises(DomainError):
            SparsePoly.from_terms(2, [((-1, 0), 1)], modulus=5)

    def test_zero_degree_defaults(self):
        assert SparsePoly.from_terms(2, [], modulus=5).degree == 0
        assert SparsePoly.from_terms(2, [], modulus=5, degree=4).degree == 4
        # dropped terms still inform the contextual degree
        cancel = SparsePoly.from_terms(2, [((3, 1), 5)], modulus=5)
        assert cancel.is_zero and cancel.degree == 4
        with pytest.raises(ValueError):
            parse_poly("x1+x2", modulus=5).words.sort()  # arrays are frozen

    def test_homogeneity_check(self):
        assert parse_poly(FERMAT4, modulus=5).is_homogeneous()
        assert not parse_poly("x1^2 + x2", modulus=5).is_homogeneous()
