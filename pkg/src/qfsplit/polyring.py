"""Sparse multivariate polynomials over Z or Z/m with bitpacked exponents.

Terms are stored as a strictly increasing uint64 array of packed
exponent words plus a parallel coefficient array: uint64 when a modulus
is set, Python ints (object dtype) for exact integer polynomials. The
word order is lex order on exponent tuples, so merging, lookups, and
splitting are all array operations.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InternalInvariantError, ParseError
from .monomials import MonomialBasis, Packing

# pair-product chunk for sparse multiplication, bounds peak memory
_MUL_CHUNK = 1 << 23


def _as_coeff_array(coeffs, modulus):
    if modulus is None:
        arr = np.empty(len(coeffs), dtype=object)
        for i, c in enumerate(coeffs):
            arr[i] = int(c)
        return arr
    return np.asarray(coeffs, dtype=np.uint64)


class SparsePoly:
    """Normalized sparse polynomial: sorted unique words, no zero coefficients."""

    __slots__ = ("nvars", "packing", "words", "coeffs", "modulus", "degree")

    def __init__(self, nvars, packing, words, coeffs, modulus, degree):
        self.nvars = nvars
        self.packing = packing
        self.words = words
        self.coeffs = coeffs
        self.modulus = modulus
        self.degree = degree

    @classmethod
    def _make(cls, nvars, packing, words, coeffs, modulus, degree=None):
        """Trusted constructor: words must already be sorted and unique."""
        words = np.asarray(words, dtype=np.uint64)
        coeffs = _as_coeff_array(coeffs, modulus)
        if words.size > 1 and not (words[1:] > words[:-1]).all():
            raise InternalInvariantError("term words not strictly increasing")
        if degree is None:
            if words.size == 0:
                raise DomainError("zero polynomial needs an explicit degree")
            degree = int(packing.field_sum(words).max())
        words.flags.writeable = False
        coeffs.flags.writeable = False
        return cls(nvars, packing, words, coeffs, modulus, degree)

    @classmethod
    def from_terms(cls, nvars, terms, modulus=None, packing=None, degree=None):
        """Build from (exponent tuple, coefficient) pairs; merges and normalizes."""
        if isinstance(terms, dict):
            terms = terms.items()
        terms = [(tuple(e), int(c)) for e, c in terms]
        for exps, _ in terms:
            if len(exps) != nvars:
                raise DomainError(f"expected {nvars} exponents, got {exps}")
            if any(e < 0 for e in exps):
                raise DomainError(f"negative exponent in {exps}")
        if packing is None:
            top = max((max(e) for e, _ in terms), default=0)
            packing = Packing.for_max_exponent(nvars, max(top, 1))
        acc = {}
        for exps, c in terms:
            w = packing.pack(exps)
            acc[w] = acc.get(w, 0) + c
        if modulus is not None:
            acc = {w: c % modulus for w, c in acc.items()}
        items = sorted((w, c) for w, c in acc.items() if c != 0)
        words = np.array([w for w, _ in items], dtype=np.uint64)
        coeffs = [c for _, c in items]
        if items:
            degree = None  # recomputed from the surviving terms
        elif degree is None:
            degree = max((sum(e) for e, _ in terms), default=0)
        return cls._make(nvars, packing, words, coeffs, modulus, degree)

    @classmethod
    def zero(cls, nvars, degree, modulus=None, packing=None):
        if packing is None:
            packing = Packing.for_max_exponent(nvars, max(degree, 1))
        return cls._make(nvars, packing, np.empty(0, np.uint64), [], modulus, degree)

    # introspection

    def __len__(self):
        return int(self.words.size)

    @property
    def is_zero(self):
        return self.words.size == 0

    def is_homogeneous(self):
        if self.is_zero:
            return True
        sums = self.packing.field_sum(self.words)
        return bool((sums == sums[0]).all())

    def coefficient(self, key) -> int:
        if isinstance(key, tuple):
            try:
                word = self.packing.pack(key)
            except DomainError:
                return 0
        else:
            word = int(key)
        i = int(np.searchsorted(self.words, np.uint64(word)))
        if i < len(self.words) and int(self.words[i]) == word:
            return int(self.coeffs[i])
        return 0

    def terms(self):
        for w, c in zip(self.words, self.coeffs):
            yield self.packing.unpack(w), int(c)

    def __eq__(self, other):
        return (
            isinstance(other, SparsePoly)
            and self.nvars == other.nvars
            and self.modulus == other.modulus
            and len(self) == len(other)
            and all(
                ta == tb and ca == cb
                for (ta, ca), (tb, cb) in zip(self.terms(), other.terms())
            )
        )

    def __repr__(self):
        head = poly_to_text(self) if len(self) <= 6 else f"{len(self)} terms"
        return f"SparsePoly({head}, deg={self.degree}, mod={self.modulus})"

    def repack(self, packing: Packing) -> "SparsePoly":
        if packing == self.packing:
            return self
        words = self.packing.repack_words(self.words, packing)
        return SparsePoly._make(
            self.nvars, packing, words, self.coeffs.copy(), self.modulus, self.degree
        )


@dataclass
class DenseVector:
    """Coefficient vector of a polynomial over a fixed monomial basis."""

    basis: MonomialBasis
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint64)
        if self.values.shape != (len(self.basis),):
            raise DomainError(
                f"vector length {self.values.shape} does not match basis size {len(self.basis)}"
            )

    def __eq__(self, other):
        return (
            isinstance(other, DenseVector)
            and self.basis == other.basis
            and np.array_equal(self.values, other.values)
        )


# arithmetic


def _mul_packing(a: SparsePoly, b: SparsePoly) -> Packing:
    need = Packing.for_max_exponent(a.nvars, max(a.degree + b.degree, 1))
    width = max(need.field_width, a.packing.field_width, b.packing.field_width)
    return Packing(a.nvars, width)


def _check_pair(a: SparsePoly, b: SparsePoly):
    if a.nvars != b.nvars:
        raise DomainError(f"nvars mismatch: {a.nvars} vs {b.nvars}")
    if a.modulus != b.modulus:
        raise DomainError(f"modulus mismatch: {a.modulus} vs {b.modulus}")


def _mul_mod(a: SparsePoly, b: SparsePoly) -> SparsePoly:
    """Product over Z/p, chunked so pair expansion stays in bounded memory."""
    _check_pair(a, b)
    p = a.modulus
    if p is None:
        raise DomainError("_mul_mod needs a modulus")
    packing = _mul_packing(a, b)
    degree = a.degree + b.degree
    if a.is_zero or b.is_zero:
        return SparsePoly.zero(a.nvars, degree, p, packing)
    if len(a) < len(b):
        a, b = b, a
    aw = a.packing.repack_words(a.words, packing)
    bw = b.packing.repack_words(b.words, packing)
    ac, bc = a.coeffs, b.coeffs
    block = max(1, _MUL_CHUNK // max(len(b), 1))
    parts_w, parts_c = [], []
    for i0 in range(0, len(a), block):
        i1 = min(i0 + block, len(a))
        w = (aw[i0:i1, None] + bw[None, :]).ravel()
        c = (ac[i0:i1, None] * bc[None, :]).ravel()
        uw, inv = np.unique(w, return_inverse=True)
        uc = np.zeros(len(uw), dtype=np.uint64)
        np.add.at(uc, inv, c)
        parts_w.append(uw)
        parts_c.append(uc % np.uint64(p))
    words = np.concatenate(parts_w)
    coeffs = np.concatenate(parts_c)
    uw, inv = np.unique(words, return_inverse=True)
    uc = np.zeros(len(uw), dtype=np.uint64)
    np.add.at(uc, inv, coeffs)
    uc %= np.uint64(p)
    keep = uc != 0
    return SparsePoly._make(a.nvars, packing, uw[keep], uc[keep], p, degree)


def schoolbook_mul(a: SparsePoly, b: SparsePoly) -> SparsePoly:
    """Exact product over Z by direct pair expansion. The reference multiplier."""
    _check_pair(a, b)
    if a.modulus is not None:
        raise DomainError("schoolbook_mul works over Z; lift first")
    packing = _mul_packing(a, b)
    degree = a.degree + b.degree
    aw = a.packing.repack_words(a.words, packing)
    bw = b.packing.repack_words(b.words, packing)
    acc = {}
    for wa, ca in zip(aw.tolist(), a.coeffs.tolist()):
        for wb, cb in zip(bw.tolist(), b.coeffs.tolist()):
            w = wa + wb
            acc[w] = acc.get(w, 0) + ca * cb
    items = sorted((w, c) for w, c in acc.items() if c != 0)
    return SparsePoly._make(
        a.nvars,
        packing,
        np.array([w for w, _ in items], dtype=np.uint64),
        [c for _, c in items],
        None,
        degree,
    )


def power_mod_p(f: SparsePoly, k: int) -> SparsePoly:
    """f**k over Z/p by repeated squaring."""
    if f.modulus is None:
        raise DomainError("power_mod_p needs a modulus")
    if k < 0:
        raise DomainError(f"negative power {k}")
    p = f.modulus
    if k == 0:
        one = SparsePoly.from_terms(f.nvars, [((0,) * f.nvars, 1)], modulus=p)
        return one
    result = None
    square = f
    e = k
    while e:
        if e & 1:
            result = square if result is None else _mul_mod(result, square)
        e >>= 1
        if e:
            square = _mul_mod(square, square)
    return result


def lift_to_integers(f: SparsePoly) -> SparsePoly:
    """Same terms with coefficients reinterpreted as integers in [0, p)."""
    if f.modulus is None:
        raise DomainError("already over Z")
    return SparsePoly._make(
        f.nvars, f.packing, f.words.copy(), [int(c) for c in f.coeffs], None, f.degree
    )


def reduce_mod(f: SparsePoly, p: int) -> SparsePoly:
    """Reduction of an integer polynomial mod p."""
    if f.modulus is not None:
        raise DomainError("reduce_mod expects an integer polynomial")
    coeffs = np.array([int(c) % p for c in f.coeffs], dtype=np.uint64)
    keep = coeffs != 0
    return SparsePoly._make(
        f.nvars, f.packing, f.words[keep], coeffs[keep], p, f.degree
    )


def split_u(f: SparsePoly) -> SparsePoly:
    """Splitting operator: keep terms with all exponents = p-1 mod p, then
    subtract (p-1, ..., p-1) and divide the exponents by p."""
    p = f.modulus
    if p is None:
        raise DomainError("split_u needs a modulus")
    n = f.nvars
    cap = np.uint64(f.packing.all_ones_word(p - 1))
    residues = f.packing.field_mod(f.words, p)
    keep = residues == cap
    words = f.packing.field_div_exact(f.words[keep] - cap, p)
    coeffs = f.coeffs[keep]
    order = np.argsort(words, kind="stable")
    words, coeffs = words[order], coeffs[order]
    if words.size:
        degree = int(f.packing.field_sum(words).max())
    else:
        degree = max((f.degree - n * (p - 1)) // p, 0)
    return SparsePoly._make(n, f.packing, words, coeffs, p, degree)


def fedder_survives(g: SparsePoly) -> bool:
    """Whether the monomial (x_1 ... x_n)**(p-1) has nonzero coefficient in g.

    For homogeneous g of degree n(p-1) this is the single-coefficient
    splitting test.
    """
    p = g.modulus
    if p is None:
        raise DomainError("fedder_survives needs a modulus")
    if g.is_zero:
        return False
    n = g.nvars
    if g.degree != n * (p - 1):
        raise DomainError(
            f"degree {g.degree} polynomial, expected n(p-1) = {n * (p - 1)}"
        )
    return g.coefficient((p - 1,) * n) != 0


def delta1(f: SparsePoly, backend: str | None = None) -> SparsePoly:
    """First Witt carry of f: ((lift f)**p - sum of term p-th powers) / p, mod p.

    The powering runs either through the multimodular NTT pipeline or
    through the schoolbook multiplier (the oracle backend); by default
    tiny shapes take the schoolbook path and everything else the NTT.
    The division by p is checked coefficient by coefficient and aborts
    if inexact.
    """
    p = f.modulus
    if p is None:
        raise DomainError("delta1 needs a polynomial over Z/p")
    n, h = f.nvars, f.degree
    out_packing = Packing.for_max_exponent(n, (p + 1) * max(h, 1))
    out_degree = p * h
    if f.is_zero:
        return SparsePoly.zero(n, out_degree, p, out_packing)
    if backend is None:
        # term count of the power is about C(len+p-1, p); below a few
        # thousand the dict multiplier beats the transform setup
        backend = "schoolbook" if math.comb(len(f) + p - 1, p) <= 4000 else "ntt"
    ftil = lift_to_integers(f).repack(out_packing)

    if backend == "schoolbook":
        power = ftil
        for _ in range(p - 1):
            power = schoolbook_mul(power, ftil)
        acc = {int(w): int(c) for w, c in zip(power.words, power.coeffs)}
        for w, c in zip(ftil.words.tolist(), ftil.coeffs.tolist()):
            acc[w * p] = acc.get(w * p, 0) - c ** p
        words, coeffs = [], []
        for w in sorted(acc):
            c = acc[w]
            if c % p:
                raise InternalInvariantError(
                    f"carry coefficient {c} not divisible by p={p}"
                )
            r = (c // p) % p
            if r:
                words.append(w)
                coeffs.append(r)
        return SparsePoly._make(
            n, out_packing, np.array(words, dtype=np.uint64), coeffs, p, out_degree
        )

    if backend != "ntt":
        raise DomainError(f"unknown delta1 backend {backend!r}")
    from .nttpower import power_mod_small

    psq = p * p
    power = power_mod_small(ftil, p, psq, packing=out_packing)
    # merge in the term corrections mod p**2
    corr_words = ftil.words * np.uint64(p)
    corr_coeffs = np.array(
        [psq - pow(int(c), p, psq) for c in ftil.coeffs], dtype=np.uint64
    )
    allw = np.concatenate([power.words, corr_words])
    allc = np.concatenate([power.coeffs, corr_coeffs])
    uw, inv = np.unique(allw, return_inverse=True)
    uc = np.zeros(len(uw), dtype=np.uint64)
    np.add.at(uc, inv, allc)
    uc %= np.uint64(psq)
    if (uc % np.uint64(p) != 0).any():
        raise InternalInvariantError(f"carry coefficients not divisible by p={p}")
    uc = (uc // np.uint64(p)) % np.uint64(p)
    keep = uc != 0
    return SparsePoly._make(n, out_packing, uw[keep], uc[keep], p, out_degree)


def to_dense(f: SparsePoly, basis: MonomialBasis) -> DenseVector:
    """Coefficient vector of f over the basis (f's monomials must all lie in it)."""
    if f.modulus is None:
        raise DomainError("to_dense needs a modulus")
    if f.nvars != basis.nvars:
        raise DomainError("nvars mismatch with basis")
    values = np.zeros(len(basis), dtype=np.uint64)
    if not f.is_zero:
        if f.degree != basis.degree:
            raise DomainError(
                f"degree {f.degree} polynomial over degree {basis.degree} basis"
            )
        words = f.packing.repack_words(f.words, basis.packing)
        values[basis.indices_of(words)] = f.coeffs
    return DenseVector(basis, values)


def from_dense(vec: DenseVector, modulus: int, packing: Packing | None = None) -> SparsePoly:
    """Polynomial with the vector's entries as coefficients over its basis."""
    b = vec.basis
    nz = np.nonzero(vec.values)[0]
    words = b.words[nz]
    if packing is not None:
        words = b.packing.repack_words(words, packing)
    else:
        packing = b.packing
    return SparsePoly._make(
        b.nvars, packing, words, vec.values[nz] % np.uint64(modulus), modulus, b.degree
    )


# text formats


_TOKEN = re.compile(r"(?P<ws>\s+)|(?P<int>\d+)|(?P<var>x\d+)|(?P<op>[*+^])|(?P<bad>.)")


def parse_poly_text(text: str, nvars: int | None = None):
    """Parse 'c*x1^a*x2^b + ...' into (nvars, [(exponent tuple, coeff)]).

    Coefficients are optional nonnegative integers, '*' separates factors,
    '^' introduces exponents. Whitespace is ignored. Raises ParseError
    with a character position on malformed input.
    """
    tokens = []
    for m in _TOKEN.finditer(text):
        if m.lastgroup == "ws":
            continue
        if m.lastgroup == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", m.start())
        tokens.append((m.lastgroup, m.group(), m.start()))
    if not tokens:
        raise ParseError("empty polynomial", 0)

    terms = []
    i = 0
    top = 0

    def term_error(msg, pos):
        raise ParseError(msg, pos)

    while i < len(tokens):
        coeff = 1
        exps: dict = {}
        saw_factor = False
        while True:
            if i >= len(tokens):
                term_error("term ended unexpectedly", len(text))
            kind, val, pos = tokens[i]
            if kind == "int":
                coeff *= int(val)
                i += 1
            elif kind == "var":
                idx = int(val[1:])
                if idx < 1:
                    term_error(f"bad variable {val}", pos)
                e = 1
                i += 1
                if i < len(tokens) and tokens[i][0] == "op" and tokens[i][1] == "^":
                    i += 1
                    if i >= len(tokens) or tokens[i][0] != "int":
                        term_error("expected integer exponent after '^'",
                                   tokens[i - 1][2] + 1)
                    e = int(tokens[i][1])
                    i += 1
                exps[idx] = exps.get(idx, 0) + e
                top = max(top, idx)
            else:
                term_error(f"expected coefficient or variable, got {val!r}", pos)
            saw_factor = True
            if i >= len(tokens):
                break
            kind, val, pos = tokens[i]
            if kind == "op" and val == "*":
                i += 1
                continue
            if kind == "op" and val == "+":
                i += 1
                if i >= len(tokens):
                    term_error("trailing '+'", pos)
                break
            term_error(f"expected '*' or '+', got {val!r}", pos)
        if not saw_factor:
            term_error("empty term", 0)
        terms.append((exps, coeff))

    if nvars is None:
        nvars = max(top, 1)
    elif top > nvars:
        raise ParseError(f"variable x{top} exceeds nvars={nvars}", 0)
    out = []
    for exps, coeff in terms:
        vec = tuple(exps.get(j + 1, 0) for j in range(nvars))
        out.append((vec, coeff))
    return nvars, out


def parse_poly_compact(text: str, nvars: int | None = None):
    """Parse the machine format: one 'c:a,b,...' term per line or ';' field."""
    out = []
    seen_n = nvars
    pieces = [piece for chunk in text.splitlines() for piece in chunk.split(";")]
    pos = 0
    for piece in pieces:
        line = piece.strip()
        pos += len(piece) + 1
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise ParseError(f"expected 'c:a,b,...', got {line!r}", pos - len(piece))
        cpart, epart = line.split(":", 1)
        try:
            coeff = int(cpart)
            exps = tuple(int(v) for v in epart.split(","))
        except ValueError:
            raise ParseError(f"malformed term {line!r}", pos - len(piece)) from None
        if coeff < 0 or any(e < 0 for e in exps):
            raise ParseError(f"negative value in {line!r}", pos - len(piece))
        if seen_n is None:
            seen_n = len(exps)
        elif len(exps) != seen_n:
            raise ParseError(
                f"term has {len(exps)} exponents, expected {seen_n}", pos - len(piece)
            )
        out.append((exps, coeff))
    if seen_n is None:
        raise ParseError("no terms found", 0)
    return seen_n, out


def parse_poly(text: str, nvars: int | None = None, modulus: int | None = None,
                packing: Packing | None = None) -> SparsePoly:
    """Parse either text format into a polynomial (auto-detected)."""
    if ":" in text:
        n, terms = parse_poly_compact(text, nvars)
    else:
        n, terms = parse_poly_text(text, nvars)
    return SparsePoly.from_terms(n, terms, modulus=modulus, packing=packing)


def poly_to_text(f: SparsePoly) -> str:
    """Render with leading terms first, in the 'c*x1^a*x2^b' format."""
    if f.is_zero:
        return "0"
    parts = []
    for word in f.words[::-1]:
        exps = f.packing.unpack(word)
        c = f.coefficient(int(word))
        factors = []
        for i, e in enumerate(exps):
            if e == 1:
                factors.append(f"x{i + 1}")
            elif e > 1:
                factors.append(f"x{i + 1}^{e}")
        if not factors:
            parts.append(str(c))
        elif c == 1:
            parts.append("*".join(factors))
        else:
            parts.append(f"{c}*" + "*".join(factors))
    return " + ".join(parts)


def poly_to_compact(f: SparsePoly) -> str:
    """Render in the machine format, one 'c:a,b,...' term per line."""
    lines = []
    for exps, c in f.terms():
        lines.append(f"{c}:" + ",".join(str(e) for e in exps))
    return "\n".join(lines)
