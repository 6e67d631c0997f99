"""Bitpacked exponent tuples and graded monomial bases.

An exponent tuple (d_1, ..., d_n) is packed into one 64-bit word as n
fixed-width fields with the first variable in the most significant
field. Unsigned comparison of packed words is then exactly lexicographic
comparison of tuples, and adding two words whose per-field sums do not
overflow is exactly componentwise addition. All bulk operations work on
numpy uint64 arrays of packed words.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, total_ordering
from math import comb

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Packing:
    """Field layout for packed exponent tuples: nvars fields of field_width bits."""

    nvars: int
    field_width: int

    def __post_init__(self):
        if self.nvars < 1:
            raise DomainError(f"nvars must be >= 1, got {self.nvars}")
        if self.field_width < 1 or self.nvars * self.field_width > 64:
            raise DomainError(
                f"{self.nvars} fields of {self.field_width} bits do not fit in a word"
            )

    @classmethod
    def for_max_exponent(cls, nvars: int, max_exponent: int) -> "Packing":
        """Smallest packing whose fields hold values up to max_exponent."""
        width = max(1, int(max_exponent).bit_length())
        return cls(nvars, width)

    @property
    def mask(self) -> int:
        return (1 << self.field_width) - 1

    @property
    def shifts(self) -> tuple:
        w = self.field_width
        return tuple(w * (self.nvars - 1 - i) for i in range(self.nvars))

    def pack(self, exps) -> int:
        exps = tuple(exps)
        if len(exps) != self.nvars:
            raise DomainError(f"expected {self.nvars} exponents, got {len(exps)}")
        word = 0
        for e, s in zip(exps, self.shifts):
            if e < 0 or e > self.mask:
                raise DomainError(f"exponent {e} does not fit in {self.field_width} bits")
            word |= int(e) << s
        return word

    def unpack(self, word: int) -> tuple:
        word = int(word)
        return tuple((word >> s) & self.mask for s in self.shifts)

    # Bulk operations on numpy uint64 arrays of packed words.

    def pack_rows(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.uint64)
        if rows.ndim != 2 or rows.shape[1] != self.nvars:
            raise DomainError(f"expected shape (N, {self.nvars})")
        if rows.size and int(rows.max()) > self.mask:
            raise DomainError("exponent does not fit in field width")
        words = np.zeros(rows.shape[0], dtype=np.uint64)
        for i, s in enumerate(self.shifts):
            words |= rows[:, i] << np.uint64(s)
        return words

    def unpack_rows(self, words: np.ndarray) -> np.ndarray:
        words = np.asarray(words, dtype=np.uint64)
        out = np.empty((words.size, self.nvars), dtype=np.int64)
        mask = np.uint64(self.mask)
        for i, s in enumerate(self.shifts):
            out[:, i] = ((words >> np.uint64(s)) & mask).astype(np.int64)
        return out

    def field_mod(self, words: np.ndarray, p: int) -> np.ndarray:
        """Componentwise reduction of every field modulo p."""
        words = np.asarray(words, dtype=np.uint64)
        out = np.zeros_like(words)
        mask = np.uint64(self.mask)
        pp = np.uint64(p)
        for s in self.shifts:
            s = np.uint64(s)
            out |= (((words >> s) & mask) % pp) << s
        return out

    def field_div_exact(self, words: np.ndarray, p: int) -> np.ndarray:
        """Componentwise floor division of every field by p (caller checks exactness)."""
        words = np.asarray(words, dtype=np.uint64)
        out = np.zeros_like(words)
        mask = np.uint64(self.mask)
        pp = np.uint64(p)
        for s in self.shifts:
            s = np.uint64(s)
            out |= (((words >> s) & mask) // pp) << s
        return out

    def field_sum(self, words: np.ndarray) -> np.ndarray:
        """Total degree of each packed word."""
        words = np.asarray(words, dtype=np.uint64)
        out = np.zeros(words.shape, dtype=np.int64)
        mask = np.uint64(self.mask)
        for s in self.shifts:
            out += ((words >> np.uint64(s)) & mask).astype(np.int64)
        return out

    def all_ones_word(self, value: int) -> int:
        """The packed word with every field equal to value."""
        return self.pack((value,) * self.nvars)

    def repack_words(self, words: np.ndarray, target: "Packing") -> np.ndarray:
        """Rewrite packed words into another field layout with the same nvars."""
        if target.nvars != self.nvars:
            raise DomainError("repack requires identical nvars")
        if target.field_width == self.field_width:
            return np.asarray(words, dtype=np.uint64)
        return target.pack_rows(self.unpack_rows(np.asarray(words, dtype=np.uint64)))


@total_ordering
@dataclass(frozen=True)
class ExponentTuple:
    """A single packed exponent tuple. Comparison is lexicographic."""

    packing: Packing
    word: int

    @classmethod
    def of(cls, packing: Packing, exps) -> "ExponentTuple":
        return cls(packing, packing.pack(exps))

    @property
    def exponents(self) -> tuple:
        return self.packing.unpack(self.word)

    @property
    def total_degree(self) -> int:
        return sum(self.exponents)

    def _same_layout(self, other: "ExponentTuple"):
        if self.packing != other.packing:
            raise DomainError("mixed packings")

    def __add__(self, other: "ExponentTuple") -> "ExponentTuple":
        self._same_layout(other)
        exps = tuple(a + b for a, b in zip(self.exponents, other.exponents))
        return ExponentTuple.of(self.packing, exps)

    def __sub__(self, other: "ExponentTuple") -> "ExponentTuple":
        self._same_layout(other)
        exps = tuple(a - b for a, b in zip(self.exponents, other.exponents))
        if any(e < 0 for e in exps):
            raise DomainError("componentwise subtraction went negative")
        return ExponentTuple.of(self.packing, exps)

    def __lt__(self, other: "ExponentTuple") -> bool:
        self._same_layout(other)
        return self.word < other.word

    def mod(self, p: int) -> "ExponentTuple":
        return ExponentTuple.of(self.packing, tuple(e % p for e in self.exponents))

    def div_exact(self, p: int) -> "ExponentTuple":
        exps = self.exponents
        if any(e % p for e in exps):
            raise DomainError(f"exponents {exps} not divisible by {p}")
        return ExponentTuple.of(self.packing, tuple(e // p for e in exps))


@lru_cache(maxsize=None)
def wics(k: int, n: int) -> tuple:
    """All weak integer compositions of k into n parts, lex ascending.

    There are C(k + n - 1, n - 1) of them.
    """
    if k < 0 or n < 1:
        raise DomainError(f"wics needs k >= 0 and n >= 1, got k={k}, n={n}")
    if n == 1:
        return ((k,),)
    out = []
    for first in range(k + 1):
        for rest in wics(k - first, n - 1):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def wics_packed(k: int, n: int, packing: Packing) -> np.ndarray:
    """Packed words of wics(k, n), ascending (read-only array)."""
    rows = np.array(wics(k, n), dtype=np.uint64).reshape(-1, n)
    words = packing.pack_rows(rows)
    words.flags.writeable = False
    return words


class MonomialBasis:
    """All monomials of one total degree, sorted by packed word (lex order).

    Index lookup uses an eagerly built dict; bulk lookups use binary
    search on the sorted word array.
    """

    def __init__(self, degree: int, nvars: int, packing: Packing | None = None):
        if packing is None:
            packing = Packing.for_max_exponent(nvars, max(degree, 1))
        self.degree = degree
        self.nvars = nvars
        self.packing = packing
        self.words = wics_packed(degree, nvars, packing)
        expected = comb(degree + nvars - 1, nvars - 1)
        if len(self.words) != expected:
            raise DomainError(
                f"basis size {len(self.words)} != C({degree + nvars - 1},{nvars - 1})"
            )
        self._pos = {int(w): i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MonomialBasis)
            and self.degree == other.degree
            and self.nvars == other.nvars
            and self.packing == other.packing
        )

    def __hash__(self):
        return hash((self.degree, self.nvars, self.packing))

    def __repr__(self):
        return f"MonomialBasis(degree={self.degree}, nvars={self.nvars}, size={len(self)})"

    def word_at(self, i: int) -> int:
        return int(self.words[i])

    def tuple_at(self, i: int) -> tuple:
        return self.packing.unpack(self.words[i])

    def index_of(self, item) -> int:
        if isinstance(item, ExponentTuple):
            word = self.packing.pack(item.exponents)
        elif isinstance(item, tuple):
            word = self.packing.pack(item)
        else:
            word = int(item)
        try:
            return self._pos[word]
        except KeyError:
            raise DomainError(
                f"monomial {self.packing.unpack(word)} not in basis of degree {self.degree}"
            ) from None

    def indices_of(self, words: np.ndarray) -> np.ndarray:
        """Positions of many packed words at once (binary search)."""
        words = np.asarray(words, dtype=np.uint64)
        idx = np.searchsorted(self.words, words)
        bad = (idx >= len(self.words)) | (self.words[np.minimum(idx, len(self.words) - 1)] != words)
        if bad.any():
            word = int(words[np.argmax(bad)])
            raise DomainError(
                f"monomial {self.packing.unpack(word)} not in basis of degree {self.degree}"
            )
        return idx


def basis(degree: int, nvars: int, packing: Packing | None = None) -> MonomialBasis:
    """The lex-sorted basis of monomials with the given total degree."""
    return MonomialBasis(degree, nvars, packing)


def match_complement(x: ExponentTuple, p: int) -> ExponentTuple:
    """The unique tuple y with x + y = (p-1, ..., p-1), for fields below p."""
    exps = x.exponents
    if any(e >= p for e in exps):
        raise DomainError(f"complement needs every exponent below p={p}, got {exps}")
    return ExponentTuple.of(x.packing, tuple(p - 1 - e for e in exps))


def reduce_mod_p(x: ExponentTuple, p: int) -> ExponentTuple:
    """Componentwise reduction of the exponents modulo p."""
    return x.mod(p)
