"""Matrix of the multiply-then-split operator g -> u(delta * g).

Three constructions of the same matrix: a per-column pair scan (TRIV),
a sorted-residue sweep (MERGE), and direct enumeration of matching
monomials per delta term (WICS). They differ only in cost; every
builder returns identical entries.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .monomials import ExponentTuple, MonomialBasis, Packing, wics, wics_packed
from .polyring import SparsePoly

# Pair-expansion chunk for the vectorized outer products inside the
# builders; keeps peak index-array memory around a few hundred MB even
# for the p=13 surface matrices.
_EMIT_CHUNK = 1 << 21


class _ZeroMap:
    """Sentinel for parameter sets where u annihilates every product."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ZERO_MAP"


ZERO_MAP = _ZeroMap()


def target_degree(d: int, D: int, n: int, p: int):
    """Degree of u(delta * g) for deg g = d, deg delta = D, or None.

    u keeps a term only when every exponent is p-1 mod p, so the image
    degree is (d + D - n(p-1)) / p; when that is not a nonnegative
    integer no term of any product can survive.
    """
    num = d + D - n * (p - 1)
    if num < 0 or num % p != 0:
        return None
    return num // p


def generate_matching(delta, p: int, d: int, n: int):
    """All degree-d exponent tuples X with X + delta = (p-1, ..) mod p.

    The matches are exactly m + p*w where m is the fieldwise complement
    of delta mod p and w runs over the weak compositions of
    (d - sum(m))/p into n parts; the result is empty when that division
    fails. Count is at most C(floor(d/p) + n - 1, n - 1).
    """
    if isinstance(delta, ExponentTuple):
        exps = delta.exponents
    else:
        exps = tuple(int(e) for e in delta)
    if len(exps) != n:
        raise DomainError(f"delta has {len(exps)} fields, expected n={n}")
    if any(e < 0 for e in exps):
        raise DomainError(f"delta fields must be nonnegative, got {exps}")
    comp = tuple(p - 1 - (e % p) for e in exps)
    rem = d - sum(comp)
    if rem < 0 or rem % p != 0:
        return ()
    packing = Packing.for_max_exponent(n, max(d + p - 1, 1))
    return tuple(
        ExponentTuple.of(packing, tuple(c + p * wi for c, wi in zip(comp, w)))
        for w in wics(rem // p, n)
    )


@dataclass(eq=False)
class MtsMatrix:
    """Dense matrix over F_p of g -> u(delta * g) on monomial bases.

    Column j holds the coefficient vector of u(delta * m_j) over the
    target basis. Entries are row-major uint16 residues below p.
    """

    entries: np.ndarray
    source_basis: MonomialBasis
    target_basis: MonomialBasis
    p: int

    def __post_init__(self):
        self.entries = np.ascontiguousarray(self.entries, dtype=np.uint16)
        expected = (len(self.target_basis), len(self.source_basis))
        if self.entries.shape != expected:
            raise DomainError(
                f"entry block shape {self.entries.shape} does not match bases {expected}"
            )
        if self.p < 2:
            raise DomainError(f"modulus must be at least 2, got {self.p}")
        if self.entries.size and int(self.entries.max()) >= self.p:
            raise DomainError("matrix entries must be reduced mod p")
        if self.source_basis.nvars != self.target_basis.nvars:
            raise DomainError("source and target bases disagree on nvars")
        self.entries.flags.writeable = False

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __eq__(self, other):
        if not isinstance(other, MtsMatrix):
            return NotImplemented
        return (
            self.p == other.p
            and self.source_basis.degree == other.source_basis.degree
            and self.target_basis.degree == other.target_basis.degree
            and self.source_basis.nvars == other.source_basis.nvars
            and np.array_equal(self.entries, other.entries)
        )

    def __repr__(self):
        return f"MtsMatrix({self.rows}x{self.cols} over F_{self.p})"


@dataclass
class _Prep:
    n: int
    dprime: int
    packing: Packing
    source: MonomialBasis
    target: MonomialBasis
    words: np.ndarray
    coeffs: np.ndarray
    cap: np.uint64


def _prepare(delta: SparsePoly, d: int, p: int):
    """Shared validation and basis setup; None signals the zero map."""
    if delta.modulus != p:
        raise DomainError(f"delta has modulus {delta.modulus}, expected {p}")
    if not delta.is_homogeneous():
        raise DomainError("delta must be homogeneous")
    if d < 0:
        raise DomainError(f"source degree must be nonnegative, got {d}")
    n = delta.nvars
    D = delta.degree
    dprime = target_degree(d, D, n, p)
    if dprime is None:
        return None
    # One packing wide enough for delta words, both bases, and every
    # intermediate sum delta + m of degree D + d.
    packing = Packing.for_max_exponent(n, max(D + d, 1))
    source = MonomialBasis(d, n, packing)
    target = MonomialBasis(dprime, n, packing)
    words = delta.packing.repack_words(delta.words, packing)
    cap = np.uint64(packing.all_ones_word(p - 1))
    return _Prep(n, dprime, packing, source, target, words, delta.coeffs, cap)


def _finish(entries: np.ndarray, prep: _Prep, p: int) -> MtsMatrix:
    entries %= np.uint16(p)
    return MtsMatrix(entries, prep.source, prep.target, p)


def mts_triv(delta: SparsePoly, d: int, p: int):
    """Pair scan: test every (delta term, basis monomial) pair directly."""
    prep = _prepare(delta, d, p)
    if prep is None:
        return ZERO_MAP
    entries = np.zeros((len(prep.target), len(prep.source)), dtype=np.uint16)
    if delta.is_zero:
        return _finish(entries, prep, p)
    pk = prep.packing
    res = pk.field_mod(prep.words, p)
    quot = pk.field_div_exact(prep.words - res, p)
    bres = pk.field_mod(prep.source.words, p)
    wpart = pk.field_div_exact(prep.source.words - bres, p)
    want = prep.cap - bres
    coeffs16 = prep.coeffs.astype(np.uint16)
    for j in range(len(prep.source)):
        match = np.nonzero(res == want[j])[0]
        if match.size == 0:
            continue
        rows = prep.target.indices_of(quot[match] + wpart[j])
        np.add.at(entries, (rows, j), coeffs16[match])
    return _finish(entries, prep, p)


def mts_merge(delta: SparsePoly, d: int, p: int):
    """Sorted sweep: walk delta residues against basis residue complements.

    Both sides are sorted through permutations (the term arrays stay
    put); equal-residue runs on either side pair up as blocks, and each
    block emits its outer product of entries.
    """
    prep = _prepare(delta, d, p)
    if prep is None:
        return ZERO_MAP
    entries = np.zeros((len(prep.target), len(prep.source)), dtype=np.uint16)
    if delta.is_zero:
        return _finish(entries, prep, p)
    pk = prep.packing
    res = pk.field_mod(prep.words, p)
    quot = pk.field_div_exact(prep.words - res, p)
    bres = pk.field_mod(prep.source.words, p)
    wpart = pk.field_div_exact(prep.source.words - bres, p)
    coeffs16 = prep.coeffs.astype(np.uint16)

    lorder = np.argsort(res, kind="stable")
    lvals, lcounts = np.unique(res, return_counts=True)
    lstarts = np.concatenate(([0], np.cumsum(lcounts)))
    rorder = np.argsort(bres, kind="stable")
    rvals, rcounts = np.unique(bres, return_counts=True)
    rstarts = np.concatenate(([0], np.cumsum(rcounts)))

    # Residues match when lval + rval = cap; cap - rvals is strictly
    # decreasing, so walk lvals forward and rvals backward.
    i, j = 0, len(rvals) - 1
    while i < len(lvals) and j >= 0:
        want = prep.cap - rvals[j]
        if lvals[i] == want:
            dgrp = lorder[lstarts[i]:lstarts[i + 1]]
            cgrp = rorder[rstarts[j]:rstarts[j + 1]]
            step = max(1, _EMIT_CHUNK // max(1, cgrp.size))
            for k in range(0, dgrp.size, step):
                blk = dgrp[k:k + step]
                rowwords = quot[blk][:, None] + wpart[cgrp][None, :]
                rows = prep.target.indices_of(rowwords.ravel())
                cols = np.broadcast_to(cgrp[None, :], (blk.size, cgrp.size)).ravel()
                vals = np.repeat(coeffs16[blk], cgrp.size)
                np.add.at(entries, (rows, cols), vals)
            i += 1
            j -= 1
        elif lvals[i] < want:
            i += 1
        else:
            j -= 1
    return _finish(entries, prep, p)


def mts_wics(delta: SparsePoly, d: int, p: int):
    """Direct enumeration: generate the matches of each delta term.

    Terms are grouped by the composition size k = (d - sum(m))/p so one
    wics table serves the whole group; cost is O(l_delta * |wics|).
    """
    prep = _prepare(delta, d, p)
    if prep is None:
        return ZERO_MAP
    entries = np.zeros((len(prep.target), len(prep.source)), dtype=np.uint16)
    if delta.is_zero:
        return _finish(entries, prep, p)
    pk = prep.packing
    res = pk.field_mod(prep.words, p)
    quot = pk.field_div_exact(prep.words - res, p)
    comp = prep.cap - res
    rem = d - pk.field_sum(comp)
    ok = (rem >= 0) & (rem % p == 0)
    coeffs16 = prep.coeffs.astype(np.uint16)
    for k in np.unique(rem[ok] // p) if ok.any() else ():
        grp = np.nonzero(ok & (rem == k * p))[0]
        w_arr = wics_packed(int(k), prep.n, pk)
        scaled = w_arr * np.uint64(p)
        step = max(1, _EMIT_CHUNK // max(1, w_arr.size))
        for s in range(0, grp.size, step):
            blk = grp[s:s + step]
            colwords = comp[blk][:, None] + scaled[None, :]
            rowwords = quot[blk][:, None] + w_arr[None, :]
            cols = prep.source.indices_of(colwords.ravel())
            rows = prep.target.indices_of(rowwords.ravel())
            vals = np.repeat(coeffs16[blk], w_arr.size)
            np.add.at(entries, (rows, cols), vals)
    return _finish(entries, prep, p)


_BUILDERS = {"triv": mts_triv, "merge": mts_merge, "wics": mts_wics}


def build_mts(delta: SparsePoly, d: int, p: int, algorithm: str = "wics"):
    """Dispatch to one of the three constructions by name."""
    try:
        builder = _BUILDERS[algorithm]
    except KeyError:
        raise DomainError(
            f"unknown algorithm {algorithm!r}, expected one of {sorted(_BUILDERS)}"
        ) from None
    return builder(delta, d, p)


_MAGIC = b"QFSMTX01"


def matrix_to_text(m: MtsMatrix) -> str:
    """Header line "rows cols p", then one text row per matrix row."""
    lines = [f"{m.rows} {m.cols} {m.p}"]
    for row in m.entries:
        lines.append(" ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def _degree_for_size(size: int, n: int, what: str) -> int:
    if n < 2:
        raise DomainError("degree inference needs at least 2 variables")
    deg = 0
    while True:
        count = math.comb(deg + n - 1, n - 1)
        if count == size:
            return deg
        if count > size:
            raise DomainError(f"no degree-{n} basis has {size} {what}")
        deg += 1


def matrix_from_text(text: str, n: int, d: int | None = None, dprime: int | None = None) -> MtsMatrix:
    """Rebuild a matrix from its text form.

    The header carries no variable count, so n comes from the caller;
    the degrees are inferred from the dimensions unless given.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DomainError("empty matrix text")
    head = lines[0].split()
    if len(head) != 3:
        raise DomainError(f"matrix header needs 'rows cols p', got {lines[0]!r}")
    rows, cols, p = (int(v) for v in head)
    if len(lines) - 1 != rows:
        raise DomainError(f"expected {rows} entry rows, got {len(lines) - 1}")
    if d is None:
        d = _degree_for_size(cols, n, "columns")
    if dprime is None:
        dprime = _degree_for_size(rows, n, "rows")
    entries = np.zeros((rows, cols), dtype=np.uint16)
    for i, line in enumerate(lines[1:]):
        vals = line.split()
        if len(vals) != cols:
            raise DomainError(f"row {i} has {len(vals)} entries, expected {cols}")
        entries[i] = [int(v) for v in vals]
    return MtsMatrix(entries, MonomialBasis(d, n), MonomialBasis(dprime, n), p)


def matrix_to_bytes(m: MtsMatrix) -> bytes:
    """Compact binary form: magic, six uint32 header words, uint16 entries.

    Header order is rows, cols, p, n, d, dprime, all little-endian; the
    entry block is row-major.
    """
    head = struct.pack(
        "<6I",
        m.rows,
        m.cols,
        m.p,
        m.source_basis.nvars,
        m.source_basis.degree,
        m.target_basis.degree,
    )
    return _MAGIC + head + m.entries.astype("<u2").tobytes()


def matrix_from_bytes(data: bytes) -> MtsMatrix:
    if len(data) < len(_MAGIC) + 24:
        raise DomainError("binary matrix data is truncated")
    if data[: len(_MAGIC)] != _MAGIC:
        raise DomainError("bad magic; not a matrix export")
    rows, cols, p, n, d, dprime = struct.unpack_from("<6I", data, len(_MAGIC))
    body = data[len(_MAGIC) + 24:]
    if len(body) != 2 * rows * cols:
        raise DomainError(
            f"entry block holds {len(body)} bytes, expected {2 * rows * cols}"
        )
    entries = np.frombuffer(body, dtype="<u2").astype(np.uint16).reshape(rows, cols)
    return MtsMatrix(entries, MonomialBasis(d, n), MonomialBasis(dprime, n), p)
